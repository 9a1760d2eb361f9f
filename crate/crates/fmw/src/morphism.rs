//! Homomorphism, embedding, and isomorphism verification; complete
//! backtracking search for the least morphism of a kind; the two diagram
//! constructions (embedding from a full diagram, quotient presentation from
//! a negative diagram); and homomorphic images.
//!
//! Embeddings here are strong: injective homomorphisms that also reflect
//! relations, which is what the diagram method produces.

use std::fmt;
use std::sync::Arc;

use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::structure::{tuples, Element, FiniteStructure};
use crate::syntax::{FuncId, RelId, Signature, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MorphismKind {
    Hom,
    Embedding,
    Iso,
}

impl fmt::Display for MorphismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismKind::Hom => write!(f, "hom"),
            MorphismKind::Embedding => write!(f, "embedding"),
            MorphismKind::Iso => write!(f, "iso"),
        }
    }
}

/// A concrete violated morphism condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MorphismViolation {
    WrongLength { expected: usize, got: usize },
    OutOfRange { source_elem: Element, value: Element },
    SignatureMismatch,
    FunctionNotPreserved { function: String, args: Vec<Element> },
    RelationNotPreserved { relation: String, tuple: Vec<Element> },
    NotInjective { a: Element, b: Element },
    RelationNotReflected { relation: String, tuple: Vec<Element> },
    NotBijective,
}

impl fmt::Display for MorphismViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn tup(t: &[Element]) -> String {
            let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
            format!("({})", parts.join(","))
        }
        match self {
            MorphismViolation::WrongLength { expected, got } => {
                write!(f, "map has {got} entries, source has {expected} elements")
            }
            MorphismViolation::OutOfRange { source_elem, value } => {
                write!(f, "map sends {source_elem} to {value}, outside the target universe")
            }
            MorphismViolation::SignatureMismatch => write!(f, "source and target signatures differ"),
            MorphismViolation::FunctionNotPreserved { function, args } => {
                write!(f, "function `{function}` not preserved at {}", tup(args))
            }
            MorphismViolation::RelationNotPreserved { relation, tuple } => {
                write!(f, "relation `{relation}` not preserved at {}", tup(tuple))
            }
            MorphismViolation::NotInjective { a, b } => {
                write!(f, "not injective: {a} and {b} collide")
            }
            MorphismViolation::RelationNotReflected { relation, tuple } => {
                write!(f, "relation `{relation}` not reflected at {}", tup(tuple))
            }
            MorphismViolation::NotBijective => write!(f, "not bijective"),
        }
    }
}

impl From<MorphismViolation> for Error {
    fn from(v: MorphismViolation) -> Error {
        Error::Usage(format!("morphism violation: {v}"))
    }
}

/// A verified total map between structure universes. Instances only exist
/// for maps that passed [`check_morphism`] at their kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    source: FiniteStructure,
    target: FiniteStructure,
    map: Vec<Element>,
    kind: MorphismKind,
}

impl Morphism {
    pub fn source(&self) -> &FiniteStructure {
        &self.source
    }

    pub fn target(&self) -> &FiniteStructure {
        &self.target
    }

    pub fn map(&self) -> &[Element] {
        &self.map
    }

    pub fn kind(&self) -> MorphismKind {
        self.kind
    }

    pub fn apply(&self, e: Element) -> Element {
        self.map[e]
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.size()];
        for &v in &self.map {
            hit[v] = true;
        }
        hit.iter().all(|&h| h)
    }

    /// Re-runs the full verification; never fails for honestly constructed
    /// values, used by the soundness audits.
    pub fn reverify(&self) -> std::result::Result<(), MorphismViolation> {
        check_morphism(self.map.clone(), &self.source, &self.target, self.kind).map(|_| ())
    }
}

/// Verifies `map` as a morphism of the requested kind, returning the first
/// violated condition otherwise. Checks run in a fixed order: totality and
/// range, function preservation, relation preservation, then injectivity,
/// relation reflection, and bijectivity as the kind demands.
pub fn check_morphism(
    map: Vec<Element>,
    source: &FiniteStructure,
    target: &FiniteStructure,
    kind: MorphismKind,
) -> std::result::Result<Morphism, MorphismViolation> {
    if source.sig() != target.sig() {
        return Err(MorphismViolation::SignatureMismatch);
    }
    if map.len() != source.size() {
        return Err(MorphismViolation::WrongLength {
            expected: source.size(),
            got: map.len(),
        });
    }
    for (e, &v) in map.iter().enumerate() {
        if v >= target.size() {
            return Err(MorphismViolation::OutOfRange {
                source_elem: e,
                value: v,
            });
        }
    }
    let sig = source.sig();
    for (i, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(i);
        for args in tuples(source.size(), sym.arity) {
            let mapped: Vec<Element> = args.iter().map(|&a| map[a]).collect();
            if map[source.apply(f, &args)] != target.apply(f, &mapped) {
                return Err(MorphismViolation::FunctionNotPreserved {
                    function: sym.name.clone(),
                    args,
                });
            }
        }
    }
    for (i, sym) in sig.relations().iter().enumerate() {
        let r = crate::syntax::RelId(i);
        for tuple in source.rel_table(r) {
            let mapped: Vec<Element> = tuple.iter().map(|&a| map[a]).collect();
            if !target.rel_holds(r, &mapped) {
                return Err(MorphismViolation::RelationNotPreserved {
                    relation: sym.name.clone(),
                    tuple: tuple.clone(),
                });
            }
        }
    }
    if kind >= MorphismKind::Embedding {
        for a in 0..map.len() {
            for b in (a + 1)..map.len() {
                if map[a] == map[b] {
                    return Err(MorphismViolation::NotInjective { a, b });
                }
            }
        }
        for (i, sym) in sig.relations().iter().enumerate() {
            let r = crate::syntax::RelId(i);
            for tuple in tuples(source.size(), sym.arity) {
                let mapped: Vec<Element> = tuple.iter().map(|&a| map[a]).collect();
                if target.rel_holds(r, &mapped) && !source.rel_holds(r, &tuple) {
                    return Err(MorphismViolation::RelationNotReflected {
                        relation: sym.name.clone(),
                        tuple,
                    });
                }
            }
        }
    }
    if kind == MorphismKind::Iso && map.len() != target.size() {
        return Err(MorphismViolation::NotBijective);
    }
    Ok(Morphism {
        source: source.clone(),
        target: target.clone(),
        map,
        kind,
    })
}

/// Complete backtracking search for the lexicographically least morphism of
/// the requested kind: source elements are assigned in canonical index
/// order, target values tried ascending.
pub fn find_morphism(
    source: &FiniteStructure,
    target: &FiniteStructure,
    kind: MorphismKind,
    limits: &Limits,
) -> Result<Option<Morphism>> {
    if source.sig() != target.sig() {
        return Err(Error::SignatureMismatch {
            context: "morphism search needs a shared signature".into(),
        });
    }
    if kind == MorphismKind::Iso && source.size() != target.size() {
        return Ok(None);
    }
    if kind >= MorphismKind::Embedding && source.size() > target.size() {
        return Ok(None);
    }
    let mut partial: Vec<Element> = Vec::with_capacity(source.size());
    let mut nodes: u64 = 0;
    if search(source, target, kind, &mut partial, &mut nodes, limits)? {
        let map = partial;
        let m = check_morphism(map, source, target, kind)
            .map_err(|v| Error::Internal(format!("search returned an invalid morphism: {v}")))?;
        Ok(Some(m))
    } else {
        Ok(None)
    }
}

fn search(
    source: &FiniteStructure,
    target: &FiniteStructure,
    kind: MorphismKind,
    partial: &mut Vec<Element>,
    nodes: &mut u64,
    limits: &Limits,
) -> Result<bool> {
    if partial.len() == source.size() {
        return Ok(true);
    }
    for v in 0..target.size() {
        *nodes += 1;
        if *nodes > limits.max_search_nodes {
            return Err(Error::Resource {
                what: "morphism search nodes",
                needed: *nodes as u128,
                cap: limits.max_search_nodes as u128,
            });
        }
        partial.push(v);
        if consistent(source, target, kind, partial)
            && search(source, target, kind, partial, nodes, limits)?
        {
            return Ok(true);
        }
        partial.pop();
    }
    Ok(false)
}

/// Checks every constraint whose participants are all assigned.
fn consistent(
    source: &FiniteStructure,
    target: &FiniteStructure,
    kind: MorphismKind,
    partial: &[Element],
) -> bool {
    let assigned = partial.len();
    if kind >= MorphismKind::Embedding {
        let last = partial[assigned - 1];
        if partial[..assigned - 1].contains(&last) {
            return false;
        }
    }
    let sig = source.sig();
    for (i, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(i);
        for args in tuples(assigned, sym.arity) {
            let out = source.apply(f, &args);
            if out >= assigned {
                continue;
            }
            let mapped: Vec<Element> = args.iter().map(|&a| partial[a]).collect();
            if partial[out] != target.apply(f, &mapped) {
                return false;
            }
        }
    }
    for (i, sym) in sig.relations().iter().enumerate() {
        let r = crate::syntax::RelId(i);
        for tuple in tuples(assigned, sym.arity) {
            let holds_src = source.rel_holds(r, &tuple);
            if !holds_src && kind == MorphismKind::Hom {
                continue;
            }
            let mapped: Vec<Element> = tuple.iter().map(|&a| partial[a]).collect();
            let holds_tgt = target.rel_holds(r, &mapped);
            if holds_src && !holds_tgt {
                return false;
            }
            if kind >= MorphismKind::Embedding && holds_tgt && !holds_src {
                return false;
            }
        }
    }
    true
}

/// Assembles the embedding `a -> a_dot^B` promised by the diagram lemma:
/// if `B` satisfies the (flat) diagram of `A`, the element constants of `B`
/// pick out an isomorphic copy of `A` inside the reduct.
pub fn embed_from_diagram(a: &FiniteStructure, b: &FiniteStructure) -> Result<Morphism> {
    let diag = Diagram::of(a)?;
    embed_from_given_diagram(a, b, &diag)
}

/// As [`embed_from_diagram`], with the diagram precomputed. `b` must be over
/// the same expansion of `A`'s signature.
pub fn embed_from_given_diagram(
    a: &FiniteStructure,
    b: &FiniteStructure,
    diag: &Diagram,
) -> Result<Morphism> {
    check_expansion_of(a, b, diag)?;
    if let Some(atom) = diag.first_violated(b)? {
        return Err(Error::Usage(format!(
            "target fails the diagram sentence `{}`",
            atom.display(b.sig())
        )));
    }
    let map: Vec<Element> = a
        .elements()
        .map(|e| {
            let c = b.sig().element_constant(e).expect("expansion covers A");
            b.apply(c, &[])
        })
        .collect();
    let reduct = b.reduct()?;
    check_morphism(map, a, &reduct, MorphismKind::Embedding).map_err(|v| {
        Error::Internal(format!(
            "diagram held but the constant map is not an embedding: {v}"
        ))
    })
}

fn check_expansion_of(a: &FiniteStructure, b: &FiniteStructure, diag: &Diagram) -> Result<()> {
    if b.sig() != diag.expanded_sig() {
        return Err(Error::SignatureMismatch {
            context: "structure is not over the expansion of A's signature by A's elements".into(),
        });
    }
    let exp = b.sig().expansion().ok_or(Error::NotExpanded)?;
    if &exp.base != a.sig() || exp.universe_size != a.size() {
        return Err(Error::SignatureMismatch {
            context: "expansion base or constant count does not match A".into(),
        });
    }
    Ok(())
}

/// A substructure of an ambient structure together with a surjection onto a
/// quotient: the shape of evidence produced by the negative-diagram lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientPresentation {
    /// The substructure generated by the element constants, re-indexed.
    pub sub: FiniteStructure,
    /// Embedding of `sub` into the ambient reduct.
    pub inclusion: Morphism,
    /// Verified surjective homomorphism from `sub` onto `A`.
    pub surjection: Morphism,
}

/// A closed-term witness that the flat negative diagram was too weak for
/// the quotient construction: a non-flat negative sentence of `A` fails in
/// `B` on generated elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairingConflict {
    /// Two closed terms meet in `B` but name different elements of `A`.
    TermPair {
        term_a: Term,
        term_b: Term,
        value_a: Element,
        value_b: Element,
        b_element: Element,
        rendered: String,
    },
    /// A relation holds in `B` on closed terms whose `A`-values it misses.
    RelationFact {
        rel: RelId,
        terms: Vec<Term>,
        b_tuple: Vec<Element>,
        rendered: String,
    },
}

impl PairingConflict {
    pub fn rendered(&self) -> &str {
        match self {
            PairingConflict::TermPair { rendered, .. } => rendered,
            PairingConflict::RelationFact { rendered, .. } => rendered,
        }
    }
}

/// Outcome of the paired closure underlying the quotient construction.
#[derive(Clone, Debug)]
pub enum QuotientOutcome {
    Presented(QuotientPresentation),
    /// The closure met a disagreement the flat diagram does not rule out.
    Conflict(PairingConflict),
}

/// Builds the substructure of `reduct(B)` generated by the element constants
/// while tracking each generated element's `A`-value by paired closure, and
/// returns it with the surjection onto `A`. Requires `B` to satisfy the flat
/// negative diagram; deeper disagreements surface as a `Conflict`.
pub fn quotient_from_negative_diagram(
    a: &FiniteStructure,
    b: &FiniteStructure,
) -> Result<QuotientOutcome> {
    let diag = Diagram::of(a)?;
    quotient_from_given_diagram(a, b, &diag)
}

pub fn quotient_from_given_diagram(
    a: &FiniteStructure,
    b: &FiniteStructure,
    diag: &Diagram,
) -> Result<QuotientOutcome> {
    check_expansion_of(a, b, diag)?;
    if let Some(atom) = diag.first_violated_negative(b)? {
        return Err(Error::Usage(format!(
            "target fails the negative diagram sentence `not ({})`",
            atom.display(b.sig())
        )));
    }

    // Paired closure: start from (constant value in B, named element of A)
    // and close under every function applied to both coordinates. Each
    // reached B-element remembers one closed term that produced it.
    let exp_sig = b.sig();
    let base: &Arc<Signature> = &exp_sig.expansion().unwrap().base;
    let mut a_value: Vec<Option<Element>> = vec![None; b.size()];
    let mut term_of: Vec<Option<Term>> = vec![None; b.size()];
    let mut frontier: Vec<Element> = Vec::new();

    let record = |bv: Element,
                      av: Element,
                      term: Term,
                      a_value: &mut Vec<Option<Element>>,
                      term_of: &mut Vec<Option<Term>>,
                      frontier: &mut Vec<Element>|
     -> Option<PairingConflict> {
        match a_value[bv] {
            None => {
                a_value[bv] = Some(av);
                term_of[bv] = Some(term);
                frontier.push(bv);
                None
            }
            Some(prev) if prev == av => None,
            Some(prev) => {
                let term_a = term_of[bv].clone().unwrap();
                let rendered = format!(
                    "not ({} = {})",
                    crate::syntax::TermDisplay(&term_a, exp_sig),
                    crate::syntax::TermDisplay(&term, exp_sig),
                );
                Some(PairingConflict::TermPair {
                    term_a,
                    term_b: term,
                    value_a: prev,
                    value_b: av,
                    b_element: bv,
                    rendered,
                })
            }
        }
    };

    // Element constants, then base constants (whose A-value is their table).
    for e in a.elements() {
        let c = exp_sig.element_constant(e).unwrap();
        if let Some(conflict) = record(
            b.apply(c, &[]),
            e,
            Term::constant(c),
            &mut a_value,
            &mut term_of,
            &mut frontier,
        ) {
            return Ok(QuotientOutcome::Conflict(conflict));
        }
    }
    for c in base.constants() {
        if let Some(conflict) = record(
            b.apply(c, &[]),
            a.apply(c, &[]),
            Term::constant(c),
            &mut a_value,
            &mut term_of,
            &mut frontier,
        ) {
            return Ok(QuotientOutcome::Conflict(conflict));
        }
    }

    let mut reached: Vec<Element> = frontier.clone();
    while !frontier.is_empty() {
        // Close under base functions over everything reached so far.
        frontier.clear();
        let snapshot: Vec<Element> = reached.clone();
        for (i, sym) in base.functions().iter().enumerate() {
            if sym.arity == 0 {
                continue;
            }
            let f = FuncId(i);
            for idx in tuples(snapshot.len(), sym.arity) {
                let b_args: Vec<Element> = idx.iter().map(|&j| snapshot[j]).collect();
                let a_args: Vec<Element> =
                    b_args.iter().map(|&e| a_value[e].unwrap()).collect();
                let bv = b.apply(f, &b_args);
                let av = a.apply(f, &a_args);
                let term = Term::App(
                    f,
                    b_args
                        .iter()
                        .map(|&e| term_of[e].clone().unwrap())
                        .collect(),
                );
                if let Some(conflict) =
                    record(bv, av, term, &mut a_value, &mut term_of, &mut frontier)
                {
                    return Ok(QuotientOutcome::Conflict(conflict));
                }
            }
        }
        reached.extend(frontier.iter().copied());
    }

    // The reached set is exactly the substructure generated by the constants.
    reached.sort_unstable();

    // Relation facts of B on generated elements must project into A; a
    // stray fact is a violated non-flat negative sentence.
    for (i, sym) in base.relations().iter().enumerate() {
        let r = crate::syntax::RelId(i);
        for idx in tuples(reached.len(), sym.arity) {
            let b_tuple: Vec<Element> = idx.iter().map(|&j| reached[j]).collect();
            if !b.rel_holds(r, &b_tuple) {
                continue;
            }
            let a_tuple: Vec<Element> =
                b_tuple.iter().map(|&e| a_value[e].unwrap()).collect();
            if !a.rel_holds(r, &a_tuple) {
                let terms: Vec<Term> = b_tuple
                    .iter()
                    .map(|&e| term_of[e].clone().unwrap())
                    .collect();
                let args: Vec<String> = terms
                    .iter()
                    .map(|t| crate::syntax::TermDisplay(t, exp_sig).to_string())
                    .collect();
                let rendered =
                    format!("not ({}({}))", sym.name, args.join(","));
                return Ok(QuotientOutcome::Conflict(PairingConflict::RelationFact {
                    rel: r,
                    terms,
                    b_tuple,
                    rendered,
                }));
            }
        }
    }

    let reduct = b.reduct()?;
    let seed: Vec<Element> = a
        .elements()
        .map(|e| b.apply(exp_sig.element_constant(e).unwrap(), &[]))
        .collect();
    let generated = crate::diagram::generated_substructure(&reduct, &seed)?;
    debug_assert_eq!(
        generated.inclusion.map().to_vec(),
        reached,
        "paired closure and generated substructure agree"
    );
    let sub = generated.sub;
    let inclusion = generated.inclusion;
    let surj_map: Vec<Element> = inclusion
        .map()
        .iter()
        .map(|&bv| a_value[bv].expect("closure covers the generated substructure"))
        .collect();
    let surjection = check_morphism(surj_map, &sub, a, MorphismKind::Hom).map_err(|v| {
        Error::Internal(format!("closed-term pairing is not a homomorphism: {v}"))
    })?;
    if !surjection.is_surjective() {
        return Err(Error::Internal(
            "constant pairing failed to cover A".into(),
        ));
    }
    Ok(QuotientOutcome::Presented(QuotientPresentation {
        sub,
        inclusion,
        surjection,
    }))
}

/// The structure induced on the range of a verified homomorphism: universe
/// is the image, tables are the target's restricted to it. For any
/// homomorphism the range is closed under the target's functions, and the
/// image of every source fact lies in the restricted relation tables.
pub struct ImageResult {
    pub image: FiniteStructure,
    /// Surjective corestriction of the original map.
    pub corestriction: Morphism,
    /// Embedding of the image into the original target.
    pub inclusion: Morphism,
}

pub fn image_structure(h: &Morphism) -> Result<ImageResult> {
    let target = h.target();
    let mut range: Vec<Element> = h.map().to_vec();
    range.sort_unstable();
    range.dedup();
    let index_of = |e: Element| range.binary_search(&e).ok();

    let sig = target.sig();
    let mut fn_tables = Vec::with_capacity(sig.functions().len());
    for (i, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(i);
        let mut table = Vec::new();
        for idx in tuples(range.len(), sym.arity) {
            let args: Vec<Element> = idx.iter().map(|&j| range[j]).collect();
            let out = target.apply(f, &args);
            let out_idx = index_of(out).ok_or_else(|| {
                Error::Internal(format!(
                    "range of a homomorphism is not closed under `{}`",
                    sym.name
                ))
            })?;
            table.push(out_idx);
        }
        fn_tables.push(table);
    }
    let mut rel_tables = Vec::with_capacity(sig.relations().len());
    for (i, _) in sig.relations().iter().enumerate() {
        let r = crate::syntax::RelId(i);
        let mut table = Vec::new();
        for tuple in target.rel_table(r) {
            if let Some(mapped) = tuple
                .iter()
                .map(|&e| index_of(e))
                .collect::<Option<Vec<Element>>>()
            {
                table.push(mapped);
            }
        }
        rel_tables.push(table);
    }
    let image = FiniteStructure::new(Arc::clone(sig), range.len(), fn_tables, rel_tables)?;

    let corestrict_map: Vec<Element> = h
        .map()
        .iter()
        .map(|&v| index_of(v).expect("map values lie in the range"))
        .collect();
    let corestriction = check_morphism(corestrict_map, h.source(), &image, MorphismKind::Hom)
        .map_err(|v| Error::Internal(format!("corestriction is not a homomorphism: {v}")))?;
    debug_assert!(corestriction.is_surjective());
    let inclusion = check_morphism(range.clone(), &image, target, MorphismKind::Embedding)
        .map_err(|v| Error::Internal(format!("image inclusion is not an embedding: {v}")))?;
    Ok(ImageResult {
        image,
        corestriction,
        inclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::expand_structure;
    use crate::structure::unit_structure;
    use crate::syntax::{expand_signature, SymbolKind};

    fn mag_sig() -> Arc<Signature> {
        Signature::from_symbols([("m".to_string(), SymbolKind::Function, 2)]).unwrap()
    }

    fn graph_sig() -> Arc<Signature> {
        Signature::from_symbols([("r".to_string(), SymbolKind::Relation, 2)]).unwrap()
    }

    fn z2() -> FiniteStructure {
        FiniteStructure::new(mag_sig(), 2, vec![vec![0, 1, 1, 0]], vec![]).unwrap()
    }

    fn z4() -> FiniteStructure {
        let mut table = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                table.push((a + b) % 4);
            }
        }
        FiniteStructure::new(mag_sig(), 4, vec![table], vec![]).unwrap()
    }

    fn p_edge() -> FiniteStructure {
        FiniteStructure::new(graph_sig(), 2, vec![], vec![vec![vec![0, 1]]]).unwrap()
    }

    #[test]
    fn identity_is_an_isomorphism() {
        let a = z2();
        let m = check_morphism(vec![0, 1], &a, &a, MorphismKind::Iso).unwrap();
        assert_eq!(m.kind(), MorphismKind::Iso);
        m.reverify().unwrap();
    }

    #[test]
    fn mod_two_map_is_a_homomorphism() {
        let m = check_morphism(vec![0, 1, 0, 1], &z4(), &z2(), MorphismKind::Hom).unwrap();
        assert_eq!(m.map(), &[0, 1, 0, 1]);
    }

    #[test]
    fn constant_map_on_edge_violates_preservation() {
        let a = p_edge();
        let err = check_morphism(vec![0, 0], &a, &a, MorphismKind::Hom).unwrap_err();
        assert_eq!(
            err,
            MorphismViolation::RelationNotPreserved {
                relation: "r".into(),
                tuple: vec![0, 1],
            }
        );
    }

    #[test]
    fn find_identity_for_all_kinds() {
        let a = p_edge();
        for kind in [MorphismKind::Hom, MorphismKind::Embedding, MorphismKind::Iso] {
            let m = find_morphism(&a, &a, kind, &Limits::default())
                .unwrap()
                .unwrap();
            assert_eq!(m.map(), &[0, 1], "{kind}");
        }
    }

    #[test]
    fn hom_from_edge_into_loop_exists() {
        let sig = graph_sig();
        let loop1 =
            FiniteStructure::new(sig.clone(), 1, vec![], vec![vec![vec![0, 0]]]).unwrap();
        let m = find_morphism(&p_edge(), &loop1, MorphismKind::Hom, &Limits::default())
            .unwrap()
            .unwrap();
        assert_eq!(m.map(), &[0, 0]);
    }

    #[test]
    fn no_hom_from_loop_into_edge() {
        let sig = graph_sig();
        let loop1 =
            FiniteStructure::new(sig.clone(), 1, vec![], vec![vec![vec![0, 0]]]).unwrap();
        let m = find_morphism(&loop1, &p_edge(), MorphismKind::Hom, &Limits::default()).unwrap();
        assert!(m.is_none());
    }

    #[test]
    fn search_agrees_with_exhaustive_enumeration() {
        // Independent oracle: try every map in lexicographic order and keep
        // the first that verifies.
        let structures = vec![
            p_edge(),
            FiniteStructure::new(graph_sig(), 1, vec![], vec![vec![vec![0, 0]]]).unwrap(),
            FiniteStructure::new(graph_sig(), 2, vec![], vec![vec![vec![0, 1], vec![1, 0]]])
                .unwrap(),
            FiniteStructure::new(graph_sig(), 3, vec![], vec![vec![vec![0, 1], vec![1, 2]]])
                .unwrap(),
            unit_structure(&graph_sig()),
        ];
        let limits = Limits::default();
        for src in &structures {
            for tgt in &structures {
                for kind in [MorphismKind::Hom, MorphismKind::Embedding, MorphismKind::Iso] {
                    let got = find_morphism(src, tgt, kind, &limits)
                        .unwrap()
                        .map(|m| m.map().to_vec());
                    let want = tuples(tgt.size(), src.size())
                        .find(|map| check_morphism(map.clone(), src, tgt, kind).is_ok());
                    assert_eq!(got, want, "{kind} {src:?} -> {tgt:?}");
                }
            }
        }
    }

    #[test]
    fn search_respects_node_cap() {
        let mut limits = Limits::default();
        limits.max_search_nodes = 1;
        let big = FiniteStructure::new(graph_sig(), 3, vec![], vec![vec![]]).unwrap();
        let none_graph =
            FiniteStructure::new(graph_sig(), 3, vec![], vec![vec![vec![0, 1]]]).unwrap();
        let res = find_morphism(&none_graph, &big, MorphismKind::Hom, &limits);
        assert!(matches!(res, Err(Error::Resource { .. })));
    }

    #[test]
    fn embed_from_self_expansion_is_identity() {
        let a = p_edge();
        let exp = expand_signature(a.sig(), a.size(), "a");
        let b = expand_structure(&a, &exp, &[0, 1]).unwrap();
        let m = embed_from_diagram(&a, &b).unwrap();
        assert_eq!(m.map(), &[0, 1]);
        assert_eq!(m.kind(), MorphismKind::Embedding);
    }

    #[test]
    fn embed_into_extension_with_extra_point() {
        // B = copy of P_edge plus an isolated extra point 2.
        let sig = graph_sig();
        let big =
            FiniteStructure::new(sig.clone(), 3, vec![], vec![vec![vec![0, 1]]]).unwrap();
        let exp = expand_signature(&sig, 2, "a");
        let b = expand_structure(&big, &exp, &[0, 1]).unwrap();
        let m = embed_from_diagram(&p_edge(), &b).unwrap();
        assert_eq!(m.map(), &[0, 1]);
    }

    #[test]
    fn embed_rejects_collapsed_constants() {
        // Two isolated vertices; collapsing the constants violates exactly
        // the injectivity sentence.
        let sig = graph_sig();
        let a = FiniteStructure::new(sig.clone(), 2, vec![], vec![vec![]]).unwrap();
        let big = FiniteStructure::new(sig.clone(), 3, vec![], vec![vec![]]).unwrap();
        let exp = expand_signature(&sig, 2, "a");
        let b = expand_structure(&big, &exp, &[0, 0]).unwrap();
        let err = embed_from_diagram(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("not (a0 = a1)"), "{msg}");
    }

    #[test]
    fn quotient_of_self_expansion_is_identity() {
        let a = z2();
        let exp = expand_signature(a.sig(), 2, "a");
        let b = expand_structure(&a, &exp, &[0, 1]).unwrap();
        match quotient_from_negative_diagram(&a, &b).unwrap() {
            QuotientOutcome::Presented(q) => {
                assert_eq!(q.sub, a);
                assert_eq!(q.surjection.map(), &[0, 1]);
            }
            QuotientOutcome::Conflict(c) => panic!("unexpected conflict: {}", c.rendered()),
        }
    }

    #[test]
    fn z4_covers_z2_by_mod_two() {
        // Z4 expanded over sig(Z2) with a0 -> 0, a1 -> 1 satisfies the
        // negative diagram of Z2; the paired closure walks 0,1,2,3 and the
        // surjection is reduction mod 2.
        let a = z2();
        let exp = expand_signature(a.sig(), 2, "a");
        let b = expand_structure(&z4(), &exp, &[0, 1]).unwrap();
        match quotient_from_negative_diagram(&a, &b).unwrap() {
            QuotientOutcome::Presented(q) => {
                assert_eq!(q.sub.size(), 4);
                assert_eq!(q.surjection.map(), &[0, 1, 0, 1]);
                q.surjection.reverify().unwrap();
                assert!(q.surjection.is_surjective());
                q.inclusion.reverify().unwrap();
            }
            QuotientOutcome::Conflict(c) => panic!("unexpected conflict: {}", c.rendered()),
        }
    }

    #[test]
    fn flat_diagram_violation_is_rejected_up_front() {
        // m(a1,a1) = a1 in B while m(1,1) = 0 in A: a flat negative sentence
        // fails, reported before any closure runs.
        let a = z2();
        let exp = expand_signature(a.sig(), 2, "a");
        let bad = FiniteStructure::new(
            exp.clone(),
            2,
            vec![vec![0, 1, 1, 1], vec![0], vec![1]],
            vec![],
        )
        .unwrap();
        let err = quotient_from_negative_diagram(&a, &bad).unwrap_err();
        assert!(err.to_string().contains("m(a1,a1) = a1"), "{err}");
    }

    #[test]
    fn deep_pairing_conflict_is_detected() {
        // f(f(a0)) and f(a1) meet in B at an unnamed element even though the
        // flat negative diagram holds; the conflict cites the term pair.
        let sig =
            Signature::from_symbols([("f".to_string(), SymbolKind::Function, 1)]).unwrap();
        let a = FiniteStructure::new(sig.clone(), 2, vec![vec![1, 0]], vec![]).unwrap();
        let exp = expand_signature(&sig, 2, "a");
        // B on {0,1,2}: f(0)=2, f(1)=2, f(2)=2; constants a0 -> 0, a1 -> 1.
        let b = FiniteStructure::new(
            exp.clone(),
            3,
            vec![vec![2, 2, 2], vec![0], vec![1]],
            vec![],
        )
        .unwrap();
        match quotient_from_negative_diagram(&a, &b).unwrap() {
            QuotientOutcome::Conflict(PairingConflict::TermPair {
                value_a, value_b, rendered, ..
            }) => {
                assert_ne!(value_a, value_b);
                assert!(rendered.contains("f("), "{rendered}");
            }
            QuotientOutcome::Conflict(other) => {
                panic!("expected a term-pair conflict, got {other:?}")
            }
            QuotientOutcome::Presented(_) => panic!("expected a pairing conflict"),
        }
    }

    #[test]
    fn image_of_identity_is_the_source() {
        let a = z2();
        let h = check_morphism(vec![0, 1], &a, &a, MorphismKind::Hom).unwrap();
        let img = image_structure(&h).unwrap();
        assert_eq!(img.image, a);
    }

    #[test]
    fn image_of_mod_two_hom_is_z2() {
        let h = check_morphism(vec![0, 1, 0, 1], &z4(), &z2(), MorphismKind::Hom).unwrap();
        let img = image_structure(&h).unwrap();
        assert_eq!(img.image, z2());
        img.corestriction.reverify().unwrap();
        assert!(img.corestriction.is_surjective());
    }

    #[test]
    fn image_of_embedding_is_isomorphic_to_source() {
        let sig = graph_sig();
        let big = FiniteStructure::new(
            sig.clone(),
            3,
            vec![],
            vec![vec![vec![1, 2]]],
        )
        .unwrap();
        let emb = check_morphism(vec![1, 2], &p_edge(), &big, MorphismKind::Embedding).unwrap();
        let img = image_structure(&emb).unwrap();
        let iso = find_morphism(&p_edge(), &img.image, MorphismKind::Iso, &Limits::default())
            .unwrap();
        assert!(iso.is_some());
    }
}
