//! Flat atomic diagrams over an expanded signature, expansion of structures
//! by constants, and generated substructures.
//!
//! The full atomic diagram is infinite once function symbols exist; this
//! module stores only the flat fragment: relations over constants, one
//! function application over constants equated to a constant, and equations
//! between distinct constants. Every element is named by a fresh constant,
//! so flat facts determine all closed-term facts by totality. Reflexive
//! equations carry no constraint and are omitted, so the positive and
//! negative parts together decide exactly the flat atom universe.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::morphism::{check_morphism, Morphism, MorphismKind};
use crate::structure::{tuples, Element, FiniteStructure};
use crate::syntax::{expand_signature, FuncId, RelId, Signature};

/// A flat atomic sentence over an expanded signature. Equations between
/// constants keep the smaller symbol index first. The declaration order is
/// the canonical sentence order: constant equations, then relation facts,
/// then function facts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlatAtom {
    /// `c = d` with `c < d`
    ConstEq(FuncId, FuncId),
    /// `r(c1,...,ck)`
    Rel(RelId, Vec<FuncId>),
    /// `f(c1,...,ck) = d` with `k >= 1`
    FnEq(FuncId, Vec<FuncId>, FuncId),
}

impl FlatAtom {
    pub fn holds_in(&self, b: &FiniteStructure) -> bool {
        let val = |c: &FuncId| b.apply(*c, &[]);
        match self {
            FlatAtom::Rel(r, args) => {
                let vals: Vec<Element> = args.iter().map(val).collect();
                b.rel_holds(*r, &vals)
            }
            FlatAtom::FnEq(f, args, d) => {
                let vals: Vec<Element> = args.iter().map(val).collect();
                b.apply(*f, &vals) == val(d)
            }
            FlatAtom::ConstEq(c, d) => val(c) == val(d),
        }
    }

    pub fn display(&self, sig: &Signature) -> String {
        let name = |c: &FuncId| sig.function(*c).name.clone();
        match self {
            FlatAtom::Rel(r, args) => {
                let parts: Vec<String> = args.iter().map(name).collect();
                format!("{}({})", sig.relation(*r).name, parts.join(","))
            }
            FlatAtom::FnEq(f, args, d) => {
                let parts: Vec<String> = args.iter().map(name).collect();
                format!("{}({}) = {}", name(f), parts.join(","), name(d))
            }
            FlatAtom::ConstEq(c, d) => format!("{} = {}", name(c), name(d)),
        }
    }
}

/// A diagram sentence: a flat atom, possibly negated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramSentence {
    pub atom: FlatAtom,
    pub negated: bool,
}

impl DiagramSentence {
    pub fn display(&self, sig: &Signature) -> String {
        if self.negated {
            format!("not ({})", self.atom.display(sig))
        } else {
            self.atom.display(sig)
        }
    }
}

/// The flat diagram of a structure: the flat atoms true in the
/// self-expansion (positive part) and those false in it (negative part,
/// stored un-negated).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    expanded: Arc<Signature>,
    positive: Vec<FlatAtom>,
    negative: Vec<FlatAtom>,
}

impl Diagram {
    /// Expands `a`'s signature by one constant per element and decides every
    /// flat atom in the self-expansion.
    pub fn of(a: &FiniteStructure) -> Result<Diagram> {
        let expanded = expand_signature(a.sig(), a.size(), "a");
        let identity: Vec<Element> = a.elements().collect();
        let self_exp = expand_structure(a, &expanded, &identity)?;
        let consts: Vec<FuncId> = expanded.constants().collect();
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        let mut decide = |atom: FlatAtom| {
            if atom.holds_in(&self_exp) {
                positive.push(atom);
            } else {
                negative.push(atom);
            }
        };
        for (i, sym) in expanded.relations().iter().enumerate() {
            for idx in tuples(consts.len(), sym.arity) {
                let args: Vec<FuncId> = idx.iter().map(|&j| consts[j]).collect();
                decide(FlatAtom::Rel(RelId(i), args));
            }
        }
        for (i, sym) in expanded.functions().iter().enumerate() {
            if sym.arity == 0 {
                continue;
            }
            for idx in tuples(consts.len(), sym.arity) {
                let args: Vec<FuncId> = idx.iter().map(|&j| consts[j]).collect();
                for &d in &consts {
                    decide(FlatAtom::FnEq(FuncId(i), args.clone(), d));
                }
            }
        }
        for (i, &c) in consts.iter().enumerate() {
            for &d in &consts[i + 1..] {
                decide(FlatAtom::ConstEq(c, d));
            }
        }
        positive.sort();
        negative.sort();
        Ok(Diagram {
            expanded,
            positive,
            negative,
        })
    }

    pub fn expanded_sig(&self) -> &Arc<Signature> {
        &self.expanded
    }

    pub fn positive(&self) -> &[FlatAtom] {
        &self.positive
    }

    /// Atoms whose negations form the negative diagram.
    pub fn negative(&self) -> &[FlatAtom] {
        &self.negative
    }

    /// First diagram sentence violated by `b`, positives before negatives,
    /// each part in canonical atom order.
    pub fn first_violated(&self, b: &FiniteStructure) -> Result<Option<DiagramSentence>> {
        self.check_sig(b)?;
        for atom in &self.positive {
            if !atom.holds_in(b) {
                return Ok(Some(DiagramSentence {
                    atom: atom.clone(),
                    negated: false,
                }));
            }
        }
        Ok(self.first_violated_negative_inner(b).map(|atom| DiagramSentence {
            atom,
            negated: true,
        }))
    }

    /// First atom of the negative diagram that `b` fails to refute.
    pub fn first_violated_negative(&self, b: &FiniteStructure) -> Result<Option<FlatAtom>> {
        self.check_sig(b)?;
        Ok(self.first_violated_negative_inner(b))
    }

    fn first_violated_negative_inner(&self, b: &FiniteStructure) -> Option<FlatAtom> {
        self.negative.iter().find(|atom| atom.holds_in(b)).cloned()
    }

    fn check_sig(&self, b: &FiniteStructure) -> Result<()> {
        if b.sig() != &self.expanded {
            return Err(Error::SignatureMismatch {
                context: "structure is not over the diagram's expanded signature".into(),
            });
        }
        Ok(())
    }
}

/// Interprets the fresh constants of `exp_sig` in `m`: `const_map[i]` is the
/// value of the constant naming element `i`. Base tables are unchanged, so
/// the reduct inverts the expansion.
pub fn expand_structure(
    m: &FiniteStructure,
    exp_sig: &Arc<Signature>,
    const_map: &[Element],
) -> Result<FiniteStructure> {
    let exp = exp_sig.expansion().ok_or(Error::NotExpanded)?;
    if &exp.base != m.sig() {
        return Err(Error::SignatureMismatch {
            context: "expansion base differs from the structure signature".into(),
        });
    }
    if const_map.len() != exp.universe_size {
        return Err(Error::Usage(format!(
            "constant map covers {} of {} constants",
            const_map.len(),
            exp.universe_size
        )));
    }
    for &v in const_map {
        if v >= m.size() {
            return Err(Error::OutOfRange {
                value: v,
                universe: m.size(),
            });
        }
    }
    let mut fn_tables: Vec<Vec<Element>> = m
        .sig()
        .functions()
        .iter()
        .enumerate()
        .map(|(i, _)| m.fn_table(FuncId(i)).to_vec())
        .collect();
    for &v in const_map {
        fn_tables.push(vec![v]);
    }
    let rel_tables = m
        .sig()
        .relations()
        .iter()
        .enumerate()
        .map(|(i, _)| m.rel_table(RelId(i)).to_vec())
        .collect();
    FiniteStructure::new(Arc::clone(exp_sig), m.size(), fn_tables, rel_tables)
}

/// A generated substructure with its inclusion embedding.
#[derive(Clone, Debug)]
pub struct GeneratedSubstructure {
    pub sub: FiniteStructure,
    pub inclusion: Morphism,
}

/// The least subset of `b` containing `seed` and all constant values, closed
/// under every function table, with relations restricted to it.
pub fn generated_substructure(
    b: &FiniteStructure,
    seed: &[Element],
) -> Result<GeneratedSubstructure> {
    let sig = b.sig();
    let mut in_sub = vec![false; b.size()];
    let mut frontier: Vec<Element> = Vec::new();
    for &e in seed {
        if e >= b.size() {
            return Err(Error::OutOfRange {
                value: e,
                universe: b.size(),
            });
        }
        if !in_sub[e] {
            in_sub[e] = true;
            frontier.push(e);
        }
    }
    for c in sig.constants() {
        let v = b.apply(c, &[]);
        if !in_sub[v] {
            in_sub[v] = true;
            frontier.push(v);
        }
    }
    if frontier.is_empty() {
        return Err(Error::EmptySeed);
    }
    let mut members: Vec<Element> = frontier.clone();
    while !frontier.is_empty() {
        frontier.clear();
        let snapshot = members.clone();
        for (i, sym) in sig.functions().iter().enumerate() {
            if sym.arity == 0 {
                continue;
            }
            let f = FuncId(i);
            for idx in tuples(snapshot.len(), sym.arity) {
                let args: Vec<Element> = idx.iter().map(|&j| snapshot[j]).collect();
                let v = b.apply(f, &args);
                if !in_sub[v] {
                    in_sub[v] = true;
                    frontier.push(v);
                }
            }
        }
        members.extend(frontier.iter().copied());
    }
    members.sort_unstable();

    let index_of = |e: Element| members.binary_search(&e).unwrap();
    let mut fn_tables = Vec::with_capacity(sig.functions().len());
    for (i, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(i);
        let mut table = Vec::new();
        for idx in tuples(members.len(), sym.arity) {
            let args: Vec<Element> = idx.iter().map(|&j| members[j]).collect();
            table.push(index_of(b.apply(f, &args)));
        }
        fn_tables.push(table);
    }
    let mut rel_tables = Vec::with_capacity(sig.relations().len());
    for (i, _) in sig.relations().iter().enumerate() {
        let r = RelId(i);
        let mut table = Vec::new();
        for tuple in b.rel_table(r) {
            if tuple.iter().all(|&e| in_sub[e]) {
                table.push(tuple.iter().map(|&e| index_of(e)).collect());
            }
        }
        rel_tables.push(table);
    }
    let sub = FiniteStructure::new(Arc::clone(sig), members.len(), fn_tables, rel_tables)?;
    let inclusion = check_morphism(members, &sub, b, MorphismKind::Embedding)
        .map_err(|v| Error::Internal(format!("substructure inclusion failed to verify: {v}")))?;
    Ok(GeneratedSubstructure { sub, inclusion })
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "diag+:")?;
        for atom in &self.positive {
            writeln!(f, "  {}", atom.display(&self.expanded))?;
        }
        writeln!(f, "diag-:")?;
        for atom in &self.negative {
            writeln!(f, "  not ({})", atom.display(&self.expanded))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::SymbolKind;

    fn graph_sig() -> Arc<Signature> {
        Signature::from_symbols([("r".to_string(), SymbolKind::Relation, 2)]).unwrap()
    }

    fn mag_sig() -> Arc<Signature> {
        Signature::from_symbols([("m".to_string(), SymbolKind::Function, 2)]).unwrap()
    }

    fn z2() -> FiniteStructure {
        FiniteStructure::new(mag_sig(), 2, vec![vec![0, 1, 1, 0]], vec![]).unwrap()
    }

    #[test]
    fn diagram_of_singleton_loop() {
        let s =
            FiniteStructure::new(graph_sig(), 1, vec![], vec![vec![vec![0, 0]]]).unwrap();
        let d = Diagram::of(&s).unwrap();
        assert_eq!(d.positive().len(), 1);
        assert!(d.negative().is_empty());
        assert_eq!(d.positive()[0].display(d.expanded_sig()), "r(a0,a0)");
    }

    #[test]
    fn diagram_of_edge() {
        let s =
            FiniteStructure::new(graph_sig(), 2, vec![], vec![vec![vec![0, 1]]]).unwrap();
        let d = Diagram::of(&s).unwrap();
        let sig = d.expanded_sig().clone();
        let pos: Vec<String> = d.positive().iter().map(|a| a.display(&sig)).collect();
        let neg: Vec<String> = d.negative().iter().map(|a| a.display(&sig)).collect();
        assert_eq!(pos, vec!["r(a0,a1)"]);
        assert_eq!(neg, vec!["a0 = a1", "r(a0,a0)", "r(a1,a0)", "r(a1,a1)"]);
    }

    #[test]
    fn diagram_of_z2_counts() {
        let d = Diagram::of(&z2()).unwrap();
        // Four correct m-facts; four wrong-value m-facts plus a0 = a1.
        assert_eq!(d.positive().len(), 4);
        assert_eq!(d.negative().len(), 5);
        // Together they decide the whole flat universe: 8 m-atoms + 1 equation.
        assert_eq!(d.positive().len() + d.negative().len(), 9);
    }

    #[test]
    fn diagram_counts_cover_flat_universe_with_base_constants() {
        // Base constant e joins the fresh constants in the flat universe.
        let sig = Signature::from_symbols([
            ("e".to_string(), SymbolKind::Function, 0),
            ("m".to_string(), SymbolKind::Function, 2),
        ])
        .unwrap();
        let s = FiniteStructure::new(sig, 2, vec![vec![0], vec![0, 1, 1, 0]], vec![]).unwrap();
        let d = Diagram::of(&s).unwrap();
        // Constants: e, a0, a1. m-atoms: 9*3, equations: 3.
        assert_eq!(d.positive().len() + d.negative().len(), 27 + 3);
        // e = a0 is a positive fact.
        let sig = d.expanded_sig().clone();
        assert!(d
            .positive()
            .iter()
            .any(|a| a.display(&sig) == "e = a0"));
    }

    #[test]
    fn self_expansion_satisfies_own_diagram() {
        let a = z2();
        let d = Diagram::of(&a).unwrap();
        let b = expand_structure(&a, d.expanded_sig(), &[0, 1]).unwrap();
        assert!(d.first_violated(&b).unwrap().is_none());
    }

    #[test]
    fn z4_satisfies_negative_diagram_of_z2() {
        let a = z2();
        let d = Diagram::of(&a).unwrap();
        let mut table = Vec::new();
        for x in 0..4 {
            for y in 0..4 {
                table.push((x + y) % 4);
            }
        }
        let z4 = FiniteStructure::new(mag_sig(), 4, vec![table], vec![]).unwrap();
        let b = expand_structure(&z4, d.expanded_sig(), &[0, 1]).unwrap();
        assert!(d.first_violated_negative(&b).unwrap().is_none());
        // The full diagram fails, though: m(a0,a0) = a0 needs 0+0=0, holds;
        // but m(a1,a1) = a0 needs 1+1=0, false in Z4.
        let v = d.first_violated(&b).unwrap().unwrap();
        assert!(!v.negated);
    }

    #[test]
    fn expand_structure_missing_constant_errors() {
        let a = z2();
        let exp = expand_signature(a.sig(), 2, "a");
        assert!(expand_structure(&a, &exp, &[0]).is_err());
        assert!(expand_structure(&a, &exp, &[0, 5]).is_err());
    }

    #[test]
    fn reduct_inverts_expansion() {
        let a = z2();
        let exp = expand_signature(a.sig(), 2, "a");
        let b = expand_structure(&a, &exp, &[1, 0]).unwrap();
        assert_eq!(b.reduct().unwrap(), a);
    }

    #[test]
    fn full_seed_generates_whole_structure() {
        let a = z2();
        let g = generated_substructure(&a, &[0, 1]).unwrap();
        assert_eq!(g.sub, a);
        assert_eq!(g.inclusion.map(), &[0, 1]);
    }

    #[test]
    fn zero_is_closed_in_z2() {
        let g = generated_substructure(&z2(), &[0]).unwrap();
        assert_eq!(g.sub.size(), 1);
        assert_eq!(g.inclusion.map(), &[0]);
    }

    #[test]
    fn successor_generates_all_of_z3() {
        let sig =
            Signature::from_symbols([("s".to_string(), SymbolKind::Function, 1)]).unwrap();
        let z3 = FiniteStructure::new(sig, 3, vec![vec![1, 2, 0]], vec![]).unwrap();
        let g = generated_substructure(&z3, &[0]).unwrap();
        assert_eq!(g.sub.size(), 3);
    }

    #[test]
    fn empty_seed_without_constants_errors() {
        let err = generated_substructure(&z2(), &[]).unwrap_err();
        assert!(matches!(err, Error::EmptySeed));
    }

    #[test]
    fn empty_seed_with_constant_is_fine() {
        let sig = Signature::from_symbols([
            ("c".to_string(), SymbolKind::Function, 0),
            ("m".to_string(), SymbolKind::Function, 2),
        ])
        .unwrap();
        let s =
            FiniteStructure::new(sig, 2, vec![vec![1], vec![0, 0, 0, 0]], vec![]).unwrap();
        let g = generated_substructure(&s, &[]).unwrap();
        // Closure of {c=1}: m(1,1)=0, so everything.
        assert_eq!(g.sub.size(), 2);
    }
}
