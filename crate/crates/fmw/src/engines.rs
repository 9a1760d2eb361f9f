//! The theorem engines: the reduced-product satisfaction audit, and the two
//! constructive witness procedures.
//!
//! Both witness procedures walk the flat diagram of `A`. Per diagram
//! sentence they search for a catalog member and a map whose expansion
//! realizes the sentence; a failed search converts the sentence into a
//! clause over the base signature that is valid on the whole catalog and
//! false in `A`. When every search succeeds, the chosen expansions assemble
//! into a product whose diagram lemma yields the promised construction. The
//! deterministic search (catalog order, then lexicographic map order, with
//! reuse of already-chosen pairs preferred) replaces the paper-level
//! collection principle, and reuse keeps the assembled product small.

use std::sync::Arc;

use crate::diagram::{Diagram, FlatAtom};
use crate::enumerate::{enumerate_horn, valid_formulas, EnumerationBounds, KindFilter};
use crate::error::{Error, Result};
use crate::filter::{FilterOnFiniteSet, IndexSet};
use crate::limits::Limits;
use crate::morphism::{
    check_morphism, quotient_from_given_diagram, Morphism, MorphismKind, QuotientOutcome,
};
use crate::product::{direct_product, reduced_product, ProductStructure, ReducedProductStructure};
use crate::structure::{
    tuples, Assignment, Element, FiniteStructure, StructureCatalog,
};
use crate::syntax::{AtomicFormula, FuncId, HornFormula, Signature, Term};

/// How the chosen member and map of one product factor were used.
#[derive(Clone, Debug)]
pub struct FactorChoice {
    pub member: String,
    pub map: Vec<Element>,
    /// Rendered diagram sentences this factor realizes.
    pub serves: Vec<String>,
}

/// A verified construction: the first form embeds `A` into a reduced
/// product of catalog members, the second presents `A` as the homomorphic
/// image of a substructure of a product of catalog members.
#[derive(Clone, Debug)]
pub enum Embedded {
    IntoReducedProduct {
        product: ReducedProductStructure,
        embedding: Morphism,
        factors: Vec<FactorChoice>,
    },
    QuotientOfSubproduct {
        product: ProductStructure,
        sub: FiniteStructure,
        inclusion: Morphism,
        surjection: Morphism,
        factors: Vec<FactorChoice>,
    },
}

/// A clause valid on the whole catalog and false in `A`, with the checks
/// that established both.
#[derive(Clone, Debug)]
pub struct Refutation {
    pub formula: HornFormula,
    pub kind: &'static str,
    pub falsifying: Assignment,
    /// Per-member verification that the formula holds there.
    pub validity: Vec<(String, bool)>,
}

#[derive(Clone, Debug)]
pub enum WitnessResult {
    Embedded(Embedded),
    Refuted(Refutation),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MalcevMode {
    /// One index per negative-diagram sentence with the trivial filter.
    /// For finite `A` the positive diagram is finite, so requiring all of it
    /// at every index collapses the proof's index set without changing what
    /// the indices provide.
    Collapsed,
    /// The proof-literal index set: every subset of the positive diagram
    /// paired with at most one negative sentence, with the filter generated
    /// from the index family. Only for small positive diagrams.
    Faithful,
}

const FAITHFUL_MAX_POSITIVE: usize = 6;
const QUOTIENT_REPAIR_ROUNDS: usize = 64;

fn kind_label(phi: &HornFormula) -> &'static str {
    let c = phi.classify();
    if c.identity {
        "identity"
    } else if c.quasi_identity {
        "quasi-identity"
    } else {
        "horn"
    }
}

/// Value of a constant of the expanded signature under `(member, map)`:
/// element constants read from the map, base constants from the member.
fn const_value(
    member: &FiniteStructure,
    exp_sig: &Signature,
    map: &[Element],
    c: FuncId,
) -> Element {
    match exp_sig.constant_element(c) {
        Some(e) => map[e],
        None => member.apply(c, &[]),
    }
}

fn flat_atom_holds_under(
    member: &FiniteStructure,
    exp_sig: &Signature,
    map: &[Element],
    atom: &FlatAtom,
) -> bool {
    let val = |c: &FuncId| const_value(member, exp_sig, map, *c);
    match atom {
        FlatAtom::ConstEq(c, d) => val(c) == val(d),
        FlatAtom::Rel(r, args) => {
            let vals: Vec<Element> = args.iter().map(val).collect();
            member.rel_holds(*r, &vals)
        }
        FlatAtom::FnEq(f, args, d) => {
            let vals: Vec<Element> = args.iter().map(val).collect();
            member.apply(*f, &vals) == val(d)
        }
    }
}

fn eval_closed_term(
    member: &FiniteStructure,
    exp_sig: &Signature,
    map: &[Element],
    term: &Term,
) -> Element {
    match term {
        Term::Var(_) => unreachable!("closed terms have no variables"),
        Term::App(f, args) => {
            if args.is_empty() {
                const_value(member, exp_sig, map, *f)
            } else {
                let vals: Vec<Element> = args
                    .iter()
                    .map(|t| eval_closed_term(member, exp_sig, map, t))
                    .collect();
                member.apply(*f, &vals)
            }
        }
    }
}

/// Deterministic model search: already-selected pairs first (in selection
/// order), then catalog order with maps ascending. Returns the index into
/// `selected` when reused, or pushes the fresh choice.
fn select_pair(
    catalog: &StructureCatalog,
    a_size: usize,
    selected: &mut Vec<(usize, Vec<Element>)>,
    pred: &dyn Fn(&FiniteStructure, &[Element]) -> bool,
    nodes: &mut u64,
    limits: &Limits,
) -> Result<Option<usize>> {
    for (i, (mi, map)) in selected.iter().enumerate() {
        if pred(&catalog.members()[*mi].1, map) {
            return Ok(Some(i));
        }
    }
    for (mi, (_, member)) in catalog.members().iter().enumerate() {
        for map in tuples(member.size(), a_size) {
            *nodes += 1;
            if *nodes > limits.max_search_nodes {
                return Err(Error::Resource {
                    what: "witness model search",
                    needed: *nodes as u128,
                    cap: limits.max_search_nodes as u128,
                });
            }
            if pred(member, &map) {
                selected.push((mi, map));
                return Ok(Some(selected.len() - 1));
            }
        }
    }
    Ok(None)
}

/// All `(member, map)` pairs admitted by `base_pred`, in catalog-then-
/// lexicographic order. The search cap counts every candidate map.
fn enumerate_pool(
    catalog: &StructureCatalog,
    a_size: usize,
    base_pred: &dyn Fn(&FiniteStructure, &[Element]) -> bool,
    nodes: &mut u64,
    limits: &Limits,
) -> Result<Vec<(usize, Vec<Element>)>> {
    let mut pool = Vec::new();
    for (mi, (_, member)) in catalog.members().iter().enumerate() {
        for map in tuples(member.size(), a_size) {
            *nodes += 1;
            if *nodes > limits.max_search_nodes {
                return Err(Error::Resource {
                    what: "witness model search",
                    needed: *nodes as u128,
                    cap: limits.max_search_nodes as u128,
                });
            }
            if base_pred(member, &map) {
                pool.push((mi, map));
            }
        }
    }
    Ok(pool)
}

/// Greedy cover: repeatedly take the earliest pool pair serving the most
/// still-unserved sentences. Deterministic, and keeps the assembled product
/// small. Every sentence is assumed servable.
fn greedy_cover(serves: &[Vec<bool>], sentence_count: usize) -> Vec<usize> {
    let mut unserved: Vec<bool> = vec![true; sentence_count];
    let mut remaining = sentence_count;
    let mut picked = Vec::new();
    while remaining > 0 {
        let mut best: Option<(usize, usize)> = None;
        for (pi, row) in serves.iter().enumerate() {
            let gain = row
                .iter()
                .zip(&unserved)
                .filter(|(s, u)| **s && **u)
                .count();
            if gain > 0 && best.map_or(true, |(_, g)| gain > g) {
                best = Some((pi, gain));
            }
        }
        let (pi, _) = best.expect("cover exists for servable sentences");
        picked.push(pi);
        for (s, u) in serves[pi].iter().zip(unserved.iter_mut()) {
            if *s && *u {
                *u = false;
                remaining -= 1;
            }
        }
    }
    picked
}

/// Turns a constant of the expanded signature into a base-signature term:
/// element constants become the variable for their element.
fn const_to_term(exp_sig: &Signature, c: FuncId) -> Term {
    match exp_sig.constant_element(c) {
        Some(e) => Term::Var(format!("x{e}")),
        None => Term::constant(c),
    }
}

fn flat_atom_to_formula_atom(exp_sig: &Signature, atom: &FlatAtom) -> AtomicFormula {
    match atom {
        FlatAtom::ConstEq(c, d) => {
            AtomicFormula::Eq(const_to_term(exp_sig, *c), const_to_term(exp_sig, *d))
        }
        FlatAtom::Rel(r, args) => AtomicFormula::Rel(
            *r,
            args.iter().map(|c| const_to_term(exp_sig, *c)).collect(),
        ),
        FlatAtom::FnEq(f, args, d) => AtomicFormula::Eq(
            Term::App(
                *f,
                args.iter().map(|c| const_to_term(exp_sig, *c)).collect(),
            ),
            const_to_term(exp_sig, *d),
        ),
    }
}

fn closed_term_to_formula_term(exp_sig: &Signature, term: &Term) -> Term {
    match term {
        Term::Var(_) => unreachable!("closed terms have no variables"),
        Term::App(f, args) => {
            if args.is_empty() {
                const_to_term(exp_sig, *f)
            } else {
                Term::App(
                    *f,
                    args.iter()
                        .map(|t| closed_term_to_formula_term(exp_sig, t))
                        .collect(),
                )
            }
        }
    }
}

/// Builds the refuting clause from diagram sentences, with one variable per
/// element of `A`, and verifies the refutation: the clause holds in every
/// catalog member and fails in `A` at the identity assignment.
fn verified_refutation(
    a: &FiniteStructure,
    catalog: &StructureCatalog,
    exp_sig: &Signature,
    premises: &[FlatAtom],
    conclusion: Option<&AtomicFormula>,
    limits: &Limits,
) -> Result<Refutation> {
    let negatives: Vec<AtomicFormula> = premises
        .iter()
        .map(|atom| flat_atom_to_formula_atom(exp_sig, atom))
        .collect();
    let formula = HornFormula::new(
        Arc::clone(a.sig()),
        negatives,
        conclusion.cloned(),
    )?;
    let values: Vec<Element> = formula
        .free_vars()
        .iter()
        .map(|v| {
            v.strip_prefix('x')
                .and_then(|s| s.parse::<usize>().ok())
                .expect("refutation variables are x<element>")
        })
        .collect();
    let falsifying = Assignment::new(formula.free_vars().to_vec(), values);
    if a.clause_holds_at(&formula, &falsifying)? {
        return Err(Error::Internal(format!(
            "refutation candidate `{formula}` is not false in A at {falsifying}"
        )));
    }
    let mut validity = Vec::new();
    for (name, member) in catalog.members() {
        let sat = member.satisfies(&formula, limits)?;
        if !sat.holds {
            return Err(Error::Internal(format!(
                "refutation candidate `{formula}` fails in catalog member `{name}`"
            )));
        }
        validity.push((name.clone(), true));
    }
    let kind = kind_label(&formula);
    Ok(Refutation {
        formula,
        kind,
        falsifying,
        validity,
    })
}

fn factor_structures(
    catalog: &StructureCatalog,
    selected: &[(usize, Vec<Element>)],
) -> Vec<FiniteStructure> {
    selected
        .iter()
        .map(|(mi, _)| catalog.members()[*mi].1.clone())
        .collect()
}

fn factor_choices(
    catalog: &StructureCatalog,
    selected: &[(usize, Vec<Element>)],
    serves: &[Vec<String>],
) -> Vec<FactorChoice> {
    selected
        .iter()
        .zip(serves)
        .map(|((mi, map), s)| FactorChoice {
            member: catalog.members()[*mi].0.clone(),
            map: map.clone(),
            serves: s.clone(),
        })
        .collect()
}

/// Either embeds `A` into a reduced product of catalog members or returns a
/// basic Horn clause valid on the catalog and false in `A`.
pub fn malcev_witness(
    a: &FiniteStructure,
    catalog: &StructureCatalog,
    mode: MalcevMode,
    limits: &Limits,
) -> Result<WitnessResult> {
    if a.sig() != catalog.sig() {
        return Err(Error::SignatureMismatch {
            context: "structure and catalog must share a signature".into(),
        });
    }
    if catalog.is_empty() {
        // Vacuously valid on the empty catalog, false in every structure.
        let formula = HornFormula::new(
            Arc::clone(a.sig()),
            vec![AtomicFormula::Eq(
                Term::Var("x0".into()),
                Term::Var("x1".into()),
            )],
            None,
        )?;
        let falsifying = Assignment::new(vec!["x0".into(), "x1".into()], vec![0, 0]);
        return Ok(WitnessResult::Refuted(Refutation {
            formula,
            kind: "horn",
            falsifying,
            validity: Vec::new(),
        }));
    }
    let diag = Diagram::of(a)?;
    match mode {
        MalcevMode::Collapsed => malcev_collapsed(a, catalog, &diag, limits),
        MalcevMode::Faithful => malcev_faithful(a, catalog, &diag, limits),
    }
}

fn malcev_collapsed(
    a: &FiniteStructure,
    catalog: &StructureCatalog,
    diag: &Diagram,
    limits: &Limits,
) -> Result<WitnessResult> {
    let exp_sig = diag.expanded_sig().clone();
    let mut nodes: u64 = 0;

    // Candidate pool: pairs whose expansion satisfies all of diag+, i.e.
    // homomorphisms of A into a member.
    let positives = diag.positive();
    let base_pred = |member: &FiniteStructure, map: &[Element]| {
        positives
            .iter()
            .all(|atom| flat_atom_holds_under(member, &exp_sig, map, atom))
    };
    let pool = enumerate_pool(catalog, a.size(), &base_pred, &mut nodes, limits)?;
    if pool.is_empty() {
        // No homomorphism at all. diag+ is nonempty here: an empty positive
        // diagram is satisfied by any map into any member, and the catalog
        // is nonempty.
        let r = verified_refutation(a, catalog, &exp_sig, diag.positive(), None, limits)?;
        return Ok(WitnessResult::Refuted(r));
    }

    // Per negative sentence, which pool pairs falsify it; the first
    // unservable sentence in canonical order yields the refuting clause.
    let negatives = diag.negative();
    let mut serves_matrix: Vec<Vec<bool>> = vec![vec![false; negatives.len()]; pool.len()];
    for (pi, (mi, map)) in pool.iter().enumerate() {
        let member = &catalog.members()[*mi].1;
        for (si, atom) in negatives.iter().enumerate() {
            serves_matrix[pi][si] = !flat_atom_holds_under(member, &exp_sig, map, atom);
        }
    }
    for (si, atom) in negatives.iter().enumerate() {
        if !serves_matrix.iter().any(|row| row[si]) {
            let conclusion = flat_atom_to_formula_atom(&exp_sig, atom);
            let r = verified_refutation(
                a,
                catalog,
                &exp_sig,
                diag.positive(),
                Some(&conclusion),
                limits,
            )?;
            return Ok(WitnessResult::Refuted(r));
        }
    }

    let mut picked = greedy_cover(&serves_matrix, negatives.len());
    if picked.is_empty() {
        // Empty negative diagram: a single factor realizes diag+.
        picked.push(0);
    }
    let selected: Vec<(usize, Vec<Element>)> =
        picked.iter().map(|&pi| pool[pi].clone()).collect();
    let mut serves: Vec<Vec<String>> = vec![Vec::new(); selected.len()];
    serves[0].push("diag+".to_string());
    for (si, atom) in negatives.iter().enumerate() {
        let slot = picked
            .iter()
            .position(|&pi| serves_matrix[pi][si])
            .expect("cover serves every sentence");
        serves[slot].push(format!("not ({})", atom.display(&exp_sig)));
    }

    let factors = factor_structures(catalog, &selected);
    let filter = FilterOnFiniteSet::trivial(factors.len());
    let product = reduced_product(&factors, &filter, limits)?;
    let map: Vec<Element> = a
        .elements()
        .map(|e| {
            let tuple: Vec<Element> = selected.iter().map(|(_, h)| h[e]).collect();
            product.class_of_tuple(&tuple)
        })
        .collect();
    let embedding = check_morphism(map, a, product.carrier(), MorphismKind::Embedding)
        .map_err(|v| {
            Error::Internal(format!(
                "all diagram indices were realized but the constant map is not an embedding: {v}"
            ))
        })?;
    let factors = factor_choices(catalog, &selected, &serves);
    Ok(WitnessResult::Embedded(Embedded::IntoReducedProduct {
        product,
        embedding,
        factors,
    }))
}

fn malcev_faithful(
    a: &FiniteStructure,
    catalog: &StructureCatalog,
    diag: &Diagram,
    limits: &Limits,
) -> Result<WitnessResult> {
    let exp_sig = diag.expanded_sig().clone();
    let np = diag.positive().len();
    if np > FAITHFUL_MAX_POSITIVE {
        return Err(Error::Resource {
            what: "faithful-mode positive diagram",
            needed: np as u128,
            cap: FAITHFUL_MAX_POSITIVE as u128,
        });
    }
    let mut selected: Vec<(usize, Vec<Element>)> = Vec::new();
    let mut serves: Vec<Vec<String>> = Vec::new();
    // Per positive sentence, the factor slots whose index set included it.
    let mut generator_slots: Vec<Vec<usize>> = vec![Vec::new(); np];
    let mut nodes: u64 = 0;

    let negatives: Vec<Option<&FlatAtom>> = std::iter::once(None)
        .chain(diag.negative().iter().map(Some))
        .collect();
    for theta_mask in 0u32..(1u32 << np) {
        let theta: Vec<&FlatAtom> = diag
            .positive()
            .iter()
            .enumerate()
            .filter(|(i, _)| theta_mask & (1 << i) != 0)
            .map(|(_, atom)| atom)
            .collect();
        for xi in &negatives {
            let pred = |member: &FiniteStructure, map: &[Element]| {
                theta
                    .iter()
                    .all(|atom| flat_atom_holds_under(member, &exp_sig, map, atom))
                    && xi.map_or(true, |atom| {
                        !flat_atom_holds_under(member, &exp_sig, map, atom)
                    })
            };
            let slot =
                match select_pair(catalog, a.size(), &mut selected, &pred, &mut nodes, limits)? {
                    Some(i) => i,
                    None => {
                        // Failures surface already for the full positive
                        // diagram; report through the collapsed clause shape.
                        return match xi {
                            Some(atom) => {
                                let conclusion = flat_atom_to_formula_atom(&exp_sig, atom);
                                Ok(WitnessResult::Refuted(verified_refutation(
                                    a,
                                    catalog,
                                    &exp_sig,
                                    &theta.iter().map(|&t| t.clone()).collect::<Vec<_>>(),
                                    Some(&conclusion),
                                    limits,
                                )?))
                            }
                            None => Ok(WitnessResult::Refuted(verified_refutation(
                                a,
                                catalog,
                                &exp_sig,
                                &theta.iter().map(|&t| t.clone()).collect::<Vec<_>>(),
                                None,
                                limits,
                            )?)),
                        };
                    }
                };
            if serves.len() <= slot {
                serves.push(Vec::new());
            }
            for (i, _) in diag
                .positive()
                .iter()
                .enumerate()
                .filter(|(i, _)| theta_mask & (1 << *i) != 0)
            {
                if !generator_slots[i].contains(&slot) {
                    generator_slots[i].push(slot);
                }
            }
            if theta_mask == (1u32 << np) - 1 {
                let label = match xi {
                    None => "full diag+".to_string(),
                    Some(atom) => format!("not ({})", atom.display(&exp_sig)),
                };
                serves[slot].push(label);
            }
        }
    }

    let factors = factor_structures(catalog, &selected);
    // The finite-intersection-property step, run literally.
    let gens: Vec<IndexSet> = generator_slots
        .iter()
        .map(|slots| slots.iter().fold(0u32, |m, &s| m | (1 << s)))
        .collect();
    let filter = FilterOnFiniteSet::from_generators(factors.len(), &gens)?;
    let product = reduced_product(&factors, &filter, limits)?;
    let map: Vec<Element> = a
        .elements()
        .map(|e| {
            let tuple: Vec<Element> = selected.iter().map(|(_, h)| h[e]).collect();
            product.class_of_tuple(&tuple)
        })
        .collect();
    let embedding = check_morphism(map, a, product.carrier(), MorphismKind::Embedding)
        .map_err(|v| {
            Error::Internal(format!(
                "faithful assembly did not produce an embedding: {v}"
            ))
        })?;
    let factors = factor_choices(catalog, &selected, &serves);
    Ok(WitnessResult::Embedded(Embedded::IntoReducedProduct {
        product,
        embedding,
        factors,
    }))
}

/// Either presents `A` as a homomorphic image of a substructure of a product
/// of catalog members or returns an identity valid on the catalog and false
/// in `A`.
pub fn birkhoff_witness(
    a: &FiniteStructure,
    catalog: &StructureCatalog,
    limits: &Limits,
) -> Result<WitnessResult> {
    if a.sig() != catalog.sig() {
        return Err(Error::SignatureMismatch {
            context: "structure and catalog must share a signature".into(),
        });
    }
    let diag = Diagram::of(a)?;
    let exp_sig = diag.expanded_sig().clone();
    let mut nodes: u64 = 0;

    // Candidate pool: every map into every member (no positive requirement).
    let pool = enumerate_pool(catalog, a.size(), &|_, _| true, &mut nodes, limits)?;
    let negatives = diag.negative();
    let mut serves_matrix: Vec<Vec<bool>> = vec![vec![false; negatives.len()]; pool.len()];
    for (pi, (mi, map)) in pool.iter().enumerate() {
        let member = &catalog.members()[*mi].1;
        for (si, atom) in negatives.iter().enumerate() {
            serves_matrix[pi][si] = !flat_atom_holds_under(member, &exp_sig, map, atom);
        }
    }
    for (si, atom) in negatives.iter().enumerate() {
        if !serves_matrix.iter().any(|row| row[si]) {
            // Every map into every member satisfies the atom, so it is a
            // catalog-valid identity.
            let conclusion = flat_atom_to_formula_atom(&exp_sig, atom);
            let r = verified_refutation(a, catalog, &exp_sig, &[], Some(&conclusion), limits)?;
            return Ok(WitnessResult::Refuted(r));
        }
    }
    let picked = greedy_cover(&serves_matrix, negatives.len());
    let mut selected: Vec<(usize, Vec<Element>)> =
        picked.iter().map(|&pi| pool[pi].clone()).collect();
    let mut serves: Vec<Vec<String>> = vec![Vec::new(); selected.len()];
    for (si, atom) in negatives.iter().enumerate() {
        let slot = picked
            .iter()
            .position(|&pi| serves_matrix[pi][si])
            .expect("cover serves every sentence");
        serves[slot].push(format!("not ({})", atom.display(&exp_sig)));
    }

    // The flat negative diagram can be silent about deeper closed terms.
    // When the paired closure meets such a disagreement, realize the
    // separating sentence as one more factor and retry; if nothing separates
    // the terms, their equation is a catalog-valid identity.
    for _round in 0..QUOTIENT_REPAIR_ROUNDS {
        let sigma: Vec<FiniteStructure> = factor_structures(catalog, &selected);
        let product = direct_product(a.sig(), &sigma, limits)?;
        let const_map: Vec<Element> = a
            .elements()
            .map(|e| {
                let tuple: Vec<Element> = selected.iter().map(|(_, h)| h[e]).collect();
                product.index_of_tuple(&tuple)
            })
            .collect();
        let expanded =
            crate::diagram::expand_structure(product.carrier(), &exp_sig, &const_map)?;
        match quotient_from_given_diagram(a, &expanded, &diag)? {
            QuotientOutcome::Presented(q) => {
                let factors = factor_choices(catalog, &selected, &serves);
                return Ok(WitnessResult::Embedded(Embedded::QuotientOfSubproduct {
                    product,
                    sub: q.sub,
                    inclusion: q.inclusion,
                    surjection: q.surjection,
                    factors,
                }));
            }
            QuotientOutcome::Conflict(c) => {
                use crate::morphism::PairingConflict;
                let rendered = c.rendered().to_string();
                let (pred, conclusion): (
                    Box<dyn Fn(&FiniteStructure, &[Element]) -> bool>,
                    AtomicFormula,
                ) = match &c {
                    PairingConflict::TermPair { term_a, term_b, .. } => {
                        let (t1, t2) = (term_a.clone(), term_b.clone());
                        let sig = exp_sig.clone();
                        let conclusion = AtomicFormula::Eq(
                            closed_term_to_formula_term(&exp_sig, term_a),
                            closed_term_to_formula_term(&exp_sig, term_b),
                        );
                        (
                            Box::new(move |member: &FiniteStructure, map: &[Element]| {
                                eval_closed_term(member, &sig, map, &t1)
                                    != eval_closed_term(member, &sig, map, &t2)
                            }),
                            conclusion,
                        )
                    }
                    PairingConflict::RelationFact { rel, terms, .. } => {
                        let (r, ts) = (*rel, terms.clone());
                        let sig = exp_sig.clone();
                        let conclusion = AtomicFormula::Rel(
                            *rel,
                            terms
                                .iter()
                                .map(|t| closed_term_to_formula_term(&exp_sig, t))
                                .collect(),
                        );
                        (
                            Box::new(move |member: &FiniteStructure, map: &[Element]| {
                                let vals: Vec<Element> = ts
                                    .iter()
                                    .map(|t| eval_closed_term(member, &sig, map, t))
                                    .collect();
                                !member.rel_holds(r, &vals)
                            }),
                            conclusion,
                        )
                    }
                };
                // Scan the pool for the first pair separating the conflict;
                // every already-selected pair agrees on it by construction.
                let separating = pool
                    .iter()
                    .find(|(mi, map)| pred(&catalog.members()[*mi].1, map));
                match separating {
                    Some(pair) => {
                        if selected.contains(pair) {
                            return Err(Error::Internal(format!(
                                "conflict {rendered} recurred on a factor that separates it"
                            )));
                        }
                        selected.push(pair.clone());
                        serves.push(vec![rendered]);
                    }
                    None => {
                        let r = verified_refutation(
                            a,
                            catalog,
                            &exp_sig,
                            &[],
                            Some(&conclusion),
                            limits,
                        )?;
                        return Ok(WitnessResult::Refuted(r));
                    }
                }
            }
        }
    }
    Err(Error::Resource {
        what: "quotient repair rounds",
        needed: QUOTIENT_REPAIR_ROUNDS as u128 + 1,
        cap: QUOTIENT_REPAIR_ROUNDS as u128,
    })
}

/// How the Horn half of the satisfaction audit quantifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HornCheckMode {
    /// Check the implication at the universal closure of each clause.
    SentenceLevel,
    /// Check the implication at every tuple of class representatives.
    PerTuple,
}

/// One violated audit condition, rendered. Any violation indicates an
/// implementation bug, not a property of the inputs.
#[derive(Clone, Debug)]
pub struct LosViolation {
    pub description: String,
}

#[derive(Clone, Debug)]
pub struct LosReport {
    pub class_count: usize,
    pub atomic_formulas: usize,
    pub atomic_checks: u64,
    pub horn_formulas: usize,
    pub horn_checks: u64,
    pub violations: Vec<LosViolation>,
}

/// Audits the reduced-product satisfaction lemma on one instance: the
/// atomic biconditional at every representative tuple, and the basic-Horn
/// preservation implication.
pub fn los_audit(
    factors: &[FiniteStructure],
    filter: &FilterOnFiniteSet,
    bounds: &EnumerationBounds,
    horn_mode: HornCheckMode,
    limits: &Limits,
) -> Result<LosReport> {
    let rp = reduced_product(factors, filter, limits)?;
    los_audit_product(&rp, bounds, horn_mode, limits)
}

/// As [`los_audit`], on a prebuilt reduced product.
pub fn los_audit_product(
    rp: &ReducedProductStructure,
    bounds: &EnumerationBounds,
    horn_mode: HornCheckMode,
    limits: &Limits,
) -> Result<LosReport> {
    let mut report = LosReport {
        class_count: rp.class_count(),
        atomic_formulas: 0,
        atomic_checks: 0,
        horn_formulas: 0,
        horn_checks: 0,
        violations: Vec::new(),
    };
    if let Err(e) = rp.verify_representative_independence(1 << 22) {
        match e {
            Error::Resource { .. } => {}
            other => report.violations.push(LosViolation {
                description: other.to_string(),
            }),
        }
    }
    let atomic_bounds = EnumerationBounds::new(bounds.max_vars, bounds.max_term_depth, 0);
    let atoms = enumerate_horn(rp.carrier().sig(), &atomic_bounds, KindFilter::Identity, limits)?;
    report.atomic_formulas = atoms.len();
    report.atomic_checks = audit_atomic_part(rp, &atoms, &mut report.violations)?;
    let clauses = enumerate_horn(rp.carrier().sig(), bounds, KindFilter::All, limits)?;
    report.horn_formulas = clauses.len();
    report.horn_checks = audit_horn_part(rp, &clauses, horn_mode, &mut report.violations, limits)?;
    Ok(report)
}

/// Clause (1): the atomic biconditional at every tuple of classes, for each
/// given atomic formula. Returns the number of checks performed.
pub fn audit_atomic_part(
    rp: &ReducedProductStructure,
    atoms: &[HornFormula],
    violations: &mut Vec<LosViolation>,
) -> Result<u64> {
    let factors = rp.factors();
    let filter = rp.filter();
    let classes = rp.class_count();
    let mut checks = 0;
    for phi in atoms {
        let atom = phi.positive().ok_or_else(|| {
            Error::Usage("atomic audit expects conclusion-only formulas".into())
        })?;
        let k = phi.free_vars().len();
        for class_args in tuples(classes, k) {
            checks += 1;
            let carrier_asg = Assignment::new(phi.free_vars().to_vec(), class_args.clone());
            let in_carrier = rp.carrier().eval_atom(&carrier_asg, atom)?;
            let mut mask: IndexSet = 0;
            for (i, factor) in factors.iter().enumerate() {
                let comps: Vec<Element> = class_args
                    .iter()
                    .map(|&c| rp.class_reps()[c][i])
                    .collect();
                let asg = Assignment::new(phi.free_vars().to_vec(), comps);
                if factor.eval_atom(&asg, atom)? {
                    mask |= 1 << i;
                }
            }
            if in_carrier != filter.contains(mask) {
                violations.push(LosViolation {
                    description: format!(
                        "atomic biconditional fails for `{phi}` at classes {class_args:?}"
                    ),
                });
            }
        }
    }
    Ok(checks)
}

/// Clause (2): the basic-Horn preservation implication for each given
/// clause. Returns the number of checks performed.
pub fn audit_horn_part(
    rp: &ReducedProductStructure,
    clauses: &[HornFormula],
    horn_mode: HornCheckMode,
    violations: &mut Vec<LosViolation>,
    limits: &Limits,
) -> Result<u64> {
    let factors = rp.factors();
    let filter = rp.filter();
    let classes = rp.class_count();
    let mut checks = 0;
    for phi in clauses {
        match horn_mode {
            HornCheckMode::SentenceLevel => {
                checks += 1;
                let mut mask: IndexSet = 0;
                for (i, factor) in factors.iter().enumerate() {
                    if factor.satisfies(phi, limits)?.holds {
                        mask |= 1 << i;
                    }
                }
                if filter.contains(mask) && !rp.carrier().satisfies(phi, limits)?.holds {
                    violations.push(LosViolation {
                        description: format!("Horn preservation fails for `{phi}`"),
                    });
                }
            }
            HornCheckMode::PerTuple => {
                let k = phi.free_vars().len();
                for class_args in tuples(classes, k) {
                    checks += 1;
                    let mut mask: IndexSet = 0;
                    for (i, factor) in factors.iter().enumerate() {
                        let comps: Vec<Element> = class_args
                            .iter()
                            .map(|&c| rp.class_reps()[c][i])
                            .collect();
                        let asg = Assignment::new(phi.free_vars().to_vec(), comps);
                        if factor.clause_holds_at(phi, &asg)? {
                            mask |= 1 << i;
                        }
                    }
                    if filter.contains(mask) {
                        let carrier_asg =
                            Assignment::new(phi.free_vars().to_vec(), class_args.clone());
                        if !rp.carrier().clause_holds_at(phi, &carrier_asg)? {
                            violations.push(LosViolation {
                                description: format!(
                                    "Horn preservation fails for `{phi}` at classes {class_args:?}"
                                ),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(checks)
}

#[derive(Clone, Debug)]
pub struct StrictnessReport {
    /// Whether the unit was adjoined before computing validities.
    pub unit_adjoined: bool,
    pub valid_formulas: usize,
    pub non_strict: Vec<HornFormula>,
}

/// Computes the bounded validity set of the catalog with a unit adjoined
/// and reports any non-strict member. With the unit present none is
/// expected: the unit satisfies every atom, so it kills every
/// conclusion-free clause. Without adjoining the unit the report is
/// informational.
pub fn strictness_audit(
    catalog: &StructureCatalog,
    bounds: &EnumerationBounds,
    adjoin_unit: bool,
    limits: &Limits,
) -> Result<StrictnessReport> {
    let audited: StructureCatalog;
    let catalog = if adjoin_unit {
        let mut members = catalog.members().to_vec();
        let mut name = "unit".to_string();
        while members.iter().any(|(n, _)| n == &name) {
            name.push('_');
        }
        members.push((name, crate::structure::unit_structure(catalog.sig())));
        audited = StructureCatalog::new(Arc::clone(catalog.sig()), members)?;
        &audited
    } else {
        catalog
    };
    let valid = valid_formulas(catalog, bounds, KindFilter::All, limits)?;
    let non_strict: Vec<HornFormula> = valid
        .iter()
        .filter(|p| !p.classify().strict)
        .cloned()
        .collect();
    Ok(StrictnessReport {
        unit_adjoined: adjoin_unit,
        valid_formulas: valid.len(),
        non_strict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_formula;
    use crate::filter::index_set;
    use crate::structure::unit_structure;
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

    fn left_proj() -> FiniteStructure {
        FiniteStructure::new(mag_sig(), 2, vec![vec![0, 0, 1, 1]], vec![]).unwrap()
    }

    fn p_edge() -> FiniteStructure {
        FiniteStructure::new(graph_sig(), 2, vec![], vec![vec![vec![0, 1]]]).unwrap()
    }

    fn s_sym() -> FiniteStructure {
        FiniteStructure::new(
            graph_sig(),
            2,
            vec![],
            vec![vec![vec![0, 1], vec![1, 0]]],
        )
        .unwrap()
    }

    fn catalog(members: Vec<(&str, FiniteStructure)>) -> StructureCatalog {
        let sig = members[0].1.sig().clone();
        StructureCatalog::new(
            sig,
            members.into_iter().map(|(n, s)| (n.to_string(), s)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn member_of_catalog_embeds() {
        let a = s_sym();
        let k = catalog(vec![("S_sym", s_sym())]);
        match malcev_witness(&a, &k, MalcevMode::Collapsed, &Limits::default()).unwrap() {
            WitnessResult::Embedded(Embedded::IntoReducedProduct {
                product, embedding, ..
            }) => {
                embedding.reverify().unwrap();
                assert_eq!(product.factors().len(), 1);
            }
            other => panic!("expected an embedding, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_edge_refuted_by_symmetry_clause() {
        let a = p_edge();
        let k = catalog(vec![("S_sym", s_sym())]);
        match malcev_witness(&a, &k, MalcevMode::Collapsed, &Limits::default()).unwrap() {
            WitnessResult::Refuted(r) => {
                let want = parse_formula("r(x,y) |- r(y,x)", a.sig())
                    .unwrap()
                    .canonicalize();
                assert_eq!(r.formula.canonicalize(), want);
                assert_eq!(r.falsifying.values(), &[0, 1]);
                assert_eq!(r.kind, "quasi-identity");
            }
            other => panic!("expected a refutation, got {other:?}"),
        }
    }

    #[test]
    fn substructure_of_reduced_product_embeds() {
        // Build a substructure of S_sym x S_sym, then ask for its witness.
        let sig = graph_sig();
        let k = catalog(vec![("S_sym", s_sym())]);
        let p = direct_product(&sig, &[s_sym(), s_sym()], &Limits::default()).unwrap();
        let g = crate::diagram::generated_substructure(p.carrier(), &[p.index_of_tuple(&[0, 1])])
            .unwrap();
        let a = g.sub;
        match malcev_witness(&a, &k, MalcevMode::Collapsed, &Limits::default()).unwrap() {
            WitnessResult::Embedded(Embedded::IntoReducedProduct { embedding, .. }) => {
                embedding.reverify().unwrap();
            }
            other => panic!("expected an embedding, got {other:?}"),
        }
    }

    #[test]
    fn faithful_mode_agrees_on_small_instances() {
        let a = p_edge();
        let k = catalog(vec![("S_sym", s_sym())]);
        match malcev_witness(&a, &k, MalcevMode::Faithful, &Limits::default()).unwrap() {
            WitnessResult::Refuted(r) => {
                let want = parse_formula("r(x,y) |- r(y,x)", a.sig())
                    .unwrap()
                    .canonicalize();
                assert_eq!(r.formula.canonicalize(), want);
            }
            other => panic!("expected a refutation, got {other:?}"),
        }

        let a2 = s_sym();
        match malcev_witness(&a2, &k, MalcevMode::Faithful, &Limits::default()).unwrap() {
            WitnessResult::Embedded(Embedded::IntoReducedProduct {
                product, embedding, ..
            }) => {
                embedding.reverify().unwrap();
                product.filter().verify_laws().unwrap();
            }
            other => panic!("expected an embedding, got {other:?}"),
        }
    }

    #[test]
    fn empty_catalog_refutes_everything() {
        let a = z2();
        let k = StructureCatalog::new(mag_sig(), vec![]).unwrap();
        match malcev_witness(&a, &k, MalcevMode::Collapsed, &Limits::default()).unwrap() {
            WitnessResult::Refuted(r) => {
                assert_eq!(r.formula.to_string(), "x0 = x1 |- false");
            }
            other => panic!("expected a refutation, got {other:?}"),
        }
    }

    #[test]
    fn left_proj_against_z2_yields_commutativity() {
        let a = left_proj();
        let k = catalog(vec![("Z2", z2())]);
        match birkhoff_witness(&a, &k, &Limits::default()).unwrap() {
            WitnessResult::Refuted(r) => {
                let want = parse_formula("|- m(x,y) = m(y,x)", a.sig())
                    .unwrap()
                    .canonicalize();
                assert_eq!(r.formula.canonicalize(), want);
                assert_eq!(r.kind, "identity");
            }
            other => panic!("expected a refutation, got {other:?}"),
        }
    }

    #[test]
    fn two_bare_elements_against_unit_yield_x_equals_y() {
        let sig = Arc::new(Signature::new());
        let a = FiniteStructure::new(sig.clone(), 2, vec![], vec![]).unwrap();
        let k = StructureCatalog::new(
            sig.clone(),
            vec![("unit".into(), unit_structure(&sig))],
        )
        .unwrap();
        match birkhoff_witness(&a, &k, &Limits::default()).unwrap() {
            WitnessResult::Refuted(r) => {
                assert_eq!(r.formula.to_string(), "|- x0 = x1");
            }
            other => panic!("expected a refutation, got {other:?}"),
        }
    }

    #[test]
    fn two_element_graph_against_unit_also_collapses() {
        // With relations present the same equation is still the first
        // negative sentence, since constant equations sort first.
        let sig = graph_sig();
        let a = FiniteStructure::new(sig.clone(), 2, vec![], vec![vec![]]).unwrap();
        let k = StructureCatalog::new(
            sig.clone(),
            vec![("unit".into(), unit_structure(&sig))],
        )
        .unwrap();
        match birkhoff_witness(&a, &k, &Limits::default()).unwrap() {
            WitnessResult::Refuted(r) => {
                assert_eq!(r.formula.to_string(), "|- x0 = x1");
            }
            other => panic!("expected a refutation, got {other:?}"),
        }
    }

    #[test]
    fn image_of_subproduct_structure_is_presented() {
        // A Birkhoff-style construction run forward, then recognized.
        let k = catalog(vec![("Z2", z2())]);
        let a = z2();
        match birkhoff_witness(&a, &k, &Limits::default()).unwrap() {
            WitnessResult::Embedded(Embedded::QuotientOfSubproduct {
                product,
                sub,
                inclusion,
                surjection,
                ..
            }) => {
                surjection.reverify().unwrap();
                assert!(surjection.is_surjective());
                inclusion.reverify().unwrap();
                assert_eq!(inclusion.target(), product.carrier());
                assert_eq!(surjection.source(), &sub);
            }
            other => panic!("expected a quotient presentation, got {other:?}"),
        }
    }

    #[test]
    fn los_audit_trivial_filter_is_clean() {
        let factors = vec![p_edge(), s_sym()];
        let f = FilterOnFiniteSet::trivial(2);
        let bounds = EnumerationBounds::new(2, 0, 2);
        let report = los_audit(
            &factors,
            &f,
            &bounds,
            HornCheckMode::PerTuple,
            &Limits::default(),
        )
        .unwrap();
        assert!(report.violations.is_empty());
        assert!(report.atomic_checks > 0 && report.horn_checks > 0);
    }

    #[test]
    fn los_audit_principal_filter_is_clean() {
        let factors = vec![p_edge(), s_sym()];
        let f = FilterOnFiniteSet::principal(2, index_set(&[1])).unwrap();
        let bounds = EnumerationBounds::new(2, 0, 2);
        let report = los_audit(
            &factors,
            &f,
            &bounds,
            HornCheckMode::SentenceLevel,
            &Limits::default(),
        )
        .unwrap();
        assert!(report.violations.is_empty());
    }

    #[test]
    fn los_audit_detects_corruption() {
        use crate::syntax::RelId;
        let factors = vec![p_edge(), s_sym()];
        let f = FilterOnFiniteSet::trivial(2);
        let rp = reduced_product(&factors, &f, &Limits::default()).unwrap();
        // Corrupt the carrier: drop one relation tuple.
        let carrier = rp.carrier();
        let mut rel = carrier.rel_table(RelId(0)).to_vec();
        assert!(!rel.is_empty());
        rel.pop();
        let corrupted = FiniteStructure::new(
            carrier.sig().clone(),
            carrier.size(),
            vec![],
            vec![rel],
        )
        .unwrap();
        let bad = ReducedProductStructureTestAccess::with_carrier(&rp, corrupted);
        let bounds = EnumerationBounds::new(2, 0, 1);
        let report = los_audit_product(
            &bad,
            &bounds,
            HornCheckMode::SentenceLevel,
            &Limits::default(),
        )
        .unwrap();
        assert!(!report.violations.is_empty());
    }

    // Test-only access to rebuild a reduced product around a corrupted carrier.
    struct ReducedProductStructureTestAccess;
    impl ReducedProductStructureTestAccess {
        fn with_carrier(
            rp: &ReducedProductStructure,
            carrier: FiniteStructure,
        ) -> ReducedProductStructure {
            let mut clone = rp.clone();
            clone.replace_carrier_for_tests(carrier);
            clone
        }
    }

    #[test]
    fn strictness_with_unit_only_strict() {
        let k = catalog(vec![("Z2", z2())]);
        let bounds = EnumerationBounds::new(2, 1, 1);
        let report = strictness_audit(&k, &bounds, true, &Limits::default()).unwrap();
        assert!(report.non_strict.is_empty());
        assert!(report.valid_formulas > 0);

        let k_unit_only = catalog(vec![("u", unit_structure(&mag_sig()))]);
        let report2 = strictness_audit(&k_unit_only, &bounds, false, &Limits::default()).unwrap();
        assert!(report2.non_strict.is_empty());
    }

    #[test]
    fn strictness_without_unit_sees_non_strict_clause() {
        let k = catalog(vec![("P_edge", p_edge())]);
        let bounds = EnumerationBounds::new(2, 0, 1);
        let report = strictness_audit(&k, &bounds, false, &Limits::default()).unwrap();
        let no_loop = parse_formula("r(x,x) |- false", k.sig()).unwrap().canonicalize();
        assert!(report.non_strict.iter().any(|p| p.canonicalize() == no_loop));

        let with_unit = strictness_audit(&k, &bounds, true, &Limits::default()).unwrap();
        assert!(with_unit.non_strict.is_empty());
    }
}
