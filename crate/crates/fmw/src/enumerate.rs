//! Bounded enumeration of basic Horn formulas up to alpha-equivalence, and
//! the bounded validity set of a catalog.
//!
//! Enumeration uses the canonical variable pool `x0, x1, ...`. Clauses are
//! canonicalized (premises sorted and deduplicated, equations oriented, the
//! best variable naming chosen) and returned in a deterministic order.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::structure::StructureCatalog;
use crate::syntax::{AtomicFormula, FuncId, HornFormula, RelId, Signature, Term};

/// Bounds that finitize the clause universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBounds {
    pub max_vars: usize,
    pub max_term_depth: usize,
    pub max_negatives: usize,
}

impl EnumerationBounds {
    pub fn new(max_vars: usize, max_term_depth: usize, max_negatives: usize) -> Self {
        EnumerationBounds {
            max_vars,
            max_term_depth,
            max_negatives,
        }
    }
}

/// Which clause shapes to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindFilter {
    /// Every basic Horn formula.
    All,
    /// No premises, one conclusion: atomic formulas.
    Identity,
    /// A conclusion is present (strict clauses).
    QuasiIdentity,
    /// No conclusion.
    NonStrict,
}

impl KindFilter {
    fn admits(self, negatives: usize, has_positive: bool) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Identity => negatives == 0 && has_positive,
            KindFilter::QuasiIdentity => has_positive,
            KindFilter::NonStrict => !has_positive,
        }
    }
}

/// All terms over `x0..x{max_vars-1}` with nesting depth at most
/// `max_term_depth`, in a deterministic order.
pub fn enumerate_terms(sig: &Signature, max_vars: usize, max_term_depth: usize) -> Vec<Term> {
    let mut layers: Vec<Vec<Term>> = Vec::new();
    let mut leaves: Vec<Term> = (0..max_vars).map(|i| Term::Var(format!("x{i}"))).collect();
    for (i, sym) in sig.functions().iter().enumerate() {
        if sym.arity == 0 {
            leaves.push(Term::constant(FuncId(i)));
        }
    }
    layers.push(leaves);
    for _ in 1..=max_term_depth {
        let sofar: Vec<Term> = layers.concat();
        let mut next = Vec::new();
        for (i, sym) in sig.functions().iter().enumerate() {
            if sym.arity == 0 {
                continue;
            }
            for idx in crate::structure::tuples(sofar.len(), sym.arity) {
                let args: Vec<Term> = idx.iter().map(|&j| sofar[j].clone()).collect();
                let t = Term::App(FuncId(i), args);
                if !layers.iter().any(|l| l.contains(&t)) && !next.contains(&t) {
                    next.push(t);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }
    let mut all = layers.concat();
    all.sort();
    all.dedup();
    all
}

/// All atoms over the bounded term set, before alpha-canonicalization.
/// Equations are unordered and kept with the smaller side first.
pub fn enumerate_raw_atoms(sig: &Signature, bounds: &EnumerationBounds) -> Vec<AtomicFormula> {
    let terms = enumerate_terms(sig, bounds.max_vars, bounds.max_term_depth);
    let mut atoms = Vec::new();
    for (i, sym) in sig.relations().iter().enumerate() {
        for idx in crate::structure::tuples(terms.len(), sym.arity) {
            let args: Vec<Term> = idx.iter().map(|&j| terms[j].clone()).collect();
            atoms.push(AtomicFormula::Rel(RelId(i), args));
        }
    }
    for (i, l) in terms.iter().enumerate() {
        for r in &terms[i..] {
            atoms.push(AtomicFormula::Eq(l.clone(), r.clone()));
        }
    }
    atoms
}

fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut level: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for set in &level {
            let start = set.last().map_or(0, |&l| l + 1);
            for i in start..n {
                let mut s = set.clone();
                s.push(i);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Every clause up to the bounds, canonicalized and deduplicated, in a
/// deterministic order. The work is capped by `limits.max_formulas`
/// candidate clauses.
pub fn enumerate_horn(
    sig: &std::sync::Arc<Signature>,
    bounds: &EnumerationBounds,
    kind: KindFilter,
    limits: &Limits,
) -> Result<Vec<HornFormula>> {
    let atoms = enumerate_raw_atoms(sig, bounds);
    let n = atoms.len();
    let neg_sets = if kind == KindFilter::Identity {
        vec![Vec::new()]
    } else {
        subsets_up_to(n, bounds.max_negatives)
    };

    let positives_per_set: u128 = match kind {
        KindFilter::NonStrict => 1,
        KindFilter::Identity | KindFilter::QuasiIdentity => n as u128,
        KindFilter::All => n as u128 + 1,
    };
    let candidates = (neg_sets.len() as u128).saturating_mul(positives_per_set);
    limits.check("clause enumeration candidates", candidates, limits.max_formulas)?;

    let mut seen: BTreeSet<(Vec<AtomicFormula>, Option<AtomicFormula>)> = BTreeSet::new();
    let mut build = |negs: &[usize], pos: Option<usize>| -> Result<()> {
        if negs.is_empty() && pos.is_none() {
            return Ok(());
        }
        let negatives: Vec<AtomicFormula> = negs.iter().map(|&i| atoms[i].clone()).collect();
        let positive = pos.map(|i| atoms[i].clone());
        let phi = HornFormula::new(std::sync::Arc::clone(sig), negatives, positive)?;
        let canon = phi.canonicalize();
        seen.insert((canon.negatives().to_vec(), canon.positive().cloned()));
        Ok(())
    };
    for set in &neg_sets {
        if kind.admits(set.len(), false) {
            build(set, None)?;
        }
        if kind.admits(set.len(), true) {
            for p in 0..n {
                build(set, Some(p))?;
            }
        }
    }
    seen.into_iter()
        .map(|(negatives, positive)| {
            HornFormula::new(std::sync::Arc::clone(sig), negatives, positive)
        })
        .collect()
}

/// The bounded validity set: clauses in the bounded universe satisfied by
/// every catalog member. Exact with respect to the bounded enumeration.
pub fn valid_formulas(
    catalog: &StructureCatalog,
    bounds: &EnumerationBounds,
    kind: KindFilter,
    limits: &Limits,
) -> Result<Vec<HornFormula>> {
    let all = enumerate_horn(catalog.sig(), bounds, kind, limits)?;
    let mut valid = Vec::new();
    for phi in all {
        if catalog.class_satisfies(&phi, limits)?.holds {
            valid.push(phi);
        }
    }
    Ok(valid)
}
