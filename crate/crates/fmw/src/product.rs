//! Direct products and reduced products modulo a filter.
//!
//! Carriers are extensional: the direct product carrier indexes factor
//! tuples in lexicographic order (factor 0 most significant), the reduced
//! product carrier indexes agreement classes by first occurrence. Relations
//! in a reduced product hold on a class tuple iff the set of coordinates
//! where they hold componentwise belongs to the filter; functions are
//! computed pointwise and quotiented. Both are stated on lexicographically
//! least representatives and checked independent of that choice.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::filter::{FilterOnFiniteSet, IndexSet};
use crate::limits::Limits;
use crate::morphism::{check_morphism, Morphism, MorphismKind};
use crate::structure::{tuples, unit_structure, Element, FiniteStructure};
use crate::syntax::{FuncId, RelId, Signature};

/// Hard bound on extensional table entries, independent of the tuple cap.
const TABLE_ENTRY_BUDGET: u128 = 1 << 24;

/// Work budget for the exhaustive representative-independence check run at
/// construction time.
const REP_CHECK_BUDGET: u128 = 1 << 20;

fn check_factors(sig: &Arc<Signature>, factors: &[FiniteStructure]) -> Result<u128> {
    let mut count: u128 = 1;
    for f in factors {
        if f.sig() != sig {
            return Err(Error::SignatureMismatch {
                context: "product factors must share one signature".into(),
            });
        }
        count = count.saturating_mul(f.size() as u128);
    }
    Ok(count)
}

fn check_table_budget(sig: &Signature, carrier_size: u128) -> Result<()> {
    for sym in sig.functions().iter().chain(sig.relations().iter()) {
        let entries = carrier_size.saturating_pow(sym.arity as u32);
        if entries > TABLE_ENTRY_BUDGET {
            return Err(Error::Resource {
                what: "product table entries",
                needed: entries,
                cap: TABLE_ENTRY_BUDGET,
            });
        }
    }
    Ok(())
}

fn tuple_of_index(factors: &[FiniteStructure], mut idx: usize) -> Vec<Element> {
    let mut tuple = vec![0; factors.len()];
    for (i, f) in factors.iter().enumerate().rev() {
        tuple[i] = idx % f.size();
        idx /= f.size();
    }
    tuple
}

fn index_of_tuple(factors: &[FiniteStructure], tuple: &[Element]) -> usize {
    let mut idx = 0;
    for (i, f) in factors.iter().enumerate() {
        idx = idx * f.size() + tuple[i];
    }
    idx
}

/// A direct product with its carrier and verified projections. The empty
/// product is the unit structure.
#[derive(Clone, Debug)]
pub struct ProductStructure {
    factors: Vec<FiniteStructure>,
    carrier: FiniteStructure,
    projections: Vec<Morphism>,
}

impl ProductStructure {
    pub fn factors(&self) -> &[FiniteStructure] {
        &self.factors
    }

    pub fn carrier(&self) -> &FiniteStructure {
        &self.carrier
    }

    pub fn projections(&self) -> &[Morphism] {
        &self.projections
    }

    pub fn tuple_of_index(&self, idx: usize) -> Vec<Element> {
        tuple_of_index(&self.factors, idx)
    }

    pub fn index_of_tuple(&self, tuple: &[Element]) -> usize {
        index_of_tuple(&self.factors, tuple)
    }
}

/// Componentwise functions; a relation holds on a tuple iff it holds at
/// every index. An empty factor list yields the unit.
pub fn direct_product(
    sig: &Arc<Signature>,
    factors: &[FiniteStructure],
    limits: &Limits,
) -> Result<ProductStructure> {
    let count = check_factors(sig, factors)?;
    limits.check("product tuples", count, limits.max_product_tuples)?;
    if factors.is_empty() {
        return Ok(ProductStructure {
            factors: Vec::new(),
            carrier: unit_structure(sig),
            projections: Vec::new(),
        });
    }
    check_table_budget(sig, count)?;
    let size = count as usize;
    let m = factors.len();

    let mut fn_tables = Vec::with_capacity(sig.functions().len());
    for (fi, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(fi);
        let mut table = Vec::with_capacity(size.pow(sym.arity as u32));
        for args in tuples(size, sym.arity) {
            let arg_tuples: Vec<Vec<Element>> = args
                .iter()
                .map(|&a| tuple_of_index(factors, a))
                .collect();
            let mut out = vec![0; m];
            for (i, factor) in factors.iter().enumerate() {
                let comps: Vec<Element> = arg_tuples.iter().map(|t| t[i]).collect();
                out[i] = factor.apply(f, &comps);
            }
            table.push(index_of_tuple(factors, &out));
        }
        fn_tables.push(table);
    }
    let mut rel_tables = Vec::with_capacity(sig.relations().len());
    for (ri, sym) in sig.relations().iter().enumerate() {
        let r = RelId(ri);
        let mut table = Vec::new();
        for args in tuples(size, sym.arity) {
            let arg_tuples: Vec<Vec<Element>> = args
                .iter()
                .map(|&a| tuple_of_index(factors, a))
                .collect();
            let everywhere = factors.iter().enumerate().all(|(i, factor)| {
                let comps: Vec<Element> = arg_tuples.iter().map(|t| t[i]).collect();
                factor.rel_holds(r, &comps)
            });
            if everywhere {
                table.push(args);
            }
        }
        rel_tables.push(table);
    }
    let carrier = FiniteStructure::new(Arc::clone(sig), size, fn_tables, rel_tables)?;

    let mut projections = Vec::with_capacity(m);
    for i in 0..m {
        let map: Vec<Element> = (0..size)
            .map(|idx| tuple_of_index(factors, idx)[i])
            .collect();
        let proj = check_morphism(map, &carrier, &factors[i], MorphismKind::Hom)
            .map_err(|v| Error::Internal(format!("projection {i} failed to verify: {v}")))?;
        projections.push(proj);
    }
    Ok(ProductStructure {
        factors: factors.to_vec(),
        carrier,
        projections,
    })
}

/// A reduced product: carrier on agreement classes modulo the filter, with
/// the quotient map and least representatives.
#[derive(Clone, Debug)]
pub struct ReducedProductStructure {
    factors: Vec<FiniteStructure>,
    filter: FilterOnFiniteSet,
    carrier: FiniteStructure,
    class_of_tuple: Vec<usize>,
    class_reps: Vec<Vec<Element>>,
}

impl ReducedProductStructure {
    pub fn factors(&self) -> &[FiniteStructure] {
        &self.factors
    }

    pub fn filter(&self) -> &FilterOnFiniteSet {
        &self.filter
    }

    pub fn carrier(&self) -> &FiniteStructure {
        &self.carrier
    }

    pub fn class_reps(&self) -> &[Vec<Element>] {
        &self.class_reps
    }

    pub fn class_count(&self) -> usize {
        self.class_reps.len()
    }

    /// The quotient map on tuple indices.
    pub fn class_of_index(&self, idx: usize) -> usize {
        self.class_of_tuple[idx]
    }

    /// Swaps in a (possibly corrupted) carrier for negative-control tests.
    #[cfg(test)]
    pub(crate) fn replace_carrier_for_tests(&mut self, carrier: FiniteStructure) {
        self.carrier = carrier;
    }

    pub fn class_of_tuple(&self, tuple: &[Element]) -> usize {
        self.class_of_tuple[index_of_tuple(&self.factors, tuple)]
    }

    /// The coordinate set where a relation holds componentwise on the given
    /// factor tuples.
    fn truth_set(&self, r: RelId, arg_tuples: &[&[Element]]) -> IndexSet {
        let mut mask: IndexSet = 0;
        for (i, factor) in self.factors.iter().enumerate() {
            let comps: Vec<Element> = arg_tuples.iter().map(|t| t[i]).collect();
            if factor.rel_holds(r, &comps) {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Exhaustively recomputes every function value and relation truth from
    /// every combination of class members and checks the carrier is
    /// unchanged. Exact; refuses (rather than samples) above the budget.
    pub fn verify_representative_independence(&self, budget: u128) -> Result<()> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.class_count()];
        for (idx, &c) in self.class_of_tuple.iter().enumerate() {
            members[c].push(idx);
        }
        let sig = self.carrier.sig().clone();
        let classes = self.class_count();

        let mut work: u128 = 0;
        for sym in sig.functions().iter().chain(sig.relations().iter()) {
            for args in tuples(classes, sym.arity) {
                let combos: u128 = args
                    .iter()
                    .map(|&c| members[c].len() as u128)
                    .product();
                work = work.saturating_add(combos);
            }
        }
        if work > budget {
            return Err(Error::Resource {
                what: "representative independence checks",
                needed: work,
                cap: budget,
            });
        }

        for (fi, sym) in sig.functions().iter().enumerate() {
            let f = FuncId(fi);
            for args in tuples(classes, sym.arity) {
                let expected = self.carrier.apply(f, &args);
                let choice_sets: Vec<&[usize]> =
                    args.iter().map(|&c| members[c].as_slice()).collect();
                for combo in cartesian(&choice_sets) {
                    let arg_tuples: Vec<Vec<Element>> = combo
                        .iter()
                        .map(|&idx| tuple_of_index(&self.factors, idx))
                        .collect();
                    let mut out = vec![0; self.factors.len()];
                    for (i, factor) in self.factors.iter().enumerate() {
                        let comps: Vec<Element> = arg_tuples.iter().map(|t| t[i]).collect();
                        out[i] = factor.apply(f, &comps);
                    }
                    if self.class_of_tuple(&out) != expected {
                        return Err(Error::Internal(format!(
                            "function `{}` is not well defined on classes {args:?}",
                            sym.name
                        )));
                    }
                }
            }
        }
        for (ri, sym) in sig.relations().iter().enumerate() {
            let r = RelId(ri);
            for args in tuples(classes, sym.arity) {
                let expected = self.carrier.rel_holds(r, &args);
                let choice_sets: Vec<&[usize]> =
                    args.iter().map(|&c| members[c].as_slice()).collect();
                for combo in cartesian(&choice_sets) {
                    let arg_tuples: Vec<Vec<Element>> = combo
                        .iter()
                        .map(|&idx| tuple_of_index(&self.factors, idx))
                        .collect();
                    let refs: Vec<&[Element]> =
                        arg_tuples.iter().map(|t| t.as_slice()).collect();
                    let got = self.filter.contains(self.truth_set(r, &refs));
                    if got != expected {
                        return Err(Error::Internal(format!(
                            "relation `{}` truth depends on representatives at {args:?}",
                            sym.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn cartesian<'a>(sets: &'a [&'a [usize]]) -> impl Iterator<Item = Vec<usize>> + 'a {
    let k = sets.len();
    let mut pos: Option<Vec<usize>> = if sets.iter().any(|s| s.is_empty()) && k > 0 {
        None
    } else {
        Some(vec![0; k])
    };
    std::iter::from_fn(move || {
        let cur = pos.clone()?;
        let item: Vec<usize> = cur.iter().enumerate().map(|(i, &j)| sets[i][j]).collect();
        let mut done = true;
        if let Some(p) = pos.as_mut() {
            for i in (0..k).rev() {
                p[i] += 1;
                if p[i] < sets[i].len() {
                    done = false;
                    break;
                }
                p[i] = 0;
            }
        }
        if done {
            pos = None;
        }
        Some(item)
    })
}

/// Quotients the direct product by agreement on a filter set. Two tuples
/// are equivalent iff the coordinate set where they agree belongs to the
/// filter; over a finite index set that is agreement on the filter's core.
pub fn reduced_product(
    factors: &[FiniteStructure],
    filter: &FilterOnFiniteSet,
    limits: &Limits,
) -> Result<ReducedProductStructure> {
    if factors.is_empty() {
        return Err(Error::IndexMismatch {
            filter: filter.index_size(),
            factors: 0,
        });
    }
    if filter.index_size() != factors.len() {
        return Err(Error::IndexMismatch {
            filter: filter.index_size(),
            factors: factors.len(),
        });
    }
    let sig = factors[0].sig().clone();
    let count = check_factors(&sig, factors)?;
    limits.check("reduced product tuples", count, limits.max_product_tuples)?;
    let total = count as usize;
    let core = filter.core();
    let core_indices: Vec<usize> = (0..factors.len()).filter(|i| core & (1 << i) != 0).collect();

    // First occurrence in lexicographic tuple order names the class, so
    // class representatives are the lexicographically least members.
    let mut class_of_tuple = vec![usize::MAX; total];
    let mut class_reps: Vec<Vec<Element>> = Vec::new();
    let mut key_to_class: std::collections::BTreeMap<Vec<Element>, usize> =
        std::collections::BTreeMap::new();
    for idx in 0..total {
        let tuple = tuple_of_index(factors, idx);
        let key: Vec<Element> = core_indices.iter().map(|&i| tuple[i]).collect();
        let class = *key_to_class.entry(key).or_insert_with(|| {
            class_reps.push(tuple.clone());
            class_reps.len() - 1
        });
        class_of_tuple[idx] = class;
    }
    let classes = class_reps.len();
    check_table_budget(&sig, classes as u128)?;

    let mut fn_tables = Vec::with_capacity(sig.functions().len());
    for (fi, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(fi);
        let mut table = Vec::with_capacity(classes.pow(sym.arity as u32));
        for args in tuples(classes, sym.arity) {
            let mut out = vec![0; factors.len()];
            for (i, factor) in factors.iter().enumerate() {
                let comps: Vec<Element> =
                    args.iter().map(|&c| class_reps[c][i]).collect();
                out[i] = factor.apply(f, &comps);
            }
            table.push(class_of_tuple[index_of_tuple(factors, &out)]);
        }
        fn_tables.push(table);
    }
    let mut rel_tables = Vec::with_capacity(sig.relations().len());
    for (ri, sym) in sig.relations().iter().enumerate() {
        let r = RelId(ri);
        let mut table = Vec::new();
        for args in tuples(classes, sym.arity) {
            let mut mask: IndexSet = 0;
            for (i, factor) in factors.iter().enumerate() {
                let comps: Vec<Element> =
                    args.iter().map(|&c| class_reps[c][i]).collect();
                if factor.rel_holds(r, &comps) {
                    mask |= 1 << i;
                }
            }
            if filter.contains(mask) {
                table.push(args);
            }
        }
        rel_tables.push(table);
    }
    let carrier = FiniteStructure::new(sig, classes, fn_tables, rel_tables)?;
    let rp = ReducedProductStructure {
        factors: factors.to_vec(),
        filter: filter.clone(),
        carrier,
        class_of_tuple,
        class_reps,
    };
    // Exhaustive within budget; the filter laws guarantee independence in
    // general, and the audit re-checks it on every instance it visits.
    match rp.verify_representative_independence(REP_CHECK_BUDGET) {
        Ok(()) => {}
        Err(Error::Resource { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(rp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::index_set;
    use crate::morphism::find_morphism;
    use crate::syntax::SymbolKind;

    fn graph_sig() -> Arc<Signature> {
        Signature::from_symbols([("r".to_string(), SymbolKind::Relation, 2)]).unwrap()
    }

    fn mag_sig() -> Arc<Signature> {
        Signature::from_symbols([("m".to_string(), SymbolKind::Function, 2)]).unwrap()
    }

    fn p_edge() -> FiniteStructure {
        FiniteStructure::new(graph_sig(), 2, vec![], vec![vec![vec![0, 1]]]).unwrap()
    }

    fn s_loop() -> FiniteStructure {
        FiniteStructure::new(graph_sig(), 1, vec![], vec![vec![vec![0, 0]]]).unwrap()
    }

    fn left_proj() -> FiniteStructure {
        FiniteStructure::new(mag_sig(), 2, vec![vec![0, 0, 1, 1]], vec![]).unwrap()
    }

    #[test]
    fn empty_product_is_the_unit() {
        let sig = graph_sig();
        let p = direct_product(&sig, &[], &Limits::default()).unwrap();
        assert_eq!(p.carrier(), &unit_structure(&sig));
        assert!(p.projections().is_empty());
    }

    #[test]
    fn product_cardinality_and_projections() {
        let sig = graph_sig();
        let a = p_edge();
        let b = FiniteStructure::new(
            sig.clone(),
            3,
            vec![],
            vec![vec![vec![0, 1], vec![1, 2]]],
        )
        .unwrap();
        let p = direct_product(&sig, &[a, b], &Limits::default()).unwrap();
        assert_eq!(p.carrier().size(), 6);
        assert_eq!(p.projections().len(), 2);
        for proj in p.projections() {
            proj.reverify().unwrap();
        }
        // Relations hold exactly componentwise.
        let idx = p.index_of_tuple(&[0, 0]);
        let jdx = p.index_of_tuple(&[1, 1]);
        assert!(p.carrier().rel_holds(RelId(0), &[idx, jdx]));
        let kdx = p.index_of_tuple(&[1, 0]);
        assert!(!p.carrier().rel_holds(RelId(0), &[idx, kdx]));
    }

    #[test]
    fn square_of_left_proj_satisfies_its_identities() {
        // Bounded identity enumeration is exercised in the engine tests;
        // here, the defining identity m(x,y) = x transfers to the square.
        let sig = mag_sig();
        let a = left_proj();
        let p = direct_product(&sig, &[a.clone(), a], &Limits::default()).unwrap();
        let phi = crate::dsl::parse_formula("|- m(x,y) = x", &sig).unwrap();
        assert!(p.carrier().satisfies(&phi, &Limits::default()).unwrap().holds);
    }

    #[test]
    fn trivial_filter_gives_the_direct_product() {
        let sig = graph_sig();
        let factors = vec![p_edge(), p_edge()];
        let f = FilterOnFiniteSet::trivial(2);
        let rp = reduced_product(&factors, &f, &Limits::default()).unwrap();
        let p = direct_product(&sig, &factors, &Limits::default()).unwrap();
        assert_eq!(rp.carrier(), p.carrier());
        let iso = find_morphism(
            rp.carrier(),
            p.carrier(),
            MorphismKind::Iso,
            &Limits::default(),
        )
        .unwrap();
        assert!(iso.is_some());
    }

    #[test]
    fn principal_filter_projects_to_its_factor() {
        let factors = vec![p_edge(), s_loop()];
        for (j, want) in [(0usize, p_edge()), (1usize, s_loop())] {
            let f = FilterOnFiniteSet::principal(2, index_set(&[j])).unwrap();
            let rp = reduced_product(&factors, &f, &Limits::default()).unwrap();
            let iso = find_morphism(rp.carrier(), &want, MorphismKind::Iso, &Limits::default())
                .unwrap();
            assert!(iso.is_some(), "factor {j}");
        }
    }

    #[test]
    fn filter_at_one_makes_relations_follow_index_one() {
        // Factors [P_edge, S_loop] with the filter generated by {1}: the
        // carrier relation holds iff it holds at index 1.
        let factors = vec![p_edge(), s_loop()];
        let f = FilterOnFiniteSet::from_generators(2, &[index_set(&[1])]).unwrap();
        let rp = reduced_product(&factors, &f, &Limits::default()).unwrap();
        // Classes are keyed by the core coordinate {1}; S_loop is a
        // singleton, so everything collapses.
        assert_eq!(rp.class_count(), 1);
        for args in tuples(rp.class_count(), 2) {
            let holds = rp.carrier().rel_holds(RelId(0), &args);
            let comps: Vec<Element> = args.iter().map(|&c| rp.class_reps()[c][1]).collect();
            assert_eq!(holds, factors[1].rel_holds(RelId(0), &comps));
        }
    }

    #[test]
    fn representative_independence_verifies_and_detects_corruption() {
        let factors = vec![p_edge(), s_loop(), p_edge()];
        let f = FilterOnFiniteSet::principal(3, index_set(&[0, 2])).unwrap();
        let rp = reduced_product(&factors, &f, &Limits::default()).unwrap();
        rp.verify_representative_independence(1 << 20).unwrap();

        let mut bad = rp.clone();
        // Swap two class assignments; recomputation from members must notice.
        let c0 = bad.class_of_tuple[0];
        let last = bad.class_of_tuple.len() - 1;
        bad.class_of_tuple[0] = bad.class_of_tuple[last];
        bad.class_of_tuple[last] = c0;
        assert!(bad.verify_representative_independence(1 << 20).is_err());
    }

    #[test]
    fn tuple_cap_respected() {
        let mut limits = Limits::default();
        limits.max_product_tuples = 3;
        let sig = graph_sig();
        let res = direct_product(&sig, &[p_edge(), p_edge()], &Limits { ..limits });
        assert!(matches!(res, Err(Error::Resource { .. })));
    }

    #[test]
    fn filter_index_size_must_match() {
        let f = FilterOnFiniteSet::trivial(3);
        let res = reduced_product(&[p_edge(), p_edge()], &f, &Limits::default());
        assert!(matches!(res, Err(Error::IndexMismatch { .. })));
    }
}
