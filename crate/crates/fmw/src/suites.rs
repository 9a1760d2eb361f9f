//! Seeded randomized verification suites.
//!
//! Each suite generates instances deterministically from a seed, runs the
//! matching construction, and re-verifies every claim the construction
//! makes. Any failure is an implementation bug. The same generators back
//! the CLI `verify` subcommand and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::diagram::{expand_structure, Diagram, DiagramSentence, FlatAtom};
use crate::engines::{
    audit_atomic_part, birkhoff_witness, malcev_witness, Embedded, LosViolation, MalcevMode,
    WitnessResult,
};
use crate::enumerate::{enumerate_horn, valid_formulas, EnumerationBounds, KindFilter};
use crate::error::{Error, Result};
use crate::filter::{FilterOnFiniteSet, IndexSet};
use crate::limits::Limits;
use crate::morphism::{embed_from_given_diagram, quotient_from_given_diagram, QuotientOutcome};
use crate::product::reduced_product;
use crate::structure::{tuples, CompiledClause, Element, FiniteStructure, StructureCatalog};
use crate::syntax::{FuncId, RelId, Signature, SymbolKind};

/// Outcome of one suite run. Rendering this value is byte-stable for a
/// fixed (suite, seed, cases) triple.
#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub suite: &'static str,
    pub seed: u64,
    pub cases: u64,
    pub checks: u64,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl SuiteOutcome {
    fn new(suite: &'static str, seed: u64, cases: u64) -> SuiteOutcome {
        SuiteOutcome {
            suite,
            seed,
            cases,
            checks: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, case: u64, what: impl Into<String>) {
        if self.failures.len() < 32 {
            self.failures.push(format!("case {}: {}", case, what.into()));
        }
    }
}

/// The fixed audit signature: one binary relation, one binary function.
fn audit_sig() -> Arc<Signature> {
    Signature::from_symbols([
        ("r".to_string(), SymbolKind::Relation, 2),
        ("m".to_string(), SymbolKind::Function, 2),
    ])
    .unwrap()
}

fn witness_sig_pool() -> Vec<Arc<Signature>> {
    vec![
        Signature::from_symbols([("r".to_string(), SymbolKind::Relation, 2)]).unwrap(),
        Signature::from_symbols([("m".to_string(), SymbolKind::Function, 2)]).unwrap(),
        Signature::from_symbols([
            ("u".to_string(), SymbolKind::Function, 1),
            ("r".to_string(), SymbolKind::Relation, 2),
        ])
        .unwrap(),
        Signature::from_symbols([("f".to_string(), SymbolKind::Function, 1)]).unwrap(),
    ]
}

fn random_structure(rng: &mut ChaCha8Rng, sig: &Arc<Signature>, size: usize) -> FiniteStructure {
    let mut fn_tables = Vec::with_capacity(sig.functions().len());
    for sym in sig.functions() {
        let entries = size.pow(sym.arity as u32);
        fn_tables.push((0..entries).map(|_| rng.gen_range(0..size)).collect());
    }
    let mut rel_tables = Vec::with_capacity(sig.relations().len());
    for sym in sig.relations() {
        let mut table = Vec::new();
        for tuple in tuples(size, sym.arity) {
            if rng.gen_bool(0.4) {
                table.push(tuple);
            }
        }
        rel_tables.push(table);
    }
    FiniteStructure::new(Arc::clone(sig), size, fn_tables, rel_tables).unwrap()
}

/// A family of factors over the audit signature: up to four factors of up
/// to three elements, with the product capped at 16 tuples.
fn sample_factor_family(rng: &mut ChaCha8Rng) -> Vec<FiniteStructure> {
    let sig = audit_sig();
    loop {
        let count = rng.gen_range(1..=4);
        let sizes: Vec<usize> = (0..count).map(|_| rng.gen_range(1..=3)).collect();
        if sizes.iter().product::<usize>() > 16 {
            continue;
        }
        return sizes
            .iter()
            .map(|&n| random_structure(rng, &sig, n))
            .collect();
    }
}

/// Atomic biconditional audit over randomized families, all proper filters
/// per family.
pub fn run_los_suite(seed: u64, cases: u64, limits: &Limits) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("los", seed, cases);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = audit_sig();
    let atomic_bounds = EnumerationBounds::new(3, 1, 0);
    let atoms = enumerate_horn(&sig, &atomic_bounds, KindFilter::Identity, limits)?;
    out.notes.push(format!("atomic formulas: {}", atoms.len()));
    for case in 0..cases {
        let factors = sample_factor_family(&mut rng);
        for filter in FilterOnFiniteSet::all_filters(factors.len()) {
            let rp = reduced_product(&factors, &filter, limits)?;
            if let Err(e) = rp.verify_representative_independence(1 << 22) {
                if !matches!(e, Error::Resource { .. }) {
                    out.fail(case, e.to_string());
                }
            }
            let mut violations: Vec<LosViolation> = Vec::new();
            out.checks += audit_atomic_part(&rp, &atoms, &mut violations)?;
            for v in violations {
                out.fail(case, v.description);
            }
        }
    }
    Ok(out)
}

/// Basic-Horn preservation audit at the universal closure, same instance
/// family as the atomic audit. Clauses are compiled once; factor
/// satisfaction is computed once per family and shared across its filters.
pub fn run_horn_suite(seed: u64, cases: u64, limits: &Limits) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("horn", seed, cases);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = audit_sig();
    let bounds = EnumerationBounds::new(2, 1, 2);
    let clauses = enumerate_horn(&sig, &bounds, KindFilter::All, limits)?;
    let compiled: Vec<(CompiledClause, usize)> = clauses
        .iter()
        .map(|phi| Ok((CompiledClause::compile(phi)?, phi.free_vars().len())))
        .collect::<Result<_>>()?;
    out.notes.push(format!("horn clauses: {}", clauses.len()));
    for case in 0..cases {
        let factors = sample_factor_family(&mut rng);
        let mut masks: Vec<IndexSet> = Vec::with_capacity(clauses.len());
        for (cc, n_vars) in &compiled {
            let mut mask: IndexSet = 0;
            for (i, factor) in factors.iter().enumerate() {
                if holds_everywhere(factor, cc, *n_vars) {
                    mask |= 1 << i;
                }
            }
            masks.push(mask);
        }
        for filter in FilterOnFiniteSet::all_filters(factors.len()) {
            let rp = reduced_product(&factors, &filter, limits)?;
            for (idx, ((cc, n_vars), &mask)) in compiled.iter().zip(&masks).enumerate() {
                out.checks += 1;
                if filter.contains(mask) && !holds_everywhere(rp.carrier(), cc, *n_vars) {
                    out.fail(
                        case,
                        format!("Horn preservation fails for `{}`", clauses[idx]),
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Universal-closure satisfaction over a compiled clause, allocation-free.
fn holds_everywhere(s: &FiniteStructure, cc: &CompiledClause, n_vars: usize) -> bool {
    let size = s.size();
    let mut values = vec![0; n_vars];
    loop {
        if !cc.holds_at(s, &values) {
            return false;
        }
        let mut i = n_vars;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            values[i] += 1;
            if values[i] < size {
                break;
            }
            values[i] = 0;
        }
    }
}

/// Extension of `a`: `junk` extra elements, tables and relations equal to
/// `a`'s on the copied part, arbitrary elsewhere. Satisfies the whole flat
/// diagram of `a` under the identity constant map.
fn diagram_extension(
    rng: &mut ChaCha8Rng,
    a: &FiniteStructure,
    junk: usize,
) -> FiniteStructure {
    let sig = a.sig();
    let n = a.size();
    let size = n + junk;
    let mut fn_tables = Vec::with_capacity(sig.functions().len());
    for (i, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(i);
        let mut table = Vec::with_capacity(size.pow(sym.arity as u32));
        for args in tuples(size, sym.arity) {
            if args.iter().all(|&x| x < n) {
                table.push(a.apply(f, &args));
            } else {
                table.push(rng.gen_range(0..size));
            }
        }
        fn_tables.push(table);
    }
    let mut rel_tables = Vec::with_capacity(sig.relations().len());
    for (i, sym) in sig.relations().iter().enumerate() {
        let r = RelId(i);
        let mut table = Vec::new();
        for tuple in tuples(size, sym.arity) {
            let keep = if tuple.iter().all(|&x| x < n) {
                a.rel_holds(r, &tuple)
            } else {
                rng.gen_bool(0.3)
            };
            if keep {
                table.push(tuple);
            }
        }
        rel_tables.push(table);
    }
    FiniteStructure::new(Arc::clone(sig), size, fn_tables, rel_tables).unwrap()
}

/// Extension of `a` that satisfies only the negative diagram: every element
/// carries a shadow value in `a`, functions respect shadows, relations are
/// sampled inside the shadow preimage of `a`'s relations.
fn shadow_extension(
    rng: &mut ChaCha8Rng,
    a: &FiniteStructure,
    junk: usize,
) -> FiniteStructure {
    let sig = a.sig();
    let n = a.size();
    let size = n + junk;
    let shadow: Vec<Element> = (0..size)
        .map(|x| if x < n { x } else { rng.gen_range(0..n) })
        .collect();
    let mut fn_tables = Vec::with_capacity(sig.functions().len());
    for (i, sym) in sig.functions().iter().enumerate() {
        let f = FuncId(i);
        let mut table = Vec::with_capacity(size.pow(sym.arity as u32));
        for args in tuples(size, sym.arity) {
            let shadow_args: Vec<Element> = args.iter().map(|&x| shadow[x]).collect();
            let target = a.apply(f, &shadow_args);
            let mut candidates: Vec<Element> = vec![target];
            candidates.extend((n..size).filter(|&j| shadow[j] == target));
            table.push(candidates[rng.gen_range(0..candidates.len())]);
        }
        fn_tables.push(table);
    }
    let mut rel_tables = Vec::with_capacity(sig.relations().len());
    for (i, sym) in sig.relations().iter().enumerate() {
        let r = RelId(i);
        let mut table = Vec::new();
        for tuple in tuples(size, sym.arity) {
            let shadow_tuple: Vec<Element> = tuple.iter().map(|&x| shadow[x]).collect();
            if a.rel_holds(r, &shadow_tuple) && rng.gen_bool(0.4) {
                table.push(tuple);
            }
        }
        rel_tables.push(table);
    }
    FiniteStructure::new(Arc::clone(sig), size, fn_tables, rel_tables).unwrap()
}

enum Mutation {
    RemoveRelTuple(RelId, Vec<Element>),
    AddRelTuple(RelId, Vec<Element>),
    RedirectFn(FuncId, Vec<Element>, Element),
}

/// A mutation of the extension violating exactly one diagram sentence, with
/// that sentence.
fn pick_mutation(
    rng: &mut ChaCha8Rng,
    a: &FiniteStructure,
    exp_sig: &Arc<Signature>,
    junk: usize,
) -> Option<(Mutation, DiagramSentence)> {
    let consts = |tuple: &[Element]| -> Vec<FuncId> {
        tuple
            .iter()
            .map(|&e| exp_sig.element_constant(e).unwrap())
            .collect()
    };
    let mut options: Vec<(Mutation, DiagramSentence)> = Vec::new();
    for (i, sym) in a.sig().relations().iter().enumerate() {
        let r = RelId(i);
        for tuple in tuples(a.size(), sym.arity) {
            if a.rel_holds(r, &tuple) {
                options.push((
                    Mutation::RemoveRelTuple(r, tuple.clone()),
                    DiagramSentence {
                        atom: FlatAtom::Rel(r, consts(&tuple)),
                        negated: false,
                    },
                ));
            } else {
                options.push((
                    Mutation::AddRelTuple(r, tuple.clone()),
                    DiagramSentence {
                        atom: FlatAtom::Rel(r, consts(&tuple)),
                        negated: true,
                    },
                ));
            }
        }
    }
    if junk > 0 {
        for (i, sym) in a.sig().functions().iter().enumerate() {
            if sym.arity == 0 {
                continue;
            }
            let f = FuncId(i);
            for args in tuples(a.size(), sym.arity) {
                let old = a.apply(f, &args);
                let target = a.size() + rng.gen_range(0..junk);
                options.push((
                    Mutation::RedirectFn(f, args.clone(), target),
                    DiagramSentence {
                        atom: FlatAtom::FnEq(
                            f,
                            consts(&args),
                            exp_sig.element_constant(old).unwrap(),
                        ),
                        negated: false,
                    },
                ));
            }
        }
    }
    if options.is_empty() {
        return None;
    }
    let pick = rng.gen_range(0..options.len());
    Some(options.swap_remove(pick))
}

fn apply_mutation(b: &FiniteStructure, m: &Mutation) -> FiniteStructure {
    let sig = b.sig();
    let mut fn_tables: Vec<Vec<Element>> = (0..sig.functions().len())
        .map(|i| b.fn_table(FuncId(i)).to_vec())
        .collect();
    let mut rel_tables: Vec<Vec<Vec<Element>>> = (0..sig.relations().len())
        .map(|i| b.rel_table(RelId(i)).to_vec())
        .collect();
    match m {
        Mutation::RemoveRelTuple(r, tuple) => {
            rel_tables[r.0].retain(|t| t != tuple);
        }
        Mutation::AddRelTuple(r, tuple) => {
            rel_tables[r.0].push(tuple.clone());
        }
        Mutation::RedirectFn(f, args, target) => {
            let idx = crate::structure::table_index(b.size(), args);
            fn_tables[f.0][idx] = *target;
        }
    }
    FiniteStructure::new(Arc::clone(sig), b.size(), fn_tables, rel_tables).unwrap()
}

/// A deterministic deep-conflict instance: two closed terms meet in `B`
/// while naming different elements of `A`, invisible to the flat negative
/// diagram.
fn conflict_instance() -> (FiniteStructure, FiniteStructure, Diagram) {
    let sig = Signature::from_symbols([("f".to_string(), SymbolKind::Function, 1)]).unwrap();
    let a = FiniteStructure::new(sig.clone(), 2, vec![vec![1, 0]], vec![]).unwrap();
    let diag = Diagram::of(&a).unwrap();
    let b_base =
        FiniteStructure::new(sig, 3, vec![vec![2, 2, 2]], vec![]).unwrap();
    let b = expand_structure(&b_base, diag.expanded_sig(), &[0, 1]).unwrap();
    (a, b, diag)
}

/// Diagram-method audit: embeddings from full diagrams, exact violation
/// reporting under mutation, quotient presentations from negative diagrams,
/// and conflict detection.
pub fn run_diagram_suite(seed: u64, cases: u64, limits: &Limits) -> Result<SuiteOutcome> {
    let _ = limits;
    let mut out = SuiteOutcome::new("diagram", seed, cases);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = witness_sig_pool();
    let mut embeds = 0u64;
    let mut mutations = 0u64;
    let mut quotients = 0u64;
    let mut conflicts = 0u64;
    for case in 0..cases {
        let sig = pool[rng.gen_range(0..pool.len())].clone();
        let size = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, size);
        let diag = match Diagram::of(&a) {
            Ok(d) => d,
            Err(e) => {
                out.fail(case, format!("diagram construction failed: {e}"));
                continue;
            }
        };
        let exp_sig = diag.expanded_sig().clone();
        let junk = rng.gen_range(1..=2);
        let identity: Vec<Element> = a.elements().collect();

        // Full diagram: the constant map embeds A into the extension.
        let b_base = diagram_extension(&mut rng, &a, junk);
        let b = match expand_structure(&b_base, &exp_sig, &identity) {
            Ok(b) => b,
            Err(e) => {
                out.fail(case, format!("expansion failed: {e}"));
                continue;
            }
        };
        out.checks += 1;
        match embed_from_given_diagram(&a, &b, &diag) {
            Ok(emb) => {
                embeds += 1;
                if emb.map() != identity.as_slice() {
                    out.fail(case, "embedding is not the constant map");
                }
                if let Err(v) = emb.reverify() {
                    out.fail(case, format!("embedding failed re-verification: {v}"));
                }
            }
            Err(e) => out.fail(case, format!("embedding construction failed: {e}")),
        }

        // One-sentence mutation: the exact sentence is reported.
        if let Some((mutation, expected)) = pick_mutation(&mut rng, &a, &exp_sig, junk) {
            out.checks += 1;
            mutations += 1;
            let mutated = apply_mutation(&b, &mutation);
            match diag.first_violated(&mutated) {
                Ok(Some(got)) if got == expected => {
                    if embed_from_given_diagram(&a, &mutated, &diag).is_ok() {
                        out.fail(case, "embedding accepted a mutated target");
                    }
                }
                Ok(got) => out.fail(
                    case,
                    format!(
                        "expected violation `{}`, got {:?}",
                        expected.display(&exp_sig),
                        got.map(|s| s.display(&exp_sig))
                    ),
                ),
                Err(e) => out.fail(case, format!("violation scan failed: {e}")),
            }
        }

        // Negative diagram: shadow extensions always present a quotient.
        let junk2 = rng.gen_range(0..=2);
        let b2_base = shadow_extension(&mut rng, &a, junk2);
        let b2 = match expand_structure(&b2_base, &exp_sig, &identity) {
            Ok(b) => b,
            Err(e) => {
                out.fail(case, format!("expansion failed: {e}"));
                continue;
            }
        };
        out.checks += 1;
        match quotient_from_given_diagram(&a, &b2, &diag) {
            Ok(QuotientOutcome::Presented(q)) => {
                quotients += 1;
                if let Err(v) = q.surjection.reverify() {
                    out.fail(case, format!("surjection failed re-verification: {v}"));
                }
                if !q.surjection.is_surjective() {
                    out.fail(case, "quotient map is not onto");
                }
                if let Err(v) = q.inclusion.reverify() {
                    out.fail(case, format!("inclusion failed re-verification: {v}"));
                }
            }
            Ok(QuotientOutcome::Conflict(c)) => {
                out.fail(case, format!("unexpected pairing conflict: {}", c.rendered()));
            }
            Err(e) => out.fail(case, format!("quotient construction failed: {e}")),
        }

        // Deep conflicts are detected and cite a separating term pair.
        if case % 5 == 0 {
            out.checks += 1;
            conflicts += 1;
            let (ca, cb, cdiag) = conflict_instance();
            match quotient_from_given_diagram(&ca, &cb, &cdiag) {
                Ok(QuotientOutcome::Conflict(
                    crate::morphism::PairingConflict::TermPair { value_a, value_b, .. },
                )) => {
                    if value_a == value_b {
                        out.fail(case, "conflict values do not differ");
                    }
                }
                Ok(QuotientOutcome::Conflict(other)) => {
                    out.fail(case, format!("expected a term-pair conflict, got {other:?}"));
                }
                Ok(QuotientOutcome::Presented(_)) => {
                    out.fail(case, "conflict instance produced a presentation");
                }
                Err(e) => out.fail(case, format!("conflict instance errored: {e}")),
            }
        }
    }
    out.notes.push(format!(
        "embeddings: {embeds}, mutations: {mutations}, quotients: {quotients}, conflicts: {conflicts}"
    ));
    Ok(out)
}

fn random_catalog(
    rng: &mut ChaCha8Rng,
    sig: &Arc<Signature>,
    a: &FiniteStructure,
) -> StructureCatalog {
    let count = rng.gen_range(1..=3);
    let mut members = Vec::with_capacity(count);
    for i in 0..count {
        let s = if i == 0 && rng.gen_bool(0.25) {
            a.clone()
        } else {
            {
                let size = rng.gen_range(1..=3);
                random_structure(rng, sig, size)
            }
        };
        members.push((format!("M{i}"), s));
    }
    StructureCatalog::new(Arc::clone(sig), members).unwrap()
}

/// Externally re-checks a refutation: valid on every member, false in `A`
/// at the reported assignment.
fn recheck_refutation(
    a: &FiniteStructure,
    catalog: &StructureCatalog,
    r: &crate::engines::Refutation,
    limits: &Limits,
) -> Result<()> {
    let class = catalog.class_satisfies(&r.formula, limits)?;
    if !class.holds {
        return Err(Error::Internal(format!(
            "refutation `{}` is not valid on the catalog",
            r.formula
        )));
    }
    if a.clause_holds_at(&r.formula, &r.falsifying)? {
        return Err(Error::Internal(format!(
            "refutation `{}` is not falsified at {}",
            r.formula, r.falsifying
        )));
    }
    Ok(())
}

/// When the refuting clause is small, it must appear in the bounded
/// validity set of the catalog.
fn crosscheck_bounded_axiomatization(
    catalog: &StructureCatalog,
    r: &crate::engines::Refutation,
    limits: &Limits,
) -> Result<bool> {
    let canon = r.formula.canonicalize();
    if canon.free_vars().len() > 2
        || canon.negatives().len() > 1
        || canon.max_term_depth() > 1
    {
        return Ok(false);
    }
    let bounds = EnumerationBounds::new(2, 1, 1);
    let valid = valid_formulas(catalog, &bounds, KindFilter::All, limits)?;
    if !valid.iter().any(|p| *p == canon) {
        return Err(Error::Internal(format!(
            "refutation `{canon}` missing from the bounded validity set"
        )));
    }
    Ok(true)
}

/// Dichotomy audit for the quasivariety witness procedure.
pub fn run_malcev_suite(seed: u64, cases: u64, limits: &Limits) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("malcev", seed, cases);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = witness_sig_pool();
    let mut embedded = 0u64;
    let mut refuted = 0u64;
    let mut crosschecked = 0u64;
    for case in 0..cases {
        let sig = pool[rng.gen_range(0..pool.len())].clone();
        let size = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, size);
        let catalog = random_catalog(&mut rng, &sig, &a);
        out.checks += 1;
        match malcev_witness(&a, &catalog, MalcevMode::Collapsed, limits) {
            Ok(WitnessResult::Embedded(Embedded::IntoReducedProduct {
                product,
                embedding,
                ..
            })) => {
                embedded += 1;
                if let Err(v) = embedding.reverify() {
                    out.fail(case, format!("embedding failed re-verification: {v}"));
                }
                if let Err(e) = product.filter().verify_laws() {
                    out.fail(case, format!("filter laws failed: {e}"));
                }
                if embedding.target() != product.carrier() {
                    out.fail(case, "embedding target is not the carrier");
                }
            }
            Ok(WitnessResult::Embedded(_)) => {
                out.fail(case, "unexpected construction shape");
            }
            Ok(WitnessResult::Refuted(r)) => {
                refuted += 1;
                if let Err(e) = recheck_refutation(&a, &catalog, &r, limits) {
                    out.fail(case, e.to_string());
                }
                match crosscheck_bounded_axiomatization(&catalog, &r, limits) {
                    Ok(true) => crosschecked += 1,
                    Ok(false) => {}
                    Err(e) => out.fail(case, e.to_string()),
                }
            }
            Err(e) => out.fail(case, format!("witness procedure errored: {e}")),
        }
    }
    out.notes.push(format!(
        "embedded: {embedded}, refuted: {refuted}, crosschecked: {crosschecked}"
    ));
    Ok(out)
}

/// Dichotomy audit for the variety witness procedure.
pub fn run_birkhoff_suite(seed: u64, cases: u64, limits: &Limits) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("birkhoff", seed, cases);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = witness_sig_pool();
    let mut presented = 0u64;
    let mut refuted = 0u64;
    let mut crosschecked = 0u64;
    for case in 0..cases {
        let sig = pool[rng.gen_range(0..pool.len())].clone();
        let size = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, size);
        let catalog = random_catalog(&mut rng, &sig, &a);
        out.checks += 1;
        match birkhoff_witness(&a, &catalog, limits) {
            Ok(WitnessResult::Embedded(Embedded::QuotientOfSubproduct {
                product,
                sub,
                inclusion,
                surjection,
                ..
            })) => {
                presented += 1;
                if let Err(v) = inclusion.reverify() {
                    out.fail(case, format!("inclusion failed re-verification: {v}"));
                }
                if let Err(v) = surjection.reverify() {
                    out.fail(case, format!("surjection failed re-verification: {v}"));
                }
                if !surjection.is_surjective() {
                    out.fail(case, "surjection is not onto");
                }
                if inclusion.target() != product.carrier() {
                    out.fail(case, "inclusion target is not the product carrier");
                }
                if surjection.source() != &sub || inclusion.source() != &sub {
                    out.fail(case, "presentation pieces disagree on the substructure");
                }
                if surjection.target() != &a {
                    out.fail(case, "surjection does not land in A");
                }
                for proj in product.projections() {
                    if let Err(v) = proj.reverify() {
                        out.fail(case, format!("projection failed re-verification: {v}"));
                    }
                }
            }
            Ok(WitnessResult::Embedded(_)) => {
                out.fail(case, "unexpected construction shape");
            }
            Ok(WitnessResult::Refuted(r)) => {
                refuted += 1;
                if !r.formula.classify().identity {
                    out.fail(case, format!("refutation `{}` is not an identity", r.formula));
                }
                if let Err(e) = recheck_refutation(&a, &catalog, &r, limits) {
                    out.fail(case, e.to_string());
                }
                match crosscheck_bounded_axiomatization(&catalog, &r, limits) {
                    Ok(true) => crosschecked += 1,
                    Ok(false) => {}
                    Err(e) => out.fail(case, e.to_string()),
                }
            }
            Err(e) => out.fail(case, format!("witness procedure errored: {e}")),
        }
    }
    out.notes.push(format!(
        "presented: {presented}, refuted: {refuted}, crosschecked: {crosschecked}"
    ));
    Ok(out)
}

/// Dispatch by suite name, as exposed on the command line.
pub fn run_suite(name: &str, seed: u64, cases: u64, limits: &Limits) -> Result<SuiteOutcome> {
    match name {
        "los" => run_los_suite(seed, cases, limits),
        "horn" => run_horn_suite(seed, cases, limits),
        "diagram" => run_diagram_suite(seed, cases, limits),
        "malcev" => run_malcev_suite(seed, cases, limits),
        "birkhoff" => run_birkhoff_suite(seed, cases, limits),
        other => Err(Error::Usage(format!(
            "unknown suite `{other}`: expected los | horn | diagram | malcev | birkhoff"
        ))),
    }
}
