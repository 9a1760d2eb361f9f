use fmw::engines::{birkhoff_witness, WitnessResult, Embedded};
use fmw::limits::Limits;
use fmw::structure::{FiniteStructure, StructureCatalog};
use fmw::syntax::{Signature, SymbolKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn random_structure(rng: &mut ChaCha8Rng, sig: &Arc<Signature>, size: usize) -> FiniteStructure {
    let mut fn_tables = Vec::new();
    for sym in sig.functions() {
        let entries = size.pow(sym.arity as u32);
        fn_tables.push((0..entries).map(|_| rng.gen_range(0..size)).collect());
    }
    let mut rel_tables = Vec::new();
    for sym in sig.relations() {
        let mut table = Vec::new();
        for tuple in fmw::structure::tuples(size, sym.arity) {
            if rng.gen_bool(0.4) { table.push(tuple); }
        }
        rel_tables.push(table);
    }
    FiniteStructure::new(Arc::clone(sig), size, fn_tables, rel_tables).unwrap()
}

fn main() {
    let pool: Vec<Arc<Signature>> = vec![
        Signature::from_symbols([("r".to_string(), SymbolKind::Relation, 2)]).unwrap(),
        Signature::from_symbols([("m".to_string(), SymbolKind::Function, 2)]).unwrap(),
        Signature::from_symbols([
            ("u".to_string(), SymbolKind::Function, 1),
            ("r".to_string(), SymbolKind::Relation, 2),
        ]).unwrap(),
        Signature::from_symbols([("f".to_string(), SymbolKind::Function, 1)]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    let limits = Limits::default();
    for case in 0..50u64 {
        let sig = pool[rng.gen_range(0..pool.len())].clone();
        let size = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, size);
        let count = rng.gen_range(1..=3);
        let mut members = Vec::new();
        for i in 0..count {
            let s = if i == 0 && rng.gen_bool(0.25) {
                a.clone()
            } else {
                let size = rng.gen_range(1..=3);
                random_structure(&mut rng, &sig, size)
            };
            members.push((format!("M{i}"), s));
        }
        let catalog = StructureCatalog::new(Arc::clone(&sig), members).unwrap();
        match birkhoff_witness(&a, &catalog, &limits) {
            Ok(WitnessResult::Embedded(Embedded::QuotientOfSubproduct { product, .. })) => {
                if case == 43 || product.factors().len() > 5 {
                    println!("case {case}: {} factors, sig fns={} rels={}", product.factors().len(),
                        sig.functions().len(), sig.relations().len());
                }
            }
            Ok(_) => {}
            Err(e) => {
                println!("case {case} ERROR: {e}; sig fns={:?} rels={:?} |A|={} members={}",
                    sig.functions().iter().map(|s|&s.name).collect::<Vec<_>>(),
                    sig.relations().iter().map(|s|&s.name).collect::<Vec<_>>(),
                    a.size(), catalog.members().len());
            }
        }
    }
}
