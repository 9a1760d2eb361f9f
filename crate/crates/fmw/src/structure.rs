//! Finite structures over a signature, term evaluation, and Horn-clause
//! satisfaction under the universal-closure convention: a structure satisfies
//! a clause iff every assignment of elements to its free variables does.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::syntax::{AtomicFormula, FuncId, HornFormula, RelId, Signature, Term};

pub type Element = usize;

/// A nonempty finite universe `0..size` with a total table per function
/// symbol and a tuple set per relation symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteStructure {
    sig: Arc<Signature>,
    size: usize,
    labels: Option<Vec<String>>,
    fn_tables: Vec<Vec<Element>>,
    rel_tables: Vec<Vec<Vec<Element>>>,
}

/// Iterates all `k`-tuples over `0..n` in lexicographic order.
pub fn tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<Element>> {
    let total = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    let mut current: Option<Vec<Element>> = if n == 0 && k > 0 { None } else { Some(vec![0; k]) };
    let mut emitted: u128 = 0;
    std::iter::from_fn(move || {
        let cur = current.clone()?;
        emitted += 1;
        if emitted >= total {
            current = None;
        } else if let Some(t) = current.as_mut() {
            for i in (0..k).rev() {
                t[i] += 1;
                if t[i] < n {
                    break;
                }
                t[i] = 0;
            }
        }
        Some(cur)
    })
}

pub(crate) fn table_index(n: usize, args: &[Element]) -> usize {
    let mut idx = 0;
    for &a in args {
        idx = idx * n + a;
    }
    idx
}

impl FiniteStructure {
    /// Validates totality and ranges. `fn_tables[i]` lists values in
    /// lexicographic argument order and must have length `size^arity`.
    pub fn new(
        sig: Arc<Signature>,
        size: usize,
        fn_tables: Vec<Vec<Element>>,
        rel_tables: Vec<Vec<Vec<Element>>>,
    ) -> Result<FiniteStructure> {
        if size == 0 {
            return Err(Error::Usage("universes are nonempty (size >= 1)".into()));
        }
        if fn_tables.len() != sig.functions().len() || rel_tables.len() != sig.relations().len() {
            return Err(Error::SignatureMismatch {
                context: "one table per symbol, no extras".into(),
            });
        }
        for (i, table) in fn_tables.iter().enumerate() {
            let arity = sig.functions()[i].arity;
            let expect = (size as u128).pow(arity as u32);
            if table.len() as u128 != expect {
                return Err(Error::SignatureMismatch {
                    context: format!(
                        "function `{}` table has {} entries, expected {}",
                        sig.functions()[i].name,
                        table.len(),
                        expect
                    ),
                });
            }
            if let Some(&v) = table.iter().find(|&&v| v >= size) {
                return Err(Error::OutOfRange { value: v, universe: size });
            }
        }
        let mut rel_tables = rel_tables;
        for (i, table) in rel_tables.iter_mut().enumerate() {
            let arity = sig.relations()[i].arity;
            for tuple in table.iter() {
                if tuple.len() != arity {
                    return Err(Error::SignatureMismatch {
                        context: format!(
                            "relation `{}` holds a tuple of length {}, arity is {}",
                            sig.relations()[i].name,
                            tuple.len(),
                            arity
                        ),
                    });
                }
                if let Some(&v) = tuple.iter().find(|&&v| v >= size) {
                    return Err(Error::OutOfRange { value: v, universe: size });
                }
            }
            table.sort();
            table.dedup();
        }
        Ok(FiniteStructure {
            sig,
            size,
            labels: None,
            fn_tables,
            rel_tables,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> FiniteStructure {
        assert_eq!(labels.len(), self.size);
        self.labels = Some(labels);
        self
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn elements(&self) -> std::ops::Range<Element> {
        0..self.size
    }

    pub fn label(&self, e: Element) -> String {
        match &self.labels {
            Some(l) => l[e].clone(),
            None => e.to_string(),
        }
    }

    pub fn fn_table(&self, f: FuncId) -> &[Element] {
        &self.fn_tables[f.0]
    }

    pub fn rel_table(&self, r: RelId) -> &[Vec<Element>] {
        &self.rel_tables[r.0]
    }

    pub fn apply(&self, f: FuncId, args: &[Element]) -> Element {
        self.fn_tables[f.0][table_index(self.size, args)]
    }

    pub fn rel_holds(&self, r: RelId, args: &[Element]) -> bool {
        self.rel_tables[r.0].binary_search_by(|t| t.as_slice().cmp(args)).is_ok()
    }

    /// Evaluates a term under an assignment by recursion on the tables.
    pub fn eval_term(&self, asg: &Assignment, t: &Term) -> Result<Element> {
        match t {
            Term::Var(v) => asg
                .get(v)
                .ok_or_else(|| Error::UnboundVariable { var: v.clone() }),
            Term::App(f, args) => {
                if f.0 >= self.fn_tables.len() {
                    return Err(Error::UnknownName {
                        name: format!("function symbol #{}", f.0),
                    });
                }
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_term(asg, a)?);
                }
                Ok(self.apply(*f, &vals))
            }
        }
    }

    pub fn eval_atom(&self, asg: &Assignment, atom: &AtomicFormula) -> Result<bool> {
        match atom {
            AtomicFormula::Rel(r, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_term(asg, a)?);
                }
                Ok(self.rel_holds(*r, &vals))
            }
            AtomicFormula::Eq(l, rt) => Ok(self.eval_term(asg, l)? == self.eval_term(asg, rt)?),
        }
    }

    /// The clause body at one assignment: some premise fails or the
    /// conclusion holds.
    pub fn clause_holds_at(&self, phi: &HornFormula, asg: &Assignment) -> Result<bool> {
        for neg in phi.negatives() {
            if !self.eval_atom(asg, neg)? {
                return Ok(true);
            }
        }
        match phi.positive() {
            Some(p) => self.eval_atom(asg, p),
            None => Ok(false),
        }
    }

    /// Brute-force satisfaction over all `size^n` assignments, `n` the number
    /// of free variables. When the clause fails, the witness is the
    /// lexicographically least falsifying assignment.
    pub fn satisfies(&self, phi: &HornFormula, limits: &Limits) -> Result<Satisfaction> {
        if !phi.sig().is_prefix_of(&self.sig) {
            return Err(Error::SignatureMismatch {
                context: "formula symbols are not part of the structure signature".into(),
            });
        }
        let n = phi.free_vars().len();
        let needed = (self.size as u128).pow(n as u32);
        limits.check("assignment enumeration", needed, limits.max_assignments)?;
        let compiled = CompiledClause::compile(phi)?;
        let mut values = vec![0; n];
        loop {
            if !compiled.holds_at(self, &values) {
                return Ok(Satisfaction {
                    holds: false,
                    witness: Some(Assignment::new(phi.free_vars().to_vec(), values)),
                });
            }
            // Mixed-radix increment; the first variable is most significant.
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(Satisfaction {
                        holds: true,
                        witness: None,
                    });
                }
                i -= 1;
                values[i] += 1;
                if values[i] < self.size {
                    break;
                }
                values[i] = 0;
            }
        }
    }

    /// Drops the element-constant tables of a structure over an expanded
    /// signature, recovering the base-signature structure.
    pub fn reduct(&self) -> Result<FiniteStructure> {
        let exp = self.sig.expansion().ok_or(Error::NotExpanded)?;
        let base_fns = exp.base.functions().len();
        Ok(FiniteStructure {
            sig: Arc::clone(&exp.base),
            size: self.size,
            labels: self.labels.clone(),
            fn_tables: self.fn_tables[..base_fns].to_vec(),
            rel_tables: self.rel_tables.clone(),
        })
    }
}

/// A clause with variables resolved to positions, for the satisfaction hot
/// path: evaluation needs no name lookups and no per-assignment allocation.
pub(crate) enum CompiledTerm {
    Var(usize),
    App(FuncId, Vec<CompiledTerm>),
}

pub(crate) enum CompiledAtom {
    Rel(RelId, Vec<CompiledTerm>),
    Eq(CompiledTerm, CompiledTerm),
}

pub(crate) struct CompiledClause {
    negatives: Vec<CompiledAtom>,
    positive: Option<CompiledAtom>,
}

impl CompiledClause {
    pub(crate) fn compile(phi: &HornFormula) -> Result<CompiledClause> {
        fn cterm(t: &Term, vars: &[String]) -> Result<CompiledTerm> {
            Ok(match t {
                Term::Var(v) => CompiledTerm::Var(
                    vars.iter()
                        .position(|w| w == v)
                        .ok_or_else(|| Error::UnboundVariable { var: v.clone() })?,
                ),
                Term::App(f, args) => CompiledTerm::App(
                    *f,
                    args.iter()
                        .map(|a| cterm(a, vars))
                        .collect::<Result<Vec<_>>>()?,
                ),
            })
        }
        fn catom(a: &AtomicFormula, vars: &[String]) -> Result<CompiledAtom> {
            Ok(match a {
                AtomicFormula::Rel(r, args) => CompiledAtom::Rel(
                    *r,
                    args.iter()
                        .map(|t| cterm(t, vars))
                        .collect::<Result<Vec<_>>>()?,
                ),
                AtomicFormula::Eq(l, r) => {
                    CompiledAtom::Eq(cterm(l, vars)?, cterm(r, vars)?)
                }
            })
        }
        let vars = phi.free_vars();
        Ok(CompiledClause {
            negatives: phi
                .negatives()
                .iter()
                .map(|a| catom(a, vars))
                .collect::<Result<Vec<_>>>()?,
            positive: phi.positive().map(|a| catom(a, vars)).transpose()?,
        })
    }

    fn eval_args(
        s: &FiniteStructure,
        args: &[CompiledTerm],
        values: &[Element],
        buf: &mut [Element; 8],
        spill: &mut Vec<Element>,
    ) -> usize {
        if args.len() <= 8 {
            for (i, a) in args.iter().enumerate() {
                buf[i] = Self::eval_term(s, a, values);
            }
        } else {
            spill.clear();
            spill.extend(args.iter().map(|a| Self::eval_term(s, a, values)));
        }
        args.len()
    }

    fn eval_term(s: &FiniteStructure, t: &CompiledTerm, values: &[Element]) -> Element {
        match t {
            CompiledTerm::Var(i) => values[*i],
            CompiledTerm::App(f, args) => {
                let mut buf = [0 as Element; 8];
                let mut spill = Vec::new();
                let n = Self::eval_args(s, args, values, &mut buf, &mut spill);
                if n <= 8 {
                    s.apply(*f, &buf[..n])
                } else {
                    s.apply(*f, &spill)
                }
            }
        }
    }

    fn eval_atom(s: &FiniteStructure, a: &CompiledAtom, values: &[Element]) -> bool {
        match a {
            CompiledAtom::Rel(r, args) => {
                let mut buf = [0 as Element; 8];
                let mut spill = Vec::new();
                let n = Self::eval_args(s, args, values, &mut buf, &mut spill);
                if n <= 8 {
                    s.rel_holds(*r, &buf[..n])
                } else {
                    s.rel_holds(*r, &spill)
                }
            }
            CompiledAtom::Eq(l, r) => {
                Self::eval_term(s, l, values) == Self::eval_term(s, r, values)
            }
        }
    }

    pub(crate) fn holds_at(&self, s: &FiniteStructure, values: &[Element]) -> bool {
        for neg in &self.negatives {
            if !Self::eval_atom(s, neg, values) {
                return true;
            }
        }
        match &self.positive {
            Some(p) => Self::eval_atom(s, p, values),
            None => false,
        }
    }
}

/// A total map from a formula's free variables to universe elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    vars: Vec<String>,
    values: Vec<Element>,
}

impl Assignment {
    pub fn new(vars: Vec<String>, values: Vec<Element>) -> Assignment {
        assert_eq!(vars.len(), values.len());
        Assignment { vars, values }
    }

    pub fn empty() -> Assignment {
        Assignment {
            vars: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn get(&self, var: &str) -> Option<Element> {
        self.vars
            .iter()
            .position(|v| v == var)
            .map(|i| self.values[i])
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn values(&self) -> &[Element] {
        &self.values
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vars.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, (v, x)) in self.vars.iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}={x}")?;
        }
        Ok(())
    }
}

/// Outcome of a satisfaction check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Satisfaction {
    pub holds: bool,
    pub witness: Option<Assignment>,
}

/// Outcome of a class-level satisfaction check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSatisfaction {
    pub holds: bool,
    pub failing: Option<(String, Assignment)>,
}

/// A named finite list of structures over one shared signature; the
/// desk-scale stand-in for a class of structures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureCatalog {
    sig: Arc<Signature>,
    members: Vec<(String, FiniteStructure)>,
}

impl StructureCatalog {
    pub fn new(
        sig: Arc<Signature>,
        members: Vec<(String, FiniteStructure)>,
    ) -> Result<StructureCatalog> {
        for (name, s) in &members {
            if s.sig() != &sig {
                return Err(Error::SignatureMismatch {
                    context: format!("catalog member `{name}` is over a different signature"),
                });
            }
            if members.iter().filter(|(n, _)| n == name).count() > 1 {
                return Err(Error::DuplicateName { name: name.clone() });
            }
        }
        Ok(StructureCatalog { sig, members })
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn members(&self) -> &[(String, FiniteStructure)] {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FiniteStructure> {
        self.members
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    /// Every member satisfies the clause; the first failing member in
    /// catalog order is reported. An empty catalog satisfies everything.
    pub fn class_satisfies(&self, phi: &HornFormula, limits: &Limits) -> Result<ClassSatisfaction> {
        for (name, member) in &self.members {
            let sat = member.satisfies(phi, limits)?;
            if !sat.holds {
                return Ok(ClassSatisfaction {
                    holds: false,
                    failing: Some((name.clone(), sat.witness.unwrap())),
                });
            }
        }
        Ok(ClassSatisfaction {
            holds: true,
            failing: None,
        })
    }
}

/// The one-element structure in which every relation holds on the diagonal
/// tuple and every function collapses to the single element.
pub fn unit_structure(sig: &Arc<Signature>) -> FiniteStructure {
    let fn_tables = sig.functions().iter().map(|_| vec![0]).collect();
    let rel_tables = sig
        .relations()
        .iter()
        .map(|r| vec![vec![0; r.arity]])
        .collect();
    FiniteStructure::new(Arc::clone(sig), 1, fn_tables, rel_tables)
        .expect("unit structure is always well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_formula;
    use crate::syntax::SymbolKind;

    pub(crate) fn mag_sig() -> Arc<Signature> {
        Signature::from_symbols([("m".to_string(), SymbolKind::Function, 2)]).unwrap()
    }

    pub(crate) fn graph_sig() -> Arc<Signature> {
        Signature::from_symbols([("r".to_string(), SymbolKind::Relation, 2)]).unwrap()
    }

    pub(crate) fn z2() -> FiniteStructure {
        FiniteStructure::new(mag_sig(), 2, vec![vec![0, 1, 1, 0]], vec![]).unwrap()
    }

    pub(crate) fn left_proj() -> FiniteStructure {
        FiniteStructure::new(mag_sig(), 2, vec![vec![0, 0, 1, 1]], vec![]).unwrap()
    }

    fn comm() -> HornFormula {
        parse_formula("|- m(x,y) = m(y,x)", &mag_sig()).unwrap()
    }

    #[test]
    fn eval_constant_table() {
        let sig = Signature::from_symbols([("c".to_string(), SymbolKind::Function, 0)]).unwrap();
        let a = FiniteStructure::new(sig.clone(), 3, vec![vec![2]], vec![]).unwrap();
        let t = Term::constant(sig.func_id("c").unwrap());
        assert_eq!(a.eval_term(&Assignment::empty(), &t).unwrap(), 2);
    }

    #[test]
    fn eval_nested_term_in_z2() {
        // m(m(x,x),y) at x=1, y=1: m(1,1)=0, then m(0,1)=1.
        let a = z2();
        let m = a.sig().func_id("m").unwrap();
        let x = Term::Var("x".into());
        let y = Term::Var("y".into());
        let t = Term::App(m, vec![Term::App(m, vec![x.clone(), x]), y]);
        let asg = Assignment::new(vec!["x".into(), "y".into()], vec![1, 1]);
        assert_eq!(a.eval_term(&asg, &t).unwrap(), 1);
    }

    #[test]
    fn eval_bare_variable() {
        let a = FiniteStructure::new(graph_sig(), 4, vec![], vec![vec![]]).unwrap();
        let asg = Assignment::new(vec!["x".into()], vec![3]);
        assert_eq!(a.eval_term(&asg, &Term::Var("x".into())).unwrap(), 3);
    }

    #[test]
    fn eval_unbound_variable_errors() {
        let a = z2();
        let err = a.eval_term(&Assignment::empty(), &Term::Var("x".into()));
        assert!(matches!(err, Err(Error::UnboundVariable { .. })));
    }

    #[test]
    fn z2_satisfies_commutativity() {
        let sat = z2().satisfies(&comm(), &Limits::default()).unwrap();
        assert!(sat.holds);
    }

    #[test]
    fn left_projection_fails_commutativity_with_least_witness() {
        let sat = left_proj().satisfies(&comm(), &Limits::default()).unwrap();
        assert!(!sat.holds);
        // m(0,1)=0 but m(1,0)=1; (0,0) satisfies, so (0,1) is least.
        let w = sat.witness.unwrap();
        assert_eq!(w.values(), &[0, 1]);
    }

    #[test]
    fn unit_satisfies_symmetry_clause() {
        let sig = graph_sig();
        let phi = parse_formula("r(x,y) |- r(y,x)", &sig).unwrap();
        let u = unit_structure(&sig);
        assert!(u.satisfies(&phi, &Limits::default()).unwrap().holds);
    }

    #[test]
    fn unit_structure_shapes() {
        let sig = graph_sig();
        let u = unit_structure(&sig);
        assert_eq!(u.size(), 1);
        assert_eq!(u.rel_table(RelId(0)), &[vec![0, 0]]);

        let empty = Arc::new(Signature::new());
        let u2 = unit_structure(&empty);
        assert_eq!(u2.size(), 1);

        let u3 = unit_structure(&mag_sig());
        assert_eq!(u3.fn_table(FuncId(0)), &[0]);
    }

    #[test]
    fn class_satisfies_reports_first_failure() {
        let k = StructureCatalog::new(
            mag_sig(),
            vec![("Z2".into(), z2()), ("LeftProj".into(), left_proj())],
        )
        .unwrap();
        let res = k.class_satisfies(&comm(), &Limits::default()).unwrap();
        assert!(!res.holds);
        assert_eq!(res.failing.unwrap().0, "LeftProj");

        let only_z2 = StructureCatalog::new(mag_sig(), vec![("Z2".into(), z2())]).unwrap();
        assert!(only_z2.class_satisfies(&comm(), &Limits::default()).unwrap().holds);

        let empty = StructureCatalog::new(mag_sig(), vec![]).unwrap();
        assert!(empty.class_satisfies(&comm(), &Limits::default()).unwrap().holds);
    }

    #[test]
    fn satisfies_respects_assignment_cap() {
        let mut limits = Limits::default();
        limits.max_assignments = 3;
        let res = z2().satisfies(&comm(), &limits);
        assert!(matches!(res, Err(Error::Resource { .. })));
    }

    #[test]
    fn empty_universe_rejected() {
        assert!(FiniteStructure::new(mag_sig(), 0, vec![vec![]], vec![]).is_err());
    }

    /// Independent second evaluator: substitutes the assignment into the
    /// term to form a ground value bottom-up with explicit stacks, rather
    /// than the recursive environment evaluation used by `satisfies`.
    pub(crate) fn ground_eval(s: &FiniteStructure, asg: &Assignment, t: &Term) -> Element {
        enum Frame<'a> {
            Visit(&'a Term),
            Apply(FuncId, usize),
        }
        let mut work = vec![Frame::Visit(t)];
        let mut values: Vec<Element> = Vec::new();
        while let Some(frame) = work.pop() {
            match frame {
                Frame::Visit(Term::Var(v)) => values.push(asg.get(v).unwrap()),
                Frame::Visit(Term::App(f, args)) => {
                    work.push(Frame::Apply(*f, args.len()));
                    for a in args.iter().rev() {
                        work.push(Frame::Visit(a));
                    }
                }
                Frame::Apply(f, n) => {
                    let at = values.len() - n;
                    let args: Vec<Element> = values.drain(at..).collect();
                    values.push(s.apply(f, &args));
                }
            }
        }
        values.pop().unwrap()
    }

    fn independent_satisfies(s: &FiniteStructure, phi: &HornFormula) -> (bool, Option<Vec<Element>>) {
        let n = phi.free_vars().len();
        for values in tuples(s.size(), n) {
            let asg = Assignment::new(phi.free_vars().to_vec(), values.clone());
            let atom_true = |a: &AtomicFormula| match a {
                AtomicFormula::Rel(r, args) => {
                    let vals: Vec<Element> =
                        args.iter().map(|t| ground_eval(s, &asg, t)).collect();
                    s.rel_holds(*r, &vals)
                }
                AtomicFormula::Eq(l, r) => ground_eval(s, &asg, l) == ground_eval(s, &asg, r),
            };
            let body = phi.negatives().iter().any(|a| !atom_true(a))
                || phi.positive().map_or(false, |p| atom_true(p));
            if !body {
                return (false, Some(values));
            }
        }
        (true, None)
    }

    #[test]
    fn satisfies_agrees_with_independent_evaluator() {
        let sig = mag_sig();
        let corpus = [
            "|- m(x,y) = m(y,x)",
            "|- m(m(x,y),z) = m(x,m(y,z))",
            "m(x,y) = x |- m(y,x) = x",
            "m(x,x) = y |- false",
            "|- m(x,x) = x",
        ];
        for s in [z2(), left_proj(), unit_structure(&sig)] {
            for text in corpus {
                let phi = parse_formula(text, &sig).unwrap();
                let got = s.satisfies(&phi, &Limits::default()).unwrap();
                let (want_holds, want_witness) = independent_satisfies(&s, &phi);
                assert_eq!(got.holds, want_holds, "{text}");
                assert_eq!(
                    got.witness.map(|w| w.values().to_vec()),
                    want_witness,
                    "{text}"
                );
            }
        }
    }
}
