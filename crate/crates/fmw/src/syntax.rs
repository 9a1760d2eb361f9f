//! Symbolic syntax: signatures, terms, atomic formulas, and basic Horn clauses.
//!
//! A clause is kept in implication form: a list of premise atoms (the negated
//! disjuncts) and an optional conclusion atom. The empty clause is not a
//! formula and is rejected at construction time.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a function symbol within its signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncId(pub usize);

/// Index of a relation symbol within its signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Function,
    Relation,
    /// A fresh constant naming an element, added by signature expansion.
    ElementConstant,
}

/// A named symbol with a fixed finite arity. Constants are functions of arity 0.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
}

/// Records that a signature was obtained from `base` by appending one fresh
/// constant per element of a universe of size `universe_size`. The constant
/// for element `i` is the function symbol at index `base` function count + `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    pub base: Arc<Signature>,
    pub universe_size: usize,
}

/// A finite set of function and relation symbols with unique names.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Signature {
    functions: Vec<Symbol>,
    relations: Vec<Symbol>,
    expansion: Option<Expansion>,
}

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    /// Builds a signature from `(name, kind, arity)` declarations.
    pub fn from_symbols<I>(symbols: I) -> Result<Arc<Signature>>
    where
        I: IntoIterator<Item = (String, SymbolKind, usize)>,
    {
        let mut sig = Signature::new();
        for (name, kind, arity) in symbols {
            sig.insert(name, kind, arity)?;
        }
        Ok(Arc::new(sig))
    }

    fn insert(&mut self, name: String, kind: SymbolKind, arity: usize) -> Result<()> {
        if self.lookup(&name).is_some() {
            return Err(Error::DuplicateName { name });
        }
        let sym = Symbol { name, kind, arity };
        match kind {
            SymbolKind::Relation => self.relations.push(sym),
            SymbolKind::Function | SymbolKind::ElementConstant => {
                if kind == SymbolKind::ElementConstant && arity != 0 {
                    return Err(Error::Internal("element constants must have arity 0".into()));
                }
                self.functions.push(sym);
            }
        }
        Ok(())
    }

    pub fn functions(&self) -> &[Symbol] {
        &self.functions
    }

    pub fn relations(&self) -> &[Symbol] {
        &self.relations
    }

    pub fn function(&self, id: FuncId) -> &Symbol {
        &self.functions[id.0]
    }

    pub fn relation(&self, id: RelId) -> &Symbol {
        &self.relations[id.0]
    }

    /// All symbols, functions first, in declaration order.
    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.functions.iter().chain(self.relations.iter())
    }

    pub fn lookup(&self, name: &str) -> Option<(SymbolKind, usize, usize)> {
        if let Some(i) = self.functions.iter().position(|s| s.name == name) {
            let s = &self.functions[i];
            return Some((s.kind, i, s.arity));
        }
        if let Some(i) = self.relations.iter().position(|s| s.name == name) {
            return Some((SymbolKind::Relation, i, self.relations[i].arity));
        }
        None
    }

    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        self.functions.iter().position(|s| s.name == name).map(FuncId)
    }

    pub fn rel_id(&self, name: &str) -> Option<RelId> {
        self.relations.iter().position(|s| s.name == name).map(RelId)
    }

    /// 0-ary function symbols, i.e. constants (element constants included).
    pub fn constants(&self) -> impl Iterator<Item = FuncId> + '_ {
        self.functions
            .iter()
            .enumerate()
            .filter(|(_, s)| s.arity == 0)
            .map(|(i, _)| FuncId(i))
    }

    pub fn expansion(&self) -> Option<&Expansion> {
        self.expansion.as_ref()
    }

    /// For an expanded signature, the constant naming element `elem`.
    pub fn element_constant(&self, elem: usize) -> Option<FuncId> {
        let exp = self.expansion.as_ref()?;
        if elem < exp.universe_size {
            Some(FuncId(exp.base.functions.len() + elem))
        } else {
            None
        }
    }

    /// Inverse of [`element_constant`]: the element named by `f`, if `f` is a
    /// fresh constant of an expanded signature.
    pub fn constant_element(&self, f: FuncId) -> Option<usize> {
        let exp = self.expansion.as_ref()?;
        let base_fns = exp.base.functions.len();
        if f.0 >= base_fns && f.0 < base_fns + exp.universe_size {
            Some(f.0 - base_fns)
        } else {
            None
        }
    }

    /// Whether every symbol of this signature appears, same name/kind/arity and
    /// same index, as a prefix of `other`. Holds between a base signature and
    /// any of its expansions.
    pub fn is_prefix_of(&self, other: &Signature) -> bool {
        self.functions.len() <= other.functions.len()
            && self.functions == other.functions[..self.functions.len()]
            && self.relations == other.relations
    }
}

/// Adds one fresh constant per element of a universe of size `universe_size`.
/// Fresh names are `hint` followed by the element index; on collision with an
/// existing or previously generated name, underscores are appended until the
/// name is free.
pub fn expand_signature(
    base: &Arc<Signature>,
    universe_size: usize,
    name_hint: &str,
) -> Arc<Signature> {
    assert!(universe_size >= 1, "universes are nonempty");
    let mut sig = (**base).clone();
    let mut used: Vec<String> = sig.symbols().map(|s| s.name.clone()).collect();
    for i in 0..universe_size {
        let mut candidate = format!("{name_hint}{i}");
        while used.iter().any(|n| *n == candidate) {
            candidate.push('_');
        }
        used.push(candidate.clone());
        sig.functions.push(Symbol {
            name: candidate,
            kind: SymbolKind::ElementConstant,
            arity: 0,
        });
    }
    sig.expansion = Some(Expansion {
        base: Arc::clone(base),
        universe_size,
    });
    Arc::new(sig)
}

/// A term: a variable, or a function symbol applied to arity-many subterms.
/// Constants are 0-ary applications.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    App(FuncId, Vec<Term>),
}

impl Term {
    pub fn constant(f: FuncId) -> Term {
        Term::App(f, Vec::new())
    }

    /// Nesting depth: variables and constants are leaves at depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => match args.iter().map(Term::depth).max() {
                Some(d) => 1 + d,
                None => 0,
            },
        }
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Term::Var(v) => f(v),
            Term::App(_, args) => {
                for a in args {
                    a.visit_vars(f);
                }
            }
        }
    }

    fn rename(&self, map: &dyn Fn(&str) -> String) -> Term {
        match self {
            Term::Var(v) => Term::Var(map(v)),
            Term::App(f, args) => {
                Term::App(*f, args.iter().map(|a| a.rename(map)).collect())
            }
        }
    }
}

/// A relation applied to terms, or an equation between two terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomicFormula {
    Rel(RelId, Vec<Term>),
    Eq(Term, Term),
}

impl AtomicFormula {
    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            AtomicFormula::Rel(_, args) => {
                for a in args {
                    a.visit_vars(f);
                }
            }
            AtomicFormula::Eq(l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
        }
    }

    fn rename(&self, map: &dyn Fn(&str) -> String) -> AtomicFormula {
        match self {
            AtomicFormula::Rel(r, args) => {
                AtomicFormula::Rel(*r, args.iter().map(|a| a.rename(map)).collect())
            }
            AtomicFormula::Eq(l, r) => AtomicFormula::Eq(l.rename(map), r.rename(map)),
        }
    }

    /// Equations are unordered; put the smaller side first.
    fn orient(self) -> AtomicFormula {
        match self {
            AtomicFormula::Eq(l, r) if r < l => AtomicFormula::Eq(r, l),
            other => other,
        }
    }

    pub fn max_term_depth(&self) -> usize {
        match self {
            AtomicFormula::Rel(_, args) => args.iter().map(Term::depth).max().unwrap_or(0),
            AtomicFormula::Eq(l, r) => l.depth().max(r.depth()),
        }
    }
}

/// A basic Horn clause in implication form: premises (the negated disjuncts)
/// and an optional conclusion. At least one of the two parts is nonempty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HornFormula {
    sig: Arc<Signature>,
    negatives: Vec<AtomicFormula>,
    positive: Option<AtomicFormula>,
    free_vars: Vec<String>,
}

/// Classification flags for a basic Horn formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub basic_horn: bool,
    pub strict: bool,
    pub identity: bool,
    pub quasi_identity: bool,
}

impl HornFormula {
    pub fn new(
        sig: Arc<Signature>,
        negatives: Vec<AtomicFormula>,
        positive: Option<AtomicFormula>,
    ) -> Result<HornFormula> {
        if negatives.is_empty() && positive.is_none() {
            return Err(Error::EmptyClause);
        }
        let mut free_vars: Vec<String> = Vec::new();
        let mut note = |v: &str| {
            if !free_vars.iter().any(|w| w == v) {
                free_vars.push(v.to_string());
            }
        };
        for atom in &negatives {
            atom.visit_vars(&mut note);
        }
        if let Some(p) = &positive {
            p.visit_vars(&mut note);
        }
        Ok(HornFormula {
            sig,
            negatives,
            positive,
            free_vars,
        })
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn negatives(&self) -> &[AtomicFormula] {
        &self.negatives
    }

    pub fn positive(&self) -> Option<&AtomicFormula> {
        self.positive.as_ref()
    }

    /// Free variables in first-occurrence order (premises, then conclusion).
    pub fn free_vars(&self) -> &[String] {
        &self.free_vars
    }

    pub fn classify(&self) -> Classification {
        let strict = self.positive.is_some();
        Classification {
            basic_horn: true,
            strict,
            identity: strict && self.negatives.is_empty(),
            quasi_identity: strict,
        }
    }

    pub fn max_term_depth(&self) -> usize {
        self.negatives
            .iter()
            .chain(self.positive.iter())
            .map(AtomicFormula::max_term_depth)
            .max()
            .unwrap_or(0)
    }

    /// Alpha-canonical form: premises deduplicated and sorted, equations
    /// oriented, and the variable naming chosen to minimize the rendered
    /// clause over all bijective renamings onto `x0..x{k-1}`.
    pub fn canonicalize(&self) -> HornFormula {
        let vars = &self.free_vars;
        let k = vars.len();
        let mut best: Option<(Vec<AtomicFormula>, Option<AtomicFormula>)> = None;
        let mut perm: Vec<usize> = (0..k).collect();
        loop {
            let map = |v: &str| {
                let i = vars.iter().position(|w| w == v).unwrap();
                format!("x{}", perm[i])
            };
            let mut negs: Vec<AtomicFormula> = self
                .negatives
                .iter()
                .map(|a| a.rename(&map).orient())
                .collect();
            negs.sort();
            negs.dedup();
            let pos = self.positive.as_ref().map(|a| a.rename(&map).orient());
            let cand = (negs, pos);
            if best.as_ref().map_or(true, |b| cand < *b) {
                best = Some(cand);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        let (negs, pos) = best.unwrap();
        HornFormula::new(Arc::clone(&self.sig), negs, pos)
            .expect("canonical form of a nonempty clause is nonempty")
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

// Display renders the workbench DSL concrete syntax.

pub(crate) struct TermDisplay<'a>(pub &'a Term, pub &'a Signature);

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(id, args) => {
                write!(f, "{}", self.1.function(*id).name)?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{}", TermDisplay(a, self.1))?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

pub(crate) struct AtomDisplay<'a>(pub &'a AtomicFormula, pub &'a Signature);

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            AtomicFormula::Rel(id, args) => {
                write!(f, "{}(", self.1.relation(*id).name)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", TermDisplay(a, self.1))?;
                }
                write!(f, ")")
            }
            AtomicFormula::Eq(l, r) => write!(
                f,
                "{} = {}",
                TermDisplay(l, self.1),
                TermDisplay(r, self.1)
            ),
        }
    }
}

impl fmt::Display for HornFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.negatives.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{}", AtomDisplay(atom, &self.sig))?;
        }
        if !self.negatives.is_empty() {
            write!(f, " ")?;
        }
        write!(f, "|- ")?;
        match &self.positive {
            Some(atom) => write!(f, "{}", AtomDisplay(atom, &self.sig)),
            None => write!(f, "false"),
        }
    }
}
