//! Concrete syntax for the workbench.
//!
//! ```text
//! file         := (sig_decl | struct_decl | formula_decl)*
//! sig_decl     := "signature" NAME "{" (("fn"|"rel") NAME "/" NAT ";")* "}"
//! struct_decl  := "structure" NAME ":" SIGNAME "{" "universe" NAT ";"
//!                 ("fn" NAME "=" "[" NAT ("," NAT)* "]" ";"
//!                 |"rel" NAME "=" "{" (tuple ("," tuple)*)? "}" ";")* "}"
//! formula_decl := "formula" NAME ":" SIGNAME "=" clause
//! clause       := (atom ("&" atom)*)? "|-" (atom | "false")
//! atom         := NAME "(" term ("," term)* ")" | term "=" term
//! term         := VAR | NAME | NAME "(" term ("," term)* ")"
//! ```
//!
//! Identifiers that are declared in the signature are symbols; any other
//! identifier in a formula is a variable. `#` starts a line comment.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::structure::FiniteStructure;
use crate::syntax::{AtomicFormula, HornFormula, Signature, SymbolKind, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Eq,
    Slash,
    Turnstile,
    Amp,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Nat(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Turnstile => "`|-`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Lexer> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                bump(&mut chars);
                if c == '\n' {
                    break;
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            toks.push((Tok::Ident(s), tl, tc));
            continue;
        }
        if c.is_ascii_digit() {
            let mut n = 0usize;
            while let Some(&c) = chars.peek() {
                if let Some(d) = c.to_digit(10) {
                    bump(&mut chars);
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d as usize))
                        .ok_or(Error::Syntax {
                            line: tl,
                            col: tc,
                            message: "number too large".into(),
                        })?;
                } else {
                    break;
                }
            }
            toks.push((Tok::Nat(n), tl, tc));
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '=' => Tok::Eq,
            '/' => Tok::Slash,
            '&' => Tok::Amp,
            '|' => {
                bump(&mut chars);
                if chars.peek() == Some(&'-') {
                    bump(&mut chars);
                    toks.push((Tok::Turnstile, tl, tc));
                    continue;
                }
                return Err(Error::Syntax {
                    line: tl,
                    col: tc,
                    message: "expected `|-`".into(),
                });
            }
            other => {
                return Err(Error::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        bump(&mut chars);
        toks.push((tok, tl, tc));
    }
    toks.push((Tok::Eof, line, col));
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            let (line, col) = self.here();
            Err(Error::Syntax {
                line,
                col,
                message: format!("expected {}, found {}", want.describe(), self.peek().describe()),
            })
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        if let Tok::Ident(s) = self.peek().clone() {
            self.next();
            Ok(s)
        } else {
            let (line, col) = self.here();
            Err(Error::Syntax {
                line,
                col,
                message: format!("expected {what}, found {}", self.peek().describe()),
            })
        }
    }

    fn nat(&mut self, what: &str) -> Result<usize> {
        if let Tok::Nat(n) = *self.peek() {
            self.next();
            Ok(n)
        } else {
            let (line, col) = self.here();
            Err(Error::Syntax {
                line,
                col,
                message: format!("expected {what}, found {}", self.peek().describe()),
            })
        }
    }
}

/// A parsed source file, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct ParsedFile {
    pub signatures: Vec<(String, Arc<Signature>)>,
    pub structures: Vec<(String, String, FiniteStructure)>,
    pub formulas: Vec<(String, String, HornFormula)>,
}

impl ParsedFile {
    fn name_taken(&self, name: &str) -> bool {
        self.signatures.iter().any(|(n, _)| n == name)
            || self.structures.iter().any(|(n, _, _)| n == name)
            || self.formulas.iter().any(|(n, _, _)| n == name)
    }

    fn signature(&self, name: &str) -> Option<&Arc<Signature>> {
        self.signatures
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }
}

pub fn parse_file(text: &str) -> Result<ParsedFile> {
    let mut lx = lex(text)?;
    let mut file = ParsedFile::default();
    loop {
        let (line, col) = lx.here();
        match lx.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(kw) if kw == "signature" => {
                lx.next();
                let name = lx.ident("signature name")?;
                if file.name_taken(&name) {
                    return Err(Error::DuplicateName { name });
                }
                let sig = parse_sig_body(&mut lx)?;
                file.signatures.push((name, sig));
            }
            Tok::Ident(kw) if kw == "structure" => {
                lx.next();
                let name = lx.ident("structure name")?;
                if file.name_taken(&name) {
                    return Err(Error::DuplicateName { name });
                }
                lx.expect(Tok::Colon)?;
                let signame = lx.ident("signature name")?;
                let sig = file
                    .signature(&signame)
                    .ok_or_else(|| Error::UnknownName { name: signame.clone() })?
                    .clone();
                let s = parse_struct_body(&mut lx, &sig)?;
                file.structures.push((name, signame, s));
            }
            Tok::Ident(kw) if kw == "formula" => {
                lx.next();
                let name = lx.ident("formula name")?;
                if file.name_taken(&name) {
                    return Err(Error::DuplicateName { name });
                }
                lx.expect(Tok::Colon)?;
                let signame = lx.ident("signature name")?;
                let sig = file
                    .signature(&signame)
                    .ok_or_else(|| Error::UnknownName { name: signame.clone() })?
                    .clone();
                lx.expect(Tok::Eq)?;
                let phi = parse_clause(&mut lx, &sig)?;
                if *lx.peek() == Tok::Semi {
                    lx.next();
                }
                file.formulas.push((name, signame, phi));
            }
            other => {
                return Err(Error::Syntax {
                    line,
                    col,
                    message: format!(
                        "expected `signature`, `structure`, or `formula`, found {}",
                        other.describe()
                    ),
                })
            }
        }
    }
    Ok(file)
}

fn parse_sig_body(lx: &mut Lexer) -> Result<Arc<Signature>> {
    lx.expect(Tok::LBrace)?;
    let mut decls: Vec<(String, SymbolKind, usize)> = Vec::new();
    loop {
        match lx.peek().clone() {
            Tok::RBrace => {
                lx.next();
                break;
            }
            Tok::Ident(kw) if kw == "fn" || kw == "rel" => {
                lx.next();
                let name = lx.ident("symbol name")?;
                lx.expect(Tok::Slash)?;
                let arity = lx.nat("arity")?;
                lx.expect(Tok::Semi)?;
                let kind = if kw == "fn" {
                    SymbolKind::Function
                } else {
                    SymbolKind::Relation
                };
                decls.push((name, kind, arity));
            }
            other => {
                let (line, col) = lx.here();
                return Err(Error::Syntax {
                    line,
                    col,
                    message: format!("expected `fn`, `rel`, or `}}`, found {}", other.describe()),
                });
            }
        }
    }
    Signature::from_symbols(decls)
}

fn parse_struct_body(lx: &mut Lexer, sig: &Arc<Signature>) -> Result<FiniteStructure> {
    lx.expect(Tok::LBrace)?;
    let kw = lx.ident("`universe`")?;
    if kw != "universe" {
        let (line, col) = lx.here();
        return Err(Error::Syntax {
            line,
            col,
            message: "structure body starts with `universe N;`".into(),
        });
    }
    let size = lx.nat("universe size")?;
    lx.expect(Tok::Semi)?;
    if size == 0 {
        return Err(Error::Usage("universes are nonempty (size >= 1)".into()));
    }

    let mut fn_tables: Vec<Option<Vec<usize>>> = vec![None; sig.functions().len()];
    let mut rel_tables: Vec<Option<Vec<Vec<usize>>>> = vec![None; sig.relations().len()];
    loop {
        match lx.peek().clone() {
            Tok::RBrace => {
                lx.next();
                break;
            }
            Tok::Ident(kw) if kw == "fn" || kw == "rel" => {
                lx.next();
                let (line, col) = lx.here();
                let name = lx.ident("symbol name")?;
                lx.expect(Tok::Eq)?;
                if kw == "fn" {
                    let id = sig.func_id(&name).ok_or(Error::UnknownSymbol {
                        name: name.clone(),
                        line,
                        col,
                    })?;
                    if fn_tables[id.0].is_some() {
                        return Err(Error::DuplicateName { name });
                    }
                    lx.expect(Tok::LBracket)?;
                    let mut entries = vec![lx.nat("table entry")?];
                    while *lx.peek() == Tok::Comma {
                        lx.next();
                        entries.push(lx.nat("table entry")?);
                    }
                    lx.expect(Tok::RBracket)?;
                    lx.expect(Tok::Semi)?;
                    fn_tables[id.0] = Some(entries);
                } else {
                    let id = sig.rel_id(&name).ok_or(Error::UnknownSymbol {
                        name: name.clone(),
                        line,
                        col,
                    })?;
                    if rel_tables[id.0].is_some() {
                        return Err(Error::DuplicateName { name });
                    }
                    lx.expect(Tok::LBrace)?;
                    let mut tuples = Vec::new();
                    while *lx.peek() != Tok::RBrace {
                        lx.expect(Tok::LParen)?;
                        let mut tuple = vec![lx.nat("element")?];
                        while *lx.peek() == Tok::Comma {
                            lx.next();
                            tuple.push(lx.nat("element")?);
                        }
                        lx.expect(Tok::RParen)?;
                        tuples.push(tuple);
                        if *lx.peek() == Tok::Comma {
                            lx.next();
                        }
                    }
                    lx.expect(Tok::RBrace)?;
                    lx.expect(Tok::Semi)?;
                    rel_tables[id.0] = Some(tuples);
                }
            }
            other => {
                let (line, col) = lx.here();
                return Err(Error::Syntax {
                    line,
                    col,
                    message: format!("expected `fn`, `rel`, or `}}`, found {}", other.describe()),
                });
            }
        }
    }

    let mut fns = Vec::with_capacity(fn_tables.len());
    for (i, t) in fn_tables.into_iter().enumerate() {
        match t {
            Some(t) => fns.push(t),
            None => {
                return Err(Error::SignatureMismatch {
                    context: format!(
                        "missing table for function `{}`",
                        sig.functions()[i].name
                    ),
                })
            }
        }
    }
    // A relation without a listed table is empty.
    let rels = rel_tables.into_iter().map(Option::unwrap_or_default).collect();
    FiniteStructure::new(Arc::clone(sig), size, fns, rels)
}

/// Parses one clause in implication form over `sig`.
pub fn parse_formula(text: &str, sig: &Arc<Signature>) -> Result<HornFormula> {
    let mut lx = lex(text)?;
    let phi = parse_clause(&mut lx, sig)?;
    if *lx.peek() != Tok::Eof {
        let (line, col) = lx.here();
        return Err(Error::Syntax {
            line,
            col,
            message: format!("trailing input: {}", lx.peek().describe()),
        });
    }
    Ok(phi)
}

fn parse_clause(lx: &mut Lexer, sig: &Arc<Signature>) -> Result<HornFormula> {
    let mut negatives = Vec::new();
    if *lx.peek() != Tok::Turnstile {
        negatives.push(parse_atom(lx, sig)?);
        while *lx.peek() == Tok::Amp {
            lx.next();
            negatives.push(parse_atom(lx, sig)?);
        }
    }
    lx.expect(Tok::Turnstile)?;
    let positive = match lx.peek().clone() {
        Tok::Ident(kw) if kw == "false" => {
            lx.next();
            None
        }
        _ => Some(parse_atom(lx, sig)?),
    };
    HornFormula::new(Arc::clone(sig), negatives, positive)
}

fn parse_atom(lx: &mut Lexer, sig: &Arc<Signature>) -> Result<AtomicFormula> {
    // A declared relation name opens a relation atom; anything else is the
    // left side of an equation.
    if let Tok::Ident(name) = lx.peek().clone() {
        if let Some(rel) = sig.rel_id(&name) {
            let (line, col) = lx.here();
            lx.next();
            lx.expect(Tok::LParen)?;
            let mut args = Vec::new();
            if *lx.peek() != Tok::RParen {
                args.push(parse_term(lx, sig)?);
                while *lx.peek() == Tok::Comma {
                    lx.next();
                    args.push(parse_term(lx, sig)?);
                }
            }
            lx.expect(Tok::RParen)?;
            let arity = sig.relation(rel).arity;
            if args.len() != arity {
                return Err(Error::ArityMismatch {
                    name,
                    expected: arity,
                    got: args.len(),
                    line,
                    col,
                });
            }
            return Ok(AtomicFormula::Rel(rel, args));
        }
    }
    let left = parse_term(lx, sig)?;
    lx.expect(Tok::Eq)?;
    let right = parse_term(lx, sig)?;
    Ok(AtomicFormula::Eq(left, right))
}

fn parse_term(lx: &mut Lexer, sig: &Arc<Signature>) -> Result<Term> {
    let (line, col) = lx.here();
    let name = lx.ident("term")?;
    if *lx.peek() == Tok::LParen {
        let f = sig.func_id(&name).ok_or(Error::UnknownSymbol {
            name: name.clone(),
            line,
            col,
        })?;
        lx.next();
        let mut args = Vec::new();
        if *lx.peek() != Tok::RParen {
            args.push(parse_term(lx, sig)?);
            while *lx.peek() == Tok::Comma {
                lx.next();
                args.push(parse_term(lx, sig)?);
            }
        }
        lx.expect(Tok::RParen)?;
        let arity = sig.function(f).arity;
        if args.len() != arity {
            return Err(Error::ArityMismatch {
                name,
                expected: arity,
                got: args.len(),
                line,
                col,
            });
        }
        return Ok(Term::App(f, args));
    }
    match sig.lookup(&name) {
        Some((SymbolKind::Relation, _, _)) => Err(Error::Syntax {
            line,
            col,
            message: format!("relation `{name}` used in term position"),
        }),
        Some((_, idx, arity)) => {
            if arity != 0 {
                return Err(Error::ArityMismatch {
                    name,
                    expected: arity,
                    got: 0,
                    line,
                    col,
                });
            }
            Ok(Term::constant(crate::syntax::FuncId(idx)))
        }
        None => Ok(Term::Var(name)),
    }
}

/// Renders a signature declaration.
pub fn print_signature(name: &str, sig: &Signature) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "signature {name} {{");
    for s in sig.functions() {
        let _ = writeln!(out, "  fn {}/{};", s.name, s.arity);
    }
    for s in sig.relations() {
        let _ = writeln!(out, "  rel {}/{};", s.name, s.arity);
    }
    out.push_str("}\n");
    out
}

/// Renders a structure declaration that parses back to the same structure.
pub fn print_structure(name: &str, signame: &str, s: &FiniteStructure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "structure {name} : {signame} {{");
    let _ = writeln!(out, "  universe {};", s.size());
    for (i, sym) in s.sig().functions().iter().enumerate() {
        let table = s.fn_table(crate::syntax::FuncId(i));
        let rows: Vec<String> = table.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "  fn {} = [{}];", sym.name, rows.join(","));
    }
    for (i, sym) in s.sig().relations().iter().enumerate() {
        let tuples: Vec<String> = s
            .rel_table(crate::syntax::RelId(i))
            .iter()
            .map(|t| {
                let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                format!("({})", parts.join(","))
            })
            .collect();
        let _ = writeln!(out, "  rel {} = {{{}}};", sym.name, tuples.join(","));
    }
    out.push_str("}\n");
    out
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

    #[test]
    fn parse_symmetry_clause() {
        let sig = graph_sig();
        let phi = parse_formula("r(x,y) |- r(y,x)", &sig).unwrap();
        assert_eq!(phi.negatives().len(), 1);
        assert!(phi.positive().is_some());
        assert!(phi.classify().strict);
        assert_eq!(phi.free_vars(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn parse_identity_clause() {
        let phi = parse_formula("|- m(x,y) = m(y,x)", &mag_sig()).unwrap();
        assert!(phi.negatives().is_empty());
        assert!(matches!(phi.positive(), Some(AtomicFormula::Eq(_, _))));
        assert!(phi.classify().identity);
    }

    #[test]
    fn parse_non_strict_clause() {
        let phi = parse_formula("r(x,x) |- false", &graph_sig()).unwrap();
        assert_eq!(phi.negatives().len(), 1);
        assert!(phi.positive().is_none());
    }

    #[test]
    fn reject_empty_clause() {
        assert!(matches!(
            parse_formula("|- false", &graph_sig()),
            Err(Error::EmptyClause)
        ));
    }

    #[test]
    fn unknown_symbol_with_position() {
        let err = parse_formula("s(x,y) |- s(y,x)", &graph_sig()).unwrap_err();
        match err {
            // `s` is not declared; it is applied, so it cannot be a variable.
            Error::UnknownSymbol { name, line, col } => {
                assert_eq!(name, "s");
                assert_eq!((line, col), (1, 1));
            }
            other => panic!("expected unknown symbol, got {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_reported() {
        let err = parse_formula("r(x) |- r(x,x)", &graph_sig()).unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { expected: 2, got: 1, .. }));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_formula("r(x,y) |-", &graph_sig()).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }

    #[test]
    fn parse_file_with_all_decls() {
        let text = "
# a small corpus
signature Mag { fn m/2; }
signature Graph { rel r/2; }
structure Z2 : Mag { universe 2; fn m = [0,1,1,0]; }
structure P_edge : Graph { universe 2; rel r = {(0,1)}; }
formula comm : Mag = |- m(x,y) = m(y,x)
formula sym : Graph = r(x,y) |- r(y,x)
";
        let file = parse_file(text).unwrap();
        assert_eq!(file.signatures.len(), 2);
        assert_eq!(file.structures.len(), 2);
        assert_eq!(file.formulas.len(), 2);
        let z2 = &file.structures[0].2;
        assert_eq!(z2.size(), 2);
        assert_eq!(z2.fn_table(crate::syntax::FuncId(0)), &[0, 1, 1, 0]);
    }

    #[test]
    fn structure_roundtrips_through_printer() {
        let text = "signature G { rel r/2; fn f/1; }
structure A : G { universe 3; fn f = [1,2,0]; rel r = {(0,1),(2,2)}; }
";
        let file = parse_file(text).unwrap();
        let (name, signame, s) = &file.structures[0];
        let printed = format!(
            "{}{}",
            print_signature(signame, s.sig()),
            print_structure(name, signame, s)
        );
        let file2 = parse_file(&printed).unwrap();
        assert_eq!(&file2.structures[0].2, s);
    }

    #[test]
    fn formula_print_parse_roundtrip() {
        let sig = Signature::from_symbols([
            ("m".to_string(), SymbolKind::Function, 2),
            ("e".to_string(), SymbolKind::Function, 0),
            ("r".to_string(), SymbolKind::Relation, 1),
        ])
        .unwrap();
        let corpus = [
            "|- m(x,y) = m(y,x)",
            "r(x) |- m(x,e) = x",
            "m(x,y) = e & r(y) |- r(x)",
            "r(x) & r(y) |- false",
            "|- m(m(x,y),z) = m(x,m(y,z))",
        ];
        for text in corpus {
            let phi = parse_formula(text, &sig).unwrap();
            let reparsed = parse_formula(&phi.to_string(), &sig).unwrap();
            assert_eq!(phi, reparsed, "{text}");
        }
    }

    #[test]
    fn missing_function_table_rejected() {
        let text = "signature Mag { fn m/2; }
structure Bad : Mag { universe 2; }
";
        assert!(parse_file(text).is_err());
    }

    #[test]
    fn zero_universe_rejected() {
        let text = "signature Mag { fn m/2; }
structure Bad : Mag { universe 0; }
";
        assert!(parse_file(text).is_err());
    }
}
