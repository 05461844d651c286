//! Line-oriented `.mag` text format.
//!
//! ```text
//! start S
//! nonterm DT NOUN NP S VERBT VP
//! term "Turn on" { val="turn on" mod=speech synrole=verb }
//! attr NOUN gender: inherited concept
//! prod P4: VP -> VERBT NP { VP.val = VERBT.val ++ NP.val ; VP.mod = VERBT.mod ++ NP.mod }
//! ```
//!
//! `nonterm` and `attr` lines are optional; nonterminals are otherwise
//! inferred from `start` and production heads. A symbol that occurs more
//! than once in a production is addressed positionally as `Sym[k]`
//! (0 = LHS).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{
    parse_modality_set, AttrDomain, AttrKind, AttrRef, AttributeDecl,
    CoopType, Expr, MultimodalGrammar, Production, SemanticFunction, SynRole, TerminalDef,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("empty RHS at line {line}")]
    EmptyRhs { line: usize },
    #[error("line {line}: unknown attribute `{attr}` on `{symbol}`")]
    UnknownAttribute {
        line: usize,
        symbol: String,
        attr: String,
    },
    #[error("line {line}: duplicate production id `{id}`")]
    DuplicateProduction { line: usize, id: String },
}

impl LoadError {
    pub fn line(&self) -> usize {
        match self {
            LoadError::Syntax { line, .. }
            | LoadError::EmptyRhs { line }
            | LoadError::UnknownAttribute { line, .. }
            | LoadError::DuplicateProduction { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Colon,
    Semi,
    Dot,
    Comma,
    Eq,
    Arrow,
    Concat,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '#' | '\'')
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Tok>, LoadError> {
    let err = |reason: String| LoadError::Syntax {
        line: lineno,
        reason,
    };
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '{' | '}' | '[' | ']' | '(' | ')' | ':' | ';' | '.' | ',' | '=' => {
                toks.push(match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '.' => Tok::Dot,
                    ',' => Tok::Comma,
                    _ => Tok::Eq,
                });
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                toks.push(Tok::Arrow);
                i += 2;
            }
            '+' if chars.get(i + 1) == Some(&'+') => {
                toks.push(Tok::Concat);
                i += 2;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err("unterminated string".into())),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                Some('n') => s.push('\n'),
                                other => {
                                    return Err(err(format!("bad escape `\\{}`", other.map_or(String::new(), |c| c.to_string()))))
                                }
                            }
                            i += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                toks.push(Tok::Str(s));
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len()
                    && is_ident_char(chars[i])
                    && !(chars[i] == '-' && chars.get(i + 1) == Some(&'>'))
                {
                    i += 1;
                }
                toks.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(err(format!("unexpected character `{other}`"))),
        }
    }
    Ok(toks)
}

struct Cursor {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T, LoadError> {
        Err(LoadError::Syntax {
            line: self.line,
            reason: reason.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), LoadError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => self.err(format!("expected {what}")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LoadError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => self.err(format!("expected {what}")),
        }
    }

    /// A bare or quoted symbol name.
    fn symbol(&mut self, what: &str) -> Result<String, LoadError> {
        match self.next() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => Ok(s),
            _ => self.err(format!("expected {what}")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn finish(&self) -> Result<(), LoadError> {
        if self.at_end() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }
}

/// Occurrence reference as written, before resolution against its production.
#[derive(Debug, Clone)]
struct RawRef {
    symbol: String,
    index: Option<usize>,
    attr: String,
}

#[derive(Debug, Clone)]
enum RawExpr {
    Literal(String),
    Ref(RawRef),
    Concat(Box<RawExpr>, Box<RawExpr>),
}

struct RawProduction {
    line: usize,
    id: String,
    lhs: String,
    rhs: Vec<String>,
    functions: Vec<(RawRef, RawExpr)>,
}

fn parse_ref(cur: &mut Cursor) -> Result<RawRef, LoadError> {
    let symbol = cur.symbol("symbol")?;
    let index = if cur.peek() == Some(&Tok::LBracket) {
        cur.next();
        let k = cur.ident("occurrence index")?;
        let k: usize = match k.parse() {
            Ok(k) => k,
            Err(_) => return cur.err(format!("bad occurrence index `{k}`")),
        };
        cur.expect(Tok::RBracket, "`]`")?;
        Some(k)
    } else {
        None
    };
    cur.expect(Tok::Dot, "`.` before attribute name")?;
    let attr = cur.ident("attribute name")?;
    Ok(RawRef {
        symbol,
        index,
        attr,
    })
}

fn parse_operand(cur: &mut Cursor) -> Result<RawExpr, LoadError> {
    match (cur.peek(), cur.peek2()) {
        (Some(Tok::LParen), _) => {
            cur.next();
            let e = parse_expr(cur)?;
            cur.expect(Tok::RParen, "`)`")?;
            Ok(e)
        }
        (Some(Tok::Str(_)), Some(Tok::Dot | Tok::LBracket)) | (Some(Tok::Ident(_)), _) => {
            parse_ref(cur).map(RawExpr::Ref)
        }
        (Some(Tok::Str(_)), _) => match cur.next() {
            Some(Tok::Str(s)) => Ok(RawExpr::Literal(s)),
            _ => unreachable!(),
        },
        _ => cur.err("expected expression"),
    }
}

fn parse_expr(cur: &mut Cursor) -> Result<RawExpr, LoadError> {
    let mut e = parse_operand(cur)?;
    while cur.peek() == Some(&Tok::Concat) {
        cur.next();
        let rhs = parse_operand(cur)?;
        e = RawExpr::Concat(Box::new(e), Box::new(rhs));
    }
    Ok(e)
}

fn parse_term(cur: &mut Cursor) -> Result<TerminalDef, LoadError> {
    let name = cur.symbol("terminal name")?;
    cur.expect(Tok::LBrace, "`{`")?;
    let mut val = None;
    let mut mods = None;
    let mut synrole = None;
    let mut coop = None;
    loop {
        match cur.next() {
            Some(Tok::RBrace) => break,
            Some(Tok::Ident(key)) => {
                cur.expect(Tok::Eq, "`=`")?;
                match key.as_str() {
                    "val" => match cur.next() {
                        Some(Tok::Str(s)) => val = Some(s),
                        _ => return cur.err("val must be a quoted string"),
                    },
                    "mod" => {
                        let mut list = vec![cur.ident("modality")?];
                        while cur.peek() == Some(&Tok::Comma) {
                            cur.next();
                            list.push(cur.ident("modality")?);
                        }
                        match parse_modality_set(&list.join(",")) {
                            Ok(set) => mods = Some(set),
                            Err(e) => return cur.err(e.to_string()),
                        }
                    }
                    "synrole" => {
                        let s = cur.ident("synrole")?;
                        match s.parse::<SynRole>() {
                            Ok(r) => synrole = Some(r),
                            Err(e) => return cur.err(e.to_string()),
                        }
                    }
                    "coop" => {
                        let s = cur.ident("coop")?;
                        match s.parse::<CoopType>() {
                            Ok(c) => coop = Some(c),
                            Err(e) => return cur.err(e.to_string()),
                        }
                    }
                    _ => return cur.err(format!("unknown terminal field `{key}`")),
                }
            }
            _ => return cur.err("expected terminal field or `}`"),
        }
    }
    cur.finish()?;
    let Some(admissible_mods) = mods else {
        return cur.err(format!("terminal `{name}` lacks mod"));
    };
    let Some(synrole) = synrole else {
        return cur.err(format!("terminal `{name}` lacks synrole"));
    };
    Ok(TerminalDef {
        val: val.unwrap_or_else(|| name.to_lowercase()),
        name,
        admissible_mods,
        synrole,
        coop,
    })
}

fn parse_prod(cur: &mut Cursor) -> Result<RawProduction, LoadError> {
    let id = cur.ident("production id")?;
    cur.expect(Tok::Colon, "`:`")?;
    let lhs = cur.symbol("lhs nonterminal")?;
    cur.expect(Tok::Arrow, "`->`")?;
    let mut rhs = Vec::new();
    while let Some(Tok::Ident(_) | Tok::Str(_)) = cur.peek() {
        rhs.push(cur.symbol("symbol")?);
    }
    if rhs.is_empty() {
        return Err(LoadError::EmptyRhs { line: cur.line });
    }
    let mut functions = Vec::new();
    if cur.peek() == Some(&Tok::LBrace) {
        cur.next();
        loop {
            if cur.peek() == Some(&Tok::RBrace) {
                cur.next();
                break;
            }
            let target = parse_ref(cur)?;
            cur.expect(Tok::Eq, "`=`")?;
            let expr = parse_expr(cur)?;
            functions.push((target, expr));
            match cur.next() {
                Some(Tok::Semi) => {}
                Some(Tok::RBrace) => break,
                _ => return cur.err("expected `;` or `}`"),
            }
        }
    }
    cur.finish()?;
    Ok(RawProduction {
        line: cur.line,
        id,
        lhs,
        rhs,
        functions,
    })
}

fn parse_attr(cur: &mut Cursor) -> Result<(String, AttributeDecl), LoadError> {
    let symbol = cur.symbol("symbol")?;
    let name = cur.ident("attribute name")?;
    cur.expect(Tok::Colon, "`:`")?;
    let kind = match cur.ident("attribute kind")?.as_str() {
        "synthesized" => AttrKind::Synthesized,
        "inherited" => AttrKind::Inherited,
        other => return cur.err(format!("unknown attribute kind `{other}`")),
    };
    let domain = match cur.ident("attribute domain")?.parse::<AttrDomain>() {
        Ok(d) => d,
        Err(e) => return cur.err(e.to_string()),
    };
    cur.finish()?;
    Ok((symbol, AttributeDecl { name, kind, domain }))
}

/// Parses `.mag` text. Structural problems that are not syntax errors
/// (undefined symbols, typing) are left for `validate_grammar`.
pub fn load_grammar(text: &str) -> Result<MultimodalGrammar, LoadError> {
    let mut start = None;
    let mut declared_nts: BTreeSet<String> = BTreeSet::new();
    let mut terminals = Vec::new();
    let mut raw_prods = Vec::new();
    let mut attr_decls: BTreeMap<String, Vec<AttributeDecl>> = BTreeMap::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = lex(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            toks,
            pos: 0,
            line: lineno,
        };
        match cur.ident("directive")?.as_str() {
            "start" => {
                start = Some(cur.symbol("start symbol")?);
                cur.finish()?;
            }
            "nonterm" => {
                while !cur.at_end() {
                    declared_nts.insert(cur.symbol("nonterminal")?);
                }
            }
            "term" => terminals.push(parse_term(&mut cur)?),
            "attr" => {
                let (sym, decl) = parse_attr(&mut cur)?;
                attr_decls.entry(sym).or_default().push(decl);
            }
            "prod" => raw_prods.push(parse_prod(&mut cur)?),
            other => return cur.err(format!("unknown directive `{other}`")),
        }
    }

    let Some(start) = start else {
        return Err(LoadError::Syntax {
            line: text.lines().count().max(1),
            reason: "missing `start` line".into(),
        });
    };

    let mut nonterminals = declared_nts;
    nonterminals.insert(start.clone());
    nonterminals.extend(raw_prods.iter().map(|p| p.lhs.clone()));

    let mut g = MultimodalGrammar {
        terminals,
        nonterminals,
        productions: Vec::new(),
        start,
        attr_decls,
    };

    let mut ids = BTreeSet::new();
    for raw in raw_prods {
        if !ids.insert(raw.id.clone()) {
            return Err(LoadError::DuplicateProduction {
                line: raw.line,
                id: raw.id,
            });
        }
        let mut p = Production {
            id: raw.id.clone(),
            lhs: raw.lhs.clone(),
            rhs: raw.rhs.clone(),
            semantics: Vec::new(),
        };
        for (target, expr) in &raw.functions {
            let target = resolve_ref(&g, &p, target, raw.line)?;
            let expr = resolve_expr(&g, &p, expr, raw.line)?;
            p.semantics.push(SemanticFunction { target, expr });
        }
        g.productions.push(p);
    }
    Ok(g)
}

fn resolve_ref(
    g: &MultimodalGrammar,
    p: &Production,
    r: &RawRef,
    line: usize,
) -> Result<AttrRef, LoadError> {
    let syntax = |reason: String| LoadError::Syntax { line, reason };
    let occurrence = match r.index {
        Some(k) => match p.symbol_at(k) {
            Some(s) if s == r.symbol => k,
            Some(s) => {
                return Err(syntax(format!(
                    "occurrence {k} of production {} is `{s}`, not `{}`",
                    p.id, r.symbol
                )))
            }
            None => {
                return Err(syntax(format!(
                    "production {} has no occurrence {k}",
                    p.id
                )))
            }
        },
        None => {
            let hits: Vec<usize> = (0..=p.rhs.len())
                .filter(|&k| p.symbol_at(k) == Some(r.symbol.as_str()))
                .collect();
            match hits.as_slice() {
                [k] => *k,
                [] => {
                    return Err(syntax(format!(
                        "`{}` does not occur in production {}",
                        r.symbol, p.id
                    )))
                }
                _ => {
                    return Err(syntax(format!(
                        "`{}` occurs more than once in production {}; write `{}[k]`",
                        r.symbol, p.id, r.symbol
                    )))
                }
            }
        }
    };
    if g.attribute(&r.symbol, &r.attr).is_none() {
        return Err(LoadError::UnknownAttribute {
            line,
            symbol: r.symbol.clone(),
            attr: r.attr.clone(),
        });
    }
    Ok(AttrRef::new(occurrence, r.attr.clone()))
}

fn resolve_expr(
    g: &MultimodalGrammar,
    p: &Production,
    e: &RawExpr,
    line: usize,
) -> Result<Expr, LoadError> {
    Ok(match e {
        RawExpr::Literal(s) => Expr::Literal(s.clone()),
        RawExpr::Ref(r) => Expr::Ref(resolve_ref(g, p, r, line)?),
        RawExpr::Concat(a, b) => Expr::Concat(
            Box::new(resolve_expr(g, p, a, line)?),
            Box::new(resolve_expr(g, p, b, line)?),
        ),
    })
}

fn bare_ok(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    is_ident_start(first) && s.chars().all(is_ident_char) && !s.contains("->")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn symbol_text(s: &str) -> String {
    if bare_ok(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn ref_text(p: &Production, r: &AttrRef) -> String {
    let sym = p.symbol_at(r.occurrence).unwrap_or("?");
    let count = (0..=p.rhs.len())
        .filter(|&k| p.symbol_at(k) == Some(sym))
        .count();
    if count == 1 {
        format!("{}.{}", symbol_text(sym), r.attr)
    } else {
        format!("{}[{}].{}", symbol_text(sym), r.occurrence, r.attr)
    }
}

fn expr_text(p: &Production, e: &Expr) -> String {
    match e {
        Expr::Literal(s) => quote(s),
        Expr::Ref(r) => ref_text(p, r),
        Expr::Concat(a, b) => {
            let rhs = match **b {
                Expr::Concat(..) => format!("({})", expr_text(p, b)),
                _ => expr_text(p, b),
            };
            format!("{} ++ {}", expr_text(p, a), rhs)
        }
    }
}

pub(crate) fn term_line(t: &TerminalDef) -> String {
    let mods: Vec<&str> = t.admissible_mods.iter().map(|m| m.as_str()).collect();
    let mut line = format!(
        "term {} {{ val={} mod={} synrole={}",
        symbol_text(&t.name),
        quote(&t.val),
        mods.join(","),
        t.synrole
    );
    if let Some(c) = t.coop {
        let _ = write!(line, " coop={c}");
    }
    line.push_str(" }");
    line
}

pub(crate) fn prod_line(p: &Production) -> String {
    let rhs: Vec<String> = p.rhs.iter().map(|s| symbol_text(s)).collect();
    let mut line = format!("prod {}: {} -> {}", p.id, symbol_text(&p.lhs), rhs.join(" "));
    if !p.semantics.is_empty() {
        let fns: Vec<String> = p
            .semantics
            .iter()
            .map(|f| format!("{} = {}", ref_text(p, &f.target), expr_text(p, &f.expr)))
            .collect();
        let _ = write!(line, " {{ {} }}", fns.join(" ; "));
    }
    line
}

/// Renders terminal and production lines only, as shown when reviewing a
/// proposed rule delta.
pub fn render_productions(terminals: &[TerminalDef], productions: &[Production]) -> String {
    let mut out = String::new();
    for t in terminals {
        out.push_str(&term_line(t));
        out.push('\n');
    }
    for p in productions {
        out.push_str(&prod_line(p));
        out.push('\n');
    }
    out
}

/// Canonical text form; `load_grammar(&save_grammar(g)) == g` for every
/// grammar that validates.
pub fn save_grammar(g: &MultimodalGrammar) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "start {}", symbol_text(&g.start));
    let nts: Vec<String> = g.nonterminals.iter().map(|s| symbol_text(s)).collect();
    let _ = writeln!(out, "nonterm {}", nts.join(" "));
    for (sym, decls) in &g.attr_decls {
        for d in decls {
            let kind = match d.kind {
                AttrKind::Synthesized => "synthesized",
                AttrKind::Inherited => "inherited",
            };
            let _ = writeln!(
                out,
                "attr {} {}: {kind} {}",
                symbol_text(sym),
                d.name,
                d.domain.as_str()
            );
        }
    }
    out.push_str(&render_productions(&g.terminals, &g.productions));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{seed_grammar, Modality};

    #[test]
    fn seed_round_trips() {
        let g = seed_grammar();
        let text = save_grammar(&g);
        assert_eq!(text.lines().filter(|l| l.starts_with("prod ")).count(), 26);
        let back = load_grammar(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn term_line_loads_as_this() {
        let text = "start S\n\
                    term This { val=\"this\" mod=speech synrole=deictic coop=complementary }\n\
                    prod P11: DT -> This { DT.val = \"this\" ; DT.mod = \"speech\" ; DT.synrole = \"deictic\" ; DT.coop = \"complementary\" }\n";
        let g = load_grammar(text).unwrap();
        let seed = seed_grammar();
        assert_eq!(g.terminal("This"), seed.terminal("This"));
        assert_eq!(g.production("P11"), seed.production("P11"));
        assert_eq!(
            g.terminal("This").unwrap().admissible_mods,
            [Modality::Speech].into_iter().collect()
        );
    }

    #[test]
    fn empty_rhs_reports_line() {
        let err = load_grammar("start S\n\nprod X: A ->\n").unwrap_err();
        assert_eq!(err, LoadError::EmptyRhs { line: 3 });
        assert_eq!(err.to_string(), "empty RHS at line 3");
    }

    #[test]
    fn duplicate_id_and_unknown_attribute() {
        let dup = "start S\nprod P1: S -> a\nprod P1: S -> b\n";
        assert!(matches!(
            load_grammar(dup),
            Err(LoadError::DuplicateProduction { line: 3, .. })
        ));
        let unk = "start S\nprod P1: S -> A { S.colour = A.val }\n";
        assert!(matches!(
            load_grammar(unk),
            Err(LoadError::UnknownAttribute { line: 2, ref attr, .. }) if attr == "colour"
        ));
    }

    #[test]
    fn repeated_symbols_use_positions() {
        let text = "start S\nterm a { mod=speech synrole=noun }\n\
                    prod P1: S -> S S { S[0].val = S[1].val ++ S[2].val }\nprod P2: S -> a\n";
        let g = load_grammar(text).unwrap();
        let p1 = g.production("P1").unwrap();
        assert_eq!(p1.semantics[0].target, AttrRef::new(0, "val"));
        assert_eq!(
            p1.semantics[0].expr,
            Expr::attr(1, "val").concat(Expr::attr(2, "val"))
        );
        assert_eq!(g.terminal("a").unwrap().val, "a");
        assert_eq!(load_grammar(&save_grammar(&g)).unwrap(), g);
        let ambiguous = "start S\nprod P1: S -> S S { S.val = S[1].val }\n";
        assert!(load_grammar(ambiguous).is_err());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, line) in [
            ("start S\nterm x { mod=voice synrole=noun }\n", 2),
            ("start S\nprod P1 S -> a\n", 2),
            ("bogus\n", 1),
            ("start S\n\n\nprod P1: S -> \"open\n", 4),
        ] {
            let err = load_grammar(text).unwrap_err();
            assert_eq!(err.line(), line, "{text:?} -> {err}");
        }
    }

    #[test]
    fn right_nested_concat_survives() {
        let text = "start S\nnonterm A B C\n\
                    prod P1: S -> A B C { S.val = A.val ++ (B.val ++ C.val) }\n";
        let g = load_grammar(text).unwrap();
        assert_eq!(
            g.productions[0].semantics[0].expr,
            Expr::attr(1, "val").concat(Expr::attr(2, "val").concat(Expr::attr(3, "val")))
        );
        assert_eq!(load_grammar(&save_grammar(&g)).unwrap(), g);
    }
}
