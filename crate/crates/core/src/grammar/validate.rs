use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{
    parse_modality_set, AttrDomain, AttrKind, AttributeDecl, CoopType, Expr, MultimodalGrammar,
    Production, SynRole,
};

/// One broken invariant, naming the offending symbol or production.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            subject: subject.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural and attribute invariant of `g`. Violations are
/// returned as data; this never fails.
pub fn validate_grammar(g: &MultimodalGrammar) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !g.nonterminals.contains(&g.start) {
        report.push(
            format!("start {}", g.start),
            "start symbol is not a nonterminal",
        );
    }

    let mut seen_terms = BTreeSet::new();
    for t in &g.terminals {
        let subject = format!("terminal {}", t.name);
        if t.name.is_empty() {
            report.push(&subject, "empty terminal name");
        }
        if !seen_terms.insert(t.name.as_str()) {
            report.push(&subject, "duplicate terminal name");
        }
        if g.nonterminals.contains(&t.name) {
            report.push(&subject, "symbol is both terminal and nonterminal");
        }
        if t.admissible_mods.is_empty() {
            report.push(&subject, "admissible modality set is empty");
        }
        if t.val.trim().is_empty() {
            report.push(&subject, "empty val");
        }
    }

    for (symbol, decls) in &g.attr_decls {
        let subject = format!("symbol {symbol}");
        if !g.is_terminal(symbol) && !g.is_nonterminal(symbol) {
            report.push(&subject, "attributes declared on unknown symbol");
        }
        let builtins = AttributeDecl::multimodal();
        let mut names: BTreeSet<&str> = builtins.iter().map(|d| d.name.as_str()).collect();
        for d in decls {
            if !names.insert(d.name.as_str()) {
                report.push(&subject, format!("attribute `{}` declared twice", d.name));
            }
        }
    }

    let mut seen_ids = BTreeSet::new();
    for p in &g.productions {
        if !seen_ids.insert(p.id.as_str()) {
            report.push(format!("production {}", p.id), "duplicate production id");
        }
        check_production(g, p, &mut report);
    }

    report
}

fn check_production(g: &MultimodalGrammar, p: &Production, report: &mut ValidationReport) {
    let subject = format!("production {}", p.id);
    if p.rhs.is_empty() {
        report.push(&subject, "rhs length ≥ 1 required");
    }
    if !g.is_nonterminal(&p.lhs) {
        report.push(&subject, format!("lhs `{}` is not a nonterminal", p.lhs));
    }
    for sym in &p.rhs {
        if !g.is_nonterminal(sym) && !g.is_terminal(sym) {
            report.push(&subject, format!("rhs symbol `{sym}` is undefined"));
        }
    }

    let mut assigned = BTreeSet::new();
    for (i, f) in p.semantics.iter().enumerate() {
        let fsubject = format!(
            "production {} function #{} ({}[{}].{})",
            p.id,
            i + 1,
            p.symbol_at(f.target.occurrence).unwrap_or("?"),
            f.target.occurrence,
            f.target.attr
        );
        let Some(target_sym) = p.symbol_at(f.target.occurrence) else {
            report.push(
                &fsubject,
                format!("target occurrence {} does not exist", f.target.occurrence),
            );
            continue;
        };
        if !assigned.insert(&f.target) {
            report.push(&fsubject, "attribute assigned twice");
        }
        let Some(target_decl) = g.attribute(target_sym, &f.target.attr) else {
            report.push(
                &fsubject,
                format!("unknown attribute `{}` on `{target_sym}`", f.target.attr),
            );
            continue;
        };
        if f.target.occurrence == 0 && target_decl.kind == AttrKind::Inherited {
            report.push(&fsubject, "inherited attribute assigned on the lhs");
        }
        if f.target.occurrence > 0 && target_decl.kind == AttrKind::Synthesized {
            report.push(&fsubject, "synthesized attribute assigned on an rhs occurrence");
        }
        check_expr(g, p, &f.expr, f.target.occurrence, target_decl.domain, &fsubject, report);
    }
}

fn check_expr(
    g: &MultimodalGrammar,
    p: &Production,
    expr: &Expr,
    target_occ: usize,
    domain: AttrDomain,
    subject: &str,
    report: &mut ValidationReport,
) {
    match expr {
        Expr::Literal(lit) => {
            let ok = match domain {
                AttrDomain::Concept => true,
                AttrDomain::Modalities => parse_modality_set(lit).is_ok_and(|s| !s.is_empty()),
                AttrDomain::Synrole => lit.parse::<SynRole>().is_ok(),
                AttrDomain::Coop => lit.parse::<CoopType>().is_ok(),
            };
            if !ok {
                report.push(
                    subject,
                    format!("literal \"{lit}\" is not a valid {}", domain.as_str()),
                );
            }
        }
        Expr::Ref(r) => {
            let Some(sym) = p.symbol_at(r.occurrence) else {
                report.push(
                    subject,
                    format!("references occurrence {} which does not exist", r.occurrence),
                );
                return;
            };
            if target_occ == 0 && r.occurrence == 0 {
                report.push(subject, "lhs target references the lhs");
            }
            match g.attribute(sym, &r.attr) {
                None => report.push(subject, format!("unknown attribute `{}` on `{sym}`", r.attr)),
                Some(d) if d.domain != domain => report.push(
                    subject,
                    format!(
                        "`{sym}.{}` has domain {}, expected {}",
                        r.attr,
                        d.domain.as_str(),
                        domain.as_str()
                    ),
                ),
                Some(_) => {}
            }
        }
        Expr::Concat(a, b) => {
            if !matches!(domain, AttrDomain::Concept | AttrDomain::Modalities) {
                report.push(subject, format!("`++` is undefined on {}", domain.as_str()));
            }
            check_expr(g, p, a, target_occ, domain, subject, report);
            check_expr(g, p, b, target_occ, domain, subject, report);
        }
    }
}
