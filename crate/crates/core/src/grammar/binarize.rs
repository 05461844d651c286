use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{MultimodalGrammar, TerminalDef};

/// A rule with one or two RHS symbols. `origin` is the id of the source
/// production; `piece` is 0 for the rule headed by the original LHS and
/// `k` for the rule headed by the synthetic `<origin>#k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinRule {
    pub id: String,
    pub origin: String,
    pub piece: usize,
    pub lhs: String,
    pub rhs: Vec<String>,
}

impl BinRule {
    pub fn is_unary(&self) -> bool {
        self.rhs.len() == 1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BinarizedGrammar {
    pub start: String,
    pub terminals: Vec<TerminalDef>,
    /// Original plus synthetic nonterminals.
    pub nonterminals: BTreeSet<String>,
    pub synthetic: BTreeSet<String>,
    pub rules: Vec<BinRule>,
    /// Binarized rule id (and synthetic symbol) to originating production id.
    pub provenance: BTreeMap<String, String>,
    /// `A -> {B | A =>* B}` through unit rules over nonterminals, reflexive.
    pub unit_closure: BTreeMap<String, BTreeSet<String>>,
}

impl BinarizedGrammar {
    pub fn is_synthetic(&self, symbol: &str) -> bool {
        self.synthetic.contains(symbol)
    }

    pub fn unit_reachable(&self, from: &str, to: &str) -> bool {
        self.unit_closure
            .get(from)
            .is_some_and(|set| set.contains(to))
    }
}

/// Right-binarizes every production longer than two symbols and computes
/// the unit closure. Rules of length one or two are kept as they are.
pub fn binarize(g: &MultimodalGrammar) -> BinarizedGrammar {
    let mut taken: BTreeSet<String> = g
        .nonterminals
        .iter()
        .cloned()
        .chain(g.terminals.iter().map(|t| t.name.clone()))
        .collect();
    let mut rules = Vec::new();
    let mut synthetic = BTreeSet::new();
    let mut provenance = BTreeMap::new();

    for p in &g.productions {
        if p.rhs.len() <= 2 {
            provenance.insert(p.id.clone(), p.id.clone());
            rules.push(BinRule {
                id: p.id.clone(),
                origin: p.id.clone(),
                piece: 0,
                lhs: p.lhs.clone(),
                rhs: p.rhs.clone(),
            });
            continue;
        }
        // A -> X1 .. Xn becomes A -> X1 A#1, A#1 -> X2 A#2, .., A#(n-2) -> X(n-1) Xn
        let n = p.rhs.len();
        let mut names = Vec::with_capacity(n - 2);
        for k in 1..=n - 2 {
            let mut name = format!("{}#{k}", p.id);
            while taken.contains(&name) {
                name.push('\'');
            }
            taken.insert(name.clone());
            names.push(name);
        }
        for piece in 0..n - 1 {
            let (id, lhs) = if piece == 0 {
                (p.id.clone(), p.lhs.clone())
            } else {
                (names[piece - 1].clone(), names[piece - 1].clone())
            };
            let second = if piece == n - 2 {
                p.rhs[n - 1].clone()
            } else {
                names[piece].clone()
            };
            provenance.insert(id.clone(), p.id.clone());
            rules.push(BinRule {
                id,
                origin: p.id.clone(),
                piece,
                lhs,
                rhs: vec![p.rhs[piece].clone(), second],
            });
        }
        synthetic.extend(names);
    }

    let unit_closure = unit_closure(&g.nonterminals, &rules);
    let mut nonterminals = g.nonterminals.clone();
    nonterminals.extend(synthetic.iter().cloned());

    BinarizedGrammar {
        start: g.start.clone(),
        terminals: g.terminals.clone(),
        nonterminals,
        synthetic,
        rules,
        provenance,
        unit_closure,
    }
}

fn unit_closure(
    nonterminals: &BTreeSet<String>,
    rules: &[BinRule],
) -> BTreeMap<String, BTreeSet<String>> {
    let mut closure: BTreeMap<String, BTreeSet<String>> = nonterminals
        .iter()
        .map(|a| (a.clone(), BTreeSet::from([a.clone()])))
        .collect();
    let edges: Vec<(&str, &str)> = rules
        .iter()
        .filter(|r| r.is_unary() && nonterminals.contains(&r.rhs[0]))
        .map(|r| (r.lhs.as_str(), r.rhs[0].as_str()))
        .collect();
    loop {
        let mut changed = false;
        for &(a, b) in &edges {
            let reach_b: Vec<String> = closure
                .get(b)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_default();
            if let Some(set) = closure.get_mut(a) {
                for x in reach_b {
                    changed |= set.insert(x);
                }
            }
        }
        if !changed {
            return closure;
        }
    }
}
