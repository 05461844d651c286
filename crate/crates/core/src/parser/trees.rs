use std::collections::{BTreeSet, HashMap};

use crate::grammar::{production_id_key, BinarizedGrammar};

use super::chart::{Backpointer, ChartTable};
use super::{Leaf, ParseError, ParseTree};

/// A ranked derivation fragment. For ordinary symbols `kids` holds exactly
/// the node itself; for synthetic binarization symbols it holds the
/// children to splice into the enclosing node.
#[derive(Clone)]
struct Candidate {
    size: usize,
    seq: Vec<u32>,
    kids: Vec<ParseTree>,
}

impl Candidate {
    fn key(&self) -> (usize, &[u32]) {
        (self.size, &self.seq)
    }
}

fn sort_truncate(mut cands: Vec<Candidate>, limit: usize) -> Vec<Candidate> {
    cands.sort_by(|a, b| a.key().cmp(&b.key()));
    cands.truncate(limit);
    cands
}

struct Extractor<'a> {
    table: &'a ChartTable,
    grammar: &'a BinarizedGrammar,
    rank: HashMap<&'a str, u32>,
    limit: usize,
    full: HashMap<(usize, usize, usize), Vec<Candidate>>,
    base: HashMap<(usize, usize, usize), Vec<Candidate>>,
}

impl<'a> Extractor<'a> {
    fn new(table: &'a ChartTable, grammar: &'a BinarizedGrammar, limit: usize) -> Self {
        let mut ids: Vec<&str> = grammar.provenance.values().map(String::as_str).collect();
        ids.sort_by_key(|id| production_id_key(id));
        ids.dedup();
        let rank = ids.into_iter().enumerate().map(|(i, id)| (id, i as u32)).collect();
        Extractor {
            table,
            grammar,
            rank,
            limit,
            full: HashMap::new(),
            base: HashMap::new(),
        }
    }

    fn node(&self, rule: usize, kids: &[&Candidate]) -> Candidate {
        let r = &self.grammar.rules[rule];
        let mut size = 0;
        let mut seq = Vec::new();
        let mut children = Vec::new();
        for k in kids {
            size += k.size;
            seq.extend_from_slice(&k.seq);
            children.extend(k.kids.iter().cloned());
        }
        if self.grammar.is_synthetic(&r.lhs) {
            return Candidate {
                size,
                seq,
                kids: children,
            };
        }
        seq.insert(0, self.rank.get(r.origin.as_str()).copied().unwrap_or(u32::MAX));
        Candidate {
            size: size + 1,
            seq,
            kids: vec![ParseTree {
                symbol: r.lhs.clone(),
                production_id: Some(r.origin.clone()),
                children,
                leaf: None,
                attrs: Default::default(),
            }],
        }
    }

    /// Derivations whose top rule is not a unary rule.
    fn base(&mut self, i: usize, len: usize, sym: usize) -> Vec<Candidate> {
        if let Some(c) = self.base.get(&(i, len, sym)) {
            return c.clone();
        }
        let mut out = Vec::new();
        for bp in self.table.backpointers(i, len, sym).to_vec() {
            match bp {
                Backpointer::Leaf { token } => out.push(Candidate {
                    size: 1,
                    seq: Vec::new(),
                    kids: vec![ParseTree {
                        symbol: self.table.symbols[sym].clone(),
                        production_id: None,
                        children: Vec::new(),
                        leaf: Some(Leaf {
                            index: token,
                            token: self.table.tokens[token].clone(),
                        }),
                        attrs: Default::default(),
                    }],
                }),
                Backpointer::Binary {
                    rule,
                    split,
                    left,
                    right,
                } => {
                    let ls = self.full(i, split - i, left);
                    let rs = self.full(split, i + len - split, right);
                    for l in &ls {
                        for r in &rs {
                            out.push(self.node(rule, &[l, r]));
                        }
                    }
                    out = sort_truncate(out, self.limit);
                }
                Backpointer::Unary { .. } => {}
            }
        }
        let out = sort_truncate(out, self.limit);
        self.base.insert((i, len, sym), out.clone());
        out
    }

    /// All derivations of `sym` over the span whose unary chain avoids the
    /// symbols in `chain`.
    fn chained(
        &mut self,
        i: usize,
        len: usize,
        sym: usize,
        chain: &mut BTreeSet<usize>,
    ) -> Vec<Candidate> {
        let mut out = self.base(i, len, sym);
        for bp in self.table.backpointers(i, len, sym).to_vec() {
            let Backpointer::Unary { rule, child } = bp else {
                continue;
            };
            if chain.contains(&child) {
                continue;
            }
            chain.insert(child);
            let below = self.chained(i, len, child, chain);
            chain.remove(&child);
            for c in &below {
                out.push(self.node(rule, &[c]));
            }
        }
        sort_truncate(out, self.limit)
    }

    fn full(&mut self, i: usize, len: usize, sym: usize) -> Vec<Candidate> {
        if let Some(c) = self.full.get(&(i, len, sym)) {
            return c.clone();
        }
        let out = self.chained(i, len, sym, &mut BTreeSet::from([sym]));
        self.full.insert((i, len, sym), out.clone());
        out
    }
}

/// Reconstructs up to `limit` trees over the original productions, smallest
/// first, ties broken by the preorder sequence of production ids.
/// Derivations that repeat a symbol along a unary chain are excluded.
pub fn extract_trees(
    table: &ChartTable,
    grammar: &BinarizedGrammar,
    limit: usize,
) -> Result<Vec<ParseTree>, ParseError> {
    if !table.accepted {
        return Err(ParseError::NoParse);
    }
    let Some(start) = table.start else {
        return Err(ParseError::NoParse);
    };
    if limit == 0 {
        return Ok(Vec::new());
    }
    let mut ex = Extractor::new(table, grammar, limit);
    Ok(ex
        .full(0, table.n, start)
        .into_iter()
        .filter_map(|c| c.kids.into_iter().next())
        .collect())
}
