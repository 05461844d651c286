use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::grammar::BinarizedGrammar;
use crate::lexicon::{MultimodalSentence, MultimodalToken};

use super::{matching_terminals, ParseError};

/// How a chart entry was derived. Rule indices point into
/// `BinarizedGrammar::rules`; `split` is the absolute boundary between the
/// left and right child spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backpointer {
    Leaf { token: usize },
    Unary { rule: usize, child: usize },
    Binary {
        rule: usize,
        split: usize,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Cell {
    /// Symbol id to every derivation found for it over this span.
    pub entries: BTreeMap<usize, Vec<Backpointer>>,
}

/// CYK chart over a token sequence. Terminal symbols are stored as entries
/// of the length-one cells alongside nonterminals.
#[derive(Debug, Clone, Serialize)]
pub struct ChartTable {
    pub n: usize,
    pub tokens: Vec<MultimodalToken>,
    pub symbols: Vec<String>,
    pub(crate) is_nonterminal: Vec<bool>,
    pub(crate) start: Option<usize>,
    cells: Vec<Cell>,
    pub accepted: bool,
}

impl ChartTable {
    fn index(&self, i: usize, len: usize) -> usize {
        debug_assert!(len >= 1 && i + len <= self.n);
        // Cells are laid out length-major.
        let before: usize = (1..len).map(|l| self.n + 1 - l).sum();
        before + i
    }

    pub fn cell(&self, i: usize, len: usize) -> &Cell {
        &self.cells[self.index(i, len)]
    }

    pub fn symbol_id(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }

    pub fn contains(&self, i: usize, len: usize, symbol: &str) -> bool {
        self.symbol_id(symbol)
            .is_some_and(|id| self.cell(i, len).entries.contains_key(&id))
    }

    /// Nonterminal names present over span `(i, len)`.
    pub fn nonterminals_at(&self, i: usize, len: usize) -> Vec<&str> {
        self.cell(i, len)
            .entries
            .keys()
            .filter(|&&s| self.is_nonterminal[s])
            .map(|&s| self.symbols[s].as_str())
            .collect()
    }

    pub fn backpointers(&self, i: usize, len: usize, symbol: usize) -> &[Backpointer] {
        self.cell(i, len)
            .entries
            .get(&symbol)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Grammar rules indexed for chart construction.
#[derive(Debug, Clone)]
pub(crate) struct CompiledGrammar {
    pub symbols: Vec<String>,
    pub ids: HashMap<String, usize>,
    pub is_nonterminal: Vec<bool>,
    /// Child symbol to unary rules `A -> child`.
    pub unary_by_child: HashMap<usize, Vec<(usize, usize)>>,
    /// `(B, C)` to binary rules `A -> B C`.
    pub binary_by_pair: HashMap<(usize, usize), Vec<(usize, usize)>>,
    pub start: Option<usize>,
}

impl CompiledGrammar {
    pub fn new(b: &BinarizedGrammar) -> Self {
        let mut symbols: Vec<String> = Vec::new();
        let mut ids = HashMap::new();
        let mut is_nonterminal = Vec::new();
        let mut intern = |name: &str, nt: bool| -> usize {
            if let Some(&id) = ids.get(name) {
                return id;
            }
            let id = symbols.len();
            symbols.push(name.to_string());
            ids.insert(name.to_string(), id);
            is_nonterminal.push(nt);
            id
        };
        for nt in &b.nonterminals {
            intern(nt, true);
        }
        for t in &b.terminals {
            intern(&t.name, false);
        }
        let mut unary_by_child: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        let mut binary_by_pair: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (idx, r) in b.rules.iter().enumerate() {
            let lhs = intern(&r.lhs, true);
            match r.rhs.as_slice() {
                [x] => {
                    let x = intern(x, b.nonterminals.contains(x));
                    unary_by_child.entry(x).or_default().push((idx, lhs));
                }
                [x, y] => {
                    let x = intern(x, b.nonterminals.contains(x));
                    let y = intern(y, b.nonterminals.contains(y));
                    binary_by_pair.entry((x, y)).or_default().push((idx, lhs));
                }
                _ => {}
            }
        }
        let start = ids.get(&b.start).copied();
        CompiledGrammar {
            symbols,
            ids,
            is_nonterminal,
            unary_by_child,
            binary_by_pair,
            start,
        }
    }
}

fn close_unary(cell: &mut Cell, rules: &CompiledGrammar) {
    let mut queue: Vec<usize> = cell.entries.keys().copied().collect();
    let mut done = std::collections::HashSet::new();
    while let Some(x) = queue.pop() {
        if !done.insert(x) {
            continue;
        }
        let Some(parents) = rules.unary_by_child.get(&x) else {
            continue;
        };
        for &(rule, lhs) in parents {
            let bp = Backpointer::Unary { rule, child: x };
            let entry = cell.entries.entry(lhs).or_default();
            if !entry.contains(&bp) {
                entry.push(bp);
            }
            if !done.contains(&lhs) {
                queue.push(lhs);
            }
        }
    }
}

pub(crate) fn build_chart(
    rules: &CompiledGrammar,
    b: &BinarizedGrammar,
    s: &MultimodalSentence,
) -> Result<ChartTable, ParseError> {
    let n = s.tokens.len();
    if n == 0 {
        return Err(ParseError::EmptyInput);
    }
    let mut table = ChartTable {
        n,
        tokens: s.tokens.clone(),
        symbols: rules.symbols.clone(),
        is_nonterminal: rules.is_nonterminal.clone(),
        start: rules.start,
        cells: vec![Cell::default(); n * (n + 1) / 2],
        accepted: false,
    };

    for (i, tok) in s.tokens.iter().enumerate() {
        let idx = table.index(i, 1);
        let cell = &mut table.cells[idx];
        for t in matching_terminals(tok, &b.terminals) {
            if let Some(&id) = rules.ids.get(&t.name) {
                cell.entries
                    .entry(id)
                    .or_default()
                    .push(Backpointer::Leaf { token: i });
            }
        }
        close_unary(cell, rules);
    }

    for len in 2..=n {
        for i in 0..=n - len {
            let mut cell = Cell::default();
            for split in i + 1..i + len {
                let left = table.cell(i, split - i);
                let right = table.cell(split, i + len - split);
                for &l in left.entries.keys() {
                    for &r in right.entries.keys() {
                        let Some(targets) = rules.binary_by_pair.get(&(l, r)) else {
                            continue;
                        };
                        for &(rule, lhs) in targets {
                            cell.entries.entry(lhs).or_default().push(Backpointer::Binary {
                                rule,
                                split,
                                left: l,
                                right: r,
                            });
                        }
                    }
                }
            }
            close_unary(&mut cell, rules);
            let idx = table.index(i, len);
            table.cells[idx] = cell;
        }
    }

    table.accepted = rules
        .start
        .is_some_and(|s| table.cell(0, n).entries.contains_key(&s));
    Ok(table)
}
