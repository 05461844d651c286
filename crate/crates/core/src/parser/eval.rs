use std::collections::{BTreeMap, BTreeSet};

use crate::grammar::{
    parse_modality_set, AttrDomain, AttrKind, Expr, Modality, MultimodalGrammar,
};

use super::{AttrValue, ParseError, ParseTree};

/// Fills `attrs` on every node bottom-up.
///
/// Leaves take `val`, `synrole` and `coop` from their terminal and `mod`
/// from the actual token. Internal nodes run their production's
/// synthesized functions on the LHS; `++` joins concepts with a space and
/// unions modality sets. A modality literal acts as an admissibility
/// filter: it evaluates to the literal set intersected with the modalities
/// of the leaves below. A node whose production assigns no `val` (or
/// `mod`) gets the concatenation (union) of its children's.
pub fn evaluate_attributes(tree: &ParseTree, g: &MultimodalGrammar) -> Result<ParseTree, ParseError> {
    let mut out = tree.clone();
    eval_node(&mut out, g)?;
    Ok(out)
}

fn eval_node(node: &mut ParseTree, g: &MultimodalGrammar) -> Result<(), ParseError> {
    node.attrs.clear();
    if let Some(leaf) = &node.leaf {
        let term = g
            .terminal(&node.symbol)
            .ok_or_else(|| ParseError::UnknownSymbol(node.symbol.clone()))?;
        node.attrs
            .insert("val".into(), AttrValue::Concept(term.val.clone()));
        node.attrs.insert(
            "mod".into(),
            AttrValue::Modalities(BTreeSet::from([leaf.token.modality])),
        );
        node.attrs
            .insert("synrole".into(), AttrValue::Synrole(term.synrole));
        if let Some(coop) = term.coop {
            node.attrs.insert("coop".into(), AttrValue::Coop(coop));
        }
        return Ok(());
    }

    for child in &mut node.children {
        eval_node(child, g)?;
    }
    let id = node
        .production_id
        .clone()
        .ok_or_else(|| ParseError::UnknownSymbol(node.symbol.clone()))?;
    let prod = g
        .production(&id)
        .ok_or_else(|| ParseError::UnknownProduction(id.clone()))?;
    let leaf_mods = node.leaf_modalities();

    let mut attrs = BTreeMap::new();
    for f in &prod.semantics {
        if f.target.occurrence != 0 {
            continue;
        }
        let Some(decl) = g.attribute(&prod.lhs, &f.target.attr) else {
            return Err(ParseError::UndefinedAttribute {
                production: id.clone(),
                attr: f.target.attr.clone(),
            });
        };
        if decl.kind == AttrKind::Inherited {
            continue;
        }
        let value = eval_expr(&f.expr, decl.domain, node, &leaf_mods, &id)?;
        attrs.insert(f.target.attr.clone(), value);
    }
    if !attrs.contains_key("val") {
        let joined = node
            .children
            .iter()
            .filter_map(|c| c.val())
            .filter(|v| !v.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        attrs.insert("val".into(), AttrValue::Concept(joined));
    }
    if !attrs.contains_key("mod") {
        let union = node
            .children
            .iter()
            .filter_map(|c| c.mods())
            .flatten()
            .copied()
            .collect();
        attrs.insert("mod".into(), AttrValue::Modalities(union));
    }
    node.attrs = attrs;
    Ok(())
}

fn eval_expr(
    e: &Expr,
    domain: AttrDomain,
    node: &ParseTree,
    leaf_mods: &BTreeSet<Modality>,
    production: &str,
) -> Result<AttrValue, ParseError> {
    let bad_literal = |lit: &str| ParseError::BadLiteral {
        production: production.to_string(),
        literal: lit.to_string(),
    };
    match e {
        Expr::Literal(lit) => Ok(match domain {
            AttrDomain::Concept => AttrValue::Concept(lit.clone()),
            AttrDomain::Modalities => {
                let set = parse_modality_set(lit).map_err(|_| bad_literal(lit))?;
                AttrValue::Modalities(set.intersection(leaf_mods).copied().collect())
            }
            AttrDomain::Synrole => AttrValue::Synrole(lit.parse().map_err(|_| bad_literal(lit))?),
            AttrDomain::Coop => AttrValue::Coop(lit.parse().map_err(|_| bad_literal(lit))?),
        }),
        Expr::Ref(r) => {
            let undefined = || ParseError::UndefinedAttribute {
                production: production.to_string(),
                attr: format!("{}[{}].{}", node.child_symbol(r.occurrence), r.occurrence, r.attr),
            };
            if r.occurrence == 0 {
                return Err(undefined());
            }
            node.children
                .get(r.occurrence - 1)
                .and_then(|c| c.attrs.get(&r.attr))
                .cloned()
                .ok_or_else(undefined)
        }
        Expr::Concat(a, b) => {
            let a = eval_expr(a, domain, node, leaf_mods, production)?;
            let b = eval_expr(b, domain, node, leaf_mods, production)?;
            match (a, b) {
                (AttrValue::Concept(a), AttrValue::Concept(b)) => {
                    let parts: Vec<&str> = [a.as_str(), b.as_str()]
                        .into_iter()
                        .filter(|s| !s.is_empty())
                        .collect();
                    Ok(AttrValue::Concept(parts.join(" ")))
                }
                (AttrValue::Modalities(mut a), AttrValue::Modalities(b)) => {
                    a.extend(b);
                    Ok(AttrValue::Modalities(a))
                }
                _ => Err(ParseError::BadConcat {
                    production: production.to_string(),
                }),
            }
        }
    }
}
