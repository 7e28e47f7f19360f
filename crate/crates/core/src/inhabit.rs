//! Search forests for simply-typed inhabitation, and inhabitants read off
//! them.
//!
//! The forest for `Γ ⊢ A` lives in the typed-forest signature at sort
//! `<A,t>`. An arrow target becomes a `lam`; an atomic target `p` becomes a
//! `sum` over the context entries whose type ends in `p`, oldest first, each
//! alternative a `tup` of that variable with one forest per argument type.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::context::Context;
use crate::coterm::{unfold_coterm, Child, CoTerm, FinTerm, Layer, Node};
use crate::lexer::{Cursor, SyntaxError};
use crate::signature::{Op, OpParam, Signature};
use crate::sort::{parse_sort, Sort};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("`{0}` is not a simple type")]
    NotSimple(Sort),
}

/// Parses a simple type: atoms, right-associative `->`, parentheses.
pub fn parse_type(text: &str) -> Result<Sort, TypeError> {
    let s: Sort = text.parse()?;
    if !s.is_simple_type() {
        return Err(TypeError::NotSimple(s));
    }
    Ok(s)
}

/// Parses `x:A, y:B`, oldest entry first. Blank text is the empty context.
pub fn parse_context(text: &str) -> Result<Vec<(String, Sort)>, TypeError> {
    let mut cur = Cursor::new(text)?;
    let mut out = Vec::new();
    while !cur.at_eof() {
        let x = cur.ident()?;
        cur.expect(":")?;
        let s = parse_sort(&mut cur)?;
        if !s.is_simple_type() {
            return Err(TypeError::NotSimple(s));
        }
        out.push((x, s));
        if !cur.at_eof() {
            cur.expect(",")?;
        }
    }
    Ok(out)
}

fn collect_atoms(gamma: &[Sort], a: &Sort) -> Vec<String> {
    let mut atoms: Vec<String> = gamma
        .iter()
        .chain([a])
        .flat_map(|s| s.atoms())
        .map(|x| x.to_string())
        .collect();
    atoms.sort();
    atoms.dedup();
    atoms
}

/// The typed-forest signature over `atoms`.
pub fn forest_signature(atoms: &[&str]) -> Signature {
    Signature::typed_forests(atoms)
}

fn v() -> Sort {
    Sort::atom("v")
}

fn forest_ctx(gamma: &[Sort]) -> Context {
    Context::from_outermost(gamma.iter().map(|b| Sort::pair(b.clone(), v())))
}

#[derive(Clone)]
enum Seed {
    Term(Arc<Vec<Sort>>, Sort),
    Alt(Arc<Vec<Sort>>, usize),
    Head(usize),
}

fn step(seed: &Seed) -> Layer<Seed> {
    match seed {
        Seed::Head(i) => Layer::Var(*i),
        Seed::Term(gamma, a) => match a {
            Sort::Arrow(b, c) => {
                let mut inner = (**gamma).clone();
                inner.push((**b).clone());
                Layer::Con(
                    Op::new(
                        "lam",
                        vec![OpParam::Sort((**b).clone()), OpParam::Sort((**c).clone())],
                    ),
                    vec![Child::Seed(Seed::Term(Arc::new(inner), (**c).clone()))],
                )
            }
            p => {
                let alts: Vec<_> = gamma
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.spine().1 == *p)
                    .map(|(k, _)| Child::Seed(Seed::Alt(gamma.clone(), k)))
                    .collect();
                Layer::Con(
                    Op::new("sum", vec![OpParam::Sort(p.clone()), OpParam::Nat(alts.len())]),
                    alts,
                )
            }
        },
        Seed::Alt(gamma, k) => {
            let (args, p) = gamma[*k].spine();
            let mut kids = vec![Child::Seed(Seed::Head(gamma.len() - 1 - k))];
            kids.extend(
                args.iter()
                    .map(|b| Child::Seed(Seed::Term(gamma.clone(), b.clone()))),
            );
            Layer::Con(
                Op::new("tup", vec![OpParam::Sorts(args), OpParam::Sort(p)]),
                kids,
            )
        }
    }
}

/// The lazily unfolded search forest for `Γ ⊢ A` (`Γ` oldest first).
pub fn generate_search_forest(gamma: &[Sort], a: &Sort) -> CoTerm {
    let atoms = collect_atoms(gamma, a);
    let atoms: Vec<&str> = atoms.iter().map(String::as_str).collect();
    let sig = forest_signature(&atoms);
    generate_in(&sig, gamma, a)
}

/// As [`generate_search_forest`], over a given typed-forest signature.
pub fn generate_in(sig: &Signature, gamma: &[Sort], a: &Sort) -> CoTerm {
    unfold_coterm(
        sig,
        &forest_ctx(gamma),
        &Sort::pair(a.clone(), Sort::atom("t")),
        Seed::Term(Arc::new(gamma.to_vec()), a.clone()),
        step,
    )
}

/// The simply-typed signature matching the atoms of a judgment.
pub fn stlc_for(gamma: &[Sort], a: &Sort) -> Signature {
    let atoms = collect_atoms(gamma, a);
    let atoms: Vec<&str> = atoms.iter().map(String::as_str).collect();
    Signature::stlc(&atoms)
}

fn app(f: FinTerm, x: FinTerm, arg: &Sort, res: &Sort) -> FinTerm {
    FinTerm::Con(
        Op::new("app", vec![OpParam::Sort(arg.clone()), OpParam::Sort(res.clone())]),
        vec![f, x],
    )
}

fn lam(b: &Sort, c: &Sort, body: FinTerm) -> FinTerm {
    FinTerm::Con(
        Op::new("lam", vec![OpParam::Sort(b.clone()), OpParam::Sort(c.clone())]),
        vec![body],
    )
}

/// `x a1 .. ak` for a head of type `B1 -> .. -> Bk -> p`.
fn spine_app(head: usize, ty: &Sort, args: &[FinTerm]) -> FinTerm {
    let mut acc = FinTerm::Var(head);
    let mut cur = ty.clone();
    for a in args {
        let Sort::Arrow(b, c) = cur else {
            unreachable!("spine shorter than argument list")
        };
        acc = app(acc, a.clone(), &b, &c);
        cur = (*c).clone();
    }
    acc
}

fn product(choices: &[Vec<FinTerm>]) -> Vec<Vec<FinTerm>> {
    choices.iter().fold(vec![Vec::new()], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect()
    })
}

/// All inhabitants found in the forest within `fuel` constructor layers, as
/// simply-typed terms in context `Γ`.
pub fn enumerate_inhabitants(gamma: &[Sort], a: &Sort, fuel: usize) -> Vec<FinTerm> {
    let forest = generate_search_forest(gamma, a);
    let mut out = BTreeSet::new();
    out.extend(read_term(&forest, fuel));
    out.into_iter().collect()
}

fn read_term(t: &CoTerm, fuel: usize) -> Vec<FinTerm> {
    if fuel == 0 {
        return Vec::new();
    }
    match t.out() {
        Node::Con(op, kids) if op.name() == "lam" => {
            let (b, c) = match op.params() {
                [OpParam::Sort(b), OpParam::Sort(c)] => (b, c),
                _ => unreachable!(),
            };
            read_term(&kids[0], fuel - 1)
                .into_iter()
                .map(|body| lam(b, c, body))
                .collect()
        }
        Node::Con(op, alts) if op.name() == "sum" => alts
            .iter()
            .flat_map(|alt| read_alt(alt, fuel - 1))
            .collect(),
        _ => Vec::new(),
    }
}

fn read_alt(t: &CoTerm, fuel: usize) -> Vec<FinTerm> {
    if fuel == 0 {
        return Vec::new();
    }
    let Node::Con(op, kids) = t.out() else {
        return Vec::new();
    };
    let Node::Var(head) = kids[0].out() else {
        return Vec::new();
    };
    let (bs, p) = match op.params() {
        [OpParam::Sorts(bs), OpParam::Sort(p)] => (bs, p),
        _ => unreachable!(),
    };
    let head_ty = Sort::from_spine(bs, p.clone());
    let choices: Vec<Vec<FinTerm>> = kids[1..].iter().map(|k| read_term(k, fuel - 1)).collect();
    product(&choices)
        .iter()
        .map(|args| spine_app(*head, &head_ty, args))
        .collect()
}

/// Direct proof search over the typing rules, without building a forest.
/// Same fuel accounting as [`enumerate_inhabitants`].
pub fn oracle_enumerate(gamma: &[Sort], a: &Sort, fuel: usize) -> Vec<FinTerm> {
    let set: BTreeSet<FinTerm> = search(gamma, a, fuel).into_iter().collect();
    set.into_iter().collect()
}

fn search(gamma: &[Sort], a: &Sort, fuel: usize) -> Vec<FinTerm> {
    if fuel == 0 {
        return Vec::new();
    }
    if let Sort::Arrow(b, c) = a {
        let mut inner = gamma.to_vec();
        inner.push((**b).clone());
        return search(&inner, c, fuel - 1)
            .into_iter()
            .map(|body| lam(b, c, body))
            .collect();
    }
    let mut out = Vec::new();
    if fuel < 2 {
        return out;
    }
    for (k, ty) in gamma.iter().enumerate() {
        let (bs, p) = ty.spine();
        if p != *a {
            continue;
        }
        let head = gamma.len() - 1 - k;
        let mut partial = vec![FinTerm::Var(head)];
        let mut cur = ty.clone();
        for b in &bs {
            let Sort::Arrow(_, rest) = cur.clone() else { unreachable!() };
            let args = search(gamma, b, fuel - 2);
            partial = partial
                .iter()
                .flat_map(|f| args.iter().map(|x| app(f.clone(), x.clone(), b, &rest)))
                .collect();
            cur = (*rest).clone();
        }
        out.extend(partial);
    }
    out
}

/// Church numeral `n` at `(p->p)->p->p`.
pub fn church(n: usize, p: &Sort) -> FinTerm {
    let f = Sort::arrow(p.clone(), p.clone());
    let mut body = FinTerm::Var(0);
    for _ in 0..n {
        body = app(FinTerm::Var(1), body, p, p);
    }
    lam(&f, &Sort::arrow(p.clone(), p.clone()), lam(p, p, body))
}

/// For a term `λf. f (λy1. f (λy2. ... f (λyn. yi)))` returns `(n, i)`.
pub fn three_family_member(t: &FinTerm) -> Option<(usize, usize)> {
    let FinTerm::Con(op, kids) = t else { return None };
    if op.name() != "lam" {
        return None;
    }
    // depth of binders below f; f sits at index `depth` from the inside
    let mut cur = &kids[0];
    let mut n = 0;
    loop {
        match cur {
            FinTerm::Con(op, kids) if op.name() == "app" => {
                if kids[0] != FinTerm::Var(n) {
                    return None;
                }
                let FinTerm::Con(l, body) = &kids[1] else { return None };
                if l.name() != "lam" {
                    return None;
                }
                n += 1;
                cur = &body[0];
            }
            FinTerm::Var(j) if n > 0 && *j < n => return Some((n, n - j)),
            _ => return None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::{bisim_to_depth, pretty, Style};
    use crate::coterm::embed;

    fn s(x: &str) -> Sort {
        x.parse().unwrap()
    }

    #[test]
    fn empty_context_atom_is_empty_sum() {
        let f = generate_search_forest(&[], &s("p"));
        let Node::Con(op, alts) = f.out() else { panic!() };
        assert_eq!(op.to_string(), "sum<p,0>");
        assert!(alts.is_empty());
        assert!(enumerate_inhabitants(&[], &s("p"), 10).is_empty());
    }

    #[test]
    fn church_up_to_two() {
        let a = s("(0->0)->0->0");
        let found = enumerate_inhabitants(&[], &a, 8);
        let mut want: Vec<_> = (0..3).map(|n| church(n, &s("0"))).collect();
        want.sort();
        assert_eq!(found, want);
        assert_eq!(oracle_enumerate(&[], &a, 8), want);
        assert_eq!(enumerate_inhabitants(&[], &a, 0), vec![]);
    }

    #[test]
    fn inhabitants_type_check() {
        let a = s("((0->0)->0)->0");
        let sig = stlc_for(&[], &a);
        for t in enumerate_inhabitants(&[], &a, 10) {
            assert_eq!(t.sort_in(&sig, &Context::empty()).unwrap(), a);
            let (n, i) = three_family_member(&t).unwrap();
            assert!(1 <= i && i <= n);
        }
        assert_eq!(enumerate_inhabitants(&[], &a, 10).len(), 3);
    }

    #[test]
    fn forest_named_rendering() {
        let f = generate_search_forest(&[], &s("(0->0)->0->0"));
        assert_eq!(
            pretty(&f, 4, Style::Named),
            "λx0:0->0. λx1:0. x0⟨…⟩ + x1"
        );
        let sig = stlc_for(&[], &s("0"));
        let one = embed(&sig, &Context::empty(), &church(1, &s("0"))).unwrap();
        assert_eq!(pretty(&one, 10, Style::Named), "λx0:0->0. λx1:0. x0 x1");
        assert!(bisim_to_depth(&f, &f, 64));
    }

    #[test]
    fn context_syntax() {
        let ctx = parse_context("x:0, f : 0->0").unwrap();
        assert_eq!(ctx, vec![("x".into(), s("0")), ("f".into(), s("0->0"))]);
        assert!(parse_context("").unwrap().is_empty());
        assert!(parse_type("<0,v>").is_err());
        let gamma: Vec<Sort> = ctx.into_iter().map(|(_, t)| t).collect();
        // f (f x), f x, x within fuel
        let found = enumerate_inhabitants(&gamma, &s("0"), 6);
        assert_eq!(found, oracle_enumerate(&gamma, &s("0"), 6));
        assert_eq!(found.len(), 3);
    }
}
