//! Invariant suite shared by `properties` and `acceptance`. Each property
//! draws a signature index and a seed; the seed drives the random term
//! generators.

#![allow(dead_code)]

use std::sync::Arc;

use cocalc::bisim::bisim_to_depth;
use cocalc::context::ContextMorphism;
use cocalc::coterm::{con, truncate, var, CoTerm, Node, Truncation};
use cocalc::inhabit::{enumerate_inhabitants, oracle_enumerate, stlc_for};
use cocalc::random::Generator;
use cocalc::signature::Signature;
use cocalc::sort::Sort;
use cocalc::subst::{bind, lift, rename, weaken, Substitution};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEPTH: usize = 12;

pub fn signatures() -> Vec<Signature> {
    vec![
        Signature::stlc(&["0"]),
        Signature::untyped_forests(),
        Signature::typed_forests(&["0"]),
    ]
}

type Check = fn(&Generator, &mut ChaCha8Rng) -> Result<(), TestCaseError>;

pub struct Property {
    pub name: &'static str,
    pub cases: u32,
    pub check: Check,
}

pub const PROPERTIES: [Property; 12] = [
    Property { name: "rename_identity", cases: 80, check: rename_identity },
    Property { name: "rename_composition", cases: 100, check: rename_composition },
    Property { name: "weaken_is_renaming", cases: 60, check: weaken_is_renaming },
    Property { name: "lift_identity", cases: 60, check: lift_identity },
    Property { name: "lift_naturality", cases: 100, check: lift_naturality },
    Property { name: "bind_rename_compat", cases: 100, check: bind_rename_compat },
    Property { name: "bisim_equivalence", cases: 100, check: bisim_equivalence },
    Property { name: "bisim_monotone", cases: 80, check: bisim_monotone },
    Property { name: "bisim_vs_truncation", cases: 100, check: bisim_vs_truncation },
    Property { name: "lambek", cases: 80, check: lambek },
    Property { name: "memoization", cases: 60, check: memoization },
    Property { name: "enumerate_vs_oracle", cases: 80, check: enumerate_vs_oracle },
];

pub fn total_cases() -> u32 {
    PROPERTIES.iter().map(|p| p.cases).sum()
}

/// Runs one property with a fixed runner seed.
pub fn run(p: &Property) -> Result<(), String> {
    let sigs: Arc<Vec<Generator>> = Arc::new(signatures().iter().map(Generator::new).collect());
    let config = Config {
        cases: p.cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let check = p.check;
    runner
        .run(&(0..3usize, any::<u64>()), move |(k, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            check(&sigs[k], &mut rng)
        })
        .map_err(|e| match e {
            TestError::Fail(why, (k, seed)) => format!("{}: sig {k} seed {seed}: {why}", p.name),
            TestError::Abort(why) => format!("{}: aborted: {why}", p.name),
        })
}

fn same(a: &CoTerm, b: &CoTerm, what: &str) -> Result<(), TestCaseError> {
    prop_assert!(a.ctx() == b.ctx(), "{what}: contexts differ");
    prop_assert!(a.sort() == b.sort(), "{what}: sorts differ");
    prop_assert!(bisim_to_depth(a, b, DEPTH), "{what}: not bisimilar to depth {DEPTH}");
    Ok(())
}

fn term(g: &Generator, rng: &mut ChaCha8Rng) -> CoTerm {
    g.rational(rng).term().clone()
}

/// A second term with the same context and sort as `t`, if one is found.
fn sibling(g: &Generator, rng: &mut ChaCha8Rng, t: &CoTerm) -> Option<CoTerm> {
    g.rational_at(rng, t.ctx(), t.sort()).map(|h| h.term().clone())
}

fn rename_identity(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let t = term(g, rng);
    let r = rename(&ContextMorphism::identity(t.ctx()), &t).unwrap();
    same(&r, &t, "rename id")
}

fn rename_composition(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let t = term(g, rng);
    let r1 = g.renaming(rng, t.ctx());
    let r2 = g.renaming(rng, r1.target());
    let stepwise = rename(&r2, &rename(&r1, &t).unwrap()).unwrap();
    let at_once = rename(&r1.then(&r2).unwrap(), &t).unwrap();
    same(&stepwise, &at_once, "rename then")
}

fn weaken_is_renaming(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let t = term(g, rng);
    let bound = g.context(rng, 2).to_vec();
    let w = weaken(&bound, &t);
    let r = rename(&ContextMorphism::weakening(&bound, t.ctx()), &t).unwrap();
    same(&w, &r, "weaken")
}

fn lift_identity(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let t = term(g, rng);
    let k = rng.gen_range(0..=t.ctx().len());
    let bound: Vec<Sort> = (0..k).map(|i| t.ctx().get(i).unwrap().clone()).collect();
    let base = t.ctx().drop_innermost(k);
    let l = lift(&Substitution::identity(g.signature(), &base), &bound);
    prop_assert!(l.source() == t.ctx());
    same(&bind(&l, &t).unwrap(), &t, "lift id")
}

fn lift_naturality(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let t = term(g, rng);
    let sigma = g.substitution(rng, t.ctx());
    let bound = g.context(rng, 2).to_vec();
    let lhs = bind(&lift(&sigma, &bound), &weaken(&bound, &t)).unwrap();
    let rhs = weaken(&bound, &bind(&sigma, &t).unwrap());
    same(&lhs, &rhs, "lift naturality")
}

fn bind_rename_compat(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let t = term(g, rng);
    let rho = g.renaming(rng, t.ctx());
    let sigma = g.substitution(rng, rho.target());
    let renamed = rename(&rho, &t).unwrap();
    same(
        &bind(&sigma, &renamed).unwrap(),
        &bind(&sigma.after_renaming(&rho).unwrap(), &t).unwrap(),
        "bind after rename",
    )?;
    let rho2 = g.renaming(rng, sigma.target());
    let after = rename(&rho2, &bind(&sigma, &renamed).unwrap()).unwrap();
    let composed = sigma
        .then(&Substitution::from_renaming(g.signature(), &rho2))
        .unwrap();
    same(&after, &bind(&composed, &renamed).unwrap(), "rename after bind")
}

fn bisim_equivalence(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let a = term(g, rng);
    let b = bind(&Substitution::identity(g.signature(), a.ctx()), &a).unwrap();
    let c = rename(&ContextMorphism::identity(b.ctx()), &b).unwrap();
    prop_assert!(bisim_to_depth(&a, &a, DEPTH));
    prop_assert!(bisim_to_depth(&a, &b, DEPTH) && bisim_to_depth(&b, &a, DEPTH));
    prop_assert!(bisim_to_depth(&b, &c, DEPTH) && bisim_to_depth(&a, &c, DEPTH));
    if let Some(u) = sibling(g, rng, &a) {
        let au = bisim_to_depth(&a, &u, DEPTH);
        prop_assert_eq!(au, bisim_to_depth(&u, &a, DEPTH));
        prop_assert_eq!(au, bisim_to_depth(&c, &u, DEPTH));
    }
    Ok(())
}

fn bisim_monotone(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let a = term(g, rng);
    let Some(u) = sibling(g, rng, &a) else {
        return Ok(());
    };
    prop_assert!(bisim_to_depth(&a, &u, 0));
    let mut prev = true;
    for d in 1..=DEPTH {
        let now = bisim_to_depth(&a, &u, d);
        prop_assert!(prev || !now, "equal at depth {d} but not at {}", d - 1);
        prev = now;
    }
    Ok(())
}

/// Everything at level `d` becomes a cut, so only levels `< d` are compared.
fn observed(t: &Truncation, d: usize) -> Truncation {
    match t {
        _ if d == 0 => Truncation::Cut,
        Truncation::Con(op, args) => Truncation::Con(op.clone(), args.iter().map(|a| observed(a, d - 1)).collect()),
        other => other.clone(),
    }
}

fn bisim_vs_truncation(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let a = term(g, rng);
    let mut others = vec![bind(&Substitution::identity(g.signature(), a.ctx()), &a).unwrap()];
    others.extend(sibling(g, rng, &a));
    for u in &others {
        for d in 0..=8 {
            let oracle = observed(&truncate(&a, d), d) == observed(&truncate(u, d), d);
            prop_assert_eq!(bisim_to_depth(&a, u, d), oracle, "depth {}", d);
        }
    }
    Ok(())
}

fn lambek(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let t = term(g, rng);
    let mut todo = vec![(t, 0usize)];
    while let Some((s, level)) = todo.pop() {
        let rebuilt = match s.out() {
            Node::Var(i) => var(g.signature(), s.ctx(), *i).unwrap(),
            Node::Con(op, kids) => {
                if level < 3 {
                    todo.extend(kids.iter().map(|k| (k.clone(), level + 1)));
                }
                con(g.signature(), s.ctx(), op, kids.clone()).unwrap()
            }
        };
        same(&rebuilt, &s, "out then in")?;
        prop_assert_eq!(truncate(&rebuilt, DEPTH), truncate(&s, DEPTH));
    }
    Ok(())
}

fn memoization(g: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let es = g.system(rng);
    let x = es.solve().unwrap()["X0"].clone();
    let y = es.solve().unwrap()["X0"].clone();
    let first = truncate(&x, DEPTH);
    prop_assert!(x.is_forced());
    prop_assert_eq!(&first, &truncate(&x, DEPTH));
    prop_assert_eq!(&first, &truncate(&y, DEPTH));
    if let (Node::Con(_, k1), Node::Con(_, k2)) = (x.out(), x.out()) {
        prop_assert!(k1.iter().zip(k2).all(|(a, b)| a.ptr_eq(b)));
    }
    let sigma = g.substitution(rng, x.ctx());
    let b = bind(&sigma, &x).unwrap();
    let t1 = truncate(&b, 6);
    prop_assert_eq!(t1, truncate(&b, 6));
    Ok(())
}

fn enumerate_vs_oracle(_: &Generator, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let atoms = [Sort::atom("0"), Sort::atom("1")];
    let pick = |rng: &mut ChaCha8Rng| -> Sort {
        let a = atoms.choose(rng).unwrap().clone();
        let b = atoms.choose(rng).unwrap().clone();
        match rng.gen_range(0..5) {
            0 | 1 => a,
            2 => Sort::arrow(a, b),
            3 => Sort::arrow(Sort::arrow(a.clone(), a), b),
            _ => Sort::arrow(a.clone(), Sort::arrow(a, b)),
        }
    };
    let gamma: Vec<Sort> = (0..rng.gen_range(0..=2)).map(|_| pick(rng)).collect();
    let a = pick(rng);
    let fuel = rng.gen_range(0..=9);
    let found = enumerate_inhabitants(&gamma, &a, fuel);
    prop_assert_eq!(&found, &oracle_enumerate(&gamma, &a, fuel));
    let sig = stlc_for(&gamma, &a);
    let ctx = cocalc::context::Context::from_outermost(gamma.iter().cloned());
    for t in &found {
        prop_assert_eq!(t.sort_in(&sig, &ctx).unwrap(), a.clone());
    }
    Ok(())
}
