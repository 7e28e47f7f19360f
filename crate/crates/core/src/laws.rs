//! Randomised checks of the monad laws for `bind`, plus reference
//! implementations used as oracles: a sharing-free `bind` with a pluggable
//! lift, and substitution on finite terms by structural recursion.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bisim::{bisim_to_depth, pretty, Style};
use crate::coterm::{check_to_depth, unfold_coterm, var, Child, CoTerm, FinTerm, Layer, Node};
use crate::random::Generator;
use crate::signature::Signature;
use crate::sort::Sort;
use crate::subst::{bind, lift, Substitution};
use crate::system::{instantiate_rhs, EquationSystem, SystemError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LawConfig {
    pub seed: u64,
    pub trials: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Counterexample {
    /// Smallest depth at which the two sides differ.
    pub depth: usize,
    pub lhs: String,
    pub rhs: String,
    pub trial: usize,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trial={} depth={} lhs={} rhs={}",
            self.trial, self.depth, self.lhs, self.rhs
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawResult {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawReport {
    pub laws: Vec<LawResult>,
}

impl LawReport {
    pub fn failures(&self) -> usize {
        self.laws.iter().map(|l| l.failures).sum()
    }

    pub fn get(&self, name: &str) -> Option<&LawResult> {
        self.laws.iter().find(|l| l.name == name)
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.laws {
            writeln!(f, "LAW {} trials={} failures={}", l.name, l.trials, l.failures)?;
            if let Some(c) = &l.counterexample {
                writeln!(f, "  counterexample {c}")?;
            }
        }
        Ok(())
    }
}

pub const LAWS: [&str; 3] = ["right-unit", "left-unit", "associativity"];

/// Right unit, left unit and associativity of [`bind`], `trials` random
/// instances each, compared with [`bisim_to_depth`].
pub fn check_monad_laws(sig: &Signature, seed: u64, trials: usize, depth: usize) -> LawReport {
    let cfg = LawConfig {
        seed,
        trials,
        depth,
    };
    check_monad_laws_with(sig, &cfg, &|s, t| bind(s, t).expect("contexts agree"))
}

/// As [`check_monad_laws`] with another implementation of `bind`. Sorting
/// errors surfacing in either side count as failures.
pub fn check_monad_laws_with(
    sig: &Signature,
    cfg: &LawConfig,
    bind_fn: &dyn Fn(&Substitution, &CoTerm) -> CoTerm,
) -> LawReport {
    let g = Generator::new(sig);
    let laws = LAWS
        .iter()
        .enumerate()
        .map(|(k, &name)| {
            let mut failures = 0;
            let mut best: Option<Counterexample> = None;
            for trial in 0..cfg.trials {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((k as u64) << 32) | trial as u64);
                let pairs = law_instance(&g, &mut rng, k, bind_fn);
                let worst = pairs
                    .iter()
                    .filter_map(|(l, r)| counterexample(l, r, cfg.depth, trial))
                    .min();
                if let Some(c) = worst {
                    failures += 1;
                    if best.as_ref().is_none_or(|b| c < *b) {
                        best = Some(c);
                    }
                }
            }
            LawResult {
                name,
                trials: cfg.trials,
                failures,
                counterexample: best,
            }
        })
        .collect();
    LawReport { laws }
}

fn law_instance(
    g: &Generator,
    rng: &mut ChaCha8Rng,
    law: usize,
    bind_fn: &dyn Fn(&Substitution, &CoTerm) -> CoTerm,
) -> Vec<(CoTerm, CoTerm)> {
    let sig = g.signature();
    match law {
        0 => {
            let t = g.rational(rng).term().clone();
            let id = Substitution::identity(sig, t.ctx());
            vec![(bind_fn(&id, &t), t)]
        }
        1 => {
            let mut ctx = g.context(rng, 3);
            while ctx.is_empty() {
                ctx = g.context(rng, 3);
            }
            let sigma = g.substitution(rng, &ctx);
            (0..ctx.len())
                .map(|i| {
                    let v = var(sig, &ctx, i).unwrap();
                    (bind_fn(&sigma, &v), sigma.get(i).clone())
                })
                .collect()
        }
        _ => {
            let t = g.rational(rng).term().clone();
            let sigma = g.substitution(rng, t.ctx());
            let tau = g.substitution(rng, sigma.target());
            let composed: Vec<CoTerm> = sigma.entries().iter().map(|e| bind_fn(&tau, e)).collect();
            let st = Substitution::new(sig, sigma.source(), tau.target(), composed)
                .expect("bind lands in the target context");
            let lhs = bind_fn(&tau, &bind_fn(&sigma, &t));
            vec![(lhs, bind_fn(&st, &t))]
        }
    }
}

fn agree_at(a: &CoTerm, b: &CoTerm, d: usize) -> bool {
    check_to_depth(a, d).is_ok() && check_to_depth(b, d).is_ok() && bisim_to_depth(a, b, d)
}

fn render(t: &CoTerm, d: usize) -> String {
    match check_to_depth(t, d + 1) {
        Ok(()) => pretty(t, d, Style::Debruijn),
        Err(e) => format!("<{e}>"),
    }
}

/// `None` when `a` and `b` agree to `depth`; otherwise the shallowest
/// disagreement.
fn counterexample(a: &CoTerm, b: &CoTerm, depth: usize, trial: usize) -> Option<Counterexample> {
    if agree_at(a, b, depth) {
        return None;
    }
    let (mut lo, mut hi) = (0, depth);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if agree_at(a, b, mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    Some(Counterexample {
        depth: lo,
        lhs: render(a, lo),
        rhs: render(b, lo),
        trial,
    })
}

/// Substitution without any sharing, passing binders with `lift_fn`.
pub fn naive_bind(
    sigma: &Substitution,
    t: &CoTerm,
    lift_fn: fn(&Substitution, &[Sort]) -> Substitution,
) -> CoTerm {
    let sig = sigma.signature().clone();
    let sig2 = sig.clone();
    unfold_coterm(
        &sig,
        sigma.target(),
        t.sort(),
        (sigma.clone(), t.clone()),
        move |(s, t): &(Substitution, CoTerm)| match t.try_out() {
            // an ill-sorted input shows up as an out-of-range variable
            Err(_) => Layer::Var(usize::MAX),
            Ok(Node::Var(i)) => match s.get(*i).try_out() {
                Ok(n) => Layer::from_node(n),
                Err(_) => Layer::Var(usize::MAX),
            },
            Ok(Node::Con(op, args)) => {
                let arity = sig2.arity(op).expect("well-sorted input");
                let kids = arity
                    .args
                    .iter()
                    .zip(args)
                    .map(|(a, x)| Child::Seed((lift_fn(s, &a.bound), x.clone())))
                    .collect();
                Layer::Con(op.clone(), kids)
            }
        },
    )
}

/// [`naive_bind`] with the real lift.
pub fn naive_bind_default(sigma: &Substitution, t: &CoTerm) -> CoTerm {
    naive_bind(sigma, t, lift)
}

/// Shifts the free variables of `t` at or above `cutoff` up by `by`.
pub fn finite_shift(sig: &Signature, t: &FinTerm, by: usize, cutoff: usize) -> FinTerm {
    match t {
        FinTerm::Var(i) if *i >= cutoff => FinTerm::Var(i + by),
        FinTerm::Var(i) => FinTerm::Var(*i),
        FinTerm::Con(op, args) => {
            let arity = sig.arity(op).expect("well-sorted finite term");
            FinTerm::Con(
                op.clone(),
                arity
                    .args
                    .iter()
                    .zip(args)
                    .map(|(a, x)| finite_shift(sig, x, by, cutoff + a.bound.len()))
                    .collect(),
            )
        }
    }
}

/// Substitution on finite terms by structural recursion; `sigma[i]` replaces
/// variable `i`.
pub fn finite_bind(sig: &Signature, sigma: &[FinTerm], t: &FinTerm) -> FinTerm {
    match t {
        FinTerm::Var(i) => sigma[*i].clone(),
        FinTerm::Con(op, args) => {
            let arity = sig.arity(op).expect("well-sorted finite term");
            FinTerm::Con(
                op.clone(),
                arity
                    .args
                    .iter()
                    .zip(args)
                    .map(|(a, x)| {
                        let m = a.bound.len();
                        let lifted: Vec<FinTerm> = (0..m)
                            .map(FinTerm::Var)
                            .chain(sigma.iter().map(|e| finite_shift(sig, e, m, 0)))
                            .collect();
                        finite_bind(sig, &lifted, x)
                    })
                    .collect(),
            )
        }
    }
}

/// Whether every unknown's solution equals its right-hand side with the
/// solution plugged in, to `depth`.
pub fn plug_in_holds(es: &EquationSystem, depth: usize) -> Result<bool, SystemError> {
    let sol: BTreeMap<String, CoTerm> = es.solve()?;
    for u in es.unknowns() {
        let rhs = instantiate_rhs(es, &sol, &u.name)?;
        if !bisim_to_depth(&sol[&u.name], &rhs, depth) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fresh seeded generator state, for callers that want to reuse the law
/// generators.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coterm::embed;
    use crate::subst::weaken;

    fn sigs() -> Vec<Signature> {
        vec![
            Signature::stlc(&["0"]),
            Signature::untyped_forests(),
            Signature::typed_forests(&["0"]),
        ]
    }

    #[test]
    fn laws_hold_small() {
        for sig in sigs() {
            let r = check_monad_laws(&sig, 1, 20, 6);
            assert_eq!(r.failures(), 0, "{}\n{r}", sig.name());
            assert_eq!(r.laws.len(), 3);
        }
    }

    #[test]
    fn depth_zero_is_vacuous() {
        let r = check_monad_laws(&Signature::stlc(&["0"]), 5, 10, 0);
        assert_eq!(r.failures(), 0);
        assert!(r.to_string().starts_with("LAW right-unit trials=10 failures=0\n"));
    }

    #[test]
    fn naive_bind_passes() {
        let cfg = LawConfig {
            seed: 9,
            trials: 20,
            depth: 6,
        };
        let r = check_monad_laws_with(&Signature::stlc(&["0"]), &cfg, &naive_bind_default);
        assert_eq!(r.failures(), 0, "{r}");
    }

    fn lift_without_weakening(sigma: &Substitution, bound: &[Sort]) -> Substitution {
        let target = sigma.target().extend(bound);
        let assign = (0..bound.len())
            .map(|i| var(sigma.signature(), &target, i).unwrap())
            .chain(sigma.entries().iter().cloned())
            .collect();
        Substitution::unchecked(sigma.signature(), &sigma.source().extend(bound), &target, assign)
    }

    #[test]
    fn broken_lift_is_caught() {
        let cfg = LawConfig {
            seed: 42,
            trials: 50,
            depth: 8,
        };
        let broken = |s: &Substitution, t: &CoTerm| naive_bind(s, t, lift_without_weakening);
        let r = check_monad_laws_with(&Signature::stlc(&["0"]), &cfg, &broken);
        let assoc = r.get("associativity").unwrap();
        assert!(assoc.failures > 0, "{r}");
        assert!(assoc.counterexample.is_some());
        assert!(r.to_string().contains("counterexample trial="));
    }

    #[test]
    fn finite_bind_agrees_with_bind() {
        let mut rng = rng_for(3, 0);
        for sig in sigs() {
            let g = Generator::new(&sig);
            for _ in 0..30 {
                let (ctx, _, ft) = g.finite(&mut rng, 3);
                let sigma = g.substitution(&mut rng, &ctx);
                let fins: Option<Vec<FinTerm>> = sigma
                    .entries()
                    .iter()
                    .map(|e| crate::coterm::to_finite(e, 10_000))
                    .collect();
                let Some(fins) = fins else { continue };
                let want = finite_bind(&sig, &fins, &ft);
                let want = embed(&sig, sigma.target(), &want).unwrap();
                let got = bind(&sigma, &embed(&sig, &ctx, &ft).unwrap()).unwrap();
                assert!(bisim_to_depth(&got, &want, 64));
            }
        }
    }

    #[test]
    fn shift_matches_weaken() {
        let sig = Signature::stlc(&["0"]);
        let g = Generator::new(&sig);
        let mut rng = rng_for(4, 0);
        let (ctx, _, ft) = g.finite(&mut rng, 3);
        let extra = [Sort::atom("0"), Sort::atom("0")];
        let a = weaken(&extra, &embed(&sig, &ctx, &ft).unwrap());
        let b = embed(&sig, &ctx.extend(&extra), &finite_shift(&sig, &ft, 2, 0)).unwrap();
        assert!(bisim_to_depth(&a, &b, ft.height() + 1));
    }

    #[test]
    fn plug_in_on_random_systems() {
        let mut rng = rng_for(5, 0);
        for sig in sigs() {
            let g = Generator::new(&sig);
            for _ in 0..10 {
                assert!(plug_in_holds(&g.system(&mut rng), 32).unwrap());
            }
        }
    }
}
