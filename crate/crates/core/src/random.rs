//! Seeded generators for test inputs: guarded equation systems (hence
//! rational coterms), substitutions, and finite terms.
//!
//! Systems have at most [`MAX_UNKNOWNS`] unknowns with right-hand sides of
//! constructor depth at most [`RHS_DEPTH`]. At each node the choices (a
//! matching variable, a guarded reference, an embedded finite term, or a
//! constructor from the probe set at that sort) are tried in random order,
//! backtracking on dead ends within a node budget.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bisim::RationalHandle;
use crate::context::{Context, ContextMorphism};
use crate::coterm::{embed, var, FinTerm};
use crate::signature::{finite_ops, Op, OpParam, Signature};
use crate::sort::Sort;
use crate::subst::Substitution;
use crate::system::{EquationSystem, PreTerm};

pub const MAX_UNKNOWNS: usize = 4;
pub const RHS_DEPTH: usize = 3;
const NODE_BUDGET: usize = 400;
const RETRIES: usize = 200;

/// Probe sets of sorts and constructors for one signature.
#[derive(Clone, Debug)]
pub struct Generator {
    sig: Signature,
    types: Vec<Sort>,
    ctx_sorts: Vec<Sort>,
    root_sorts: Vec<Sort>,
}

fn probe_types(atoms: &[Sort]) -> Vec<Sort> {
    let mut out: Vec<Sort> = atoms.to_vec();
    for a in atoms {
        for b in atoms {
            out.push(Sort::arrow(a.clone(), b.clone()));
        }
    }
    if let Some(a) = atoms.first() {
        let aa = Sort::arrow(a.clone(), a.clone());
        out.push(Sort::arrow(aa.clone(), a.clone()));
        out.push(Sort::arrow(a.clone(), aa));
    }
    out
}

impl Generator {
    pub fn new(sig: &Signature) -> Generator {
        let atoms = sig.atoms();
        let types = probe_types(&atoms);
        let cat = |c: &str| Sort::atom(c);
        let (ctx_sorts, root_sorts) = if sig.is_stlc() {
            (types.clone(), types.clone())
        } else if sig.is_untyped_forests() {
            (
                vec![cat("v"), cat("v"), cat("t")],
                vec![cat("t"), cat("t"), cat("e")],
            )
        } else if sig.is_typed_forests() {
            let ctx = types.iter().map(|a| Sort::pair(a.clone(), cat("v"))).collect();
            let mut roots: Vec<Sort> = types.iter().map(|a| Sort::pair(a.clone(), cat("t"))).collect();
            roots.extend(atoms.iter().map(|p| Sort::pair(p.clone(), cat("e"))));
            (ctx, roots)
        } else {
            let sorts = sig.as_finite().map(|f| f.sorts.clone()).unwrap_or_default();
            (sorts.clone(), sorts)
        };
        Generator {
            sig: sig.clone(),
            types,
            ctx_sorts,
            root_sorts,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    /// Constructors of the probe set with target `sort`.
    pub fn ops_at(&self, sort: &Sort) -> Vec<Op> {
        let sig = &self.sig;
        let s = |x: &Sort| OpParam::Sort(x.clone());
        if sig.is_stlc() {
            let mut ops = Vec::new();
            if let Sort::Arrow(a, b) = sort {
                ops.push(Op::new("lam", vec![s(a), s(b)]));
            }
            for a in &self.types {
                ops.push(Op::new("app", vec![s(a), s(sort)]));
            }
            ops
        } else if sig.is_untyped_forests() {
            match sort.as_atom() {
                Some("t") => {
                    let mut ops = vec![Op::named("lam")];
                    ops.extend((0..3).map(|n| Op::new("sum", vec![OpParam::Nat(n)])));
                    ops
                }
                Some("e") => (0..3).map(|k| Op::new("tup", vec![OpParam::Nat(k)])).collect(),
                _ => Vec::new(),
            }
        } else if sig.is_typed_forests() {
            let Sort::Pair(ty, c) = sort else {
                return Vec::new();
            };
            match (&**ty, c.as_atom()) {
                (Sort::Arrow(a, b), Some("t")) => vec![Op::new("lam", vec![s(a), s(b)])],
                (p @ Sort::Atom(_), Some("t")) => (0..3)
                    .map(|n| Op::new("sum", vec![s(p), OpParam::Nat(n)]))
                    .collect(),
                (p @ Sort::Atom(_), Some("e")) => self
                    .types
                    .iter()
                    .map(Sort::spine)
                    .filter(|(_, r)| r == p)
                    .map(|(bs, r)| Op::new("tup", vec![OpParam::Sorts(bs), OpParam::Sort(r)]))
                    .collect(),
                _ => Vec::new(),
            }
        } else {
            let Some(f) = sig.as_finite() else {
                return Vec::new();
            };
            finite_ops(f)
                .into_iter()
                .filter(|op| sig.arity(op).map(|a| &a.target == sort).unwrap_or(false))
                .collect()
        }
    }

    /// The constructors reachable from the probe sorts, without repeats.
    pub fn probe_ops(&self) -> Vec<Op> {
        let mut sorts: Vec<Sort> = self.root_sorts.clone();
        sorts.extend(self.ctx_sorts.iter().cloned());
        let mut out: Vec<Op> = Vec::new();
        for s in &sorts {
            for op in self.ops_at(s) {
                if !out.contains(&op) {
                    out.push(op);
                }
            }
        }
        out
    }

    /// Up to `max_len` sorts drawn from the context probe set.
    pub fn context<R: Rng + ?Sized>(&self, rng: &mut R, max_len: usize) -> Context {
        let n = rng.gen_range(0..=max_len);
        Context::from_outermost((0..n).filter_map(|_| self.ctx_sorts.choose(rng).cloned()))
    }

    pub fn sort<R: Rng + ?Sized>(&self, rng: &mut R) -> Sort {
        self.root_sorts
            .choose(rng)
            .cloned()
            .unwrap_or_else(|| Sort::atom("?"))
    }

    /// A random guarded system whose first unknown `X0` has the given
    /// context and sort. `None` when no right-hand side was found within the
    /// retry budget.
    pub fn system_at<R: Rng + ?Sized>(&self, rng: &mut R, ctx: &Context, sort: &Sort) -> Option<EquationSystem> {
        let mut pool = self.ctx_sorts.clone();
        pool.extend(ctx.iter().cloned());
        'attempt: for _ in 0..RETRIES {
            let n = rng.gen_range(1..=MAX_UNKNOWNS);
            let mut decls = vec![("X0".to_string(), ctx.clone(), sort.clone())];
            for k in 1..n {
                let len = rng.gen_range(0..=2);
                let c = Context::from_outermost((0..len).filter_map(|_| pool.choose(rng).cloned()));
                decls.push((format!("X{k}"), c, self.sort(rng)));
            }
            let mut d = Draft {
                g: self,
                rng: &mut *rng,
                budget: NODE_BUDGET,
                unknowns: &decls,
                embeds: true,
            };
            let mut rhss = Vec::new();
            for (_, c, s) in &decls {
                match d.term(c, s, RHS_DEPTH, false) {
                    Some(t) => rhss.push(t),
                    None => continue 'attempt,
                }
            }
            let mut es = EquationSystem::new(&self.sig);
            for ((name, c, s), rhs) in decls.into_iter().zip(rhss) {
                es.add(&name, c, s, rhs).expect("names are distinct");
            }
            debug_assert!(es.check().is_ok(), "{:?}", es.check());
            return Some(es);
        }
        None
    }

    /// A random system over a random context and sort.
    pub fn system<R: Rng + ?Sized>(&self, rng: &mut R) -> EquationSystem {
        for _ in 0..1000 {
            let ctx = self.context(rng, 3);
            let sort = self.sort(rng);
            if let Some(es) = self.system_at(rng, &ctx, &sort) {
                return es;
            }
        }
        panic!("no system found for {}", self.sig.name())
    }

    /// The solution of a random system, at its first unknown.
    pub fn rational<R: Rng + ?Sized>(&self, rng: &mut R) -> RationalHandle {
        RationalHandle::new(self.system(rng), "X0").expect("generated systems are guarded")
    }

    pub fn rational_at<R: Rng + ?Sized>(&self, rng: &mut R, ctx: &Context, sort: &Sort) -> Option<RationalHandle> {
        let es = self.system_at(rng, ctx, sort)?;
        Some(RationalHandle::new(es, "X0").expect("generated systems are guarded"))
    }

    /// A substitution out of `source`. The target holds a shuffled copy of
    /// the source sorts and up to two extra ones; each entry is a variable
    /// or a random rational term.
    pub fn substitution<R: Rng + ?Sized>(&self, rng: &mut R, source: &Context) -> Substitution {
        let mut sorts = source.to_vec();
        let extra = rng.gen_range(0..=2);
        sorts.extend((0..extra).filter_map(|_| self.ctx_sorts.choose(rng).cloned()));
        sorts.shuffle(rng);
        let target = Context::from_outermost(sorts);
        let entries = source
            .iter()
            .map(|s| {
                if rng.gen_bool(0.5) {
                    if let Some(h) = self.rational_at(rng, &target, s) {
                        return h.term().clone();
                    }
                }
                let cands: Vec<usize> = (0..target.len()).filter(|&j| target.get(j) == Some(s)).collect();
                var(&self.sig, &target, *cands.choose(rng).unwrap()).unwrap()
            })
            .collect();
        Substitution::new(&self.sig, source, &target, entries).expect("entries are well sorted")
    }

    /// A renaming out of `source` into a shuffled copy of its sorts plus up
    /// to two extra ones. Not necessarily injective.
    pub fn renaming<R: Rng + ?Sized>(&self, rng: &mut R, source: &Context) -> ContextMorphism {
        let mut sorts = source.to_vec();
        let extra = rng.gen_range(0..=2);
        sorts.extend((0..extra).filter_map(|_| self.ctx_sorts.choose(rng).cloned()));
        sorts.shuffle(rng);
        let target = Context::from_outermost(sorts);
        let map = source
            .iter()
            .map(|s| {
                let cands: Vec<usize> = (0..target.len()).filter(|&j| target.get(j) == Some(s)).collect();
                *cands.choose(rng).unwrap()
            })
            .collect();
        ContextMorphism::new(source.clone(), target, map).expect("sorts agree")
    }

    /// A finite term of constructor depth at most `depth`.
    pub fn finite_at<R: Rng + ?Sized>(&self, rng: &mut R, ctx: &Context, sort: &Sort, depth: usize) -> Option<FinTerm> {
        let mut d = Draft {
            g: self,
            rng,
            budget: NODE_BUDGET,
            unknowns: &[],
            embeds: false,
        };
        d.term(ctx, sort, depth, false).map(|p| to_fin(&p))
    }

    /// A finite term over a random context and sort.
    pub fn finite<R: Rng + ?Sized>(&self, rng: &mut R, depth: usize) -> (Context, Sort, FinTerm) {
        for _ in 0..1000 {
            let ctx = self.context(rng, 3);
            let sort = self.sort(rng);
            if let Some(t) = self.finite_at(rng, &ctx, &sort, depth) {
                return (ctx, sort, t);
            }
        }
        panic!("no finite term found for {}", self.sig.name())
    }
}

fn to_fin(p: &PreTerm) -> FinTerm {
    match p {
        PreTerm::Var(i) => FinTerm::Var(*i),
        PreTerm::Con(op, args) => FinTerm::Con(op.clone(), args.iter().map(to_fin).collect()),
        _ => unreachable!("finite drafts have no references"),
    }
}

enum Choice {
    Var(usize),
    Ref(usize),
    Embed,
    Con(Op),
}

struct Draft<'a, R: ?Sized> {
    g: &'a Generator,
    rng: &'a mut R,
    budget: usize,
    unknowns: &'a [(String, Context, Sort)],
    embeds: bool,
}

impl<R: Rng + ?Sized> Draft<'_, R> {
    fn term(&mut self, ctx: &Context, sort: &Sort, depth: usize, guarded: bool) -> Option<PreTerm> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        let mut choices = Vec::new();
        for (i, s) in ctx.iter().enumerate() {
            if s == sort {
                choices.push(Choice::Var(i));
            }
        }
        if guarded {
            for (k, (_, c, s)) in self.unknowns.iter().enumerate() {
                if s == sort && c.iter().all(|x| ctx.iter().any(|y| y == x)) {
                    choices.push(Choice::Ref(k));
                }
            }
        }
        if self.embeds && depth > 0 && self.rng.gen_bool(0.25) {
            choices.push(Choice::Embed);
        }
        for op in self.g.ops_at(sort) {
            let nullary = self.g.sig.arity(&op).map(|a| a.args.is_empty()).unwrap_or(false);
            if depth > 0 || nullary {
                choices.push(Choice::Con(op));
            }
        }
        choices.shuffle(self.rng);
        if self.rng.gen_bool(0.6) {
            choices.sort_by_key(|c| !matches!(c, Choice::Con(_)));
        }
        for c in choices {
            if let Some(t) = self.choose(c, ctx, sort, depth) {
                return Some(t);
            }
            if self.budget == 0 {
                return None;
            }
        }
        None
    }

    fn choose(&mut self, c: Choice, ctx: &Context, sort: &Sort, depth: usize) -> Option<PreTerm> {
        match c {
            Choice::Var(i) => Some(PreTerm::Var(i)),
            Choice::Ref(k) => {
                let (name, c, _) = &self.unknowns[k];
                let map = c
                    .iter()
                    .map(|s| {
                        let cands: Vec<usize> =
                            (0..ctx.len()).filter(|&j| ctx.get(j) == Some(s)).collect();
                        *cands.choose(self.rng).unwrap()
                    })
                    .collect();
                let rho = ContextMorphism::new(c.clone(), ctx.clone(), map).unwrap();
                Some(PreTerm::reference(name, rho))
            }
            Choice::Embed => {
                let mut inner = Draft {
                    g: self.g,
                    rng: &mut *self.rng,
                    budget: self.budget,
                    unknowns: &[],
                    embeds: false,
                };
                let p = inner.term(ctx, sort, depth.min(2), false);
                self.budget = inner.budget;
                let t = embed(&self.g.sig, ctx, &to_fin(&p?)).ok()?;
                Some(PreTerm::Embed(t, ContextMorphism::identity(ctx)))
            }
            Choice::Con(op) => {
                let arity = self.g.sig.arity(&op).ok()?;
                let mut kids = Vec::with_capacity(arity.args.len());
                for a in &arity.args {
                    kids.push(self.term(&ctx.extend(&a.bound), &a.sort, depth - 1, true)?);
                }
                Some(PreTerm::Con(op, kids))
            }
        }
    }
}
