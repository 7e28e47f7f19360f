//! Equality of coterms: bounded observation, exact comparison of rational
//! terms through their equation systems, and rendering of finite prefixes.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::context::ContextMorphism;
use crate::coterm::{truncate, CoTerm, Node, Shape, Truncation};
use crate::signature::{Op, OpParam, Signature};
use crate::system::{Arena, EquationSystem, Item, ItemId, SystemError};

/// Compares the first `d` constructor layers of `a` and `b`; whatever lies
/// below that frontier is not observed. Terms of different signature,
/// context or sort are never bisimilar.
pub fn bisim_to_depth(a: &CoTerm, b: &CoTerm, d: usize) -> bool {
    if a.signature() != b.signature() || a.sort() != b.sort() || a.ctx() != b.ctx() {
        return false;
    }
    let mut memo = HashMap::new();
    go(a, b, d, &mut memo)
}

#[derive(Clone, Copy)]
struct Seen {
    ok_upto: usize,
    fails_at: usize,
}

fn go(a: &CoTerm, b: &CoTerm, d: usize, memo: &mut HashMap<(Shape, Shape), Seen>) -> bool {
    if d == 0 || a.ptr_eq(b) || a.shape() == b.shape() {
        return true;
    }
    let key = (a.shape().clone(), b.shape().clone());
    let seen = memo.get(&key).copied().unwrap_or(Seen {
        ok_upto: 0,
        fails_at: usize::MAX,
    });
    if seen.ok_upto >= d {
        return true;
    }
    if seen.fails_at <= d {
        return false;
    }
    let ok = match (a.out(), b.out()) {
        (Node::Var(i), Node::Var(j)) => i == j,
        (Node::Con(p, xs), Node::Con(q, ys)) => {
            p == q
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| go(x, y, d - 1, memo))
        }
        _ => false,
    };
    let entry = memo.entry(key).or_insert(seen);
    if ok {
        entry.ok_upto = entry.ok_upto.max(d);
    } else {
        entry.fails_at = entry.fails_at.min(d);
    }
    ok
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("cannot re-solve provenance: {0}")]
    Resolve(#[from] SystemError),
}

/// A coterm together with the finite system it was solved from.
#[derive(Clone, Debug)]
pub struct RationalHandle {
    term: CoTerm,
    system: EquationSystem,
    root: String,
}

impl RationalHandle {
    pub fn new(system: EquationSystem, root: &str) -> Result<RationalHandle, SystemError> {
        let sol = system.solve()?;
        let term = sol
            .get(root)
            .cloned()
            .ok_or_else(|| SystemError::Missing(root.to_string()))?;
        Ok(RationalHandle {
            term,
            system,
            root: root.to_string(),
        })
    }

    pub fn term(&self) -> &CoTerm {
        &self.term
    }

    pub fn system(&self) -> &EquationSystem {
        &self.system
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    /// Number of non-reference nodes in the compiled system.
    pub fn state_count(&self) -> Result<usize, BisimError> {
        let arena = Arena::compile(&self.system, true)?;
        Ok(arena
            .items
            .iter()
            .filter(|i| !matches!(i, Item::Ref(..)))
            .count())
    }
}

/// Outcome of an exact comparison, with the number of product states visited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RationalVerdict {
    pub equal: bool,
    pub explored: usize,
}

/// Exact bisimilarity of two rational coterms.
pub fn bisim_rational(a: &RationalHandle, b: &RationalHandle) -> Result<bool, BisimError> {
    bisim_rational_verdict(a, b).map(|v| v.equal)
}

/// Explores pairs of system nodes. Each side's renaming into the actual
/// context is abstracted to the relation between local positions that it
/// induces, which keeps the state space finite even when references sit
/// under binders.
pub fn bisim_rational_verdict(a: &RationalHandle, b: &RationalHandle) -> Result<RationalVerdict, BisimError> {
    let ta = a.term();
    let tb = b.term();
    a.system.check()?;
    b.system.check()?;
    if ta.signature() != tb.signature() || ta.ctx() != tb.ctx() || ta.sort() != tb.sort() {
        return Ok(RationalVerdict {
            equal: false,
            explored: 0,
        });
    }
    let xa = Arena::compile(&a.system, true)?;
    let xb = Arena::compile(&b.system, true)?;
    let ua = a.system.unknowns().iter().position(|u| u.name == a.root).unwrap();
    let ub = b.system.unknowns().iter().position(|u| u.name == b.root).unwrap();
    let n = ta.ctx().len();
    let start = (xa.roots[ua], xb.roots[ub], (0..n).map(|i| (i, i)).collect::<Vec<_>>());

    let mut seen: HashSet<(ItemId, ItemId, Vec<(usize, usize)>)> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some((ia, ib, rel)) = queue.pop_front() {
        match (&xa.items[ia], &xb.items[ib]) {
            (Item::Var(i), Item::Var(j)) => {
                if rel.binary_search(&(*i, *j)).is_err() {
                    return Ok(RationalVerdict {
                        equal: false,
                        explored: seen.len(),
                    });
                }
            }
            (Item::Con(p, ps), Item::Con(q, qs)) if p == q && ps.len() == qs.len() => {
                for ((bound, ca), (_, cb)) in ps.iter().zip(qs) {
                    let m = bound.len();
                    let mut lifted: Vec<_> = (0..m).map(|k| (k, k)).collect();
                    lifted.extend(rel.iter().map(|&(i, j)| (i + m, j + m)));
                    let (ca, ra) = pull_back(&xa, *ca, lifted);
                    let (cb, rb) = pull_back_right(&xb, *cb, ra);
                    let state = (ca, cb, rb);
                    if seen.insert(state.clone()) {
                        queue.push_back(state);
                    }
                }
            }
            _ => {
                return Ok(RationalVerdict {
                    equal: false,
                    explored: seen.len(),
                })
            }
        }
    }
    Ok(RationalVerdict {
        equal: true,
        explored: seen.len(),
    })
}

/// Resolves references on the left, pulling the relation back along them.
fn pull_back(x: &Arena, mut item: ItemId, mut rel: Vec<(usize, usize)>) -> (ItemId, Vec<(usize, usize)>) {
    while let Item::Ref(u, rho) = &x.items[item] {
        rel = compose_left(rho, &rel);
        item = x.roots[*u];
    }
    (item, rel)
}

fn pull_back_right(x: &Arena, mut item: ItemId, mut rel: Vec<(usize, usize)>) -> (ItemId, Vec<(usize, usize)>) {
    while let Item::Ref(u, rho) = &x.items[item] {
        let flipped: Vec<_> = rel.iter().map(|&(i, j)| (j, i)).collect();
        let pulled = compose_left(rho, &flipped);
        let mut back: Vec<_> = pulled.into_iter().map(|(j, i)| (i, j)).collect();
        back.sort_unstable();
        rel = back;
        item = x.roots[*u];
    }
    (item, rel)
}

/// `{(p, j) : (rho(p), j) in rel}`, sorted.
fn compose_left(rho: &ContextMorphism, rel: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (p, &q) in rho.map().iter().enumerate() {
        for &(i, j) in rel {
            if i == q {
                out.push((p, j));
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Debruijn,
    Named,
}

/// Renders the depth-`d` truncation of `t`.
pub fn pretty(t: &CoTerm, d: usize, style: Style) -> String {
    let tr = truncate(t, d);
    let mut out = String::new();
    match style {
        Style::Debruijn => debruijn(&tr, &mut out),
        Style::Named => {
            let p = Printer {
                sig: t.signature().clone(),
            };
            p.term(&tr, t.ctx().len(), Prec::Top, &mut out);
        }
    }
    out
}

fn debruijn(t: &Truncation, out: &mut String) {
    match t {
        Truncation::Var(i) => write!(out, "#{i}").unwrap(),
        Truncation::Cut => out.push('…'),
        Truncation::Con(op, args) => {
            write!(out, "{op}").unwrap();
            if !args.is_empty() {
                out.push('(');
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    debruijn(a, out);
                }
                out.push(')');
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Top,
    Sum,
    App,
    Atom,
}

struct Printer {
    sig: Signature,
}

fn name(level: usize) -> String {
    format!("x{level}")
}

fn var_name(i: usize, depth: usize) -> String {
    // de Bruijn index to level, outermost variable first
    match depth.checked_sub(i + 1) {
        Some(l) => name(l),
        None => format!("#{i}"),
    }
}

fn sort_param(op: &Op, i: usize) -> String {
    match op.params().get(i) {
        Some(OpParam::Sort(s)) => s.to_string(),
        Some(p) => p.to_string(),
        None => String::new(),
    }
}

impl Printer {
    fn term(&self, t: &Truncation, depth: usize, prec: Prec, out: &mut String) {
        let op = match t {
            Truncation::Var(i) => return out.push_str(&var_name(*i, depth)),
            Truncation::Cut => return out.push('…'),
            Truncation::Con(op, _) => op,
        };
        let Truncation::Con(_, args) = t else { unreachable!() };
        let stlc = self.sig.is_stlc();
        let forests = self.sig.is_typed_forests() || self.sig.is_untyped_forests();
        match op.name() {
            "lam" if stlc || forests => {
                let wrap = prec > Prec::Top;
                if wrap {
                    out.push('(');
                }
                out.push_str(&format!("λ{}", name(depth)));
                if !self.sig.is_untyped_forests() {
                    out.push_str(&format!(":{}", sort_param(op, 0)));
                }
                out.push_str(". ");
                self.term(&args[0], depth + 1, Prec::Top, out);
                if wrap {
                    out.push(')');
                }
            }
            "app" if stlc => {
                let wrap = prec > Prec::App;
                if wrap {
                    out.push('(');
                }
                self.term(&args[0], depth, Prec::App, out);
                out.push(' ');
                self.term(&args[1], depth, Prec::Atom, out);
                if wrap {
                    out.push(')');
                }
            }
            "sum" if forests => {
                if args.is_empty() {
                    out.push('0');
                    return;
                }
                let wrap = prec > Prec::Sum;
                if wrap {
                    out.push('(');
                }
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        out.push_str(" + ");
                    }
                    self.term(a, depth, Prec::App, out);
                }
                if wrap {
                    out.push(')');
                }
            }
            "tup" if forests => {
                self.term(&args[0], depth, Prec::Atom, out);
                if args.len() > 1 {
                    out.push('⟨');
                    for (j, a) in args[1..].iter().enumerate() {
                        if j > 0 {
                            out.push_str(", ");
                        }
                        self.term(a, depth, Prec::Top, out);
                    }
                    out.push('⟩');
                }
            }
            _ => self.generic(op, args, depth, out),
        }
    }

    fn generic(&self, op: &Op, args: &[Truncation], depth: usize, out: &mut String) {
        out.push_str(op.name());
        if args.is_empty() {
            return;
        }
        let bounds: Vec<usize> = match self.sig.arity(op) {
            Ok(a) => a.args.iter().map(|b| b.bound.len()).collect(),
            Err(_) => vec![0; args.len()],
        };
        out.push('(');
        for (j, (a, m)) in args.iter().zip(bounds).enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            if m > 0 {
                let names: Vec<_> = (0..m).map(|k| name(depth + m - 1 - k)).collect();
                out.push_str(&format!("\\{}. ", names.join(" ")));
            }
            self.term(a, depth + m, Prec::Top, out);
        }
        out.push(')');
    }
}
