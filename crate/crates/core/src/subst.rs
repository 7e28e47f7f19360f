//! Renaming, weakening, binder lifting and monadic substitution.
//!
//! Every operation here is lazy and corecursive. Within one call, results are
//! memoized per (target context, input node), so sharing in the input graph
//! is preserved in the output graph: substituting into a rational term again
//! yields a finitely presented graph that depth-bounded comparison can walk
//! without blowing up exponentially.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::context::{Context, ContextMorphism};
use crate::coterm::{fresh_id, var, CoTerm, Node, Shape, WeakCoTerm};
use crate::signature::Signature;
use crate::sort::Sort;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("term lives in context {found}, expected {expected}")]
    ContextMismatch { expected: Context, found: Context },
    #[error("substitution has {found} entries for a source context of length {expected}")]
    Length { expected: usize, found: usize },
    #[error("entry {position} has sort {found}, expected {expected}")]
    EntrySort {
        position: usize,
        expected: Sort,
        found: Sort,
    },
    #[error("entry {position} lives in context {found}, expected {expected}")]
    EntryContext {
        position: usize,
        expected: Context,
        found: Context,
    },
}

// Memo tables keep the *input* alive, so its address stays a valid key, but
// only weakly reference outputs, which in turn own the tables.
pub(crate) type Memo = Mutex<HashMap<(Context, usize), (CoTerm, WeakCoTerm)>>;

pub(crate) fn memo_get(memo: &Memo, key: &(Context, usize)) -> Option<CoTerm> {
    let table = memo.lock().unwrap_or_else(|e| e.into_inner());
    table.get(key).and_then(|(_, w)| w.upgrade())
}

pub(crate) fn memo_put(memo: &Memo, key: (Context, usize), input: CoTerm, out: &CoTerm) {
    let mut table = memo.lock().unwrap_or_else(|e| e.into_inner());
    table.insert(key, (input, out.downgrade()));
}

struct RenameShared {
    rho: ContextMorphism,
    memo: Memo,
}

/// Applies a renaming; `t` must live in `rho.source()`.
pub fn rename(rho: &ContextMorphism, t: &CoTerm) -> Result<CoTerm, SubstError> {
    if t.ctx() != rho.source() {
        return Err(SubstError::ContextMismatch {
            expected: rho.source().clone(),
            found: t.ctx().clone(),
        });
    }
    Ok(rename_unchecked(rho, t))
}

pub(crate) fn rename_unchecked(rho: &ContextMorphism, t: &CoTerm) -> CoTerm {
    if rho.is_identity() {
        return t.clone();
    }
    let shared = Arc::new(RenameShared {
        rho: rho.clone(),
        memo: Mutex::new(HashMap::new()),
    });
    rename_in(&shared, rho.target().clone(), t)
}

fn rename_in(shared: &Arc<RenameShared>, target: Context, t: &CoTerm) -> CoTerm {
    let key = (target.clone(), t.addr());
    if let Some(hit) = memo_get(&shared.memo, &key) {
        return hit;
    }
    let (sh, input, tgt) = (shared.clone(), t.clone(), target.clone());
    let shape = Shape::Renamed {
        map: shared.rho.map().into(),
        lift: target.len() - shared.rho.target().len(),
        of: Arc::new(t.shape().clone()),
    };
    let out = CoTerm::lazy_shaped(t.signature(), &target, t.sort(), shape, move || {
        let k = tgt.len() - sh.rho.target().len();
        Ok(match input.out() {
            Node::Var(i) if *i < k => Node::Var(*i),
            Node::Var(i) => Node::Var(sh.rho.apply(i - k) + k),
            Node::Con(op, args) => {
                let kids = args
                    .iter()
                    .map(|a| rename_in(&sh, binder_extension(&tgt, &input, a), a))
                    .collect();
                Node::Con(op.clone(), kids)
            }
        })
    });
    memo_put(&shared.memo, key, t.clone(), &out);
    out
}

/// `host` extended by the variables that `child` binds relative to `parent`.
fn binder_extension(host: &Context, parent: &CoTerm, child: &CoTerm) -> Context {
    let m = child.ctx().len() - parent.ctx().len();
    if m == 0 {
        return host.clone();
    }
    let bound: Vec<Sort> = child.ctx().iter().take(m).cloned().collect();
    host.extend(&bound)
}

/// Weakening along `ctx -> bound ++ ctx`.
pub fn weaken(bound: &[Sort], t: &CoTerm) -> CoTerm {
    if bound.is_empty() {
        return t.clone();
    }
    rename_unchecked(&ContextMorphism::weakening(bound, t.ctx()), t)
}

/// Per-variable assignment of terms, mapping `source` into `target`.
#[derive(Clone)]
pub struct Substitution {
    sig: Signature,
    source: Context,
    target: Context,
    assign: Arc<[CoTerm]>,
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Substitution({} => {})", self.source, self.target)
    }
}

impl Substitution {
    pub fn new(
        sig: &Signature,
        source: &Context,
        target: &Context,
        assign: Vec<CoTerm>,
    ) -> Result<Substitution, SubstError> {
        if assign.len() != source.len() {
            return Err(SubstError::Length {
                expected: source.len(),
                found: assign.len(),
            });
        }
        for (position, (s, t)) in source.iter().zip(&assign).enumerate() {
            if t.sort() != s {
                return Err(SubstError::EntrySort {
                    position,
                    expected: s.clone(),
                    found: t.sort().clone(),
                });
            }
            if t.ctx() != target {
                return Err(SubstError::EntryContext {
                    position,
                    expected: target.clone(),
                    found: t.ctx().clone(),
                });
            }
        }
        Ok(Substitution {
            sig: sig.clone(),
            source: source.clone(),
            target: target.clone(),
            assign: assign.into(),
        })
    }

    /// No sorting checks; for building deliberately broken substitutions in
    /// tests.
    #[cfg(test)]
    pub(crate) fn unchecked(sig: &Signature, source: &Context, target: &Context, assign: Vec<CoTerm>) -> Substitution {
        Substitution {
            sig: sig.clone(),
            source: source.clone(),
            target: target.clone(),
            assign: assign.into(),
        }
    }

    /// The unit: every variable to itself.
    pub fn identity(sig: &Signature, ctx: &Context) -> Substitution {
        let assign: Vec<_> = (0..ctx.len()).map(|i| var(sig, ctx, i).unwrap()).collect();
        Substitution {
            sig: sig.clone(),
            source: ctx.clone(),
            target: ctx.clone(),
            assign: assign.into(),
        }
    }

    pub fn from_renaming(sig: &Signature, rho: &ContextMorphism) -> Substitution {
        let assign: Vec<_> = rho
            .map()
            .iter()
            .map(|&j| var(sig, rho.target(), j).unwrap())
            .collect();
        Substitution {
            sig: sig.clone(),
            source: rho.source().clone(),
            target: rho.target().clone(),
            assign: assign.into(),
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn source(&self) -> &Context {
        &self.source
    }

    pub fn target(&self) -> &Context {
        &self.target
    }

    pub fn get(&self, i: usize) -> &CoTerm {
        &self.assign[i]
    }

    pub fn entries(&self) -> &[CoTerm] {
        &self.assign
    }

    /// Kleisli composition: first `self`, then `next` (`i ↦ bind(next, self(i))`).
    pub fn then(&self, next: &Substitution) -> Result<Substitution, SubstError> {
        if self.target != next.source {
            return Err(SubstError::ContextMismatch {
                expected: next.source.clone(),
                found: self.target.clone(),
            });
        }
        let assign: Vec<_> = self.assign.iter().map(|t| bind_unchecked(next, t)).collect();
        Ok(Substitution {
            sig: self.sig.clone(),
            source: self.source.clone(),
            target: next.target.clone(),
            assign: assign.into(),
        })
    }

    /// Precomposition with a renaming: `i ↦ self(rho(i))`.
    pub fn after_renaming(&self, rho: &ContextMorphism) -> Result<Substitution, SubstError> {
        if rho.target() != &self.source {
            return Err(SubstError::ContextMismatch {
                expected: self.source.clone(),
                found: rho.target().clone(),
            });
        }
        let assign: Vec<_> = rho.map().iter().map(|&j| self.assign[j].clone()).collect();
        Ok(Substitution {
            sig: self.sig.clone(),
            source: rho.source().clone(),
            target: self.target.clone(),
            assign: assign.into(),
        })
    }
}

/// Passing under a binder: fresh variables go to themselves, old assignments
/// are weakened past the binder.
pub fn lift(sigma: &Substitution, bound: &[Sort]) -> Substitution {
    if bound.is_empty() {
        return sigma.clone();
    }
    let k = bound.len();
    let target = sigma.target.extend(bound);
    let assign: Vec<_> = (0..k)
        .map(|i| var(&sigma.sig, &target, i).unwrap())
        .chain(sigma.assign.iter().map(|t| weaken(bound, t)))
        .collect();
    Substitution {
        sig: sigma.sig.clone(),
        source: sigma.source.extend(bound),
        target,
        assign: assign.into(),
    }
}

struct BindShared {
    id: u64,
    sigma: Substitution,
    memo: Memo,
    weakened: Mutex<HashMap<(Context, usize), WeakCoTerm>>,
}

/// Monadic substitution: replaces every variable of `t` by its assignment.
pub fn bind(sigma: &Substitution, t: &CoTerm) -> Result<CoTerm, SubstError> {
    if t.ctx() != &sigma.source {
        return Err(SubstError::ContextMismatch {
            expected: sigma.source.clone(),
            found: t.ctx().clone(),
        });
    }
    Ok(bind_unchecked(sigma, t))
}

pub(crate) fn bind_unchecked(sigma: &Substitution, t: &CoTerm) -> CoTerm {
    let shared = Arc::new(BindShared {
        id: fresh_id(),
        sigma: sigma.clone(),
        memo: Mutex::new(HashMap::new()),
        weakened: Mutex::new(HashMap::new()),
    });
    bind_in(&shared, sigma.target.clone(), t)
}

fn weakened_entry(shared: &BindShared, target: &Context, j: usize) -> CoTerm {
    let key = (target.clone(), j);
    let mut table = shared.weakened.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(hit) = table.get(&key).and_then(WeakCoTerm::upgrade) {
        return hit;
    }
    let k = target.len() - shared.sigma.target.len();
    let bound: Vec<Sort> = target.iter().take(k).cloned().collect();
    let w = weaken(&bound, &shared.sigma.assign[j]);
    table.insert(key, w.downgrade());
    w
}

fn bind_in(shared: &Arc<BindShared>, target: Context, t: &CoTerm) -> CoTerm {
    let key = (target.clone(), t.addr());
    if let Some(hit) = memo_get(&shared.memo, &key) {
        return hit;
    }
    let (sh, input, tgt) = (shared.clone(), t.clone(), target.clone());
    let shape = Shape::Bound {
        bind: shared.id,
        lift: target.len() - shared.sigma.target.len(),
        of: Arc::new(t.shape().clone()),
    };
    let out = CoTerm::lazy_shaped(t.signature(), &target, t.sort(), shape, move || {
        let k = tgt.len() - sh.sigma.target.len();
        Ok(match input.out() {
            Node::Var(i) if *i < k => Node::Var(*i),
            Node::Var(i) => weakened_entry(&sh, &tgt, i - k).out().clone(),
            Node::Con(op, args) => {
                let kids = args
                    .iter()
                    .map(|a| bind_in(&sh, binder_extension(&tgt, &input, a), a))
                    .collect();
                Node::Con(op.clone(), kids)
            }
        })
    });
    memo_put(&shared.memo, key, t.clone(), &out);
    out
}
