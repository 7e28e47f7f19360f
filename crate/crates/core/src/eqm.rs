//! Substitution into a rational term by solving an equation system, kept
//! apart from [`crate::subst::bind`] so the two can be checked against each
//! other.
//!
//! The new system has one unknown per pair (unknown of the input system,
//! symbolic substitution reaching it). A symbolic substitution sends each
//! variable of the unknown's context either to a variable bound on the way
//! down or to a weakened entry of the original substitution. Normalising
//! the bound variables to first-use order makes the set of such pairs
//! finite.

use std::collections::{HashMap, VecDeque};

use crate::bisim::RationalHandle;
use crate::context::{Context, ContextMorphism};
use crate::coterm::CoTerm;
use crate::signature::Signature;
use crate::sort::Sort;
use crate::subst::{SubstError, Substitution};
use crate::system::{EquationSystem, PreTerm, SystemError, EMBED_NODE_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EqmError {
    #[error(transparent)]
    Subst(#[from] SubstError),
    #[error("input is not rational: {0}")]
    NotRational(#[from] SystemError),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Entry {
    Fresh(usize),
    Base(usize),
}

type Key = (usize, Vec<Entry>);

struct Builder<'a> {
    sig: Signature,
    input: &'a EquationSystem,
    sigma: &'a Substitution,
    names: HashMap<Key, String>,
    queue: VecDeque<(Key, Vec<Sort>)>,
}

impl<'a> Builder<'a> {
    /// Canonical form of a symbolic substitution whose fresh variables live
    /// in `acc`: used fresh variables first, in order of first use.
    fn canonical(&mut self, unknown: usize, entries: &[Entry], acc: &[Sort]) -> (String, ContextMorphism, Context) {
        let mut used = Vec::new();
        let canon: Vec<Entry> = entries
            .iter()
            .map(|e| match *e {
                Entry::Fresh(c) => Entry::Fresh(match used.iter().position(|&u| u == c) {
                    Some(k) => k,
                    None => {
                        used.push(c);
                        used.len() - 1
                    }
                }),
                b => b,
            })
            .collect();
        let fresh: Vec<Sort> = used.iter().map(|&c| acc[c].clone()).collect();
        let base = self.sigma.target();
        let key_ctx = base.extend(&fresh);
        let outer = base.extend(acc);
        let map = used
            .iter()
            .copied()
            .chain((0..base.len()).map(|q| acc.len() + q))
            .collect();
        let r = ContextMorphism::unchecked(key_ctx.clone(), outer, map);
        let key = (unknown, canon);
        let next = self.names.len();
        let name = match self.names.get(&key) {
            Some(n) => n.clone(),
            None => {
                let n = format!("{}#{next}", self.input.unknowns()[unknown].name);
                self.names.insert(key.clone(), n.clone());
                self.queue.push_back((key, fresh));
                n
            }
        };
        (name, r, key_ctx)
    }

    /// Translates a right-hand side under the symbolic substitution
    /// `entries`; `acc` are the sorts of its fresh variables and `bl` the
    /// binders crossed inside the right-hand side so far.
    fn translate(&mut self, pt: &PreTerm, entries: &[Entry], acc: &[Sort], bl: &[Sort]) -> Result<PreTerm, EqmError> {
        let n = bl.len();
        Ok(match pt {
            PreTerm::Var(i) if *i < n => PreTerm::Var(*i),
            PreTerm::Var(i) => match entries[i - n] {
                Entry::Fresh(c) => PreTerm::Var(c + n),
                Entry::Base(b) => {
                    let mut shift: Vec<Sort> = bl.to_vec();
                    shift.extend_from_slice(acc);
                    let w = ContextMorphism::weakening(&shift, self.sigma.target());
                    PreTerm::Embed(self.sigma.get(b).clone(), w)
                }
            },
            PreTerm::Con(op, args) => {
                let arity = self.sig.arity(op).map_err(|e| SystemError::Sorting {
                    unknown: String::new(),
                    path: Vec::new(),
                    error: e.into(),
                })?;
                let mut kids = Vec::with_capacity(args.len());
                for (a, p) in arity.args.iter().zip(args) {
                    let mut inner = a.bound.clone();
                    inner.extend_from_slice(bl);
                    kids.push(self.translate(p, entries, acc, &inner)?);
                }
                PreTerm::Con(op.clone(), kids)
            }
            PreTerm::Ref { name, rename } => {
                let w = self
                    .input
                    .unknowns()
                    .iter()
                    .position(|u| &u.name == name)
                    .expect("checked");
                let sub: Vec<Entry> = rename
                    .map()
                    .iter()
                    .map(|&q| {
                        if q < n {
                            Entry::Fresh(q)
                        } else {
                            match entries[q - n] {
                                Entry::Fresh(c) => Entry::Fresh(c + n),
                                b => b,
                            }
                        }
                    })
                    .collect();
                let mut outer: Vec<Sort> = bl.to_vec();
                outer.extend_from_slice(acc);
                let (new_name, r, _) = self.canonical(w, &sub, &outer);
                PreTerm::reference(&new_name, r)
            }
            PreTerm::Embed(t, rho) => {
                let ft = crate::coterm::to_finite(t, EMBED_NODE_BUDGET).ok_or_else(|| {
                    SystemError::InfiniteEmbed {
                        unknown: String::new(),
                        path: Vec::new(),
                    }
                })?;
                let inlined = PreTerm::from_finite(&ft)
                    .renamed(&self.sig, rho)
                    .map_err(|error| SystemError::Sorting {
                        unknown: String::new(),
                        path: Vec::new(),
                        error,
                    })?;
                self.translate(&inlined, entries, acc, bl)?
            }
        })
    }
}

/// Substitutes `sigma` into the rational term `t` by building and solving
/// the induced equation system.
pub fn bind_via_solve(sigma: &Substitution, t: &RationalHandle) -> Result<CoTerm, EqmError> {
    let term = t.term();
    if term.ctx() != sigma.source() {
        return Err(SubstError::ContextMismatch {
            expected: sigma.source().clone(),
            found: term.ctx().clone(),
        }
        .into());
    }
    let input = t.system();
    input.check()?;
    let root = input
        .unknowns()
        .iter()
        .position(|u| u.name == t.root())
        .ok_or_else(|| SystemError::Missing(t.root().to_string()))?;
    let mut b = Builder {
        sig: input.signature().clone(),
        input,
        sigma,
        names: HashMap::new(),
        queue: VecDeque::new(),
    };
    let all_base: Vec<Entry> = (0..sigma.source().len()).map(Entry::Base).collect();
    let (root_name, _, _) = b.canonical(root, &all_base, &[]);
    let mut out = EquationSystem::new(&b.sig);
    while let Some(((w, entries), fresh)) = b.queue.pop_front() {
        let unk = &input.unknowns()[w];
        let name = b.names[&(w, entries.clone())].clone();
        let rhs = b.translate(&unk.rhs, &entries, &fresh, &[])?;
        let ctx = sigma.target().extend(&fresh);
        out.add(&name, ctx, unk.sort.clone(), rhs)?;
    }
    let sol = out.solve()?;
    Ok(sol[&root_name].clone())
}

/// Number of unknowns in the system built by [`bind_via_solve`]; finite by
/// construction.
pub fn induced_system_size(sigma: &Substitution, t: &RationalHandle) -> Result<usize, EqmError> {
    let input = t.system();
    let root = input
        .unknowns()
        .iter()
        .position(|u| u.name == t.root())
        .ok_or_else(|| SystemError::Missing(t.root().to_string()))?;
    let mut b = Builder {
        sig: input.signature().clone(),
        input,
        sigma,
        names: HashMap::new(),
        queue: VecDeque::new(),
    };
    let all_base: Vec<Entry> = (0..sigma.source().len()).map(Entry::Base).collect();
    b.canonical(root, &all_base, &[]);
    while let Some(((w, entries), fresh)) = b.queue.pop_front() {
        let unk = &input.unknowns()[w];
        b.translate(&unk.rhs, &entries, &fresh, &[])?;
    }
    Ok(b.names.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::bisim_to_depth;
    use crate::coterm::var;
    use crate::eqs::parse_equations;
    use crate::subst::bind;

    fn s(x: &str) -> Sort {
        x.parse().unwrap()
    }

    #[test]
    fn identity_and_relabelling() {
        let sig = Signature::stlc(&["0"]);
        let es = parse_equations("let S : 0 [f : 0->0, x : 0] = f (f S)", &sig).unwrap();
        let h = RationalHandle::new(es, "S").unwrap();
        let ctx = h.term().ctx().clone();
        let id = Substitution::identity(&sig, &ctx);
        let a = bind_via_solve(&id, &h).unwrap();
        assert!(bisim_to_depth(&a, h.term(), 64));
        // f := g, x := x in a wider target
        let tgt = Context::from_outermost([s("0->0"), s("0->0"), s("0")]);
        let sigma = Substitution::new(
            &sig,
            &ctx,
            &tgt,
            vec![var(&sig, &tgt, 0).unwrap(), var(&sig, &tgt, 1).unwrap()],
        )
        .unwrap();
        let direct = bind(&sigma, h.term()).unwrap();
        let solved = bind_via_solve(&sigma, &h).unwrap();
        assert!(bisim_to_depth(&direct, &solved, 64));
        assert_eq!(induced_system_size(&sigma, &h).unwrap(), 1);
    }

    #[test]
    fn binders_produce_finitely_many_unknowns() {
        let sig = Signature::stlc(&["0"]);
        // a lambda that keeps re-binding and using the outer variable
        let es = parse_equations(
            "let L : 0->0 [y : 0] = \\z. app<0,0> (L@[y:=z]) y",
            &sig,
        )
        .unwrap();
        let h = RationalHandle::new(es, "L").unwrap();
        let ctx = h.term().ctx().clone();
        let tgt = Context::from_outermost([s("0->0"), s("0")]);
        let fx = parse_equations("let A : 0 [f : 0->0, x : 0] = f x", &sig).unwrap();
        let fx = fx.solve().unwrap()["A"].clone();
        let sigma = Substitution::new(&sig, &ctx, &tgt, vec![fx]).unwrap();
        let direct = bind(&sigma, h.term()).unwrap();
        let solved = bind_via_solve(&sigma, &h).unwrap();
        assert!(bisim_to_depth(&direct, &solved, 64));
        assert!(induced_system_size(&sigma, &h).unwrap() <= 2);
    }
}
