//! Guarded equation systems and their unique solutions.
//!
//! Each unknown has a declared context and sort and a finite right-hand side
//! that may mention other unknowns (through a renaming into the local
//! context) and already known coterms. When every reference sits under at
//! least one constructor, the system has exactly one solution, computed here
//! lazily: a coterm per (rhs node, renaming into the actual context), shared
//! through a table so that rational terms become finite cyclic graphs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::context::{Context, ContextMorphism};
use crate::coterm::{con, fresh_id, to_finite, var, CoTerm, CoTermError, FinTerm, Node, Shape, WeakCoTerm};
use crate::signature::{Op, Signature};
use crate::sort::Sort;
use crate::subst::{rename, rename_unchecked};

/// Finite right-hand side of an equation.
#[derive(Clone)]
pub enum PreTerm {
    Var(usize),
    /// Children live in the local context extended by the arity's binders.
    Con(Op, Vec<PreTerm>),
    /// An unknown, with a renaming from its declared context into the local one.
    Ref { name: String, rename: ContextMorphism },
    /// A known coterm, renamed into the local context.
    Embed(CoTerm, ContextMorphism),
}

impl PreTerm {
    pub fn con(op: Op, args: Vec<PreTerm>) -> PreTerm {
        PreTerm::Con(op, args)
    }

    pub fn reference(name: &str, rename: ContextMorphism) -> PreTerm {
        PreTerm::Ref {
            name: name.to_string(),
            rename,
        }
    }

    pub fn from_finite(ft: &FinTerm) -> PreTerm {
        match ft {
            FinTerm::Var(i) => PreTerm::Var(*i),
            FinTerm::Con(op, args) => {
                PreTerm::Con(op.clone(), args.iter().map(PreTerm::from_finite).collect())
            }
        }
    }

    /// Renames the free variables of a pre-term along `rho`, which must start
    /// at the pre-term's local context.
    pub fn renamed(&self, sig: &Signature, rho: &ContextMorphism) -> Result<PreTerm, CoTermError> {
        Ok(match self {
            PreTerm::Var(i) => PreTerm::Var(rho.apply(*i)),
            PreTerm::Con(op, args) => {
                let arity = sig.arity(op)?;
                let kids = arity
                    .args
                    .iter()
                    .zip(args)
                    .map(|(a, p)| p.renamed(sig, &rho.lift(&a.bound)))
                    .collect::<Result<_, _>>()?;
                PreTerm::Con(op.clone(), kids)
            }
            PreTerm::Ref { name, rename } => PreTerm::Ref {
                name: name.clone(),
                rename: rename.then_unchecked(rho),
            },
            PreTerm::Embed(t, r) => PreTerm::Embed(t.clone(), r.then_unchecked(rho)),
        })
    }
}

impl fmt::Debug for PreTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreTerm::Var(i) => write!(f, "#{i}"),
            PreTerm::Con(op, args) => {
                write!(f, "{op}")?;
                if !args.is_empty() {
                    f.debug_list().entries(args).finish()?;
                }
                Ok(())
            }
            PreTerm::Ref { name, rename } => write!(f, "{name}@{:?}", rename.map()),
            PreTerm::Embed(t, r) => write!(f, "embed({t:?})@{:?}", r.map()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Unknown {
    pub name: String,
    pub ctx: Context,
    pub sort: Sort,
    pub rhs: PreTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("unknown `{0}` is defined twice")]
    Duplicate(String),
    #[error("no unknown named `{0}`")]
    Missing(String),
    #[error("in `{unknown}`: reference to undefined unknown `{name}` at /{}", path_string(.path))]
    UndefinedRef {
        unknown: String,
        name: String,
        path: Vec<usize>,
    },
    #[error("in `{unknown}`: unguarded reference to `{name}` at /{}", path_string(.path))]
    Unguarded {
        unknown: String,
        name: String,
        path: Vec<usize>,
    },
    #[error("in `{unknown}` at /{}: {error}", path_string(.path))]
    Sorting {
        unknown: String,
        path: Vec<usize>,
        error: CoTermError,
    },
    #[error("in `{unknown}` at /{}: renaming goes {found}, expected {expected}", path_string(.path))]
    Renaming {
        unknown: String,
        path: Vec<usize>,
        expected: String,
        found: String,
    },
    #[error("embedded term of `{unknown}` at /{} is not finite", path_string(.path))]
    InfiniteEmbed { unknown: String, path: Vec<usize> },
}

fn path_string(path: &[usize]) -> String {
    path.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("/")
}

/// A finite system of named unknowns. Order of declaration is kept.
#[derive(Clone, Debug)]
pub struct EquationSystem {
    sig: Signature,
    unknowns: Vec<Unknown>,
}

impl EquationSystem {
    pub fn new(sig: &Signature) -> EquationSystem {
        EquationSystem {
            sig: sig.clone(),
            unknowns: Vec::new(),
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn add(&mut self, name: &str, ctx: Context, sort: Sort, rhs: PreTerm) -> Result<(), SystemError> {
        if self.index_of(name).is_some() {
            return Err(SystemError::Duplicate(name.to_string()));
        }
        self.unknowns.push(Unknown {
            name: name.to_string(),
            ctx,
            sort,
            rhs,
        });
        Ok(())
    }

    pub fn unknowns(&self) -> &[Unknown] {
        &self.unknowns
    }

    pub fn get(&self, name: &str) -> Option<&Unknown> {
        self.unknowns.iter().find(|u| u.name == name)
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.unknowns.iter().position(|u| u.name == name)
    }

    /// Guardedness and sorting of every right-hand side.
    pub fn check(&self) -> Result<(), SystemError> {
        for u in &self.unknowns {
            let mut path = Vec::new();
            self.check_pre(u, &u.rhs, &u.ctx, &u.sort, &mut path)?;
        }
        Ok(())
    }

    fn check_pre(
        &self,
        owner: &Unknown,
        pt: &PreTerm,
        local: &Context,
        sort: &Sort,
        path: &mut Vec<usize>,
    ) -> Result<(), SystemError> {
        let sorting = |path: &Vec<usize>, error| SystemError::Sorting {
            unknown: owner.name.clone(),
            path: path.clone(),
            error,
        };
        let renaming = |path: &Vec<usize>, expected: String, found: String| SystemError::Renaming {
            unknown: owner.name.clone(),
            path: path.clone(),
            expected,
            found,
        };
        match pt {
            PreTerm::Var(i) => match local.get(*i) {
                None => Err(sorting(
                    path,
                    CoTermError::VarOutOfRange {
                        index: *i,
                        len: local.len(),
                    },
                )),
                Some(s) if s != sort => Err(sorting(
                    path,
                    CoTermError::VarSort {
                        index: *i,
                        expected: sort.clone(),
                        found: s.clone(),
                    },
                )),
                Some(_) => Ok(()),
            },
            PreTerm::Con(op, args) => {
                let arity = self.sig.arity(op).map_err(|e| sorting(path, e.into()))?;
                if arity.target != *sort {
                    return Err(sorting(
                        path,
                        CoTermError::TargetSort {
                            op: op.clone(),
                            expected: sort.clone(),
                            found: arity.target,
                        },
                    ));
                }
                if arity.args.len() != args.len() {
                    return Err(sorting(
                        path,
                        CoTermError::ArityLength {
                            op: op.clone(),
                            expected: arity.args.len(),
                            found: args.len(),
                        },
                    ));
                }
                for (j, (a, p)) in arity.args.iter().zip(args).enumerate() {
                    path.push(j);
                    self.check_pre(owner, p, &local.extend(&a.bound), &a.sort, path)?;
                    path.pop();
                }
                Ok(())
            }
            PreTerm::Ref { name, rename } => {
                let target = self.get(name).ok_or_else(|| SystemError::UndefinedRef {
                    unknown: owner.name.clone(),
                    name: name.clone(),
                    path: path.clone(),
                })?;
                if path.is_empty() {
                    return Err(SystemError::Unguarded {
                        unknown: owner.name.clone(),
                        name: name.clone(),
                        path: path.clone(),
                    });
                }
                if target.sort != *sort {
                    return Err(renaming(
                        path,
                        format!("to sort {sort}"),
                        format!("to `{name}` of sort {}", target.sort),
                    ));
                }
                check_morphism(rename, &target.ctx, local)
                    .map_err(|(e, f)| renaming(path, e, f))
            }
            PreTerm::Embed(t, rename) => {
                if t.signature() != &self.sig {
                    return Err(renaming(
                        path,
                        format!("signature {}", self.sig.name()),
                        format!("signature {}", t.signature().name()),
                    ));
                }
                if t.sort() != sort {
                    return Err(renaming(
                        path,
                        format!("sort {sort}"),
                        format!("embedded sort {}", t.sort()),
                    ));
                }
                check_morphism(rename, t.ctx(), local).map_err(|(e, f)| renaming(path, e, f))
            }
        }
    }

    /// The unique solution, one coterm per unknown.
    pub fn solve(&self) -> Result<BTreeMap<String, CoTerm>, SystemError> {
        self.check()?;
        let arena = Arena::compile(self, false)?;
        let shared = Arc::new(Solver {
            id: fresh_id(),
            sig: self.sig.clone(),
            arena,
            memo: Mutex::new(HashMap::new()),
        });
        Ok(self
            .unknowns
            .iter()
            .enumerate()
            .map(|(u, unk)| {
                let root = shared.arena.roots[u];
                let t = shared.make(root, &ContextMorphism::identity(&unk.ctx));
                (unk.name.clone(), t)
            })
            .collect())
    }

    /// Unfolds every reference once by its own right-hand side. The result
    /// is a structurally different system with the same solution.
    pub fn unfold_once(&self) -> Result<EquationSystem, SystemError> {
        self.check()?;
        let mut out = EquationSystem::new(&self.sig);
        for u in &self.unknowns {
            let rhs = self.inline_refs(u, &u.rhs)?;
            out.add(&u.name, u.ctx.clone(), u.sort.clone(), rhs)?;
        }
        Ok(out)
    }

    fn inline_refs(&self, owner: &Unknown, pt: &PreTerm) -> Result<PreTerm, SystemError> {
        Ok(match pt {
            PreTerm::Con(op, args) => PreTerm::Con(
                op.clone(),
                args.iter()
                    .map(|p| self.inline_refs(owner, p))
                    .collect::<Result<_, _>>()?,
            ),
            PreTerm::Ref { name, rename } => {
                let target = self.get(name).expect("checked");
                target
                    .rhs
                    .renamed(&self.sig, rename)
                    .map_err(|error| SystemError::Sorting {
                        unknown: owner.name.clone(),
                        path: Vec::new(),
                        error,
                    })?
            }
            other => other.clone(),
        })
    }
}

fn check_morphism(rho: &ContextMorphism, source: &Context, target: &Context) -> Result<(), (String, String)> {
    if rho.source() != source || rho.target() != target {
        return Err((
            format!("{source} -> {target}"),
            format!("{} -> {}", rho.source(), rho.target()),
        ));
    }
    let tgt = target.to_vec();
    for (i, s) in source.iter().enumerate() {
        let j = rho.apply(i);
        if tgt.get(j) != Some(s) {
            return Err((
                format!("position {i} to a variable of sort {s}"),
                format!("position {i} to {j}"),
            ));
        }
    }
    Ok(())
}

/// Interprets `rhs(name)` with every unknown replaced by its solution,
/// building the outer layers eagerly.
pub fn instantiate_rhs(
    es: &EquationSystem,
    solution: &BTreeMap<String, CoTerm>,
    name: &str,
) -> Result<CoTerm, SystemError> {
    let u = es.get(name).ok_or_else(|| SystemError::Missing(name.to_string()))?;
    build(es, solution, u, &u.rhs, &u.ctx)
}

fn build(
    es: &EquationSystem,
    solution: &BTreeMap<String, CoTerm>,
    owner: &Unknown,
    pt: &PreTerm,
    local: &Context,
) -> Result<CoTerm, SystemError> {
    let sorting = |error| SystemError::Sorting {
        unknown: owner.name.clone(),
        path: Vec::new(),
        error,
    };
    match pt {
        PreTerm::Var(i) => var(&es.sig, local, *i).map_err(sorting),
        PreTerm::Con(op, args) => {
            let arity = es.sig.arity(op).map_err(|e| sorting(e.into()))?;
            let kids = arity
                .args
                .iter()
                .zip(args)
                .map(|(a, p)| build(es, solution, owner, p, &local.extend(&a.bound)))
                .collect::<Result<Vec<_>, _>>()?;
            con(&es.sig, local, op, kids).map_err(sorting)
        }
        PreTerm::Ref { name, rename: rho } => {
            let t = solution
                .get(name)
                .ok_or_else(|| SystemError::Missing(name.clone()))?;
            rename(rho, t).map_err(|_| SystemError::Missing(name.clone()))
        }
        PreTerm::Embed(t, rho) => rename(rho, t).map_err(|_| SystemError::Missing(owner.name.clone())),
    }
}

pub(crate) type ItemId = usize;

/// Compiled right-hand sides. Children of `Con` carry their binder lists.
#[derive(Clone, Debug)]
pub(crate) enum Item {
    Var(usize),
    Con(Op, Vec<(Vec<Sort>, ItemId)>),
    Ref(usize, ContextMorphism),
    Embed(CoTerm, ContextMorphism),
}

#[derive(Clone, Debug)]
pub(crate) struct Arena {
    pub items: Vec<Item>,
    pub sorts: Vec<Sort>,
    pub roots: Vec<ItemId>,
}

impl Arena {
    /// With `inline_embeds`, embedded coterms are unfolded into ordinary
    /// items and must be finite.
    pub(crate) fn compile(es: &EquationSystem, inline_embeds: bool) -> Result<Arena, SystemError> {
        let mut arena = Arena {
            items: Vec::new(),
            sorts: Vec::new(),
            roots: Vec::new(),
        };
        for u in &es.unknowns {
            let mut path = Vec::new();
            let root = arena.add(es, u, &u.rhs, &u.sort, inline_embeds, &mut path)?;
            arena.roots.push(root);
        }
        Ok(arena)
    }

    fn push(&mut self, item: Item, sort: &Sort) -> ItemId {
        self.items.push(item);
        self.sorts.push(sort.clone());
        self.items.len() - 1
    }

    fn add(
        &mut self,
        es: &EquationSystem,
        owner: &Unknown,
        pt: &PreTerm,
        sort: &Sort,
        inline_embeds: bool,
        path: &mut Vec<usize>,
    ) -> Result<ItemId, SystemError> {
        match pt {
            PreTerm::Var(i) => Ok(self.push(Item::Var(*i), sort)),
            PreTerm::Con(op, args) => {
                let arity = es.sig.arity(op).map_err(|e| SystemError::Sorting {
                    unknown: owner.name.clone(),
                    path: path.clone(),
                    error: e.into(),
                })?;
                let mut kids = Vec::with_capacity(args.len());
                for (j, (a, p)) in arity.args.iter().zip(args).enumerate() {
                    path.push(j);
                    let id = self.add(es, owner, p, &a.sort, inline_embeds, path)?;
                    path.pop();
                    kids.push((a.bound.clone(), id));
                }
                Ok(self.push(Item::Con(op.clone(), kids), sort))
            }
            PreTerm::Ref { name, rename } => {
                let u = es.index_of(name).expect("checked");
                Ok(self.push(Item::Ref(u, rename.clone()), sort))
            }
            PreTerm::Embed(t, rho) if inline_embeds => {
                let ft = to_finite(t, EMBED_NODE_BUDGET).ok_or_else(|| SystemError::InfiniteEmbed {
                    unknown: owner.name.clone(),
                    path: path.clone(),
                })?;
                let inlined = PreTerm::from_finite(&ft)
                    .renamed(&es.sig, rho)
                    .map_err(|error| SystemError::Sorting {
                        unknown: owner.name.clone(),
                        path: path.clone(),
                        error,
                    })?;
                self.add(es, owner, &inlined, sort, inline_embeds, path)
            }
            PreTerm::Embed(t, rho) => Ok(self.push(Item::Embed(t.clone(), rho.clone()), sort)),
        }
    }

    /// Follows references until a non-reference item; guardedness makes
    /// this terminate after one step.
    pub(crate) fn resolve(&self, mut item: ItemId, mut rho: ContextMorphism) -> (ItemId, ContextMorphism) {
        while let Item::Ref(u, r) = &self.items[item] {
            rho = r.then_unchecked(&rho);
            item = self.roots[*u];
        }
        (item, rho)
    }
}

/// Largest embedded term unfolded when a finite presentation is required.
pub const EMBED_NODE_BUDGET: usize = 100_000;

struct Solver {
    id: u64,
    sig: Signature,
    arena: Arena,
    memo: Mutex<HashMap<(ItemId, ContextMorphism), WeakCoTerm>>,
}

impl Solver {
    fn make(self: &Arc<Self>, item: ItemId, rho: &ContextMorphism) -> CoTerm {
        let (item, rho) = self.arena.resolve(item, rho.clone());
        match &self.arena.items[item] {
            Item::Var(i) => var(&self.sig, rho.target(), rho.apply(*i)).expect("checked"),
            Item::Embed(t, r) => rename_unchecked(&r.then_unchecked(&rho), t),
            Item::Ref(..) => unreachable!(),
            Item::Con(..) => {
                let key = (item, rho.clone());
                let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
                if let Some(hit) = memo.get(&key).and_then(WeakCoTerm::upgrade) {
                    return hit;
                }
                let me = self.clone();
                let r = rho.clone();
                let shape = Shape::Solved {
                    solver: self.id,
                    item,
                    map: rho.map().into(),
                };
                let t = CoTerm::lazy_shaped(&self.sig, rho.target(), &self.arena.sorts[item], shape, move || {
                    let Item::Con(op, kids) = &me.arena.items[item] else {
                        unreachable!()
                    };
                    let args = kids
                        .iter()
                        .map(|(bound, child)| me.make(*child, &r.lift(bound)))
                        .collect();
                    Ok(Node::Con(op.clone(), args))
                });
                memo.insert(key, t.downgrade());
                t
            }
        }
    }
}
