//! Typing contexts of de Bruijn variables and renamings between them.

use std::fmt;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::sort::Sort;

/// Finite sequence of sorts; position 0 is the most recently bound variable.
///
/// Persistent cons list, so extending a context under a binder shares the
/// tail with the outer context.
#[derive(Clone, Default)]
pub struct Context(Option<Arc<Cell>>);

struct Cell {
    sort: Sort,
    rest: Context,
    len: usize,
    digest: u64,
}

impl Context {
    pub fn empty() -> Context {
        Context(None)
    }

    /// Builds a context from sorts listed innermost (position 0) first.
    pub fn from_innermost<I>(sorts: I) -> Context
    where
        I: IntoIterator<Item = Sort>,
        I::IntoIter: DoubleEndedIterator,
    {
        sorts
            .into_iter()
            .rev()
            .fold(Context::empty(), |ctx, s| ctx.push(s))
    }

    /// Builds a context from sorts listed in binding order (outermost first),
    /// as in a typing context `x1:A1, ..., xn:An`.
    pub fn from_outermost<I: IntoIterator<Item = Sort>>(sorts: I) -> Context {
        sorts.into_iter().fold(Context::empty(), |ctx, s| ctx.push(s))
    }

    /// Binds one more variable, which becomes position 0.
    pub fn push(&self, sort: Sort) -> Context {
        let len = self.len() + 1;
        let mut h = DefaultHasher::new();
        (self.digest(), &sort).hash(&mut h);
        Context(Some(Arc::new(Cell {
            sort,
            rest: self.clone(),
            len,
            digest: h.finish(),
        })))
    }

    /// Prepends a binder list: `bound[0]` becomes position 0.
    pub fn extend(&self, bound: &[Sort]) -> Context {
        bound
            .iter()
            .rev()
            .fold(self.clone(), |ctx, s| ctx.push(s.clone()))
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |c| c.len)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn get(&self, i: usize) -> Option<&Sort> {
        self.iter().nth(i)
    }

    /// Drops the `n` innermost positions.
    pub fn drop_innermost(&self, n: usize) -> Context {
        let mut cur = self;
        for _ in 0..n {
            match &cur.0 {
                Some(c) => cur = &c.rest,
                None => break,
            }
        }
        cur.clone()
    }

    /// Sorts innermost first.
    pub fn iter(&self) -> Iter<'_> {
        Iter(self)
    }

    pub fn to_vec(&self) -> Vec<Sort> {
        self.iter().cloned().collect()
    }

    fn digest(&self) -> u64 {
        self.0.as_ref().map_or(0, |c| c.digest)
    }

    fn ptr(&self) -> *const Cell {
        self.0.as_ref().map_or(std::ptr::null(), Arc::as_ptr)
    }
}

pub struct Iter<'a>(&'a Context);

impl<'a> Iterator for Iter<'a> {
    type Item = &'a Sort;

    fn next(&mut self) -> Option<&'a Sort> {
        let cell = self.0 .0.as_ref()?;
        self.0 = &cell.rest;
        Some(&cell.sort)
    }
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        if self.digest() != other.digest() {
            return false;
        }
        let (mut a, mut b) = (self, other);
        loop {
            if a.ptr() == b.ptr() {
                return true;
            }
            match (&a.0, &b.0) {
                (Some(x), Some(y)) if x.len == y.len && x.sort == y.sort => {
                    a = &x.rest;
                    b = &y.rest;
                }
                _ => return false,
            }
        }
    }
}

impl Eq for Context {}

impl Hash for Context {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.digest());
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenamingError {
    #[error("renaming has {found} entries but its source context has {expected}")]
    Length { expected: usize, found: usize },
    #[error("renaming sends position {from} to {to}, outside a target context of length {len}")]
    OutOfRange { from: usize, to: usize, len: usize },
    #[error("renaming sends position {from} of sort {source_sort} to position {to} of sort {target_sort}")]
    SortMismatch {
        from: usize,
        to: usize,
        source_sort: Sort,
        target_sort: Sort,
    },
    #[error("renamings do not compose: target {0} differs from source {1}")]
    Compose(Context, Context),
}

/// Sort-preserving map from the positions of `source` into `target`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ContextMorphism {
    source: Context,
    target: Context,
    map: Arc<[usize]>,
}

impl ContextMorphism {
    pub fn new(
        source: Context,
        target: Context,
        map: Vec<usize>,
    ) -> Result<ContextMorphism, RenamingError> {
        if map.len() != source.len() {
            return Err(RenamingError::Length {
                expected: source.len(),
                found: map.len(),
            });
        }
        let tgt = target.to_vec();
        for (from, (s, &to)) in source.iter().zip(&map).enumerate() {
            match tgt.get(to) {
                None => {
                    return Err(RenamingError::OutOfRange {
                        from,
                        to,
                        len: tgt.len(),
                    })
                }
                Some(t) if t != s => {
                    return Err(RenamingError::SortMismatch {
                        from,
                        to,
                        source_sort: s.clone(),
                        target_sort: t.clone(),
                    })
                }
                _ => {}
            }
        }
        Ok(ContextMorphism::unchecked(source, target, map))
    }

    pub(crate) fn unchecked(source: Context, target: Context, map: Vec<usize>) -> Self {
        ContextMorphism {
            source,
            target,
            map: map.into(),
        }
    }

    pub fn identity(ctx: &Context) -> ContextMorphism {
        ContextMorphism::unchecked(ctx.clone(), ctx.clone(), (0..ctx.len()).collect())
    }

    /// The injection `ctx -> bound ++ ctx`, shifting every index by `|bound|`.
    pub fn weakening(bound: &[Sort], ctx: &Context) -> ContextMorphism {
        let k = bound.len();
        ContextMorphism::unchecked(
            ctx.clone(),
            ctx.extend(bound),
            (0..ctx.len()).map(|i| i + k).collect(),
        )
    }

    pub fn source(&self) -> &Context {
        &self.source
    }

    pub fn target(&self) -> &Context {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `bound ++ source -> bound ++ target`: fresh positions fixed, old ones shifted.
    pub fn lift(&self, bound: &[Sort]) -> ContextMorphism {
        if bound.is_empty() {
            return self.clone();
        }
        let k = bound.len();
        let map = (0..k).chain(self.map.iter().map(|&j| j + k)).collect();
        ContextMorphism::unchecked(self.source.extend(bound), self.target.extend(bound), map)
    }

    /// Diagrammatic composition: first `self`, then `next`.
    pub fn then(&self, next: &ContextMorphism) -> Result<ContextMorphism, RenamingError> {
        if self.target != next.source {
            return Err(RenamingError::Compose(
                self.target.clone(),
                next.source.clone(),
            ));
        }
        Ok(self.then_unchecked(next))
    }

    pub(crate) fn then_unchecked(&self, next: &ContextMorphism) -> ContextMorphism {
        let map = self.map.iter().map(|&j| next.map[j]).collect();
        ContextMorphism::unchecked(self.source.clone(), next.target.clone(), map)
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && self.map.iter().enumerate().all(|(i, &j)| i == j)
    }
}

impl fmt::Debug for ContextMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{:?}-> {}", self.source, &*self.map, self.target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Sort {
        x.parse().unwrap()
    }

    #[test]
    fn extension_prepends() {
        let ctx = Context::from_innermost([s("a")]);
        let ext = ctx.extend(&[s("b"), s("c")]);
        assert_eq!(ext.to_vec(), vec![s("b"), s("c"), s("a")]);
        assert_eq!(ext.len(), 3);
        assert_eq!(ext.drop_innermost(2), ctx);
        assert_eq!(
            Context::from_outermost([s("a"), s("b")]),
            Context::from_innermost([s("b"), s("a")])
        );
    }

    #[test]
    fn structural_equality_across_allocations() {
        let a = Context::from_innermost([s("x"), s("y")]);
        let b = Context::empty().push(s("y")).push(s("x"));
        assert_eq!(a, b);
        assert_ne!(a, Context::from_innermost([s("y"), s("x")]));
    }

    #[test]
    fn morphism_checks() {
        let src = Context::from_innermost([s("a"), s("b")]);
        let tgt = Context::from_innermost([s("b"), s("a")]);
        assert!(ContextMorphism::new(src.clone(), tgt.clone(), vec![1, 0]).is_ok());
        assert!(matches!(
            ContextMorphism::new(src.clone(), tgt.clone(), vec![0, 1]),
            Err(RenamingError::SortMismatch { .. })
        ));
        assert!(matches!(
            ContextMorphism::new(src.clone(), tgt.clone(), vec![1]),
            Err(RenamingError::Length { .. })
        ));
        assert!(matches!(
            ContextMorphism::new(src, tgt, vec![1, 5]),
            Err(RenamingError::OutOfRange { .. })
        ));
    }

    #[test]
    fn lift_and_compose() {
        let ctx = Context::from_innermost([s("a")]);
        let w = ContextMorphism::weakening(&[s("b")], &ctx);
        assert_eq!(w.map(), &[1]);
        let l = w.lift(&[s("c")]);
        assert_eq!(l.map(), &[0, 2]);
        assert_eq!(l.target().to_vec(), vec![s("c"), s("b"), s("a")]);
        let id = ContextMorphism::identity(&ctx);
        assert_eq!(id.then(&w).unwrap(), w);
        assert!(w.then(&id).is_err());
        assert!(id.is_identity());
    }
}
