//! Lazily unfolded, well-scoped, possibly infinite terms.
//!
//! A [`CoTerm`] carries its signature, context and sort together with a
//! suspended one-step unfolding. Forcing it with [`CoTerm::out`] exposes one
//! [`Node`] layer; the result is cached in a write-once cell, so repeated or
//! concurrent forcing runs the underlying step at most once.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, Weak};

use thiserror::Error;

use crate::context::Context;
use crate::signature::{BinderArity, Op, Signature, SignatureError};
use crate::sort::Sort;

/// One observed layer: a variable or a constructor applied to subterms.
#[derive(Clone)]
pub enum Node {
    Var(usize),
    Con(Op, Vec<CoTerm>),
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var(i) => write!(f, "Var({i})"),
            Node::Con(op, args) => write!(f, "Con({op}, {} args)", args.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoTermError {
    #[error("variable {index} out of range in a context of length {len}")]
    VarOutOfRange { index: usize, len: usize },
    #[error("variable {index} has sort {found}, expected {expected}")]
    VarSort {
        index: usize,
        expected: Sort,
        found: Sort,
    },
    #[error("`{op}` takes {expected} arguments, got {found}")]
    ArityLength {
        op: Op,
        expected: usize,
        found: usize,
    },
    #[error("argument {position} of `{op}` has sort {found}, expected {expected}")]
    ArgSort {
        op: Op,
        position: usize,
        expected: Sort,
        found: Sort,
    },
    #[error("argument {position} of `{op}` lives in context {found}, expected {expected}")]
    ArgContext {
        op: Op,
        position: usize,
        expected: Context,
        found: Context,
    },
    #[error("`{op}` builds sort {found}, expected {expected}")]
    TargetSort { op: Op, expected: Sort, found: Sort },
    #[error("argument {position} of `{op}` belongs to a different signature")]
    SignatureMismatch { op: Op, position: usize },
    #[error("nullary use of `{op}` needs an explicit context")]
    MissingContext { op: Op },
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// A sorting failure found while forcing a lazily generated term, with the
/// argument path from the root of the generator.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sorting violation at /{}: {error}", path_string(.path))]
pub struct UnfoldError {
    pub path: Vec<usize>,
    pub error: CoTermError,
}

fn path_string(path: &[usize]) -> String {
    path.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("/")
}

type Thunk = Box<dyn FnOnce() -> Result<Node, UnfoldError> + Send>;

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

pub(crate) fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// Describes what a node unfolds to, up to its context: nodes with equal
/// shapes expose the same constructors and variable indices at every depth.
/// Lets comparisons share work between copies of a subterm that differ only
/// in the sorts of enclosing binders.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) enum Shape {
    Unique(u64),
    Var(usize),
    Solved {
        solver: u64,
        item: usize,
        map: Arc<[usize]>,
    },
    Renamed {
        map: Arc<[usize]>,
        lift: usize,
        of: Arc<Shape>,
    },
    Bound {
        bind: u64,
        lift: usize,
        of: Arc<Shape>,
    },
}

struct Inner {
    sig: Signature,
    ctx: Context,
    sort: Sort,
    shape: Shape,
    node: OnceLock<Result<Node, UnfoldError>>,
    pending: Mutex<Option<Thunk>>,
}

impl Drop for Inner {
    // Long forced chains would otherwise be freed recursively.
    fn drop(&mut self) {
        let mut stack = match self.node.take() {
            Some(Ok(Node::Con(_, args))) => args,
            _ => return,
        };
        while let Some(t) = stack.pop() {
            if let Ok(mut inner) = Arc::try_unwrap(t.0) {
                if let Some(Ok(Node::Con(_, args))) = inner.node.take() {
                    stack.extend(args);
                }
            }
        }
    }
}

/// Shared handle to a coinductive term.
#[derive(Clone)]
pub struct CoTerm(Arc<Inner>);

impl fmt::Debug for CoTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoTerm({} |- {})", self.0.ctx, self.0.sort)
    }
}

impl CoTerm {
    fn ready(sig: &Signature, ctx: &Context, sort: &Sort, node: Node) -> CoTerm {
        let shape = match node {
            Node::Var(i) => Shape::Var(i),
            Node::Con(..) => Shape::Unique(fresh_id()),
        };
        let cell = OnceLock::new();
        let _ = cell.set(Ok(node));
        CoTerm(Arc::new(Inner {
            sig: sig.clone(),
            ctx: ctx.clone(),
            sort: sort.clone(),
            shape,
            node: cell,
            pending: Mutex::new(None),
        }))
    }

    /// A term whose layer is computed on first demand. The caller vouches for
    /// the sorting of whatever `thunk` produces.
    pub(crate) fn lazy<F>(sig: &Signature, ctx: &Context, sort: &Sort, thunk: F) -> CoTerm
    where
        F: FnOnce() -> Result<Node, UnfoldError> + Send + 'static,
    {
        CoTerm::lazy_shaped(sig, ctx, sort, Shape::Unique(fresh_id()), thunk)
    }

    pub(crate) fn lazy_shaped<F>(sig: &Signature, ctx: &Context, sort: &Sort, shape: Shape, thunk: F) -> CoTerm
    where
        F: FnOnce() -> Result<Node, UnfoldError> + Send + 'static,
    {
        CoTerm(Arc::new(Inner {
            sig: sig.clone(),
            ctx: ctx.clone(),
            sort: sort.clone(),
            shape,
            node: OnceLock::new(),
            pending: Mutex::new(Some(Box::new(thunk))),
        }))
    }

    pub fn signature(&self) -> &Signature {
        &self.0.sig
    }

    pub fn ctx(&self) -> &Context {
        &self.0.ctx
    }

    pub fn sort(&self) -> &Sort {
        &self.0.sort
    }

    /// Forces one layer, reporting sorting violations of lazily generated terms.
    pub fn try_out(&self) -> Result<&Node, UnfoldError> {
        self.0
            .node
            .get_or_init(|| {
                let thunk = self
                    .0
                    .pending
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .take()
                    .expect("coterm forced after its generator panicked");
                thunk()
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// The destructor: exposes one layer.
    ///
    /// Panics if the term came from a generator that produced an ill-sorted
    /// layer; use [`CoTerm::try_out`] to observe that as an error.
    pub fn out(&self) -> &Node {
        match self.try_out() {
            Ok(n) => n,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn is_forced(&self) -> bool {
        self.0.node.get().is_some()
    }

    pub fn ptr_eq(&self, other: &CoTerm) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub(crate) fn shape(&self) -> &Shape {
        &self.0.shape
    }

    pub(crate) fn downgrade(&self) -> WeakCoTerm {
        WeakCoTerm(Arc::downgrade(&self.0))
    }
}

/// Non-owning handle, used by memo tables that must not keep results alive.
#[derive(Clone)]
pub(crate) struct WeakCoTerm(Weak<Inner>);

impl WeakCoTerm {
    pub(crate) fn upgrade(&self) -> Option<CoTerm> {
        self.0.upgrade().map(CoTerm)
    }
}

/// The variable at de Bruijn position `i` of `ctx`.
pub fn var(sig: &Signature, ctx: &Context, i: usize) -> Result<CoTerm, CoTermError> {
    let sort = ctx.get(i).ok_or(CoTermError::VarOutOfRange {
        index: i,
        len: ctx.len(),
    })?;
    Ok(CoTerm::ready(sig, ctx, sort, Node::Var(i)))
}

/// Constructor application. `ctx` is the host context of the result; the
/// children are shared, not copied.
pub fn con(
    sig: &Signature,
    ctx: &Context,
    op: &Op,
    args: Vec<CoTerm>,
) -> Result<CoTerm, CoTermError> {
    let arity = sig.arity(op)?;
    check_arity_len(op, arity.args.len(), args.len())?;
    for (j, (a, t)) in arity.args.iter().zip(&args).enumerate() {
        check_child(sig, ctx, op, j, a, t)?;
    }
    Ok(CoTerm::ready(sig, ctx, &arity.target, Node::Con(op.clone(), args)))
}

fn check_arity_len(op: &Op, expected: usize, found: usize) -> Result<(), CoTermError> {
    if expected != found {
        return Err(CoTermError::ArityLength {
            op: op.clone(),
            expected,
            found,
        });
    }
    Ok(())
}

fn check_child(
    sig: &Signature,
    host: &Context,
    op: &Op,
    position: usize,
    arg: &BinderArity,
    t: &CoTerm,
) -> Result<(), CoTermError> {
    if t.signature() != sig {
        return Err(CoTermError::SignatureMismatch {
            op: op.clone(),
            position,
        });
    }
    if *t.sort() != arg.sort {
        return Err(CoTermError::ArgSort {
            op: op.clone(),
            position,
            expected: arg.sort.clone(),
            found: t.sort().clone(),
        });
    }
    let expected = host.extend(&arg.bound);
    if *t.ctx() != expected {
        return Err(CoTermError::ArgContext {
            op: op.clone(),
            position,
            expected,
            found: t.ctx().clone(),
        });
    }
    Ok(())
}

fn check_var(ctx: &Context, sort: &Sort, i: usize) -> Result<(), CoTermError> {
    match ctx.get(i) {
        None => Err(CoTermError::VarOutOfRange {
            index: i,
            len: ctx.len(),
        }),
        Some(s) if s != sort => Err(CoTermError::VarSort {
            index: i,
            expected: sort.clone(),
            found: s.clone(),
        }),
        Some(_) => Ok(()),
    }
}

/// One layer produced by a generator step.
pub enum Layer<S> {
    Var(usize),
    Con(Op, Vec<Child<S>>),
}

/// A child of a generated layer: either a new state to unfold further, or an
/// already existing term.
pub enum Child<S> {
    Seed(S),
    Term(CoTerm),
}

impl<S> Layer<S> {
    /// Re-emits an existing layer verbatim.
    pub fn from_node(node: &Node) -> Layer<S> {
        match node {
            Node::Var(i) => Layer::Var(*i),
            Node::Con(op, args) => {
                Layer::Con(op.clone(), args.iter().cloned().map(Child::Term).collect())
            }
        }
    }
}

/// Anamorphism: the unique coterm whose unfolding follows `step` from `seed`.
///
/// Children given as seeds get their context and sort from the arity of the
/// emitted constructor. Sorting is checked when a layer is forced; failures
/// surface through [`CoTerm::try_out`] with the path from this root.
pub fn unfold_coterm<S, F>(sig: &Signature, ctx: &Context, sort: &Sort, seed: S, step: F) -> CoTerm
where
    S: Send + Sync + 'static,
    F: Fn(&S) -> Layer<S> + Send + Sync + 'static,
{
    unfold_at(sig, ctx, sort, seed, Arc::new(step), Vec::new())
}

fn unfold_at<S, F>(
    sig: &Signature,
    ctx: &Context,
    sort: &Sort,
    seed: S,
    step: Arc<F>,
    path: Vec<usize>,
) -> CoTerm
where
    S: Send + Sync + 'static,
    F: Fn(&S) -> Layer<S> + Send + Sync + 'static,
{
    let (sig2, ctx2, sort2) = (sig.clone(), ctx.clone(), sort.clone());
    CoTerm::lazy(sig, ctx, sort, move || {
        let fail = |error| UnfoldError {
            path: path.clone(),
            error,
        };
        match step(&seed) {
            Layer::Var(i) => {
                check_var(&ctx2, &sort2, i).map_err(fail)?;
                Ok(Node::Var(i))
            }
            Layer::Con(op, children) => {
                let arity = sig2.arity(&op).map_err(|e| fail(e.into()))?;
                if arity.target != sort2 {
                    return Err(fail(CoTermError::TargetSort {
                        op,
                        expected: sort2.clone(),
                        found: arity.target,
                    }));
                }
                check_arity_len(&op, arity.args.len(), children.len()).map_err(fail)?;
                let mut args = Vec::with_capacity(children.len());
                for (j, (a, child)) in arity.args.iter().zip(children).enumerate() {
                    match child {
                        Child::Term(t) => {
                            check_child(&sig2, &ctx2, &op, j, a, &t).map_err(fail)?;
                            args.push(t);
                        }
                        Child::Seed(s) => {
                            let mut p = path.clone();
                            p.push(j);
                            args.push(unfold_at(
                                &sig2,
                                &ctx2.extend(&a.bound),
                                &a.sort,
                                s,
                                step.clone(),
                                p,
                            ));
                        }
                    }
                }
                Ok(Node::Con(op, args))
            }
        }
    })
}

/// Finite tree with the same layer shape as [`Node`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FinTerm {
    Var(usize),
    Con(Op, Vec<FinTerm>),
}

impl FinTerm {
    /// Longest root-to-leaf path, counting the root as level 0; observing the
    /// whole term takes `height() + 1` layers.
    pub fn height(&self) -> usize {
        match self {
            FinTerm::Var(_) => 0,
            FinTerm::Con(_, args) => args.iter().map(|a| a.height() + 1).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            FinTerm::Var(_) => 1,
            FinTerm::Con(_, args) => 1 + args.iter().map(FinTerm::size).sum::<usize>(),
        }
    }

    /// Sort-checks the term in `ctx` and returns its sort.
    pub fn sort_in(&self, sig: &Signature, ctx: &Context) -> Result<Sort, CoTermError> {
        match self {
            FinTerm::Var(i) => ctx.get(*i).cloned().ok_or(CoTermError::VarOutOfRange {
                index: *i,
                len: ctx.len(),
            }),
            FinTerm::Con(op, args) => {
                let arity = sig.arity(op)?;
                check_arity_len(op, arity.args.len(), args.len())?;
                for (j, (a, t)) in arity.args.iter().zip(args).enumerate() {
                    let found = t.sort_in(sig, &ctx.extend(&a.bound))?;
                    if found != a.sort {
                        return Err(CoTermError::ArgSort {
                            op: op.clone(),
                            position: j,
                            expected: a.sort.clone(),
                            found,
                        });
                    }
                }
                Ok(arity.target)
            }
        }
    }
}

/// Embeds a finite term into the coinductive terms.
pub fn embed(sig: &Signature, ctx: &Context, ft: &FinTerm) -> Result<CoTerm, CoTermError> {
    match ft {
        FinTerm::Var(i) => var(sig, ctx, *i),
        FinTerm::Con(op, args) => {
            let arity = sig.arity(op)?;
            check_arity_len(op, arity.args.len(), args.len())?;
            let kids = arity
                .args
                .iter()
                .zip(args)
                .map(|(a, t)| embed(sig, &ctx.extend(&a.bound), t))
                .collect::<Result<Vec<_>, _>>()?;
            con(sig, ctx, op, kids)
        }
    }
}

/// Finite prefix of a coterm; `Cut` marks an unobserved constructor layer.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Truncation {
    Var(usize),
    Con(Op, Vec<Truncation>),
    Cut,
}

impl Truncation {
    pub fn has_cuts(&self) -> bool {
        match self {
            Truncation::Var(_) => false,
            Truncation::Cut => true,
            Truncation::Con(_, args) => args.iter().any(Truncation::has_cuts),
        }
    }

    pub fn to_finite(&self) -> Option<FinTerm> {
        match self {
            Truncation::Var(i) => Some(FinTerm::Var(*i)),
            Truncation::Cut => None,
            Truncation::Con(op, args) => Some(FinTerm::Con(
                op.clone(),
                args.iter().map(Truncation::to_finite).collect::<Option<_>>()?,
            )),
        }
    }
}

impl From<&FinTerm> for Truncation {
    fn from(ft: &FinTerm) -> Self {
        match ft {
            FinTerm::Var(i) => Truncation::Var(*i),
            FinTerm::Con(op, args) => Truncation::Con(op.clone(), args.iter().map(Into::into).collect()),
        }
    }
}

/// Observes `d` constructor layers; deeper constructors become cuts, while
/// variables are always shown.
pub fn truncate(t: &CoTerm, d: usize) -> Truncation {
    match t.out() {
        Node::Var(i) => Truncation::Var(*i),
        Node::Con(_, _) if d == 0 => Truncation::Cut,
        Node::Con(op, args) => {
            Truncation::Con(op.clone(), args.iter().map(|a| truncate(a, d - 1)).collect())
        }
    }
}

/// Fully unfolds `t` if it is finite with at most `max_nodes` nodes.
pub fn to_finite(t: &CoTerm, max_nodes: usize) -> Option<FinTerm> {
    enum Task<'a> {
        Visit(&'a CoTerm),
        Build(Op, usize),
    }
    let mut budget = max_nodes;
    let mut tasks = vec![Task::Visit(t)];
    let mut done: Vec<FinTerm> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Visit(t) => {
                if budget == 0 {
                    return None;
                }
                budget -= 1;
                match t.out() {
                    Node::Var(i) => done.push(FinTerm::Var(*i)),
                    Node::Con(op, args) => {
                        tasks.push(Task::Build(op.clone(), args.len()));
                        tasks.extend(args.iter().rev().map(Task::Visit));
                    }
                }
            }
            Task::Build(op, n) => {
                let kids = done.split_off(done.len() - n);
                done.push(FinTerm::Con(op, kids));
            }
        }
    }
    done.pop()
}

/// Forces `t` to depth `d`, surfacing the first sorting violation.
pub fn check_to_depth(t: &CoTerm, d: usize) -> Result<(), UnfoldError> {
    if d == 0 {
        return Ok(());
    }
    if let Node::Con(_, args) = t.try_out()? {
        for a in args {
            check_to_depth(a, d - 1)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::OpParam;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn s(x: &str) -> Sort {
        x.parse().unwrap()
    }

    fn stlc() -> Signature {
        Signature::stlc(&["0"])
    }

    fn op2(name: &str, a: &str, b: &str) -> Op {
        Op::new(name, vec![OpParam::Sort(s(a)), OpParam::Sort(s(b))])
    }

    #[test]
    fn var_lookup() {
        let sig = stlc();
        let ctx = Context::from_innermost([s("0")]);
        let v = var(&sig, &ctx, 0).unwrap();
        assert_eq!(*v.sort(), s("0"));
        assert!(matches!(v.out(), Node::Var(0)));
        let ctx2 = Context::from_innermost([s("0->0"), s("0")]);
        assert_eq!(*var(&sig, &ctx2, 1).unwrap().sort(), s("0"));
        assert!(matches!(
            var(&sig, &Context::empty(), 0),
            Err(CoTermError::VarOutOfRange { .. })
        ));
    }

    #[test]
    fn con_app_and_lam() {
        let sig = stlc();
        let ctx = Context::from_innermost([s("0->0"), s("0")]);
        let f = var(&sig, &ctx, 0).unwrap();
        let x = var(&sig, &ctx, 1).unwrap();
        let app = con(&sig, &ctx, &op2("app", "0", "0"), vec![f.clone(), x.clone()]).unwrap();
        assert_eq!(*app.sort(), s("0"));
        match app.out() {
            Node::Con(op, args) => {
                assert_eq!(op.name(), "app");
                assert!(args[0].ptr_eq(&f) && args[1].ptr_eq(&x));
            }
            _ => panic!(),
        }
        let body_ctx = ctx.extend(&[s("0")]);
        let body = var(&sig, &body_ctx, 0).unwrap();
        let lam = con(&sig, &ctx, &op2("lam", "0", "0"), vec![body]).unwrap();
        assert_eq!(*lam.sort(), s("0->0"));
        assert_eq!(*lam.ctx(), ctx);
    }

    #[test]
    fn con_errors_name_position() {
        let sig = stlc();
        let ctx = Context::from_innermost([s("0->0"), s("0")]);
        let f = var(&sig, &ctx, 0).unwrap();
        let x = var(&sig, &ctx, 1).unwrap();
        let err = con(&sig, &ctx, &op2("app", "0", "0"), vec![x.clone(), x.clone()]).unwrap_err();
        assert!(matches!(err, CoTermError::ArgSort { position: 0, .. }), "{err}");
        let err = con(&sig, &ctx, &op2("app", "0", "0"), vec![f.clone()]).unwrap_err();
        assert!(matches!(err, CoTermError::ArityLength { .. }));
        let err = con(&sig, &ctx, &op2("lam", "0", "0"), vec![x]).unwrap_err();
        assert!(matches!(err, CoTermError::ArgContext { position: 0, .. }), "{err}");
    }

    #[test]
    fn empty_sum_in_forests() {
        let sig = Signature::untyped_forests();
        let t = con(&sig, &Context::empty(), &Op::new("sum", vec![OpParam::Nat(0)]), vec![]).unwrap();
        assert_eq!(*t.sort(), s("t"));
    }

    #[test]
    fn unfold_memoizes_and_is_productive() {
        // lam<0,0> applied forever at alternating contexts
        let sig = stlc();
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let t = unfold_coterm(&sig, &Context::empty(), &s("0->0"), (), move |_| {
            c.fetch_add(1, Ordering::SeqCst);
            Layer::Con(op2("lam", "0", "0"), vec![Child::Seed(())])
        });
        // the body has sort 0, which lam<0,0> cannot produce: sorting violation at /0
        for _ in 0..3 {
            t.out();
        }
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        let Node::Con(_, args) = t.out() else { panic!() };
        let err = args[0].try_out().unwrap_err();
        assert_eq!(err.path, vec![0]);
        assert!(err.to_string().starts_with("sorting violation at /0"));
    }

    #[test]
    fn unfold_infinite_lambda_tower() {
        // alternating sorts: 0->0 via lam<0,0> and 0 via app<0,0>(lam.., var)
        #[derive(Clone)]
        enum St {
            Fun,
            Arg,
        }
        let sig = stlc();
        let ctx = Context::from_innermost([s("0")]);
        let t = unfold_coterm(&sig, &ctx, &s("0->0"), St::Fun, |st| match st {
            St::Fun => Layer::Con(op2("lam", "0", "0"), vec![Child::Seed(St::Arg)]),
            St::Arg => Layer::Con(
                op2("app", "0", "0"),
                vec![Child::Seed(St::Fun), Child::Seed(St::Arg)],
            ),
        });
        check_to_depth(&t, 6).unwrap();
        let tr = truncate(&t, 5);
        // count constructor layers along the leftmost path
        let mut depth = 0;
        let mut cur = &tr;
        while let Truncation::Con(_, args) = cur {
            depth += 1;
            cur = &args[0];
        }
        assert_eq!(depth, 5);
        assert_eq!(*cur, Truncation::Cut);
    }

    #[test]
    fn unfold_var_layer() {
        let sig = stlc();
        let ctx = Context::from_innermost([s("0")]);
        let t = unfold_coterm(&sig, &ctx, &s("0"), (), |_| Layer::Var(0));
        assert!(matches!(t.out(), Node::Var(0)));
    }

    #[test]
    fn concurrent_forcing_runs_step_once() {
        let sig = stlc();
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let ctx = Context::from_innermost([s("0")]);
        let t = unfold_coterm(&sig, &ctx, &s("0"), (), move |_| {
            c.fetch_add(1, Ordering::SeqCst);
            std::thread::sleep(std::time::Duration::from_millis(5));
            Layer::Var(0)
        });
        std::thread::scope(|scope| {
            for _ in 0..8 {
                let t = t.clone();
                scope.spawn(move || {
                    assert!(matches!(t.out(), Node::Var(0)));
                });
            }
        });
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn embed_and_truncate_finite() {
        let sig = stlc();
        // λf. λx. f (f x)
        let body = FinTerm::Con(
            op2("app", "0", "0"),
            vec![
                FinTerm::Var(1),
                FinTerm::Con(op2("app", "0", "0"), vec![FinTerm::Var(1), FinTerm::Var(0)]),
            ],
        );
        let two = FinTerm::Con(
            op2("lam", "0->0", "0->0"),
            vec![FinTerm::Con(op2("lam", "0", "0"), vec![body])],
        );
        assert_eq!(two.sort_in(&sig, &Context::empty()).unwrap(), s("(0->0)->0->0"));
        assert_eq!(two.height(), 4);
        let t = embed(&sig, &Context::empty(), &two).unwrap();
        let tr = truncate(&t, two.height() + 1);
        assert!(!tr.has_cuts());
        assert_eq!(tr.to_finite().unwrap(), two);
        assert_eq!(truncate(&t, 10), Truncation::from(&two));
        assert_eq!(truncate(&t, 0), Truncation::Cut);
        assert_eq!(to_finite(&t, 100), Some(two.clone()));
        assert_eq!(to_finite(&t, 3), None);
    }
}
