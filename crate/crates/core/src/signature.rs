//! Multi-sorted binding signatures.
//!
//! A signature is a universe of constructor indices together with an arity
//! function. The built-in signatures have infinite index sets and compute
//! arities on demand from the index parameters; finite signatures come from
//! the textual DSL:
//!
//! ```text
//! sorts { v; t; e; }
//! ops { lam : [v]t -> t; sum0 : -> t; sum2 : e, e -> t; tup1 : v, t -> e; }
//! ```

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::lexer::{Cursor, SyntaxError, Tok};
use crate::sort::{parse_sort, parse_sort_primary, Sort};

/// One parameter of a constructor index, e.g. the `<s,t>` of `app<s,t>`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum OpParam {
    Sort(Sort),
    Nat(usize),
    Sorts(Vec<Sort>),
}

impl fmt::Display for OpParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpParam::Sort(s) => write!(f, "{s}"),
            OpParam::Nat(n) => write!(f, "{n}"),
            OpParam::Sorts(ss) => {
                f.write_str("[")?;
                for (i, s) in ss.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ParamKind {
    Sort,
    Nat,
    Sorts,
}

/// A constructor index: a name plus parameters selecting one member of a
/// (possibly infinite) family.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Op {
    name: Arc<str>,
    params: Vec<OpParam>,
}

impl Op {
    pub fn new(name: &str, params: Vec<OpParam>) -> Op {
        Op {
            name: Arc::from(name),
            params,
        }
    }

    pub fn named(name: &str) -> Op {
        Op::new(name, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[OpParam] {
        &self.params
    }

    fn sort_param(&self, i: usize) -> Option<&Sort> {
        match self.params.get(i) {
            Some(OpParam::Sort(s)) => Some(s),
            _ => None,
        }
    }

    fn nat_param(&self, i: usize) -> Option<usize> {
        match self.params.get(i) {
            Some(OpParam::Nat(n)) => Some(*n),
            _ => None,
        }
    }

    fn sorts_param(&self, i: usize) -> Option<&[Sort]> {
        match self.params.get(i) {
            Some(OpParam::Sorts(s)) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            f.write_str("<")?;
            for (i, p) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(">")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Sorts of the variables bound by one argument, and the argument's sort.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BinderArity {
    pub bound: Vec<Sort>,
    pub sort: Sort,
}

impl BinderArity {
    pub fn plain(sort: Sort) -> Self {
        BinderArity {
            bound: Vec::new(),
            sort,
        }
    }

    pub fn binding(bound: Vec<Sort>, sort: Sort) -> Self {
        BinderArity { bound, sort }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ConstructorArity {
    pub args: Vec<BinderArity>,
    pub target: Sort,
}

impl ConstructorArity {
    pub fn sorts(&self) -> impl Iterator<Item = &Sort> {
        self.args
            .iter()
            .flat_map(|a| a.bound.iter().chain(std::iter::once(&a.sort)))
            .chain(std::iter::once(&self.target))
    }
}

impl fmt::Display for ConstructorArity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if !a.bound.is_empty() {
                let bound: Vec<_> = a.bound.iter().map(Sort::display_atomic).collect();
                write!(f, "[{}]", bound.join(" "))?;
            }
            f.write_str(&a.sort.display_atomic())?;
        }
        if !self.args.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "-> {}", self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("unknown signature `{0}`")]
    UnknownSignature(String),
    #[error("unknown constructor `{0}`")]
    UnknownOp(String),
    #[error("constructor `{op}` expects parameters {expected}")]
    BadParams { op: String, expected: String },
    #[error("undeclared sort `{0}`")]
    UndeclaredSort(Sort),
    #[error("{pos}: undeclared sort `{sort}`")]
    UndeclaredSortAt { sort: Sort, pos: crate::lexer::Pos },
    #[error("{pos}: duplicate sort `{sort}`")]
    DuplicateSort { sort: Sort, pos: crate::lexer::Pos },
    #[error("{pos}: duplicate constructor `{name}`")]
    DuplicateOp {
        name: String,
        pos: crate::lexer::Pos,
    },
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
}

/// A signature with finitely many sorts and constructors.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FiniteSignature {
    pub sorts: Vec<Sort>,
    pub ops: Vec<(String, ConstructorArity)>,
}

impl FiniteSignature {
    fn arity(&self, name: &str) -> Option<&ConstructorArity> {
        self.ops.iter().find(|(n, _)| n == name).map(|(_, a)| a)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum SigKind {
    Stlc { atoms: Vec<Arc<str>> },
    UntypedForests,
    TypedForests { atoms: Vec<Arc<str>> },
    Finite(FiniteSignature),
}

/// Immutable, cheaply clonable handle to a signature.
#[derive(Clone)]
pub struct Signature(Arc<SigKind>);

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Signature {}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", self.name())
    }
}

/// The three syntactic categories of forests.
pub const FOREST_CATEGORIES: [&str; 3] = ["v", "t", "e"];

fn atom_list(atoms: &[&str]) -> Vec<Arc<str>> {
    atoms.iter().map(|a| Arc::from(*a)).collect()
}

impl Signature {
    /// Simply-typed λ-calculus over the given atoms: `app<s,t>` and `lam<s,t>`.
    pub fn stlc(atoms: &[&str]) -> Signature {
        Signature(Arc::new(SigKind::Stlc {
            atoms: atom_list(atoms),
        }))
    }

    /// Untyped forests over sorts `v`, `t`, `e`: `lam`, `sum<n>`, `tup<k>`.
    pub fn untyped_forests() -> Signature {
        Signature(Arc::new(SigKind::UntypedForests))
    }

    /// Typed forests over sorts `<A,c>`: `lam<s,t>`, `sum<p,n>`, `tup<[B..],p>`.
    pub fn typed_forests(atoms: &[&str]) -> Signature {
        Signature(Arc::new(SigKind::TypedForests {
            atoms: atom_list(atoms),
        }))
    }

    pub fn finite(sig: FiniteSignature) -> Signature {
        Signature(Arc::new(SigKind::Finite(sig)))
    }

    pub fn name(&self) -> String {
        match &*self.0 {
            SigKind::Stlc { atoms } => format!("stlc[{}]", atoms.join(",")),
            SigKind::UntypedForests => "untyped-forests".to_string(),
            SigKind::TypedForests { atoms } => format!("typed-forests[{}]", atoms.join(",")),
            SigKind::Finite(_) => "finite".to_string(),
        }
    }

    pub fn is_stlc(&self) -> bool {
        matches!(&*self.0, SigKind::Stlc { .. })
    }

    pub fn is_untyped_forests(&self) -> bool {
        matches!(&*self.0, SigKind::UntypedForests)
    }

    pub fn is_typed_forests(&self) -> bool {
        matches!(&*self.0, SigKind::TypedForests { .. })
    }

    pub fn as_finite(&self) -> Option<&FiniteSignature> {
        match &*self.0 {
            SigKind::Finite(f) => Some(f),
            _ => None,
        }
    }

    /// Atom universe of the typed built-ins; empty otherwise.
    pub fn atoms(&self) -> Vec<Sort> {
        match &*self.0 {
            SigKind::Stlc { atoms } | SigKind::TypedForests { atoms } => {
                atoms.iter().map(|a| Sort::Atom(a.clone())).collect()
            }
            _ => Vec::new(),
        }
    }

    fn is_simple_type(&self, s: &Sort, atoms: &[Arc<str>]) -> bool {
        match s {
            Sort::Atom(a) => atoms.contains(a),
            Sort::Arrow(a, b) => self.is_simple_type(a, atoms) && self.is_simple_type(b, atoms),
            Sort::Pair(..) => false,
        }
    }

    /// Whether `s` is a sort of this signature.
    pub fn is_sort(&self, s: &Sort) -> bool {
        match &*self.0 {
            SigKind::Stlc { atoms } => self.is_simple_type(s, atoms),
            SigKind::UntypedForests => {
                matches!(s, Sort::Atom(a) if FOREST_CATEGORIES.contains(&&**a))
            }
            SigKind::TypedForests { atoms } => match s {
                Sort::Pair(ty, cat) => {
                    self.is_simple_type(ty, atoms)
                        && matches!(&**cat, Sort::Atom(c) if FOREST_CATEGORIES.contains(&&**c))
                }
                _ => false,
            },
            SigKind::Finite(f) => f.sorts.contains(s),
        }
    }

    /// Parameter shape of the constructor family `name`, if it exists.
    pub fn param_kinds(&self, name: &str) -> Option<Vec<ParamKind>> {
        use ParamKind::*;
        match (&*self.0, name) {
            (SigKind::Stlc { .. }, "app" | "lam") => Some(vec![Sort, Sort]),
            (SigKind::UntypedForests, "lam") => Some(vec![]),
            (SigKind::UntypedForests, "sum" | "tup") => Some(vec![Nat]),
            (SigKind::TypedForests { .. }, "lam") => Some(vec![Sort, Sort]),
            (SigKind::TypedForests { .. }, "sum") => Some(vec![Sort, Nat]),
            (SigKind::TypedForests { .. }, "tup") => Some(vec![Sorts, Sort]),
            (SigKind::Finite(f), n) => f.arity(n).map(|_| vec![]),
            _ => None,
        }
    }

    /// The arity function. Pure: equal indices give equal arities.
    pub fn arity(&self, op: &Op) -> Result<ConstructorArity, SignatureError> {
        let kinds = self
            .param_kinds(op.name())
            .ok_or_else(|| SignatureError::UnknownOp(op.to_string()))?;
        let shape_ok = kinds.len() == op.params().len()
            && kinds.iter().zip(op.params()).all(|(k, p)| {
                matches!(
                    (k, p),
                    (ParamKind::Sort, OpParam::Sort(_))
                        | (ParamKind::Nat, OpParam::Nat(_))
                        | (ParamKind::Sorts, OpParam::Sorts(_))
                )
            });
        let bad = |expected: &str| SignatureError::BadParams {
            op: op.to_string(),
            expected: expected.to_string(),
        };
        if !shape_ok {
            return Err(bad(&describe_kinds(&kinds)));
        }
        let v = Sort::atom("v");
        let t = Sort::atom("t");
        let e = Sort::atom("e");
        Ok(match (&*self.0, op.name()) {
            (SigKind::Stlc { .. }, "app") => {
                let (s, tt) = (op.sort_param(0).unwrap(), op.sort_param(1).unwrap());
                ConstructorArity {
                    args: vec![
                        BinderArity::plain(Sort::arrow(s.clone(), tt.clone())),
                        BinderArity::plain(s.clone()),
                    ],
                    target: tt.clone(),
                }
            }
            (SigKind::Stlc { .. }, "lam") => {
                let (s, tt) = (op.sort_param(0).unwrap(), op.sort_param(1).unwrap());
                ConstructorArity {
                    args: vec![BinderArity::binding(vec![s.clone()], tt.clone())],
                    target: Sort::arrow(s.clone(), tt.clone()),
                }
            }
            (SigKind::UntypedForests, "lam") => ConstructorArity {
                args: vec![BinderArity::binding(vec![v], t.clone())],
                target: t,
            },
            (SigKind::UntypedForests, "sum") => ConstructorArity {
                args: vec![BinderArity::plain(e); op.nat_param(0).unwrap()],
                target: t,
            },
            (SigKind::UntypedForests, "tup") => {
                let mut args = vec![BinderArity::plain(v)];
                args.extend(vec![BinderArity::plain(t); op.nat_param(0).unwrap()]);
                ConstructorArity { args, target: e }
            }
            (SigKind::TypedForests { .. }, "lam") => {
                let (s, tt) = (op.sort_param(0).unwrap(), op.sort_param(1).unwrap());
                ConstructorArity {
                    args: vec![BinderArity::binding(
                        vec![Sort::pair(s.clone(), v)],
                        Sort::pair(tt.clone(), t.clone()),
                    )],
                    target: Sort::pair(Sort::arrow(s.clone(), tt.clone()), t),
                }
            }
            (SigKind::TypedForests { .. }, "sum") => {
                let p = op.sort_param(0).unwrap();
                if p.as_atom().is_none() {
                    return Err(bad("<atom, n>"));
                }
                ConstructorArity {
                    args: vec![
                        BinderArity::plain(Sort::pair(p.clone(), e));
                        op.nat_param(1).unwrap()
                    ],
                    target: Sort::pair(p.clone(), t),
                }
            }
            (SigKind::TypedForests { .. }, "tup") => {
                let bs = op.sorts_param(0).unwrap();
                let p = op.sort_param(1).unwrap();
                if p.as_atom().is_none() {
                    return Err(bad("<[B1,..,Bk], atom>"));
                }
                let head = Sort::from_spine(bs, p.clone());
                let mut args = vec![BinderArity::plain(Sort::pair(head, v))];
                args.extend(
                    bs.iter()
                        .map(|b| BinderArity::plain(Sort::pair(b.clone(), t.clone()))),
                );
                ConstructorArity {
                    args,
                    target: Sort::pair(p.clone(), e),
                }
            }
            (SigKind::Finite(f), name) => f.arity(name).cloned().unwrap(),
            _ => return Err(SignatureError::UnknownOp(op.to_string())),
        })
    }
}

fn describe_kinds(kinds: &[ParamKind]) -> String {
    if kinds.is_empty() {
        return "none".to_string();
    }
    let parts: Vec<_> = kinds
        .iter()
        .map(|k| match k {
            ParamKind::Sort => "sort",
            ParamKind::Nat => "n",
            ParamKind::Sorts => "[sorts]",
        })
        .collect();
    format!("<{}>", parts.join(","))
}

/// Looks up a built-in signature by name. `stlc` and `typed-forests` take
/// the atom universe.
pub fn builtin_signature(name: &str, atoms: &[&str]) -> Result<Signature, SignatureError> {
    match name {
        "stlc" => Ok(Signature::stlc(atoms)),
        "untyped-forests" => Ok(Signature::untyped_forests()),
        "typed-forests" => Ok(Signature::typed_forests(atoms)),
        other => Err(SignatureError::UnknownSignature(other.to_string())),
    }
}

#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub op: Op,
    pub arity: Option<ConstructorArity>,
    pub failures: Vec<SignatureError>,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub entries: Vec<ProbeResult>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|e| e.failures.is_empty())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.arity {
                Some(a) if e.failures.is_empty() => writeln!(f, "ok {} : {a}", e.op)?,
                _ => {
                    let msgs: Vec<_> = e.failures.iter().map(|x| x.to_string()).collect();
                    writeln!(f, "fail {} : {}", e.op, msgs.join("; "))?
                }
            }
        }
        write!(
            f,
            "{}",
            if self.is_valid() {
                "valid on probe"
            } else {
                "invalid"
            }
        )
    }
}

/// Spot-checks the arity function on `probe`: every index must have an
/// arity and every sort in it must be a sort of the signature.
pub fn validate_signature(sig: &Signature, probe: &[Op]) -> ValidationReport {
    let entries = probe
        .iter()
        .map(|op| match sig.arity(op) {
            Ok(arity) => {
                let mut seen = HashSet::new();
                let failures = arity
                    .sorts()
                    .filter(|s| !sig.is_sort(s) && seen.insert((*s).clone()))
                    .map(|s| SignatureError::UndeclaredSort(s.clone()))
                    .collect();
                ProbeResult {
                    op: op.clone(),
                    arity: Some(arity),
                    failures,
                }
            }
            Err(e) => ProbeResult {
                op: op.clone(),
                arity: None,
                failures: vec![e],
            },
        })
        .collect();
    ValidationReport { entries }
}

/// All constructors of a finite signature, in declaration order.
pub fn finite_ops(sig: &FiniteSignature) -> Vec<Op> {
    sig.ops.iter().map(|(n, _)| Op::named(n)).collect()
}

/// Parses the signature DSL into a finite signature.
pub fn parse_signature(text: &str) -> Result<Signature, SignatureError> {
    let mut cur = Cursor::new(text)?;
    let mut sig = FiniteSignature::default();
    keyword(&mut cur, "sorts")?;
    cur.expect("{")?;
    while !cur.eat("}") {
        let pos = cur.pos();
        let s = parse_sort(&mut cur)?;
        if sig.sorts.contains(&s) {
            return Err(SignatureError::DuplicateSort { sort: s, pos });
        }
        sig.sorts.push(s);
        if !cur.is_sym("}") {
            cur.expect(";")?;
        }
    }
    cur.eat(";");
    keyword(&mut cur, "ops")?;
    cur.expect("{")?;
    while !cur.eat("}") {
        let pos = cur.pos();
        let name = cur.ident()?;
        if sig.arity(&name).is_some() {
            return Err(SignatureError::DuplicateOp { name, pos });
        }
        cur.expect(":")?;
        let mut args = Vec::new();
        if !cur.is_sym("->") {
            loop {
                args.push(parse_arg(&mut cur, &sig.sorts)?);
                if !cur.eat(",") {
                    break;
                }
            }
        }
        cur.expect("->")?;
        let target = declared_sort(&mut cur, &sig.sorts, true)?;
        sig.ops.push((name, ConstructorArity { args, target }));
        if !cur.is_sym("}") {
            cur.expect(";")?;
        }
    }
    cur.eat(";");
    cur.expect_eof()?;
    Ok(Signature::finite(sig))
}

fn keyword(cur: &mut Cursor, kw: &str) -> Result<(), SyntaxError> {
    match cur.peek() {
        Tok::Ident(s) if s == kw => {
            cur.bump();
            Ok(())
        }
        _ => Err(cur.unexpected(&format!("`{kw}`"))),
    }
}

fn declared_sort(
    cur: &mut Cursor,
    declared: &[Sort],
    allow_arrow: bool,
) -> Result<Sort, SignatureError> {
    let pos = cur.pos();
    let s = if allow_arrow {
        parse_sort(cur)?
    } else {
        parse_sort_primary(cur)?
    };
    if declared.contains(&s) {
        Ok(s)
    } else {
        Err(SignatureError::UndeclaredSortAt { sort: s, pos })
    }
}

fn parse_arg(cur: &mut Cursor, declared: &[Sort]) -> Result<BinderArity, SignatureError> {
    let mut bound = Vec::new();
    if cur.eat("[") {
        while !cur.eat("]") {
            bound.push(declared_sort(cur, declared, false)?);
        }
    }
    let sort = declared_sort(cur, declared, false)?;
    Ok(BinderArity { bound, sort })
}

/// Prints a finite signature in the DSL; `parse_signature` inverts it.
pub fn print_signature(sig: &FiniteSignature) -> String {
    let mut out = String::from("sorts {");
    for s in &sig.sorts {
        out.push_str(&format!(" {s};"));
    }
    out.push_str(" }\nops {\n");
    for (name, arity) in &sig.ops {
        out.push_str(&format!("  {name} : {arity};\n"));
    }
    out.push_str("}\n");
    out
}

impl FromStr for Signature {
    type Err = SignatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_signature(s)
    }
}
