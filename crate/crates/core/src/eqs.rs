//! Equation-file front end.
//!
//! ```text
//! # the body of every Church numeral, f applied forever
//! let S : 0 [f : 0->0, x : 0] = f S;
//! let R : (0->0)->0->0 = \f x. S;
//! ```
//!
//! Contexts list variables outermost first. A term is a head applied to
//! arguments; a head is resolved as a bound variable, then an unknown, then
//! a constructor. Constructor parameters may be written `op<p, ...>` and are
//! otherwise inferred from the expected sort and the arguments. Arguments in
//! binding positions are written `\x y. body`, the first name being the
//! innermost new variable. A reference to an unknown picks, for each
//! variable of the unknown's context, the innermost visible variable of the
//! same name; `S@[f:=g]` overrides that choice per name. For the built-in
//! signatures `\x. body` outside a binding position abbreviates `lam`, and
//! in the simply-typed signature juxtaposition `f a b` abbreviates `app`.

use std::collections::HashMap;

use thiserror::Error;

use crate::context::{Context, ContextMorphism};
use crate::lexer::{Cursor, Pos, SyntaxError, Tok};
use crate::signature::{Op, OpParam, ParamKind, Signature};
use crate::sort::{parse_sort, Sort};
use crate::system::{EquationSystem, PreTerm, SystemError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EqsError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: {message}")]
    Elab { pos: Pos, message: String },
    #[error(transparent)]
    System(#[from] SystemError),
}

fn elab_err(pos: Pos, message: impl Into<String>) -> EqsError {
    EqsError::Elab {
        pos,
        message: message.into(),
    }
}

#[derive(Clone, Debug)]
enum RawParam {
    Sort(Sort),
    Sorts(Vec<Sort>),
}

#[derive(Clone, Debug)]
enum Surf {
    Name {
        name: String,
        pos: Pos,
        params: Option<Vec<RawParam>>,
        rename: Vec<(String, String)>,
    },
    App(Box<Surf>, Vec<Surf>),
    Lam(Vec<String>, Box<Surf>, Pos),
}

impl Surf {
    fn pos(&self) -> Pos {
        match self {
            Surf::Name { pos, .. } | Surf::Lam(_, _, pos) => *pos,
            Surf::App(h, _) => h.pos(),
        }
    }
}

struct Decl {
    name: String,
    pos: Pos,
    ctx: Vec<(String, Sort)>,
    sort: Sort,
    body: Surf,
}

fn is_keyword(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Ident(s) if s == kw)
}

fn parse_decls(text: &str) -> Result<Vec<Decl>, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let mut out = Vec::new();
    while !cur.at_eof() {
        if !is_keyword(cur.peek(), "let") {
            return Err(cur.unexpected("`let`"));
        }
        cur.bump();
        let pos = cur.pos();
        let name = cur.ident()?;
        cur.expect(":")?;
        let sort = parse_sort(&mut cur)?;
        let mut ctx = Vec::new();
        if cur.eat("[") {
            while !cur.eat("]") {
                let x = cur.ident()?;
                cur.expect(":")?;
                ctx.push((x, parse_sort(&mut cur)?));
                if !cur.is_sym("]") {
                    cur.expect(",")?;
                }
            }
        }
        cur.expect("=")?;
        let body = parse_term(&mut cur)?;
        cur.eat(";");
        out.push(Decl {
            name,
            pos,
            ctx,
            sort,
            body,
        });
    }
    Ok(out)
}

fn starts_atom(cur: &Cursor) -> bool {
    match cur.peek() {
        Tok::Ident(s) => s != "let",
        Tok::Sym(s) => matches!(*s, "(" | "\\" | "λ"),
        Tok::Eof => false,
    }
}

fn parse_term(cur: &mut Cursor) -> Result<Surf, SyntaxError> {
    let head = parse_atom(cur)?;
    if matches!(head, Surf::Lam(..)) {
        return Ok(head);
    }
    let mut args = Vec::new();
    while starts_atom(cur) {
        let a = parse_atom(cur)?;
        let lam = matches!(a, Surf::Lam(..));
        args.push(a);
        if lam {
            break;
        }
    }
    Ok(if args.is_empty() {
        head
    } else {
        Surf::App(Box::new(head), args)
    })
}

fn parse_atom(cur: &mut Cursor) -> Result<Surf, SyntaxError> {
    let pos = cur.pos();
    if cur.eat("(") {
        let t = parse_term(cur)?;
        cur.expect(")")?;
        return Ok(t);
    }
    if cur.eat("\\") || cur.eat("λ") {
        let mut names = vec![cur.ident()?];
        while let Tok::Ident(_) = cur.peek() {
            names.push(cur.ident()?);
        }
        cur.expect(".")?;
        let body = parse_term(cur)?;
        return Ok(Surf::Lam(names, Box::new(body), pos));
    }
    let name = cur.ident()?;
    let mut params = None;
    if cur.eat("<") {
        let mut ps = Vec::new();
        while !cur.eat(">") {
            if cur.eat("[") {
                let mut ss = Vec::new();
                while !cur.eat("]") {
                    ss.push(parse_sort(cur)?);
                    if !cur.is_sym("]") {
                        cur.expect(",")?;
                    }
                }
                ps.push(RawParam::Sorts(ss));
            } else {
                ps.push(RawParam::Sort(parse_sort(cur)?));
            }
            if !cur.is_sym(">") {
                cur.expect(",")?;
            }
        }
        params = Some(ps);
    }
    let mut rename = Vec::new();
    if cur.eat("@") {
        cur.expect("[")?;
        while !cur.eat("]") {
            let from = cur.ident()?;
            cur.expect(":=")?;
            let to = cur.ident()?;
            rename.push((from, to));
            if !cur.is_sym("]") {
                cur.expect(",")?;
            }
        }
    }
    Ok(Surf::Name {
        name,
        pos,
        params,
        rename,
    })
}

/// Parses an equation file against `sig` and checks the resulting system.
pub fn parse_equations(text: &str, sig: &Signature) -> Result<EquationSystem, EqsError> {
    let decls = parse_decls(text)?;
    let mut headers: HashMap<String, usize> = HashMap::new();
    for (i, d) in decls.iter().enumerate() {
        if headers.insert(d.name.clone(), i).is_some() {
            return Err(elab_err(d.pos, format!("unknown `{}` is defined twice", d.name)));
        }
        for s in d.ctx.iter().map(|(_, s)| s).chain([&d.sort]) {
            if !sig.is_sort(s) {
                return Err(elab_err(d.pos, format!("`{s}` is not a sort of {}", sig.name())));
            }
        }
    }
    let el = Elab {
        sig,
        decls: &decls,
        headers,
    };
    let mut es = EquationSystem::new(sig);
    for d in &decls {
        let scope: Vec<(String, Sort)> = d.ctx.iter().rev().cloned().collect();
        let rhs = el.term(&d.body, &d.sort, &scope)?;
        let ctx = Context::from_outermost(d.ctx.iter().map(|(_, s)| s.clone()));
        es.add(&d.name, ctx, d.sort.clone(), rhs)?;
    }
    es.check()?;
    Ok(es)
}

/// Parses a constructor index such as `app<0,0>` or `tup<[0,0],0>`.
pub fn parse_op(text: &str, sig: &Signature) -> Result<Op, EqsError> {
    let mut cur = Cursor::new(text)?;
    let pos = cur.pos();
    let head = parse_atom(&mut cur)?;
    cur.expect_eof()?;
    let Surf::Name { name, params, rename, .. } = head else {
        return Err(elab_err(pos, "expected a constructor name"));
    };
    if !rename.is_empty() {
        return Err(elab_err(pos, "unexpected renaming"));
    }
    let kinds = sig
        .param_kinds(&name)
        .ok_or_else(|| elab_err(pos, format!("`{name}` is not a constructor of {}", sig.name())))?;
    let el = Elab {
        sig,
        decls: &[],
        headers: HashMap::new(),
    };
    el.explicit_op(&name, pos, &kinds, &params.unwrap_or_default())
}

struct Elab<'a> {
    sig: &'a Signature,
    decls: &'a [Decl],
    headers: HashMap<String, usize>,
}

type Scope = [(String, Sort)];

fn lookup(scope: &Scope, name: &str) -> Option<usize> {
    scope.iter().position(|(n, _)| n == name)
}

fn local_ctx(scope: &Scope) -> Context {
    Context::from_innermost(scope.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>())
}

impl<'a> Elab<'a> {
    fn term(&self, t: &Surf, expected: &Sort, scope: &Scope) -> Result<PreTerm, EqsError> {
        match t {
            Surf::Lam(names, body, pos) => self.lam_sugar(names, body, *pos, expected, scope),
            Surf::Name { .. } => self.applied(t, &[], expected, scope),
            Surf::App(head, args) => self.applied(head, args, expected, scope),
        }
    }

    fn applied(&self, head: &Surf, args: &[Surf], expected: &Sort, scope: &Scope) -> Result<PreTerm, EqsError> {
        let Surf::Name {
            name,
            pos,
            params,
            rename,
        } = head
        else {
            return self.app_chain(head, args, expected, scope);
        };
        let is_var = lookup(scope, name).is_some();
        let is_unknown = !is_var && self.headers.contains_key(name);
        if (is_var || is_unknown) && !args.is_empty() {
            return self.app_chain(head, args, expected, scope);
        }
        if let Some(i) = lookup(scope, name) {
            let s = &scope[i].1;
            if s != expected {
                return Err(elab_err(
                    *pos,
                    format!("`{name}` has sort {s}, expected {expected}"),
                ));
            }
            return Ok(PreTerm::Var(i));
        }
        if is_unknown {
            return self.reference(name, *pos, rename, expected, scope);
        }
        let kinds = self
            .sig
            .param_kinds(name)
            .ok_or_else(|| elab_err(*pos, format!("unknown identifier `{name}`")))?;
        let op = match params {
            Some(ps) => self.explicit_op(name, *pos, &kinds, ps)?,
            None => self.infer_op(name, *pos, &kinds, args, expected, scope)?,
        };
        self.constructor(&op, *pos, args, expected, scope)
    }

    fn explicit_op(&self, name: &str, pos: Pos, kinds: &[ParamKind], ps: &[RawParam]) -> Result<Op, EqsError> {
        if kinds.len() != ps.len() {
            return Err(elab_err(
                pos,
                format!("`{name}` takes {} parameters, got {}", kinds.len(), ps.len()),
            ));
        }
        let params = kinds
            .iter()
            .zip(ps)
            .map(|(k, p)| match (k, p) {
                (ParamKind::Sort, RawParam::Sort(s)) => Ok(OpParam::Sort(s.clone())),
                (ParamKind::Sorts, RawParam::Sorts(ss)) => Ok(OpParam::Sorts(ss.clone())),
                (ParamKind::Nat, RawParam::Sort(Sort::Atom(a))) => a
                    .parse()
                    .map(OpParam::Nat)
                    .map_err(|_| elab_err(pos, format!("`{a}` is not a number"))),
                _ => Err(elab_err(pos, format!("bad parameter `{p:?}` for `{name}`"))),
            })
            .collect::<Result<_, _>>()?;
        Ok(Op::new(name, params))
    }

    fn infer_op(
        &self,
        name: &str,
        pos: Pos,
        kinds: &[ParamKind],
        args: &[Surf],
        expected: &Sort,
        scope: &Scope,
    ) -> Result<Op, EqsError> {
        if kinds.is_empty() {
            return Ok(Op::named(name));
        }
        let stuck = || {
            elab_err(
                pos,
                format!("cannot infer the parameters of `{name}` at sort {expected}; write {name}<...>"),
            )
        };
        let sorts = |a: Sort, b: Sort| vec![OpParam::Sort(a), OpParam::Sort(b)];
        let n = args.len();
        let params = if self.sig.is_stlc() {
            match name {
                "lam" => match expected {
                    Sort::Arrow(a, b) => sorts((**a).clone(), (**b).clone()),
                    _ => return Err(stuck()),
                },
                "app" => {
                    let f = args.first().and_then(|a| self.synth(a, scope));
                    let x = args.get(1).and_then(|a| self.synth(a, scope));
                    match (f, x) {
                        (Some(Sort::Arrow(a, _)), _) => sorts((*a).clone(), expected.clone()),
                        (_, Some(a)) => sorts(a, expected.clone()),
                        _ => return Err(stuck()),
                    }
                }
                _ => return Err(stuck()),
            }
        } else if self.sig.is_untyped_forests() {
            match name {
                "sum" => vec![OpParam::Nat(n)],
                "tup" if n > 0 => vec![OpParam::Nat(n - 1)],
                _ => return Err(stuck()),
            }
        } else if self.sig.is_typed_forests() {
            let Sort::Pair(ty, _) = expected else {
                return Err(stuck());
            };
            match name {
                "lam" => match &**ty {
                    Sort::Arrow(a, b) => sorts((**a).clone(), (**b).clone()),
                    _ => return Err(stuck()),
                },
                "sum" => vec![OpParam::Sort((**ty).clone()), OpParam::Nat(n)],
                "tup" if n > 0 => {
                    let Some(Sort::Pair(head, _)) = self.synth(&args[0], scope) else {
                        return Err(stuck());
                    };
                    let (spine, _) = head.spine();
                    if spine.len() < n - 1 {
                        return Err(stuck());
                    }
                    vec![
                        OpParam::Sorts(spine[..n - 1].to_vec()),
                        OpParam::Sort((**ty).clone()),
                    ]
                }
                _ => return Err(stuck()),
            }
        } else {
            return Err(stuck());
        };
        Ok(Op::new(name, params))
    }

    /// Sort of a term that determines it without context from above.
    fn synth(&self, t: &Surf, scope: &Scope) -> Option<Sort> {
        match t {
            Surf::Name { name, params, .. } => {
                if let Some(i) = lookup(scope, name) {
                    return Some(scope[i].1.clone());
                }
                if let Some(&d) = self.headers.get(name) {
                    return Some(self.decls[d].sort.clone());
                }
                let kinds = self.sig.param_kinds(name)?;
                let op = self.explicit_op(name, t.pos(), &kinds, params.as_ref()?).ok()?;
                self.sig.arity(&op).ok().map(|a| a.target)
            }
            Surf::App(head, args) if self.sig.is_stlc() => {
                let mut s = self.synth(head, scope)?;
                if matches!(&**head, Surf::Name { name, .. } if lookup(scope, name).is_none()
                    && !self.headers.contains_key(name))
                {
                    return None;
                }
                for _ in args {
                    match s {
                        Sort::Arrow(_, b) => s = (*b).clone(),
                        _ => return None,
                    }
                }
                Some(s)
            }
            _ => None,
        }
    }

    fn constructor(&self, op: &Op, pos: Pos, args: &[Surf], expected: &Sort, scope: &Scope) -> Result<PreTerm, EqsError> {
        let arity = self.sig.arity(op).map_err(|e| elab_err(pos, e.to_string()))?;
        if arity.target != *expected {
            return Err(elab_err(
                pos,
                format!("`{op}` builds sort {}, expected {expected}", arity.target),
            ));
        }
        if arity.args.len() != args.len() {
            return Err(elab_err(
                pos,
                format!("`{op}` takes {} arguments, got {}", arity.args.len(), args.len()),
            ));
        }
        let mut kids = Vec::with_capacity(args.len());
        for (a, t) in arity.args.iter().zip(args) {
            if a.bound.is_empty() {
                kids.push(self.term(t, &a.sort, scope)?);
                continue;
            }
            let Surf::Lam(names, body, lpos) = t else {
                return Err(elab_err(
                    t.pos(),
                    format!("argument of `{op}` binds {} variables; write \\x. ...", a.bound.len()),
                ));
            };
            if names.len() != a.bound.len() {
                return Err(elab_err(
                    *lpos,
                    format!("`{op}` binds {} variables here, got {}", a.bound.len(), names.len()),
                ));
            }
            let mut inner: Vec<(String, Sort)> =
                names.iter().cloned().zip(a.bound.iter().cloned()).collect();
            inner.extend(scope.iter().cloned());
            kids.push(self.term(body, &a.sort, &inner)?);
        }
        Ok(PreTerm::Con(op.clone(), kids))
    }

    fn lam_sugar(&self, names: &[String], body: &Surf, pos: Pos, expected: &Sort, scope: &Scope) -> Result<PreTerm, EqsError> {
        if !(self.sig.is_stlc() || self.sig.is_typed_forests() || self.sig.is_untyped_forests()) {
            return Err(elab_err(pos, "binder outside a binding position"));
        }
        let rest = if names.len() > 1 {
            Surf::Lam(names[1..].to_vec(), Box::new(body.clone()), pos)
        } else {
            body.clone()
        };
        let arg = Surf::Lam(vec![names[0].clone()], Box::new(rest), pos);
        let op = self.infer_op("lam", pos, &self.sig.param_kinds("lam").unwrap(), &[], expected, scope)?;
        self.constructor(&op, pos, &[arg], expected, scope)
    }

    /// `f a b` in the simply-typed signature: `app(app(f, a), b)`.
    fn app_chain(&self, head: &Surf, args: &[Surf], expected: &Sort, scope: &Scope) -> Result<PreTerm, EqsError> {
        if !self.sig.is_stlc() {
            return Err(elab_err(head.pos(), "only constructors take arguments here"));
        }
        let Some(fs) = self.synth(head, scope) else {
            return Err(elab_err(head.pos(), "cannot infer the sort of this application head"));
        };
        let (spine, _) = fs.spine();
        if spine.len() < args.len() {
            return Err(elab_err(
                head.pos(),
                format!("head of sort {fs} cannot take {} arguments", args.len()),
            ));
        }
        let mut acc_sort = fs.clone();
        let mut acc = self.term(head, &fs, scope)?;
        for (a, s) in args.iter().zip(&spine) {
            let Sort::Arrow(_, b) = acc_sort else { unreachable!() };
            let res = (*b).clone();
            let op = Op::new("app", vec![OpParam::Sort(s.clone()), OpParam::Sort(res.clone())]);
            acc = PreTerm::Con(op, vec![acc, self.term(a, s, scope)?]);
            acc_sort = res;
        }
        if acc_sort != *expected {
            return Err(elab_err(
                head.pos(),
                format!("application has sort {acc_sort}, expected {expected}"),
            ));
        }
        Ok(acc)
    }

    fn reference(
        &self,
        name: &str,
        pos: Pos,
        rename: &[(String, String)],
        expected: &Sort,
        scope: &Scope,
    ) -> Result<PreTerm, EqsError> {
        let d = &self.decls[self.headers[name]];
        if d.sort != *expected {
            return Err(elab_err(
                pos,
                format!("`{name}` has sort {}, expected {expected}", d.sort),
            ));
        }
        for (from, _) in rename {
            if !d.ctx.iter().any(|(n, _)| n == from) {
                return Err(elab_err(pos, format!("`{name}` has no variable `{from}`")));
            }
        }
        // declared context is outermost first; positions count from the inside
        let mut map = Vec::with_capacity(d.ctx.len());
        for (x, s) in d.ctx.iter().rev() {
            let target = rename
                .iter()
                .find(|(f, _)| f == x)
                .map_or(x.as_str(), |(_, t)| t.as_str());
            let i = lookup(scope, target).ok_or_else(|| {
                elab_err(
                    pos,
                    format!("cannot rename `{x}` of `{name}`: no `{target}` in scope; write {name}@[{x}:=...]"),
                )
            })?;
            if scope[i].1 != *s {
                return Err(elab_err(
                    pos,
                    format!("`{target}` has sort {}, but `{x}` of `{name}` has sort {s}", scope[i].1),
                ));
            }
            map.push(i);
        }
        let src = Context::from_outermost(d.ctx.iter().map(|(_, s)| s.clone()));
        let rho = ContextMorphism::new(src, local_ctx(scope), map)
            .map_err(|e| elab_err(pos, e.to_string()))?;
        Ok(PreTerm::reference(name, rho))
    }
}
