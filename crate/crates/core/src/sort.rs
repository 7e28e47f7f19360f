//! Sorts: atoms, arrows over sorts (simple types) and pairs (typed-forest sorts).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::lexer::{Cursor, SyntaxError, Tok};

/// A syntactic category label. Equality is structural on the canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Atom(Arc<str>),
    Arrow(Arc<Sort>, Arc<Sort>),
    /// `<A, c>`: a simple type paired with a syntactic category.
    Pair(Arc<Sort>, Arc<Sort>),
}

impl Sort {
    pub fn atom(name: &str) -> Sort {
        Sort::Atom(Arc::from(name))
    }

    pub fn arrow(from: Sort, to: Sort) -> Sort {
        Sort::Arrow(Arc::new(from), Arc::new(to))
    }

    pub fn pair(ty: Sort, category: Sort) -> Sort {
        Sort::Pair(Arc::new(ty), Arc::new(category))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sort::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Right-nested arrow `B1 -> ... -> Bk -> target`.
    pub fn from_spine(args: &[Sort], target: Sort) -> Sort {
        args.iter()
            .rev()
            .fold(target, |acc, b| Sort::arrow(b.clone(), acc))
    }

    /// Splits `B1 -> ... -> Bk -> r` with `r` not an arrow into `([B1..Bk], r)`.
    pub fn spine(&self) -> (Vec<Sort>, Sort) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Sort::Arrow(a, b) = cur {
            args.push((**a).clone());
            cur = b;
        }
        (args, cur.clone())
    }

    /// True when the sort is built from atoms and arrows only.
    pub fn is_simple_type(&self) -> bool {
        match self {
            Sort::Atom(_) => true,
            Sort::Arrow(a, b) => a.is_simple_type() && b.is_simple_type(),
            Sort::Pair(..) => false,
        }
    }

    /// Every atom occurring in the sort, left to right.
    pub fn atoms(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Arc<str>>) {
        match self {
            Sort::Atom(a) => out.push(a.clone()),
            Sort::Arrow(a, b) | Sort::Pair(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Sort::Atom(_) => 1,
            Sort::Arrow(a, b) | Sort::Pair(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Renders the sort so that it can sit inside an argument list without
    /// top-level arrows.
    pub fn display_atomic(&self) -> String {
        match self {
            Sort::Arrow(..) => format!("({self})"),
            _ => self.to_string(),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Atom(a) => f.write_str(a),
            Sort::Arrow(a, b) => {
                if matches!(**a, Sort::Arrow(..)) {
                    write!(f, "({a})->{b}")
                } else {
                    write!(f, "{a}->{b}")
                }
            }
            Sort::Pair(a, b) => write!(f, "<{a},{b}>"),
        }
    }
}

impl fmt::Debug for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Sort {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cur = Cursor::new(s)?;
        let sort = parse_sort(&mut cur)?;
        cur.expect_eof()?;
        Ok(sort)
    }
}

/// `sort := primary ('->' sort)?`
pub(crate) fn parse_sort(cur: &mut Cursor) -> Result<Sort, SyntaxError> {
    let head = parse_sort_primary(cur)?;
    if cur.eat("->") {
        let rest = parse_sort(cur)?;
        Ok(Sort::arrow(head, rest))
    } else {
        Ok(head)
    }
}

/// `primary := ident | '(' sort ')' | '<' sort ',' sort '>'`
pub(crate) fn parse_sort_primary(cur: &mut Cursor) -> Result<Sort, SyntaxError> {
    match cur.peek().clone() {
        Tok::Ident(name) => {
            cur.bump();
            Ok(Sort::atom(&name))
        }
        Tok::Sym("(") => {
            cur.bump();
            let s = parse_sort(cur)?;
            cur.expect(")")?;
            Ok(s)
        }
        Tok::Sym("<") => {
            cur.bump();
            let a = parse_sort(cur)?;
            cur.expect(",")?;
            let b = parse_sort(cur)?;
            cur.expect(">")?;
            Ok(Sort::pair(a, b))
        }
        _ => Err(cur.unexpected("a sort")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_sort() -> impl Strategy<Value = Sort> {
        let leaf = prop_oneof![Just("0"), Just("p"), Just("v"), Just("t")].prop_map(Sort::atom);
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Sort::arrow(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Sort::pair(a, b)),
            ]
        })
    }

    #[test]
    fn arrows_associate_right() {
        let s: Sort = "(0->0)->0->0".parse().unwrap();
        let f = Sort::arrow(Sort::atom("0"), Sort::atom("0"));
        assert_eq!(
            s,
            Sort::arrow(f.clone(), Sort::arrow(Sort::atom("0"), Sort::atom("0")))
        );
        assert_eq!(s.to_string(), "(0->0)->0->0");
        let (args, target) = s.spine();
        assert_eq!(args, vec![f, Sort::atom("0")]);
        assert_eq!(target, Sort::atom("0"));
    }

    #[test]
    fn pair_sorts_parse() {
        let s: Sort = "<0->0, v>".parse().unwrap();
        assert_eq!(s.to_string(), "<0->0,v>");
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(s in arb_sort()) {
            let printed = s.to_string();
            let back: Sort = printed.parse().unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.to_string(), printed);
        }

        #[test]
        fn spine_recomposes(s in arb_sort()) {
            let (args, target) = s.spine();
            prop_assert_eq!(Sort::from_spine(&args, target), s);
        }
    }
}
