//! Renaming, weakening and monadic substitution into an infinite term.

use cocalc::bisim::{pretty, Style};
use cocalc::context::{Context, ContextMorphism};
use cocalc::coterm::var;
use cocalc::eqs::parse_equations;
use cocalc::signature::Signature;
use cocalc::sort::Sort;
use cocalc::subst::{bind, rename, weaken, Substitution};

fn main() {
    let sig = Signature::stlc(&["0"]);
    let es = parse_equations("let S : 0 [f : 0->0, x : 0] = f S", &sig).unwrap();
    let s = es.solve().unwrap()["S"].clone();
    println!("S        = {}", pretty(&s, 3, Style::Debruijn));

    let w = weaken(&[Sort::atom("0")], &s);
    println!("weakened = {}", pretty(&w, 3, Style::Debruijn));

    // swap in a context with f and x the other way round
    let tgt = Context::from_outermost(["0".parse().unwrap(), "0->0".parse().unwrap()]);
    let rho = ContextMorphism::new(s.ctx().clone(), tgt, vec![1, 0]).unwrap();
    println!("renamed  = {}", pretty(&rename(&rho, &s).unwrap(), 3, Style::Debruijn));

    // f := λy. f (f y), x := x
    let g = parse_equations("let D : 0->0 [f : 0->0] = \\y. f (f y)", &sig).unwrap();
    let double = g.solve().unwrap()["D"].clone();
    let ctx = s.ctx().clone();
    let d = weaken(&[Sort::atom("0")], &double);
    let sigma = Substitution::new(&sig, &ctx, &ctx, vec![var(&sig, &ctx, 0).unwrap(), d]).unwrap();
    println!("bound    = {}", pretty(&bind(&sigma, &s).unwrap(), 5, Style::Named));
}
