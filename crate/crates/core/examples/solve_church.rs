//! Solving a guarded equation system: the infinite Church numeral.

use cocalc::bisim::{pretty, Style};
use cocalc::coterm::Node;
use cocalc::eqs::parse_equations;
use cocalc::signature::Signature;

fn main() {
    let sig = Signature::stlc(&["0"]);
    let es = parse_equations(
        "let Body : 0 [f : 0->0, x : 0] = f Body\n\
         let Inf : (0->0)->0->0 = \\f x. Body",
        &sig,
    )
    .unwrap();
    let sol = es.solve().unwrap();
    let inf = &sol["Inf"];
    for d in [2, 4, 8] {
        println!("{d}: {}", pretty(inf, d, Style::Named));
    }
    println!("{}", pretty(inf, 6, Style::Debruijn));

    // the body is a cycle: its argument is the body again
    let body = &sol["Body"];
    if let Node::Con(_, kids) = body.out() {
        println!("shared: {}", kids[1].ptr_eq(body));
    }

    let unguarded = parse_equations("let S : 0 [x : 0] = S", &sig).unwrap_err();
    println!("rejected: {unguarded}");
}
