//! Comparing coterms: bounded depth versus exact on rational terms.

use cocalc::bisim::{bisim_rational_verdict, bisim_to_depth, RationalHandle};
use cocalc::eqs::parse_equations;
use cocalc::signature::Signature;

fn main() {
    let sig = Signature::stlc(&["0"]);
    let one = parse_equations("let A : 0 [f : 0->0, x : 0] = f A", &sig).unwrap();
    let two = parse_equations(
        "let B : 0 [f : 0->0, x : 0] = f C\nlet C : 0 [f : 0->0, x : 0] = f B",
        &sig,
    )
    .unwrap();
    let five = parse_equations("let F : 0 [f : 0->0, x : 0] = f (f (f (f (f x))))", &sig).unwrap();
    let a = RationalHandle::new(one, "A").unwrap();
    let b = RationalHandle::new(two, "B").unwrap();
    let f = RationalHandle::new(five, "F").unwrap();

    println!("A ~ B to depth 64: {}", bisim_to_depth(a.term(), b.term(), 64));
    let v = bisim_rational_verdict(&a, &b).unwrap();
    println!("A ~ B exactly: {} ({} pairs)", v.equal, v.explored);
    for d in [5, 6, 12] {
        println!("A ~ F to depth {d}: {}", bisim_to_depth(a.term(), f.term(), d));
    }
    println!("A ~ F exactly: {}", bisim_rational_verdict(&a, &f).unwrap().equal);
}
