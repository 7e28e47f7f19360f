//! Search forests for simple types and the inhabitants read off them.

use cocalc::bisim::{pretty, Style};
use cocalc::context::Context;
use cocalc::coterm::embed;
use cocalc::inhabit::{enumerate_inhabitants, generate_search_forest, parse_type, stlc_for, three_family_member};

fn main() {
    let church = parse_type("(0->0)->0->0").unwrap();
    let forest = generate_search_forest(&[], &church);
    println!("forest: {}", pretty(&forest, 6, Style::Named));
    let sig = stlc_for(&[], &church);
    for t in enumerate_inhabitants(&[], &church, 10) {
        let c = embed(&sig, &Context::empty(), &t).unwrap();
        println!("  {}", pretty(&c, t.height() + 1, Style::Named));
    }

    let three = parse_type("((0->0)->0)->0").unwrap();
    let sig = stlc_for(&[], &three);
    for t in enumerate_inhabitants(&[], &three, 14) {
        let (n, i) = three_family_member(&t).unwrap();
        let c = embed(&sig, &Context::empty(), &t).unwrap();
        println!("n={n} i={i}  {}", pretty(&c, t.height() + 1, Style::Named));
    }
}
