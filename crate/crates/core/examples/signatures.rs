//! Built-in and file signatures, and spot-checking their arity functions.

use cocalc::eqs::parse_op;
use cocalc::signature::{builtin_signature, finite_ops, validate_signature, Signature};

fn main() {
    let stlc = builtin_signature("stlc", &["0", "1"]).unwrap();
    for text in ["lam<0,1>", "app<0->1,1>"] {
        let op = parse_op(text, &stlc).unwrap();
        println!("{op} : {}", stlc.arity(&op).unwrap());
    }

    let forests = builtin_signature("typed-forests", &["0"]).unwrap();
    let op = parse_op("tup<[0->0,0],0>", &forests).unwrap();
    println!("{op} : {}", forests.arity(&op).unwrap());

    let sig: Signature = "sorts { v; t; } ops { lam : [v]t -> t; app : t, t -> t; var : v -> t; }"
        .parse()
        .unwrap();
    let ops = finite_ops(sig.as_finite().unwrap());
    println!("{}", validate_signature(&sig, &ops));
}
