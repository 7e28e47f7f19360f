//! The monad law suite on random rational terms, per built-in signature.

use std::time::Instant;

use cocalc::laws::check_monad_laws;
use cocalc::signature::Signature;

fn main() {
    let sigs = [
        Signature::stlc(&["0"]),
        Signature::untyped_forests(),
        Signature::typed_forests(&["0"]),
    ];
    for sig in &sigs {
        let start = Instant::now();
        let report = check_monad_laws(sig, 42, 50, 8);
        println!("{} ({:.2?})", sig.name(), start.elapsed());
        print!("{report}");
    }
}
