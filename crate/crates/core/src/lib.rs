//! Possibly infinite, well-scoped syntax with binders over multi-sorted
//! binding signatures.

pub mod bisim;
pub mod cli;
pub mod context;
pub mod coterm;
pub mod eqm;
pub mod eqs;
pub mod inhabit;
pub mod laws;
pub mod lexer;
pub mod random;
pub mod signature;
pub mod sort;
pub mod subst;
pub mod system;
