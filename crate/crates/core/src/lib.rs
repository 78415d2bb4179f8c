//! Policy models over quantifier-free SMT-LIB, and solver-backed
//! verification of natural-language claims against them.

pub mod eval;
pub mod formalizer;
pub mod logic;
pub mod policy;
pub mod solver;
pub mod translator;
pub mod verifier;
pub mod vetting;
