//! Exact arithmetic for the Carlitz module over A = 𝔽_q[T]: the π-adic
//! completion, the cyclotomic torsion tower K_n = K(ω_n), Coleman's
//! trace/norm operators on truncated Laurent series, and both sides of the
//! explicit reciprocity law (the analytic pairing through the module
//! logarithm and the Kummer pairing through local norm symbols).

pub mod coleman;
pub mod error;
pub mod field;
pub mod lambda;
pub mod padic;
pub mod phi;
pub mod poly;
pub mod rat;
pub mod series;
pub mod skew;
pub mod tower;
pub mod xpoly;

pub use error::{Error, Result};
