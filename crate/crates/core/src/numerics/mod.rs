//! Extended-exponent arithmetic, circle sampling and polynomial roots.

pub mod circle;
pub mod poly;
pub mod xcomplex;

pub use circle::{sample_circle, winding_adaptive, winding_number, CircleSamples};
pub use xcomplex::{xc_arith, XComplex, XOp};
