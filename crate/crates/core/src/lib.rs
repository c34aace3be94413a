//! Symmetric power period polynomials of modular forms: exact coefficients,
//! certified critical L-values, the associated polynomials, and certificates
//! that their zeros lie on the unit circle.

pub mod arith;
pub mod circlezero;
pub mod complex;
pub mod formsrc;
pub mod lvalues;
pub mod perpoly;
pub mod poly;
pub mod scalar;
pub mod special;
pub mod symcoef;

pub use complex::Complex;
pub use poly::Polynomial;
pub use scalar::{ErrBound, Field, Mp, Real};

pub type MpComplex = Complex<Mp>;
pub type MpPoly = Polynomial<Mp>;
pub type PolyF64 = Polynomial<f64>;
pub type RationalPoly = Polynomial<rug::Rational>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
