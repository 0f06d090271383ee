//! Arbitrary-precision building blocks.

pub mod extrapolate;
pub mod hp;
pub mod laurent;
pub mod qseries;
pub mod quadrature;

pub use extrapolate::{extrapolate, Extrapolation};
pub use hp::{default_tolerance, pi, HPComplex, DEFAULT_PRECISION};
pub use laurent::{laurent_principal, Center, LaurentPart, TaylorSeries};
pub use qseries::{qs_combine, qs_eval, CombineMode, QSeries, TailCertificate, TailStream};
pub use quadrature::{contour_integrate, Contour, GaussianDecay, QuadratureOptions, Segment};
