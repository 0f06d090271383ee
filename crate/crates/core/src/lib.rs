pub mod error;
pub mod exact_sums;
pub mod numerics;
pub mod qdifference;
pub mod report;
pub mod resurgence;
pub mod seifert_core;
pub mod wrt_qseries;

pub use error::{Error, Result};
pub use report::{ReportRow, VerificationReport};
pub use seifert_core::{HalfInt, SeifertLoop};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
