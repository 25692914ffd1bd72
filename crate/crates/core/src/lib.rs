pub mod error;
pub mod freq;
pub mod iqc;
pub mod linalg;
pub mod output;
pub mod rates;
pub mod registry;
pub mod sim;
pub mod verify;

pub use nalgebra;

pub use error::{Error, Result};
pub use rates::{FunctionClass, ProblemSpec, RateRegime, RegimeKind};
