//! Construction and verification of BCL triples `(E, U, P)` that realize a
//! prescribed defect operator `T = P⊥ − U P⊥ U*`, together with the
//! commuting isometry pairs they induce on a truncated Hardy space.

pub mod bclbuild;
pub mod bclinf;
pub mod error;
pub mod hardy;
pub mod json;
pub mod matcore;
pub mod random;
pub mod search;
pub mod spectrum;
pub mod twoproj;
pub mod verify;

pub use error::{BclError, Result};
pub use matcore::{ComplexMatrix, Tolerances, C64};
