//! Numerical geometry of generalized Lamé equations with Treibich–Verdier
//! potentials.

pub mod addition;
pub mod contour;
pub mod divisor;
pub mod elliptic;
pub mod error;
pub mod limits;
#[doc(hidden)]
pub mod oracle;
pub mod matching;
pub mod poly;
pub mod potential;
pub mod report;
pub mod even_solution;
pub mod verify;

pub use elliptic::{Torus, TorusPoint};
pub use error::{Error, Result};
pub use potential::{Family, FamilyKind, MultiIndex, PotentialSpec};
