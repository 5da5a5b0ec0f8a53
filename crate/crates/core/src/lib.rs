//! Numerical laboratory for critically coupled abelian Higgs vortices.

pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod moduli;
pub mod snapshot;
pub mod dynamics;
pub mod experiment;
pub mod solver;

pub use error::{Error, Result};
pub use field::{EnergyBreakdown, FieldConfig, GaugeFunction};
pub use grid::{DomainKind, Grid2D};
