//! Analysis toolkit for two-dimensional skip-free reflecting random walks.
//!
//! A reflecting random walk on the nonnegative quadrant is given by four step
//! distributions, one per region (origin, the two axes, the interior). This
//! crate decides whether such a walk is *structure-reversible*, meaning its
//! time reversal under the stationary distribution is again a reflecting
//! random walk. When it is, the stationary distribution comes out in closed
//! form with geometric decay in each coordinate, and the reversed walk's step
//! distributions are computed explicitly.
//!
//! The pipeline:
//!
//! 1. [`model`] parses and validates a walk and checks the two
//!    irreducibility conditions.
//! 2. [`reversibility`] computes the proportionality constants tying each
//!    boundary face to the interior and decides the ratio conditions.
//! 3. [`geometry`] evaluates the four generating-function boundaries and
//!    solves for the decay rates (eta1, eta2).
//! 4. [`stationary`] assembles the closed-form stationary distribution,
//!    verifies the balance equations, and classifies product form.
//! 5. [`reversal`] builds the time-reversed walk and certifies it is again a
//!    reflecting random walk; it also handles the singular regime where the
//!    interior moves along one axis only.
//! 6. [`oracle`] provides independent numerical ground truth (a censored-grid
//!    stationary solver and a seeded simulator) used to cross-check every
//!    closed-form result.
//! 7. [`presets`] constructs the discrete-time Jackson network family and the
//!    frozen published instances.
//! 8. [`analysis`] ties the steps into one report with a final verdict.

pub mod analysis;
pub mod geometry;
pub mod model;
pub mod oracle;
pub mod presets;
pub mod reversal;
pub mod reversibility;
pub mod stationary;

#[cfg(test)]
pub(crate) mod testutil;

pub use analysis::{run_analysis, AnalysisOptions, AnalysisReport, Verdict};
pub use model::{
    parse_model, serialize_model, validate, Face, FaceDistribution, ModelError,
    ReflectingWalkModel, Step, TriState, ValidationReport,
};
pub use reversibility::{ConditionReport, ConditionStatus, ReversibilityConstants};
pub use stationary::StationaryDistribution;
