//! Joint bundling, assignment and compensation pricing for crowdsourced
//! last-mile delivery.
//!
//! Tasks are grouped into ordered bundles and offered to occasional drivers
//! whose willingness to accept follows a logistic model in detour, bundle
//! size and compensation. For a fixed driver and bundle the compensation that
//! maximizes expected savings has a closed form in the Lambert W function, so
//! the remaining problem is a set packing over (driver, bundle) columns. It is
//! solved by column generation with a dedicated labeling pricer, a restricted
//! MILP, and reduced-cost enumeration to close the gap.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, wall-clock time and
//! the command line live in the `crowdship` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bench;
pub mod clock;
pub mod geometry;
pub mod lpsolve;
pub mod model;
pub mod oracle;
pub mod orchestrator;
pub mod pricing;
pub mod probability;
pub mod sequential;
pub mod taskset;

mod math;

pub use clock::{Clock, Deadline, NoClock};
pub use geometry::Point;
pub use model::{
    Bundle, DepotSpec, DriverSpec, ExtraPredictor, Instance, ModelError, Offer, Solution,
    SolveStatus, TaskSpec, ValidationReport, Violation,
};
pub use orchestrator::{run_variant, RunReport, Solver, Variant, VariantConfig};
pub use probability::{BehaviorCoefficients, PredictorVector};
