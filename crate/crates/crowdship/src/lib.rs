//! File formats, wall-clock time, threaded pricing and the command line for
//! [`crowdship_core`].

pub mod cli;
pub mod format;
pub mod report;
pub mod runtime;

pub use format::{load_instance, load_solution, save_instance, save_solution, FormatError};
pub use report::{load_report, save_report};
pub use runtime::{ThreadedExecutor, WallClock};
