//! Numerics for probabilistic frames on R^d.
//!
//! A probability measure with finite second moment is a *probabilistic
//! frame* when its support spans R^d, and *tight* when its frame operator is
//! a multiple of the identity. This crate measures how far a finitely
//! supported measure is from tightness and provides two descent schemes that
//! drive it there through Wasserstein space:
//!
//! * [`measure`]: validated discrete measures, frame operators, diagnostics;
//! * [`potentials`]: frame potential, tightness potential and operator,
//!   gradients, p-frame potentials with their sharp bounds;
//! * [`transport`]: exact and entropic discrete optimal transport;
//! * [`flow`]: explicit Euler descent and the minimizing-movement (JKO)
//!   scheme, with trajectory recording and energy accounting;
//! * [`verify`]: numerical checks of the analytic guarantees, with
//!   replayable witnesses;
//! * [`generate`]: seeded instance generators;
//! * [`io`]: JSON and CSV formats for measures, plans, and trajectories.
//!
//! # Example
//!
//! ```
//! use framescope::DiscreteMeasure;
//!
//! // Uniform weights on an orthonormal basis form a tight measure.
//! let mu = DiscreteMeasure::new(
//!     vec![vec![1.0, 0.0], vec![0.0, 1.0]],
//!     vec![0.5, 0.5],
//! )?;
//! let diag = mu.diagnostics_default();
//! assert!(diag.is_tight);
//! assert!(framescope::potentials::tightness_potential(&mu).value.abs() < 1e-12);
//! # Ok::<(), framescope::Error>(())
//! ```

#![forbid(unsafe_code)]

pub mod error;
pub mod flow;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod potentials;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use generate::{GeneratorKind, GeneratorSpec};
pub use flow::{
    energy_report, jko_step, run_explicit, run_jko, EnergyReport, FlowConfig, FlowTrajectory,
    InnerSolverConfig, JkoStep, OtMethod, PotentialKind, Scheme, Termination,
};
pub use measure::{DiscreteMeasure, FrameDiagnostics, SymmetricOperator};
pub use potentials::{GradientField, PotentialReport};
pub use transport::{PlanMethod, TransportPlan};
pub use verify::{replay, run_suite, CheckResult};
