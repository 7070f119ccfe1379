//! Orthogonal and bi-orthogonal non-negative matrix factorization.
//!
//! Three solver families minimize `½‖R − GH‖²_F` subject to `G, H ≥ 0` and
//! (approximate) orthonormality of the columns of `G` and optionally the rows
//! of `H`:
//!
//! - [`solver::ding`]: multiplicative updates,
//! - [`solver::mirzal`]: modified additive updates with δ-growth safeguarding,
//! - [`solver::pg`]: block coordinate descent with projected gradient /
//!   Armijo block solves on the penalized objective.
//!
//! [`datagen`] builds synthetic instances with known optimum and
//! [`harness`] runs parameter sweeps and writes CSV reports.
//!
//! ```
//! use orthofact::datagen::{generate_instance, InstanceKind};
//! use orthofact::model::{Orthogonality, ProblemSpec};
//! use orthofact::rng::random_init;
//! use orthofact::solver::{solve_pg, PgConfig};
//!
//! # fn main() -> orthofact::Result<()> {
//! let t = generate_instance(50, 10, InstanceKind::Bion, 1, 7)?;
//! let spec = ProblemSpec::new(t.r, 10, Orthogonality::Bi, 1.0, 1.0)?;
//! let report = solve_pg(&spec, &PgConfig::bion(), random_init(50, 10, 50, 11))?;
//! assert!(report.final_rse() < 1.0);
//! # Ok(())
//! # }
//! ```

pub mod datagen;
pub mod error;
pub mod harness;
pub mod model;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    frobenius_norm, grad_g, grad_h, infeas_bi, infeas_uni, penalized_objective, rse, FactorPair, NonNegMatrix,
    Orthogonality, ProblemSpec,
};
pub use solver::{SolveReport, Termination, TracePoint};
