pub mod cg;
pub mod config;
pub mod outer;
pub mod rates;
pub mod trace;

pub use cg::{cg_solve, CgResult};
pub use config::SolverConfig;
pub use outer::{fncr_ls, gd_ls, newton_cg_ls, solve, SolverKind};
pub use rates::{local_radius, rate_checks, InequalityCheck, RateReport};
pub use trace::{Status, StepInfo, Trace, TraceRecord};
