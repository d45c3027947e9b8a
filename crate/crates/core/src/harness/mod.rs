//! Experiment plumbing: config parsing, problem construction, CSV traces and
//! the seeded property suites.

pub mod csv;
pub mod run;
pub mod spec;
pub mod suites;

pub use csv::{emit_csv, parse_csv, without_wall_ns, write_csv};
pub use run::{compute_f_star, init_x0, run_experiment, FStar, Problem, RunOutcome};
pub use spec::{parse_config, ExperimentSpec, FStarSpec, InitScheme, ProblemSpec, RawConfig};
pub use suites::{run_suite, Fixture, SuiteReport};
