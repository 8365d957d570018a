//! Problem files, subcommands and report emission for the `orlicz-var` binary.

mod config;
mod run;
mod verify;

pub use config::{parse_config, Config, DataSpec, FluxSpec, FunctionSpec, ProbeSection, SolverSection, HEADER};
pub use run::{
    execute, load_config, parse_grid, s_grid, Cli, Command, Flags, Outcome, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION,
    UNIQUENESS_TOL,
};
pub use verify::{verify_suite, SuiteOptions};
