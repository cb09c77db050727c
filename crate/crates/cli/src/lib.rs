//! Library side of the `pqc` command-line tool: sweep configuration and one
//! function per subcommand, so the commands can be driven from tests.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_catalog, cmd_correlate, cmd_datasets, cmd_descriptors, cmd_sweep, cmd_verify_fixtures, CorrelateSource,
    DescriptorJob,
};
pub use config::SweepConfig;
