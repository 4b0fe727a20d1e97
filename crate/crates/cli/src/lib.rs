//! Experiment harness: config files, training runs, front evaluation,
//! hyperparameter sweeps and runtime comparisons.

pub mod commands;
pub mod config;

pub use config::ConfigError;

/// Process exit status for an error: 2 for configuration or argument
/// problems, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.downcast_ref::<ConfigError>().is_some()) {
        2
    } else {
        1
    }
}
