//! The four subcommands. Each writes its tables into the output directory,
//! returns whether every declared tolerance held, and leaves a
//! `metadata.json` describing the run.

pub mod asymmetry;
pub mod geometry;
pub mod kms;
pub mod oracle;

/// What a command run produced, beyond its files.
#[derive(Debug)]
pub struct CommandOutcome {
    /// True when every declared tolerance held.
    pub passed: bool,
    pub warnings: Vec<String>,
}
