//! Library side of the `btt` command: job files, the subcommands as
//! functions returning JSON, and the regression corpus of reference cases.

pub mod commands;
pub mod error;
pub mod job;
pub mod regression;
