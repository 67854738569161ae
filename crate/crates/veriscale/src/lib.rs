//! Files, clients, backends and the command-line tool around
//! `veriscale-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod llm;
pub mod mock;
pub mod remote;
pub mod runner;

pub use error::{Error, Result};
