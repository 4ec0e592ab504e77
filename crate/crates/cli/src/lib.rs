//! Scenario files, built-in examples and the analyses behind the `qagree`
//! command.

pub mod catalog;
pub mod commands;
pub mod format;
