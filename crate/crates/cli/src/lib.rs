//! Command-line front end: argument parsing, verification reports and
//! CSV/JSON/SVG artifacts.

pub mod args;
pub mod commands;
pub mod output;
pub mod svg;

pub use commands::{main_with_args, run, Failure};
