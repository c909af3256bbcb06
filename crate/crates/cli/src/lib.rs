//! Library side of the command-line tool.

pub mod generate;
