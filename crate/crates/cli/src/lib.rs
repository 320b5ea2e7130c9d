//! Library half of the `braindecode` command-line tool: configuration
//! parsing/merging/echoing and one module per subcommand. The binary in
//! `main.rs` only parses flags and dispatches here, so integration tests
//! can drive subcommands — and read the desk-scale defaults — without
//! spawning a process.

pub mod commands;
pub mod config;
