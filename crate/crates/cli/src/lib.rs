//! Library surface of the `stbcid` command-line tool: the IQ capture file
//! format and the JSON run configuration. The binary in `main.rs` wires
//! these into the subcommands.

pub mod capture;
pub mod config;
