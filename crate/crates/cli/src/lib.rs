//! Configuration, subcommands and the acceptance suite behind the
//! `newton-soliton` binary.

pub mod acceptance;
pub mod cache;
pub mod commands;
pub mod config;
pub mod output;
