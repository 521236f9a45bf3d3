//! Command-line front end for the barrier spectral toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod family;
pub mod output;
pub mod verify;
