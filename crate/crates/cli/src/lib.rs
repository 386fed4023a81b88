//! Configuration-driven experiment runner for near-homomorphism averaging.

pub mod commands;
pub mod config;
pub mod output;
