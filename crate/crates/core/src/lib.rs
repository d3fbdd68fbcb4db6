//! Supersingular ℓ-isogeny graphs over F_{p²}, their joint Hecke spectra,
//! and classical simulations of two quantum curve samplers.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, caching and the
//! command-line front end live in the `ssgraph` crate.

#![no_std]

extern crate alloc;

pub mod action;
pub mod arith;
mod error;
pub mod graph;
pub mod linalg;
pub mod primes;
pub mod spectra;
pub mod walksim;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;
