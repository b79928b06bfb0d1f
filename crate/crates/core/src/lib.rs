//! Core numerics for the evolutionary Faddeev wave system.
//!
//! The crate evolves the radially symmetric system for the angle fields
//! (theta, phi) from short-pulse initial data and provides the exact
//! pointwise machinery (second-order jets, null frames, null forms,
//! vector-field currents) used to verify the algebraic structure of the
//! equations without finite-difference error.
//!
//! Everything here is `no_std`-compatible (`alloc` required); IO, the CLI
//! and file formats live in the companion `faddeev-lab` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagnose;
pub mod error;
pub mod evolve;
pub mod faddeev;
pub mod jet;
pub mod math;
pub mod nullframe;
pub mod nullforms;
pub mod pulse;
pub mod rjet;

pub use error::Error;
