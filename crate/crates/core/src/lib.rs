//! Fiberwise spectral calculus for self-adjoint partially integral operators
//!
//! T f(ω, t) = ∫_S k(ω, t, s) f(ω, s) dm(s)
//!
//! acting on sampled sections of Ω × S. The operator decomposes into a
//! family of compact self-adjoint fiber operators T_ω, one per ω node; every
//! operation in this crate (projectors, functional calculus, spectra) is
//! evaluated fiber by fiber from a [`fiber::FiberDecomposition`].

pub mod calculus;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod expr;
pub mod fiber;
pub mod grid;
pub mod kernel;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
