//! Exact-arithmetic toolkit for the Lozi family: fixed-point
//! enumeration, covering and trapping certificates, perturbation
//! bookkeeping, and numerical exploration utilities.

pub mod cli;
pub mod covering;
pub mod epspoly;
pub mod error;
pub mod fixed_points;
pub mod geometry;
pub mod map;
pub mod perturbation;
pub mod rational;
pub mod report;
pub mod simulation;
pub mod svg;
pub mod trapping;

pub use error::{Error, Result};
pub use rational::{rat, Rational};
