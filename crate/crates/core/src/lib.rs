//! Block-coordinate regularization by denoising (BC-RED) for linear inverse
//! problems `y = Ax + e`.
//!
//! The building blocks are:
//! - [`blocks`]: partitions of the signal into coordinate blocks,
//! - [`forward`]: measurement operators with block access and Lipschitz
//!   estimates,
//! - [`denoise`]: denoisers and block-nonexpansiveness certificates,
//! - [`moreau`]: proximal maps and Moreau envelopes,
//! - [`solver`]: BC-RED, full RED and proximal gradient runs,
//! - [`experiment`] and [`checks`]: config-driven runs and property checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocks;
pub mod checks;
pub mod config;
pub mod denoise;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod genmat;
pub mod image;
pub mod linalg;
pub mod metrics;
pub mod moreau;
pub mod phantom;
pub mod problems;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
