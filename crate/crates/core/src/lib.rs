//! Spectral analysis of translation-invariant free-fermion chains: decides
//! whether a half-chain ground-state sector hosts universal embezzlement
//! (type III₁ via block-Toeplitz essential spectra) and quantifies the
//! finite-size embezzlement errors ε(n, d).
//!
//! The pipeline: a [`hopping::HoppingModel`] defines ĥ(k); [`spectral`]
//! builds the positive spectral projector symbol p̂(k) and locates its
//! jumps; [`toeplitz`] turns the symbol into finite sections of the
//! half-chain correlation operator and runs the Hilbert–Schmidt tail test;
//! [`essspec`] converts jumps into the essential spectrum of q*pq and
//! classifies the factor type; [`finchain`] builds open chains and their
//! half-chain mode spectra; [`quasifree`] expands mode spectra into
//! many-body spectra and entropies; [`embezzle`] measures how well those
//! spectra embezzle finite-dimensional targets.

pub mod embezzle;
pub mod error;
pub mod essspec;
pub mod finchain;
pub mod fit;
pub mod hopping;
pub mod linalg;
pub mod quasifree;
pub mod spectral;
pub mod toeplitz;

pub use error::{Error, Result};
