//! Consistent cold-start initialization of LSTM internal states through
//! manifold learning.
//!
//! The pipeline, bottom-up:
//!
//! - [`dynamics`]: Brusselator trajectories, sampled and split into datasets.
//! - [`lstm`]: a four-cell LSTM with a linear decoder, trained with teacher
//!   forcing and full backpropagation through time.
//! - [`manifold`]: diffusion maps on observation windows plus Nyström
//!   restriction of unseen windows.
//! - [`harmonics`]: geometric harmonics on the diffusion coordinates, used to
//!   map a short window to mature `(c, h)` states or to impute the hidden
//!   variable.
//! - [`latent`]: a feed-forward one-step map on the diffusion coordinates.
//! - [`harness`]: metrics and experiment drivers that tie the pieces together.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the CLI live
//! in the companion `coldstart` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adam;
pub mod dynamics;
mod error;
pub mod harmonics;
pub mod harness;
pub mod latent;
pub mod linalg;
pub mod lstm;
pub mod manifold;
pub mod rng;

pub use error::{Error, Result};
