//! Geodesic-guided contrastive learning and Shapley-interaction alignment for
//! moment/query embeddings.
//!
//! The crate is `no_std` with `alloc`. File formats and the CLI, along with
//! wall-clock timing, live in the `g2l` companion crate.
//!
//! - [`numcore`]: matrices, softmax, seeded random streams, finite differences
//! - [`geodesic`]: K-NN moment graph and Dijkstra geodesics
//! - [`game`]: Shapley values, interactions, the ψ alignment game
//! - [`losses`]: contrastive, geodesic-guided, interaction-alignment and
//!   grounding losses with analytic gradients
//! - [`synthdata`]: synthetic moment/query datasets
//! - [`trainer`]: toy dual encoder, optimizers, metrics
#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod error;
pub mod game;
pub mod geodesic;
pub mod losses;
pub mod numcore;
pub mod synthdata;
pub mod trainer;

pub use error::{Error, Result};
