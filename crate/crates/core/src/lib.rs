//! Far-field asymptotics of 2D incompressible Euler flow.
//!
//! The crate evolves 2D Euler flow from rapidly decaying data, inverts the
//! Laplacian with extraction of the far-field expansion (`d = 2, 3`), and
//! measures how the coefficients `a_k(theta, t) / r^k` of the velocity
//! emerge in time.

pub mod asymptotics;
pub mod datagen;
pub mod error;
pub mod euler2d;
pub mod fields;
pub mod harmonics;
pub mod poisson;
pub mod spectral;

pub use error::{Error, Result};
