//! Uniformly distributed sequences of points and partitions, with exact
//! discrepancy computation.
//!
//! * [`sequences`]: van der Corput, Halton, Hammersley and Kronecker points.
//! * [`discrepancy`]: exact star/extreme discrepancy in 1-D, star discrepancy up to 3-D.
//! * [`refine`]: Kakutani and ρ-refinements of `[0,1]`.
//! * [`khodak`]: Khodak trees, rational relations and asymptotic constants.
//! * [`fractal`]: IFS attractors, van der Corput points on fractals, elementary discrepancy.
//! * [`qmc`]: quasi-Monte Carlo integration and random reordering of partitions.

pub mod discrepancy;
pub mod error;
pub mod fractal;
pub mod khodak;
pub mod poly;
pub mod probs;
pub mod qmc;
pub mod refine;
pub mod sequences;

pub use error::{Error, Result};
