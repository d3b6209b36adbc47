//! Statistical watermarking as hypothesis testing with coupled rejection regions.
//!
//! A watermarking scheme is a joint law over an output `X` and a rejection
//! region `R`. The detector sees `R` (through a shared key) and flags `X` when
//! `X ∈ R`. This crate builds the optimal couplings and the machinery to check
//! them:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`prob`] | finite distributions, entropy and its inverse, TV distance, exact binomials |
//! | [`ump`] | the uniformly most powerful coupling, exact Type I/II errors, LP oracle |
//! | [`rates`] | Type II error on i.i.d. products, rate bounds, the two-point hard instance |
//! | [`agnostic`] | minimax model-agnostic scheme, max-flow coupling, Strassen checker |
//! | [`robust`] | perturbation graphs, shrinkage, robust LP and the dense simplex solver |
//! | [`schemes`] | three published schemes plus the UMP baseline over a toy Markov LM |
//! | [`harness`] | experiment registry, config parsing, CSV and SVG output |

pub mod agnostic;
pub mod error;
pub mod harness;
pub mod prob;
pub mod rates;
pub mod rng;
pub mod robust;
pub mod scalar;
pub mod schemes;
pub mod ump;

pub use error::{Error, Result};
pub use prob::{DiscreteDist, ExactRational};
pub use ump::{Coupling, Region};
