//! Forecasting per-period counts from an entity-by-period matrix with a
//! hierarchical "on-stage window" model.
//!
//! Each entity is active during a window `|t - beta| < tau` and, while active,
//! produces `Poisson(lambda)` counts per period. The per-entity parameters
//! share normal population distributions, and the whole model is fit by a
//! Gibbs sampler whose non-conjugate steps draw from a gridded approximation
//! of the full conditional.
//!
//! ```no_run
//! use povcast::{data, gibbs::{run_chain, ChainConfig}, samples::Horizon};
//!
//! let smoothed = data::table1().smooth_by_column_sums(3, 4)?;
//! let samples = run_chain(&smoothed, &ChainConfig::default())?;
//! let jon = samples.entity_index("Jon").unwrap();
//! let draws = samples.predictions(Horizon::Next, jon);
//! # Ok::<(), povcast::Error>(())
//! ```

pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod gibbs;
pub mod model;
pub mod plot;
pub mod rng;
pub mod samples;
pub mod special;

pub use data::{load_matrix, PovMatrix, SmoothedMatrix};
pub use error::{Error, Result};
pub use gibbs::{run_chain, ChainConfig};
pub use model::{CharacterLatents, Hyperparams, ModelConfig};
pub use rng::RngState;
pub use samples::{Horizon, PosteriorSamples};
