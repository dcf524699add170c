//! Low-autocorrelation binary sequence search.
//!
//! A pool of self-avoiding walks over skew-symmetric sequences produces
//! candidates below an energy sieve; a priority-queue search with rotations
//! and length operators then refines them without the symmetry restriction.

pub mod bloom;
pub mod candidate;
pub mod construct;
pub mod error;
pub mod experiment;
pub mod hashing;
pub mod hex;
pub mod oracle;
pub mod pipeline;
pub mod pq;
pub mod records;
pub mod saw;
pub mod sequence;
pub mod skew;
pub mod stats;

pub use bloom::BloomFilter;
pub use candidate::{Candidate, Origin};
pub use error::{Error, Result};
pub use hex::{hex_decode, hex_encode};
pub use pipeline::{run_pipeline, RunConfig};
pub use pq::{refine, PqConfig};
pub use records::{verify, ResultRecord};
pub use saw::{run_saw_pool, SawConfig};
pub use sequence::{autocorrelation, merit_factor, BinarySequence, CorrelationState};
pub use skew::{expand_skew, SkewHalf};
