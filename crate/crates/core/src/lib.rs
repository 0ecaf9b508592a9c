//! Adaptive and dynamic hashing-based estimators for pairwise kernel sums
//! `μ(q) = (1/|X|)·Σ_{x∈X} w(x, q)`.
//!
//! - [`SingleHbe`]: one LSH family, `R` hash tables, median-of-means
//!   sub-queries and a geometric μ-schedule.
//! - [`MultiHbe`]: `G` families per repetition combined with
//!   collision-probability-squared weights.
//! - [`AdamHash`]: `L` independent multi-resolution estimators queried at the
//!   nearest point of an implicit ε₀-net, aggregated by the median, so that
//!   answers stay accurate for adaptively chosen queries.
//!
//! All structures support point insertion and deletion.

pub mod adam;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod hbe_multi;
pub mod hbe_single;
pub mod io;
pub mod kernel;
pub mod lsh;
pub mod oracle;
pub mod schedule;
pub mod seed;
pub mod variance;

pub use adam::{median_aggregate, AdamHash, AdamParams, NetQuantizer};
pub use dataset::{Dataset, Point, PointId};
pub use error::{Error, Result};
pub use hbe_multi::MultiHbe;
pub use hbe_single::SingleHbe;
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use lsh::{FamilyKind, HashFamily};
pub use oracle::pse_bruteforce;
pub use schedule::{Estimate, HbeParams, QuerySchedule, SamplingMode};
pub use variance::{variance_eval, VarianceProfile};
