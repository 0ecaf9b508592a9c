//! Locality-sensitive hash families with closed-form collision probabilities,
//! and dynamic bucket tables keyed by hash value.

mod family;
mod function;
mod table;

pub use family::{collision_probability, FamilyKind, HashFamily, P_MIN};
pub use function::{hash_point, sample_function, BucketKey, HashFunction};
pub use table::{build_table, HashTable};
