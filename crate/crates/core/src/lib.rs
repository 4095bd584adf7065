//! Goldman-Turaev operations and the higher-genus Kashiwara-Vergne equations,
//! computed exactly over the rationals at a finite weight truncation.

pub mod error;
pub mod exactlin;
pub mod lin;
pub mod series;
pub mod text;

pub mod tensor_algebra;
pub mod cyclic_words;
pub mod lie;
pub mod derivations;
pub mod group_ring;
pub mod divergence;
pub mod gt_structures;
pub mod kv_suite;
pub mod random;

pub use error::{GtkvError, Result};
pub use exactlin::Rational;
