//! Finite-model workbench for preferential semantics, abstract size,
//! semantic interpolation and distance-based revision.
//!
//! Every law is checked by exhaustive enumeration over small universes.
//! Point sets are packed into `u64` masks, so carriers hold at most 64 points.

pub mod bits;
pub mod consequence;
pub mod interp;
pub mod lang;
pub mod mulsize;
pub mod pref;
pub mod revision;
pub mod size;
pub mod verdict;

pub use verdict::Verdict;
