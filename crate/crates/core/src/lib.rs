//! Plaque mesh extraction from labeled vessel-wall volumes.
// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod mesh;
pub mod plaque;
pub mod unfold;
pub mod volume;
