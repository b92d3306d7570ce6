#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mesh;
pub mod refine;
pub mod topology;
pub mod sparse;
pub mod assembly;
pub mod elliptic;
pub mod parabolic;
pub mod analysis;
pub mod study;
pub mod bench;
