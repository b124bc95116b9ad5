//! Shared numerical building blocks.

pub mod jet;
pub mod linalg;
pub mod quad;
pub mod rk;
pub mod special;
pub mod stats;
pub mod tridiag;
