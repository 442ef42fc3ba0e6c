//! Kalman filtering for linear systems on time scales.

pub mod kalman;
pub mod linalg;
pub mod linsys;
pub mod oracles;
pub mod owc;
pub mod timescale;
