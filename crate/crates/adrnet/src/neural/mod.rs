//! Minimal neural toolkit for a fixed computation graph: dense matrices,
//! forward/backward op pairs, Adam, seeded initialisation, and a
//! finite-difference gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod init;
pub mod matrix;
pub mod ops;

pub use adam::{adam_step, AdamConfig, ParamBlock};
pub use gradcheck::{grad_check, rel_error, GradCheckReport, GradCheckTarget};
pub use init::{init_params, InitScheme};
pub use matrix::Matrix;
