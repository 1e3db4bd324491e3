//! Online Gaussian-process hand-motion prediction and robot target-selection
//! strategies for encountered-type haptics.

pub mod gp;
pub mod predictor;
pub mod scene;
pub mod strategies;
pub mod trajgen;
pub mod simulator;
pub mod harness;
