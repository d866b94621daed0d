//! Edge-classifying interaction-network inference in Q7.7 fixed point,
//! detector-geometry graph partitioning, processing-element allocation, and
//! a cycle-approximate dataflow simulator for the accelerator pipeline.

pub mod alloc;
pub mod cli;
pub mod dfsim;
pub mod fxp;
pub mod geom;
pub mod inet;
pub mod io;
pub mod matrix;
pub mod synth;

pub use fxp::Fx;
pub use geom::{HitGraph, LayerId, Partition};
pub use inet::{InferConfig, Mode, ModelParams};
pub use matrix::Matrix;
