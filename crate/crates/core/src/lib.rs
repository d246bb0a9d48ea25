//! Multi-task learning on financial time-series windows with a ResNeXt-style
//! grouped-convolution trunk and hand-written backpropagation.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
