//! Fusion of visual and audio watermark integrity scores for tamper
//! detection, localization and attribution under deployment distortions.

pub mod align;
pub mod attribution;
pub mod calibration;
pub mod error;
pub mod experiments;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod simulate;

pub use error::{Error, Result};
pub use par::Execution;
