//! Zero-sum linear-quadratic pursuit games for multi-interceptor defense:
//! engagement models, finite-horizon saddle-point gains, emphasis-weighted
//! objectives, reward search and max-min group-to-threat assignment.

pub mod assignment;
pub mod dynamics;
pub mod error;
pub mod lqdg;
pub mod pipeline;
pub mod rollout;
pub mod scenario;
pub mod weights;

pub use error::{Error, Result};
