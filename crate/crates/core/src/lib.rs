//! Content placement for cache-based video-on-demand systems.
//!
//! A set of caches serves peers that each request one video and connect to a
//! few random caches. This crate computes single-video service curves under
//! four storage/placement policies (fixed or adaptive, whole or fractional),
//! allocates copies across a catalog, and evaluates the rate served by the
//! caches on a realized graph.

pub mod adaptive;
pub mod allocate;
pub mod analytic;
pub mod error;
pub mod experiment;
pub mod io;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
