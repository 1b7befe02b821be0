//! A query-planning laboratory for Bloom-filter-aware bottom-up cost-based
//! optimization, with baseline planners and an in-memory executor to compare
//! them on generated data.

pub mod bloom;
pub mod catalog;
pub mod cli;
pub mod cost;
pub mod error;
pub mod estimator;
pub mod frontend;
pub mod plan;
pub mod executor;
pub mod planner;
pub mod report;
pub mod workload;

pub use error::{Error, Result};
