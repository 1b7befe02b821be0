//! Workload tooling: deterministic data generation, bundled fixtures, and
//! seeded random query production.

pub mod fixtures;
pub mod gen;
pub mod random;

pub use fixtures::{bundled_fixtures, fixture, Fixture, FixtureQuery, FIXTURE_NAMES};
pub use gen::{generate, ColGen, ColKind, GenSpec, TableGen};
pub use random::{random_queries, RandomQueryOptions};
