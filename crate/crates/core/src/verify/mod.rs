//! Seeded self-check suites: each check runs a number of random instances
//! and reports the worst error against a pinned tolerance. Deterministic
//! given (suite, seed, trials); trial fan-out across threads preserves the
//! per-trial seeds and the report order.

pub mod gauge_series;

pub use suites::*;
mod suites;
