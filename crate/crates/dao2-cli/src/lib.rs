//! Library surface of the command-line tool: command implementations,
//! timing helpers, and renderers, callable directly from tests.

pub mod commands;
pub mod output;
pub mod timing;

/// Environment variable consulted for the default seed.
pub const SEED_ENV: &str = "DAO2_SEED";

/// Seed resolution: explicit flag, then environment, then zero.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    if let Some(s) = flag {
        return s;
    }
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}
