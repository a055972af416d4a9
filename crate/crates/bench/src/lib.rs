//! Shared fixtures for the benchmarks.

use stochtaylor::paths::{sample_path, BrownianGrid};

pub const SEED: u64 = 0xbe7c;

pub fn path(level: u32) -> BrownianGrid {
    sample_path(SEED, 0, level, 1.0).expect("level within range")
}
