//! Independent random streams derived from one master seed.
//!
//! Each concern gets its own ChaCha8 stream selected by a fixed label, so
//! drawing more numbers in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const ENV: &str = "env";
pub const EXPLORE: &str = "explore";
pub const TARGET_NOISE: &str = "target-noise";
pub const BUFFER: &str = "buffer";
pub const INIT: &str = "init";
pub const PROXY: &str = "proxy";
pub const EVAL: &str = "eval";
pub const GAP: &str = "gap";
pub const DRIFT: &str = "drift";

/// 64-bit FNV-1a; stable across platforms and releases.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn stream(master: u64, label: &str) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(label_hash(label));
    rng
}
