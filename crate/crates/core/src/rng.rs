//! Keyed random streams.
//!
//! Every stochastic decision in the simulator draws from a ChaCha stream keyed
//! by the world seed, a domain tag and up to two coordinates (day, hour,
//! individual, ...). Two runs that differ only in one individual's action
//! therefore see identical draws for every other decision, which is what the
//! common-random-numbers comparisons rely on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Build = 1,
    Mobility = 2,
    Transmission = 3,
    Policy = 4,
    Training = 5,
    Init = 6,
}

pub fn stream(seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
