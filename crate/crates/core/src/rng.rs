use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const SIMULATION: u64 = 0x5349_4d55_4c41_5445;
pub(crate) const BOOTSTRAP: u64 = 0x424f_4f54_5354_5250;

/// Independent ChaCha stream for `(seed, domain, index)`.
///
/// The key carries the master seed and a domain tag, the stream id carries
/// the unit or replicate index, so every stream is reachable without
/// advancing any other and parallel consumers agree with serial ones.
pub(crate) fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
