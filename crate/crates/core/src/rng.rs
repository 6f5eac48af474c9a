//! Counter-based deterministic random numbers.
//!
//! Disorder is addressed, not streamed: the draw for channel `i` of cell `n`
//! under master seed `s` is a pure function of `(s, n, i)`. Any cell can be
//! regenerated independently and in any order, so parallel workers produce
//! identical words. The mixing function is the splitmix64 finalizer applied
//! to a combination of the three inputs; the exact sequence of operations
//! below is the reproducibility contract.
//!
//! Contract, in order:
//!   1. `h = mix64(s ^ GOLDEN)`
//!   2. `h = mix64(h ^ (n as u64 wrapped))`
//!   3. `h = mix64(h ^ (i + 1))`
//!   4. uniform in [0,1): `(h >> 11) * 2^-53`

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic 64-bit value for (seed, cell index, channel index).
#[inline]
pub fn cell_channel_bits(seed: u64, cell: i64, channel: u64) -> u64 {
    let h = mix64(seed ^ GOLDEN);
    let h = mix64(h ^ (cell as u64));
    mix64(h ^ channel.wrapping_add(1))
}

/// Uniform draw in [0, 1) from 64 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derived seed for an independent sub-stream (samples, grid points, ...).
#[inline]
pub fn substream(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN.rotate_left(17)) ^ index)
}
