//! Counter-based substream layout for reproducible parallel simulation.
//!
//! Every random quantity in a simulation is drawn from a dedicated stream
//! keyed by `(seed, path index, purpose)`. Streams are mutually independent,
//! so adding paths, running paths concurrently, or skipping a purpose
//! entirely (e.g. no jumps) never perturbs the draws of another stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Jump-size streams are additionally keyed by step index
/// so that raising the jump count in one step never realigns the sizes
/// drawn in another (required for common-random-numbers monotonicity).
pub mod purpose {
    pub const DIFFUSION: u64 = 0;
    pub const JUMP_COUNT_UP: u64 = 1;
    pub const JUMP_COUNT_DOWN: u64 = 2;
    pub const FLAT: u64 = 3;

    const SIZE_UP_BASE: u64 = 1 << 32;
    const SIZE_DOWN_BASE: u64 = 1 << 33;

    pub fn jump_size_up(step: usize) -> u64 {
        SIZE_UP_BASE | step as u64
    }

    pub fn jump_size_down(step: usize) -> u64 {
        SIZE_DOWN_BASE | step as u64
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic stream for one `(seed, path, purpose)` triple.
pub fn substream(seed: u64, path: u64, purpose: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed);
    state = splitmix64(state ^ splitmix64(path.wrapping_mul(0xa24b_aed4_963e_e407)));
    state = splitmix64(state ^ splitmix64(purpose.wrapping_mul(0x9fb2_1c65_1e98_df25)));
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Poisson draw by CDF inversion from a single uniform.
///
/// One uniform is consumed regardless of `mean`, and for a fixed uniform the
/// result is nondecreasing in `mean`. Both properties are what make
/// common-random-numbers comparisons across jump-arrival rates exact.
pub fn poisson_inversion(u: f64, mean: f64) -> u64 {
    debug_assert!(mean >= 0.0);
    if mean == 0.0 {
        return 0;
    }
    if mean > 500.0 {
        // e^{-mean} underflows; normal approximation, still monotone in mean
        // for any |z| < 2 sqrt(mean).
        let z = inverse_normal_cdf(u);
        let x = mean + mean.sqrt() * z;
        return x.round().max(0.0) as u64;
    }
    let mut k = 0u64;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    while u > cdf && k < 100_000 {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
    }
    k
}

/// Acklam's rational approximation to the standard normal quantile.
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
