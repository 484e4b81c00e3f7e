//! Small numeric helpers shared across modules.

use rand_pcg::Pcg64;

/// Pairwise (cascade) summation. Fixed reduction order for a given input
/// order, with better rounding behavior than a left fold on long arrays.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// SplitMix64 finalizer; decorrelates consecutive substream indices.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Counter-based substream RNG: the stream for (seed, index) is independent
/// of how many other substreams exist, so resampling loops can be sharded
/// across any worker count without changing results.
pub fn substream_rng(seed: u64, index: u64) -> Pcg64 {
    use rand::SeedableRng;
    let hi = splitmix64(seed ^ 0xa076_1d64_78bd_642f);
    let lo = splitmix64(hi ^ index);
    let mut state = [0u8; 32];
    state[..8].copy_from_slice(&hi.to_le_bytes());
    state[8..16].copy_from_slice(&lo.to_le_bytes());
    state[16..24].copy_from_slice(&splitmix64(lo).to_le_bytes());
    state[24..].copy_from_slice(&splitmix64(lo ^ 0x5851_f42d_4c95_7f2d).to_le_bytes());
    Pcg64::from_seed(state)
}

/// Apply `f` to every item, sharded across `workers` threads in contiguous
/// chunks. Output order matches input order, so results are identical for
/// every worker count.
pub fn parallel_map<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk_size = items.len().div_ceil(workers);
    let chunks: Vec<Vec<U>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk_size)
            .map(|chunk| scope.spawn(|| chunk.iter().map(&f).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    chunks.into_iter().flatten().collect()
}

/// Numerically stable `-ln σ(z)` via softplus: `softplus(-z)`.
pub fn neg_log_sigmoid(z: f64) -> f64 {
    softplus(-z)
}

/// `ln(1 + e^x)` without overflow for large `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, stable on both tails.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
