use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const CHUNK: usize = 2048;

/// Sum of `f(0..n)` with a fixed chunking, so the result does not depend on
/// the number of worker threads.
pub(crate) fn det_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let n_chunks = n.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(n);
            let mut acc = 0.0;
            for i in c * CHUNK..end {
                acc += f(i);
            }
            acc
        })
        .collect();
    partial.iter().sum()
}

/// Seeded generator used for every stochastic initialization in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
pub(crate) fn test_rng(seed: u64) -> ChaCha8Rng {
    seeded_rng(seed)
}

/// Map an angle to `(−π, π]`; an input of exactly `−π` maps to `+π`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut y = x - two_pi * (x / two_pi).round();
    if y <= -PI {
        y += two_pi;
    } else if y > PI {
        y -= two_pi;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn det_sum_matches_serial() {
        let s = det_sum(10_000, |i| i as f64);
        assert_eq!(s, (0..10_000).map(|i| i as f64).sum::<f64>());
    }

    #[test]
    fn wrap_ties_go_to_plus_pi() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(0.25)).eq(&0.25));
    }
}
