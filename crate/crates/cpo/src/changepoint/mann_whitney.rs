//! Mann-Whitney rank statistics over all split points of a sequence.
//!
//! For a split at `k` of `n` observations, the non-normalized statistic is
//! the rank-sum form `U_k = R_k - k(k+1)/2`, with mean `k(n-k)/2` and
//! variance `k(n-k)/12 * ((n+1) - sum(c^3 - c) / (n(n-1)))` under mid-rank
//! tie handling, where `c` runs over tie-group sizes. The normalized
//! statistic is `|U_k - mean| / sd`, and the scan statistic is its maximum
//! over admissible `k`.
//!
//! All rank sums are multiples of 1/2, so both the batch path and the
//! incremental path below are exact in f64 and agree bitwise.

use std::collections::HashMap;

/// Mid-ranks in time order plus the tie-correction sum `Σ(c³ - c)`.
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut tie_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        let c = (j - i) as f64;
        tie_sum += c * c * c - c;
        i = j;
    }
    (ranks, tie_sum)
}

/// `|U_k - mean| / sd`; zero when every observation is tied.
pub(crate) fn normalized_stat(u: f64, k: usize, n: usize, tie_sum: f64) -> f64 {
    let kf = k as f64;
    let nf = n as f64;
    let mean = kf * (nf - kf) / 2.0;
    let var = kf * (nf - kf) / 12.0 * ((nf + 1.0) - tie_sum / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return 0.0;
    }
    (u - mean).abs() / var.sqrt()
}

/// One-shot scan: normalized statistic at a single split `k`.
pub(crate) fn stat_at(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    let (ranks, tie_sum) = midranks(values);
    let r_k: f64 = ranks[..k].iter().sum();
    let u = r_k - (k * (k + 1)) as f64 / 2.0;
    normalized_stat(u, k, n, tie_sum)
}

/// One-shot scan over `k` in `[k_lo, k_hi]`: returns `(argmax, max)`, ties
/// broken toward the smallest `k`. `None` when the range is empty.
pub(crate) fn batch_scan(values: &[f64], k_lo: usize, k_hi: usize) -> Option<(usize, f64)> {
    let n = values.len();
    if k_lo > k_hi || k_hi >= n {
        return None;
    }
    let (ranks, tie_sum) = midranks(values);
    let mut r_k = ranks[..k_lo].iter().sum::<f64>();
    let mut best: Option<(usize, f64)> = None;
    for k in k_lo..=k_hi {
        if k > k_lo {
            r_k += ranks[k - 1];
        }
        let u = r_k - (k * (k + 1)) as f64 / 2.0;
        let stat = normalized_stat(u, k, n, tie_sum);
        match best {
            Some((_, b)) if stat <= b => {}
            _ => best = Some((k, stat)),
        }
    }
    best
}

/// Incrementally maintained rank-sum statistics for a growing sequence.
///
/// Appending an observation costs O(t): one prefix-sum pass updates every
/// `U_k` at once.
#[derive(Debug, Clone)]
pub(crate) struct MwState {
    values: Vec<f64>,
    /// `u[i]` is `U_{k=i+1}` for the current sample.
    u: Vec<f64>,
    tie_sum: f64,
    counts: HashMap<u64, u32>,
}

fn value_key(x: f64) -> u64 {
    // Collapse -0.0 onto 0.0 so bit-equality matches float equality.
    if x == 0.0 {
        0.0f64.to_bits()
    } else {
        x.to_bits()
    }
}

impl MwState {
    pub fn new() -> Self {
        Self { values: Vec::new(), u: Vec::new(), tie_sum: 0.0, counts: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }


    pub fn push(&mut self, x: f64) {
        let t = self.values.len();
        // U_{k,t+1} = U_{k,t} + #{i <= k : x_i > x} + 0.5 * #{i <= k : x_i = x}
        let mut prefix = 0.0;
        for i in 0..t {
            let v = self.values[i];
            if v > x {
                prefix += 1.0;
            } else if v == x {
                prefix += 0.5;
            }
            if i < t - 1 {
                self.u[i] += prefix;
            } else {
                self.u.push(prefix);
            }
        }
        let c = self.counts.entry(value_key(x)).or_insert(0);
        let old = f64::from(*c);
        let new = old + 1.0;
        self.tie_sum += (new * new * new - new) - (old * old * old - old);
        *c += 1;
        self.values.push(x);
    }

    /// `(argmax k, max stat)` over `k` in `[k_lo, min(k_hi, t - 2)]`,
    /// smallest `k` on ties. `None` when the range is empty.
    pub fn max_stat(&self, k_lo: usize, k_hi: usize) -> Option<(usize, f64)> {
        let t = self.values.len();
        if t < 4 || k_lo > k_hi {
            return None;
        }
        let k_hi = k_hi.min(t - 2);
        let mut best: Option<(usize, f64)> = None;
        for k in k_lo..=k_hi {
            let stat = normalized_stat(self.u[k - 1], k, t, self.tie_sum);
            match best {
                Some((_, b)) if stat <= b => {}
                _ => best = Some((k, stat)),
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn hand_computed_stat() {
        // [1,2,3,4] at k=2: U = 0, mean = 2, var = 5/3.
        let stat = stat_at(&[1.0, 2.0, 3.0, 4.0], 2);
        let expect = 2.0 / (5.0f64 / 3.0).sqrt();
        assert!((stat - expect).abs() < 1e-15, "{stat} vs {expect}");
        assert!((stat - 1.549_193_338_482_966_8).abs() < 1e-12);
    }

    #[test]
    fn identical_half_multisets_give_zero() {
        assert_eq!(stat_at(&[5.0, 1.0, 1.0, 5.0], 2), 0.0);
        assert_eq!(stat_at(&[2.0, 7.0, 1.0, 1.0, 7.0, 2.0], 3), 0.0);
    }

    #[test]
    fn all_tied_gives_zero() {
        let values = vec![0.0; 5];
        for k in 2..=3 {
            assert_eq!(stat_at(&values, k), 0.0);
        }
    }

    #[test]
    fn reversal_symmetry() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.random_range(6..40);
            let values: Vec<f64> = (0..n).map(|_| (rng.random_range(0..12) as f64) / 3.0).collect();
            let reversed: Vec<f64> = values.iter().rev().copied().collect();
            for k in 2..=(n - 2) {
                let a = stat_at(&values, k);
                let b = stat_at(&reversed, n - k);
                assert!((a - b).abs() < 1e-12, "k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn incremental_matches_batch_exactly() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.random_range(10..80);
            // Coarse quantization forces ties.
            let values: Vec<f64> = (0..n).map(|_| (rng.random_range(-6..6) as f64) / 2.0).collect();
            let mut state = MwState::new();
            for (i, &x) in values.iter().enumerate() {
                state.push(x);
                let t = i + 1;
                if t >= 4 {
                    let inc = state.max_stat(2, t - 2).unwrap();
                    let bat = batch_scan(&values[..t], 2, t - 2).unwrap();
                    assert_eq!(inc.0, bat.0);
                    assert_eq!(inc.1.to_bits(), bat.1.to_bits(), "t={t}");
                }
            }
        }
    }

    #[test]
    fn scan_prefers_smallest_k_on_ties() {
        // Constant series: every split stats 0; argmax must be k_lo.
        let values = vec![1.0; 12];
        let (k, d) = batch_scan(&values, 3, 9).unwrap();
        assert_eq!(k, 3);
        assert_eq!(d, 0.0);
    }
}
