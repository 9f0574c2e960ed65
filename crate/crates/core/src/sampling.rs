//! Exploration distribution over labels, the induced distribution over
//! ordered superarms, a seeded sampler and exact enumeration helpers.
//!
//! A superarm `(b_1, .., b_m)` is drawn one label at a time without
//! replacement, each draw proportional to the remaining arm mass:
//! `Z(A) = prod_i P(b_i) / (1 - P(b_1) - .. - P(b_{i-1}))`.

use rand::Rng;

use crate::bounds::{check_gamma, check_subset, perm};
use crate::error::{Error, Result};
use crate::model::{Label, LabelSet};

/// Guard on exhaustive superarm enumeration.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// `P(r) = (1 - gamma)/m 1{r in Yhat} + gamma/k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmDistribution {
    probs: Vec<f64>,
    gamma: f64,
    m: usize,
}

impl ArmDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, label: Label) -> f64 {
        self.probs[label.index()]
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Size of the greedy set the distribution was built around.
    pub fn subset_size(&self) -> usize {
        self.m
    }
}

pub fn arm_distribution(greedy: &LabelSet, k: usize, gamma: f64) -> Result<ArmDistribution> {
    check_gamma(gamma)?;
    let m = greedy.len();
    check_subset(k, m)?;
    if greedy.num_classes() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: greedy.num_classes(),
        });
    }
    let floor = gamma / k as f64;
    let bonus = (1.0 - gamma) / m as f64;
    let mut probs = vec![floor; k];
    for label in greedy.iter() {
        probs[label.index()] = bonus + floor;
    }
    Ok(ArmDistribution { probs, gamma, m })
}

/// `Z(A)` for an ordered tuple. Order-sensitive.
pub fn superarm_prob(dist: &ArmDistribution, arm: &LabelSet) -> Result<f64> {
    if arm.num_classes() != dist.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: dist.num_classes(),
            found: arm.num_classes(),
        });
    }
    // LabelSet already rules out duplicates and out-of-range labels
    let mut z = 1.0;
    let mut used = 0.0;
    for label in arm.iter() {
        let p = dist.prob(label);
        z *= p / (1.0 - used);
        used += p;
    }
    Ok(z)
}

/// Draws an ordered `m`-tuple by sequential categorical draws without
/// replacement. Consumes exactly `m` uniforms from `rng`.
pub fn sample_superarm<R: Rng + ?Sized>(
    dist: &ArmDistribution,
    m: usize,
    rng: &mut R,
) -> Result<LabelSet> {
    let k = dist.num_classes();
    check_subset(k, m)?;
    let mut taken = vec![false; k];
    let mut picks = Vec::with_capacity(m);
    let mut used = 0.0;
    for _ in 0..m {
        let remaining = 1.0 - used;
        if !(remaining > 0.0) {
            return Err(Error::Internal(format!(
                "remaining arm mass {remaining} is not positive"
            )));
        }
        let target = rng.gen::<f64>() * remaining;
        let mut cum = 0.0;
        let mut pick = None;
        let mut last = None;
        for (r, &p) in dist.probs.iter().enumerate() {
            if taken[r] {
                continue;
            }
            last = Some(r);
            cum += p;
            if target < cum {
                pick = Some(r);
                break;
            }
        }
        // rounding can leave target just above the accumulated mass
        let r = pick
            .or(last)
            .ok_or_else(|| Error::Internal("no label left to draw".into()))?;
        taken[r] = true;
        used += dist.probs[r];
        picks.push(r);
    }
    Ok(LabelSet::from_indices_unchecked(picks, k))
}

fn check_enumeration(k: usize, m: usize) -> Result<u128> {
    check_subset(k, m)?;
    let count = perm(k as u64, m as u64);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(count)
}

/// Every ordered `m`-tuple of distinct labels out of `k`, in
/// lexicographic order of 0-based indices.
pub fn enumerate_superarms(k: usize, m: usize) -> Result<Vec<LabelSet>> {
    let count = check_enumeration(k, m)?;
    let mut out = Vec::with_capacity(count as usize);
    let mut current = Vec::with_capacity(m);
    let mut used = vec![false; k];
    fn rec(
        k: usize,
        m: usize,
        current: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<LabelSet>,
    ) {
        if current.len() == m {
            out.push(LabelSet::from_indices_unchecked(current.iter().copied(), k));
            return;
        }
        for r in 0..k {
            if used[r] {
                continue;
            }
            used[r] = true;
            current.push(r);
            rec(k, m, current, used, out);
            current.pop();
            used[r] = false;
        }
    }
    rec(k, m, &mut current, &mut used, &mut out);
    Ok(out)
}

/// Number of ordered `m`-tuples containing both `y` and `r`:
/// `m P(k-2, m-1) 1{r = y} + m (m-1) P(k-2, m-2)`.
pub fn count_containing(y: Label, r: Label, k: usize, m: usize) -> Result<u128> {
    check_enumeration(k, m)?;
    if y.index() >= k || r.index() >= k {
        return Err(Error::InvalidArgument(format!("labels must lie in 1..={k}")));
    }
    let (k, m) = (k as u64, m as u64);
    let same = if r == y { m as u128 * perm(k - 2, m - 1) } else { 0 };
    let pairs = if m >= 2 {
        (m * (m - 1)) as u128 * perm(k - 2, m - 2)
    } else {
        0
    };
    Ok(same + pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn set(numbers: &[usize], k: usize) -> LabelSet {
        LabelSet::from_numbers(numbers, k).unwrap()
    }

    #[test]
    fn arm_distribution_direct() {
        let d = arm_distribution(&set(&[1, 2], 4), 4, 0.2).unwrap();
        let expected = [0.45, 0.45, 0.05, 0.05];
        for (p, e) in d.probs().iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn arm_distribution_near_uniform() {
        let d = arm_distribution(&set(&[1, 2], 4), 4, 0.999).unwrap();
        assert!(d.probs().iter().all(|p| (p - 0.25).abs() < 1e-3));
    }

    #[test]
    fn arm_distribution_rejects_boundary_gamma() {
        for g in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                arm_distribution(&set(&[1], 3), 3, g),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn arm_distribution_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let k = rng.gen_range(2..30);
            let m = rng.gen_range(1..k);
            let g = rng.gen_range(1e-6..1.0);
            let mut labels: Vec<usize> = (1..=k).collect();
            for i in (1..k).rev() {
                labels.swap(i, rng.gen_range(0..=i));
            }
            let d = arm_distribution(&set(&labels[..m], k), k, g).unwrap();
            assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.probs().iter().all(|&p| p >= g / k as f64));
        }
    }

    #[test]
    fn superarm_prob_direct() {
        let d = arm_distribution(&set(&[1, 2], 4), 4, 0.2).unwrap();
        let z = superarm_prob(&d, &set(&[1, 3], 4)).unwrap();
        assert!((z - 0.45 * 0.05 / 0.55).abs() < 1e-15);
        // order matters
        let z_rev = superarm_prob(&d, &set(&[3, 1], 4)).unwrap();
        assert!((z_rev - 0.05 * 0.45 / 0.95).abs() < 1e-15);
    }

    #[test]
    fn superarm_prob_single() {
        let d = arm_distribution(&set(&[2], 5), 5, 0.3).unwrap();
        for r in 1..=5 {
            assert_eq!(superarm_prob(&d, &set(&[r], 5)).unwrap(), d.probs()[r - 1]);
        }
    }

    #[test]
    fn superarm_prob_duplicates_rejected_at_construction() {
        assert!(matches!(
            LabelSet::from_numbers(&[2, 2], 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn normalization_and_floor_by_enumeration() {
        for k in 2..=6 {
            for m in 1..k.min(4) {
                for &g in &[0.05, 0.3, 0.9] {
                    let greedy = LabelSet::from_indices_unchecked((0..m).rev(), k);
                    let d = arm_distribution(&greedy, k, g).unwrap();
                    let mut total = 0.0;
                    for a in enumerate_superarms(k, m).unwrap() {
                        let z = superarm_prob(&d, &a).unwrap();
                        assert!(z >= (g / k as f64).powi(m as i32));
                        total += z;
                    }
                    assert!((total - 1.0).abs() < 1e-10, "k={k} m={m} g={g}");
                }
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_superarms(3, 2).unwrap().len(), 6);
        assert_eq!(enumerate_superarms(3, 1).unwrap().len(), 3);
        for k in 2..=7usize {
            for m in 1..k.min(5) {
                let all = enumerate_superarms(k, m).unwrap();
                let fact = |n: usize| (1..=n).product::<usize>();
                assert_eq!(all.len(), fact(k) / fact(k - m));
                let unique: std::collections::HashSet<_> = all.iter().collect();
                assert_eq!(unique.len(), all.len());
            }
        }
        assert!(matches!(
            enumerate_superarms(20, 6),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn count_containing_examples() {
        let (y, other) = (Label::from_index(0), Label::from_index(1));
        assert_eq!(count_containing(y, y, 3, 2).unwrap(), 4);
        assert_eq!(count_containing(y, other, 3, 2).unwrap(), 2);
        for k in 2..8 {
            assert_eq!(count_containing(y, y, k, 1).unwrap(), 1);
            assert_eq!(count_containing(y, other, k, 1).unwrap(), 0);
        }
    }

    #[test]
    fn count_containing_matches_enumeration() {
        for k in 2..=6 {
            for m in 1..k.min(4) {
                let all = enumerate_superarms(k, m).unwrap();
                for y in 0..k {
                    for r in 0..k {
                        let (y, r) = (Label::from_index(y), Label::from_index(r));
                        let brute = all.iter().filter(|a| a.contains(y) && a.contains(r)).count();
                        assert_eq!(count_containing(y, r, k, m).unwrap(), brute as u128);
                    }
                }
            }
        }
    }

    #[test]
    fn concentrated_sampler_stays_on_greedy_set() {
        let d = arm_distribution(&set(&[1, 2], 4), 4, 1e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut off = 0;
        let n = 100_000;
        for _ in 0..n {
            let a = sample_superarm(&d, 2, &mut rng).unwrap();
            let mut nums = a.numbers();
            nums.sort();
            if nums != [1, 2] {
                off += 1;
            }
        }
        assert!((off as f64) / (n as f64) <= 1e-5, "off = {off}");
    }

    fn check_frequencies(k: usize, greedy: &[usize], g: f64, n: usize, seed: u64) {
        let m = greedy.len();
        let d = arm_distribution(&set(greedy, k), k, g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..n {
            *counts.entry(sample_superarm(&d, m, &mut rng).unwrap().numbers()).or_default() += 1;
        }
        for a in enumerate_superarms(k, m).unwrap() {
            let p = superarm_prob(&d, &a).unwrap();
            let freq = *counts.get(&a.numbers()).unwrap_or(&0) as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 4.0 * se, "tuple {a}: freq {freq} vs {p}");
        }
    }

    #[test]
    fn sampler_matches_arm_distribution_m1() {
        check_frequencies(5, &[3], 0.3, 1_000_000, 21);
    }

    #[test]
    fn sampler_matches_superarm_prob_m2() {
        check_frequencies(4, &[1, 2], 0.3, 1_000_000, 22);
    }

    #[test]
    fn sampler_matches_superarm_prob_m3() {
        check_frequencies(5, &[4, 2, 5], 0.5, 1_000_000, 23);
    }

    #[test]
    fn sampler_is_deterministic() {
        let d = arm_distribution(&set(&[1, 2], 6), 6, 0.4).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_superarm(&d, 3, &mut rng).unwrap().numbers())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(4), draw(4));
        assert_ne!(draw(4), draw(5));
    }
}
