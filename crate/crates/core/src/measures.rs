//! Finite probability distributions, measure flows and the half-L1 metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances, Q};

/// A probability vector over a finite, index-labeled support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist<S> {
    weights: Vec<S>,
}

impl<S: Scalar> FiniteDist<S> {
    /// Validates non-negativity and unit mass (exact for rationals,
    /// within `tol.normalization` for floats).
    pub fn new(weights: Vec<S>, tol: &Tolerances) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut total = S::zero();
        for (i, w) in weights.iter().enumerate() {
            if *w < S::zero() && !w.is_zero_tol(tol.normalization) {
                return Err(Error::InvalidDistribution(format!(
                    "negative weight {} at {i}",
                    w.render()
                )));
            }
            total = total + w.clone();
        }
        if !total.near(&S::one(), tol.normalization) {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {}",
                total.render()
            )));
        }
        Ok(Self { weights })
    }

    pub fn from_weights(weights: Vec<S>) -> Result<Self> {
        Self::new(weights, &Tolerances::default())
    }

    /// Skips validation; callers guarantee the invariants.
    pub fn new_unchecked(weights: Vec<S>) -> Self {
        Self { weights }
    }

    pub fn dirac(support_size: usize, at: usize) -> Self {
        let weights = (0..support_size)
            .map(|i| if i == at { S::one() } else { S::zero() })
            .collect();
        Self { weights }
    }

    pub fn uniform(support_size: usize) -> Self {
        let w = S::one() / S::from_i64(support_size as i64);
        Self {
            weights: vec![w; support_size],
        }
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn mass(&self, i: usize) -> &S {
        &self.weights[i]
    }

    pub fn near(&self, other: &Self, tol: f64) -> bool {
        self.weights.len() == other.weights.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| a.near(b, tol))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FiniteDist<T> {
        FiniteDist {
            weights: self.weights.iter().map(f).collect(),
        }
    }
}

impl FiniteDist<Q> {
    pub fn to_f64(&self) -> FiniteDist<f64> {
        self.map(|w| w.to_f64())
    }
}

/// Half the L1 distance, i.e. the total-variation distance.
pub fn dist<S: Scalar>(a: &FiniteDist<S>, b: &FiniteDist<S>) -> Result<S> {
    if a.support_size() != b.support_size() {
        return Err(Error::SupportMismatch {
            left: a.support_size(),
            right: b.support_size(),
        });
    }
    let sum = a
        .weights
        .iter()
        .zip(&b.weights)
        .fold(S::zero(), |acc, (x, y)| acc + (x.clone() - y.clone()).abs());
    Ok(sum / S::from_i64(2))
}

/// A time-indexed sequence `(m_0, ..., m_T)` of state distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFlow<S> {
    entries: Vec<FiniteDist<S>>,
}

impl<S: Scalar> MeasureFlow<S> {
    pub fn new(entries: Vec<FiniteDist<S>>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidDistribution("empty measure flow".into()));
        };
        let n = first.support_size();
        if let Some(bad) = entries.iter().find(|e| e.support_size() != n) {
            return Err(Error::SupportMismatch {
                left: n,
                right: bad.support_size(),
            });
        }
        Ok(Self { entries })
    }

    /// Number of time points, `T + 1`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn at(&self, t: usize) -> &FiniteDist<S> {
        &self.entries[t]
    }

    pub fn entries(&self) -> &[FiniteDist<S>] {
        &self.entries
    }

    pub fn near(&self, other: &Self, tol: f64) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.near(b, tol))
    }

    pub fn prefix_near(&self, other: &Self, t: usize, tol: f64) -> bool {
        self.entries[..=t]
            .iter()
            .zip(&other.entries[..=t])
            .all(|(a, b)| a.near(b, tol))
    }
}

impl MeasureFlow<Q> {
    pub fn to_f64(&self) -> MeasureFlow<f64> {
        MeasureFlow {
            entries: self.entries.iter().map(FiniteDist::to_f64).collect(),
        }
    }
}

/// Sum over time of the per-step distances.
pub fn dist_t<S: Scalar>(a: &MeasureFlow<S>, b: &MeasureFlow<S>) -> Result<S> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    a.entries
        .iter()
        .zip(&b.entries)
        .try_fold(S::zero(), |acc, (x, y)| Ok(acc + dist(x, y)?))
}

/// `Σ f(x) m(x)`.
pub fn mean_under<S: Scalar>(f: &[S], m: &FiniteDist<S>) -> Result<S> {
    if f.len() != m.support_size() {
        return Err(Error::SupportMismatch {
            left: f.len(),
            right: m.support_size(),
        });
    }
    Ok(f.iter()
        .zip(&m.weights)
        .fold(S::zero(), |acc, (v, w)| acc + v.clone() * w.clone()))
}

/// Normalized histogram of `states` over `support_size` points, leaving out
/// the entry at position `exclude` when given.
pub fn empirical<S: Scalar>(
    states: &[usize],
    support_size: usize,
    exclude: Option<usize>,
) -> Result<FiniteDist<S>> {
    let counts = counts_excluding(states, support_size, exclude)?;
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return Err(Error::EmptySample);
    }
    Ok(from_counts(&counts, total))
}

/// State counts of `states`, optionally leaving out one position.
pub fn counts_excluding(
    states: &[usize],
    support_size: usize,
    exclude: Option<usize>,
) -> Result<Vec<u32>> {
    if let Some(i) = exclude {
        if i >= states.len() {
            return Err(Error::IndexOutOfRange(format!(
                "exclude {i} with {} samples",
                states.len()
            )));
        }
    }
    let mut counts = vec![0u32; support_size];
    for (i, &s) in states.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        if s >= support_size {
            return Err(Error::IndexOutOfRange(format!("state {s}")));
        }
        counts[s] += 1;
    }
    Ok(counts)
}

pub fn from_counts<S: Scalar>(counts: &[u32], total: u64) -> FiniteDist<S> {
    let den = S::from_i64(total as i64);
    FiniteDist::new_unchecked(
        counts
            .iter()
            .map(|&c| S::from_i64(c as i64) / den.clone())
            .collect(),
    )
}

/// Half-L1 distance between an empirical measure given as counts and a
/// float distribution; the hot path of the chaos diagnostics.
pub fn dist_counts(counts: &[u32], total: u64, m: &FiniteDist<f64>) -> f64 {
    let inv = 1.0 / total as f64;
    0.5 * counts
        .iter()
        .zip(m.weights())
        .map(|(&c, w)| (c as f64 * inv - w).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use proptest::prelude::*;

    fn d(w: &[(i64, i64)]) -> FiniteDist<Q> {
        FiniteDist::from_weights(w.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    #[test]
    fn dist_examples() {
        let plus = FiniteDist::<Q>::dirac(2, 0);
        let minus = FiniteDist::<Q>::dirac(2, 1);
        assert_eq!(dist(&plus, &plus).unwrap(), q(0, 1));
        assert_eq!(dist(&plus, &minus).unwrap(), q(1, 1));
        assert_eq!(dist(&d(&[(1, 2), (1, 2)]), &d(&[(3, 5), (2, 5)])).unwrap(), q(1, 10));
        assert!(matches!(
            dist(&plus, &FiniteDist::dirac(3, 0)),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn dist_t_examples() {
        let plus = FiniteDist::<Q>::dirac(2, 0);
        let minus = FiniteDist::<Q>::dirac(2, 1);
        let a = MeasureFlow::new(vec![plus.clone(); 3]).unwrap();
        let b = MeasureFlow::new(vec![minus; 3]).unwrap();
        assert_eq!(dist_t(&a, &a).unwrap(), q(0, 1));
        assert_eq!(dist_t(&a, &b).unwrap(), q(3, 1));
        let short = MeasureFlow::new(vec![plus; 2]).unwrap();
        assert!(matches!(dist_t(&a, &short), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn mean_under_examples() {
        let id = [q(1, 1), q(-1, 1)];
        assert_eq!(mean_under(&id, &d(&[(1, 2), (1, 2)])).unwrap(), q(0, 1));
        assert_eq!(mean_under(&id, &FiniteDist::dirac(2, 0)).unwrap(), q(1, 1));
        assert_eq!(mean_under(&id, &d(&[(3, 5), (2, 5)])).unwrap(), q(1, 5));
    }

    #[test]
    fn empirical_examples() {
        // state 0 = +1, state 1 = -1
        let e: FiniteDist<Q> = empirical(&[0, 0, 1], 2, Some(2)).unwrap();
        assert_eq!(e.weights(), &[q(1, 1), q(0, 1)]);
        let e: FiniteDist<Q> = empirical(&[0, 1], 2, None).unwrap();
        assert_eq!(e.weights(), &[q(1, 2), q(1, 2)]);
        let e: FiniteDist<Q> = empirical(&[0, 1, 1, 0, 1], 2, Some(0)).unwrap();
        assert_eq!(e.weights(), &[q(1, 4), q(3, 4)]);
        assert_eq!(empirical::<Q>(&[0], 2, Some(0)), Err(Error::EmptySample));
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(FiniteDist::from_weights(vec![q(1, 2), q(1, 3)]).is_err());
        assert!(FiniteDist::from_weights(vec![q(3, 2), q(-1, 2)]).is_err());
        assert!(FiniteDist::from_weights(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(FiniteDist::from_weights(vec![0.5, 0.5 + 1e-9]).is_err());
    }

    fn arb_dist(n: usize) -> impl Strategy<Value = FiniteDist<Q>> {
        prop::collection::vec(0i64..20, n)
            .prop_filter("non-zero", |v| v.iter().any(|&x| x > 0))
            .prop_map(|v| {
                let total: i64 = v.iter().sum();
                FiniteDist::new_unchecked(v.into_iter().map(|x| q(x, total)).collect())
            })
    }

    proptest! {
        #[test]
        fn dist_is_a_metric(a in arb_dist(4), b in arb_dist(4), c in arb_dist(4)) {
            let ab = dist(&a, &b).unwrap();
            prop_assert_eq!(ab.clone(), dist(&b, &a).unwrap());
            prop_assert_eq!(ab == q(0, 1), a == b);
            prop_assert!(ab <= q(1, 1));
            prop_assert!(dist(&a, &c).unwrap() <= ab + dist(&b, &c).unwrap());
        }

        #[test]
        fn dist_t_bounded(a in prop::collection::vec(arb_dist(3), 3), b in prop::collection::vec(arb_dist(3), 3)) {
            let fa = MeasureFlow::new(a).unwrap();
            let fb = MeasureFlow::new(b).unwrap();
            prop_assert!(dist_t(&fa, &fb).unwrap() <= q(3, 1));
        }

        #[test]
        fn exclusion_recombines(states in prop::collection::vec(0usize..3, 2..12), pick in any::<prop::sample::Index>()) {
            let n = states.len() as i64;
            let i = pick.index(states.len());
            let full: FiniteDist<Q> = empirical(&states, 3, None).unwrap();
            let rest: FiniteDist<Q> = empirical(&states, 3, Some(i)).unwrap();
            prop_assert!(FiniteDist::new(rest.weights().to_vec(), &Tolerances::default()).is_ok());
            // (N-1)/N * rest + 1/N * delta_{s_i} == full
            let s = states[i];
            for x in 0..3 {
                let add = if x == s { q(1, n) } else { q(0, 1) };
                let rebuilt = rest.mass(x).clone() * q(n - 1, n) + add;
                prop_assert_eq!(&rebuilt, full.mass(x));
            }
        }
    }
}
