//! Statistical tests used by the verification suites.
//!
//! Every test returns a [`TestVerdict`] carrying the statistic and the
//! threshold it was compared against, so reports are auditable.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub n: usize,
    pub notes: String,
}

impl TestVerdict {
    /// Verdict for "statistic ≤ threshold".
    pub fn at_most(test: impl Into<String>, statistic: f64, threshold: f64, n: usize, notes: impl Into<String>) -> Self {
        TestVerdict {
            test: test.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
            n,
            notes: notes.into(),
        }
    }

    /// Verdict for "p-value ≥ level": `statistic` is the p-value.
    pub fn p_value(test: impl Into<String>, p: f64, level: f64, n: usize, notes: impl Into<String>) -> Self {
        TestVerdict { test: test.into(), statistic: p, threshold: level, pass: p >= level, n, notes: notes.into() }
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("significance level {level} not in (0, 1)")));
    }
    Ok(())
}

/// Asymptotic Kolmogorov distribution tail `P(K > λ)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// p-value with Stephens' finite-sample correction for effective size `ne`.
fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

fn sorted(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("NaN in sample"));
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample KS statistic `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<f64> {
    let v = sorted(data)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

pub fn ks_one_sample<F: Fn(f64) -> f64>(name: &str, data: &[f64], cdf: F, level: f64) -> Result<TestVerdict> {
    check_level(level)?;
    let d = ks_statistic(data, cdf)?;
    let p = ks_p(d, data.len() as f64);
    Ok(TestVerdict::p_value(name, p, level, data.len(), format!("D = {d:.6}")))
}

/// Two-sample KS statistic `sup |F_a − F_b|`.
pub fn ks_statistic_two(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn ks_two_sample(name: &str, a: &[f64], b: &[f64], level: f64) -> Result<TestVerdict> {
    check_level(level)?;
    let d = ks_statistic_two(a, b)?;
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let p = ks_p(d, ne);
    Ok(TestVerdict::p_value(name, p, level, a.len() + b.len(), format!("D = {d:.6}")))
}

/// Pearson goodness of fit of `counts` against cell probabilities `probs`.
pub fn chi_square_gof(name: &str, counts: &[u64], probs: &[f64], level: f64) -> Result<TestVerdict> {
    check_level(level)?;
    if counts.len() != probs.len() {
        return Err(Error::DimensionMismatch { expected: probs.len(), actual: counts.len() });
    }
    if counts.len() < 2 {
        return Err(Error::domain("chi-square needs at least two cells"));
    }
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in counts.iter().zip(probs) {
        if !(p > 0.0) {
            return Err(Error::domain(format!("cell probability {p}")));
        }
        let e = p * n as f64;
        stat += (o as f64 - e).powi(2) / e;
    }
    let df = (counts.len() - 1) as f64;
    let thr = ChiSquared::new(df).map_err(|e| Error::domain(e.to_string()))?.inverse_cdf(1.0 - level);
    Ok(TestVerdict::at_most(name, stat, thr, n as usize, format!("df = {df}")))
}

/// Pearson test that two count vectors share one cell distribution.
pub fn chi_square_homogeneity(name: &str, a: &[u64], b: &[u64], level: f64) -> Result<TestVerdict> {
    check_level(level)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let t = (x + y) as f64;
        if t == 0.0 {
            continue;
        }
        cells += 1;
        let (ea, eb) = (t * na / (na + nb), t * nb / (na + nb));
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    if cells < 2 {
        return Err(Error::domain("homogeneity test needs two nonempty cells"));
    }
    let df = (cells - 1) as f64;
    let thr = ChiSquared::new(df).map_err(|e| Error::domain(e.to_string()))?.inverse_cdf(1.0 - level);
    Ok(TestVerdict::at_most(name, stat, thr, (na + nb) as usize, format!("df = {df}")))
}

/// Sample mean with a batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub const BATCHES: usize = 32;

/// Mean and standard error from `batches` contiguous batches of equal size
/// (the remainder is folded into the mean but not the error estimate).
pub fn batch_means(x: &[f64], batches: usize) -> Result<MeanSe> {
    if batches < 2 || x.len() < batches {
        return Err(Error::domain(format!("{} values cannot form {batches} batches", x.len())));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let size = x.len() / batches;
    let bm: Vec<f64> = x.chunks_exact(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let bbar = bm.iter().sum::<f64>() / batches as f64;
    let var = bm.iter().map(|b| (b - bbar).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok(MeanSe { mean, se: (var / batches as f64).sqrt() })
}

fn centered_distances(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = (x[i] - x[j]).abs();
        }
    }
    let row: Vec<f64> = (0..n).map(|i| d[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let all = row.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] += all - row[i] - row[j];
        }
    }
    d
}

fn dcor_from(a: &[f64], b: &[f64], perm: &[usize]) -> f64 {
    let n = perm.len();
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let x = a[i * n + j];
            let y = b[perm[i] * n + perm[j]];
            ab += x * y;
            aa += x * x;
            bb += y * y;
        }
    }
    if aa <= 0.0 || bb <= 0.0 {
        return 0.0;
    }
    (ab / (aa * bb).sqrt()).max(0.0).sqrt()
}

/// Sample distance correlation of two paired samples.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::domain("distance correlation needs two pairs"));
    }
    let perm: Vec<usize> = (0..x.len()).collect();
    Ok(dcor_from(&centered_distances(x), &centered_distances(y), &perm))
}

/// Permutation test of independence based on distance correlation.
pub fn dcor_independence<R: Rng + ?Sized>(
    name: &str,
    x: &[f64],
    y: &[f64],
    permutations: usize,
    level: f64,
    rng: &mut R,
) -> Result<TestVerdict> {
    check_level(level)?;
    let observed = distance_correlation(x, y)?;
    let (a, b) = (centered_distances(x), centered_distances(y));
    let mut perm: Vec<usize> = (0..x.len()).collect();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        perm.shuffle(rng);
        if dcor_from(&a, &b, &perm) >= observed {
            exceed += 1;
        }
    }
    let p = (exceed + 1) as f64 / (permutations + 1) as f64;
    Ok(TestVerdict::p_value(name, p, level, x.len(), format!("dCor = {observed:.5}, {permutations} permutations")))
}

/// Counts over an explicit key space.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram<K: Ord> {
    counts: BTreeMap<K, u64>,
    total: u64,
}

impl<K: Ord + Clone> Histogram<K> {
    /// A histogram over `keys` with all counts zero.
    pub fn over(keys: impl IntoIterator<Item = K>) -> Self {
        Histogram { counts: keys.into_iter().map(|k| (k, 0)).collect(), total: 0 }
    }

    /// Histograms of two samples over the union of their observed keys.
    pub fn pair(a: &[K], b: &[K]) -> (Self, Self) {
        let keys: BTreeSet<K> = a.iter().chain(b).cloned().collect();
        let mut ha = Self::over(keys.iter().cloned());
        let mut hb = Self::over(keys);
        a.iter().for_each(|k| ha.add(k).expect("key in union"));
        b.iter().for_each(|k| hb.add(k).expect("key in union"));
        (ha, hb)
    }

    pub fn add(&mut self, k: &K) -> Result<()> {
        let c = self.counts.get_mut(k).ok_or_else(|| Error::NotFound("key outside histogram key space".into()))?;
        *c += 1;
        self.total += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &BTreeMap<K, u64> {
        &self.counts
    }

    pub fn count_vec(&self) -> Vec<u64> {
        self.counts.values().copied().collect()
    }
}

/// Total variation between the empirical laws of two histograms.
pub fn tv<K: Ord + Clone>(a: &Histogram<K>, b: &Histogram<K>) -> Result<f64> {
    if a.counts.len() != b.counts.len() || a.counts.keys().zip(b.counts.keys()).any(|(x, y)| x != y) {
        return Err(Error::InvalidSubset("histograms have different key spaces".into()));
    }
    if a.total == 0 || b.total == 0 {
        return Err(Error::domain("empty histogram"));
    }
    let (na, nb) = (a.total as f64, b.total as f64);
    Ok(0.5
        * a.counts
            .values()
            .zip(b.counts.values())
            .map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs())
            .sum::<f64>())
}

/// TV test with threshold `3√(K/N)`, `K` the key-space size and `N` the
/// smaller sample. The null expectation is about `√(K/(πN))` for equal sizes.
pub fn two_sample_tv<K: Ord + Clone>(name: &str, a: &Histogram<K>, b: &Histogram<K>) -> Result<TestVerdict> {
    let d = tv(a, b)?;
    let k = a.support_size() as f64;
    let n = a.total.min(b.total) as f64;
    let thr = 3.0 * (k / n).sqrt();
    Ok(TestVerdict::at_most(name, d, thr, (a.total + b.total) as usize, format!("K = {k}")))
}

/// TV test against a fixed tolerance.
pub fn tv_within<K: Ord + Clone>(name: &str, a: &Histogram<K>, b: &Histogram<K>, tol: f64) -> Result<TestVerdict> {
    let d = tv(a, b)?;
    Ok(TestVerdict::at_most(
        name,
        d,
        tol,
        (a.total + b.total) as usize,
        format!("K = {}", a.support_size()),
    ))
}
