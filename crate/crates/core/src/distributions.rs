//! Discrete probability mass functions over the non-negative integers.
//!
//! Every stochastic quantity in the model (per-period demand, shipment lead
//! time, lead-time demand, the order stream a supplier sees) is represented as
//! a [`Pmf`]. Values are immutable once built and cheap to clone.

use std::io::Read;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Combined support length at or above which convolution switches to FFT.
pub const FFT_THRESHOLD: usize = 256;

/// Trailing tail mass dropped after every convolution.
pub const PRUNE_EPS: f64 = 1e-12;

/// Default truncation for Poisson tails.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    offset: usize,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl Pmf {
    /// Builds a PMF from raw (not necessarily normalized) weights starting at
    /// `offset`. Zero weights at either end are trimmed.
    pub fn from_weights(offset: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("pmf weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("pmf weights sum to zero"));
        }
        let first = weights.iter().position(|w| *w > 0.0).unwrap();
        let last = weights.iter().rposition(|w| *w > 0.0).unwrap();
        let probs: Vec<f64> = weights[first..=last].iter().map(|w| w / total).collect();
        Ok(Self::from_normalized(offset + first, probs))
    }

    fn from_normalized(offset: usize, probs: Vec<f64>) -> Self {
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        let mut mean = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            cdf.push(acc);
            mean += (offset + i) as f64 * p;
        }
        let variance = probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = (offset + i) as f64 - mean;
                d * d * p
            })
            .sum();
        Pmf {
            offset,
            probs,
            cdf,
            mean,
            variance,
        }
    }

    pub fn point(value: usize) -> Self {
        Self::from_normalized(value, vec![1.0])
    }

    /// Builds a PMF from `(value, probability)` pairs; probabilities are
    /// normalized.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(invalid("empty pmf"));
        }
        let lo = pairs.iter().map(|p| p.0).min().unwrap();
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut w = vec![0.0; hi - lo + 1];
        for &(v, p) in pairs {
            w[v - lo] += p;
        }
        Self::from_weights(lo, w)
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn min_support(&self) -> usize {
        self.offset
    }

    pub fn max_support(&self) -> usize {
        self.offset + self.probs.len() - 1
    }

    /// P(X = k).
    pub fn p(&self, k: usize) -> f64 {
        if k < self.offset {
            return 0.0;
        }
        self.probs.get(k - self.offset).copied().unwrap_or(0.0)
    }

    /// P(X <= k) for any integer k.
    pub fn cdf(&self, k: i64) -> f64 {
        if k < self.offset as i64 {
            return 0.0;
        }
        let idx = (k as usize - self.offset).min(self.probs.len() - 1);
        self.cdf[idx]
    }

    /// Iterator over `(value, probability)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.offset + i, *p))
    }

    /// Dense probability vector starting at zero.
    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.offset];
        v.extend_from_slice(&self.probs);
        v
    }

    /// Smallest `s` with `P(X <= s) >= r`.
    pub fn quantile(&self, r: f64) -> Result<i64> {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid(format!("quantile level {r} outside (0, 1)")));
        }
        let idx = self.cdf.partition_point(|c| c + 1e-12 < r);
        Ok((self.offset + idx.min(self.probs.len() - 1)) as i64)
    }

    /// E[(X - s)^+].
    pub fn expected_shortfall(&self, s: i64) -> f64 {
        if s < self.offset as i64 {
            return self.mean - s as f64;
        }
        self.iter()
            .filter(|(k, _)| *k as i64 > s)
            .map(|(k, p)| (k as i64 - s) as f64 * p)
            .sum()
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.sample_with(u)
    }

    /// Inverse-CDF lookup for a uniform variate in [0, 1).
    pub fn sample_with(&self, u: f64) -> usize {
        let idx = self.cdf.partition_point(|c| *c <= u);
        self.offset + idx.min(self.probs.len() - 1)
    }

    /// Weighted mixture of PMFs. Weights are normalized.
    pub fn mixture(parts: &[(f64, &Pmf)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(invalid("empty mixture"));
        }
        let lo = parts.iter().map(|(_, p)| p.offset).min().unwrap();
        let hi = parts.iter().map(|(_, p)| p.max_support()).max().unwrap();
        let mut w = vec![0.0; hi - lo + 1];
        for (weight, pmf) in parts {
            for (k, p) in pmf.iter() {
                w[k - lo] += weight * p;
            }
        }
        Self::from_weights(lo, w)
    }

    /// Distribution of the independent sum.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let n = self.probs.len() + other.probs.len() - 1;
        let raw = if n >= FFT_THRESHOLD {
            fft_convolve(&self.probs, &other.probs)
        } else {
            direct_convolve(&self.probs, &other.probs)
        };
        pruned(self.offset + other.offset, raw)
    }

    /// Direct O(n*m) convolution, bypassing the FFT path.
    pub fn convolve_direct(&self, other: &Pmf) -> Pmf {
        pruned(
            self.offset + other.offset,
            direct_convolve(&self.probs, &other.probs),
        )
    }

    /// FFT convolution regardless of support size.
    pub fn convolve_fft(&self, other: &Pmf) -> Pmf {
        pruned(
            self.offset + other.offset,
            fft_convolve(&self.probs, &other.probs),
        )
    }

    /// `n`-fold convolution power; `n = 0` yields a point mass at zero.
    pub fn power(&self, n: usize) -> Pmf {
        let mut acc = Pmf::point(0);
        for _ in 0..n {
            acc = acc.convolve(self);
        }
        acc
    }
}

fn direct_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|x| Complex::new(*x, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|x| Complex::new(*x, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..n].iter().map(|c| (c.re * scale).max(0.0)).collect()
}

/// Drops the trailing tail whose total mass is below [`PRUNE_EPS`] and
/// renormalizes.
fn pruned(offset: usize, mut probs: Vec<f64>) -> Pmf {
    let mut tail = 0.0;
    let mut keep = probs.len();
    while keep > 1 {
        let next = tail + probs[keep - 1];
        if next >= PRUNE_EPS {
            break;
        }
        tail = next;
        keep -= 1;
    }
    probs.truncate(keep);
    Pmf::from_weights(offset, probs).expect("convolution of valid pmfs has positive mass")
}

/// Poisson PMF truncated at the smallest `K` whose upper tail is below
/// `tail_eps`, then renormalized.
pub fn make_poisson(mean: f64, tail_eps: f64) -> Result<Pmf> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(invalid(format!("poisson mean must be positive, got {mean}")));
    }
    if !(tail_eps > 0.0 && tail_eps < 1e-3) {
        return Err(invalid(format!("tail_eps {tail_eps} outside (0, 1e-3)")));
    }
    // log-space terms so large means do not underflow at k = 0
    let ln_mean = mean.ln();
    let mut probs = Vec::new();
    let mut ln_fact = 0.0;
    let mut cum = 0.0;
    let mut k = 0usize;
    loop {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        let p = (-mean + k as f64 * ln_mean - ln_fact).exp();
        probs.push(p);
        cum += p;
        // past the mode the remaining tail is below p r / (1 - r), r = mean / (k + 1);
        // the bound matters once 1 - cum is lost to rounding
        let r = mean / (k + 1) as f64;
        if k as f64 > mean && (1.0 - cum < tail_eps || p * r / (1.0 - r) < tail_eps) {
            break;
        }
        k += 1;
    }
    Pmf::from_weights(0, probs)
}

/// Equal-weight mixture of `Poisson(m)` for `m = lo..=hi`.
pub fn make_uniform_poisson_mixture(lo: u32, hi: u32, tail_eps: f64) -> Result<Pmf> {
    if lo == 0 || lo > hi {
        return Err(invalid(format!("mixture bounds must satisfy 0 < lo <= hi, got ({lo}, {hi})")));
    }
    let comps = (lo..=hi)
        .map(|m| make_poisson(m as f64, tail_eps))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<(f64, &Pmf)> = comps.iter().map(|p| (1.0, p)).collect();
    Pmf::mixture(&parts)
}

/// Discrete uniform over `lo..=hi`.
pub fn make_uniform(lo: usize, hi: usize) -> Result<Pmf> {
    if lo > hi {
        return Err(invalid(format!("uniform bounds reversed: ({lo}, {hi})")));
    }
    Pmf::from_weights(lo, vec![1.0; hi - lo + 1])
}

/// Relative-frequency PMF of a series after scaling each sample by
/// `target_mean / sample_mean` and rounding to the nearest integer.
pub fn make_empirical(series: &[u64], target_mean: f64) -> Result<Pmf> {
    if series.is_empty() {
        return Err(invalid("empty series"));
    }
    if !(target_mean > 0.0) {
        return Err(invalid("target mean must be positive"));
    }
    let sample_mean = series.iter().sum::<u64>() as f64 / series.len() as f64;
    if sample_mean <= 0.0 {
        return Err(invalid("series has zero mean"));
    }
    let scale = target_mean / sample_mean;
    let scaled: Vec<usize> = series
        .iter()
        .map(|x| (*x as f64 * scale).round() as usize)
        .collect();
    let hi = *scaled.iter().max().unwrap();
    let mut w = vec![0.0; hi + 1];
    for s in scaled {
        w[s] += 1.0;
    }
    Pmf::from_weights(0, w)
}

/// Demand over a random replenishment interval: `sum_l P(L = l) * D^{*l}`.
pub fn compound_lead_time_demand(demand: &Pmf, lead: &Pmf) -> Pmf {
    let mut power = Pmf::point(0);
    let mut parts: Vec<(f64, Pmf)> = Vec::new();
    for l in 0..=lead.max_support() {
        if l > 0 {
            power = power.convolve(demand);
        }
        let w = lead.p(l);
        if w > 0.0 {
            parts.push((w, power.clone()));
        }
    }
    let refs: Vec<(f64, &Pmf)> = parts.iter().map(|(w, p)| (*w, p)).collect();
    Pmf::mixture(&refs).expect("lead pmf has positive mass")
}

/// The per-period order stream one supplier sees from a customer that
/// routes each order to one of `supplier_count` suppliers uniformly.
pub fn thin_random_routing(order: &Pmf, supplier_count: usize) -> Result<Pmf> {
    if supplier_count < 1 {
        return Err(invalid("supplier_count must be at least 1"));
    }
    if supplier_count == 1 {
        return Ok(order.clone());
    }
    let keep = 1.0 / supplier_count as f64;
    let zero = Pmf::point(0);
    Pmf::mixture(&[(1.0 - keep, &zero), (keep, order)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DemandSpec {
    PoissonUniformMixture { lo: u32, hi: u32 },
    /// Column of the empirical demand dataset.
    Empirical { column: usize },
    Point { value: usize },
}

impl DemandSpec {
    pub fn nominal_mean(&self) -> Option<f64> {
        match self {
            DemandSpec::PoissonUniformMixture { lo, hi } => Some((*lo + *hi) as f64 / 2.0),
            DemandSpec::Empirical { .. } => Some(EMPIRICAL_DEMAND_MEAN),
            DemandSpec::Point { value } => Some(*value as f64),
        }
    }

    pub fn resolve(&self, data: Option<&EmpiricalData>) -> Result<Pmf> {
        match self {
            DemandSpec::PoissonUniformMixture { lo, hi } => {
                make_uniform_poisson_mixture(*lo, *hi, DEFAULT_TAIL_EPS)
            }
            DemandSpec::Point { value } => Ok(Pmf::point(*value)),
            DemandSpec::Empirical { column } => {
                let data = data
                    .and_then(|d| d.demand.as_ref())
                    .ok_or_else(|| Error::MissingData("empirical demand requires --data".into()))?;
                make_empirical(data.column(*column)?, EMPIRICAL_DEMAND_MEAN)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LeadTimeSpec {
    Static { periods: usize },
    Uniform { lo: usize, hi: usize },
    Empirical { column: usize },
}

impl LeadTimeSpec {
    pub fn resolve(&self, data: Option<&EmpiricalData>) -> Result<Pmf> {
        match self {
            LeadTimeSpec::Static { periods } => Ok(Pmf::point(*periods)),
            LeadTimeSpec::Uniform { lo, hi } => make_uniform(*lo, *hi),
            LeadTimeSpec::Empirical { column } => {
                let data = data.and_then(|d| d.lead.as_ref()).ok_or_else(|| {
                    Error::MissingData("empirical lead times require --lead-data".into())
                })?;
                make_empirical(data.column(*column)?, EMPIRICAL_LEAD_MEAN)
            }
        }
    }
}

/// Target mean for empirical demand series.
pub const EMPIRICAL_DEMAND_MEAN: f64 = 10.0;
/// Target mean for empirical lead-time series.
pub const EMPIRICAL_LEAD_MEAN: f64 = 3.0;

/// Columns of daily observations, one per product.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<u64>>,
}

impl SeriesTable {
    /// Reads a CSV with a header row of product identifiers and one row per
    /// day. Every cell must be a non-negative integer.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if headers.is_empty() {
            return Err(Error::MissingData("series csv has no columns".into()));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (col, cell) in rec.iter().enumerate() {
                let cell = cell.trim();
                if cell.is_empty() {
                    return Err(Error::MissingData(format!(
                        "missing cell at row {} column {}",
                        row + 2,
                        headers[col]
                    )));
                }
                let v: u64 = cell.parse().map_err(|_| {
                    invalid(format!(
                        "cell {cell:?} at row {} column {} is not a non-negative integer",
                        row + 2,
                        headers[col]
                    ))
                })?;
                columns[col].push(v);
            }
        }
        if columns[0].is_empty() {
            return Err(Error::MissingData("series csv has no rows".into()));
        }
        Ok(SeriesTable { headers, columns })
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Column `idx`, wrapping around when the network has more stock points
    /// than the table has products.
    pub fn column(&self, idx: usize) -> Result<&[u64]> {
        if self.columns.is_empty() {
            return Err(Error::MissingData("empty series table".into()));
        }
        Ok(&self.columns[idx % self.columns.len()])
    }
}

/// Empirical demand and lead-time tables backing the "real-life data"
/// scenarios.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpiricalData {
    pub demand: Option<SeriesTable>,
    pub lead: Option<SeriesTable>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poisson_term(lambda: f64, k: u32) -> f64 {
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
        }
        (-lambda).exp() * lambda.powi(k as i32) / fact
    }

    #[test]
    fn poisson_matches_series_term() {
        let p = make_poisson(10.0, 1e-12).unwrap();
        assert_abs_diff_eq!(p.p(10), poisson_term(10.0, 10), epsilon = 1e-12);
        assert_abs_diff_eq!(p.mean(), 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.variance(), 10.0, epsilon = 1e-8);
    }

    #[test]
    fn poisson_rejects_nonpositive_mean() {
        assert!(matches!(make_poisson(0.0, 1e-12), Err(Error::InvalidParameter(_))));
        assert!(make_poisson(-1.0, 1e-12).is_err());
        assert!(make_poisson(1.0, 0.5).is_err());
    }

    #[test]
    fn poisson_tiny_tail_terminates() {
        for m in [3.0, 40.0, 170.0] {
            let p = make_poisson(m, 1e-15).unwrap();
            assert!(p.max_support() < (m + 20.0 * m.sqrt() + 20.0) as usize);
            assert_abs_diff_eq!(p.mean(), m, epsilon = 1e-9);
        }
    }

    #[test]
    fn point_mass_at_zero() {
        let p = Pmf::point(0);
        assert_eq!(p.p(0), 1.0);
        assert_eq!(p.mean(), 0.0);
    }

    #[test]
    fn poisson_additivity() {
        let a = make_poisson(3.0, 1e-12).unwrap();
        let b = make_poisson(4.0, 1e-12).unwrap();
        let c = make_poisson(7.0, 1e-12).unwrap();
        let ab = a.convolve(&b);
        for k in 0..60 {
            assert_abs_diff_eq!(ab.p(k), c.p(k), epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_mixture_moments() {
        let m = make_uniform_poisson_mixture(5, 15, 1e-12).unwrap();
        assert_abs_diff_eq!(m.mean(), 10.0, epsilon = 1e-9);
        // E[m] + Var[m] with m ~ U{5..15}: Var = (11^2 - 1) / 12 = 10
        let oracle_var: f64 = {
            let means: Vec<f64> = (5..=15).map(|x| x as f64).collect();
            let mu = means.iter().sum::<f64>() / 11.0;
            let var_m = means.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / 11.0;
            mu + var_m
        };
        assert_abs_diff_eq!(oracle_var, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.variance(), oracle_var, epsilon = 1e-8);
        assert!(m.variance() > 10.0);
    }

    #[test]
    fn single_component_mixture_is_poisson() {
        let m = make_uniform_poisson_mixture(7, 7, 1e-12).unwrap();
        let p = make_poisson(7.0, 1e-12).unwrap();
        assert_eq!(m.offset(), p.offset());
        for k in 0..50 {
            assert_abs_diff_eq!(m.p(k), p.p(k), epsilon = 1e-15);
        }
        assert!(make_uniform_poisson_mixture(8, 7, 1e-12).is_err());
    }

    #[test]
    fn empirical_rebinning() {
        let p = make_empirical(&[10, 10, 10], 10.0).unwrap();
        assert_eq!(p, Pmf::point(10));
        let p = make_empirical(&[5, 15], 10.0).unwrap();
        assert_eq!(p.p(5), 0.5);
        assert_eq!(p.p(15), 0.5);
        let p = make_empirical(&[2, 4], 6.0).unwrap();
        assert_eq!(p.p(4), 0.5);
        assert_eq!(p.p(8), 0.5);
        assert!(matches!(make_empirical(&[0, 0], 10.0), Err(Error::InvalidParameter(_))));
        assert!(make_empirical(&[], 10.0).is_err());
    }

    #[test]
    fn convolution_identities() {
        assert_eq!(Pmf::point(3).convolve(&Pmf::point(4)), Pmf::point(7));
        let a = make_poisson(5.0, 1e-12).unwrap();
        let b = a.convolve(&Pmf::point(0));
        assert_eq!(a.offset(), b.offset());
        for k in 0..40 {
            assert_abs_diff_eq!(a.p(k), b.p(k), epsilon = 1e-15);
        }
    }

    #[test]
    fn fft_and_direct_agree() {
        let a = make_uniform_poisson_mixture(5, 15, 1e-12).unwrap().power(8);
        let b = make_poisson(150.0, 1e-12).unwrap();
        assert!(a.probs().len() + b.probs().len() > FFT_THRESHOLD);
        let fft = a.convolve(&b);
        let direct = a.convolve_direct(&b);
        for k in 0..fft.max_support().max(direct.max_support()) + 1 {
            assert_abs_diff_eq!(fft.p(k), direct.p(k), epsilon = 1e-9);
        }
    }

    #[test]
    fn compound_examples() {
        let d = make_poisson(10.0, 1e-12).unwrap();
        let two = compound_lead_time_demand(&d, &Pmf::point(2));
        let dd = d.convolve(&d);
        for k in 0..80 {
            assert_abs_diff_eq!(two.p(k), dd.p(k), epsilon = 1e-12);
        }
        assert_eq!(compound_lead_time_demand(&d, &Pmf::point(0)), Pmf::point(0));

        let lead = Pmf::from_pairs(&[(1, 0.5), (2, 0.5)]).unwrap();
        let c = compound_lead_time_demand(&d, &lead);
        let p20 = make_poisson(20.0, 1e-12).unwrap();
        for k in 0..80 {
            assert_abs_diff_eq!(c.p(k), 0.5 * d.p(k) + 0.5 * p20.p(k), epsilon = 1e-9);
        }
    }

    #[test]
    fn thinning() {
        let o = make_poisson(8.0, 1e-12).unwrap();
        assert_eq!(thin_random_routing(&o, 1).unwrap(), o);
        let t = thin_random_routing(&Pmf::point(10), 2).unwrap();
        assert_eq!(t.p(0), 0.5);
        assert_eq!(t.p(10), 0.5);
        let t3 = thin_random_routing(&o, 3).unwrap();
        assert_abs_diff_eq!(t3.mean(), o.mean() / 3.0, epsilon = 1e-12);
        assert!(thin_random_routing(&o, 0).is_err());
    }

    #[test]
    fn quantile_boundaries() {
        assert_eq!(Pmf::point(7).quantile(0.5).unwrap(), 7);
        let p = Pmf::from_pairs(&[(0, 0.4), (1, 0.6)]).unwrap();
        assert_eq!(p.quantile(0.4).unwrap(), 0);
        assert_eq!(p.quantile(0.41).unwrap(), 1);
        assert!(p.quantile(0.0).is_err());
        assert!(p.quantile(1.0).is_err());

        let poi = make_poisson(10.0, 1e-12).unwrap();
        let mut cum = 0.0;
        let mut oracle = 0;
        for k in 0.. {
            cum += poisson_term(10.0, k);
            if cum >= 0.95 {
                oracle = k as i64;
                break;
            }
        }
        assert_eq!(poi.quantile(0.95).unwrap(), oracle);
    }

    #[test]
    fn shortfall_examples() {
        assert_eq!(Pmf::point(5).expected_shortfall(3), 2.0);
        let p = make_poisson(4.0, 1e-12).unwrap();
        assert_eq!(p.expected_shortfall(p.max_support() as i64), 0.0);
        let poi = make_poisson(10.0, 1e-12).unwrap();
        let oracle: f64 = (11..200u32).map(|k| (k as f64 - 10.0) * poisson_term(10.0, k)).sum();
        assert_abs_diff_eq!(poi.expected_shortfall(10), oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(poi.expected_shortfall(-3), 13.0, epsilon = 1e-9);
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Pmf::point(4);
        assert!((0..100).all(|_| p.sample(&mut rng) == 4));
        let e = Pmf::from_pairs(&[(1, 1.0)]).unwrap();
        assert!((0..100).all(|_| e.sample(&mut rng) == 1));

        let poi = make_poisson(10.0, 1e-12).unwrap();
        let n = 1_000_000;
        let total: usize = (0..n).map(|_| poi.sample(&mut rng)).sum();
        assert!((total as f64 / n as f64 - 10.0).abs() < 0.05);

        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<usize> = (0..50).map(|_| poi.sample(&mut r1)).collect();
        let b: Vec<usize> = (0..50).map(|_| poi.sample(&mut r2)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn series_csv() {
        let text = "a,b\n1,2\n3,4\n";
        let t = SeriesTable::from_csv(text.as_bytes()).unwrap();
        assert_eq!(t.headers, vec!["a", "b"]);
        assert_eq!(t.columns, vec![vec![1, 3], vec![2, 4]]);
        assert!(matches!(
            SeriesTable::from_csv("a,b\n1,\n".as_bytes()),
            Err(Error::MissingData(_))
        ));
        assert!(SeriesTable::from_csv("a,b\n1,-2\n".as_bytes()).is_err());
    }

    #[test]
    fn empirical_spec_requires_data() {
        let d = DemandSpec::Empirical { column: 0 };
        assert!(matches!(d.resolve(None), Err(Error::MissingData(_))));
        let l = LeadTimeSpec::Static { periods: 3 };
        assert_eq!(l.resolve(None).unwrap(), Pmf::point(3));
    }
}
