//! Goodness-of-fit tests used by the validation suites.

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Geometric, Poisson};

use crate::error::{Error, Result};

/// Minimum sample size accepted by every test here.
pub const MIN_SAMPLES: usize = 100;

/// Minimum expected count per chi-square bin.
const MIN_EXPECTED: f64 = 5.0;

fn check_len(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: n });
    }
    Ok(())
}

/// Chi-square p-value of integer counts against a discrete law on
/// `{start, start+1, ...}`. Bins are merged until each expects at least five
/// observations; the last bin takes the whole upper tail.
fn chi_square_discrete(counts: &[u64], start: u64, pmf: impl Fn(u64) -> f64) -> Result<f64> {
    check_len(counts.len())?;
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(start);
    let mut observed = vec![0u64; (max.saturating_sub(start) + 1) as usize];
    let mut below = 0u64;
    for &k in counts {
        if k < start {
            below += 1;
        } else {
            observed[(k - start) as usize] += 1;
        }
    }
    if below > 0 {
        // Outside the support: the fit is impossible.
        return Ok(0.0);
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut acc_obs, mut acc_exp, mut cum) = (0.0, 0.0, 0.0);
    let mut k = start;
    loop {
        let p = pmf(k);
        cum += p;
        acc_exp += n * p;
        acc_obs += observed.get((k - start) as usize).copied().unwrap_or(0) as f64;
        let tail_exp = n * (1.0 - cum).max(0.0);
        let tail_obs = counts.iter().filter(|&&c| c > k).count() as f64;
        if acc_exp >= MIN_EXPECTED && tail_exp >= MIN_EXPECTED {
            bins.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        } else if tail_exp < MIN_EXPECTED && k >= max {
            let (o, e) = (acc_obs + tail_obs, acc_exp + tail_exp);
            match bins.last_mut() {
                Some(last) if e < MIN_EXPECTED => {
                    last.0 += o;
                    last.1 += e;
                }
                _ => bins.push((o, e)),
            }
            break;
        }
        k += 1;
    }
    if bins.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: bins.len() });
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    Ok(ChiSquared::new(df).expect("positive degrees of freedom").sf(stat))
}

/// Chi-square test of counts against Poisson(`mean`).
pub fn chi_square_poisson(counts: &[u64], mean: f64) -> Result<f64> {
    let law = Poisson::new(mean).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    chi_square_discrete(counts, 0, |k| law.pmf(k))
}

/// Chi-square test against the geometric law on `{1, 2, ...}` with the
/// given mean (success probability `1/mean`).
pub fn chi_square_geometric(counts: &[u64], mean: f64) -> Result<f64> {
    let law = geometric(mean)?;
    chi_square_discrete(counts, 1, |k| law.pmf(k))
}

fn geometric(mean: f64) -> Result<Geometric> {
    if !(mean >= 1.0) {
        return Err(Error::InvalidMeasure(format!("geometric mean {mean} below 1")));
    }
    Geometric::new(1.0 / mean).map_err(|e| Error::InvalidMeasure(e.to_string()))
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Kolmogorov p-value for a statistic `d` at effective sample size `ne`,
/// with the usual small-sample correction.
fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov–Smirnov test against the geometric law. Conservative
/// for discrete data.
pub fn ks_geometric(counts: &[u64], mean: f64) -> Result<f64> {
    check_len(counts.len())?;
    let law = geometric(mean)?;
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    let max = *sorted.last().expect("non-empty");
    for k in 0..=max {
        while i < sorted.len() && sorted[i] <= k {
            i += 1;
        }
        d = d.max((i as f64 / n - law.cdf(k)).abs());
    }
    Ok(ks_p(d, n))
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn two_sample_ks(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_len(xs.len().min(ys.len()))?;
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(ks_p(d, n * m / (n + m)))
}
