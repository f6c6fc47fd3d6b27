//! Output analysis for chains and replicate sets: autocorrelation time,
//! standard errors, empirical-cdf distances, bootstrap intervals, kernel
//! density estimates and log-log regression.

use rand::{Rng, RngCore};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

/// Mean with the naive i.i.d. standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    (mean(x), (variance(x) / x.len() as f64).sqrt())
}

/// Integrated autocorrelation time 1 + 2 Σ ρ_k with Sokal's adaptive window
/// (stop at the first lag k ≥ c·τ(k), c = 5).
pub fn autocorr_time(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for k in 1..n / 2 {
        let ck = c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * ck / c0;
        if k as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

pub fn effective_sample_size(x: &[f64]) -> f64 {
    x.len() as f64 / autocorr_time(x)
}

/// Every `step`-th element, starting at the first.
pub fn thin(x: &[f64], step: usize) -> Vec<f64> {
    x.iter().step_by(step.max(1)).copied().collect()
}

/// Standard error of the mean by non-overlapping batch means with
/// ⌊√n⌋ batches.
pub fn batch_means_se(x: &[f64]) -> f64 {
    let n = x.len();
    let b = (n as f64).sqrt().floor() as usize;
    if b < 2 {
        return f64::NAN;
    }
    let len = n / b;
    let means: Vec<f64> = (0..b).map(|i| mean(&x[i * len..(i + 1) * len])).collect();
    (variance(&means) / b as f64).sqrt()
}

/// Kolmogorov distance sup |F̂ₙ − F| between the empirical cdf of `x` and `cdf`.
pub fn ecdf_sup_distance<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in s.iter().enumerate() {
        let f = cdf(*v);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Percentile bootstrap interval for `stat` over i.i.d. resamples of `x`.
pub fn bootstrap_ci<F>(x: &[f64], stat: F, n_boot: usize, level: f64, rng: &mut dyn RngCore) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..n_boot)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = x[rng.random_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let lo = ((1.0 - level) / 2.0 * n_boot as f64).floor() as usize;
    let hi = (((1.0 + level) / 2.0 * n_boot as f64).ceil() as usize).min(n_boot) - 1;
    (stats[lo], stats[hi])
}

/// Least-squares line with a t-based interval for the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_ci: (f64, f64),
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x`; needs at least three points.
pub fn ols(x: &[f64], y: &[f64], level: f64) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::InvalidParameter { name: "points", reason: format!("need ≥ 3 paired points, got {n}") });
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter { name: "x", reason: "all x values equal".into() });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let df = (n - 2) as f64;
    let slope_se = (sse / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numeric(e.to_string()))?.inverse_cdf(0.5 + level / 2.0);
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, slope_se, slope_ci: (slope - t * slope_se, slope + t * slope_se), r_squared, n })
}

/// Silverman's rule-of-thumb bandwidth.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| s[((s.len() - 1) as f64 * p).round() as usize];
    let iqr = q(0.75) - q(0.25);
    let sd = variance(x).sqrt();
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (x.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate of `x` evaluated on `grid`.
pub fn gaussian_kde(x: &[f64], bandwidth: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (x.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|g| {
            let s: f64 = x
                .iter()
                .map(|v| {
                    let z = (g - v) / bandwidth;
                    if z.abs() > 9.0 {
                        0.0
                    } else {
                        (-0.5 * z * z).exp()
                    }
                })
                .sum();
            s * norm
        })
        .collect()
}

/// Upper tail Pr(χ²_df > stat).
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, stat / 2.0)
}

/// Pearson goodness-of-fit of positive integer `intervals` against the
/// geometric law on {1, 2, …} with the success probability fitted from the
/// mean. Bins are 1, 2, … up to the last with expected count ≥ 5, plus a
/// pooled tail. Returns (statistic, degrees of freedom, p-value).
pub fn geometric_gof(intervals: &[u64]) -> Result<(f64, usize, f64)> {
    let n = intervals.len() as f64;
    if intervals.is_empty() || intervals.contains(&0) {
        return Err(Error::InvalidParameter { name: "intervals", reason: "need positive intervals".into() });
    }
    let p = n / intervals.iter().sum::<u64>() as f64;
    let mut edges = Vec::new();
    let mut tail = 1.0;
    let mut k = 1u64;
    // pmf of k is p(1-p)^{k-1}
    while n * p * (1.0 - p).powi(k as i32 - 1) >= 5.0 && n * (tail - p * (1.0 - p).powi(k as i32 - 1)) >= 5.0 {
        edges.push(k);
        tail -= p * (1.0 - p).powi(k as i32 - 1);
        k += 1;
    }
    let bins = edges.len() + 1;
    if bins < 3 {
        return Err(Error::InsufficientEvents { found: intervals.len(), required: 30 });
    }
    let mut observed = vec![0.0; bins];
    for &t in intervals {
        let i = if t as usize <= edges.len() { t as usize - 1 } else { edges.len() };
        observed[i] += 1.0;
    }
    let mut stat = 0.0;
    for (i, o) in observed.iter().enumerate() {
        let e = if i < edges.len() { n * p * (1.0 - p).powi(i as i32) } else { n * tail };
        stat += (o - e) * (o - e) / e;
    }
    // one parameter fitted
    let df = bins - 2;
    Ok((stat, df, chi_square_sf(stat, df as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::special::std_normal_cdf;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn iid_series_has_unit_autocorrelation_time() {
        let mut rng = stream(1, 0);
        let x: Vec<f64> = (0..50_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let tau = autocorr_time(&x);
        assert!((tau - 1.0).abs() < 0.1, "{tau}");
    }

    #[test]
    fn ar1_autocorrelation_time() {
        // τ = (1 + φ) / (1 − φ) = 19 for φ = 0.9
        let mut rng = stream(2, 0);
        let mut v = 0.0;
        let x: Vec<f64> = (0..200_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v = 0.9 * v + z;
                v
            })
            .collect();
        let tau = autocorr_time(&x);
        assert!((tau - 19.0).abs() < 2.0, "{tau}");
        let se = batch_means_se(&x);
        let iid = (variance(&x) / x.len() as f64).sqrt();
        assert!((se / iid - 19f64.sqrt()).abs() < 1.0);
    }

    #[test]
    fn ks_distance_of_normal_sample() {
        let mut rng = stream(3, 0);
        let x: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ecdf_sup_distance(&x, std_normal_cdf) < 0.015);
        assert!(ecdf_sup_distance(&x, |v| std_normal_cdf(v - 0.1)) > 0.03);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let fit = ols(&x, &y, 0.95).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(ols(&x[..2], &y[..2], 0.95).is_err());
    }

    #[test]
    fn ols_interval_uses_t_quantile() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.1, 0.9, 2.2, 2.8, 4.1];
        let fit = ols(&x, &y, 0.95).unwrap();
        // t_{0.975, 3} = 3.182446305284263
        let half = (fit.slope_ci.1 - fit.slope_ci.0) / 2.0;
        assert!((half / fit.slope_se - 3.182_446_305_284_263).abs() < 1e-9);
    }

    #[test]
    fn kde_integrates_to_one() {
        let mut rng = stream(4, 0);
        let x: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let grid: Vec<f64> = (0..=800).map(|i| -8.0 + i as f64 * 0.02).collect();
        let f = gaussian_kde(&x, silverman_bandwidth(&x), &grid);
        let total: f64 = f.iter().sum::<f64>() * 0.02;
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn chi_square_tail_values() {
        // Pr(χ²₂ > x) = e^{-x/2}
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn geometric_sample_passes_and_constant_fails() {
        let mut rng = stream(5, 0);
        let p = 0.1;
        let x: Vec<u64> = (0..3000)
            .map(|_| {
                let mut k = 1;
                while rng.random::<f64>() >= p {
                    k += 1;
                }
                k
            })
            .collect();
        let (_, _, pv) = geometric_gof(&x).unwrap();
        assert!(pv > 0.001, "{pv}");
        let y = vec![10u64; 3000];
        let (_, _, pv) = geometric_gof(&y).unwrap();
        assert!(pv < 1e-6);
    }

    #[test]
    fn bootstrap_interval_covers_mean() {
        let mut rng = stream(6, 0);
        let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (lo, hi) = bootstrap_ci(&x, mean, 999, 0.95, &mut rng);
        assert!(lo < mean(&x) && mean(&x) < hi);
        assert!(hi - lo < 0.25);
    }
}
