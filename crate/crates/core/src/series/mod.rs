//! Weighted series over orbit points: Poincaré partial sums, critical
//! exponents, and a heuristic convergence verdict.

mod dop;
mod partial;

pub use dop::{dop_audit, ClassDop, DopParams, DopReport};
pub use partial::{a_series, conversion_check, s_series, ConjugateCheck, ConjugatePair, ConversionReport, RatioRow};

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Heuristic verdict; finite data cannot decide convergence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converging => "converging",
            Verdict::Diverging => "diverging",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Slope thresholds of the verdict rule.
pub const CONVERGING_SLOPE: f64 = -1.1;
pub const DIVERGING_SLOPE: f64 = -0.9;
/// Shell sums decaying slower than this rate per unit radius count as non-decaying.
pub const FLAT_DECAY_RATE: f64 = -0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub n: usize,
    pub sum: f64,
}

/// Partial sums of a nonnegative series whose terms are indexed by distance.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesEstimate {
    pub s: f64,
    pub cutoff: f64,
    pub terms: usize,
    pub total: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Slope of log(mean term) against log(cumulative count) over radius shells.
    pub slope: f64,
    pub residual: f64,
    /// Slope of log(shell sum) against radius.
    pub decay_rate: f64,
    pub verdict: Verdict,
}

impl SeriesEstimate {
    /// Builds the estimate from `(distance, term)` pairs; terms are summed in
    /// increasing distance order.
    pub fn from_terms(s: f64, cutoff: f64, mut items: Vec<(f64, f64)>) -> Self {
        items.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut checkpoints = Vec::new();
        let mut sum = 0.0;
        let mut next = 1usize;
        for (i, &(_, t)) in items.iter().enumerate() {
            sum += t;
            if i + 1 == next {
                checkpoints.push(Checkpoint { n: next, sum });
                next *= 2;
            }
        }
        if checkpoints.last().map_or(!items.is_empty(), |c| c.n != items.len()) {
            checkpoints.push(Checkpoint { n: items.len(), sum });
        }
        let (slope, residual, decay_rate, verdict) = shell_verdict(&items);
        SeriesEstimate { s, cutoff, terms: items.len(), total: sum, checkpoints, slope, residual, decay_rate, verdict }
    }

    /// Largest `|S_2N - S_N|` over consecutive checkpoints with `N >= from`;
    /// `None` when no such pair exists.
    pub fn max_increment(&self, from: usize) -> Option<f64> {
        self.checkpoints
            .windows(2)
            .filter(|w| w[0].n >= from)
            .map(|w| (w[1].sum - w[0].sum).abs())
            .reduce(f64::max)
    }
}

/// Groups terms into unit radius shells and applies the slope rule to the
/// outer half of the shells.
fn shell_verdict(items: &[(f64, f64)]) -> (f64, f64, f64, Verdict) {
    if items.is_empty() {
        return (f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY, Verdict::Converging);
    }
    // (shell index, count, sum)
    let mut shells: Vec<(i64, usize, f64)> = Vec::new();
    for &(d, t) in items {
        let k = d.floor() as i64;
        match shells.last_mut() {
            Some(last) if last.0 == k => {
                last.1 += 1;
                last.2 += t;
            }
            _ => shells.push((k, 1, t)),
        }
    }
    let kmax = shells.last().unwrap().0;
    let mut cumulative = 0usize;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut radii = Vec::new();
    let mut logs = Vec::new();
    for &(k, count, sum) in &shells {
        cumulative += count;
        if 2 * k >= kmax && sum > 0.0 {
            xs.push((cumulative as f64).ln());
            ys.push((sum / count as f64).ln());
            radii.push(k as f64);
            logs.push(sum.ln());
        }
    }
    if xs.len() < 3 {
        return (f64::NAN, f64::NAN, f64::NAN, Verdict::Inconclusive);
    }
    let (slope, _, residual) = linear_fit(&xs, &ys);
    let (decay_rate, _, _) = linear_fit(&radii, &logs);
    let verdict = if decay_rate > FLAT_DECAY_RATE || slope > DIVERGING_SLOPE {
        Verdict::Diverging
    } else if slope < CONVERGING_SLOPE {
        Verdict::Converging
    } else {
        Verdict::Inconclusive
    };
    (slope, residual, decay_rate, verdict)
}

/// Least-squares line `y = slope · x + intercept` with RMS residual.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// `Σ weight(d) · exp(-s d)` over the given distances, all included.
pub fn weighted_partial(dists: &[f64], s: f64, weight: impl Fn(f64) -> f64) -> Result<SeriesEstimate> {
    if !(s > 0.0) {
        return Err(Error::Usage(format!("series exponent must be positive, got {s}")));
    }
    let cutoff = dists.iter().cloned().fold(0.0, f64::max);
    Ok(SeriesEstimate::from_terms(s, cutoff, dists.iter().map(|&d| (d, weight(d) * (-s * d).exp())).collect()))
}

/// Poincaré partial sums `Σ exp(-s d(o, g o))` over the given orbit distances.
pub fn poincare_partial(dists: &[f64], s: f64) -> Result<SeriesEstimate> {
    weighted_partial(dists, s, |_| 1.0)
}

/// The Poincaré series at `s = δ̂`; the verdict is a heuristic.
pub fn divergence_diagnostic(dists: &[f64], delta_hat: f64) -> Result<SeriesEstimate> {
    poincare_partial(dists, delta_hat)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentEstimate {
    pub delta_hat: f64,
    pub window: (f64, f64),
    /// `(n, log #N(o, n) / n)`.
    pub per_n: Vec<(f64, f64)>,
    pub residual: f64,
}

/// Least-squares slope of `log #N(o, n)` against `n` over the window.
pub fn critical_exponent(counts: &[(f64, u64)], window: (f64, f64)) -> Result<ExponentEstimate> {
    let rows: Vec<(f64, u64)> =
        counts.iter().cloned().filter(|&(n, c)| n >= window.0 && n <= window.1 && c > 0).collect();
    if rows.len() < 4 {
        return Err(Error::Fit(format!(
            "exponent window [{}, {}] has {} usable rows; need at least 4",
            window.0,
            window.1,
            rows.len()
        )));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.1 as f64).ln()).collect();
    let (slope, _, residual) = linear_fit(&xs, &ys);
    let per_n = rows.iter().filter(|r| r.0 > 0.0).map(|&(n, c)| (n, (c as f64).ln() / n)).collect();
    Ok(ExponentEstimate { delta_hat: slope.max(0.0), window, per_n, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_only() {
        let est = poincare_partial(&[0.0], 1.0).unwrap();
        assert_eq!(est.total, 1.0);
        assert_eq!(est.checkpoints, vec![Checkpoint { n: 1, sum: 1.0 }]);
    }

    #[test]
    fn empty_series_converges() {
        let est = poincare_partial(&[], 1.0).unwrap();
        assert_eq!(est.total, 0.0);
        assert_eq!(est.verdict, Verdict::Converging);
    }

    #[test]
    fn checkpoints_are_powers_of_two_then_total() {
        let d: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let est = poincare_partial(&d, 1.0).unwrap();
        let ns: Vec<usize> = est.checkpoints.iter().map(|c| c.n).collect();
        assert_eq!(ns, vec![1, 2, 4, 8, 10]);
        assert!(est.checkpoints.windows(2).all(|w| w[0].sum <= w[1].sum));
    }

    fn tree_dists(n: u32) -> Vec<f64> {
        let mut d = vec![0.0];
        for k in 1..=n {
            d.extend(std::iter::repeat(k as f64).take(4 * 3usize.pow(k - 1)));
        }
        d
    }

    #[test]
    fn tree_at_critical_exponent_diverges() {
        let est = divergence_diagnostic(&tree_dists(10), 3f64.ln()).unwrap();
        assert_eq!(est.verdict, Verdict::Diverging);
        assert!(est.decay_rate.abs() < 1e-9);
    }

    #[test]
    fn shifted_exponent_converges() {
        let est = poincare_partial(&tree_dists(10), 3f64.ln() + 1.0).unwrap();
        assert_eq!(est.verdict, Verdict::Converging);
    }

    #[test]
    fn parabolic_terms_converge() {
        let d: Vec<f64> = (-2000i64..=2000).map(|m| 2.0 * (m.abs() as f64 / 2.0).asinh()).collect();
        let est = poincare_partial(&d, 1.0).unwrap();
        assert_eq!(est.verdict, Verdict::Converging);
        assert!((est.slope + 2.0).abs() < 0.2, "slope {}", est.slope);
    }

    #[test]
    fn exponent_of_tree_counts() {
        let counts: Vec<(f64, u64)> = (0..=12).map(|n| (n as f64, 2 * 3u64.pow(n) - 1)).collect();
        let est = critical_exponent(&counts, (5.0, 12.0)).unwrap();
        assert!((est.delta_hat - 3f64.ln()).abs() < 0.01);
    }

    #[test]
    fn constant_counts_have_zero_exponent() {
        let counts: Vec<(f64, u64)> = (0..8).map(|n| (n as f64, 1)).collect();
        assert_eq!(critical_exponent(&counts, (0.0, 7.0)).unwrap().delta_hat, 0.0);
    }

    #[test]
    fn small_window_is_a_fit_error() {
        let counts: Vec<(f64, u64)> = (0..3).map(|n| (n as f64, 1)).collect();
        assert!(matches!(critical_exponent(&counts, (0.0, 2.0)), Err(Error::Fit(_))));
    }
}
