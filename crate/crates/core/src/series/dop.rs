//! Parabolic series: the DOP sum, its double-sum form, PCP and PGP.

use serde::Serialize;

use super::{critical_exponent, poincare_partial, weighted_partial, ExponentEstimate, SeriesEstimate};
use crate::enumeration::integer_grid;
use crate::error::Result;
use crate::space::Space;

#[derive(Clone, Debug, Serialize)]
pub struct DopParams {
    /// Annulus width `Δ` of the double-sum form.
    pub width: f64,
    /// Fit window for the parabolic exponent.
    pub window: (f64, f64),
    /// Enumeration radius for stabilizer elements.
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassDop {
    pub class: usize,
    pub horoball: String,
    pub foot: String,
    pub delta_p: ExponentEstimate,
    /// `δ̂_G > δ̂_P`.
    pub pgp: bool,
    /// `Σ exp(-δ̂ d(v, p v))`.
    pub pcp: SeriesEstimate,
    /// `Σ d(v, p v) exp(-δ̂ d(v, p v))`.
    pub dop: SeriesEstimate,
    /// `Σ_{j >= 0} Σ_{m >= j} #A_U(v, m, Δ) exp(-δ̂ m)` over integer `m`.
    pub double_sum: f64,
    /// The same with `j >= 1`, which equals `Σ m · #A_U(v, m, Δ) exp(-δ̂ m)`.
    pub double_sum_from_one: f64,
    /// `double_sum / dop.total`.
    pub agreement: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DopReport {
    pub delta_hat: f64,
    pub width: f64,
    pub radius: f64,
    /// No parabolic classes: the condition holds vacuously.
    pub vacuous: bool,
    pub classes: Vec<ClassDop>,
}

/// Evaluates the parabolic series of every class at its foot `v = o_U`.
pub fn dop_audit<S: Space>(space: &S, delta_hat: f64, params: &DopParams) -> Result<DopReport> {
    let mut classes = Vec::new();
    for k in 0..space.num_parabolic_classes() {
        let u = space.class_horoball(k);
        let v = space.horoball_foot(space.basepoint(), &u)?;
        let orbit = space.stabilizer_orbit(&u, &v, params.radius)?;
        let dists: Vec<f64> = orbit.iter().map(|(_, d)| *d).collect();

        let grid = integer_grid(0.0, params.radius);
        let counts: Vec<(f64, u64)> =
            grid.iter().map(|&n| (n, dists.iter().filter(|&&d| d <= n).count() as u64)).collect();
        let delta_p = critical_exponent(&counts, params.window)?;

        let pcp = poincare_partial(&dists, delta_hat)?;
        let dop = weighted_partial(&dists, delta_hat, |d| d)?;

        let a: Vec<f64> = grid
            .iter()
            .map(|&m| {
                let c = dists.iter().filter(|&&d| d >= m - params.width && d < m + params.width).count();
                c as f64 * (-delta_hat * m).exp()
            })
            .collect();
        let double_sum: f64 = (0..a.len()).map(|j| a[j..].iter().sum::<f64>()).sum();
        let double_sum_from_one: f64 = (1..a.len()).map(|j| a[j..].iter().sum::<f64>()).sum();
        let agreement = if dop.total > 0.0 { double_sum / dop.total } else { f64::NAN };

        classes.push(ClassDop {
            class: k,
            horoball: u.to_string(),
            foot: format!("{v:?}"),
            pgp: delta_hat > delta_p.delta_hat,
            delta_p,
            pcp,
            dop,
            double_sum,
            double_sum_from_one,
            agreement,
        });
    }
    Ok(DopReport {
        delta_hat,
        width: params.width,
        radius: params.radius,
        vacuous: classes.is_empty(),
        classes,
    })
}
