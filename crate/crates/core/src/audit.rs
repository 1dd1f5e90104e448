//! The four-way audit: DOP, purely exponential orbit growth, growth in
//! cones and partial cones, and horoball growth, probed on finite windows.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::boundary::{cone_growth, TransitionParams};
use crate::enumeration::{ball_counts, horoball_growth, integer_grid, orbit_growth, GrowthTable};
use crate::error::Result;
use crate::series::{critical_exponent, divergence_diagnostic, dop_audit, DopParams, DopReport, ExponentEstimate, SeriesEstimate, Verdict};
use crate::space::Space;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Consistent,
    Inconsistent,
    Inconclusive,
    Vacuous,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Consistent => "consistent",
            Status::Inconsistent => "inconsistent",
            Status::Inconclusive => "inconclusive",
            Status::Vacuous => "vacuous",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditConfig {
    pub params: TransitionParams,
    pub exponent_window: (f64, f64),
    pub growth_window: (f64, f64),
    /// Max/min ceiling for the normalized growth columns.
    pub ceiling: f64,
    /// Radius for stabilizer enumeration; see [`default_parabolic_radius`].
    pub parabolic_radius: Option<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            params: TransitionParams::default(),
            exponent_window: (6.0, 12.0),
            growth_window: (6.0, 12.0),
            ceiling: 10.0,
            parabolic_radius: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionRow {
    pub condition: u8,
    pub name: &'static str,
    pub status: Status,
    pub numbers: BTreeMap<String, f64>,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeTables {
    pub center: String,
    pub cone: GrowthTable,
    pub partial: GrowthTable,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremAudit {
    pub exponent: Option<ExponentEstimate>,
    pub divergence: Option<SeriesEstimate>,
    pub dop: Option<DopReport>,
    pub orbit: Option<GrowthTable>,
    pub cones: Vec<ConeTables>,
    pub horoball: Option<GrowthTable>,
    pub rows: Vec<ConditionRow>,
}

/// Stabilizer orbits are computed without the orbit ball (closed form on the
/// half-plane, the horoball strip on graphs), so they run to twice the truncation.
pub fn default_parabolic_radius<S: Space>(space: &S) -> f64 {
    2.0 * space.truncation()
}

/// `δ̂` fitted to `#N(o, n)` on the window, clipped to the truncation.
pub fn exponent<S: Space>(space: &S, window: (f64, f64)) -> Result<ExponentEstimate> {
    let counts = ball_counts(space, &integer_grid(0.0, space.truncation()))?;
    critical_exponent(&counts, (window.0, window.1.min(space.truncation())))
}

/// Orbit distances of the whole enumerated ball.
pub fn ball_distances<S: Space>(space: &S) -> Result<Vec<f64>> {
    Ok(space.orbit_ball()?.entries.iter().map(|e| e.dist).collect())
}

/// Radii of the growth window whose annuli around `g o` fit in the truncation.
pub fn growth_radii<S: Space>(space: &S, center: &S::Element, window: (f64, f64), width: f64) -> Result<Vec<f64>> {
    let base = space.distance(space.basepoint(), &space.orbit_point(center))?;
    Ok(integer_grid(window.0, window.1.min(space.truncation() - width - base)))
}

fn spread_row(
    condition: u8,
    name: &'static str,
    tables: &[(&str, &GrowthTable)],
    window: (f64, f64),
    ceiling: f64,
) -> ConditionRow {
    let mut numbers = BTreeMap::new();
    let mut status = Status::Consistent;
    for (label, t) in tables {
        match t.spread(window.0, window.1) {
            Some(s) => {
                numbers.insert(format!("{label}_spread"), s);
                if s > ceiling {
                    status = Status::Inconsistent;
                }
            }
            None => status = Status::Inconclusive,
        }
    }
    numbers.insert("ceiling".into(), ceiling);
    ConditionRow {
        condition,
        name,
        status,
        numbers,
        note: format!("max/min of count·exp(-δ̂ n) over n in [{}, {}]", window.0, window.1),
    }
}

fn failed_row(condition: u8, name: &'static str, err: &crate::Error) -> ConditionRow {
    ConditionRow { condition, name, status: Status::Inconclusive, numbers: BTreeMap::new(), note: err.to_string() }
}

/// Runs the sub-audits in order; a failing sub-audit marks its row
/// inconclusive instead of aborting.
pub fn theorem_audit<S: Space>(space: &S, centers: &[S::Element], cfg: &AuditConfig) -> Result<TheoremAudit> {
    let exponent = exponent(space, cfg.exponent_window)?;
    let delta_hat = exponent.delta_hat;
    let divergence = divergence_diagnostic(&ball_distances(space)?, delta_hat).ok();
    let width = cfg.params.width;
    let mut rows = Vec::new();

    let dop_params = DopParams {
        width,
        window: cfg.exponent_window,
        radius: cfg.parabolic_radius.unwrap_or_else(|| default_parabolic_radius(space)),
    };
    let dop = match dop_audit(space, delta_hat, &dop_params) {
        Ok(report) => {
            let mut numbers = BTreeMap::new();
            numbers.insert("delta_hat".into(), delta_hat);
            numbers.insert("delta_hat_residual".into(), exponent.residual);
            let mut status = if report.vacuous { Status::Vacuous } else { Status::Consistent };
            for c in &report.classes {
                numbers.insert(format!("class{}_delta_p", c.class), c.delta_p.delta_hat);
                numbers.insert(format!("class{}_dop_sum", c.class), c.dop.total);
                numbers.insert(format!("class{}_dop_slope", c.class), c.dop.slope);
                numbers.insert(format!("class{}_double_sum", c.class), c.double_sum);
                numbers.insert(format!("class{}_pgp", c.class), c.pgp as u8 as f64);
                status = match (status, c.dop.verdict) {
                    (Status::Inconsistent, _) | (_, Verdict::Diverging) => Status::Inconsistent,
                    (Status::Inconclusive, _) | (_, Verdict::Inconclusive) => Status::Inconclusive,
                    (s, Verdict::Converging) => s,
                };
            }
            rows.push(ConditionRow {
                condition: 1,
                name: "DOP condition",
                status,
                numbers,
                note: if report.vacuous {
                    "no parabolic classes".into()
                } else {
                    "tail-slope verdict of the linear-weight parabolic series at s = δ̂".into()
                },
            });
            Some(report)
        }
        Err(e) => {
            rows.push(failed_row(1, "DOP condition", &e));
            None
        }
    };

    let identity = space.identity();
    let orbit = growth_radii(space, &identity, cfg.growth_window, width)
        .and_then(|ns| orbit_growth(space, &ns, width, delta_hat));
    let orbit = match orbit {
        Ok(t) => {
            rows.push(spread_row(2, "purely exponential orbit growth", &[("orbit", &t)], cfg.growth_window, cfg.ceiling));
            Some(t)
        }
        Err(e) => {
            rows.push(failed_row(2, "purely exponential orbit growth", &e));
            None
        }
    };

    let mut cones = Vec::new();
    let mut cone_err = None;
    for g in centers {
        let tables = growth_radii(space, g, cfg.growth_window, width).and_then(|ns| {
            Ok(ConeTables {
                center: g.to_string(),
                cone: cone_growth(space, g, &cfg.params, &ns, delta_hat, false)?,
                partial: cone_growth(space, g, &cfg.params, &ns, delta_hat, true)?,
            })
        });
        match tables {
            Ok(t) => cones.push(t),
            Err(e) => cone_err = Some(e),
        }
    }
    match cone_err {
        Some(e) => rows.push(failed_row(3, "purely exponential growth in cones and partial cones", &e)),
        None => {
            let labels: Vec<(String, &GrowthTable)> = cones
                .iter()
                .flat_map(|c| [(format!("cone[{}]", c.center), &c.cone), (format!("partial_cone[{}]", c.center), &c.partial)])
                .collect();
            let refs: Vec<(&str, &GrowthTable)> = labels.iter().map(|(l, t)| (l.as_str(), *t)).collect();
            rows.push(spread_row(3, "purely exponential growth in cones and partial cones", &refs, cfg.growth_window, cfg.ceiling));
        }
    }

    let horoball = if space.num_parabolic_classes() == 0 {
        rows.push(ConditionRow {
            condition: 4,
            name: "purely exponential horoball growth",
            status: Status::Vacuous,
            numbers: BTreeMap::new(),
            note: "no horoballs".into(),
        });
        None
    } else {
        match growth_radii(space, &identity, cfg.growth_window, width)
            .and_then(|ns| horoball_growth(space, &ns, width, delta_hat))
        {
            Ok(t) => {
                rows.push(spread_row(4, "purely exponential horoball growth", &[("horoball", &t)], cfg.growth_window, cfg.ceiling));
                Some(t)
            }
            Err(e) => {
                rows.push(failed_row(4, "purely exponential horoball growth", &e));
                None
            }
        }
    };

    Ok(TheoremAudit { exponent: Some(exponent), divergence, dop, orbit, cones, horoball, rows })
}
