//! Orbit balls, annuli and horoball annuli, and the growth tables built from them.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{check_truncation, Error, Result};
use crate::space::Space;

/// One enumerated element with `d(o, g o)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitEntry<E> {
    pub element: E,
    pub dist: f64,
}

/// All elements with `d(o, g o) <= radius`, sorted by distance then element.
#[derive(Clone, Debug)]
pub struct OrbitBall<E> {
    pub radius: f64,
    pub entries: Vec<OrbitEntry<E>>,
}

impl<E> OrbitBall<E> {
    /// Entries with `d <= n`.
    pub fn within(&self, n: f64) -> &[OrbitEntry<E>] {
        let end = self.entries.partition_point(|e| e.dist <= n);
        &self.entries[..end]
    }

    /// Index range of entries with `lo <= d < hi`.
    pub fn window(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        self.entries.partition_point(|e| e.dist < lo)..self.entries.partition_point(|e| e.dist < hi)
    }
}

/// A horoball and `d(o, U)`, the distance to its foot.
#[derive(Clone, Debug, PartialEq)]
pub struct HoroballEntry<H> {
    pub horoball: H,
    pub dist: f64,
}

/// Parameters of `A(g o, n, Δ) = { h : n - Δ <= d(o, h o) - d(o, g o) < n + Δ }`.
#[derive(Clone, Debug)]
pub struct AnnulusQuery<E> {
    pub center: E,
    pub n: f64,
    pub width: f64,
}

impl<E> AnnulusQuery<E> {
    pub fn new(center: E, n: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(n >= 0.0) {
            return Err(Error::Usage(format!("annulus needs n >= 0 and width > 0, got n={n}, width={width}")));
        }
        Ok(AnnulusQuery { center, n, width })
    }
}

/// `N(o, n)`.
pub fn ball<S: Space>(space: &S, n: f64) -> Result<Vec<S::Element>> {
    check_truncation(n, space.truncation())?;
    Ok(space.orbit_ball()?.within(n).iter().map(|e| e.element.clone()).collect())
}

/// Index range into the orbit ball of the annulus; entries are sorted by distance.
pub fn annulus_range<S: Space>(space: &S, q: &AnnulusQuery<S::Element>) -> Result<std::ops::Range<usize>> {
    let base = space.distance(space.basepoint(), &space.orbit_point(&q.center))?;
    check_truncation(q.n + base + q.width, space.truncation())?;
    Ok(space.orbit_ball()?.window(q.n - q.width + base, q.n + q.width + base))
}

pub fn annulus<S: Space>(space: &S, q: &AnnulusQuery<S::Element>) -> Result<Vec<S::Element>> {
    let range = annulus_range(space, q)?;
    Ok(space.orbit_ball()?.entries[range].iter().map(|e| e.element.clone()).collect())
}

/// `H(o, n, Δ) = { U : -Δ <= d(o, o_U) - n < Δ }`, optionally restricted to one orbit class.
pub fn horoball_annulus<S: Space>(space: &S, n: f64, width: f64, class: Option<usize>) -> Result<Vec<S::Horoball>> {
    check_truncation(n + width, space.truncation())?;
    Ok(space
        .horoball_table()?
        .iter()
        .filter(|e| e.dist >= n - width && e.dist < n + width)
        .filter(|e| class.map_or(true, |k| space.horoball_class(&e.horoball) == k))
        .map(|e| e.horoball.clone())
        .collect())
}

/// `A_U(v, n, Δ)`: stabilizer elements `p` with `n - Δ <= d(v, p v) < n + Δ`.
pub fn parabolic_annulus<S: Space>(
    space: &S,
    u: &S::Horoball,
    v: &S::Point,
    n: f64,
    width: f64,
) -> Result<Vec<S::Element>> {
    Ok(space
        .stabilizer_orbit(u, v, n + width)?
        .into_iter()
        .filter(|(_, d)| *d >= n - width && *d < n + width)
        .map(|(p, _)| p)
        .collect())
}

/// The foot of `U`: the nearest point of its horosphere to `x`.
pub fn foot<S: Space>(space: &S, u: &S::Horoball, x: &S::Point) -> Result<S::Point> {
    space.horoball_foot(x, u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    Orbit,
    Horoball,
    Parabolic,
    Cone,
    PartialCone,
}

impl fmt::Display for GrowthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthKind::Orbit => "orbit",
            GrowthKind::Horoball => "horoball",
            GrowthKind::Parabolic => "parabolic",
            GrowthKind::Cone => "cone",
            GrowthKind::PartialCone => "partial_cone",
        })
    }
}

impl std::str::FromStr for GrowthKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "orbit" => GrowthKind::Orbit,
            "horoball" => GrowthKind::Horoball,
            "parabolic" => GrowthKind::Parabolic,
            "cone" => GrowthKind::Cone,
            "partial_cone" | "partial-cone" => GrowthKind::PartialCone,
            other => return Err(Error::Usage(format!("unknown growth kind `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: f64,
    pub count: u64,
    pub normalized: f64,
}

/// Counts indexed by radius with the `count · exp(-δ̂ n)` column.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthTable {
    pub kind: GrowthKind,
    pub delta: f64,
    pub delta_hat: f64,
    pub params: BTreeMap<String, f64>,
    /// Cone center, for cone and partial-cone tables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<String>,
    pub rows: Vec<GrowthRow>,
}

impl GrowthTable {
    pub fn new(kind: GrowthKind, delta: f64, delta_hat: f64, counts: impl IntoIterator<Item = (f64, u64)>) -> Self {
        let rows = counts
            .into_iter()
            .map(|(n, count)| GrowthRow { n, count, normalized: count as f64 * (-delta_hat * n).exp() })
            .collect();
        GrowthTable { kind, delta, delta_hat, params: BTreeMap::new(), center: None, rows }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_center(mut self, center: &str) -> Self {
        self.center = Some(center.to_string());
        self
    }

    /// `max / min` of the normalized column over rows with `n` in the window.
    pub fn spread(&self, lo: f64, hi: f64) -> Option<f64> {
        let vals: Vec<f64> = self.rows.iter().filter(|r| r.n >= lo && r.n <= hi).map(|r| r.normalized).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        (!vals.is_empty() && min > 0.0).then(|| max / min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,n,delta,count,normalized\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{:.12e}\n", self.kind, r.n, self.delta, r.count, r.normalized));
        }
        out
    }
}

/// Counts of `A(o, n, Δ)` for each `n`.
pub fn orbit_growth<S: Space>(space: &S, ns: &[f64], width: f64, delta_hat: f64) -> Result<GrowthTable> {
    let id = space.identity();
    let counts = ns
        .iter()
        .map(|&n| Ok((n, annulus_range(space, &AnnulusQuery::new(id.clone(), n, width)?)?.len() as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthTable::new(GrowthKind::Orbit, width, delta_hat, counts))
}

/// Counts of `H(o, n, Δ)`.
pub fn horoball_growth<S: Space>(space: &S, ns: &[f64], width: f64, delta_hat: f64) -> Result<GrowthTable> {
    let counts = ns
        .iter()
        .map(|&n| Ok((n, horoball_annulus(space, n, width, None)?.len() as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthTable::new(GrowthKind::Horoball, width, delta_hat, counts))
}

/// Counts of `A_U(v, n, Δ)` for the class representative `U_k` and its foot `v`.
pub fn parabolic_growth<S: Space>(
    space: &S,
    class: usize,
    ns: &[f64],
    width: f64,
    delta_hat: f64,
) -> Result<GrowthTable> {
    let u = space.class_horoball(class);
    let v = space.horoball_foot(space.basepoint(), &u)?;
    let max = ns.iter().cloned().fold(0.0, f64::max);
    let orbit = space.stabilizer_orbit(&u, &v, max + width)?;
    let counts = ns
        .iter()
        .map(|&n| (n, orbit.iter().filter(|(_, d)| *d >= n - width && *d < n + width).count() as u64))
        .collect::<Vec<_>>();
    Ok(GrowthTable::new(GrowthKind::Parabolic, width, delta_hat, counts).with_param("class", class as f64))
}

/// Cumulative counts `#N(o, n)` at each `n`.
pub fn ball_counts<S: Space>(space: &S, ns: &[f64]) -> Result<Vec<(f64, u64)>> {
    let ball = space.orbit_ball()?;
    ns.iter()
        .map(|&n| {
            check_truncation(n, space.truncation())?;
            Ok((n, ball.within(n).len() as u64))
        })
        .collect()
}

/// Integer radii `lo, lo + 1, ..., hi`.
pub fn integer_grid(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut n = lo.ceil();
    while n <= hi + 1e-12 {
        out.push(n);
        n += 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::half_plane::gcd;
    use crate::testing;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn psl() -> &'static crate::models::HalfPlaneModel {
        static M: OnceLock<crate::models::HalfPlaneModel> = OnceLock::new();
        M.get_or_init(|| testing::psl(8.0))
    }

    #[test]
    fn tree_spheres_are_exact() {
        let m = testing::free2(7.0);
        let t = orbit_growth(&m, &integer_grid(1.0, 6.0), 0.5, 3f64.ln()).unwrap();
        for r in &t.rows {
            assert_eq!(r.count, 4 * 3u64.pow(r.n as u32 - 1));
        }
        assert!(t.spread(1.0, 6.0).unwrap() < 1.0 + 1e-9);
    }

    #[test]
    fn horoball_annulus_matches_cusp_heights() {
        // U at p/q is the image of {Im >= 1}; its distance from i is ln(p² + q²)
        let (n, width) = (4.0, 0.5);
        let mut expected = 0;
        for q in 1..=60i64 {
            for p in -60..=60i64 {
                let d = ((p * p + q * q) as f64).ln();
                if gcd(p, q) == 1 && d >= n - width && d < n + width {
                    expected += 1;
                }
            }
        }
        assert_eq!(horoball_annulus(psl(), n, width, None).unwrap().len(), expected);
    }

    #[test]
    fn parabolic_annulus_counts_translations() {
        let m = psl();
        let u = m.class_horoball(0);
        let v = m.horoball_foot(m.basepoint(), &u).unwrap();
        for n in [2.0, 4.0, 6.0] {
            // d(i, i + k) = 2 asinh(|k| / 2)
            let expected = (-500i64..=500)
                .filter(|&k| k != 0)
                .map(|k| 2.0 * (k.abs() as f64 / 2.0).asinh())
                .filter(|d| *d >= n - 0.5 && *d < n + 0.5)
                .count();
            assert_eq!(parabolic_annulus(m, &u, &v, n, 0.5).unwrap().len(), expected);
        }
    }

    #[test]
    fn requests_beyond_truncation_fail() {
        assert!(matches!(ball(psl(), 9.0), Err(Error::Truncation { .. })));
        assert!(AnnulusQuery::new(IDENTITY, 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_has_fixed_header() {
        let t = GrowthTable::new(GrowthKind::Cone, 0.5, 1.0, [(1.0, 3)]);
        assert_eq!(t.to_csv().lines().next(), Some("kind,n,delta,count,normalized"));
        assert!(t.to_csv().contains("cone,1,0.5,3,"));
    }

    use crate::models::half_plane::IDENTITY;

    proptest! {
        #[test]
        fn annuli_partition_the_ball(n_max in 1usize..7, width in prop::sample::select(vec![0.5, 0.25])) {
            let m = psl();
            let step = 2.0 * width;
            let mut total = 0;
            let mut k = 0.0;
            while k + width <= n_max as f64 + 1e-9 {
                total += annulus_range(m, &AnnulusQuery::new(IDENTITY, k, width).unwrap()).unwrap().len();
                k += step;
            }
            // the annuli [k - w, k + w) tile [-w, k_last + w)
            let top = k - step + width;
            let direct = m.orbit_ball().unwrap().entries.iter().filter(|e| e.dist < top).count();
            prop_assert_eq!(total, direct);
        }

        #[test]
        fn balls_are_nested(a in 0.0..8.0f64, b in 0.0..8.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let small = ball(psl(), lo).unwrap();
            let big = ball(psl(), hi).unwrap();
            prop_assert!(small.len() <= big.len());
            prop_assert_eq!(&big[..small.len()], &small[..]);
        }
    }
}
