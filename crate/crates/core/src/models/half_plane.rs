//! Upper half-plane backend: PSL(2, Z) acting by Möbius transformations,
//! with the horoball system `{ g · {Im z >= t} }`.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::TransitionParams;
use crate::enumeration::{HoroballEntry, OrbitBall, OrbitEntry};
use crate::error::{Error, Result};
use crate::models::spec::HalfPlaneSpec;
use crate::space::hyperbolic::{self, Mobius, SegmentFrame};
use crate::space::{triangles_delta, Backend, ModelConstants, PathSample, Space};

/// An integer matrix of determinant one, up to sign.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

pub const IDENTITY: Mat2 = Mat2 { a: 1, b: 0, c: 0, d: 1 };
pub const T: Mat2 = Mat2 { a: 1, b: 1, c: 0, d: 1 };
/// `[[0, -1], [1, 0]]` in canonical sign.
pub const S: Mat2 = Mat2 { a: 0, b: 1, c: -1, d: 0 };

impl Mat2 {
    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    /// Sign-normalized representative: the first nonzero entry is positive.
    pub fn canonical(self) -> Result<Mat2> {
        if self.det() != 1 {
            return Err(Error::Spec(format!("matrix {self} has determinant {}", self.det())));
        }
        Ok(self.normalized())
    }

    pub(crate) fn normalized(self) -> Mat2 {
        let lead = [self.a, self.b, self.c, self.d].into_iter().find(|&x| x != 0).unwrap_or(1);
        if lead < 0 {
            Mat2 { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
        } else {
            self
        }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
        .normalized()
    }

    pub fn inverse(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }.normalized()
    }

    pub fn pow(&self, n: i64) -> Mat2 {
        let base = if n < 0 { self.inverse() } else { *self };
        let mut acc = IDENTITY;
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    pub fn frobenius_sq(&self) -> i64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn mobius(&self) -> Mobius {
        Mobius::new(self.a as f64, self.b as f64, self.c as f64, self.d as f64)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.mobius().apply(z)
    }

    /// `g · i`, computed exactly from the entries before rounding.
    pub fn orbit_of_i(&self) -> Complex64 {
        let den = (self.c * self.c + self.d * self.d) as f64;
        Complex64::new((self.a * self.c + self.b * self.d) as f64 / den, 1.0 / den)
    }

    /// Image of a reduced rational `p/q` (`q = 0` is infinity).
    pub fn apply_cusp(&self, cusp: Cusp) -> Cusp {
        Cusp::reduce(self.a * cusp.p + self.b * cusp.q, self.c * cusp.p + self.d * cusp.q)
    }
}

impl std::str::FromStr for Mat2 {
    type Err = Error;

    /// Accepts four integers (`"1 1 0 1"`, `"[[1,1],[0,1]]"`) or a word in
    /// `T` and `S` with optional integer powers, such as `"S T^-2"`; `e` and
    /// `I` are the identity.
    fn from_str(text: &str) -> Result<Mat2> {
        let cleaned: String = text.chars().map(|c| if "[],".contains(c) { ' ' } else { c }).collect();
        let tokens: Vec<&str> = cleaned.split_whitespace().collect();
        if tokens.len() == 4 {
            if let Ok(v) = tokens.iter().map(|t| t.parse::<i64>()).collect::<std::result::Result<Vec<_>, _>>() {
                return Mat2::new(v[0], v[1], v[2], v[3]).canonical();
            }
        }
        let bad = || Error::Usage(format!("cannot parse `{text}` as a PSL(2,Z) element"));
        let mut acc = IDENTITY;
        for tok in tokens {
            let (sym, pow) = match tok.split_once('^') {
                Some((s, p)) => (s, p.parse::<i64>().map_err(|_| bad())?),
                None => (tok, 1),
            };
            if pow.abs() > 10_000 {
                return Err(bad());
            }
            let base = match sym {
                "T" => T,
                "S" => S,
                "e" | "I" => IDENTITY,
                _ => return Err(bad()),
            };
            acc = acc.mul(&base.pow(pow));
        }
        Ok(acc)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

/// A cusp `p/q` in lowest terms with `q >= 0`; `1/0` is infinity. In this
/// backend every cusp carries exactly one horoball, so the cusp names it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Cusp {
    pub p: i64,
    pub q: i64,
}

impl Cusp {
    pub const INFINITY: Cusp = Cusp { p: 1, q: 0 };

    pub fn reduce(p: i64, q: i64) -> Cusp {
        let g = gcd(p, q).max(1);
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 || (q == 0 && p < 0) {
            p = -p;
            q = -q;
        }
        Cusp { p, q }
    }

    pub fn value(&self) -> Option<f64> {
        (self.q != 0).then(|| self.p as f64 / self.q as f64)
    }

    /// A matrix sending infinity to this cusp.
    pub fn matrix(&self) -> Mat2 {
        if self.q == 0 {
            return IDENTITY;
        }
        // p s - r q = 1
        let (g, x, y) = ext_gcd(self.p, self.q);
        debug_assert_eq!(g.abs(), 1);
        let (s, r) = (x * g, -y * g);
        Mat2::new(self.p, r, self.q, s).normalized()
    }
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q == 0 {
            f.write_str("inf")
        } else {
            write!(f, "{}/{}", self.p, self.q)
        }
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Returns `(g, x, y)` with `a x + b y = g` and `g >= 0`.
pub(crate) fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (g, x, y) = ext_gcd_signed(a, b);
    if g < 0 {
        (-g, -x, -y)
    } else {
        (g, x, y)
    }
}

fn ext_gcd_signed(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd_signed(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// A boundary point of the half-plane: a real number or infinity (`None`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ideal(pub Option<f64>);

impl fmt::Display for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("inf"),
            Some(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Debug)]
struct ParabolicClass {
    generator: Mat2,
    cusp: Cusp,
}

/// Polar coordinates of every ball entry around the basepoint, sorted by angle.
struct PolarIndex {
    /// (angle in (-pi, pi], entry index)
    by_angle: Vec<(f64, u32)>,
}

pub struct HalfPlaneModel {
    generators: Vec<Mat2>,
    parabolic: Option<ParabolicClass>,
    height: f64,
    basepoint: Complex64,
    truncation: f64,
    step: f64,
    constants: ModelConstants,
    ball: OnceLock<OrbitBall<Mat2>>,
    polar: OnceLock<PolarIndex>,
    horoballs: OnceLock<Vec<HoroballEntry<Cusp>>>,
}

impl fmt::Debug for HalfPlaneModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HalfPlaneModel")
            .field("generators", &self.generators)
            .field("parabolic", &self.parabolic)
            .field("height", &self.height)
            .field("basepoint", &self.basepoint)
            .field("truncation", &self.truncation)
            .finish()
    }
}

impl HalfPlaneModel {
    pub fn build(spec: &HalfPlaneSpec) -> Result<Self> {
        if !(spec.horoball_height > 0.0) {
            return Err(Error::Spec("horoball_height must be positive".into()));
        }
        if !(spec.basepoint.im > 0.0) {
            return Err(Error::Spec("half-plane basepoint needs positive imaginary part".into()));
        }
        if spec.truncation_radius < 1.0 {
            return Err(Error::Spec("truncation_radius must be at least 1".into()));
        }
        let mut generators = Vec::new();
        for g in &spec.generators {
            let g = g.canonical()?;
            for h in [g, g.inverse()] {
                if !generators.contains(&h) && h != IDENTITY {
                    generators.push(h);
                }
            }
        }
        generators.sort();
        if !generates_modular_group(&generators) {
            return Err(Error::Unsupported(
                "half-plane generators must generate PSL(2,Z); proper subgroups have no enumerator here".into(),
            ));
        }
        let parabolic = match spec.parabolics.as_slice() {
            [] => None,
            [class] => {
                let [p] = class.as_slice() else {
                    return Err(Error::Spec("each half-plane parabolic class takes exactly one generator".into()));
                };
                let p = p.canonical()?;
                if p == IDENTITY || p.trace().abs() != 2 {
                    return Err(Error::Spec(format!("{p} is not parabolic")));
                }
                let cusp = if p.c == 0 { Cusp::INFINITY } else { Cusp::reduce(p.a - p.d, 2 * p.c) };
                Some(ParabolicClass { generator: p, cusp })
            }
            _ => {
                return Err(Error::Spec(
                    "PSL(2,Z) has a single cusp class; declare at most one parabolic class".into(),
                ))
            }
        };
        let mut model = HalfPlaneModel {
            generators,
            parabolic,
            height: spec.horoball_height,
            basepoint: spec.basepoint,
            truncation: spec.truncation_radius,
            step: 0.05,
            constants: ModelConstants { delta_hat: 0.0, triangle_sample: 0, quasiconvexity_eps: 0.0, cocompactness_m: 0.0 },
            ball: OnceLock::new(),
            polar: OnceLock::new(),
            horoballs: OnceLock::new(),
        };
        model.constants = model.sample_constants()?;
        Ok(model)
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn has_cusps(&self) -> bool {
        self.parabolic.is_some()
    }

    /// The horoball `γ {Im >= t}` as a Möbius map and height.
    fn horoball_frame(&self, u: &Cusp) -> (Mobius, f64) {
        (u.matrix().mobius(), self.height)
    }

    /// Frobenius-norm enumeration of PSL(2,Z) elements with `‖g‖² <= bound`.
    pub fn frobenius_elements(bound: i64) -> Vec<Mat2> {
        let mut out = Vec::new();
        // a = 0 forces b = -c = ±1; the sign convention fixes b = 1, c = -1
        let d_max = ((bound - 2).max(0) as f64).sqrt().floor() as i64;
        if bound >= 2 {
            for d in -d_max..=d_max {
                if 2 + d * d <= bound {
                    out.push(Mat2::new(0, 1, -1, d));
                }
            }
        }
        let a_max = (bound as f64).sqrt().floor() as i64 + 1;
        for a in 1..=a_max {
            let rest = bound - a * a;
            if rest < 1 {
                break;
            }
            let c_max = (rest as f64).sqrt().floor() as i64 + 1;
            for c in -c_max..=c_max {
                let col = a * a + c * c;
                if col > bound || gcd(a, c) != 1 {
                    continue;
                }
                // a d0 - c b0 = 1
                let (_, x, y) = ext_gcd(a, c);
                let (d0, b0) = (x, -y);
                let budget = bound - col;
                // |(b0, d0) + k (a, c)|^2 <= budget
                let lin = (a * b0 + c * d0) as f64;
                let colf = col as f64;
                let center = -lin / colf;
                let extra = ((budget as f64) / colf).sqrt() + 2.0;
                let k_lo = (center - extra).floor() as i64;
                let k_hi = (center + extra).ceil() as i64;
                for k in k_lo..=k_hi {
                    let (b, d) = (b0 + k * a, d0 + k * c);
                    if b * b + d * d <= budget {
                        out.push(Mat2::new(a, b, c, d));
                    }
                }
            }
        }
        out
    }

    /// Breadth-first enumeration by left multiplication with generators,
    /// pruned at `radius + slack`. With the standard generators `T, S` and
    /// basepoint `i` no slack is needed: the reduction algorithm never
    /// increases `d(i, g i)`.
    pub fn bfs_elements(&self, radius: f64, slack: f64) -> Vec<(Mat2, f64)> {
        let o = self.basepoint;
        let limit = radius + slack;
        let mut seen: HashSet<Mat2> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(IDENTITY);
        queue.push_back(IDENTITY);
        let mut out = Vec::new();
        while let Some(g) = queue.pop_front() {
            let d = hyperbolic::distance(o, g.apply(o));
            if d <= radius {
                out.push((g, d));
            }
            for s in &self.generators {
                let h = s.mul(&g);
                if seen.contains(&h) {
                    continue;
                }
                if hyperbolic::distance(o, h.apply(o)) <= limit {
                    seen.insert(h);
                    queue.push_back(h);
                }
            }
        }
        out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        out
    }

    fn enumerate_ball(&self, radius: f64) -> OrbitBall<Mat2> {
        let o = self.basepoint;
        let shift = hyperbolic::distance(o, Complex64::new(0.0, 1.0));
        // d(i, g i) <= d(o, g o) + 2 d(o, i)
        let outer = radius + 2.0 * shift;
        let bound = (2.0 * outer.cosh()).floor() as i64;
        let at_i = shift < 1e-15;
        let mut entries: Vec<OrbitEntry<Mat2>> = Self::frobenius_elements(bound)
            .into_iter()
            .filter_map(|g| {
                let d = if at_i {
                    hyperbolic::acosh1p((g.frobenius_sq() - 2) as f64 / 2.0)
                } else {
                    hyperbolic::distance(o, g.apply(o))
                };
                (d <= radius).then_some(OrbitEntry { element: g, dist: d })
            })
            .collect();
        entries.sort_by(|x, y| x.dist.total_cmp(&y.dist).then(x.element.cmp(&y.element)));
        OrbitBall { radius, entries }
    }

    fn polar_index(&self) -> Result<&PolarIndex> {
        let ball = self.orbit_ball()?;
        Ok(self.polar.get_or_init(|| {
            let shift = Mobius::to_i(self.basepoint);
            let mut by_angle: Vec<(f64, u32)> = ball
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let w = hyperbolic::to_disk(shift.apply(e.element.apply(self.basepoint)));
                    let angle = if w.norm() < 1e-300 { 0.0 } else { w.arg() };
                    (angle, i as u32)
                })
                .collect();
            by_angle.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            PolarIndex { by_angle }
        }))
    }

    /// Angle of `z` as seen from the basepoint in the disk model.
    fn angle_of(&self, z: Complex64) -> f64 {
        let w = hyperbolic::to_disk(Mobius::to_i(self.basepoint).apply(z));
        if w.norm() < 1e-300 {
            0.0
        } else {
            w.arg()
        }
    }

    /// Move `z` into the standard fundamental domain: returns `(g, z0)` with `z = g z0`.
    pub fn reduce(z: Complex64) -> (Mat2, Complex64) {
        let mut g = IDENTITY;
        let mut w = z;
        for _ in 0..10_000 {
            if w.re.abs() > 0.5 {
                let n = w.re.round() as i64;
                w = Complex64::new(w.re - n as f64, w.im);
                g = g.mul(&Mat2::new(1, n, 0, 1));
            } else if w.norm_sqr() < 1.0 - 1e-15 {
                w = -1.0 / w;
                g = g.mul(&S);
            } else {
                break;
            }
        }
        (g, w)
    }

    fn cusps_near(&self, z: Complex64, eps: f64) -> Vec<Cusp> {
        let t = self.height * (-eps).exp();
        let (g, z0) = Self::reduce(z);
        let mut out = Vec::new();
        if z0.im >= t {
            out.push(g.apply_cusp(Cusp::INFINITY));
        }
        let q_max = (1.0 / (t * z0.im)).sqrt().floor() as i64;
        for q in 1..=q_max {
            let diam = 1.0 / ((q * q) as f64 * t);
            let slack = z0.im * diam - z0.im * z0.im;
            if slack < 0.0 {
                continue;
            }
            let r = slack.sqrt();
            let lo = ((z0.re - r) * q as f64).floor() as i64;
            let hi = ((z0.re + r) * q as f64).ceil() as i64;
            for p in lo..=hi {
                if gcd(p, q) != 1 {
                    continue;
                }
                let dx = z0.re - p as f64 / q as f64;
                if dx * dx + z0.im * z0.im <= z0.im * diam {
                    out.push(g.apply_cusp(Cusp { p, q }));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// The arc-length interval of points `(eps, R)`-deep in the horoball of `u`.
    fn deep_interval(&self, frame: &SegmentFrame, u: &Cusp, params: &TransitionParams) -> Option<(f64, f64)> {
        let (m, h) = self.horoball_frame(u);
        let (a, b) = frame.horoball_window(&m, h * (-params.eps).exp())?;
        let d_lo = if a <= 0.0 { f64::NEG_INFINITY } else { a + params.big_r };
        let d_hi = if b >= frame.len { f64::INFINITY } else { b - params.big_r };
        (d_lo <= d_hi).then_some((d_lo, d_hi))
    }

    /// Is the point at arc length `tau` deep? Only horoballs whose
    /// neighborhood contains the point can make it deep.
    fn is_deep_at(&self, frame: &SegmentFrame, tau: f64, params: &TransitionParams) -> bool {
        self.cusps_near(frame.point_at(tau), params.eps)
            .iter()
            .filter_map(|u| self.deep_interval(frame, u, params))
            .any(|(a, b)| a <= tau && tau <= b)
    }

    /// Exact transition test on a frame: is there a point of
    /// `[lo, hi]` (arc length) that is `(eps, R)`-deep in no horoball?
    fn frame_has_transition(&self, frame: &SegmentFrame, window: (f64, f64), params: &TransitionParams) -> bool {
        let (lo, hi) = window;
        if !self.has_cusps() {
            return true;
        }
        [lo, hi, 0.5 * (lo + hi)].into_iter().any(|tau| !self.is_deep_at(frame, tau, params))
            || self.scan_transition(frame, window, params)
    }

    /// The same test by covering the window with every deep interval met
    /// along a sampled scan.
    fn scan_transition(&self, frame: &SegmentFrame, window: (f64, f64), params: &TransitionParams) -> bool {
        let (lo, hi) = window;
        let r = params.big_r;
        let scan_lo = (lo - r).max(0.0);
        let scan_hi = (hi + r).min(frame.len);
        let step = (r / 10.0).min(0.25);
        let n = ((scan_hi - scan_lo) / step).ceil().max(1.0) as usize;
        let mut cusps = Vec::new();
        for i in 0..=n {
            let tau = scan_lo + (scan_hi - scan_lo) * i as f64 / n as f64;
            cusps.extend(self.cusps_near(frame.point_at(tau), params.eps));
        }
        cusps.sort();
        cusps.dedup();
        let mut deep: Vec<(f64, f64)> = cusps.iter().filter_map(|u| self.deep_interval(frame, u, params)).collect();
        deep.sort_by(|x, y| x.0.total_cmp(&y.0));
        // walk the window left to right, skipping covered stretches
        let mut cursor = lo;
        for (a, b) in deep {
            if a > cursor {
                return true;
            }
            if b >= cursor {
                cursor = b;
                // the deep set is closed; its right end is deep too
                if cursor >= hi {
                    return false;
                }
                cursor = next_up(cursor);
            }
        }
        cursor <= hi
    }

    fn sample_constants(&self) -> Result<ModelConstants> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let o = self.basepoint;
        let random_point = |rng: &mut ChaCha8Rng| {
            let r: f64 = rng.gen_range(0.0..5.0);
            let theta: f64 = rng.gen_range(-PI..PI);
            SegmentFrame::new(o, o).backward(hyperbolic::from_disk(Complex64::from_polar((r / 2.0).tanh(), theta)))
        };
        let triangles: Vec<[Complex64; 3]> =
            (0..30).map(|_| [random_point(&mut rng), random_point(&mut rng), random_point(&mut rng)]).collect();
        let delta_hat = triangles_delta(self, &triangles)?;

        let mut quasiconvexity_eps = 0.0f64;
        let mut cocompactness_m = 0.0f64;
        if let Some(class) = &self.parabolic {
            let (m, h) = self.horoball_frame(&class.cusp);
            for _ in 0..20 {
                let pick = |rng: &mut ChaCha8Rng| {
                    m.apply(Complex64::new(rng.gen_range(-3.0..3.0), h * rng.gen_range(1.0f64..20.0)))
                };
                let (x, y) = (pick(&mut rng), pick(&mut rng));
                for p in self.geodesic(&x, &y, 0.1)?.points {
                    quasiconvexity_eps = quasiconvexity_eps.max(self.horoball_distance(&p, &class.cusp)?);
                }
            }
            // X minus the horoballs, sampled over the fundamental domain
            let nearby = Self::frobenius_elements((2.0 * (6.0f64).cosh()) as i64);
            let top = h.max(1.0);
            for i in 0..=20 {
                let x = -0.5 + i as f64 / 20.0;
                let floor = (1.0 - x * x).sqrt();
                for j in 0..=20 {
                    let y = floor + (top - floor).max(0.0) * j as f64 / 20.0;
                    let z = Complex64::new(x, y);
                    if self.horoball_distance_raw(z) < 0.0 {
                        continue;
                    }
                    let near = nearby
                        .iter()
                        .map(|g| hyperbolic::distance(z, g.apply(o)))
                        .fold(f64::INFINITY, f64::min);
                    cocompactness_m = cocompactness_m.max(near);
                }
            }
        }
        Ok(ModelConstants { delta_hat, triangle_sample: triangles.len(), quasiconvexity_eps, cocompactness_m })
    }

    /// Signed depth: negative inside some horoball of the system.
    fn horoball_distance_raw(&self, z: Complex64) -> f64 {
        self.cusps_near(z, 0.0)
            .iter()
            .map(|u| {
                let w = u.matrix().inverse().apply(z);
                (self.height / w.im).ln()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Hyperbolic diameter of `N_eps(U) ∩ N_eps(V)`, from its boundary arcs.
    pub fn intersection_diameter(&self, u: &Cusp, v: &Cusp, eps: f64) -> f64 {
        let t = self.height * (-eps).exp();
        let boundary = |c: &Cusp| -> Vec<Complex64> {
            let m = c.matrix().mobius();
            (-4000..=4000)
                .map(|k| {
                    let x = (k as f64 / 400.0).sinh() * 50.0;
                    m.apply(Complex64::new(x, t))
                })
                .collect()
        };
        let inside = |c: &Cusp, z: Complex64| c.matrix().inverse().apply(z).im >= t * (1.0 - 1e-12);
        let mut pts: Vec<Complex64> = boundary(u).into_iter().filter(|z| inside(v, *z)).collect();
        pts.extend(boundary(v).into_iter().filter(|z| inside(u, *z)));
        let mut best = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(hyperbolic::distance(pts[i], pts[j]));
            }
        }
        best
    }
}

/// `p/q` with `q <= max_q` and `|x - p/q| <= 1e-15 (1 + |x|)`, if any.
fn rational_approx(x: f64, max_q: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let (h2, k2) = (a.checked_mul(h1)?.checked_add(h0)?, a.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_q {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= 1e-15 * (1.0 + x.abs()) {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn next_up(x: f64) -> f64 {
    x + 1e-12 * (1.0 + x.abs())
}

fn generates_modular_group(gens: &[Mat2]) -> bool {
    let mut seen: HashSet<Mat2> = HashSet::new();
    let mut frontier = vec![IDENTITY];
    seen.insert(IDENTITY);
    for _ in 0..12 {
        let mut next = Vec::new();
        for g in &frontier {
            for s in gens {
                let h = g.mul(s);
                if h.frobenius_sq() <= 64 && seen.insert(h) {
                    next.push(h);
                }
            }
        }
        if seen.contains(&T) && seen.contains(&S) {
            return true;
        }
        frontier = next;
    }
    seen.contains(&T) && seen.contains(&S)
}

impl Space for HalfPlaneModel {
    type Point = Complex64;
    type Element = Mat2;
    type Horoball = Cusp;
    type Boundary = Ideal;

    fn parse_element(&self, text: &str) -> Result<Mat2> {
        text.parse()
    }

    fn sample_centers(&self) -> Vec<Mat2> {
        vec![IDENTITY, T, S.mul(&T)]
    }

    fn backend(&self) -> Backend {
        Backend::HalfPlane
    }

    fn basepoint(&self) -> &Complex64 {
        &self.basepoint
    }

    fn truncation(&self) -> f64 {
        self.truncation
    }

    fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    fn default_step(&self) -> f64 {
        self.step
    }

    fn distance(&self, x: &Complex64, y: &Complex64) -> Result<f64> {
        if !(x.im > 0.0 && y.im > 0.0) {
            return Err(Error::Usage("half-plane points need positive imaginary part".into()));
        }
        Ok(hyperbolic::distance(*x, *y))
    }

    fn geodesic(&self, x: &Complex64, y: &Complex64, step: f64) -> Result<PathSample<Complex64>> {
        if !(step > 0.0) {
            return Err(Error::Usage("geodesic step must be positive".into()));
        }
        let frame = SegmentFrame::new(*x, *y);
        let n = (frame.len / step).ceil() as usize;
        if n == 0 {
            return Ok(PathSample::new(vec![*x], vec![0.0], step));
        }
        let mut points = Vec::with_capacity(n + 1);
        let mut lengths = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = frame.len * i as f64 / n as f64;
            points.push(if i == 0 {
                *x
            } else if i == n {
                *y
            } else {
                frame.point_at(t)
            });
            lengths.push(t);
        }
        Ok(PathSample::new(points, lengths, step))
    }

    fn point_along(&self, x: &Complex64, y: &Complex64, t: f64) -> Result<Complex64> {
        let frame = SegmentFrame::new(*x, *y);
        Ok(frame.point_at(t.clamp(0.0, frame.len)))
    }

    fn identity(&self) -> Mat2 {
        IDENTITY
    }

    fn compose(&self, g: &Mat2, h: &Mat2) -> Mat2 {
        g.mul(h)
    }

    fn inverse(&self, g: &Mat2) -> Mat2 {
        g.inverse()
    }

    fn apply(&self, g: &Mat2, x: &Complex64) -> Complex64 {
        g.apply(*x)
    }

    fn generators(&self) -> Vec<Mat2> {
        self.generators.clone()
    }

    fn orbit_point(&self, g: &Mat2) -> Complex64 {
        if self.basepoint == Complex64::new(0.0, 1.0) {
            g.orbit_of_i()
        } else {
            g.apply(self.basepoint)
        }
    }

    fn orbit_ball(&self) -> Result<&OrbitBall<Mat2>> {
        Ok(self.ball.get_or_init(|| self.enumerate_ball(self.truncation)))
    }

    fn num_parabolic_classes(&self) -> usize {
        usize::from(self.parabolic.is_some())
    }

    fn class_horoball(&self, k: usize) -> Cusp {
        assert_eq!(k, 0, "half-plane models have one parabolic class");
        self.parabolic.as_ref().map(|c| c.cusp).expect("model has no parabolic class")
    }

    fn horoball_class(&self, _u: &Cusp) -> usize {
        0
    }

    fn translate_horoball(&self, g: &Mat2, u: &Cusp) -> Cusp {
        g.apply_cusp(*u)
    }

    fn horoball_table(&self) -> Result<&[HoroballEntry<Cusp>]> {
        Ok(self.horoballs.get_or_init(|| {
            if self.parabolic.is_none() {
                return Vec::new();
            }
            let o = self.basepoint;
            let t = self.height;
            let bound = o.im * self.truncation.exp() / t;
            let mut out = Vec::new();
            let d_inf = (t / o.im).ln().max(0.0);
            if d_inf <= self.truncation {
                out.push(HoroballEntry { horoball: Cusp::INFINITY, dist: d_inf });
            }
            let q_max = (bound.sqrt() / o.im).floor() as i64;
            for q in 1..=q_max {
                let qf = q as f64;
                let rest = bound - qf * qf * o.im * o.im;
                if rest < 0.0 {
                    continue;
                }
                let r = rest.sqrt();
                let lo = (qf * o.re - r).floor() as i64;
                let hi = (qf * o.re + r).ceil() as i64;
                for p in lo..=hi {
                    if gcd(p, q) != 1 {
                        continue;
                    }
                    let w2 = (p as f64 - qf * o.re).powi(2) + qf * qf * o.im * o.im;
                    let d = (t * w2 / o.im).ln().max(0.0);
                    if d <= self.truncation {
                        out.push(HoroballEntry { horoball: Cusp { p, q }, dist: d });
                    }
                }
            }
            out.sort_by(|x, y| x.dist.total_cmp(&y.dist).then(x.horoball.cmp(&y.horoball)));
            out
        }))
    }

    fn horoball_distance(&self, x: &Complex64, u: &Cusp) -> Result<f64> {
        let w = u.matrix().inverse().apply(*x);
        Ok((self.height / w.im).ln().max(0.0))
    }

    fn horoball_foot(&self, x: &Complex64, u: &Cusp) -> Result<Complex64> {
        let m = u.matrix();
        let w = m.inverse().apply(*x);
        Ok(m.apply(Complex64::new(w.re, self.height)))
    }

    fn horoballs_near(&self, x: &Complex64, eps: f64) -> Result<Vec<Cusp>> {
        if self.parabolic.is_none() {
            return Ok(Vec::new());
        }
        Ok(self.cusps_near(*x, eps))
    }

    fn stabilizer_orbit(&self, u: &Cusp, v: &Complex64, radius: f64) -> Result<Vec<(Mat2, f64)>> {
        let class = self
            .parabolic
            .as_ref()
            .ok_or_else(|| Error::Spec("horoball has no declared stabilizer generators".into()))?;
        // conjugator sending the class cusp to u
        let conj = u.matrix().mul(&class.cusp.matrix().inverse());
        let conj_inv = conj.inverse();
        let mut out = vec![(IDENTITY, 0.0)];
        for sign in [1i64, -1] {
            let step = if sign > 0 { class.generator } else { class.generator.inverse() };
            let mut power = IDENTITY;
            loop {
                power = power.mul(&step);
                let h = conj.mul(&power).mul(&conj_inv);
                let d = hyperbolic::distance(*v, h.apply(*v));
                if d > radius {
                    break;
                }
                out.push((h, d));
            }
        }
        out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        Ok(out)
    }

    fn shadow_slack(&self) -> f64 {
        0.0
    }

    fn segment_distance(&self, x: &Complex64, y: &Complex64, p: &Complex64) -> Result<f64> {
        Ok(SegmentFrame::new(*x, *y).distance_to(*p))
    }

    fn cone_mask(&self, ball: &OrbitBall<Mat2>, p: &Complex64, r: f64) -> Result<Vec<bool>> {
        let own = self.orbit_ball()?;
        let mut mask = vec![false; ball.entries.len()];
        let o = self.basepoint;
        let dp = hyperbolic::distance(o, *p);
        if dp <= r {
            // every geodesic from o starts inside the ball
            mask.iter_mut().for_each(|m| *m = true);
            return Ok(mask);
        }
        let half_width = (r.sinh() / dp.sinh()).min(1.0).asin() + 1e-9;
        let phi = self.angle_of(*p);
        let test = |e: &OrbitEntry<Mat2>| {
            let q = self.orbit_point(&e.element);
            SegmentFrame::new(o, q).distance_to(*p) <= r
        };
        if std::ptr::eq(ball, own) {
            let index = self.polar_index()?;
            let scan = |lo: f64, hi: f64, mask: &mut Vec<bool>| {
                let start = index.by_angle.partition_point(|(a, _)| *a < lo);
                for &(a, i) in &index.by_angle[start..] {
                    if a > hi {
                        break;
                    }
                    let i = i as usize;
                    if test(&ball.entries[i]) {
                        mask[i] = true;
                    }
                }
            };
            let (lo, hi) = (phi - half_width, phi + half_width);
            scan(lo.max(-PI), hi.min(PI), &mut mask);
            if lo < -PI {
                scan(lo + 2.0 * PI, PI, &mut mask);
            }
            if hi > PI {
                scan(-PI, hi - 2.0 * PI, &mut mask);
            }
        } else {
            for (m, e) in mask.iter_mut().zip(&ball.entries) {
                *m = test(e);
            }
        }
        Ok(mask)
    }

    fn transition_near(
        &self,
        x: &Complex64,
        y: &Complex64,
        p: &Complex64,
        radius: f64,
        params: &TransitionParams,
    ) -> Result<bool> {
        let frame = SegmentFrame::new(*x, *y);
        Ok(match frame.ball_window(*p, radius) {
            None => false,
            Some(window) => self.frame_has_transition(&frame, window, params),
        })
    }

    fn ray_distance(&self, xi: &Ideal, p: &Complex64) -> Result<f64> {
        Ok(SegmentFrame::toward(self.basepoint, xi.0).distance_to(*p))
    }

    fn ray_transition_near(&self, xi: &Ideal, p: &Complex64, radius: f64, params: &TransitionParams) -> Result<bool> {
        let frame = SegmentFrame::toward(self.basepoint, xi.0);
        Ok(match frame.ball_window(*p, radius) {
            None => false,
            Some(window) => self.frame_has_transition(&frame, window, params),
        })
    }

    fn ray_point(&self, xi: &Ideal, t: f64) -> Result<Complex64> {
        Ok(SegmentFrame::toward(self.basepoint, xi.0).point_at(t))
    }

    fn busemann(&self, xi: &Ideal, x: &Complex64, y: &Complex64) -> Result<f64> {
        Ok(hyperbolic::busemann(xi.0, *x, *y))
    }

    fn boundary_through(&self, p: &Complex64) -> Result<Ideal> {
        let frame = SegmentFrame::new(self.basepoint, *p);
        if frame.len < 1e-12 {
            return Err(Error::Usage("direction through the basepoint itself is undefined".into()));
        }
        Ok(Ideal(frame.endpoint()))
    }

    fn is_parabolic_point(&self, xi: &Ideal) -> bool {
        // every cusp of the modular group is rational; test via continued fractions
        self.has_cusps() && xi.0.map_or(true, |x| rational_approx(x, 1_000_000).is_some())
    }
}
