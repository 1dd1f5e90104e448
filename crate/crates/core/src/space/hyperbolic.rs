//! Closed-form geometry of the upper half-plane.
//!
//! Points are `Complex64` with positive imaginary part. Every formula here is
//! exact up to floating point; nothing samples.

use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `arccosh(1 + x)` for `x >= 0`, accurate for `x` near zero.
pub fn acosh1p(x: f64) -> f64 {
    let x = x.max(0.0);
    (x + (x * (2.0 + x)).sqrt()).ln_1p()
}

/// Hyperbolic distance via `cosh d = 1 + |z - w|^2 / (2 Im z Im w)`.
pub fn distance(z: Complex64, w: Complex64) -> f64 {
    acosh1p((z - w).norm_sqr() / (2.0 * z.im * w.im))
}

/// A real Möbius transformation `z -> (a z + b) / (c z + d)` with `ad - bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mobius { a, b, c, d }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        let num = self.a * z + self.b;
        let w = num / den;
        // keep points strictly inside the half-plane
        Complex64::new(w.re, w.im.max(f64::MIN_POSITIVE))
    }

    /// Image of a boundary point; `None` is the point at infinity.
    pub fn apply_boundary(&self, xi: Option<f64>) -> Option<f64> {
        match xi {
            None => {
                let scale = self.a.abs() + self.b.abs() + self.c.abs() + self.d.abs();
                if self.c.abs() <= 1e-13 * scale {
                    None
                } else {
                    Some(self.a / self.c)
                }
            }
            Some(x) => {
                let den = self.c * x + self.d;
                if den.abs() < 1e-300 {
                    None
                } else {
                    Some((self.a * x + self.b) / den)
                }
            }
        }
    }

    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// The affine map sending `z` to `i`.
    pub fn to_i(z: Complex64) -> Mobius {
        let s = z.im.sqrt();
        Mobius { a: 1.0 / s, b: -z.re / s, c: 0.0, d: s }
    }

    /// Rotation about `i` by `theta` (as seen in the disk model).
    pub fn rotation(theta: f64) -> Mobius {
        let (s, c) = (theta / 2.0).sin_cos();
        Mobius { a: c, b: s, c: -s, d: c }
    }
}

/// Cayley transform to the unit disk, sending `i` to `0`.
pub fn to_disk(z: Complex64) -> Complex64 {
    (z - I) / (z + I)
}

pub fn from_disk(w: Complex64) -> Complex64 {
    I * (1.0 + w) / (1.0 - w)
}

/// An isometry placing a segment `[x, y]` on the imaginary axis as
/// `{ i e^t : 0 <= t <= len }`.
#[derive(Clone, Copy, Debug)]
pub struct SegmentFrame {
    shift: Mobius,
    rot: Complex64,
    pub len: f64,
}

impl SegmentFrame {
    pub fn new(x: Complex64, y: Complex64) -> Self {
        let shift = Mobius::to_i(x);
        let w = to_disk(shift.apply(y));
        let rot = if w.norm() < 1e-300 { Complex64::new(1.0, 0.0) } else { (w / w.norm()).conj() };
        SegmentFrame { shift, rot, len: distance(x, y) }
    }

    /// A frame at `x` pointing at the boundary point `xi` (`None` = infinity).
    pub fn toward(x: Complex64, xi: Option<f64>) -> Self {
        let shift = Mobius::to_i(x);
        let w = match shift.apply_boundary(xi) {
            None => Complex64::new(1.0, 0.0),
            Some(t) => to_disk(Complex64::new(t, 0.0)),
        };
        SegmentFrame { shift, rot: (w / w.norm()).conj(), len: f64::INFINITY }
    }

    pub fn forward(&self, z: Complex64) -> Complex64 {
        let w = from_disk(self.rot * to_disk(self.shift.apply(z)));
        Complex64::new(w.re, w.im.max(f64::MIN_POSITIVE))
    }

    pub fn backward(&self, z: Complex64) -> Complex64 {
        let w = from_disk(self.rot.conj() * to_disk(z));
        self.shift.inverse().apply(Complex64::new(w.re, w.im.max(f64::MIN_POSITIVE)))
    }

    /// Point at arc length `t` from the start.
    pub fn point_at(&self, t: f64) -> Complex64 {
        self.backward(Complex64::new(0.0, t.exp()))
    }

    /// Distance from `p` to the segment (or ray when `len` is infinite).
    pub fn distance_to(&self, p: Complex64) -> f64 {
        let q = self.forward(p);
        let foot = q.norm().ln();
        if foot <= 0.0 {
            distance(q, I)
        } else if foot >= self.len {
            distance(q, Complex64::new(0.0, self.len.exp()))
        } else {
            (q.re.abs() / q.im).asinh()
        }
    }

    /// Arc-length interval of points within `radius` of `p`, clipped to the segment.
    pub fn ball_window(&self, p: Complex64, radius: f64) -> Option<(f64, f64)> {
        let q = self.forward(p);
        // cosh d(i e^t, q) = (|q|^2 e^-t + e^t) / (2 Im q)
        let c = radius.cosh() * q.im;
        let disc = c * c - q.norm_sqr();
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let lo = (c - root).max(f64::MIN_POSITIVE).ln();
        let hi = (c + root).ln();
        clip(lo, hi, self.len)
    }

    /// Arc-length interval inside the horoball `{ Im >= height }` pushed
    /// forward by `m`, clipped to the segment.
    pub fn horoball_window(&self, m: &Mobius, height: f64) -> Option<(f64, f64)> {
        let total = self.compose_with(m);
        let (a, c) = (total.a, total.c);
        if c.abs() < 1e-12 * (a.abs() + 1.0) {
            // horizontal line Im >= height * a^2
            let h = height * a * a;
            return clip(h.ln(), f64::INFINITY, self.len);
        }
        let center = a / c;
        let rho = 1.0 / (2.0 * c * c * height);
        // y^2 - 2 rho y + center^2 <= 0
        let disc = rho * rho - center * center;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let lo = rho - root;
        let hi = rho + root;
        if hi <= 0.0 {
            return None;
        }
        clip(lo.max(f64::MIN_POSITIVE).ln(), hi.ln(), self.len)
    }

    /// Boundary point the segment points at (`None` = infinity).
    pub fn endpoint(&self) -> Option<f64> {
        self.compose_with(&Mobius::IDENTITY).inverse().apply_boundary(None)
    }

    /// The Möbius map `frame ∘ m` as a matrix.
    fn compose_with(&self, m: &Mobius) -> Mobius {
        // disk rotation by `rot` about 0 is the half-plane rotation about i
        let theta = self.rot.arg();
        Mobius::rotation(theta).compose(&self.shift).compose(m)
    }
}

fn clip(lo: f64, hi: f64, len: f64) -> Option<(f64, f64)> {
    let lo = lo.max(0.0);
    let hi = hi.min(len);
    (lo <= hi).then_some((lo, hi))
}

/// Busemann function toward infinity: `lim d(x, z) - d(y, z)` as `z -> infinity`.
pub fn busemann_infinity(x: Complex64, y: Complex64) -> f64 {
    y.im.ln() - x.im.ln()
}

pub fn busemann(xi: Option<f64>, x: Complex64, y: Complex64) -> f64 {
    match xi {
        None => busemann_infinity(x, y),
        Some(t) => {
            // z -> -1 / (z - t) sends t to infinity
            let m = Mobius::new(0.0, -1.0, 1.0, -t);
            busemann_infinity(m.apply(x), m.apply(y))
        }
    }
}
