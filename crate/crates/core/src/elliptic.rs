//! Complete and incomplete elliptic integrals, Jacobi functions, and the
//! corner-normalised conformal map between a rectangle and the upper half
//! plane.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Arithmetic–geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    0.5 * (a + b)
}

/// A modulus together with its complement, so that whichever of the two is
/// small is carried at full relative precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulus {
    pub k: f64,
    pub kp: f64,
}

impl Modulus {
    pub fn from_k(k: f64) -> Self {
        Modulus { k, kp: ((1.0 - k) * (1.0 + k)).sqrt() }
    }

    pub fn from_kp(kp: f64) -> Self {
        Modulus { k: ((1.0 - kp) * (1.0 + kp)).sqrt(), kp }
    }

    pub fn complement(self) -> Self {
        Modulus { k: self.kp, kp: self.k }
    }

    /// Complete integral `K(k)`.
    pub fn big_k(self) -> f64 {
        FRAC_PI_2 / agm(1.0, self.kp)
    }

    /// Complementary integral `K'(k) = K(k')`.
    pub fn big_kp(self) -> f64 {
        FRAC_PI_2 / agm(1.0, self.k)
    }
}

/// Carlson's symmetric integral `R_F(x, y, z)`.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    let (mut x, mut y, mut z) = (x, y, z);
    for _ in 0..100 {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sy * sz + sz * sx;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let mu = (x + y + z) / 3.0;
        let tol = [x, y, z].iter().map(|v| ((mu - v) / mu).abs()).fold(0.0, f64::max);
        if tol < 1e-4 {
            // Fifth-order tail of the duplication expansion.
            let (dx, dy, dz) = (1.0 - x / mu, 1.0 - y / mu, 1.0 - z / mu);
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / mu.sqrt();
        }
    }
    let mu = (x + y + z) / 3.0;
    1.0 / mu.sqrt()
}

/// Incomplete integral of the first kind `F(φ, k)` for `|φ| ≤ π/2`.
pub fn incomplete_f(phi: f64, m: Modulus) -> f64 {
    let (s, c) = phi.sin_cos();
    s * carlson_rf(c * c, (1.0 - m.k * s) * (1.0 + m.k * s), 1.0)
}

/// Jacobi `(sn, cn, dn)(u, k)` by descending Landen (AGM) transformation.
pub fn jacobi_sn_cn_dn(u: f64, m: Modulus) -> (f64, f64, f64) {
    if m.k < 1e-300 {
        return (u.sin(), u.cos(), 1.0);
    }
    let mut a = vec![1.0];
    let mut c = vec![m.k];
    let mut b = m.kp;
    while c.last().unwrap().abs() > 1e-16 && a.len() < 40 {
        let an = *a.last().unwrap();
        let nb = (an * b).sqrt();
        c.push(0.5 * (an - b));
        a.push(0.5 * (an + b));
        b = nb;
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let (s, co) = phi.sin_cos();
    // dn² = k'² + k² cn² stays accurate where cn and dn are both small.
    let dn = (m.kp * m.kp + m.k * m.k * co * co).sqrt();
    (s, co, dn)
}

/// Aspect ratio `2K/K'` of the rectangle that is the image of the half plane
/// with corners at `±1, ±1/k`.
pub fn aspect_of(m: Modulus) -> f64 {
    2.0 * agm(1.0, m.k) / agm(1.0, m.kp)
}

/// Modulus whose rectangle has width `l` and height 1.
///
/// Bisection on the logarithm of the smaller of `k`, `k'`, which keeps
/// relative precision for very long or very thin rectangles.
pub fn modulus_for_aspect(l: f64) -> Result<Modulus> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Numerical(format!("aspect {l} must be positive and finite")));
    }
    let wide = l >= 1.0;
    let build = |t: f64| if wide { Modulus::from_kp(t.exp()) } else { Modulus::from_k(t.exp()) };
    let (mut lo, mut hi) = (-700.0f64, 0.0f64);
    let f = |t: f64| aspect_of(build(t)) - l;
    // For wide rectangles the aspect decreases in k', for thin ones it grows in k.
    let sign = if wide { -1.0 } else { 1.0 };
    if sign * f(lo) > 0.0 || sign * f(hi) < 0.0 {
        return Err(Error::Numerical(format!("aspect {l} outside the bracket")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sign * f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    if hi - lo >= 1e-12 {
        return Err(Error::Numerical("modulus bisection did not converge".into()));
    }
    Ok(build(0.5 * (lo + hi)))
}

/// Cross-ratio `((1 − k)/(1 + k))²` of the corner images `−1/k, −1, 1, 1/k`,
/// written through `k'` to avoid cancellation.
pub fn corner_cross_ratio(m: Modulus) -> f64 {
    let r = m.kp * m.kp / ((1.0 + m.k) * (1.0 + m.k));
    r * r
}

/// Perimeter of the rectangle `[0, l] × [0, 1]`.
pub fn perimeter(l: f64) -> f64 {
    2.0 * l + 2.0
}

/// Point of `∂R_l` at counterclockwise arc length `s` from the origin.
pub fn boundary_point(l: f64, s: f64) -> (f64, f64) {
    let s = s.rem_euclid(perimeter(l));
    if s <= l {
        (s, 0.0)
    } else if s <= l + 1.0 {
        (l, s - l)
    } else if s <= 2.0 * l + 1.0 {
        (l - (s - l - 1.0), 1.0)
    } else {
        (0.0, 1.0 - (s - 2.0 * l - 1.0))
    }
}

/// Image of a boundary point under the corner map, as an angle `θ` modulo
/// `π` with `w = tan θ`; the top side passes through `w = ∞`.
pub fn boundary_angle(l: f64, m: Modulus, s: f64) -> f64 {
    let s = s.rem_euclid(perimeter(l));
    let (kk, kkp) = (m.big_k(), m.big_kp());
    let scale = kkp; // height 1 maps to K'
    let (num, den) = if s <= l {
        let (sn, _, _) = jacobi_sn_cn_dn(s * scale - kk, m);
        (sn, 1.0)
    } else if s <= l + 1.0 {
        let (_, _, dn) = jacobi_sn_cn_dn((s - l) * scale, m.complement());
        (1.0, dn)
    } else if s <= 2.0 * l + 1.0 {
        let x = l - (s - l - 1.0);
        let (sn, _, _) = jacobi_sn_cn_dn(x * scale - kk, m);
        (1.0, m.k * sn)
    } else {
        let y = 1.0 - (s - 2.0 * l - 1.0);
        let (_, _, dn) = jacobi_sn_cn_dn(y * scale, m.complement());
        (-1.0, dn)
    };
    num.atan2(den).rem_euclid(PI)
}

/// Inverse of the corner map on the real line: the arc length of the
/// boundary point sent to `w`.
pub fn halfplane_to_boundary(l: f64, m: Modulus, w: f64) -> f64 {
    let (kk, kkp) = (m.big_k(), m.big_kp());
    let scale = kkp;
    let aw = w.abs();
    if aw <= 1.0 {
        let u = incomplete_f(w.asin(), m);
        (u + kk) / scale
    } else if aw * m.k <= 1.0 {
        // dn(t, k') = 1/|w|  ⇔  sn(t, k') = sqrt(1 − 1/w²)/k'
        let sn = ((1.0 - 1.0 / (w * w)).sqrt() / m.kp).min(1.0);
        let t = incomplete_f(sn.asin(), m.complement()) / scale;
        if w > 0.0 {
            l + t
        } else {
            perimeter(l) - t
        }
    } else {
        let u = incomplete_f((1.0 / (m.k * w)).asin(), m);
        let x = (u + kk) / scale;
        2.0 * l + 1.0 - x
    }
}
