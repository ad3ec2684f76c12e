//! Double-double helpers.
//!
//! `TwoFloat` division in the version used here is only accurate to about
//! one part in 10¹⁷, which is no better than `f64` once quotients feed high
//! order differences. Quotients are therefore refined by long division
//! against the exact `TwoFloat × f64` product.

use twofloat::TwoFloat;

/// `a / b` to double-double accuracy.
pub fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

pub fn recip(b: TwoFloat) -> TwoFloat {
    div(TwoFloat::from(1.0), b)
}

/// `x^n` by repeated squaring; negative powers take one accurate reciprocal.
pub fn powi(x: TwoFloat, n: i32) -> TwoFloat {
    let mut base = x;
    let mut e = n.unsigned_abs();
    let mut acc = TwoFloat::from(1.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if n < 0 {
        recip(acc)
    } else {
        acc
    }
}
