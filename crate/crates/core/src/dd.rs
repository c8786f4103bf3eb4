//! Double-double arithmetic: an unevaluated sum of two f64 giving ~31
//! significant digits.
//!
//! Used where plain f64 loses accuracy to cancellation (the Airy Maclaurin
//! series summed at moderate |x|) and where a value must be identical across
//! platforms regardless of libm (the stored inverse temperature n^(-alpha)).
//! Algorithms are the classical error-free transformations of Dekker and
//! Knuth; no FMA is assumed.

/// Unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = 134_217_729.0 * a; // 2^27 + 1
    let hi = t - (t - a);
    let lo = a - hi;
    (hi, lo)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    (p, err)
}

#[allow(clippy::should_implement_trait)]
impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision (hi limb of the split).
    #[allow(clippy::approx_constant)]
    pub const LN_2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };

    #[inline]
    pub fn from_f64(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.to_f64().abs()
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn add_f64(self, other: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, other);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, other: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, other);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * other);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul_f64(q2));
        let q3 = r.hi / other.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add_f64(q3)
    }

    #[inline]
    pub fn div_f64(self, other: f64) -> Dd {
        self.div(Dd::from_f64(other))
    }

    /// exp(self), accurate to double-double precision for |self| <= ~700.
    pub fn exp(self) -> Dd {
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let m = (self.hi / std::f64::consts::LN_2).round();
        let r = self.sub(Dd::LN_2.mul_f64(m));
        // Taylor series of e^r, |r| <= ln2/2; 26 terms reach ~1e-35.
        let mut sum = Dd::ONE;
        let mut term = Dd::ONE;
        for k in 1..=26 {
            term = term.mul(r).div_f64(k as f64);
            sum = sum.add(term);
            if term.abs() < 1e-35 * sum.abs() {
                break;
            }
        }
        let scale = f64::powi(2.0, m as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    /// Natural log; one Newton step from the f64 value reaches dd precision.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "dd ln of non-positive value");
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            // y += x * exp(-y) - 1
            let e = y.neg().exp();
            y = y.add(self.mul(e).add_f64(-1.0));
        }
        y
    }
}

/// n^(-alpha) evaluated in double-double and rounded once to f64.
///
/// This is the stored inverse temperature: identical on every platform, with
/// all downstream formulas reusing the rounded value.
pub fn pow_neg(n: u64, alpha: f64) -> f64 {
    assert!(n >= 1);
    if alpha == 0.0 {
        return 1.0;
    }
    let ln_n = Dd::from_f64(n as f64).ln();
    ln_n.mul_f64(-alpha).exp().to_f64()
}
