//! Outward-rounded interval arithmetic on fixed-point big integers.
//!
//! An [`Interval`] with precision `p` encloses every real in
//! `[lo / 2^p, hi / 2^p]`. Each operation rounds `lo` down and `hi` up, so a
//! true value computed through any chain of operations stays enclosed.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParamError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    p: u32,
}

fn pow2(s: u32) -> BigInt {
    BigInt::one() << s
}

fn floor_shr(x: &BigInt, s: u32) -> BigInt {
    x.div_floor(&pow2(s))
}

fn ceil_shr(x: &BigInt, s: u32) -> BigInt {
    -((-x).div_floor(&pow2(s)))
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

impl Interval {
    pub fn exact(v: &BigInt, p: u32) -> Self {
        let m = v << p;
        Interval { lo: m.clone(), hi: m, p }
    }

    pub fn from_u64(v: u64, p: u32) -> Self {
        Self::exact(&BigInt::from(v), p)
    }

    pub fn from_ratio(r: &BigRational, p: u32) -> Self {
        let num = r.numer() << p;
        Interval { lo: floor_div(&num, r.denom()), hi: ceil_div(&num, r.denom()), p }
    }

    pub fn precision(&self) -> u32 {
        self.p
    }

    pub fn lo(&self) -> BigRational {
        BigRational::new(self.lo.clone(), pow2(self.p))
    }

    pub fn hi(&self) -> BigRational {
        BigRational::new(self.hi.clone(), pow2(self.p))
    }

    pub fn mid_f64(&self) -> f64 {
        let sum: BigInt = &self.lo + &self.hi;
        ratio_to_f64(&sum, &pow2(self.p + 1))
    }

    pub fn width_f64(&self) -> f64 {
        ratio_to_f64(&(&self.hi - &self.lo), &pow2(self.p))
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// `Some(ordering)` when the intervals are disjoint, `None` if they overlap.
    pub fn cmp_strict(&self, other: &Interval) -> Option<Ordering> {
        debug_assert_eq!(self.p, other.p);
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    /// Lower bound rounded down to a multiple of `2^-bits`, scaled by `2^bits`.
    pub fn floor_scaled(&self, bits: u32) -> BigInt {
        assert!(bits <= self.p);
        floor_shr(&self.lo, self.p - bits)
    }

    /// The ceiling of the enclosed value, if the interval determines it.
    pub fn ceil_exact(&self) -> Option<BigInt> {
        let a = ceil_shr(&self.lo, self.p);
        let b = ceil_shr(&self.hi, self.p);
        // lo lying exactly on an integer would leave ceil ambiguous.
        let lo_on_integer = (&self.lo % pow2(self.p)).is_zero();
        (a == b && !lo_on_integer).then_some(a)
    }

    fn widen(mut self, w: &BigInt) -> Self {
        self.lo -= w;
        self.hi += w;
        self
    }

    fn mag(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn neg(&self) -> Self {
        Interval { lo: -&self.hi, hi: -&self.lo, p: self.p }
    }

    pub fn add(&self, o: &Interval) -> Self {
        debug_assert_eq!(self.p, o.p);
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, p: self.p }
    }

    pub fn sub(&self, o: &Interval) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Interval) -> Self {
        debug_assert_eq!(self.p, o.p);
        let (lo, hi) = if !self.lo.is_negative() && !o.lo.is_negative() {
            (&self.lo * &o.lo, &self.hi * &o.hi)
        } else {
            let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
            (c.iter().min().unwrap().clone(), c.iter().max().unwrap().clone())
        };
        Interval { lo: floor_shr(&lo, self.p), hi: ceil_shr(&hi, self.p), p: self.p }
    }

    /// Exact multiplication by an integer.
    pub fn mul_int(&self, k: &BigInt) -> Self {
        let (a, b) = (&self.lo * k, &self.hi * k);
        if k.is_negative() {
            Interval { lo: b, hi: a, p: self.p }
        } else {
            Interval { lo: a, hi: b, p: self.p }
        }
    }

    pub fn div(&self, o: &Interval) -> Result<Self, ParamError> {
        debug_assert_eq!(self.p, o.p);
        if o.contains_zero() {
            return Err(ParamError::Inconclusive { what: "division by an interval containing 0".into(), bits: self.p });
        }
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for a in [&self.lo, &self.hi] {
            let num = a << self.p;
            for b in [&o.lo, &o.hi] {
                let f = floor_div(&num, b);
                let c = ceil_div(&num, b);
                lo = Some(lo.map_or(f.clone(), |x| x.min(f)));
                hi = Some(hi.map_or(c.clone(), |x| x.max(c)));
            }
        }
        Ok(Interval { lo: lo.unwrap(), hi: hi.unwrap(), p: self.p })
    }

    /// Division by `2^s`.
    pub fn shr(&self, s: u32) -> Self {
        Interval { lo: floor_shr(&self.lo, s), hi: ceil_shr(&self.hi, s), p: self.p }
    }

    pub fn shl(&self, s: u32) -> Self {
        Interval { lo: &self.lo << s, hi: &self.hi << s, p: self.p }
    }

    pub fn sqrt(&self) -> Result<Self, ParamError> {
        if self.lo.is_negative() {
            return Err(ParamError::Inconclusive { what: "square root of a negative".into(), bits: self.p });
        }
        let lo = (&self.lo << self.p).sqrt();
        let hs = &self.hi << self.p;
        let mut hi = hs.sqrt();
        if &hi * &hi < hs {
            hi += 1;
        }
        Ok(Interval { lo, hi, p: self.p })
    }

    /// `e^x` for `|x| <= 1/2` by Taylor series with a tail bound.
    fn exp_small(&self) -> Self {
        let one = pow2(self.p);
        let mut sum = Interval { lo: one.clone(), hi: one, p: self.p };
        let mut term = sum.clone();
        for i in 1u64.. {
            term = term.mul(self).div_u64(i);
            sum = sum.add(&term);
            let m = term.mag();
            if m.bits() <= 2 {
                // Remaining terms sum to at most |term| since |x| <= 1/2.
                return sum.widen(&(m + 1));
            }
        }
        unreachable!()
    }

    fn div_u64(&self, d: u64) -> Self {
        let d = BigInt::from(d);
        Interval { lo: floor_div(&self.lo, &d), hi: ceil_div(&self.hi, &d), p: self.p }
    }

    pub fn exp(&self) -> Self {
        let mag_bits = self.mag().bits() as i64;
        let j = (mag_bits - (self.p as i64 - 1)).max(0) as u32;
        let mut e = self.shr(j).exp_small();
        for _ in 0..j {
            e = e.mul(&e);
        }
        e
    }

    /// `atanh(z)` for `|z| <= 1/3`.
    fn atanh_small(&self) -> Self {
        let z2 = self.mul(self);
        let mut pow = self.clone();
        let mut sum = self.clone();
        for i in 1u64.. {
            pow = pow.mul(&z2);
            let term = pow.div_u64(2 * i + 1);
            sum = sum.add(&term);
            let m = term.mag();
            if m.bits() <= 2 {
                return sum.widen(&(m + 1));
            }
        }
        unreachable!()
    }

    pub fn ln2(p: u32) -> Self {
        let third = Interval::from_ratio(&BigRational::new(BigInt::one(), BigInt::from(3)), p);
        third.atanh_small().shl(1)
    }

    pub fn ln(&self) -> Result<Self, ParamError> {
        if !self.lo.is_positive() {
            return Err(ParamError::Inconclusive { what: "logarithm of a non-positive".into(), bits: self.p });
        }
        // Scale into [1, 2) using the lower endpoint's magnitude.
        let e = self.lo.bits() as i64 - 1 - self.p as i64;
        let f = if e >= 0 { self.shr(e as u32) } else { self.shl((-e) as u32) };
        let one = Interval::from_u64(1, self.p);
        let z = f.sub(&one).div(&f.add(&one))?;
        let base = z.atanh_small().shl(1);
        Ok(base.add(&Interval::ln2(self.p).mul_int(&BigInt::from(e))))
    }

    /// `x^y` for `x > 0`.
    pub fn pow(&self, y: &Interval) -> Result<Self, ParamError> {
        Ok(self.ln()?.mul(y).exp())
    }

    pub fn e(p: u32) -> Self {
        Interval::from_u64(1, p).exp()
    }

    /// Machin's formula.
    pub fn pi(p: u32) -> Self {
        fn atan_inv(q: u64, p: u32) -> Interval {
            let x = Interval::from_ratio(&BigRational::new(BigInt::one(), BigInt::from(q)), p);
            let x2 = x.mul(&x);
            let mut pow = x.clone();
            let mut sum = x;
            for i in 1u64.. {
                pow = pow.mul(&x2);
                let term = pow.div_u64(2 * i + 1);
                sum = if i % 2 == 1 { sum.sub(&term) } else { sum.add(&term) };
                let m = term.mag();
                if m.bits() <= 2 {
                    return sum.widen(&(m + 1));
                }
            }
            unreachable!()
        }
        atan_inv(5, p).mul_int(&BigInt::from(16)).sub(&atan_inv(239, p).mul_int(&BigInt::from(4)))
    }
}

/// Nearest-ish `f64` to `num / den` for big operands.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let neg = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
    let (n, d) = (num.abs(), den.abs());
    let shift = 64 + d.bits() as i64 - n.bits() as i64;
    let q = if shift >= 0 { (n << shift as u64) / d } else { n / (d << (-shift) as u64) };
    let v = q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(shift as i32));
    if neg {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 192;

    fn close(i: &Interval, v: f64) {
        assert!((i.mid_f64() - v).abs() < 1e-15 * v.abs().max(1.0), "{} vs {v}", i.mid_f64());
        assert!(i.width_f64() < 1e-40, "width {}", i.width_f64());
    }

    #[test]
    fn constants() {
        close(&Interval::pi(P), std::f64::consts::PI);
        close(&Interval::e(P), std::f64::consts::E);
        close(&Interval::ln2(P), std::f64::consts::LN_2);
    }

    #[test]
    fn functions() {
        let x = Interval::from_ratio(&BigRational::new(BigInt::from(-1), BigInt::from(50)), P);
        close(&x.exp(), (-0.02f64).exp());
        close(&Interval::from_u64(1000, P).ln().unwrap(), 1000f64.ln());
        close(&Interval::from_ratio(&BigRational::new(BigInt::from(3), BigInt::from(7)), P).ln().unwrap(), (3.0f64 / 7.0).ln());
        close(&Interval::from_u64(2, P).sqrt().unwrap(), std::f64::consts::SQRT_2);
        close(&Interval::from_u64(10, P).exp(), 10f64.exp());
        let third = Interval::from_ratio(&BigRational::new(BigInt::from(4), BigInt::from(3)), P);
        close(&Interval::from_ratio(&BigRational::new(BigInt::from(97), BigInt::from(100)), P).pow(&third).unwrap(), 0.97f64.powf(4.0 / 3.0));
    }

    #[test]
    fn pi_encloses_known_digits() {
        // 3.14159265358979323846264338327950288419716939937510
        let digits = BigInt::parse_bytes(b"314159265358979323846264338327950288419716939937510", 10).unwrap();
        let scale = BigInt::from(10u8).pow(50);
        let lo = BigRational::new(digits.clone(), scale.clone());
        let hi = BigRational::new(digits + 1, scale);
        let pi = Interval::pi(P);
        assert!(pi.lo() >= lo && pi.hi() <= hi);
    }

    #[test]
    fn ceil_needs_a_determined_interval() {
        let x = Interval::from_ratio(&BigRational::new(BigInt::from(7), BigInt::from(2)), 64);
        assert_eq!(x.ceil_exact(), Some(BigInt::from(4)));
        assert_eq!(Interval::from_u64(3, 64).ceil_exact(), None);
    }

    #[test]
    fn ratio_conversion() {
        assert_eq!(ratio_to_f64(&BigInt::from(1), &BigInt::from(4)), 0.25);
        let big = BigInt::one() << 5000u32;
        assert!((ratio_to_f64(&(&big / 3), &big) - 1.0 / 3.0).abs() < 1e-15);
    }
}
