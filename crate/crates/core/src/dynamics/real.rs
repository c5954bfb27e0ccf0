//! Scalar abstraction so the dynamics recursions run on plain floats or on
//! forward-mode dual numbers without duplication.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(v: f64) -> Self;
    /// Primal part (drops any derivative payload).
    fn re(self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn abs(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn re(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// First-order dual number: carries one derivative channel alongside the value.
#[derive(Clone, Copy, Debug)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub fn new(re: f64, du: f64) -> Self {
        Self { re, du }
    }

    pub fn constant(re: f64) -> Self {
        Self { re, du: 0.0 }
    }

    /// The variable being differentiated: derivative channel seeded to 1.
    pub fn seed(re: f64) -> Self {
        Self { re, du: 1.0 }
    }
}

// Ordering and equality intentionally compare primal parts only, so branch
// conditions inside generic code follow the f64 execution path exactly.
impl PartialEq for Dual {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re
    }
}

impl PartialOrd for Dual {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.du + o.du)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.du - o.du)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.du * o.re + self.re * o.du)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Self::new(
            self.re / o.re,
            (self.du * o.re - self.re * o.du) / (o.re * o.re),
        )
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.du)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl Real for Dual {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self::new(s, self.du / (2.0 * s))
    }
    fn sin(self) -> Self {
        Self::new(self.re.sin(), self.du * self.re.cos())
    }
    fn cos(self) -> Self {
        Self::new(self.re.cos(), -self.du * self.re.sin())
    }
    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagates_chain_rule() {
        // f(x) = sin(x^2) / (x + 1), f'(x) = (2x cos(x^2)(x+1) - sin(x^2)) / (x+1)^2
        let x = 0.7;
        let d = Dual::seed(x);
        let f = (d * d).sin() / (d + Dual::constant(1.0));
        let expect = (2.0 * x * (x * x).cos() * (x + 1.0) - (x * x).sin()) / ((x + 1.0) * (x + 1.0));
        assert!((f.re - (x * x).sin() / (x + 1.0)).abs() < 1e-15);
        assert!((f.du - expect).abs() < 1e-12, "{} vs {expect}", f.du);
    }

    #[test]
    fn sqrt_and_abs_derivatives() {
        let d = Dual::seed(4.0).sqrt();
        assert_eq!(d.re, 2.0);
        assert!((d.du - 0.25).abs() < 1e-15);
        let a = Dual::seed(-3.0).abs();
        assert_eq!(a.re, 3.0);
        assert_eq!(a.du, -1.0);
    }

    #[test]
    fn ordering_ignores_derivative() {
        assert!(Dual::new(1.0, 100.0) < Dual::new(2.0, -100.0));
        assert_eq!(Dual::new(1.0, 5.0), Dual::new(1.0, -5.0));
    }
}
