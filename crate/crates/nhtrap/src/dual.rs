//! Forward-mode dual numbers carrying one directional derivative.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub const ZERO: Dual = Dual { v: 0.0, d: 0.0 };
    pub const ONE: Dual = Dual { v: 1.0, d: 0.0 };

    pub const fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }

    pub const fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }

    pub const fn var(v: f64) -> Self {
        Dual { v, d: 1.0 }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, e * self.d)
    }

    /// Derivative is taken as 0 at the origin.
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let d = if s > 0.0 { self.d / (2.0 * s) } else { 0.0 };
        Dual::new(s, d)
    }

    pub fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::ONE;
        }
        let p = self.v.powi(n - 1);
        Dual::new(p * self.v, n as f64 * p * self.d)
    }

    pub fn powf(self, a: f64) -> Self {
        let p = self.v.powf(a - 1.0);
        Dual::new(p * self.v, a * p * self.d)
    }

    pub fn recip(self) -> Self {
        Dual::new(1.0 / self.v, -self.d / (self.v * self.v))
    }

    pub fn sq(self) -> Self {
        self * self
    }

    pub fn scale(self, c: f64) -> Self {
        Dual::new(c * self.v, c * self.d)
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Dual::constant(v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, c: f64) -> Dual {
        Dual::new(self.v + c, self.d)
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, c: f64) -> Dual {
        Dual::new(self.v - c, self.d)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, c: f64) -> Dual {
        self.scale(c)
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, c: f64) -> Dual {
        Dual::new(self.v / c, self.d / c)
    }
}

impl Add<Dual> for f64 {
    type Output = Dual;
    fn add(self, x: Dual) -> Dual {
        x + self
    }
}

impl Sub<Dual> for f64 {
    type Output = Dual;
    fn sub(self, x: Dual) -> Dual {
        Dual::new(self - x.v, -x.d)
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, x: Dual) -> Dual {
        x.scale(self)
    }
}

impl Div<Dual> for f64 {
    type Output = Dual;
    fn div(self, x: Dual) -> Dual {
        x.recip().scale(self)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    fn mul_assign(&mut self, o: Dual) {
        *self = *self * o;
    }
}
