//! Smooth cutoff building blocks shared by the model and the commutant.

use crate::dual::Dual;

/// Past this exponent `e^{-q}` underflows anyway.
const Q_MAX: f64 = 700.0;

/// `e^{-F/t}` for `t > 0`, zero otherwise.
pub fn chi0(t: Dual, f: f64) -> Dual {
    if t.v <= 0.0 {
        Dual::ZERO
    } else {
        (-(f / t)).exp()
    }
}

pub fn chi0_val(t: f64, f: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-f / t).exp()
    }
}

/// `χ₀χ₀′ = F χ₀² / t²`.
pub fn chi0_chi0p(t: f64, f: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        let c = chi0_val(t, f);
        f * c * c / (t * t)
    }
}

/// Smooth square root of `χ₀χ₀′`, i.e. `√F χ₀ / t`.
pub fn sqrt_chi0_chi0p(t: f64, f: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        f.sqrt() * chi0_val(t, f) / t
    }
}

/// `√(χ₀χ₀′)` as a dual number.
pub fn sqrt_chi0_chi0p_dual(t: Dual, f: f64) -> Dual {
    if t.v <= 0.0 {
        Dual::ZERO
    } else {
        chi0(t, f) * f.sqrt() / t
    }
}

/// Smooth transition from 0 at `t <= 0` to 1 at `t >= 1`.
pub fn smoothstep(t: Dual) -> Dual {
    let a = chi0(t, 1.0);
    if a.v == 0.0 {
        return Dual::ZERO;
    }
    let b = chi0(1.0 - t, 1.0);
    if b.v == 0.0 {
        return Dual::ONE;
    }
    a / (a + b)
}

/// Radial bump: 1 for `r <= r0`, 0 for `r >= r1`.
pub fn bump(r: Dual, r0: f64, r1: f64) -> Dual {
    1.0 - smoothstep((r - r0) / (r1 - r0))
}

/// Cutoff equal to 1 on `[0, r0]`, vanishing on `[r, ∞)`, written as `exp(-q)`
/// with `q = e^{-1/(t-r0)} / (r - t)` in between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    pub r0: f64,
    pub r: f64,
}

impl Plateau {
    pub fn new(r0: f64, r: f64) -> Self {
        Plateau { r0, r }
    }

    fn q(&self, t: Dual) -> Option<Dual> {
        if t.v <= self.r0 {
            Some(Dual::ZERO)
        } else if t.v >= self.r {
            None
        } else {
            let s = t - self.r0;
            let q = (-s.recip()).exp() / (self.r - t);
            (q.v <= Q_MAX).then_some(q)
        }
    }

    pub fn eval(&self, t: Dual) -> Dual {
        match self.q(t) {
            Some(q) => (-q).exp(),
            None => Dual::ZERO,
        }
    }

    pub fn val(&self, t: f64) -> f64 {
        self.eval(Dual::constant(t)).v
    }

    /// `q′(t) = e^{-1/s} (1/(s²(r-t)) + 1/(r-t)²)`, `s = t - r0`.
    pub fn q_prime(&self, t: Dual) -> Dual {
        if t.v <= self.r0 || t.v >= self.r {
            return Dual::ZERO;
        }
        let s = t - self.r0;
        let w = self.r - t;
        (-s.recip()).exp() * ((s * s * w).recip() + (w * w).recip())
    }

    /// `χ₁ = √q′ e^{-q}`, so that `χ′χ = -χ₁²`.
    pub fn chi1(&self, t: Dual) -> Dual {
        match self.q(t) {
            Some(q) => self.q_prime(t).sqrt() * (-q).exp(),
            None => Dual::ZERO,
        }
    }

    pub fn chi1_val(&self, t: f64) -> f64 {
        self.chi1(Dual::constant(t)).v
    }

    /// The same profile applied to `|t|`.
    pub fn even(&self, t: Dual) -> Dual {
        self.eval(t.abs())
    }
}
