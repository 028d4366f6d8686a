//! The inverted harmonic oscillator `p = ξ² − x²` with complex absorption.

use crate::dual::Dual;
use crate::phasespace::{symbol, PhaseGrid, Symbol, SymbolField};
use crate::error::Result;
use crate::smooth::chi0_val;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsorbingPotential {
    pub x_abs: f64,
    pub width: f64,
    pub strength: f64,
}

impl AbsorbingPotential {
    /// `w(x) = strength · χ₀((|x| − x_abs)/width)`.
    pub fn new(x_abs: f64, width: f64, strength: f64) -> Result<Self> {
        use crate::error::Error::InvalidParameter;
        if !(x_abs > 0.0 && width > 0.0 && strength > 0.0) {
            return Err(InvalidParameter(format!(
                "absorber needs positive x_abs, width, strength; got {x_abs}, {width}, {strength}"
            )));
        }
        Ok(AbsorbingPotential { x_abs, width, strength })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.strength * chi0_val((x.abs() - self.x_abs) / self.width, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub c_plus_sq: f64,
    pub c_minus_sq: f64,
    pub absorb: AbsorbingPotential,
    pub o_radius: f64,
    pub energy_width: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        inverted_oscillator()
    }
}

pub fn inverted_oscillator() -> ModelSpec {
    ModelSpec {
        c_plus_sq: 2.0,
        c_minus_sq: 2.0,
        absorb: AbsorbingPotential { x_abs: 2.0, width: 1.0, strength: 10.0 },
        o_radius: 0.75,
        energy_width: 0.5,
    }
}

pub fn p(x: Dual, xi: Dual) -> Dual {
    xi * xi - x * x
}

/// Defining function of `Γ₊ = {ξ = x}`.
pub fn phi_plus(x: Dual, xi: Dual) -> Dual {
    xi - x
}

/// Defining function of `Γ₋ = {ξ = −x}`.
pub fn phi_minus(x: Dual, xi: Dual) -> Dual {
    xi + x
}

impl ModelSpec {
    pub fn p_symbol(&self) -> Symbol {
        symbol(p)
    }

    pub fn phi_plus_symbol(&self) -> Symbol {
        symbol(phi_plus)
    }

    pub fn phi_minus_symbol(&self) -> Symbol {
        symbol(phi_minus)
    }

    pub fn p_field(&self, grid: PhaseGrid) -> Result<SymbolField> {
        Ok(SymbolField::from_closed_form(grid, "p", self.p_symbol())?.unbounded_in_xi())
    }

    pub fn absorbing_potential(&self) -> AbsorbingPotential {
        self.absorb
    }

    /// Closed-form solution of the Hamilton flow of `p`.
    pub fn exact_flow(&self, (x0, xi0): (f64, f64), t: f64) -> (f64, f64) {
        exact_flow((x0, xi0), t)
    }
}

pub fn exact_flow((x0, xi0): (f64, f64), t: f64) -> (f64, f64) {
    let (c, s) = ((2.0 * t).cosh(), (2.0 * t).sinh());
    (x0 * c + xi0 * s, xi0 * c + x0 * s)
}
