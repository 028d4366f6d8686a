//! Normally isotropic norms at the trapped set and their duals.

use std::sync::Arc;

use ndarray::Array1;
use ndarray_linalg::cholesky::{CholeskyFactorized, FactorizeC, SolveC};
use ndarray_linalg::UPLO;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::model::{self, ModelSpec};
use crate::phasespace::{symbol, PhaseGrid, Symbol, SymbolField};
use crate::quantize::{weyl_quantize, OperatorMatrix};
use crate::smooth::bump;

/// Condition number of `G` above which a frame is flagged.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Choice of defining functions used for `Q±`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrameVariant {
    Standard,
    /// `φ̃± = c φ±`.
    Scaled(f64),
    /// `φ̃± = φ± + c p`.
    ShiftedByP(f64),
    /// `Q₋` replaced by `Q₊`, so both define `Γ₊`.
    BrokenTransversality,
}

fn radius(x: Dual, xi: Dual) -> Dual {
    (x * x + xi * xi).sqrt()
}

/// `χ_O`: 1 on `O`, 0 beyond `1.5 O_radius`.
pub fn chi_o(o_radius: f64) -> Symbol {
    symbol(move |x, xi| bump(radius(x, xi), o_radius, 1.5 * o_radius))
}

/// `q₀`: 0 within `O_radius/3` of `Γ`, 1 outside `O`.
pub fn q0_symbol(o_radius: f64) -> Symbol {
    symbol(move |x, xi| 1.0 - bump(radius(x, xi), o_radius / 3.0, o_radius))
}

fn q_symbols(model: &ModelSpec, variant: FrameVariant) -> (Symbol, Symbol) {
    let o = model.o_radius;
    let cut = move |x: Dual, xi: Dual| bump(radius(x, xi), o, 1.5 * o);
    let (c, shift) = match variant {
        FrameVariant::Scaled(c) => (c, 0.0),
        FrameVariant::ShiftedByP(s) => (1.0, s),
        _ => (1.0, 0.0),
    };
    let qp = symbol(move |x, xi| (model::phi_plus(x, xi) * c + model::p(x, xi) * shift) * cut(x, xi));
    let qm = symbol(move |x, xi| (model::phi_minus(x, xi) * c + model::p(x, xi) * shift) * cut(x, xi));
    if variant == FrameVariant::BrokenTransversality {
        (Arc::clone(&qp), qp)
    } else {
        (qp, qm)
    }
}

pub struct NormFrame {
    pub h: f64,
    pub grid: PhaseGrid,
    pub q0: OperatorMatrix,
    pub qp: OperatorMatrix,
    pub qm: OperatorMatrix,
    /// `Q₀*Q₀ + Q₊*Q₊ + Q₋*Q₋ + hI`.
    pub g: CMatrix,
    pub sqrt_g: CMatrix,
    /// Eigenvalues of `G`, ascending.
    pub eigenvalues: Array1<f64>,
    pub chol: CholeskyFactorized<ndarray::OwnedRepr<C64>>,
    pub condition: f64,
    pub ill_conditioned: bool,
}

pub fn build_frame(model: &ModelSpec, grid: PhaseGrid) -> Result<NormFrame> {
    build_frame_variant(model, grid, FrameVariant::Standard)
}

pub fn build_frame_variant(model: &ModelSpec, grid: PhaseGrid, variant: FrameVariant) -> Result<NormFrame> {
    linalg::init_blas();
    let inner = model.o_radius / 3.0;
    if inner / grid.dx() < 8.0 {
        return Err(Error::GridTooCoarse(format!(
            "{:.2} nodes across O_radius/3 = {inner}; need 8",
            inner / grid.dx()
        )));
    }
    let (sp, sm) = q_symbols(model, variant);
    let qp = weyl_quantize(&SymbolField::from_closed_form(grid, "phi+ chi_O", sp)?)?;
    let qm = weyl_quantize(&SymbolField::from_closed_form(grid, "phi- chi_O", sm)?)?;
    // q₀ ≡ 1 near the momentum cutoff; a constant does not alias.
    let q0 = weyl_quantize(&SymbolField::from_closed_form(grid, "q0", q0_symbol(model.o_radius))?.unbounded_in_xi())?;

    let h = grid.h;
    let mut g = q0.gram() + qp.gram() + qm.gram();
    for j in 0..grid.n_x {
        g[[j, j]] += h;
    }
    let g = (&g + &linalg::adjoint(&g)).mapv(|z| z * 0.5);
    let (w, v) = linalg::eigh_hermitian(&g)?;
    let sq = w.mapv(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let sqrt_g = (&v * &sq).dot(&linalg::adjoint(&v));
    let chol = g.factorizec(UPLO::Lower)?;
    let condition = w[w.len() - 1] / w[0];
    Ok(NormFrame {
        h,
        grid,
        q0,
        qp,
        qm,
        g,
        sqrt_g,
        eigenvalues: w,
        chol,
        condition,
        ill_conditioned: condition > CONDITION_LIMIT,
    })
}

impl NormFrame {
    fn check_dim(&self, u: &CVector) -> Result<()> {
        if u.len() != self.grid.n_x {
            return Err(Error::Dimension { expected: self.grid.n_x, got: u.len() });
        }
        Ok(())
    }

    /// `√⟨Gu, u⟩`.
    pub fn norm_iso(&self, u: &CVector) -> Result<f64> {
        self.check_dim(u)?;
        Ok(linalg::inner(u, &self.g.dot(u)).re.max(0.0).sqrt())
    }

    /// `√⟨G⁻¹f, f⟩`.
    pub fn norm_iso_dual(&self, f: &CVector) -> Result<f64> {
        self.check_dim(f)?;
        let y = self.chol.solvec(f)?;
        Ok(linalg::inner(f, &y).re.max(0.0).sqrt())
    }

    pub fn solve_g(&self, f: &CVector) -> Result<CVector> {
        Ok(self.chol.solvec(f)?)
    }

    /// Extreme generalized eigenvalues of `G − hI` against `G`.
    pub fn equivalence_constants(&self) -> (f64, f64) {
        let h = self.h;
        let lo = self.eigenvalues[0];
        let hi = self.eigenvalues[self.eigenvalues.len() - 1];
        ((lo - h) / lo, (hi - h) / hi)
    }

    /// Smallest eigenvalue of `G − hI`.
    pub fn min_gram_excess(&self) -> f64 {
        self.eigenvalues[0] - self.h
    }
}

/// `(c_lower, C_upper)` with `c_lower ‖u‖²_G <= ‖u‖²_G − h‖u‖² <= C_upper ‖u‖²_G`.
pub fn check_norm_equivalence(frame: &NormFrame) -> (f64, f64) {
    frame.equivalence_constants()
}

/// Normalized Gaussian of width `√h` centred at `(x0, xi0)`.
pub fn coherent_state(grid: &PhaseGrid, x0: f64, xi0: f64) -> CVector {
    let h = grid.h;
    let v = Array1::from_shape_fn(grid.n_x, |j| {
        let x = grid.x(j);
        C64::from_polar((-(x - x0).powi(2) / (2.0 * h)).exp(), xi0 * x / h)
    });
    let n = linalg::norm(&v);
    v.mapv(|z| z / n)
}

/// `Re⟨i[Q₊, Q₋]v, v⟩` from four matrix-vector products.
pub fn commutator_rayleigh(frame: &NormFrame, v: &CVector) -> f64 {
    let qpv = frame.qp.apply(v);
    let qmv = frame.qm.apply(v);
    let qp_adj_v = frame.qp.apply_adjoint(v);
    let qm_adj_v = frame.qm.apply_adjoint(v);
    let c = linalg::inner(&qp_adj_v, &qmv) - linalg::inner(&qm_adj_v, &qpv);
    (C64::new(0.0, 1.0) * c).re
}
