//! Escape-function commutant near the trapped set and its sum-of-squares form.

use std::io::Write;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::model::{self, ModelSpec};
use crate::phasespace::{gradient, hamilton_derivative, symbol, PhaseGrid, Symbol, SymbolField};
use crate::quantize::{weyl_quantize, OperatorMatrix};
use ndarray_linalg::{EigValsh, UPLO};
use crate::smooth::{self, Plateau};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFamily {
    pub kappa: f64,
    pub r: f64,
    pub f: f64,
    pub psi_width: f64,
    pub r0: f64,
}

impl Default for CutoffFamily {
    fn default() -> Self {
        CutoffFamily { kappa: 0.05, r: 0.25, f: 1.0, psi_width: 0.5, r0: 0.125 }
    }
}

pub fn build_cutoffs(kappa: f64, r: f64, f: f64, psi_width: f64) -> Result<CutoffFamily> {
    build_cutoffs_with_plateau(kappa, r, f, psi_width, r / 2.0)
}

pub fn build_cutoffs_with_plateau(kappa: f64, r: f64, f: f64, psi_width: f64, r0: f64) -> Result<CutoffFamily> {
    if !(kappa > 0.0 && r > 0.0 && f > 0.0 && psi_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoffs need positive kappa, R, F, psi_width; got {kappa}, {r}, {f}, {psi_width}"
        )));
    }
    if !(r0 > 0.0 && r0 < r) {
        return Err(Error::InvalidParameter(format!("plateau edge R0 = {r0} must lie in (0, R = {r})")));
    }
    Ok(CutoffFamily { kappa, r, f, psi_width, r0 })
}

impl CutoffFamily {
    pub fn chi_profile(&self) -> Plateau {
        Plateau::new(self.r0, self.r)
    }

    pub fn psi_profile(&self) -> Plateau {
        Plateau::new(self.psi_width / 2.0, self.psi_width)
    }

    pub fn chi0(&self, t: Dual) -> Dual {
        smooth::chi0(t, self.f)
    }

    pub fn chi(&self, t: Dual) -> Dual {
        self.chi_profile().eval(t)
    }

    pub fn chi1(&self, t: Dual) -> Dual {
        self.chi_profile().chi1(t)
    }

    pub fn psi(&self, t: Dual) -> Dual {
        self.psi_profile().even(t)
    }

    pub fn sqrt_chi0_chi0p(&self, t: Dual) -> Dual {
        smooth::sqrt_chi0_chi0p_dual(t, self.f)
    }

    /// Largest `|χ′χ + χ₁²|` over `samples` points of `[0, 1.2R]`.
    pub fn identity_defect(&self, samples: usize) -> f64 {
        let c = self.chi_profile();
        (0..=samples)
            .map(|k| {
                let t = 1.2 * self.r * k as f64 / samples as f64;
                let d = c.eval(Dual::var(t));
                (d.d * d.v + c.chi1_val(t).powi(2)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Radius `√((2R + κ)/2)` of the smallest disc containing `supp a`.
    pub fn support_radius(&self) -> f64 {
        ((2.0 * self.r + self.kappa) / 2.0).sqrt()
    }
}

/// The commutant pieces in the coordinates `(φ₊, φ₋, p)`.
#[derive(Clone, Copy, Debug)]
pub struct CommutantFormulas {
    pub cut: CutoffFamily,
    pub c_plus_sq: f64,
}

impl CommutantFormulas {
    fn arg(&self, pp: Dual, pm: Dual) -> Dual {
        pp * pp - pm * pm + self.cut.kappa
    }

    pub fn a(&self, pp: Dual, pm: Dual, p: Dual) -> Dual {
        let c = &self.cut;
        c.chi0(self.arg(pp, pm)) * c.chi(pp * pp) * c.psi(p)
    }

    fn common(&self, pp: Dual, pm: Dual, p: Dual) -> Dual {
        let c = &self.cut;
        c.sqrt_chi0_chi0p(self.arg(pp, pm)) * c.chi(pp * pp) * c.psi(p)
    }

    pub fn a_plus(&self, pp: Dual, pm: Dual, p: Dual) -> Dual {
        pp * self.common(pp, pm, p)
    }

    pub fn a_minus(&self, pp: Dual, pm: Dual, p: Dual) -> Dual {
        pm * self.common(pp, pm, p)
    }

    pub fn e_minus(&self, pp: Dual, pm: Dual, p: Dual) -> Dual {
        let c = &self.cut;
        pp * self.c_plus_sq.sqrt() * c.chi1(pp * pp) * c.chi0(self.arg(pp, pm)) * c.psi(p)
    }

    /// `¼H_p(a²)` using only `H_pφ± = ∓c±²φ±` and `H_p p = 0`.
    pub fn quarter_hp_a_sq(&self, pp: f64, pm: f64, p: f64, c_plus_sq: f64, c_minus_sq: f64) -> f64 {
        let a = self.a(
            Dual::new(pp, -c_plus_sq * pp),
            Dual::new(pm, c_minus_sq * pm),
            Dual::constant(p),
        );
        0.5 * a.v * a.d
    }
}

fn lift(f: impl Fn(Dual, Dual, Dual) -> Dual + Send + Sync + 'static) -> Symbol {
    symbol(move |x, xi| f(model::phi_plus(x, xi), model::phi_minus(x, xi), model::p(x, xi)))
}

#[derive(Clone)]
pub struct CommutantSet {
    pub a: Symbol,
    pub a_plus: Symbol,
    pub a_minus: Symbol,
    pub e_minus: Symbol,
    pub params: CutoffFamily,
    pub formulas: CommutantFormulas,
    pub g_plus: Option<SymbolField>,
    pub g_minus: Option<SymbolField>,
}

pub fn build_commutant(model: &ModelSpec, cutoffs: &CutoffFamily) -> Result<CommutantSet> {
    let radius = cutoffs.support_radius();
    if radius > model.o_radius {
        return Err(Error::SupportLeak(format!(
            "supp a reaches radius {radius:.4} but O has radius {}",
            model.o_radius
        )));
    }
    let formulas = CommutantFormulas { cut: *cutoffs, c_plus_sq: model.c_plus_sq };
    let f = formulas;
    Ok(CommutantSet {
        a: lift(move |pp, pm, p| f.a(pp, pm, p)),
        a_plus: lift(move |pp, pm, p| f.a_plus(pp, pm, p)),
        a_minus: lift(move |pp, pm, p| f.a_minus(pp, pm, p)),
        e_minus: lift(move |pp, pm, p| f.e_minus(pp, pm, p)),
        params: *cutoffs,
        formulas,
        g_plus: None,
        g_minus: None,
    })
}

#[derive(Clone, Debug)]
pub struct DecompositionReport {
    pub residual: SymbolField,
    pub max_abs: f64,
    /// Largest `|¼H_p(a²)|` on the grid, for scale.
    pub lhs_max: f64,
}

impl DecompositionReport {
    /// Rows for nodes with `|x|, |ξ| <= box_half_width`.
    pub fn write_csv(&self, mut w: impl Write, box_half_width: f64) -> std::io::Result<()> {
        writeln!(w, "x,xi,residual")?;
        let g = self.residual.grid;
        for j in 0..g.n_x {
            let x = g.x(j);
            if x.abs() > box_half_width {
                continue;
            }
            for i in 0..g.n_x {
                let xi = g.xi(i);
                if xi.abs() <= box_half_width {
                    writeln!(w, "{x},{xi},{:e}", self.residual.values[[j, i]])?;
                }
            }
        }
        Ok(())
    }
}

/// Pointwise `¼H_p(a²) − (−c₊²a₊² − c₋²a₋² + e₋²)`.
pub fn verify_decomposition(cs: &CommutantSet, model: &ModelSpec, grid: PhaseGrid) -> Result<DecompositionReport> {
    verify_decomposition_with(cs, model, grid, model.c_plus_sq, model.c_minus_sq)
}

/// As [`verify_decomposition`], with the constants on the right-hand side supplied separately.
pub fn verify_decomposition_with(
    cs: &CommutantSet,
    model: &ModelSpec,
    grid: PhaseGrid,
    rhs_c_plus_sq: f64,
    rhs_c_minus_sq: f64,
) -> Result<DecompositionReport> {
    let f = &cs.formulas;
    let n = grid.n_x;
    let mut res = Array2::zeros((n, n));
    let mut max_abs: f64 = 0.0;
    let mut lhs_max: f64 = 0.0;
    for j in 0..n {
        let x = grid.x(j);
        for i in 0..n {
            let xi = grid.xi(i);
            let (pp, pm, p) = (xi - x, xi + x, xi * xi - x * x);
            let lhs = f.quarter_hp_a_sq(pp, pm, p, model.c_plus_sq, model.c_minus_sq);
            let c = |g: fn(&CommutantFormulas, Dual, Dual, Dual) -> Dual| g(f, pp.into(), pm.into(), p.into()).v;
            let rhs = -rhs_c_plus_sq * c(CommutantFormulas::a_plus).powi(2)
                - rhs_c_minus_sq * c(CommutantFormulas::a_minus).powi(2)
                + c(CommutantFormulas::e_minus).powi(2);
            let r = lhs - rhs;
            res[[j, i]] = r;
            max_abs = max_abs.max(r.abs());
            lhs_max = lhs_max.max(lhs.abs());
        }
    }
    Ok(DecompositionReport {
        residual: SymbolField::from_values(grid, "decomposition residual", res)?,
        max_abs,
        lhs_max,
    })
}

/// `¼H_p(a²)` computed directly in `(x, ξ)` from the Hamilton field of `p`.
pub fn quarter_hp_a_sq_direct(cs: &CommutantSet, x: f64, xi: f64) -> f64 {
    let p = symbol(model::p);
    let d = hamilton_derivative(p.as_ref(), cs.a.as_ref(), x, xi);
    0.5 * d.v * d.d
}

/// `g± = ±½(H_{p₁}φ±)√(χ₀χ₀′)(φ₊² − φ₋² + κ)χ(φ₊²)ψ(p)` sampled on `grid`.
pub fn build_weyl_corrections(cs: &CommutantSet, p1: &Symbol, grid: PhaseGrid) -> Result<(SymbolField, SymbolField)> {
    let n = grid.n_x;
    let f = cs.formulas;
    let mut gp = Array2::zeros((n, n));
    let mut gm = Array2::zeros((n, n));
    for j in 0..n {
        let x = grid.x(j);
        for i in 0..n {
            let xi = grid.xi(i);
            let (pp, pm, p) = (Dual::constant(xi - x), Dual::constant(xi + x), Dual::constant(xi * xi - x * x));
            let common = f.common(pp, pm, p).v;
            if common == 0.0 {
                continue;
            }
            let (_, p1x, p1xi) = gradient(p1.as_ref(), x, xi);
            // φ± = ξ ∓ x, so H_{p₁}φ± = ∂_ξp₁ ∂_xφ± − ∂_xp₁ ∂_ξφ± = ∓∂_ξp₁ − ∂_xp₁.
            let hp1_plus = -p1xi - p1x;
            let hp1_minus = p1xi - p1x;
            gp[[j, i]] = 0.5 * hp1_plus * common;
            gm[[j, i]] = -0.5 * hp1_minus * common;
        }
    }
    Ok((
        SymbolField::from_values(grid, "g+", gp)?,
        SymbolField::from_values(grid, "g-", gm)?,
    ))
}

pub fn with_weyl_corrections(mut cs: CommutantSet, p1: &Symbol, grid: PhaseGrid) -> Result<CommutantSet> {
    let (gp, gm) = build_weyl_corrections(&cs, p1, grid)?;
    cs.g_plus = Some(gp);
    cs.g_minus = Some(gm);
    Ok(cs)
}

/// Smallest `b² = 1 − M₀t²/F` on `(0, t_max]`, computed as
/// `(χ₀′χ₀ − M₀χ₀²)/(χ₀′χ₀)` with `χ₀′` from dual numbers.
pub fn domination_min_b_sq(m0: f64, f: f64, t_max: f64, samples: usize) -> f64 {
    (1..=samples)
        .map(|k| {
            let t = t_max * k as f64 / samples as f64;
            let c = smooth::chi0(Dual::var(t), f);
            let cc = c.v * c.d;
            if cc == 0.0 {
                1.0 - m0 * t * t / f
            } else {
                (cc - m0 * c.v * c.v) / cc
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Sharpness that makes `b >= 1/2` on `(0, t_max]`.
pub fn domination_threshold(m0: f64, t_max: f64) -> f64 {
    4.0 / 3.0 * m0 * t_max * t_max
}

#[derive(Clone, Debug)]
pub struct OperatorCommutatorReport {
    pub h: f64,
    pub n_x: usize,
    /// `‖D‖/h`.
    pub d_norm_over_h: f64,
    /// `‖D − D*‖_F / ‖D‖_F`; `D` is Hermitian up to rounding.
    pub hermitian_defect: f64,
    /// Largest `‖Dv‖/‖v‖` over the off-support probes.
    pub off_support: f64,
    pub probe_centers: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
}

/// Smooth compactly supported probe `exp(−1/(1 − s²))`, `s = (x − c)/w`.
pub fn bump_probe(grid: &PhaseGrid, center: f64, half_width: f64) -> Array1<C64> {
    Array1::from_shape_fn(grid.n_x, |j| {
        let s = (grid.x(j) - center) / half_width;
        if s.abs() < 1.0 {
            C64::new((-1.0 / (1.0 - s * s)).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub struct CommutatorOperators {
    pub p: OperatorMatrix,
    pub a: OperatorMatrix,
    pub a_plus: OperatorMatrix,
    pub a_minus: OperatorMatrix,
    pub e_minus: OperatorMatrix,
    /// `D = (i/4h)[P, A*A] + c₊²A₊*A₊ + c₋²A₋*A₋ − E₋*E₋`.
    pub d: OperatorMatrix,
}

pub fn commutator_remainder(model: &ModelSpec, cs: &CommutantSet, grid: PhaseGrid) -> Result<CommutatorOperators> {
    linalg::init_blas();
    let q = |s: &Symbol, label: &str| -> Result<OperatorMatrix> {
        weyl_quantize(&SymbolField::from_closed_form(grid, label, Arc::clone(s))?)
    };
    let p = weyl_quantize(&model.p_field(grid)?)?;
    let a = q(&cs.a, "a")?;
    let a_plus = q(&cs.a_plus, "a+")?;
    let a_minus = q(&cs.a_minus, "a-")?;
    let e_minus = q(&cs.e_minus, "e-")?;
    let aa = a.gram();
    let comm = p.entries.dot(&aa) - aa.dot(&p.entries);
    let factor = C64::new(0.0, 1.0 / (4.0 * grid.h));
    let d = comm.mapv(|z| z * factor) + a_plus.gram().mapv(|z| z * model.c_plus_sq)
        + a_minus.gram().mapv(|z| z * model.c_minus_sq)
        - e_minus.gram();
    let d = OperatorMatrix { grid, entries: d, label: "D".into() };
    Ok(CommutatorOperators { p, a, a_plus, a_minus, e_minus, d })
}

pub const OFF_SUPPORT_CENTERS: [f64; 2] = [-6.0, 6.0];

pub fn verify_operator_commutator(
    model: &ModelSpec,
    cutoffs: &CutoffFamily,
    grid: PhaseGrid,
    tol: f64,
) -> Result<OperatorCommutatorReport> {
    let cs = build_commutant(model, cutoffs)?;
    let ops = commutator_remainder(model, &cs, grid)?;
    // D is Hermitian, so its norm is the largest |eigenvalue| of the Hermitian part.
    let herm = (&ops.d.entries + &linalg::adjoint(&ops.d.entries)).mapv(|z| z * 0.5);
    let eig = herm.eigvalsh(UPLO::Lower)?;
    let d_norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let off_support = OFF_SUPPORT_CENTERS
        .iter()
        .map(|&c| {
            let v = bump_probe(&grid, c, 1.0);
            linalg::norm(&ops.d.apply(&v)) / linalg::norm(&v)
        })
        .fold(0.0, f64::max);
    Ok(OperatorCommutatorReport {
        h: grid.h,
        n_x: grid.n_x,
        d_norm_over_h: d_norm / grid.h,
        hermitian_defect: ops.d.hermitian_defect(),
        off_support,
        probe_centers: OFF_SUPPORT_CENTERS.to_vec(),
        tol,
        passed: off_support <= tol,
    })
}
