//! Symbol-level checks of the b-setting: the b-Hamilton field, the parabolic
//! defining function `ρ₊ = φ₊² + Mτ`, and the sum-of-squares decompositions
//! on a structural model in coordinates `(ρ̃, τ, u₊, u₋, v)` where `u± = φ±`
//! and `v = ρ̃^m p`.

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::smooth::{self, Plateau};

/// Prescribed subprincipal field `W`: `Wτ = α_{∂,1}τ`, `Wρ̃ = α̃₁τρ̃`, and `Wφ±`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WData {
    Zero,
    /// A fixed non-zero preset: `α_{∂,1} = 0.15`, `Wφ₊ = 0.2u₋ + 0.1v`, `Wφ₋ = 0.05τ − 0.1u₊`.
    Demo,
}

impl WData {
    pub fn alpha_d1(&self) -> f64 {
        match self {
            WData::Zero => 0.0,
            WData::Demo => 0.15,
        }
    }

    pub fn w_phi_plus(&self, pt: &BPoint) -> f64 {
        match self {
            WData::Zero => 0.0,
            WData::Demo => 0.2 * pt.um + 0.1 * pt.v,
        }
    }

    pub fn w_phi_minus(&self, pt: &BPoint) -> f64 {
        match self {
            WData::Zero => 0.0,
            WData::Demo => 0.05 * pt.tau - 0.1 * pt.up,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BStructuralModel {
    pub m: f64,
    pub c_d_sq: f64,
    pub c_plus_sq: f64,
    pub c_minus_sq: f64,
    pub beta_plus: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    /// `α̃` in `Vρ̃ = α̃τρ̃`.
    pub alpha: f64,
    /// `α̃₁` in `Wρ̃ = α̃₁τρ̃`.
    pub alpha1: f64,
    pub w: WData,
}

impl Default for BStructuralModel {
    fn default() -> Self {
        BStructuralModel {
            m: 2.0,
            c_d_sq: 2.0,
            c_plus_sq: 2.0,
            c_minus_sq: 2.0,
            beta_plus: 0.5,
            nu_plus: 0.3,
            nu_minus: 0.3,
            alpha: 0.2,
            alpha1: 0.1,
            w: WData::Zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BPoint {
    pub rho: f64,
    pub tau: f64,
    pub up: f64,
    pub um: f64,
    pub v: f64,
}

impl BStructuralModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_d_sq > 0.0 && self.c_plus_sq > 0.0 && self.c_minus_sq > 0.0) {
            return Err(Error::InvalidParameter("c_d², c₊², c₋² must be positive".into()));
        }
        Ok(())
    }

    /// `V` applied to the coordinate functions.
    pub fn v_field(&self, pt: &BPoint) -> [f64; 5] {
        [
            self.alpha * pt.tau * pt.rho,
            -self.c_d_sq * pt.tau,
            -self.c_plus_sq * pt.up + self.beta_plus * pt.tau + self.nu_plus * pt.v,
            self.c_minus_sq * pt.um + self.nu_minus * pt.v,
            self.m * self.alpha * pt.tau * pt.v,
        ]
    }

    /// `W` applied to the coordinate functions; `Wv` follows from `H_p p = 0`.
    pub fn w_field(&self, pt: &BPoint) -> [f64; 5] {
        [
            self.alpha1 * pt.tau * pt.rho,
            self.w.alpha_d1() * pt.tau,
            self.w.w_phi_plus(pt),
            self.w.w_phi_minus(pt),
            self.m * self.alpha1 * pt.tau * pt.v,
        ]
    }

    /// `H_p = ρ̃^{1−m}(V + ρ̃W)` applied to the coordinate functions.
    pub fn hamilton_field(&self, pt: &BPoint) -> [f64; 5] {
        let v = self.v_field(pt);
        let w = self.w_field(pt);
        let s = pt.rho.powf(1.0 - self.m);
        [0, 1, 2, 3, 4].map(|k| s * (v[k] + pt.rho * w[k]))
    }

    /// `c̃₊² = min(c₊², c_∂²)/2`.
    pub fn c_tilde_sq(&self) -> f64 {
        self.c_plus_sq.min(self.c_d_sq) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Orientation {
    /// `Γ₊` backward trapped; `a` built from `χ₀(ρ₊ − φ₋² + κ)χ(ρ₊)`.
    Forward,
    /// Roles of `ρ₊` and `φ₋²` exchanged.
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BCommutantParams {
    pub s: f64,
    pub r: f64,
    pub kappa: f64,
    pub big_r: f64,
    pub f: f64,
    pub big_m: f64,
    pub psi_width: f64,
    pub orientation: Orientation,
}

impl Default for BCommutantParams {
    fn default() -> Self {
        BCommutantParams {
            s: 1.0,
            r: 0.0,
            kappa: 0.05,
            big_r: 0.25,
            f: 1.0,
            big_m: 1.0,
            psi_width: 0.6,
            orientation: Orientation::Forward,
        }
    }
}

impl BCommutantParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.big_r > 0.0 && self.f > 0.0 && self.big_m > 0.0 && self.psi_width > 0.0) {
            return Err(Error::InvalidParameter("κ, R, F, M, ψ-width must be positive".into()));
        }
        match self.orientation {
            Orientation::Forward if self.r > 0.0 => {
                Err(Error::InvalidParameter("r > 0 needs the reversed orientation".into()))
            }
            Orientation::Reversed if self.r < 0.0 => {
                Err(Error::InvalidParameter("r < 0 needs the forward orientation".into()))
            }
            _ => Ok(()),
        }
    }

    fn chi(&self) -> Plateau {
        Plateau::new(self.big_r / 2.0, self.big_r)
    }

    fn psi(&self) -> Plateau {
        Plateau::new(self.psi_width / 2.0, self.psi_width)
    }
}

/// The commutant `a` and the terms of `¼H_p(a²)`.
#[derive(Clone, Copy, Debug)]
pub struct BCommutant {
    pub model: BStructuralModel,
    pub params: BCommutantParams,
}

pub const TERM_NAMES: [&str; BTerms::COUNT] = [
    "c+^2 a+^2", "c-^2 a-^2", "a_d^2", "a_r^2", "2 g+ a+", "2 g- a-", "e", "e~", "2 a+ j+ p", "2 a- j- p",
];

/// Signed terms of the right-hand side; their sum is `¼H_p(a²)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BTerms {
    pub plus_sq: f64,
    pub minus_sq: f64,
    pub a_d_sq: f64,
    pub a_r_sq: f64,
    pub g_plus: f64,
    pub g_minus: f64,
    pub e: f64,
    pub e_tilde: f64,
    pub j_plus: f64,
    pub j_minus: f64,
    /// Bracket under the square root in `a_∂`.
    pub radicand: f64,
}

impl BTerms {
    pub const COUNT: usize = 10;

    pub fn as_array(&self) -> [f64; Self::COUNT] {
        [
            self.plus_sq,
            self.minus_sq,
            self.a_d_sq,
            self.a_r_sq,
            self.g_plus,
            self.g_minus,
            self.e,
            self.e_tilde,
            self.j_plus,
            self.j_minus,
        ]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

impl BCommutant {
    pub fn new(model: BStructuralModel, params: BCommutantParams) -> Result<Self> {
        model.validate()?;
        params.validate()?;
        Ok(BCommutant { model, params })
    }

    fn rho_plus<T>(&self, up: T, tau: T) -> T
    where
        T: Copy + std::ops::Mul<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        up * up + tau * self.params.big_m
    }

    /// Arguments `(χ₀ argument, χ argument)`.
    fn args(&self, rho: Dual, tau: Dual, up: Dual, um: Dual) -> (Dual, Dual) {
        let _ = rho;
        let rp = self.rho_plus(up, tau);
        let k = self.params.kappa;
        match self.params.orientation {
            Orientation::Forward => (rp - um * um + k, rp),
            Orientation::Reversed => (um * um - rp + k, um * um),
        }
    }

    fn tau_weight(&self, tau: Dual) -> Dual {
        if self.params.r == 0.0 {
            Dual::ONE
        } else {
            tau.powf(-self.params.r)
        }
    }

    /// `a = ρ̃^{−s+(m−1)/2} τ^{−r} χ₀(·)χ(·)ψ(v)`.
    pub fn a(&self, c: [Dual; 5]) -> Dual {
        let [rho, tau, up, um, v] = c;
        let p = &self.params;
        let (t0, t1) = self.args(rho, tau, up, um);
        rho.powf(-p.s + (self.model.m - 1.0) / 2.0)
            * self.tau_weight(tau)
            * smooth::chi0(t0, p.f)
            * p.chi().eval(t1)
            * p.psi().even(v)
    }

    /// `¼H_p(a²)` by differentiating `a` along the structural Hamilton field.
    pub fn quarter_hp_a_sq(&self, pt: &BPoint) -> f64 {
        let t = self.model.hamilton_field(pt);
        let c = [
            Dual::new(pt.rho, t[0]),
            Dual::new(pt.tau, t[1]),
            Dual::new(pt.up, t[2]),
            Dual::new(pt.um, t[3]),
            Dual::new(pt.v, t[4]),
        ];
        let a = self.a(c);
        0.5 * a.v * a.d
    }

    pub fn a_value(&self, pt: &BPoint) -> f64 {
        self.a([pt.rho, pt.tau, pt.up, pt.um, pt.v].map(Dual::constant)).v
    }

    /// Right-hand side terms, each with the sign it carries in the identity.
    pub fn terms(&self, pt: &BPoint) -> BTerms {
        let mdl = &self.model;
        let p = &self.params;
        let BPoint { rho, tau, up, um, v } = *pt;
        let (t0, t1) = self.args(rho.into(), tau.into(), up.into(), um.into());
        let (t0, t1) = (t0.v, t1.v);
        let chi0 = smooth::chi0_val(t0, p.f);
        let cc = smooth::chi0_chi0p(t0, p.f);
        let chi = p.chi().val(t1);
        let chi1 = p.chi().chi1_val(t1);
        let psi_d = p.psi().even(Dual::var(v));
        let (psi, dpsi) = (psi_d.v, psi_d.d);
        let tw = if p.r == 0.0 { 1.0 } else { tau.powf(-p.r) };
        // K = ρ̃^{−2s} τ^{−2r}
        let k = rho.powf(-2.0 * p.s) * tw * tw;
        let common_sq = k * cc * chi * chi * psi * psi;
        let full_sq = k * chi0 * chi0 * chi * chi * psi * psi;
        let ad1 = mdl.w.alpha_d1();
        let weight = 0.25 * (-2.0 * p.s + mdl.m - 1.0) * (mdl.alpha + rho * mdl.alpha1);
        let sigma = match p.orientation {
            Orientation::Forward => -1.0,
            Orientation::Reversed => 1.0,
        };
        let bracket = (p.big_m * mdl.c_d_sq / 2.0 - mdl.beta_plus * up - rho * p.big_m * ad1 / 2.0) * cc
            + sigma * weight * chi0 * chi0;
        let a_d_sq = k * tau * bracket * chi * chi * psi * psi;
        // Enters with the sign of r in both orientations.
        let a_r_sq = p.r / 2.0 * (mdl.c_d_sq - rho * ad1) * full_sq;
        let w_plus = mdl.w.w_phi_plus(pt);
        let w_minus = mdl.w.w_phi_minus(pt);
        let e_rate = match p.orientation {
            Orientation::Forward => {
                let rho_hat = -2.0 * mdl.c_plus_sq * up * up + 2.0 * mdl.beta_plus * up * tau
                    + 2.0 * mdl.nu_plus * up * v
                    - p.big_m * mdl.c_d_sq * tau;
                let w_rho = 2.0 * up * w_plus + p.big_m * ad1 * tau;
                rho_hat + rho * w_rho
            }
            Orientation::Reversed => 2.0 * mdl.c_minus_sq * um * um + 2.0 * mdl.nu_minus * um * v + 2.0 * rho * um * w_minus,
        };
        let e = -0.5 * k * e_rate * chi1 * chi1 * chi0 * chi0 * psi * psi;
        let e_tilde = mdl.m / 2.0 * k * v * (mdl.alpha + rho * mdl.alpha1) * tau * chi0 * chi0 * chi * chi * psi * dpsi;
        BTerms {
            plus_sq: sigma * mdl.c_plus_sq * up * up * common_sq,
            minus_sq: sigma * mdl.c_minus_sq * um * um * common_sq,
            a_d_sq: sigma * a_d_sq,
            a_r_sq,
            // 2g±a± = ±ρ̃ u± (Wφ±) · common², sign-flipped when reversed.
            g_plus: -sigma * rho * up * w_plus * common_sq,
            g_minus: sigma * rho * um * w_minus * common_sq,
            // 2a±j±p = ±ν± u± v · common².
            j_plus: -sigma * mdl.nu_plus * up * v * common_sq,
            j_minus: sigma * mdl.nu_minus * um * v * common_sq,
            e,
            e_tilde,
            radicand: bracket,
        }
    }

    /// `a_r` at `Γ` with the `ρ̃^{−s}τ^{−r}` weight removed: `√(|r|/2 (c_∂² − α_{∂,1})) χ₀(κ)`.
    pub fn a_r_at_gamma(&self) -> f64 {
        let p = &self.params;
        let c = self.model.c_d_sq - self.model.w.alpha_d1();
        (p.r.abs() / 2.0 * c).sqrt() * smooth::chi0_val(p.kappa, p.f) * p.chi().val(0.0) * p.psi().val(0.0)
    }
}

/// Tensor grid over `τ ∈ [0, τ_max]`, `|u±| <= u_max`, `|v| <= v_max`, `ρ̃ ∈ [ρ_min, ρ_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid5 {
    pub nodes: usize,
    pub tau_max: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl Default for Grid5 {
    fn default() -> Self {
        Grid5 { nodes: 9, tau_max: 0.2, u_max: 0.6, v_max: 0.4, rho_min: 0.5, rho_max: 1.0 }
    }
}

impl Grid5 {
    fn axis(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = self.nodes;
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn points(&self) -> Vec<BPoint> {
        let rho = self.axis(self.rho_min, self.rho_max);
        let tau = self.axis(0.0, self.tau_max);
        let u = self.axis(-self.u_max, self.u_max);
        let v = self.axis(-self.v_max, self.v_max);
        let mut out = Vec::with_capacity(self.nodes.pow(5));
        for &r in &rho {
            for &t in &tau {
                for &up in &u {
                    for &um in &u {
                        for &vv in &v {
                            out.push(BPoint { rho: r, tau: t, up, um, v: vv });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BDecompositionReport {
    pub max_residual: f64,
    pub max_lhs: f64,
    /// Nodes evaluated (those with `τ = 0` are skipped when `r > 0`).
    pub nodes: usize,
    pub min_radicand_on_supp: f64,
    pub a_r_gamma: Option<f64>,
    /// With term `k` dropped from the right-hand side: `max |residual − term_k|`
    /// and `max |term_k|`.
    pub term_coverage: Vec<(String, f64, f64)>,
}

fn run_decomposition(bc: &BCommutant, grid: &Grid5, rhs_c_d_sq: Option<f64>) -> Result<BDecompositionReport> {
    let skip_boundary = bc.params.r > 0.0;
    let mut rhs_model = *bc;
    if let Some(c) = rhs_c_d_sq {
        rhs_model.model.c_d_sq = c;
    }
    let mut max_residual: f64 = 0.0;
    let mut max_lhs: f64 = 0.0;
    let mut min_rad = f64::INFINITY;
    let mut nodes = 0;
    let mut cov = [(0.0f64, 0.0f64); BTerms::COUNT];
    for pt in grid.points() {
        if skip_boundary && pt.tau == 0.0 {
            continue;
        }
        nodes += 1;
        let lhs = bc.quarter_hp_a_sq(&pt);
        let terms = rhs_model.terms(&pt);
        let res = lhs - terms.sum();
        max_residual = max_residual.max(res.abs());
        max_lhs = max_lhs.max(lhs.abs());
        if bc.a_value(&pt) != 0.0 && pt.tau > 0.0 {
            min_rad = min_rad.min(terms.radicand);
        }
        for (k, t) in terms.as_array().iter().enumerate() {
            let dropped = lhs - (terms.sum() - t);
            cov[k].0 = cov[k].0.max((dropped - t).abs());
            cov[k].1 = cov[k].1.max(t.abs());
        }
    }
    if min_rad < 0.0 {
        return Err(Error::NegativeRadicand { value: min_rad });
    }
    Ok(BDecompositionReport {
        max_residual,
        max_lhs,
        nodes,
        min_radicand_on_supp: min_rad,
        a_r_gamma: (bc.params.r != 0.0).then(|| bc.a_r_at_gamma()),
        term_coverage: cov
            .iter()
            .zip(TERM_NAMES)
            .map(|(&(d, m), n)| (n.to_string(), d, m))
            .collect(),
    })
}

/// Largest `|¼H_p(a²) − RHS|` over `grid`.
pub fn verify_b_decomposition(model: &BStructuralModel, params: &BCommutantParams, grid: &Grid5) -> Result<BDecompositionReport> {
    run_decomposition(&BCommutant::new(*model, *params)?, grid, None)
}

/// As [`verify_b_decomposition`] for `r != 0`; also reports `a_r` at `Γ`.
pub fn verify_b_weighted(model: &BStructuralModel, params: &BCommutantParams, grid: &Grid5) -> Result<BDecompositionReport> {
    if params.r == 0.0 {
        return Err(Error::InvalidParameter("the weighted check needs r != 0".into()));
    }
    verify_b_decomposition(model, params, grid)
}

/// Negative control: `c_∂²` replaced on the right-hand side only.
pub fn verify_b_perturbed(
    model: &BStructuralModel,
    params: &BCommutantParams,
    grid: &Grid5,
    rhs_c_d_sq: f64,
) -> Result<BDecompositionReport> {
    run_decomposition(&BCommutant::new(*model, *params)?, grid, Some(rhs_c_d_sq))
}

/// Box for the parabolic check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicBox {
    pub nodes: usize,
    pub tau_max: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl Default for ParabolicBox {
    fn default() -> Self {
        ParabolicBox { nodes: 9, tau_max: 0.2, u_max: 0.6, v_max: 0.4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicReport {
    /// Worst case over the box of the two termwise margins
    /// `(2c₊² − c̃₊²)u₊²` and `(M(c_∂² − c̃₊²) − 2β₊u₊)τ`.
    pub margin: f64,
    /// Worst case of `−(Vρ₊ − 2ν₊u₊v) − c̃₊²ρ₊`.
    pub pointwise_margin: f64,
    /// Smallest `M` with a non-negative termwise margin.
    pub threshold: f64,
}

fn axis(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1).max(1) as f64).collect()
}

fn termwise_margin(model: &BStructuralModel, big_m: f64, b: &ParabolicBox) -> f64 {
    let ct = model.c_tilde_sq();
    let mut worst = f64::INFINITY;
    for &t in &axis(b.nodes, 0.0, b.tau_max) {
        for &u in &axis(b.nodes, -b.u_max, b.u_max) {
            let quad = (2.0 * model.c_plus_sq - ct) * u * u;
            let lin = (big_m * (model.c_d_sq - ct) - 2.0 * model.beta_plus * u) * t;
            worst = worst.min(quad).min(lin);
        }
    }
    worst
}

fn pointwise_margin(model: &BStructuralModel, big_m: f64, b: &ParabolicBox) -> f64 {
    let ct = model.c_tilde_sq();
    let mut worst = f64::INFINITY;
    for &t in &axis(b.nodes, 0.0, b.tau_max) {
        for &u in &axis(b.nodes, -b.u_max, b.u_max) {
            for &um in &axis(b.nodes, -b.u_max, b.u_max) {
                for &v in &axis(b.nodes, -b.v_max, b.v_max) {
                    let pt = BPoint { rho: 1.0, tau: t, up: u, um, v };
                    let vf = model.v_field(&pt);
                    // Vρ₊ = 2u₊Vu₊ + M Vτ
                    let v_rho = 2.0 * u * vf[2] + big_m * vf[1];
                    let m = -(v_rho - 2.0 * model.nu_plus * u * v) - ct * (u * u + big_m * t);
                    worst = worst.min(m);
                }
            }
        }
    }
    worst
}

pub const PARABOLIC_M_CAP: f64 = 1e6;

/// Worst case of the linear term by hand: `M >= 2|β₊| u_max / (c_∂² − c̃₊²)`.
pub fn parabolic_threshold_closed_form(model: &BStructuralModel, b: &ParabolicBox) -> f64 {
    2.0 * model.beta_plus.abs() * b.u_max / (model.c_d_sq - model.c_tilde_sq())
}

pub fn parabolic_check(model: &BStructuralModel, big_m: f64, b: &ParabolicBox) -> Result<ParabolicReport> {
    model.validate()?;
    let ok = |m: f64| termwise_margin(model, m, b) >= 0.0;
    let threshold = if ok(0.0) {
        0.0
    } else {
        let mut hi = 1.0;
        while !ok(hi) {
            hi *= 2.0;
            if hi > PARABOLIC_M_CAP {
                return Err(Error::NoParabolicConstant(PARABOLIC_M_CAP));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        hi
    };
    Ok(ParabolicReport {
        margin: termwise_margin(model, big_m, b),
        pointwise_margin: pointwise_margin(model, big_m, b),
        threshold,
    })
}

/// Coefficients of `H_a` in the b-cotangent coordinates `(τ, x, σ, ξ)`:
/// `(∂_σa)(τ∂_τ) − (τ∂_τa)∂_σ + (∂_ξa)∂_x − (∂_xa)∂_ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BHamilton {
    pub tau_dtau: f64,
    pub d_sigma: f64,
    pub d_x: f64,
    pub d_xi: f64,
}

pub fn b_hamilton(a: impl Fn(f64, f64, f64, f64) -> f64, (tau, x, sigma, xi): (f64, f64, f64, f64)) -> BHamilton {
    let step = |c: f64| 1e-6 * c.abs().max(1.0);
    let (ht, hx, hs, hq) = (step(tau), step(x), step(sigma), step(xi));
    let da_tau = (a(tau + ht, x, sigma, xi) - a(tau - ht, x, sigma, xi)) / (2.0 * ht);
    let da_x = (a(tau, x + hx, sigma, xi) - a(tau, x - hx, sigma, xi)) / (2.0 * hx);
    let da_sigma = (a(tau, x, sigma + hs, xi) - a(tau, x, sigma - hs, xi)) / (2.0 * hs);
    let da_xi = (a(tau, x, sigma, xi + hq) - a(tau, x, sigma, xi - hq)) / (2.0 * hq);
    BHamilton { tau_dtau: da_sigma, d_sigma: -tau * da_tau, d_x: da_xi, d_xi: -da_x }
}

/// `min b²` for `χ₀′χ₀ − M₀χ₀² = b²χ₀′χ₀` over the range of the `χ₀` argument on `supp a`.
pub fn domination_min_b_sq(params: &BCommutantParams, m0: f64) -> f64 {
    crate::commutant::domination_min_b_sq(m0, params.f, params.big_r + params.kappa, 1000)
}
