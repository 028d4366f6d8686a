//! Resolvent of the absorbed model and its norms in L², isotropic and
//! microlocalized senses, with scaling fits.

use ndarray_linalg::{Factorize, LUFactorized, Solve};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, NormEstimate, PowerOptions, C64};
use crate::model::ModelSpec;
use crate::phasespace::PhaseGrid;
use crate::quantize::{weyl_quantize, OperatorMatrix};
use crate::spaces::NormFrame;

/// `P = Op(p) − i w(x) − z`, with `|Im z| <= im_bound · h²`.
pub fn assemble(model: &ModelSpec, grid: PhaseGrid, z: C64, im_bound: f64) -> Result<OperatorMatrix> {
    let bound = im_bound * grid.h * grid.h;
    if z.im.abs() > bound {
        return Err(Error::ImaginaryPartTooLarge { im: z.im.abs(), bound });
    }
    let mut p = weyl_quantize(&model.p_field(grid)?)?;
    let w = model.absorb;
    for j in 0..grid.n_x {
        p.entries[[j, j]] -= C64::new(0.0, w.eval(grid.x(j))) + z;
    }
    p.label = format!("P at h={}, z={z}", grid.h);
    Ok(p)
}

/// `P` together with one LU factorization.
pub struct Resolvent {
    pub p: OperatorMatrix,
    lu: LUFactorized<ndarray::OwnedRepr<C64>>,
}

impl Resolvent {
    pub fn new(p: OperatorMatrix) -> Result<Self> {
        linalg::init_blas();
        let lu = p.entries.factorize()?;
        Ok(Resolvent { p, lu })
    }

    pub fn solve(&self, f: &CVector) -> Result<CVector> {
        Ok(self.lu.solve(f)?)
    }

    pub fn solve_adjoint(&self, f: &CVector) -> Result<CVector> {
        Ok(self.lu.solve_h(f)?)
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRecord {
    pub h: f64,
    pub n_x: usize,
    pub norm_l2: f64,
    pub norm_iso: f64,
    pub norm_sandwich: f64,
    pub wall_time_s: f64,
    /// A solve failed or a power iteration hit its cap.
    pub flagged: bool,
}

/// `‖P⁻¹‖`.
pub fn norm_l2(r: &Resolvent, opts: PowerOptions) -> Result<NormEstimate> {
    linalg::power_norm(r.n(), |v| r.solve(v), |v| r.solve_adjoint(v), opts)
}

/// `‖G^{1/2} P⁻¹ G^{1/2}‖`.
pub fn norm_iso(r: &Resolvent, frame: &NormFrame, opts: PowerOptions) -> Result<NormEstimate> {
    let s = &frame.sqrt_g;
    linalg::power_norm(
        r.n(),
        |v| Ok(s.dot(&r.solve(&s.dot(v))?)),
        |v| Ok(s.dot(&r.solve_adjoint(&s.dot(v))?)),
        opts,
    )
}

/// `‖A P⁻¹ A‖`.
pub fn norm_sandwich(r: &Resolvent, a: &OperatorMatrix, opts: PowerOptions) -> Result<NormEstimate> {
    linalg::power_norm(
        r.n(),
        |v| Ok(a.apply(&r.solve(&a.apply(v))?)),
        |v| Ok(a.apply_adjoint(&r.solve_adjoint(&a.apply_adjoint(v))?)),
        opts,
    )
}

/// All three norms; `A` is the frame's `Q₀`.
pub fn resolvent_norms(r: &Resolvent, frame: &NormFrame, opts: PowerOptions) -> ScalingRecord {
    let grid = frame.grid;
    let mut flagged = false;
    let mut take = |e: Result<NormEstimate>| match e {
        Ok(e) => {
            flagged |= !e.converged;
            e.value
        }
        Err(_) => {
            flagged = true;
            f64::NAN
        }
    };
    let l2 = take(norm_l2(r, opts));
    let iso = take(norm_iso(r, frame, opts));
    let sandwich = take(norm_sandwich(r, &frame.q0, opts));
    ScalingRecord {
        h: grid.h,
        n_x: grid.n_x,
        norm_l2: l2,
        norm_iso: iso,
        norm_sandwich: sandwich,
        wall_time_s: 0.0,
        flagged,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Stats {
    pub h: f64,
    /// `(‖Q₊u‖ + ‖Q₋u‖) / (h⁻¹‖Pu‖_{H*} + h^{1/2}‖u‖)`.
    pub weak_max: f64,
    pub weak_mean: f64,
    /// `‖u‖_H / (h⁻¹‖f‖_{H*})`.
    pub iso_max: f64,
    pub iso_mean: f64,
}

pub fn check_theorem1_samples(r: &Resolvent, frame: &NormFrame, n_samples: usize, seed: u64) -> Result<Theorem1Stats> {
    let h = frame.h;
    let mut rng = linalg::rng(seed);
    let mut weak = Vec::with_capacity(n_samples);
    let mut iso = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let f = linalg::complex_gaussian(r.n(), &mut rng);
        let u = r.solve(&f)?;
        let pu = r.p.apply(&u);
        let num = linalg::norm(&frame.qp.apply(&u)) + linalg::norm(&frame.qm.apply(&u));
        let den = frame.norm_iso_dual(&pu)? / h + h.sqrt() * linalg::norm(&u);
        weak.push(num / den);
        iso.push(frame.norm_iso(&u)? / (frame.norm_iso_dual(&f)? / h));
    }
    let stats = |v: &[f64]| (v.iter().cloned().fold(f64::MIN, f64::max), v.iter().sum::<f64>() / v.len() as f64);
    let (weak_max, weak_mean) = stats(&weak);
    let (iso_max, iso_mean) = stats(&iso);
    Ok(Theorem1Stats { h, weak_max, weak_mean, iso_max, iso_mean })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitModel {
    Power,
    LogCorrected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// `log y = log_c − α log h`.
    pub log_c: f64,
    pub alpha: f64,
    pub power_rms: f64,
    /// `log y = −log h + log(c₁ + c₂ log(1/h))`.
    pub c1: f64,
    pub c2: f64,
    pub log_rms: f64,
    pub winner: FitModel,
    /// `1 − log_rms / power_rms`.
    pub improvement: f64,
    /// The `h` values span less than a decade.
    pub short_span: bool,
}

fn lstsq2(a: &[(f64, f64)], y: &[f64]) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((p, q), v) in a.iter().zip(y) {
        s11 += p * p;
        s12 += p * q;
        s22 += q * q;
        b1 += p * v;
        b2 += q * v;
    }
    let det = s11 * s22 - s12 * s12;
    ((s22 * b1 - s12 * b2) / det, (s11 * b2 - s12 * b1) / det)
}

fn rms(r: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = r.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (s / n as f64).sqrt()
}

fn log_model_residuals(c1: f64, c2: f64, u: &[f64], t: &[f64]) -> Option<Vec<f64>> {
    u.iter()
        .zip(t)
        .map(|(u, t)| {
            let m = c1 + c2 * u;
            (m > 0.0).then(|| t - m.ln())
        })
        .collect()
}

/// Least-squares fits of `log y` against the pure power and the log-corrected model.
pub fn fit_scaling(h: &[f64], y: &[f64]) -> Result<FitResult> {
    if h.len() != y.len() {
        return Err(Error::Dimension { expected: h.len(), got: y.len() });
    }
    if h.len() < 4 {
        return Err(Error::TooFewPoints(h.len()));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let lh: Vec<f64> = h.iter().map(|v| v.ln()).collect();

    let rows: Vec<(f64, f64)> = lh.iter().map(|l| (1.0, -l)).collect();
    let (log_c, alpha) = lstsq2(&rows, &ly);
    let power_rms = rms(lh.iter().zip(&ly).map(|(l, v)| v - (log_c - alpha * l)));

    // t = log(h y) = log(c₁ + c₂u), u = log(1/h); Gauss–Newton from the linear fit of h y.
    let u: Vec<f64> = lh.iter().map(|l| -l).collect();
    let t: Vec<f64> = lh.iter().zip(&ly).map(|(l, v)| l + v).collect();
    let hy: Vec<f64> = t.iter().map(|v| v.exp()).collect();
    let rows: Vec<(f64, f64)> = u.iter().map(|u| (1.0, *u)).collect();
    let (mut c1, mut c2) = lstsq2(&rows, &hy);
    let mut res = log_model_residuals(c1, c2, &u, &t).unwrap_or_else(|| {
        c1 = hy.iter().sum::<f64>() / hy.len() as f64;
        c2 = 0.0;
        log_model_residuals(c1, c2, &u, &t).expect("mean of positive values is positive")
    });
    let mut cost = rms(res.iter().cloned());
    for _ in 0..100 {
        let jac: Vec<(f64, f64)> = u
            .iter()
            .map(|u| {
                let m = c1 + c2 * u;
                (1.0 / m, u / m)
            })
            .collect();
        let (d1, d2) = lstsq2(&jac, &res);
        if !(d1.is_finite() && d2.is_finite()) {
            break;
        }
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-6 {
            let (n1, n2) = (c1 + step * d1, c2 + step * d2);
            if let Some(r) = log_model_residuals(n1, n2, &u, &t) {
                let c = rms(r.iter().cloned());
                if c < cost {
                    c1 = n1;
                    c2 = n2;
                    res = r;
                    improved = cost - c > 1e-15 * cost.max(1e-300);
                    cost = c;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let log_rms = cost;
    let winner = if log_rms < power_rms - 1e-12 { FitModel::LogCorrected } else { FitModel::Power };
    let improvement = if power_rms > 0.0 { 1.0 - log_rms / power_rms } else { 0.0 };
    let hmax = h.iter().cloned().fold(f64::MIN, f64::max);
    let hmin = h.iter().cloned().fold(f64::MAX, f64::min);
    Ok(FitResult {
        log_c,
        alpha,
        power_rms,
        c1,
        c2,
        log_rms,
        winner,
        improvement,
        short_span: hmax / hmin < 10.0,
    })
}

/// `max / min`; NaN if any value is not finite and positive.
pub fn max_min_ratio(v: &[f64]) -> f64 {
    if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return f64::NAN;
    }
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormSelector {
    L2,
    Iso,
    Sandwich,
}

impl NormSelector {
    pub const ALL: [NormSelector; 3] = [NormSelector::L2, NormSelector::Iso, NormSelector::Sandwich];

    pub fn name(&self) -> &'static str {
        match self {
            NormSelector::L2 => "norm_l2",
            NormSelector::Iso => "norm_iso",
            NormSelector::Sandwich => "norm_sandwich",
        }
    }

    pub fn get(&self, r: &ScalingRecord) -> f64 {
        match self {
            NormSelector::L2 => r.norm_l2,
            NormSelector::Iso => r.norm_iso,
            NormSelector::Sandwich => r.norm_sandwich,
        }
    }
}

/// Fit one norm over the records; flagged records are left out.
pub fn fit_records(records: &[ScalingRecord], sel: NormSelector) -> Result<FitResult> {
    let (h, y): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| !r.flagged && sel.get(r).is_finite() && sel.get(r) > 0.0)
        .map(|r| (r.h, sel.get(r)))
        .unzip();
    fit_scaling(&h, &y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    /// Sorted by decreasing `h`.
    pub records: Vec<ScalingRecord>,
    /// One entry per norm, in [`NormSelector::ALL`] order; empty with fewer than 4 usable records.
    pub fits: Vec<(NormSelector, FitResult)>,
    pub config_hash: String,
}

impl ScalingReport {
    pub fn new(mut records: Vec<ScalingRecord>, config_hash: impl Into<String>) -> Self {
        records.sort_by(|a, b| b.h.total_cmp(&a.h));
        let fits = NormSelector::ALL
            .iter()
            .filter_map(|&s| fit_records(&records, s).ok().map(|f| (s, f)))
            .collect();
        ScalingReport { records, fits, config_hash: config_hash.into() }
    }

    pub fn fit(&self, sel: NormSelector) -> Option<&FitResult> {
        self.fits.iter().find(|(s, _)| *s == sel).map(|(_, f)| f)
    }

    pub fn scaled(&self, sel: NormSelector) -> Vec<f64> {
        self.scaled_by(sel, 1)
    }

    /// `h^k·norm` per record.
    pub fn scaled_by(&self, sel: NormSelector, k: i32) -> Vec<f64> {
        self.records.iter().map(|r| r.h.powi(k) * sel.get(r)).collect()
    }

    /// `max / min` of `h·norm` over the records.
    pub fn spread(&self, sel: NormSelector) -> f64 {
        max_min_ratio(&self.scaled(sel))
    }

    /// `h·norm` strictly increases as `h` decreases.
    pub fn scaled_increasing(&self, sel: NormSelector) -> bool {
        self.scaled(sel).windows(2).all(|w| w[1] > w[0])
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "h,n_x,norm_l2,norm_iso,norm_sandwich,wall_time_s")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:.12e},{:.12e},{:.12e},{}",
                r.h, r.n_x, r.norm_l2, r.norm_iso, r.norm_sandwich, r.wall_time_s
            )?;
        }
        Ok(())
    }
}
