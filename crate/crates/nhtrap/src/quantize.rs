//! Discrete Weyl quantization on the periodic position grid.

use std::io::{Read, Write};

use ndarray::Array2;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, NormEstimate, PowerOptions, C64};
use crate::phasespace::{PhaseGrid, SymbolField};

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub grid: PhaseGrid,
    pub entries: CMatrix,
    pub label: String,
}

/// Relative size allowed at the momentum cutoff before a symbol counts as aliased.
const EDGE_TOL: f64 = 1e-12;

/// Weyl quantization
/// `M_jl = (1/n) Σ_k e^{2πi d k/n} a((x_j + x_l)/2, ξ_k)`, `d = j − l` taken as the
/// minimal periodic image, so that `Op(a)` is Hermitian for real `a`.
pub fn weyl_quantize(a: &SymbolField) -> Result<OperatorMatrix> {
    let g = a.grid;
    if !g.admissible() {
        return Err(Error::InvalidParameter(format!("grid {g:?} is not admissible")));
    }
    let n = g.n_x;
    if a.compact_in_xi {
        let amax = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let edge = (0..n).fold(0.0f64, |m, j| m.max(a.values[[j, 0]].abs()).max(a.values[[j, n - 1]].abs()));
        if edge > EDGE_TOL * (1.0 + amax) {
            return Err(Error::MomentumAliasing { label: a.label.clone(), value: edge });
        }
    }

    let xis = g.xis();
    let half = g.dx() / 2.0;
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let scale = 1.0 / n as f64;
    // Row s holds the inverse transform in ξ at the midpoint x_min + s Δx/2.
    let mut f = Array2::<C64>::zeros((2 * n, n));
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for s in 0..2 * n {
        let m = g.x_min + s as f64 * half;
        for (i, xi) in xis.iter().enumerate() {
            let k = i as i64 - (n / 2) as i64;
            buf[k.rem_euclid(n as i64) as usize] = C64::new(a.eval(m, *xi), 0.0);
        }
        fft.process(&mut buf);
        for (dst, v) in f.row_mut(s).iter_mut().zip(buf.iter()) {
            *dst = v * scale;
        }
    }

    let n_i = n as i64;
    let mut entries = CMatrix::zeros((n, n));
    for j in 0..n {
        for l in 0..n {
            let d = (j as i64 - l as i64 + n_i / 2).rem_euclid(n_i) - n_i / 2;
            let s = ((2 * l as i64 + d).rem_euclid(2 * n_i)) as usize;
            entries[[j, l]] = if d == -n_i / 2 {
                // The two antipodal midpoints are averaged to keep Op(a) Hermitian.
                let s2 = (s + n) % (2 * n);
                C64::new(0.5 * (f[[s, n / 2]].re + f[[s2, n / 2]].re), 0.0)
            } else if d >= 0 {
                f[[s, d as usize]]
            } else {
                f[[s, (-d) as usize]].conj()
            };
        }
    }
    Ok(OperatorMatrix { grid: g, entries, label: format!("Op({}) at h={}", a.label, g.h) })
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn identity(grid: PhaseGrid) -> Self {
        OperatorMatrix { grid, entries: linalg::identity(grid.n_x), label: "I".into() }
    }

    /// Multiplication by `f(x_j)`.
    pub fn diagonal(grid: PhaseGrid, label: impl Into<String>, f: impl Fn(f64) -> C64) -> Self {
        let mut entries = CMatrix::zeros((grid.n_x, grid.n_x));
        for j in 0..grid.n_x {
            entries[[j, j]] = f(grid.x(j));
        }
        OperatorMatrix { grid, entries, label: label.into() }
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { grid: self.grid, entries: linalg::adjoint(&self.entries), label: format!("({})*", self.label) }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        self.entries.dot(v)
    }

    pub fn apply_adjoint(&self, v: &CVector) -> CVector {
        linalg::adjoint_matvec(&self.entries, v)
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(OperatorMatrix {
            grid: self.grid,
            entries: self.entries.dot(&other.entries),
            label: format!("{} {}", self.label, other.label),
        })
    }

    /// `A*A`.
    pub fn gram(&self) -> CMatrix {
        linalg::adjoint(&self.entries).dot(&self.entries)
    }

    pub fn scaled(&self, c: C64) -> Self {
        OperatorMatrix { grid: self.grid, entries: self.entries.mapv(|z| z * c), label: format!("{c} {}", self.label) }
    }

    /// `‖A − A*‖_F / ‖A‖_F`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = &self.entries - &linalg::adjoint(&self.entries);
        let a = linalg::frobenius(&self.entries);
        if a == 0.0 {
            0.0
        } else {
            linalg::frobenius(&d) / a
        }
    }

    /// Row-major complex doubles, little endian, after a `u64` dimension.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        for z in self.entries.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn read_binary(mut r: impl Read) -> std::io::Result<CMatrix> {
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        data.push(C64::new(re, f64::from_le_bytes(b8)));
    }
    Array2::from_shape_vec((n, n), data).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

pub fn adjoint(a: &OperatorMatrix) -> OperatorMatrix {
    a.adjoint()
}

/// `AB − BA`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let entries = a.entries.dot(&b.entries) - b.entries.dot(&a.entries);
    Ok(OperatorMatrix { grid: a.grid, entries, label: format!("[{}, {}]", a.label, b.label) })
}

/// Largest singular value by power iteration on `A*A`.
pub fn op_norm(a: &OperatorMatrix, tol: f64) -> Result<NormEstimate> {
    op_norm_with(a, PowerOptions { tol, ..PowerOptions::default() })
}

pub fn op_norm_with(a: &OperatorMatrix, opts: PowerOptions) -> Result<NormEstimate> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    linalg::power_norm::<Error>(a.n(), |v| Ok(a.apply(v)), |v| Ok(a.apply_adjoint(v)), opts)
}
