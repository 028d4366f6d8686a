//! Dense complex helpers: vector products, seeded vectors, power iteration.

use std::sync::Once;

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;

pub type C64 = Complex64;
pub type CVector = Array1<C64>;
pub type CMatrix = Array2<C64>;

extern "C" {
    fn openblas_set_num_threads(n: i32);
    fn cblas_zgemv(
        order: i32,
        trans: i32,
        m: i32,
        n: i32,
        alpha: *const C64,
        a: *const C64,
        lda: i32,
        x: *const C64,
        incx: i32,
        beta: *const C64,
        y: *mut C64,
        incy: i32,
    );
}

const CBLAS_ROW_MAJOR: i32 = 101;
const CBLAS_CONJ_TRANS: i32 = 113;

static BLAS_INIT: Once = Once::new();

/// Pins OpenBLAS to one thread so reductions happen in a fixed order.
pub fn init_blas() {
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &CVector) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vector with independent standard complex Gaussian entries.
pub fn complex_gaussian(n: usize, rng: &mut ChaCha8Rng) -> CVector {
    Array1::from_shape_fn(n, |_| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

/// `A* v` without forming `A*`.
pub fn adjoint_matvec(a: &CMatrix, v: &CVector) -> CVector {
    let (m, n) = a.dim();
    assert_eq!(m, v.len(), "adjoint_matvec dimension mismatch");
    let (Some(aa), Some(vv)) = (a.as_slice(), v.as_slice()) else {
        return a.t().dot(&v.mapv(|z| z.conj())).mapv(|z| z.conj());
    };
    if m == 0 || n == 0 {
        return Array1::zeros(n);
    }
    let mut y = Array1::<C64>::zeros(n);
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    // SAFETY: `aa` is a contiguous row-major m×n buffer, `vv` has m entries and `y` has n.
    unsafe {
        cblas_zgemv(
            CBLAS_ROW_MAJOR,
            CBLAS_CONJ_TRANS,
            m as i32,
            n as i32,
            &one,
            aa.as_ptr(),
            n as i32,
            vv.as_ptr(),
            1,
            &zero,
            y.as_mut_ptr(),
            1,
        );
    }
    y
}

/// Eigenvalues (ascending) and column eigenvectors of a Hermitian matrix.
///
/// `Eigh` on a row-major complex matrix hands LAPACK the transpose, which for a
/// Hermitian matrix is its conjugate, and returns conjugated eigenvectors; a
/// column-major copy avoids that.
pub fn eigh_hermitian(a: &CMatrix) -> Result<(Array1<f64>, CMatrix), Error> {
    let mut f = Array2::zeros(a.raw_dim().f());
    f.assign(a);
    Ok(f.eigh(UPLO::Lower)?)
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

#[derive(Clone, Copy, Debug)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Vectors iterated together; above 1, Rayleigh–Ritz picks the top one.
    pub block: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { tol: 1e-8, max_iter: 20_000, seed: 0x5eed, block: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `value` is then the last iterate.
    pub converged: bool,
}

/// Largest singular value of `B` by power iteration on `B*B`, given the
/// actions of `B` and `B*`.
pub fn power_norm<E: From<Error>>(
    n: usize,
    mut apply: impl FnMut(&CVector) -> Result<CVector, E>,
    mut apply_adj: impl FnMut(&CVector) -> Result<CVector, E>,
    opts: PowerOptions,
) -> Result<NormEstimate, E> {
    if opts.block > 1 && n > 1 {
        return block_power_norm(n, apply, apply_adj, opts);
    }
    let mut x = complex_gaussian(n, &mut rng(opts.seed));
    let nx = norm(&x);
    x.mapv_inplace(|z| z / nx);
    let mut lambda = 0.0;
    for it in 1..=opts.max_iter {
        let y = apply(&x)?;
        lambda = norm(&y).powi(2);
        let z = apply_adj(&y)?;
        let nz = norm(&z);
        if nz == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it, converged: true });
        }
        // For Hermitian B*B, an eigenvalue lies within the residual of λ.
        let residual = norm(&(&z - &x.mapv(|v| v * lambda)));
        if residual <= opts.tol * lambda {
            return Ok(NormEstimate { value: lambda.sqrt(), iterations: it, converged: true });
        }
        x = z.mapv(|v| v / nz);
    }
    Ok(NormEstimate { value: lambda.sqrt(), iterations: opts.max_iter, converged: false })
}

/// Modified Gram–Schmidt, run twice; a column that collapses is redrawn.
fn orthonormalize(cols: &mut [CVector], r: &mut ChaCha8Rng) {
    let n = cols[0].len();
    for j in 0..cols.len() {
        for _attempt in 0..4 {
            for _pass in 0..2 {
                for i in 0..j {
                    let c = inner(&cols[i], &cols[j]);
                    let q = cols[i].mapv(|z| z * c);
                    cols[j] -= &q;
                }
            }
            let nj = norm(&cols[j]);
            if nj > 1e-12 {
                cols[j].mapv_inplace(|z| z / nj);
                break;
            }
            cols[j] = complex_gaussian(n, r);
        }
    }
}

/// Subspace iteration on `B*B`; converges at the rate `(σ_{k+1}/σ₁)²`
/// instead of `(σ₂/σ₁)²`, which matters when the top pair is nearly degenerate.
fn block_power_norm<E: From<Error>>(
    n: usize,
    mut apply: impl FnMut(&CVector) -> Result<CVector, E>,
    mut apply_adj: impl FnMut(&CVector) -> Result<CVector, E>,
    opts: PowerOptions,
) -> Result<NormEstimate, E> {
    let k = opts.block.min(n);
    let mut r = rng(opts.seed);
    let mut x: Vec<CVector> = (0..k).map(|_| complex_gaussian(n, &mut r)).collect();
    orthonormalize(&mut x, &mut r);
    let mut top = 0.0;
    for it in 1..=opts.max_iter {
        let z = x.iter().map(|v| apply_adj(&apply(v)?)).collect::<Result<Vec<_>, E>>()?;
        let mut hm = Array2::from_shape_fn((k, k), |(i, j)| inner(&x[i], &z[j]));
        hm = (&hm + &adjoint(&hm)).mapv(|v| v * 0.5);
        let (w, c) = eigh_hermitian(&hm).map_err(E::from)?;
        top = w[k - 1].max(0.0);
        if top == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it, converged: true });
        }
        let mut ritz = CVector::zeros(n);
        let mut image = CVector::zeros(n);
        for j in 0..k {
            let cj = c[[j, k - 1]];
            ritz.scaled_add(cj, &x[j]);
            image.scaled_add(cj, &z[j]);
        }
        let residual = norm(&(&image - &ritz.mapv(|v| v * top)));
        if residual <= opts.tol * top {
            return Ok(NormEstimate { value: top.sqrt(), iterations: it, converged: true });
        }
        x = z;
        orthonormalize(&mut x, &mut r);
    }
    Ok(NormEstimate { value: top.sqrt(), iterations: opts.max_iter, converged: false })
}
