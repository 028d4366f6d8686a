use nhtrap::dual::Dual;
use nhtrap::linalg::{self, CVector, C64};
use nhtrap::model;
use nhtrap::phasespace::{make_grid, poisson_bracket_at, symbol, PhaseGrid, Symbol, SymbolField};
use nhtrap::quantize::*;
use nhtrap::smooth::bump;
use nhtrap::spaces::{build_frame, coherent_state, commutator_rayleigh};
use nhtrap::Error;

fn grid(h: f64) -> PhaseGrid {
    make_grid(h, -8.0, 8.0, 4.0, 512).unwrap()
}

fn box_cut(x: Dual) -> Dual {
    bump(x.abs(), 4.0, 6.0)
}

fn quant(g: PhaseGrid, s: Symbol) -> OperatorMatrix {
    weyl_quantize(&SymbolField::from_closed_form(g, "a", s).unwrap().unbounded_in_xi()).unwrap()
}

fn gaussian(g: &PhaseGrid, c: f64, w: f64) -> CVector {
    CVector::from_shape_fn(g.n_x, |j| C64::new((-(g.x(j) - c).powi(2) / w).exp(), 0.0))
}

#[test]
fn one_is_identity() {
    let g = grid(0.1);
    let a = quant(g, symbol(|_, _| Dual::ONE));
    let err = linalg::frobenius(&(&a.entries - &linalg::identity(g.n_x)));
    assert!(err < 1e-12, "{err}");
}

#[test]
fn function_of_x_is_diagonal() {
    let g = grid(0.1);
    let f = |x: Dual| (-(x * x)).exp() * box_cut(x);
    let a = quant(g, symbol(move |x, _| f(x)));
    let d = OperatorMatrix::diagonal(g, "f", |x| C64::new(f(Dual::constant(x)).v, 0.0));
    let err = (&a.entries - &d.entries).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(err < 1e-10, "{err}");
}

#[test]
fn xi_is_spectral_derivative() {
    let g = grid(0.1);
    let a = quant(g, symbol(|x, xi| xi * box_cut(x)));
    let v = gaussian(&g, 0.0, 1.0);
    let av = a.apply(&v);
    // (h/i) d/dx e^{-x²} = 2ihx e^{-x²}
    for j in 0..g.n_x {
        let x = g.x(j);
        if x.abs() < 3.0 {
            let want = C64::new(0.0, 2.0 * g.h * x * (-x * x).exp());
            assert!((av[j] - want).norm() < 1e-8, "x={x}");
        }
    }
}

#[test]
fn canonical_commutator() {
    let g = grid(0.1);
    let d = quant(g, symbol(|x, xi| xi * box_cut(x)));
    let x = quant(g, symbol(|x, _| x * box_cut(x)));
    let c = commutator(&d, &x).unwrap();
    let v = gaussian(&g, 0.3, 0.5);
    let r = &c.apply(&v) - &v.mapv(|z| z * C64::new(0.0, -g.h));
    // The discrete kernel of hD has long tails, so only rows where the cutoff is 1 are exact.
    let err = (0..g.n_x).filter(|&j| g.x(j).abs() <= 4.0).fold(0.0f64, |m, j| m.max(r[j].norm()));
    assert!(err < 1e-8, "{err}");
    let zero = commutator(&d, &d).unwrap();
    assert!(zero.entries.iter().all(|z| *z == C64::new(0.0, 0.0)));
}

#[test]
fn positivity_transfer() {
    let m = model::inverted_oscillator();
    for &h in &[0.1, 0.05] {
        let f = build_frame(&m, grid(h)).unwrap();
        for &(x0, xi0) in &[(0.0, 0.0), (0.2, 0.0), (0.0, 0.2), (-0.15, 0.15)] {
            let v = coherent_state(&f.grid, x0, xi0);
            let q = commutator_rayleigh(&f, &v) / (2.0 * h);
            assert!((0.95..=1.05).contains(&q), "h={h} ({x0},{xi0}) {q}");
        }
    }
}

#[test]
fn polynomial_brackets_are_exact() {
    let g = grid(0.1);
    let p = quant(g, symbol(|x, xi| model::p(x, xi) * box_cut(x) * box_cut(xi)));
    let phi = quant(g, symbol(|x, xi| model::phi_plus(x, xi) * box_cut(x) * box_cut(xi)));
    let hp = quant(g, symbol(|x, xi| model::phi_plus(x, xi) * box_cut(x) * box_cut(xi) * -2.0));
    let c = commutator(&p, &phi).unwrap().scaled(C64::new(0.0, 1.0 / g.h));
    let v = gaussian(&g, 0.0, 0.5);
    let err = linalg::norm(&(&c.apply(&v) - &hp.apply(&v))) / linalg::norm(&v);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn bracket_law_is_second_order() {
    let a = symbol(|x, xi| (-(x * x) * 0.25 - xi * xi * 0.5).exp());
    let b = symbol(|x, xi| (-((x - 0.3) * (x - 0.3)) * 0.2 - xi * xi * 0.5).exp() * (xi + x * 0.5));
    let ab = {
        let (a, b) = (a.clone(), b.clone());
        move |x: f64, xi: f64| poisson_bracket_at(a.as_ref(), b.as_ref(), x, xi)
    };
    let err = |h: f64| {
        let g = make_grid(h, -8.0, 8.0, 8.0, 512).unwrap();
        let (qa, qb) = (quant(g, a.clone()), quant(g, b.clone()));
        let n = g.n_x;
        let vals = ndarray::Array2::from_shape_fn((n, n), |(j, i)| ab(g.x(j), g.xi(i)));
        let qab = weyl_quantize(&SymbolField::from_values(g, "{a,b}", vals).unwrap()).unwrap();
        let c = commutator(&qa, &qb).unwrap().scaled(C64::new(0.0, 1.0 / h));
        let d = OperatorMatrix { grid: g, entries: &c.entries - &qab.entries, label: "d".into() };
        op_norm(&d, 1e-8).unwrap().value
    };
    let (e1, e2, e3) = (err(0.2), err(0.1), err(0.05));
    assert!(e1 / e2 > 3.0 && e2 / e3 > 3.0, "{e1} {e2} {e3}");
}

#[test]
fn op_norm_examples() {
    let g = grid(0.1);
    let i = OperatorMatrix::identity(g);
    assert!((op_norm(&i, 1e-10).unwrap().value - 1.0).abs() < 1e-10);
    let n = g.n_x as f64;
    let d = OperatorMatrix::diagonal(g, "d", |x| C64::new(((x - g.x_min) / g.dx() + 1.0) / n, 0.0));
    let v = op_norm(&d, 1e-10).unwrap();
    assert!(v.converged);
    assert!((v.value - 1.0).abs() < 1e-6, "{}", v.value);
    let a = quant(g, symbol(|x, xi| (-(x * x) - xi * xi).exp() * (x + 1.0)));
    let base = op_norm(&a, 1e-12).unwrap().value;
    let c = C64::new(-1.5, 2.0);
    let scaled = op_norm(&a.scaled(c), 1e-12).unwrap().value;
    assert!((scaled - 2.5 * base).abs() <= 1e-8 * scaled);
    assert!(op_norm(&a, 0.0).is_err());
}

#[test]
fn adjoint_and_hermitian() {
    let g = grid(0.2);
    let a = quant(g, symbol(|x, xi| (-(x * x)).exp() * xi.sq() * box_cut(xi)));
    assert!(a.hermitian_defect() <= 1e-12);
    let b = a.scaled(C64::new(0.0, 1.0));
    let bb = adjoint(&b);
    assert!(linalg::frobenius(&(&bb.entries + &b.entries)) <= 1e-12 * linalg::frobenius(&b.entries));
}

#[test]
fn aliasing_is_detected() {
    let g = make_grid(0.2, -8.0, 8.0, 4.0, 64).unwrap();
    let f = SymbolField::from_closed_form(g, "xi", symbol(|_, xi| xi)).unwrap();
    assert!(matches!(weyl_quantize(&f), Err(Error::MomentumAliasing { .. })));
}

#[test]
fn grid_mismatch() {
    let a = OperatorMatrix::identity(grid(0.1));
    let b = OperatorMatrix::identity(grid(0.2));
    assert!(matches!(commutator(&a, &b), Err(Error::GridMismatch)));
}

#[test]
fn binary_round_trip() {
    let g = make_grid(0.5, -4.0, 4.0, 2.0, 16).unwrap();
    let a = quant(g, symbol(|x, xi| (x * 0.3 + xi).sq()));
    let mut buf = Vec::new();
    a.write_binary(&mut buf).unwrap();
    assert_eq!(read_binary(buf.as_slice()).unwrap(), a.entries);
}

