use std::f64::consts::PI;

use nhtrap::model;
use nhtrap::phasespace::*;
use nhtrap::Error;

fn model_p(grid: PhaseGrid) -> SymbolField {
    SymbolField::from_closed_form(grid, "p", symbol(model::p)).unwrap().unbounded_in_xi()
}

#[test]
fn grid_equality_case() {
    let g = make_grid(1.0, -8.0, 8.0, PI, 16).unwrap();
    assert_eq!(g.n_x, 16);
    assert!(g.admissible());
}

#[test]
fn grid_doubles_when_h_halves() {
    assert_eq!(make_grid(0.5, -8.0, 8.0, PI, 16).unwrap().n_x, 32);
}

#[test]
fn grid_cap() {
    let e = make_grid(2f64.powi(-20), -8.0, 8.0, PI, 16);
    assert!(matches!(e, Err(Error::GridCapExceeded { .. })));
}

#[test]
fn grid_rejects_bad_h() {
    assert!(make_grid(0.0, -8.0, 8.0, PI, 16).is_err());
}

#[test]
fn momentum_nodes() {
    let g = make_grid(0.1, -8.0, 8.0, 4.0, 64).unwrap();
    let n = g.n_x as f64;
    assert!((g.xi(0) + g.h * PI / g.dx()).abs() < 1e-12);
    assert!((g.xi(1) - g.xi(0) - g.h * 2.0 * PI / (n * g.dx())).abs() < 1e-14);
}

fn small_grid() -> PhaseGrid {
    make_grid(0.5, -4.0, 4.0, 2.0, 32).unwrap()
}

#[test]
fn bracket_of_linear_symbols() {
    let g = small_grid();
    let a = SymbolField::from_closed_form(g, "xi-x", symbol(|x, xi| xi - x)).unwrap();
    let b = SymbolField::from_closed_form(g, "xi+x", symbol(|x, xi| xi + x)).unwrap();
    let c = poisson_bracket(&a, &b).unwrap();
    assert!(c.values.iter().all(|v| (v - 2.0).abs() < 1e-15));
}

#[test]
fn bracket_of_p_with_itself() {
    let g = small_grid();
    let c = poisson_bracket(&model_p(g), &model_p(g)).unwrap();
    assert!(c.values.iter().all(|v| *v == 0.0));
}

#[test]
fn bracket_p_phi_plus() {
    let g = small_grid();
    let phi = SymbolField::from_closed_form(g, "phi+", symbol(model::phi_plus)).unwrap().unbounded_in_xi();
    let c = poisson_bracket(&model_p(g), &phi).unwrap();
    for j in 0..g.n_x {
        for i in 0..g.n_x {
            let want = -2.0 * (g.xi(i) - g.x(j));
            assert!((c.values[[j, i]] - want).abs() < 1e-12);
        }
    }
    // Finite differences are exact on quadratics up to the one-sided edge stencils.
    let pv = SymbolField::from_values(g, "p", model_p(g).values.clone()).unwrap();
    let fv = SymbolField::from_values(g, "phi+", phi.values.clone()).unwrap();
    let d = poisson_bracket(&pv, &fv).unwrap();
    let err = (&d.values - &c.values).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(err < 1e-9, "{err}");
}

#[test]
fn bracket_fd_is_second_order() {
    let a = symbol(|x, xi| (-(x * x) - xi * xi * 0.5).exp());
    let b = symbol(|x, xi| (x * 0.7).exp() * xi.powi(3) * 0.1);
    let err = |h: f64| {
        let g = make_grid(h, -4.0, 4.0, 2.0, 16).unwrap();
        let fa = SymbolField::from_closed_form(g, "a", a.clone()).unwrap();
        let fb = SymbolField::from_closed_form(g, "b", b.clone()).unwrap();
        let exact = poisson_bracket(&fa, &fb).unwrap();
        let na = SymbolField::from_values(g, "a", fa.values.clone()).unwrap();
        let nb = SymbolField::from_values(g, "b", fb.values.clone()).unwrap();
        let approx = poisson_bracket(&na, &nb).unwrap();
        let mut m: f64 = 0.0;
        for j in 1..g.n_x - 1 {
            for i in 1..g.n_x - 1 {
                if g.x(j).abs() < 2.0 && g.xi(i).abs() < 1.5 {
                    m = m.max((approx.values[[j, i]] - exact.values[[j, i]]).abs());
                }
            }
        }
        (m, g.dx().max(g.dxi()))
    };
    let (e1, d1) = err(0.5);
    let (e2, d2) = err(0.25);
    let rate = (e1 / e2).ln() / (d1 / d2).ln();
    assert!(rate > 1.7, "rate {rate}");
}

#[test]
fn flow_matches_closed_form() {
    let g = small_grid();
    let t = 0.5 * 2f64.ln();
    let tr = hamilton_flow(&model_p(g), (0.0, 1.0), t, FlowOptions::default()).unwrap();
    let (x, xi) = tr.end();
    assert!((x - 0.75).abs() < 1e-8 && (xi - 1.25).abs() < 1e-8, "{x} {xi}");
    assert!((tr.times.last().unwrap() - t).abs() < 1e-15);
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn flow_fixed_point() {
    let tr = hamilton_flow(&model_p(small_grid()), (0.0, 0.0), 4.0, FlowOptions::default()).unwrap();
    assert_eq!(tr.end(), (0.0, 0.0));
}

#[test]
fn flow_contracts_on_stable_manifold() {
    let tr = hamilton_flow(&model_p(small_grid()), (1.0, -1.0), 3.0, FlowOptions::default()).unwrap();
    let (x, xi) = tr.end();
    let bound = (-6.0f64).exp() * 2f64.sqrt() * 1.01;
    assert!(x.abs() <= bound && xi.abs() <= bound);
}

#[test]
fn flow_needs_closed_form() {
    let g = small_grid();
    let f = SymbolField::from_values(g, "p", model_p(g).values.clone()).unwrap();
    assert!(matches!(hamilton_flow(&f, (0.0, 0.0), 1.0, FlowOptions::default()), Err(Error::MissingClosedForm(_))));
}

#[test]
fn backward_flow() {
    let tr = hamilton_flow(&model_p(small_grid()), (1.0, 1.0), -1.0, FlowOptions::default()).unwrap();
    let (x, xi) = tr.end();
    assert!((x - (-2.0f64).exp()).abs() < 1e-9 && (xi - (-2.0f64).exp()).abs() < 1e-9);
    assert_eq!(tr.direction, -1.0);
}

fn trap_grid() -> PhaseGrid {
    // Δξ = 2πh/L = 1/4, Δx = 1/8: (1, 1) and (1.5, 0) are nodes.
    make_grid(2.0 / PI, -8.0, 8.0, 4.0, 128).unwrap()
}

fn node(g: &PhaseGrid, x: f64, xi: f64) -> (usize, usize) {
    let j = ((x - g.x_min) / g.dx()).round() as usize;
    let i = (xi / g.dxi()).round() as i64 + (g.n_x / 2) as i64;
    assert!((g.x(j) - x).abs() < 1e-12 && (g.xi(i as usize) - xi).abs() < 1e-12);
    (j, i as usize)
}

#[test]
fn trapped_set_examples() {
    let g = trap_grid();
    let absorb = |x: f64, _xi: f64| x.abs() >= 2.0;
    let m = trapped_sets(&model_p(g), &absorb, TrapOptions::default()).unwrap();
    let o = node(&g, 0.0, 0.0);
    assert!(m.forward[o] && m.backward[o] && m.trapped[o]);
    let gp = node(&g, 1.0, 1.0);
    assert!(m.backward[gp] && !m.forward[gp]);
    let out = node(&g, 1.5, 0.0);
    assert!(!m.forward[out] && !m.backward[out]);
    for (x, xi) in m.trapped_points() {
        assert!((x * x + xi * xi).sqrt() <= 0.1);
    }
    assert_eq!(m.trapped.len(), g.n_x * g.n_x);
    let both = ndarray::Zip::from(&m.forward).and(&m.backward).and(&m.trapped).all(|&f, &b, &t| t == (f && b));
    assert!(both);
}

#[test]
fn trapped_csv_header() {
    let g = make_grid(1.0, -4.0, 4.0, 1.0, 8).unwrap();
    let m = trapped_sets(&model_p(g), &|x, _| x.abs() >= 2.0, TrapOptions { t_max: 1.0, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("x,xi,forward,backward,trapped\n"));
    assert_eq!(s.lines().count(), 1 + g.n_x * g.n_x);
}

#[test]
fn field_values_match_closed_form() {
    let g = small_grid();
    let f = model_p(g);
    for j in 0..g.n_x {
        for i in 0..g.n_x {
            assert_eq!(f.values[[j, i]], f.eval(g.x(j), g.xi(i)));
        }
    }
}

#[test]
fn non_finite_values_rejected() {
    let g = small_grid();
    let e = SymbolField::from_closed_form(g, "bad", symbol(|x, _| x.recip()));
    assert!(matches!(e, Err(Error::NonFinite(_))), "{e:?}");
}
