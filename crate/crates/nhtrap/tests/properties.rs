use proptest::prelude::*;

use nhtrap::bsymbols::{BCommutant, BCommutantParams, BPoint, BStructuralModel, Orientation, ParabolicBox, parabolic_check};
use nhtrap::commutant::{build_commutant, build_cutoffs};
use nhtrap::dual::Dual;
use nhtrap::model::{self, exact_flow, inverted_oscillator};
use nhtrap::phasespace::{integrate, make_grid, poisson_bracket, symbol, FlowOptions, SymbolField};
use nhtrap::quantize::weyl_quantize;
use nhtrap::resolvent::fit_scaling;
use nhtrap::smooth::Plateau;

fn bump_symbol(cx: f64, cxi: f64, w: f64, k: f64) -> impl Fn(Dual, Dual) -> Dual + Send + Sync + 'static {
    move |x, xi| (-((x - cx).sq() + (xi - cxi).sq()) / w).exp() * (x * k + 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn bracket_antisymmetry(cx in -1.0..1.0f64, cxi in -1.0..1.0f64, w in 0.3..2.0f64, k in -1.0..1.0f64, kk in -1.0..1.0f64) {
        let g = make_grid(0.5, -4.0, 4.0, 2.0, 32).unwrap();
        let a = SymbolField::from_closed_form(g, "a", symbol(bump_symbol(cx, cxi, w, k))).unwrap();
        let b = SymbolField::from_closed_form(g, "b", symbol(bump_symbol(-cxi, cx, w * 0.7, kk))).unwrap();
        let ab = poisson_bracket(&a, &b).unwrap();
        let ba = poisson_bracket(&b, &a).unwrap();
        prop_assert!((&ab.values + &ba.values).iter().all(|v| *v == 0.0));
        let na = SymbolField::from_values(g, "a", a.values.clone()).unwrap();
        let nb = SymbolField::from_values(g, "b", b.values.clone()).unwrap();
        let nab = poisson_bracket(&na, &nb).unwrap();
        let nba = poisson_bracket(&nb, &na).unwrap();
        prop_assert!((&nab.values + &nba.values).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn energy_is_conserved(x in -1.0..1.0f64, xi in -1.0..1.0f64, t in -5.0..5.0f64) {
        let tr = integrate(symbol(model::p).as_ref(), (x, xi), t, FlowOptions::default()).unwrap();
        prop_assert!(tr.energy_drift <= 1e-8, "{}", tr.energy_drift);
    }

    #[test]
    fn phi_plus_decays_along_flow(x in -0.5..0.5f64, xi in -0.5..0.5f64, t in 0.0..3.0f64) {
        let tr = integrate(symbol(model::p).as_ref(), (x, xi), t, FlowOptions { dt: 1e-3, bound: 1e9 }).unwrap();
        let phi0 = xi - x;
        for (s, (y, eta)) in tr.times.iter().zip(&tr.points).step_by(50) {
            let want = phi0 * (-2.0 * s).exp();
            prop_assert!(((eta - y) - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn integrator_matches_exact_flow(x in -0.3..0.3f64, xi in -0.3..0.3f64, t in -3.0..3.0f64) {
        let tr = integrate(symbol(model::p).as_ref(), (x, xi), t, FlowOptions { dt: 1e-3, bound: 1e9 }).unwrap();
        let (a, b) = tr.end();
        let (ea, eb) = exact_flow((x, xi), t);
        let scale = (ea * ea + eb * eb).sqrt().max(1.0);
        prop_assert!((a - ea).abs() <= 1e-7 * scale && (b - eb).abs() <= 1e-7 * scale);
    }

    #[test]
    fn weyl_quantization_is_hermitian(cx in -2.0..2.0f64, cxi in -1.0..1.0f64, w in 0.2..1.5f64, k in -1.0..1.0f64) {
        let g = make_grid(0.25, -8.0, 8.0, 4.0, 128).unwrap();
        let a = SymbolField::from_closed_form(g, "a", symbol(bump_symbol(cx, cxi, w, k))).unwrap().unbounded_in_xi();
        let op = weyl_quantize(&a).unwrap();
        prop_assert!(op.hermitian_defect() <= 1e-12);
    }

    #[test]
    fn plateau_identity(r in 0.05..2.0f64, frac in 0.1..0.9f64, s in 0.0..1.2f64) {
        let c = Plateau::new(frac * r, r);
        let t = s * r;
        let d = c.eval(Dual::var(t));
        let chi1 = c.chi1_val(t);
        prop_assert!((d.d * d.v + chi1 * chi1).abs() <= 1e-12 * (1.0 + chi1 * chi1));
        prop_assert!(d.d <= 0.0);
        prop_assert!((0.0..=1.0).contains(&d.v));
    }

    #[test]
    fn commutant_identity_is_exact(kappa in 0.01..0.2f64, r in 0.05..0.25f64, f in 0.2..3.0f64, x in -0.6..0.6f64, xi in -0.6..0.6f64) {
        let m = inverted_oscillator();
        let c = build_cutoffs(kappa, r, f, 0.5).unwrap();
        let cs = build_commutant(&m, &c).unwrap();
        let (pp, pm, p) = (xi - x, xi + x, xi * xi - x * x);
        let lhs = cs.formulas.quarter_hp_a_sq(pp, pm, p, 2.0, 2.0);
        let ev = |g: fn(&nhtrap::commutant::CommutantFormulas, Dual, Dual, Dual) -> Dual| g(&cs.formulas, pp.into(), pm.into(), p.into()).v;
        use nhtrap::commutant::CommutantFormulas as F;
        let rhs = -2.0 * ev(F::a_plus).powi(2) - 2.0 * ev(F::a_minus).powi(2) + ev(F::e_minus).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn b_decomposition_pointwise(
        rho in 0.5..1.0f64, tau in 0.0..0.2f64, up in -0.6..0.6f64, um in -0.6..0.6f64, v in -0.4..0.4f64,
        beta in 0.0..0.6f64, nu in -0.4..0.4f64, s in 0.0..2.0f64, reversed in any::<bool>(),
    ) {
        let model = BStructuralModel { beta_plus: beta, nu_plus: nu, nu_minus: -nu, ..Default::default() };
        let params = if reversed {
            BCommutantParams { r: 1.0, s, orientation: Orientation::Reversed, ..Default::default() }
        } else {
            BCommutantParams { s, ..Default::default() }
        };
        prop_assume!(!(reversed && tau == 0.0));
        let bc = BCommutant::new(model, params).unwrap();
        let pt = BPoint { rho, tau, up, um, v };
        let lhs = bc.quarter_hp_a_sq(&pt);
        let rhs = bc.terms(&pt).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} {rhs}");
    }

    #[test]
    fn parabolic_threshold_is_sufficient(beta in 0.0..2.0f64, cd in 0.5..3.0f64, u in 0.1..1.0f64) {
        let model = BStructuralModel { beta_plus: beta, c_d_sq: cd, ..Default::default() };
        let b = ParabolicBox { u_max: u, ..Default::default() };
        let r = parabolic_check(&model, 1.0, &b).unwrap();
        let at = parabolic_check(&model, r.threshold * 1.0001 + 1e-12, &b).unwrap();
        prop_assert!(at.margin >= 0.0);
        let want = 2.0 * beta * u / (cd - model.c_tilde_sq());
        prop_assert!((r.threshold - want).abs() <= 1e-6 * want.max(1.0));
    }

    #[test]
    fn power_fit_recovers_exponent(c in 0.1..10.0f64, alpha in 0.5..3.0f64) {
        let h: Vec<f64> = (0..6).map(|k| 0.1 * 0.6f64.powi(k)).collect();
        let y: Vec<f64> = h.iter().map(|h| c * h.powf(-alpha)).collect();
        let f = fit_scaling(&h, &y).unwrap();
        prop_assert!((f.alpha - alpha).abs() < 1e-9);
        prop_assert!(f.power_rms < 1e-9);
    }
}
