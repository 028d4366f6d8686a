//! One function per subcommand. Each returns the JSON artifact plus its checks.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde_json::{json, Map, Value};

use nhtrap::bsymbols::{
    domination_min_b_sq as b_domination, parabolic_check, parabolic_threshold_closed_form, verify_b_decomposition,
    verify_b_perturbed, verify_b_weighted, BDecompositionReport, BStructuralModel, Orientation, WData,
};
use nhtrap::commutant::{
    build_commutant, domination_min_b_sq, domination_threshold, verify_decomposition, verify_decomposition_with,
    verify_operator_commutator, OperatorCommutatorReport,
};
use nhtrap::linalg::{PowerOptions, C64};
use nhtrap::quantize::weyl_quantize;
use nhtrap::resolvent::{
    assemble, check_theorem1_samples, fit_scaling, max_min_ratio, resolvent_norms, FitModel, FitResult, NormSelector,
    Resolvent, ScalingRecord, ScalingReport, Theorem1Stats,
};
use nhtrap::spaces::{build_frame, build_frame_variant, check_norm_equivalence, coherent_state, commutator_rayleigh, FrameVariant};

use crate::config::ExperimentConfig;
use crate::svg;
use crate::CliError;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const TRAPPED_RADIUS: f64 = 0.1;
pub const OFF_SUPPORT_TOL: f64 = 1e-8;
pub const STABILITY_FACTOR: f64 = 2.0;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const B_RESIDUAL_TOL: f64 = 1e-9;
pub const PARABOLIC_REL_TOL: f64 = 0.05;
pub const C_LOWER_MIN: f64 = 0.3;
pub const DECAY_SLOPE: (f64, f64) = (0.8, 1.2);
pub const RAYLEIGH_BAND: (f64, f64) = (0.95, 1.05);
pub const SPREAD_MAX: f64 = 3.0;
pub const ALPHA_BAND: (f64, f64) = (0.9, 1.1);
pub const LOG_IMPROVEMENT_MIN: f64 = 0.1;
pub const MIN_FIT_POINTS: usize = 4;
pub const RAYLEIGH_CENTERS: [(f64, f64); 4] = [(0.0, 0.0), (0.2, 0.0), (0.0, 0.2), (-0.15, 0.15)];

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    VerifySymbols,
    VerifyOperators,
    VerifyBsymbols,
    Norms,
    Scaling,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::VerifySymbols, Stage::VerifyOperators, Stage::VerifyBsymbols, Stage::Norms, Stage::Scaling, Stage::Report];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::VerifySymbols => "verify-symbols",
            Stage::VerifyOperators => "verify-operators",
            Stage::VerifyBsymbols => "verify-bsymbols",
            Stage::Norms => "norms",
            Stage::Scaling => "scaling",
            Stage::Report => "report",
        }
    }

    pub fn artifact(&self) -> &'static str {
        match self {
            Stage::VerifySymbols => "symbols.json",
            Stage::VerifyOperators => "operators.json",
            Stage::VerifyBsymbols => "bsymbols.json",
            Stage::Norms => "norms.json",
            Stage::Scaling => "scaling.json",
            Stage::Report => "report.json",
        }
    }
}

pub struct StageOutput {
    pub stage: Stage,
    pub body: Map<String, Value>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl StageOutput {
    fn new(stage: Stage) -> Self {
        StageOutput { stage, body: Map::new(), checks: Vec::new(), warnings: Vec::new(), error: None }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    fn put(&mut self, key: &str, v: Value) {
        self.body.insert(key.into(), v);
    }

    pub fn failures(&self, strict: bool) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {} ({})", self.stage.name(), c.name, c.detail))
            .collect();
        if let Some(e) = &self.error {
            out.push(format!("{}: error: {e}", self.stage.name()));
        }
        if strict {
            out.extend(self.warnings.iter().map(|w| format!("{}: warning: {w}", self.stage.name())));
        }
        out
    }

    pub fn passed(&self, strict: bool) -> bool {
        self.failures(strict).is_empty()
    }

    pub fn to_json(&self, config_hash: &str, strict: bool) -> Value {
        let mut m = self.body.clone();
        m.insert("stage".into(), json!(self.stage.name()));
        m.insert("config_hash".into(), json!(config_hash));
        m.insert("status".into(), json!(if self.passed(strict) { "passed" } else { "failed" }));
        m.insert(
            "checks".into(),
            Value::Array(
                self.checks
                    .iter()
                    .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
                    .collect(),
            ),
        );
        m.insert("warnings".into(), json!(self.warnings));
        if let Some(e) = &self.error {
            m.insert("error".into(), json!(e));
        }
        Value::Object(m)
    }
}

/// Shared state for one invocation.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub strict: bool,
}

impl Context {
    pub fn hash(&self) -> String {
        self.cfg.hash()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))
    }

    pub fn write_json(&self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

fn fmt_e(v: f64) -> String {
    format!("{v:.3e}")
}

fn time_if(cfg: &ExperimentConfig, start: Instant) -> Option<f64> {
    cfg.output_record_timing.then(|| start.elapsed().as_secs_f64())
}

/// Run one stage and write its artifact; stage errors are recorded, not propagated.
pub fn run_stage(ctx: &Context, stage: Stage) -> Result<StageOutput, CliError> {
    let start = Instant::now();
    let mut out = StageOutput::new(stage);
    let res = match stage {
        Stage::VerifySymbols => verify_symbols(ctx, &mut out),
        Stage::VerifyOperators => verify_operators(ctx, &mut out),
        Stage::VerifyBsymbols => verify_bsymbols(ctx, &mut out),
        Stage::Norms => norms(ctx, &mut out),
        Stage::Scaling => scaling(ctx, &mut out),
        Stage::Report => report(ctx, &mut out),
    };
    match res {
        Ok(()) => {}
        Err(CliError::Library(e)) => out.error = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    if let Some(t) = time_if(&ctx.cfg, start) {
        out.put("runtime_s", json!(t));
    }
    ctx.write_json(stage.artifact(), &out.to_json(&ctx.hash(), ctx.strict))?;
    Ok(out)
}

fn verify_symbols(ctx: &Context, out: &mut StageOutput) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let model = cfg.model()?;
    let cutoffs = cfg.cutoffs()?;
    let grid = cfg.grid(cfg.grid_symbol_h)?;
    let cs = build_commutant(&model, &cutoffs)?;
    let rep = verify_decomposition(&cs, &model, grid)?;
    out.put("n_x", json!(grid.n_x));
    out.put("max_residual", json!(rep.max_abs));
    out.put("lhs_max", json!(rep.lhs_max));
    out.check("max_residual", rep.max_abs <= RESIDUAL_TOL, format!("{} <= {RESIDUAL_TOL:e}", fmt_e(rep.max_abs)));
    let mut buf = Vec::new();
    rep.write_csv(&mut buf, cfg.model_o_radius).map_err(|e| CliError::io(&ctx.path("residual.csv"), e))?;
    ctx.write("residual.csv", &buf)?;

    let defect = cutoffs.identity_defect(2000);
    out.put("cutoff_identity_defect", json!(defect));
    out.check("cutoff_identity", defect <= IDENTITY_TOL, format!("{} <= {IDENTITY_TOL:e}", fmt_e(defect)));

    let t_max = cutoffs.r + cutoffs.kappa;
    let f_dom = domination_threshold(cfg.cutoffs_m0, t_max);
    let b_sq = domination_min_b_sq(cfg.cutoffs_m0, f_dom, t_max, 1000);
    out.put("domination", json!({"m0": cfg.cutoffs_m0, "f": f_dom, "t_max": t_max, "min_b_sq": b_sq}));
    out.check("domination", b_sq >= 0.25 - 1e-12, format!("min b^2 = {b_sq:.6} at F = {f_dom:.6}"));

    let perturbed = verify_decomposition_with(&cs, &model, grid, 1.1 * model.c_plus_sq, model.c_minus_sq)?;
    out.put("negative_control_residual", json!(perturbed.max_abs));
    out.check(
        "negative_control",
        perturbed.max_abs > 1e3 * RESIDUAL_TOL,
        format!("perturbed c+^2 leaves residual {}", fmt_e(perturbed.max_abs)),
    );

    let tgrid = cfg.trapped_grid()?;
    let x_esc = cfg.trapped_escape_x;
    let absorb = move |x: f64, _xi: f64| x.abs() >= x_esc;
    let opts = nhtrap::phasespace::TrapOptions { t_max: cfg.trapped_t_max, dt: cfg.trapped_dt, delta: cfg.trapped_delta };
    let mask = nhtrap::phasespace::trapped_sets(&model.p_field(tgrid)?, &absorb, opts)?;
    let pts = mask.trapped_points();
    let radius = pts.iter().map(|(x, xi)| x.hypot(*xi)).fold(0.0, f64::max);
    out.put("trapped", json!({"n_x": tgrid.n_x, "count": pts.len(), "max_radius": radius}));
    out.check(
        "trapped_radius",
        !pts.is_empty() && radius <= TRAPPED_RADIUS,
        format!("{} trapped nodes, max radius {radius}", pts.len()),
    );
    let mut buf = Vec::new();
    mask.write_csv(&mut buf).map_err(|e| CliError::io(&ctx.path("trapped.csv"), e))?;
    ctx.write("trapped.csv", &buf)
}

fn operator_json(r: &OperatorCommutatorReport) -> Value {
    json!({
        "h": r.h,
        "n_x": r.n_x,
        "d_norm_over_h": r.d_norm_over_h,
        "hermitian_defect": r.hermitian_defect,
        "off_support": r.off_support,
    })
}

fn verify_operators(ctx: &Context, out: &mut StageOutput) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let model = cfg.model()?;
    let cutoffs = cfg.cutoffs()?;

    let g = cfg.grid(cfg.grid_symbol_h)?;
    let p = weyl_quantize(&model.p_field(g)?)?;
    let defect = p.hermitian_defect();
    out.put("p_hermitian_defect", json!(defect));
    out.check("p_hermitian", defect <= HERMITIAN_TOL, format!("{} <= {HERMITIAN_TOL:e}", fmt_e(defect)));

    let mut rows = Vec::new();
    for &h in &cfg.sweep_operator_h {
        let r = verify_operator_commutator(&model, &cutoffs, cfg.grid(h)?, OFF_SUPPORT_TOL)?;
        out.check(
            &format!("off_support h={h}"),
            r.off_support <= OFF_SUPPORT_TOL,
            format!("{} <= {OFF_SUPPORT_TOL:e}", fmt_e(r.off_support)),
        );
        out.check(
            &format!("remainder_hermitian h={h}"),
            r.hermitian_defect <= HERMITIAN_TOL,
            format!("{} <= {HERMITIAN_TOL:e}", fmt_e(r.hermitian_defect)),
        );
        rows.push(r);
    }
    let ratio = max_min_ratio(&rows.iter().map(|r| r.d_norm_over_h).collect::<Vec<_>>());
    out.put("remainder", Value::Array(rows.iter().map(operator_json).collect()));
    out.put("remainder_ratio", json!(ratio));
    out.check(
        "remainder_stable",
        ratio <= STABILITY_FACTOR,
        format!("max/min of |D|/h = {ratio:.3} <= {STABILITY_FACTOR}"),
    );

    let (rmodel, rcut) = cfg.resolved_cutoffs()?;
    let mut rrows = Vec::new();
    for &h in &cfg.sweep_operator_h {
        rrows.push(verify_operator_commutator(&rmodel, &rcut, cfg.grid(h)?, OFF_SUPPORT_TOL)?);
    }
    let rratio = max_min_ratio(&rrows.iter().map(|r| r.d_norm_over_h).collect::<Vec<_>>());
    out.put(
        "resolved",
        json!({
            "kappa": rcut.kappa,
            "r": rcut.r,
            "f": rcut.f,
            "psi_width": rcut.psi_width,
            "o_radius": rmodel.o_radius,
            "remainder": rrows.iter().map(operator_json).collect::<Vec<_>>(),
            "remainder_ratio": rratio,
        }),
    );
    Ok(())
}

fn b_report_json(r: &BDecompositionReport) -> Value {
    let coverage: Map<String, Value> = r
        .term_coverage
        .iter()
        .map(|(name, dev, size)| (name.clone(), json!({"deviation": dev, "size": size})))
        .collect();
    json!({
        "max_residual": r.max_residual,
        "max_lhs": r.max_lhs,
        "nodes": r.nodes,
        "min_radicand_on_supp": r.min_radicand_on_supp,
        "a_r_gamma": r.a_r_gamma,
        "term_coverage": coverage,
    })
}

fn verify_bsymbols(ctx: &Context, out: &mut StageOutput) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let model = cfg.b_model();
    let grid = cfg.b_grid();
    let base = cfg.b_params();

    let mut cases: Vec<(&str, BStructuralModel, nhtrap::bsymbols::BCommutantParams)> = vec![
        ("default", model, base),
        ("weighted", model, nhtrap::bsymbols::BCommutantParams { r: cfg.bsymbols_weighted_r, ..base }),
        (
            "reversed",
            model,
            nhtrap::bsymbols::BCommutantParams { r: cfg.bsymbols_reversed_r, orientation: Orientation::Reversed, ..base },
        ),
    ];
    if model.w == WData::Zero {
        cases.push(("w_demo", BStructuralModel { w: WData::Demo, ..model }, base));
    }
    let mut results = Map::new();
    for (name, m, p) in cases {
        let rep = if p.r == 0.0 { verify_b_decomposition(&m, &p, &grid)? } else { verify_b_weighted(&m, &p, &grid)? };
        out.check(
            &format!("{name}_residual"),
            rep.max_residual <= B_RESIDUAL_TOL,
            format!("{} <= {B_RESIDUAL_TOL:e} (r = {})", fmt_e(rep.max_residual), p.r),
        );
        let mut v = b_report_json(&rep);
        v["r"] = json!(p.r);
        results.insert(name.into(), v);
    }
    out.put("decompositions", Value::Object(results));

    let perturbed = verify_b_perturbed(&model, &base, &grid, 1.1 * model.c_d_sq)?;
    out.put("negative_control_residual", json!(perturbed.max_residual));
    out.check(
        "negative_control",
        perturbed.max_residual > 1e3 * B_RESIDUAL_TOL,
        format!("perturbed c_d^2 leaves residual {}", fmt_e(perturbed.max_residual)),
    );

    let pbox = cfg.parabolic_box();
    let par = parabolic_check(&model, base.big_m, &pbox)?;
    let hand = parabolic_threshold_closed_form(&model, &pbox);
    let rel = if hand == 0.0 { par.threshold.abs() } else { (par.threshold - hand).abs() / hand.abs() };
    out.put(
        "parabolic",
        json!({
            "threshold": par.threshold,
            "closed_form": hand,
            "relative_error": rel,
            "margin": par.margin,
            "pointwise_margin": par.pointwise_margin,
            "big_m": base.big_m,
        }),
    );
    out.check(
        "parabolic_threshold",
        rel <= PARABOLIC_REL_TOL,
        format!("bisected {:.6} vs hand {:.6}", par.threshold, hand),
    );

    let b_sq = b_domination(&base, cfg.cutoffs_m0);
    out.put("domination_min_b_sq", json!(b_sq));
    out.put("grid_nodes", json!(grid.nodes));
    Ok(())
}

fn norms(ctx: &Context, out: &mut StageOutput) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let model = cfg.model()?;
    let mut rows = Vec::new();
    let mut hs = Vec::new();
    let mut broken = Vec::new();
    for &h in &cfg.sweep_norm_h {
        let frame = build_frame(&model, cfg.grid(h)?)?;
        let (lo, hi) = check_norm_equivalence(&frame);
        let bf = build_frame_variant(&model, cfg.grid(h)?, FrameVariant::BrokenTransversality)?;
        let (blo, _) = check_norm_equivalence(&bf);
        out.check(&format!("c_lower h={h}"), lo >= C_LOWER_MIN, format!("{lo:.6} >= {C_LOWER_MIN}"));
        rows.push(json!({
            "h": h,
            "n_x": frame.grid.n_x,
            "c_lower": lo,
            "c_upper": hi,
            "condition": frame.condition,
            "broken_c_lower": blo,
        }));
        hs.push(h);
        broken.push(blo);
    }
    out.put("frames", Value::Array(rows));
    match fit_scaling(&hs, &broken) {
        Ok(fit) => {
            let slope = -fit.alpha;
            out.put("broken_slope", json!(slope));
            out.check(
                "broken_decay",
                (DECAY_SLOPE.0..=DECAY_SLOPE.1).contains(&slope),
                format!("c_lower ~ h^{slope:.3}, want exponent in [{}, {}]", DECAY_SLOPE.0, DECAY_SLOPE.1),
            );
        }
        Err(e) => out.check("broken_decay", false, format!("fit refused: {e}")),
    }
    Ok(())
}

struct HResult {
    record: ScalingRecord,
    theorem1: Theorem1Stats,
    rayleigh: Vec<f64>,
}

fn h_seed(seed: u64, h: f64) -> u64 {
    seed ^ h.to_bits().rotate_left(17)
}

fn one_h(cfg: &ExperimentConfig, h: f64) -> nhtrap::Result<HResult> {
    let start = Instant::now();
    let model = cfg.model()?;
    let grid = cfg.grid(h)?;
    let frame = build_frame(&model, grid)?;
    let z = C64::new(cfg.z_re, cfg.z_im_coeff * h * h);
    let r = Resolvent::new(assemble(&model, grid, z, cfg.z_im_bound)?)?;
    let seed = h_seed(cfg.run_seed, h);
    let opts = PowerOptions { seed, block: cfg.sweep_power_block, ..Default::default() };
    let mut record = resolvent_norms(&r, &frame, opts);
    let theorem1 = check_theorem1_samples(&r, &frame, cfg.sweep_samples, seed)?;
    let rayleigh = RAYLEIGH_CENTERS
        .iter()
        .map(|&(x0, xi0)| commutator_rayleigh(&frame, &coherent_state(&grid, x0, xi0)) / (2.0 * h))
        .collect();
    if let Some(t) = time_if(cfg, start) {
        record.wall_time_s = t;
    }
    Ok(HResult { record, theorem1, rayleigh })
}

/// Sweep `h` over `threads` workers; results come back in input order.
fn sweep(cfg: &ExperimentConfig) -> Vec<(f64, nhtrap::Result<HResult>)> {
    let hs = &cfg.sweep_h;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<nhtrap::Result<HResult>>>> = Mutex::new((0..hs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..cfg.run_threads.min(hs.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= hs.len() {
                    break;
                }
                let res = one_h(cfg, hs[k]);
                slots.lock().expect("worker panicked")[k] = Some(res);
            });
        }
    });
    let slots = slots.into_inner().expect("worker panicked");
    hs.iter().copied().zip(slots.into_iter().map(|r| r.expect("every slot filled"))).collect()
}

fn fit_json(f: &FitResult) -> Value {
    json!({
        "log_c": f.log_c,
        "alpha": f.alpha,
        "power_rms": f.power_rms,
        "c1": f.c1,
        "c2": f.c2,
        "log_rms": f.log_rms,
        "winner": match f.winner { FitModel::Power => "power", FitModel::LogCorrected => "log_corrected" },
        "improvement": f.improvement,
        "short_span": f.short_span,
    })
}

fn record_json(r: &ScalingRecord) -> Value {
    json!({
        "h": r.h,
        "n_x": r.n_x,
        "norm_l2": r.norm_l2,
        "norm_iso": r.norm_iso,
        "norm_sandwich": r.norm_sandwich,
        "wall_time_s": r.wall_time_s,
        "flagged": r.flagged,
    })
}

fn fits_json(rep: &ScalingReport) -> Value {
    Value::Object(rep.fits.iter().map(|(s, f)| (s.name().to_string(), fit_json(f))).collect())
}

fn scaling(ctx: &Context, out: &mut StageOutput) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let mut records = Vec::new();
    let mut per_h = Vec::new();
    let mut theorem = Vec::new();
    for (h, res) in sweep(cfg) {
        match res {
            Ok(r) => {
                let ok = r.rayleigh.iter().all(|q| (RAYLEIGH_BAND.0..=RAYLEIGH_BAND.1).contains(q));
                out.check(
                    &format!("rayleigh h={h}"),
                    ok,
                    format!("i[Q+,Q-]/(2h) on probes {:?}", r.rayleigh.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>()),
                );
                per_h.push(json!({
                    "h": h,
                    "rayleigh_over_2h": r.rayleigh,
                    "theorem1": {
                        "weak_max": r.theorem1.weak_max,
                        "weak_mean": r.theorem1.weak_mean,
                        "iso_max": r.theorem1.iso_max,
                        "iso_mean": r.theorem1.iso_mean,
                    },
                }));
                if r.record.flagged {
                    out.warnings.push(format!("h={h}: a norm estimate did not converge"));
                }
                theorem.push(r.theorem1);
                records.push(r.record);
            }
            Err(e) => out.check(&format!("solve h={h}"), false, e.to_string()),
        }
    }
    let rep = ScalingReport::new(records, ctx.hash());
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).map_err(|e| CliError::io(&ctx.path("records.csv"), e))?;
    ctx.write("records.csv", &buf)?;

    theorem.sort_by(|a, b| b.h.total_cmp(&a.h));
    out.put("records", Value::Array(rep.records.iter().map(record_json).collect()));
    out.put("per_h", Value::Array(per_h));
    out.put("fits", fits_json(&rep));

    let iso_spread = rep.spread(NormSelector::Iso);
    let sandwich_spread = rep.spread(NormSelector::Sandwich);
    let weak_ratio = max_min_ratio(&theorem.iter().map(|t| t.weak_max).collect::<Vec<_>>());
    let iso_ratio = max_min_ratio(&theorem.iter().map(|t| t.iso_max).collect::<Vec<_>>());
    out.put(
        "spreads",
        json!({
            "h_norm_iso": iso_spread,
            "h_norm_sandwich": sandwich_spread,
            "h_norm_l2": rep.spread(NormSelector::L2),
            "theorem1_weak": weak_ratio,
            "theorem1_iso": iso_ratio,
        }),
    );

    out.check("iso_spread", iso_spread <= SPREAD_MAX, format!("max/min h*norm_iso = {iso_spread:.4} <= {SPREAD_MAX}"));
    match rep.fit(NormSelector::Iso) {
        Some(f) => out.check(
            "iso_alpha",
            (ALPHA_BAND.0..=ALPHA_BAND.1).contains(&f.alpha),
            format!("alpha = {:.4} in [{}, {}]", f.alpha, ALPHA_BAND.0, ALPHA_BAND.1),
        ),
        None => out.check("iso_alpha", false, format!("fewer than {MIN_FIT_POINTS} usable records")),
    }
    out.check(
        "l2_increasing",
        rep.records.len() >= 2 && rep.scaled_increasing(NormSelector::L2),
        format!("h*norm_l2 = {:?}", rep.scaled(NormSelector::L2).iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()),
    );
    match rep.fit(NormSelector::L2) {
        Some(f) => {
            out.check(
                "l2_log_model",
                f.winner == FitModel::LogCorrected,
                format!("log rms {} vs power rms {}", fmt_e(f.log_rms), fmt_e(f.power_rms)),
            );
            out.check("l2_log_slope", f.c2 > 0.0, format!("c2 = {:.4} > 0", f.c2));
            if f.improvement < LOG_IMPROVEMENT_MIN {
                out.warnings.push(format!(
                    "log-corrected fit improves on the power fit by only {:.1}%",
                    100.0 * f.improvement
                ));
            }
            if f.short_span {
                out.warnings.push("sweep spans less than a decade in h".into());
            }
        }
        None => out.check("l2_log_model", false, format!("fewer than {MIN_FIT_POINTS} usable records")),
    }
    let h2 = rep.scaled_by(NormSelector::L2, 2);
    out.check(
        "l2_h2_decreasing",
        h2.windows(2).all(|w| w[1] < w[0]),
        format!("h^2*norm_l2 from {:.4} to {:.4}", h2.first().copied().unwrap_or(f64::NAN), h2.last().copied().unwrap_or(f64::NAN)),
    );
    out.check(
        "sandwich_spread",
        sandwich_spread <= SPREAD_MAX,
        format!("max/min h*norm_sandwich = {sandwich_spread:.4} <= {SPREAD_MAX}"),
    );
    out.check(
        "theorem1_stable",
        weak_ratio <= STABILITY_FACTOR,
        format!("max/min empirical constant = {weak_ratio:.4} <= {STABILITY_FACTOR}"),
    );
    Ok(())
}

/// Parse `records.csv` as written by [`ScalingReport::write_csv`].
pub fn read_records(path: &Path) -> Result<Vec<ScalingRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "h,n_x,norm_l2,norm_iso,norm_sandwich,wall_time_s" {
        return Err(CliError::Records(format!("{}: unexpected header `{header}`", path.display())));
    }
    let bad = |l: &str| CliError::Records(format!("{}: bad row `{l}`", path.display()));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(l));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            let record = ScalingRecord {
                h: num(f[0])?,
                n_x: f[1].parse().map_err(|_| bad(l))?,
                norm_l2: num(f[2])?,
                norm_iso: num(f[3])?,
                norm_sandwich: num(f[4])?,
                wall_time_s: num(f[5])?,
                flagged: false,
            };
            let flagged = [record.norm_l2, record.norm_iso, record.norm_sandwich].iter().any(|v| !v.is_finite());
            Ok(ScalingRecord { flagged, ..record })
        })
        .collect()
}

fn report(ctx: &Context, out: &mut StageOutput) -> Result<(), CliError> {
    let records_path = ctx.path("records.csv");
    let records = if records_path.exists() { read_records(&records_path)? } else { Vec::new() };
    let rep = ScalingReport::new(records, ctx.hash());
    let usable = rep.records.iter().filter(|r| !r.flagged).count();
    out.put("records", Value::Array(rep.records.iter().map(record_json).collect()));
    out.put("fits", fits_json(&rep));
    if rep.fits.is_empty() {
        let msg = format!("fitting needs at least {MIN_FIT_POINTS} usable records, have {usable}");
        out.put("fit_error", json!(msg));
        out.warnings.push(msg);
    }

    let mut stages = Map::new();
    let mut failed = Vec::new();
    for s in Stage::ALL.iter().filter(|s| **s != Stage::Report) {
        let p = ctx.path(s.artifact());
        if !p.exists() {
            continue;
        }
        let text = fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Records(format!("{}: {e}", p.display())))?;
        if v.get("status").and_then(Value::as_str) != Some("passed") {
            failed.push(s.name());
        }
        if let Some(hash) = v.get("config_hash").and_then(Value::as_str) {
            if hash != ctx.hash() {
                out.warnings.push(format!("{} was produced with a different config", s.artifact()));
            }
        }
        if *s == Stage::VerifyBsymbols {
            out.put("bsymbols", v.clone());
        }
        stages.insert(s.name().into(), v);
    }
    out.put("stages", Value::Object(stages));
    out.put("failed_stages", json!(failed));

    let mut plots = Vec::new();
    for sel in NormSelector::ALL {
        let name = format!("plots/{}.svg", sel.name());
        ctx.write(&name, svg::norm_plot(&rep, sel).as_bytes())?;
        plots.push(name);
    }
    out.put("plots", json!(plots));
    Ok(())
}

/// Write a human-readable copy of the effective config next to the artifacts.
pub fn write_config(ctx: &Context) -> Result<(), CliError> {
    ctx.write("config.txt", ctx.cfg.serialize().as_bytes())
}

pub fn log_line(stage: Stage, secs: f64, passed: bool) {
    let _ = writeln!(
        std::io::stderr(),
        "stage {} {} in {secs:.2}s",
        stage.name(),
        if passed { "passed" } else { "failed" }
    );
}
