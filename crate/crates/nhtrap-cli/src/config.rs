//! Flat `section.key = value` configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use nhtrap::bsymbols::{BCommutantParams, BStructuralModel, Grid5, ParabolicBox, WData};
use nhtrap::commutant::{build_cutoffs, CutoffFamily};
use nhtrap::model::{AbsorbingPotential, ModelSpec};
use nhtrap::phasespace::{make_grid_capped, PhaseGrid};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    BadValue { line: usize, key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model_x_abs: f64,
    pub model_width: f64,
    pub model_strength: f64,
    pub model_o_radius: f64,
    pub model_energy_width: f64,

    pub grid_x_min: f64,
    pub grid_x_max: f64,
    pub grid_xi_max: f64,
    pub grid_min_points: usize,
    pub grid_n_cap: usize,
    pub grid_symbol_h: f64,

    pub cutoffs_kappa: f64,
    pub cutoffs_r: f64,
    pub cutoffs_f: f64,
    pub cutoffs_psi_width: f64,
    pub cutoffs_m0: f64,

    pub sweep_h: Vec<f64>,
    pub sweep_operator_h: Vec<f64>,
    pub sweep_norm_h: Vec<f64>,
    pub sweep_samples: usize,
    pub sweep_power_block: usize,

    pub z_re: f64,
    pub z_im_coeff: f64,
    pub z_im_bound: f64,

    pub trapped_h: f64,
    pub trapped_min_points: usize,
    pub trapped_t_max: f64,
    pub trapped_dt: f64,
    pub trapped_delta: f64,
    pub trapped_escape_x: f64,

    pub operators_resolved_kappa: f64,
    pub operators_resolved_r: f64,
    pub operators_resolved_f: f64,
    pub operators_resolved_psi_width: f64,
    pub operators_resolved_o_radius: f64,

    pub run_seed: u64,
    pub run_threads: usize,

    pub output_dir: String,
    pub output_record_timing: bool,
    pub output_dump_matrices: bool,

    pub bsymbols_m: f64,
    pub bsymbols_s: f64,
    pub bsymbols_c_d_sq: f64,
    pub bsymbols_c_plus_sq: f64,
    pub bsymbols_c_minus_sq: f64,
    pub bsymbols_beta_plus: f64,
    pub bsymbols_nu_plus: f64,
    pub bsymbols_nu_minus: f64,
    pub bsymbols_alpha: f64,
    pub bsymbols_alpha1: f64,
    pub bsymbols_w: WData,
    pub bsymbols_kappa: f64,
    pub bsymbols_r_cut: f64,
    pub bsymbols_f: f64,
    pub bsymbols_big_m: f64,
    pub bsymbols_psi_width: f64,
    pub bsymbols_weighted_r: f64,
    pub bsymbols_reversed_r: f64,
    pub bsymbols_nodes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model_x_abs: 2.0,
            model_width: 1.0,
            model_strength: 10.0,
            model_o_radius: 0.75,
            model_energy_width: 0.5,
            grid_x_min: -8.0,
            grid_x_max: 8.0,
            grid_xi_max: 4.0,
            grid_min_points: 512,
            grid_n_cap: 4096,
            grid_symbol_h: 0.1,
            cutoffs_kappa: 0.05,
            cutoffs_r: 0.25,
            cutoffs_f: 1.0,
            cutoffs_psi_width: 0.5,
            cutoffs_m0: 1.0,
            sweep_h: vec![0.1, 0.0707, 0.05, 0.0354, 0.025, 0.0177, 0.0125],
            sweep_operator_h: vec![0.2, 0.1, 0.05],
            sweep_norm_h: vec![0.2, 0.1, 0.05, 0.025],
            sweep_samples: 32,
            sweep_power_block: 4,
            z_re: 0.0,
            z_im_coeff: 0.0,
            z_im_bound: 1.0,
            trapped_h: std::f64::consts::FRAC_2_PI,
            trapped_min_points: 128,
            trapped_t_max: 6.0,
            trapped_dt: 0.01,
            trapped_delta: 1.0,
            trapped_escape_x: 2.0,
            operators_resolved_kappa: 2.0,
            operators_resolved_r: 8.0,
            operators_resolved_f: 4.0,
            operators_resolved_psi_width: 20.0,
            operators_resolved_o_radius: 4.0,
            run_seed: 1,
            run_threads: 1,
            output_dir: "out".into(),
            output_record_timing: false,
            output_dump_matrices: false,
            bsymbols_m: 2.0,
            bsymbols_s: 1.0,
            bsymbols_c_d_sq: 2.0,
            bsymbols_c_plus_sq: 2.0,
            bsymbols_c_minus_sq: 2.0,
            bsymbols_beta_plus: 0.5,
            bsymbols_nu_plus: 0.3,
            bsymbols_nu_minus: 0.3,
            bsymbols_alpha: 0.2,
            bsymbols_alpha1: 0.1,
            bsymbols_w: WData::Zero,
            bsymbols_kappa: 0.05,
            bsymbols_r_cut: 0.25,
            bsymbols_f: 1.0,
            bsymbols_big_m: 1.0,
            bsymbols_psi_width: 0.6,
            bsymbols_weighted_r: -1.0,
            bsymbols_reversed_r: 1.0,
            bsymbols_nodes: 9,
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("not finite".into())
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| parse_f64(t.trim())).collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn w_name(w: WData) -> &'static str {
    match w {
        WData::Zero => "zero",
        WData::Demo => "demo",
    }
}

macro_rules! keys {
    ($($key:literal => $field:ident : $kind:ident),* $(,)?) => {
        pub const KEYS: &[&str] = &[$($key),*];

        impl ExperimentConfig {
            fn get(&self, key: &str) -> Option<String> {
                match key {
                    $($key => Some(keys!(@fmt $kind, self.$field)),)*
                    _ => None,
                }
            }

            fn set(&mut self, key: &str, value: &str) -> Option<Result<(), String>> {
                match key {
                    $($key => Some(keys!(@parse $kind, value).map(|v| self.$field = v)),)*
                    _ => None,
                }
            }
        }
    };
    (@fmt real, $v:expr) => { $v.to_string() };
    (@fmt int, $v:expr) => { $v.to_string() };
    (@fmt seed, $v:expr) => { $v.to_string() };
    (@fmt flag, $v:expr) => { $v.to_string() };
    (@fmt text, $v:expr) => { $v.clone() };
    (@fmt list, $v:expr) => { fmt_list(&$v) };
    (@fmt w, $v:expr) => { w_name($v).to_string() };
    (@parse real, $s:expr) => { parse_f64($s) };
    (@parse int, $s:expr) => { parse_usize($s) };
    (@parse seed, $s:expr) => { $s.parse::<u64>().map_err(|e| format!("{e}")) };
    (@parse flag, $s:expr) => { parse_bool($s) };
    (@parse text, $s:expr) => { Ok::<String, String>($s.to_string()) };
    (@parse list, $s:expr) => { parse_list($s) };
    (@parse w, $s:expr) => {
        match $s {
            "zero" => Ok(WData::Zero),
            "demo" => Ok(WData::Demo),
            _ => Err("expected zero or demo".to_string()),
        }
    };
}

keys! {
    "bsymbols.alpha" => bsymbols_alpha: real,
    "bsymbols.alpha1" => bsymbols_alpha1: real,
    "bsymbols.beta_plus" => bsymbols_beta_plus: real,
    "bsymbols.big_m" => bsymbols_big_m: real,
    "bsymbols.c_d_sq" => bsymbols_c_d_sq: real,
    "bsymbols.c_minus_sq" => bsymbols_c_minus_sq: real,
    "bsymbols.c_plus_sq" => bsymbols_c_plus_sq: real,
    "bsymbols.f" => bsymbols_f: real,
    "bsymbols.kappa" => bsymbols_kappa: real,
    "bsymbols.m" => bsymbols_m: real,
    "bsymbols.nodes" => bsymbols_nodes: int,
    "bsymbols.nu_minus" => bsymbols_nu_minus: real,
    "bsymbols.nu_plus" => bsymbols_nu_plus: real,
    "bsymbols.psi_width" => bsymbols_psi_width: real,
    "bsymbols.r_cut" => bsymbols_r_cut: real,
    "bsymbols.reversed_r" => bsymbols_reversed_r: real,
    "bsymbols.s" => bsymbols_s: real,
    "bsymbols.w" => bsymbols_w: w,
    "bsymbols.weighted_r" => bsymbols_weighted_r: real,
    "cutoffs.f" => cutoffs_f: real,
    "cutoffs.kappa" => cutoffs_kappa: real,
    "cutoffs.m0" => cutoffs_m0: real,
    "cutoffs.psi_width" => cutoffs_psi_width: real,
    "cutoffs.r" => cutoffs_r: real,
    "grid.min_points" => grid_min_points: int,
    "grid.n_cap" => grid_n_cap: int,
    "grid.symbol_h" => grid_symbol_h: real,
    "grid.x_max" => grid_x_max: real,
    "grid.x_min" => grid_x_min: real,
    "grid.xi_max" => grid_xi_max: real,
    "model.energy_width" => model_energy_width: real,
    "model.o_radius" => model_o_radius: real,
    "model.strength" => model_strength: real,
    "model.width" => model_width: real,
    "model.x_abs" => model_x_abs: real,
    "operators.resolved_f" => operators_resolved_f: real,
    "operators.resolved_kappa" => operators_resolved_kappa: real,
    "operators.resolved_o_radius" => operators_resolved_o_radius: real,
    "operators.resolved_psi_width" => operators_resolved_psi_width: real,
    "operators.resolved_r" => operators_resolved_r: real,
    "output.dir" => output_dir: text,
    "output.dump_matrices" => output_dump_matrices: flag,
    "output.record_timing" => output_record_timing: flag,
    "run.seed" => run_seed: seed,
    "run.threads" => run_threads: int,
    "sweep.h" => sweep_h: list,
    "sweep.norm_h" => sweep_norm_h: list,
    "sweep.operator_h" => sweep_operator_h: list,
    "sweep.power_block" => sweep_power_block: int,
    "sweep.samples" => sweep_samples: int,
    "trapped.delta" => trapped_delta: real,
    "trapped.dt" => trapped_dt: real,
    "trapped.escape_x" => trapped_escape_x: real,
    "trapped.h" => trapped_h: real,
    "trapped.min_points" => trapped_min_points: int,
    "trapped.t_max" => trapped_t_max: real,
    "z.im_bound" => z_im_bound: real,
    "z.im_coeff" => z_im_coeff: real,
    "z.re" => z_re: real,
}

impl ExperimentConfig {
    /// Parse `text`; absent keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::Syntax { line, text: raw.to_string() })?;
            if !key.contains('.') || value.is_empty() {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            match cfg.set(key, value) {
                None => return Err(ConfigError::UnknownKey { line, key: key.into() }),
                Some(Err(reason)) => {
                    return Err(ConfigError::BadValue { line, key: key.into(), value: value.into(), reason })
                }
                Some(Ok(())) => {}
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// Every key, sorted, one per line.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    /// SHA-256 of the serialized config without `output.dir`, so the same run
    /// hashes the same wherever it writes.
    pub fn hash(&self) -> String {
        let text: String = self
            .serialize()
            .lines()
            .filter(|l| !l.starts_with("output.dir "))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        for (name, list) in [("sweep.h", &self.sweep_h), ("sweep.operator_h", &self.sweep_operator_h), ("sweep.norm_h", &self.sweep_norm_h)] {
            if list.is_empty() || list.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
                return bad(&format!("{name} needs values in (0, 1]"));
            }
        }
        if self.run_threads == 0 {
            return bad("run.threads must be at least 1");
        }
        if self.sweep_power_block == 0 {
            return bad("sweep.power_block must be at least 1");
        }
        if self.sweep_samples == 0 {
            return bad("sweep.samples must be at least 1");
        }
        if self.bsymbols_nodes < 2 {
            return bad("bsymbols.nodes must be at least 2");
        }
        self.model().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.cutoffs().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn model(&self) -> nhtrap::Result<ModelSpec> {
        Ok(ModelSpec {
            c_plus_sq: 2.0,
            c_minus_sq: 2.0,
            absorb: AbsorbingPotential::new(self.model_x_abs, self.model_width, self.model_strength)?,
            o_radius: self.model_o_radius,
            energy_width: self.model_energy_width,
        })
    }

    pub fn cutoffs(&self) -> nhtrap::Result<CutoffFamily> {
        build_cutoffs(self.cutoffs_kappa, self.cutoffs_r, self.cutoffs_f, self.cutoffs_psi_width)
    }

    pub fn resolved_cutoffs(&self) -> nhtrap::Result<(ModelSpec, CutoffFamily)> {
        let model = ModelSpec { o_radius: self.operators_resolved_o_radius, ..self.model()? };
        let c = build_cutoffs(
            self.operators_resolved_kappa,
            self.operators_resolved_r,
            self.operators_resolved_f,
            self.operators_resolved_psi_width,
        )?;
        Ok((model, c))
    }

    pub fn grid(&self, h: f64) -> nhtrap::Result<PhaseGrid> {
        make_grid_capped(h, self.grid_x_min, self.grid_x_max, self.grid_xi_max, self.grid_min_points, self.grid_n_cap)
    }

    pub fn trapped_grid(&self) -> nhtrap::Result<PhaseGrid> {
        make_grid_capped(
            self.trapped_h,
            self.grid_x_min,
            self.grid_x_max,
            self.grid_xi_max,
            self.trapped_min_points,
            self.grid_n_cap,
        )
    }

    pub fn b_model(&self) -> BStructuralModel {
        BStructuralModel {
            m: self.bsymbols_m,
            c_d_sq: self.bsymbols_c_d_sq,
            c_plus_sq: self.bsymbols_c_plus_sq,
            c_minus_sq: self.bsymbols_c_minus_sq,
            beta_plus: self.bsymbols_beta_plus,
            nu_plus: self.bsymbols_nu_plus,
            nu_minus: self.bsymbols_nu_minus,
            alpha: self.bsymbols_alpha,
            alpha1: self.bsymbols_alpha1,
            w: self.bsymbols_w,
        }
    }

    pub fn b_params(&self) -> BCommutantParams {
        BCommutantParams {
            s: self.bsymbols_s,
            r: 0.0,
            kappa: self.bsymbols_kappa,
            big_r: self.bsymbols_r_cut,
            f: self.bsymbols_f,
            big_m: self.bsymbols_big_m,
            psi_width: self.bsymbols_psi_width,
            ..Default::default()
        }
    }

    pub fn b_grid(&self) -> Grid5 {
        Grid5 { nodes: self.bsymbols_nodes, ..Default::default() }
    }

    pub fn parabolic_box(&self) -> ParabolicBox {
        let g = self.b_grid();
        ParabolicBox { nodes: self.bsymbols_nodes, tau_max: g.tau_max, u_max: g.u_max, v_max: g.v_max }
    }
}
