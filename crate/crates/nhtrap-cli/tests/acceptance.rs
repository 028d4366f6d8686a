//! Runs `nhtrap all` twice on the defaults and prints one line per acceptance criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use serde_json::Value;

/// Criteria that fail at desk scale on the defaults; see the README.
const KNOWN_RED: [u32; 3] = [2, 4, 8];

struct Run {
    status: i32,
    stderr: String,
    stage_secs: BTreeMap<String, f64>,
    total_secs: f64,
}

fn run_all(out: &Path) -> Run {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_nhtrap"))
        .args(["all", "--out", out.to_str().unwrap()])
        .output()
        .expect("binary runs");
    let total_secs = start.elapsed().as_secs_f64();
    let stderr = String::from_utf8_lossy(&o.stderr).into_owned();
    let mut stage_secs = BTreeMap::new();
    for line in stderr.lines() {
        // "stage NAME passed in 1.23s"
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() == 5 && parts[0] == "stage" && parts[3] == "in" {
            if let Ok(t) = parts[4].trim_end_matches('s').parse::<f64>() {
                stage_secs.insert(parts[1].to_string(), t);
            }
        }
    }
    Run { status: o.status.code().unwrap_or(-1), stderr, stage_secs, total_secs }
}

fn load(dir: &Path, name: &str) -> Value {
    let p = dir.join(name);
    let text = fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    serde_json::from_str(&text).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn max_min(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    if v.is_empty() || !(lo > 0.0) {
        f64::NAN
    } else {
        hi / lo
    }
}

fn config_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("config.txt")).unwrap_or_default();
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.trim_start().strip_prefix('=')))
        .map(|v| v.trim().to_string())
        .unwrap_or_default()
}

struct Verdict {
    n: u32,
    pass: bool,
    detail: String,
}

fn criteria(dir: &Path, run: &Run) -> Vec<Verdict> {
    let secs = |s: &str| run.stage_secs.get(s).copied().unwrap_or(f64::NAN);
    let mut out = Vec::new();

    let sym = load(dir, "symbols.json");
    let r1 = f(&sym["max_residual"]);
    let t1 = secs("verify-symbols");
    out.push(Verdict {
        n: 1,
        pass: r1 <= 1e-10 && t1 < 5.0,
        detail: format!("max residual {r1:.3e} (<= 1e-10), {t1:.2}s (< 5s)"),
    });

    let ops = load(dir, "operators.json");
    let d: Vec<f64> = ops["remainder"].as_array().unwrap().iter().map(|r| f(&r["d_norm_over_h"])).collect();
    let off = ops["remainder"].as_array().unwrap().iter().map(|r| f(&r["off_support"])).fold(0.0, f64::max);
    let hs: Vec<f64> = ops["remainder"].as_array().unwrap().iter().map(|r| f(&r["h"])).collect();
    let ratio = max_min(&d);
    let t2 = secs("verify-operators");
    out.push(Verdict {
        n: 2,
        pass: hs == [0.2, 0.1, 0.05] && ratio <= 2.0 && off <= 1e-8 && t2 < 300.0,
        detail: format!("|D|/h ratio {ratio:.3} (<= 2) over h {hs:?}, off-support {off:.2e} (<= 1e-8), {t2:.1}s (< 300s)"),
    });

    let sc = load(dir, "scaling.json");
    let per_h = sc["per_h"].as_array().unwrap();
    let q: Vec<f64> = per_h
        .iter()
        .flat_map(|p| p["rayleigh_over_2h"].as_array().unwrap().iter().map(f).collect::<Vec<_>>())
        .collect();
    let (qlo, qhi) = q.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    out.push(Verdict {
        n: 3,
        pass: per_h.len() == 7 && q.iter().all(|v| (0.95..=1.05).contains(v)),
        detail: format!("Rayleigh/(2h) in [{qlo:.4}, {qhi:.4}] over {} h values (band [0.95, 1.05])", per_h.len()),
    });

    let nm = load(dir, "norms.json");
    let frames = nm["frames"].as_array().unwrap();
    let c_lower: Vec<f64> = frames.iter().map(|r| f(&r["c_lower"])).collect();
    let h4: Vec<f64> = frames.iter().map(|r| f(&r["h"])).collect();
    let broken: Vec<f64> = frames.iter().map(|r| f(&r["broken_c_lower"])).collect();
    let min_c = c_lower.iter().cloned().fold(f64::MAX, f64::min);
    let slope = f(&nm["broken_slope"]);
    let covers = h4.iter().cloned().fold(f64::MAX, f64::min) <= 0.025 && h4.iter().cloned().fold(f64::MIN, f64::max) >= 0.2;
    out.push(Verdict {
        n: 4,
        pass: covers && min_c >= 0.3 && (0.8..=1.2).contains(&slope),
        detail: format!(
            "min c_lower {min_c:.4} (>= 0.3) over h {h4:?}; broken frame c_lower {broken:.3?} ~ h^{slope:.3} (want 0.8..1.2)"
        ),
    });

    let mut recs = sc["records"].as_array().unwrap().clone();
    recs.sort_by(|a, b| f(&b["h"]).total_cmp(&f(&a["h"])));
    let h: Vec<f64> = recs.iter().map(|r| f(&r["h"])).collect();
    let nx_max = recs.iter().map(|r| r["n_x"].as_u64().unwrap()).max().unwrap_or(0);
    let scaled = |key: &str| -> Vec<f64> { recs.iter().map(|r| f(&r["h"]) * f(&r[key])).collect() };
    let iso_spread = max_min(&scaled("norm_iso"));
    let alpha = f(&sc["fits"]["norm_iso"]["alpha"]);
    let t5 = secs("scaling");
    out.push(Verdict {
        n: 5,
        pass: h.len() == 7 && iso_spread <= 3.0 && (0.9..=1.1).contains(&alpha) && t5 <= 1800.0 && nx_max <= 4096,
        detail: format!(
            "h*norm_iso spread {iso_spread:.4} (<= 3), alpha {alpha:.4} (in [0.9, 1.1]), n_x <= {nx_max}, {t5:.1}s (<= 1800s)"
        ),
    });

    let l2 = scaled("norm_l2");
    let increasing = l2.windows(2).all(|w| w[1] > w[0]);
    let fit = &sc["fits"]["norm_l2"];
    let (log_rms, power_rms) = (f(&fit["log_rms"]), f(&fit["power_rms"]));
    let improvement = 1.0 - log_rms / power_rms;
    let note = if improvement < 0.1 { " [warning: improvement below 10%]" } else { "" };
    out.push(Verdict {
        n: 6,
        pass: increasing && log_rms < power_rms,
        detail: format!(
            "h*norm_l2 increasing: {increasing}, log rms {log_rms:.3e} < power rms {power_rms:.3e}, improvement {:.1}%{note}",
            100.0 * improvement
        ),
    });

    let sw = max_min(&scaled("norm_sandwich"));
    out.push(Verdict { n: 7, pass: sw <= 3.0, detail: format!("h*norm_sandwich spread {sw:.4} (<= 3)") });

    let mut per_h = per_h.clone();
    per_h.sort_by(|a, b| f(&b["h"]).total_cmp(&f(&a["h"])));
    let weak: Vec<f64> = per_h.iter().map(|p| f(&p["theorem1"]["weak_max"])).collect();
    let wr = max_min(&weak);
    let span = h.first().copied().unwrap_or(f64::NAN) / h.last().copied().unwrap_or(f64::NAN);
    out.push(Verdict {
        n: 8,
        pass: wr <= 2.0,
        detail: format!(
            "empirical constant {weak:.4?} over h ratio {span:.1}, max/min {wr:.4} (<= 2), {} samples per h",
            config_value(dir, "sweep.samples")
        ),
    });

    let bs = load(dir, "bsymbols.json");
    let dec = &bs["decompositions"];
    let worst = ["default", "weighted", "reversed"].iter().map(|k| f(&dec[*k]["max_residual"])).fold(0.0, f64::max);
    let rs = (f(&dec["weighted"]["r"]), f(&dec["reversed"]["r"]));
    let nodes = dec["default"]["nodes"].as_u64().unwrap_or(0);
    let par = &bs["parabolic"];
    let rel = (f(&par["threshold"]) - f(&par["closed_form"])).abs() / f(&par["closed_form"]).abs();
    let t9 = secs("verify-bsymbols");
    out.push(Verdict {
        n: 9,
        pass: worst <= 1e-9 && rs == (-1.0, 1.0) && nodes == 9u64.pow(5) && rel <= 0.05 && t9 < 60.0,
        detail: format!(
            "worst residual {worst:.2e} (<= 1e-9) on {nodes} nodes for r = 0, {}, {}; parabolic threshold off by {:.2}% (<= 5%); {t9:.2}s (< 60s)",
            rs.0,
            rs.1,
            100.0 * rel
        ),
    });
    out
}

fn main() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_all(a.path());
    eprintln!("first run: exit {} in {:.1}s", first.status, first.total_secs);
    eprint!("{}", first.stderr);
    let mut verdicts = criteria(a.path(), &first);

    let second = run_all(b.path());
    let same = |name: &str| fs::read(a.path().join(name)).ok().is_some_and(|x| Some(x) == fs::read(b.path().join(name)).ok());
    let (rec, rep) = (same("records.csv"), same("report.json"));
    verdicts.push(Verdict {
        n: 10,
        pass: rec && rep && second.status == first.status,
        detail: format!(
            "records.csv identical: {rec}, report.json identical: {rep}, exit codes {} and {}",
            first.status, second.status
        ),
    });

    let ops = load(a.path(), "operators.json");
    let resolved = &ops["resolved"];
    let mut unexpected = Vec::new();
    for v in &verdicts {
        println!("criterion {} {}: {}", v.n, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if v.n == 2 {
            println!(
                "  info: resolved cutoffs (kappa {}, R {}, F {}, psi width {}, O radius {}) give |D|/h ratio {:.3}",
                resolved["kappa"],
                resolved["r"],
                resolved["f"],
                resolved["psi_width"],
                resolved["o_radius"],
                f(&resolved["remainder_ratio"])
            );
        }
        if !v.pass && !KNOWN_RED.contains(&v.n) {
            unexpected.push(v.n);
        }
        if v.pass && KNOWN_RED.contains(&v.n) {
            println!("  note: criterion {} is listed as known red but passed", v.n);
        }
    }
    let expected_exit = if verdicts.iter().all(|v| v.pass) { 0 } else { 1 };
    println!("exit code {} (expected {expected_exit})", first.status);
    if first.status != expected_exit {
        unexpected.push(0);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
