//! Log-log plots of `h` against a resolvent norm, written as plain SVG.

use std::fmt::Write as _;

use nhtrap::resolvent::{FitResult, NormSelector, ScalingReport};

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const CURVE_SAMPLES: usize = 64;

struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    /// Decade-padded log range around `values`.
    fn around(values: &[f64], px_lo: f64, px_hi: f64) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
        let (lo, hi) = if finite.is_empty() {
            (0.0, 1.0)
        } else {
            let lo = finite.iter().copied().fold(f64::MAX, f64::min).log10();
            let hi = finite.iter().copied().fold(f64::MIN, f64::max).log10();
            let (lo, hi) = ((lo + 1e-9).floor(), (hi - 1e-9).ceil());
            (lo, hi.max(lo + 1.0))
        };
        Axis { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v.log10() - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<(f64, bool)> {
        let mut out = Vec::new();
        let mut d = self.lo as i32;
        while d as f64 <= self.hi {
            for m in 1..10 {
                let v = m as f64 * 10f64.powi(d);
                if v.log10() <= self.hi + 1e-12 {
                    out.push((v, m == 1));
                }
            }
            d += 1;
        }
        out
    }
}

fn power_curve(f: &FitResult, h: f64) -> f64 {
    (f.log_c - f.alpha * h.ln()).exp()
}

fn log_curve(f: &FitResult, h: f64) -> f64 {
    (f.c1 + f.c2 * (1.0 / h).ln()) / h
}

fn polyline(out: &mut String, xa: &Axis, ya: &Axis, pts: &[(f64, f64)], color: &str, dash: &str) {
    let coords: Vec<String> = pts
        .iter()
        .filter(|(_, y)| y.is_finite() && *y > 0.0)
        .map(|&(x, y)| format!("{:.2},{:.2}", xa.map(x), ya.map(y)))
        .collect();
    if coords.len() > 1 {
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.join(" ")
        );
    }
}

/// Data points of `sel` with the power and log-corrected fits when present.
pub fn norm_plot(rep: &ScalingReport, sel: NormSelector) -> String {
    let hs: Vec<f64> = rep.records.iter().map(|r| r.h).collect();
    let ys: Vec<f64> = rep.records.iter().map(|r| sel.get(r)).collect();
    let fit = rep.fit(sel);

    let (h_min, h_max) = hs.iter().fold((f64::MAX, f64::MIN), |(a, b), &h| (a.min(h), b.max(h)));
    let curve_h: Vec<f64> = if hs.is_empty() {
        Vec::new()
    } else {
        (0..=CURVE_SAMPLES)
            .map(|k| (h_min.ln() + (h_max.ln() - h_min.ln()) * k as f64 / CURVE_SAMPLES as f64).exp())
            .collect()
    };
    let curves: Vec<(Vec<(f64, f64)>, &str, &str, &str)> = fit
        .map(|f| {
            vec![
                (curve_h.iter().map(|&h| (h, power_curve(f, h))).collect(), "#1f77b4", "", "power fit"),
                (
                    curve_h.iter().map(|&h| (h, log_curve(f, h))).collect(),
                    "#d62728",
                    r#" stroke-dasharray="6 4""#,
                    "log-corrected fit",
                ),
            ]
        })
        .unwrap_or_default();

    let mut all_y = ys.clone();
    for (pts, ..) in &curves {
        all_y.extend(pts.iter().map(|p| p.1));
    }
    let xa = Axis::around(&hs, LEFT, W - RIGHT);
    let ya = Axis::around(&all_y, H - BOTTOM, TOP);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{} against h</text>"#,
        W / 2.0,
        sel.name()
    );
    for (v, major) in xa.ticks() {
        let x = xa.map(v);
        let (stroke, len) = if major { ("#bbbbbb", 8.0) } else { ("#eeeeee", 4.0) };
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="{stroke}"/>"#, H - BOTTOM);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + len);
        if major {
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{v:e}</text>"#,
                H - BOTTOM + 22.0
            );
        }
    }
    for (v, major) in ya.ticks() {
        let y = ya.map(v);
        let (stroke, len) = if major { ("#bbbbbb", 8.0) } else { ("#eeeeee", 4.0) };
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="{stroke}"/>"#, W - RIGHT);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - len);
        if major {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{v:e}</text>"#,
                LEFT - 12.0,
                y + 4.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">h</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 10.0
    );
    for (pts, color, dash, _) in &curves {
        polyline(&mut s, &xa, &ya, pts, color, dash);
    }
    for (&h, &y) in hs.iter().zip(&ys) {
        if y.is_finite() && y > 0.0 {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, xa.map(h), ya.map(y));
        }
    }
    for (k, (_, color, dash, label)) in curves.iter().enumerate() {
        let y = TOP + 16.0 + 18.0 * k as f64;
        let x = W - RIGHT - 170.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            x + 28.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{label}</text>"#, x + 34.0, y + 4.0);
    }
    if fit.is_none() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">too few points to fit</text>"#,
            W / 2.0,
            TOP + 20.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nhtrap::resolvent::ScalingRecord;

    fn rec(h: f64) -> ScalingRecord {
        ScalingRecord {
            h,
            n_x: 64,
            norm_l2: 2.0 / h * (1.0 / h).ln(),
            norm_iso: 3.0 / h,
            norm_sandwich: 1.5 / h,
            wall_time_s: 0.0,
            flagged: false,
        }
    }

    #[test]
    fn plot_has_points_and_both_curves() {
        let rep = ScalingReport::new([0.1, 0.05, 0.025, 0.0125, 0.01].map(rec).to_vec(), "x");
        let s = norm_plot(&rep, NormSelector::L2);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<circle").count(), 5);
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("log-corrected fit"));
    }

    #[test]
    fn single_point_plot_has_no_curves() {
        let rep = ScalingReport::new(vec![rec(0.1)], "x");
        let s = norm_plot(&rep, NormSelector::Iso);
        assert_eq!(s.matches("<circle").count(), 1);
        assert_eq!(s.matches("<polyline").count(), 0);
        assert!(s.contains("too few points"));
    }

    #[test]
    fn ticks_cover_range() {
        let a = Axis::around(&[0.0125, 0.1], 0.0, 100.0);
        assert_eq!((a.lo, a.hi), (-2.0, -1.0));
        let t = a.ticks();
        assert_eq!(t.iter().filter(|t| t.1).count(), 2);
        assert!((a.map(0.01) - 0.0).abs() < 1e-12 && (a.map(0.1) - 100.0).abs() < 1e-9);
    }
}
