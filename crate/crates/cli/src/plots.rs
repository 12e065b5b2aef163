//! Static SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pme_core::{BarrierParams, Error, Family, RadialSolution};

use crate::error::CliResult;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Vertical markers at these abscissas.
    pub vlines: Vec<(f64, String)>,
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|&(x, y)| x.is_finite() && ty(y).is_finite())
            .map(|(x, y)| (x, ty(y)))
            .collect();
        let (mut x0, mut x1, y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        for (v, _) in &self.vlines {
            x0 = x0.min(*v);
            x1 = x1.max(*v);
        }
        if !(x1 > x0) {
            x1 = x0 + 1.0;
        }
        if !(y1 > y0) {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let ylab = if self.log_y {
                format!("1e{yv:.1}")
            } else {
                format!("{yv:.3e}")
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3e}</text>"#,
                sx(xv),
                H - PAD + 16.0,
                xv
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                PAD - 4.0,
                sy(yv) + 4.0,
                ylab
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 12.0,
            escape(&self.xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.ylabel)
        );
        for (i, ser) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = ser
                .points
                .iter()
                .filter(|&&(x, y)| x.is_finite() && ty(y).is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y))))
                .collect();
            if path.is_empty() {
                continue;
            }
            let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                path.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
                W - PAD - 150.0,
                PAD + 16.0 * (i as f64 + 1.0),
                escape(&ser.name)
            );
        }
        for (v, label) in &self.vlines {
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="gray" stroke-dasharray="2 3"/>"#,
                H - PAD,
                x = sx(*v)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" fill="gray">{}</text>"#,
                sx(*v) + 3.0,
                PAD + 12.0,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Sup-norm (log scale), support radius with an optional barrier
/// free-boundary overlay, and profile snapshots.
pub fn emit_plots(
    dir: &Path,
    sol: &RadialSolution,
    overlay: Option<&BarrierParams>,
) -> CliResult<Vec<PathBuf>> {
    if sol.trajectory.is_empty() {
        return Err(Error::MissingData("empty trajectory".into()).into());
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let sup = Plot {
        title: "sup-norm".into(),
        xlabel: "t".into(),
        ylabel: "|u|_inf".into(),
        log_y: true,
        series: vec![Series {
            name: "numeric".into(),
            points: sol.trajectory.iter().map(|r| (r.t, r.sup_norm)).collect(),
            dashed: false,
        }],
        vlines: sol
            .blowup_time
            .map(|s| vec![(s, format!("S = {s:.4e}"))])
            .unwrap_or_default(),
    };
    let path = dir.join("sup_norm.svg");
    fs::write(&path, sup.to_svg())?;
    written.push(path);

    let mut series = vec![Series {
        name: "numeric support".into(),
        points: sol.trajectory.iter().map(|r| (r.t, r.support_radius)).collect(),
        dashed: false,
    }];
    if let Some(b) = overlay {
        let pts = sol
            .trajectory
            .iter()
            .filter(|r| b.family != Family::Sub || r.t < b.t_offset)
            .filter_map(|r| b.support_radius(r.t).ok().map(|s| (r.t, s)))
            .collect();
        series.push(Series {
            name: "barrier free boundary".into(),
            points: pts,
            dashed: true,
        });
    }
    let supp = Plot {
        title: "support radius".into(),
        xlabel: "t".into(),
        ylabel: "r".into(),
        log_y: false,
        series,
        vlines: Vec::new(),
    };
    let path = dir.join("support_radius.svg");
    fs::write(&path, supp.to_svg())?;
    written.push(path);

    let n = sol.profiles.len();
    let picks: Vec<usize> = if n <= 5 {
        (0..n).collect()
    } else {
        (0..5).map(|k| k * (n - 1) / 4).collect()
    };
    let prof = Plot {
        title: "profiles".into(),
        xlabel: "r".into(),
        ylabel: "u".into(),
        log_y: false,
        series: picks
            .into_iter()
            .map(|k| Series {
                name: format!("t = {:.3e}", sol.times[k]),
                points: sol
                    .grid
                    .centers
                    .iter()
                    .copied()
                    .zip(sol.profiles[k].iter().copied())
                    .collect(),
                dashed: false,
            })
            .collect(),
        vlines: Vec::new(),
    };
    let path = dir.join("profiles.svg");
    fs::write(&path, prof.to_svg())?;
    written.push(path);
    Ok(written)
}
