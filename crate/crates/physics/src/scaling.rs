//! Power-law fits of ⟨R²⟩ against N and the grading bands applied to
//! reported exponents.
//!
//! Convention: `nu` is the exponent of ⟨R²⟩ ∝ N^ν itself, so a random walk
//! has ν = 1 and a self-avoiding walk ν ≈ 1.18 (twice the usual Flory
//! exponent).

use std::fmt::Write as _;

use crate::{MeanEstimate, PhysicsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub nu: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.log_prefactor + self.nu * n.ln()).exp()
    }
}

/// Ordinary least squares on (ln N, ln⟨R²⟩).
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit, PhysicsError> {
    if points.len() < 3 {
        return Err(PhysicsError::DegenerateInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, r)) = points
        .iter()
        .find(|(n, r)| !(*n > 0.0 && *r > 0.0 && n.is_finite() && r.is_finite()))
    {
        return Err(PhysicsError::DegenerateInput(format!(
            "non-positive point (N = {n}, R² = {r})"
        )));
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].iter().any(|b| b.0 == a.0) {
            return Err(PhysicsError::DegenerateInput(format!(
                "duplicate N = {}",
                a.0
            )));
        }
    }

    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };

    Ok(ScalingFit {
        nu: slope,
        log_prefactor: intercept,
        r_squared,
    })
}

/// Fit directly from ensemble estimates.
pub fn fit_estimates(estimates: &[MeanEstimate]) -> Result<ScalingFit, PhysicsError> {
    let points: Vec<(f64, f64)> = estimates
        .iter()
        .map(|e| (e.n_segments as f64, e.mean_r2))
        .collect();
    fit_scaling(&points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainModel {
    RandomWalk,
    SelfAvoidingWalk,
}

impl ChainModel {
    /// Accepted interval for the ⟨R²⟩ exponent.
    pub fn exponent_band(self) -> (f64, f64) {
        match self {
            ChainModel::RandomWalk => (1.0 - 0.08, 1.0 + 0.08),
            ChainModel::SelfAvoidingWalk => (1.10, 1.25),
        }
    }
}

impl std::str::FromStr for ChainModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rw" | "random_walk" => Ok(ChainModel::RandomWalk),
            "saw" | "self_avoiding_walk" => Ok(ChainModel::SelfAvoidingWalk),
            other => Err(format!("unknown chain model {other:?}")),
        }
    }
}

pub fn grade_exponent(reported_nu: f64, model: ChainModel) -> bool {
    let (lo, hi) = model.exponent_band();
    reported_nu.is_finite() && reported_nu >= lo && reported_nu <= hi
}

/// `N,mean_r2,stderr` with a header line.
pub fn scaling_csv(estimates: &[MeanEstimate]) -> String {
    let mut out = String::from("N,mean_r2,stderr\n");
    for e in estimates {
        let _ = writeln!(out, "{},{},{}", e.n_segments, e.mean_r2, e.stderr);
    }
    out
}

/// Self-contained log-log scatter with the fitted line.
pub fn scaling_svg(estimates: &[MeanEstimate], fit: &ScalingFit, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 60.0;

    let xs: Vec<f64> = estimates.iter().map(|e| (e.n_segments as f64).log10()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.mean_r2.max(1e-300).log10()).collect();
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">log10 N</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-size="12" transform="rotate(-90 20 {})">log10 &lt;R²&gt;</text>"#,
        H / 2.0,
        H / 2.0
    );

    let ln10 = std::f64::consts::LN_10;
    let fy = |x: f64| (fit.log_prefactor + fit.nu * x * ln10) / ln10;
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="1.5"/>"#,
        px(x0),
        py(fy(x0)),
        px(x1),
        py(fy(x1))
    );
    for (x, y) in xs.iter().zip(&ys) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#,
            px(*x),
            py(*y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12">ν = {:.4}, r² = {:.5}</text>"#,
        PAD + 10.0,
        PAD + 15.0,
        fit.nu,
        fit.r_squared
    );
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = (hi - lo).max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
