use serde::Serialize;

use super::EvalError;

/// Min-max normalized matrix with zero-range columns removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    /// `m × kept.len()`.
    pub values: Vec<Vec<f64>>,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

fn check_shape(x: &[Vec<f64>]) -> Result<usize, EvalError> {
    if x.len() < 2 {
        return Err(EvalError::TooFewAgents(x.len()));
    }
    let n = x[0].len();
    if n == 0 {
        return Err(EvalError::DimensionMismatch("matrix has no criteria".into()));
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != n {
            return Err(EvalError::DimensionMismatch(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::DimensionMismatch(format!("row {i} has a non-finite entry")));
        }
    }
    Ok(n)
}

pub fn normalize_matrix(x: &[Vec<f64>]) -> Result<Normalized, EvalError> {
    let n = check_shape(x)?;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut ranges = Vec::new();
    for j in 0..n {
        let (lo, hi) = x
            .iter()
            .map(|r| r[j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi > lo {
            kept.push(j);
            ranges.push((lo, hi - lo));
        } else {
            dropped.push(j);
        }
    }
    let values = x
        .iter()
        .map(|row| {
            kept.iter()
                .zip(&ranges)
                .map(|(&j, &(lo, span))| (row[j] - lo) / span)
                .collect()
        })
        .collect();
    Ok(Normalized { values, kept, dropped })
}

/// Entropy weights of the columns of a normalized matrix.
pub fn entropy_weights(r: &[Vec<f64>]) -> Vec<f64> {
    let m = r.len();
    let n = r.first().map_or(0, Vec::len);
    if n == 0 {
        return Vec::new();
    }
    let k = 1.0 / (m as f64).ln();
    let divergence: Vec<f64> = (0..n)
        .map(|j| {
            let total: f64 = r.iter().map(|row| row[j]).sum();
            let h: f64 = r
                .iter()
                .map(|row| {
                    let p = row[j] / total;
                    if p > 0.0 {
                        p * p.ln()
                    } else {
                        0.0
                    }
                })
                .sum();
            1.0 - (-k * h)
        })
        .collect();
    let total: f64 = divergence.iter().sum();
    if total > 0.0 {
        divergence.iter().map(|d| d / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

/// Relative closeness of each agent to the ideal profile.
pub fn topsis_scores(r: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>, EvalError> {
    let n = weights.len();
    if let Some((i, row)) = r.iter().enumerate().find(|(_, row)| row.len() != n) {
        return Err(EvalError::DimensionMismatch(format!(
            "row {i} has {} entries, {n} weights",
            row.len()
        )));
    }
    let v: Vec<Vec<f64>> = r
        .iter()
        .map(|row| row.iter().zip(weights).map(|(x, w)| x * w).collect())
        .collect();
    let ideal: Vec<f64> = (0..n)
        .map(|j| v.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let anti: Vec<f64> = (0..n)
        .map(|j| v.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(v.iter()
        .map(|row| {
            let s_plus = row.iter().zip(&ideal).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let s_minus = row.iter().zip(&anti).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if s_plus + s_minus == 0.0 {
                0.5
            } else {
                s_minus / (s_plus + s_minus)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreBundle {
    /// One weight per original criterion; dropped criteria weigh 0.
    pub weights: Vec<f64>,
    pub scores: Vec<f64>,
    /// Agent indices, best first; ties keep input order.
    pub ranking: Vec<usize>,
    pub dropped: Vec<usize>,
}

pub fn score_matrix(x: &[Vec<f64>]) -> Result<ScoreBundle, EvalError> {
    let norm = normalize_matrix(x)?;
    let w = entropy_weights(&norm.values);
    let scores = topsis_scores(&norm.values, &w)?;
    let mut weights = vec![0.0; x[0].len()];
    for (&j, &wj) in norm.kept.iter().zip(&w) {
        weights[j] = wj;
    }
    let mut ranking: Vec<usize> = (0..scores.len()).collect();
    ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(ScoreBundle {
        weights,
        scores,
        ranking,
        dropped: norm.dropped,
    })
}
