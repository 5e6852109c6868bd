use asa_core::evaluator::{score_matrix, EvalError, FulfillmentMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-line recomputation with explicit index loops.
fn oracle(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = x.len();
    let n = x[0].len();
    let mut weights = vec![0.0; n];
    let mut cols = Vec::new();
    for j in 0..n {
        let mut lo = x[0][j];
        let mut hi = x[0][j];
        for i in 1..m {
            if x[i][j] < lo {
                lo = x[i][j];
            }
            if x[i][j] > hi {
                hi = x[i][j];
            }
        }
        if hi != lo {
            cols.push((j, lo, hi));
        }
    }
    let k = cols.len();
    let mut r = vec![vec![0.0; k]; m];
    for i in 0..m {
        for (c, &(j, lo, hi)) in cols.iter().enumerate() {
            r[i][c] = (x[i][j] - lo) / (hi - lo);
        }
    }
    let mut d = vec![0.0; k];
    for c in 0..k {
        let mut s = 0.0;
        for i in 0..m {
            s += r[i][c];
        }
        let mut e = 0.0;
        for i in 0..m {
            let p = r[i][c] / s;
            if p != 0.0 {
                e += p * p.ln();
            }
        }
        e *= -1.0 / (m as f64).ln();
        d[c] = 1.0 - e;
    }
    let dsum: f64 = d.iter().sum();
    let w: Vec<f64> = if dsum > 0.0 {
        d.iter().map(|v| v / dsum).collect()
    } else {
        vec![1.0 / k as f64; k]
    };
    for (c, &(j, _, _)) in cols.iter().enumerate() {
        weights[j] = w[c];
    }
    let mut scores = vec![0.0; m];
    for i in 0..m {
        let mut sp = 0.0;
        let mut sm = 0.0;
        for c in 0..k {
            let v = w[c] * r[i][c];
            let mut best = f64::MIN;
            let mut worst = f64::MAX;
            for l in 0..m {
                best = best.max(w[c] * r[l][c]);
                worst = worst.min(w[c] * r[l][c]);
            }
            sp += (v - best) * (v - best);
            sm += (v - worst) * (v - worst);
        }
        let (sp, sm) = (sp.sqrt(), sm.sqrt());
        scores[i] = if sp + sm == 0.0 { 0.5 } else { sm / (sp + sm) };
    }
    (weights, scores)
}

#[test]
fn random_matrices_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..300 {
        let m = rng.random_range(2..=9);
        let n = rng.random_range(2..=7);
        let x: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0..=20) as f64).collect())
            .collect();
        let got = score_matrix(&x).unwrap();
        let (w, s) = oracle(&x);
        for (a, b) in got.weights.iter().zip(&w) {
            assert!((a - b).abs() <= 1e-12, "weights {a} vs {b} for {x:?}");
        }
        for (a, b) in got.scores.iter().zip(&s) {
            assert!((a - b).abs() <= 1e-12, "scores {a} vs {b} for {x:?}");
        }
    }
}

#[test]
fn nine_agents_seven_criteria_ranking() {
    let csv = "agent,c1,c2,c3,c4,c5,c6,c7\n\
               a1,20,18,17,15,0,16,9\n\
               a2,20,10,12,14,0,15,7\n\
               a3,19,5,8,9,0,12,2\n\
               a4,20,20,19,18,0,20,12\n\
               a5,15,3,4,6,0,8,1\n\
               a6,18,12,14,13,0,11,6\n\
               a7,10,2,1,3,0,4,0\n\
               a8,20,16,15,17,0,18,10\n\
               a9,17,9,10,8,0,9,3\n";
    let m = FulfillmentMatrix::from_csv(csv).unwrap();
    let b = score_matrix(&m.values).unwrap();
    let (w, s) = oracle(&m.values);
    assert_eq!(b.dropped, vec![4]);
    assert_eq!(b.weights[4], 0.0);
    for (a, o) in b.scores.iter().zip(&s) {
        assert!((a - o).abs() <= 1e-12);
    }
    for (a, o) in b.weights.iter().zip(&w) {
        assert!((a - o).abs() <= 1e-12);
    }
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    assert_eq!(b.ranking, order);
    assert_eq!(m.agents[b.ranking[0]], "a4");
    assert_eq!(m.agents[b.ranking[8]], "a7");
}

#[test]
fn dominance_and_degenerate_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(2..=7);
        let low: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64).collect();
        let mut high: Vec<f64> = low.iter().map(|v| v + rng.random_range(0..=10) as f64).collect();
        high[0] = low[0] + 1.0;
        let b = score_matrix(&[high, low]).unwrap();
        assert_eq!(b.scores, vec![1.0, 0.0]);
    }
    assert_eq!(score_matrix(&[vec![3.0, 4.0]]).unwrap_err(), EvalError::TooFewAgents(1));
}
