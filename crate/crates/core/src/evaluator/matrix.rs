use std::io;
use std::path::Path;

use super::{EvalError, ScoreBundle};

/// Agents × criteria counts of criterion attainment over repeated trials.
#[derive(Debug, Clone, PartialEq)]
pub struct FulfillmentMatrix {
    pub criteria: Vec<String>,
    pub agents: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Parse(e.to_string())
}

impl FulfillmentMatrix {
    pub fn new(criteria: Vec<String>) -> Self {
        Self {
            criteria,
            agents: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push_row(&mut self, agent: impl Into<String>, row: Vec<f64>) -> Result<(), EvalError> {
        if row.len() != self.criteria.len() {
            return Err(EvalError::DimensionMismatch(format!(
                "row has {} entries, {} criteria",
                row.len(),
                self.criteria.len()
            )));
        }
        self.agents.push(agent.into());
        self.values.push(row);
        Ok(())
    }

    /// Per-criterion count of trials meeting it.
    pub fn push_trials(&mut self, agent: impl Into<String>, trials: &[Vec<bool>]) -> Result<(), EvalError> {
        let mut row = vec![0.0; self.criteria.len()];
        for t in trials {
            if t.len() != row.len() {
                return Err(EvalError::DimensionMismatch(format!(
                    "trial has {} results, {} criteria",
                    t.len(),
                    row.len()
                )));
            }
            for (c, &met) in row.iter_mut().zip(t) {
                if met {
                    *c += 1.0;
                }
            }
        }
        self.push_row(agent, row)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["agent".to_string()];
        header.extend(self.criteria.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (a, row) in self.agents.iter().zip(&self.values) {
            let mut rec = vec![a.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        if header.get(0) != Some("agent") || header.len() < 2 {
            return Err(EvalError::Parse("header must be `agent,<criterion>,...`".into()));
        }
        let mut m = Self::new(header.iter().skip(1).map(String::from).collect());
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| EvalError::Parse(format!("row {}: bad number {v:?}", line + 2)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            m.push_row(rec.get(0).unwrap_or_default(), row)?;
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_csv(&text)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    /// Stacks the rows of several matrices with identical criteria.
    pub fn merge(parts: Vec<Self>) -> Result<Self, EvalError> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or(EvalError::TooFewAgents(0))?;
        for p in it {
            if p.criteria != out.criteria {
                return Err(EvalError::DimensionMismatch(format!(
                    "criteria differ: {:?} vs {:?}",
                    out.criteria, p.criteria
                )));
            }
            out.agents.extend(p.agents);
            out.values.extend(p.values);
        }
        Ok(out)
    }
}

pub fn scores_csv(m: &FulfillmentMatrix, b: &ScoreBundle) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "agent", "score"]).expect("in-memory write");
    for (rank, &i) in b.ranking.iter().enumerate() {
        w.write_record([(rank + 1).to_string(), m.agents[i].clone(), format!("{:.6}", b.scores[i])])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn score_table(m: &FulfillmentMatrix, b: &ScoreBundle) -> String {
    let width = m.agents.iter().map(String::len).max().unwrap_or(5).max(5);
    let mut s = format!("{:>4}  {:<width$}  {:>8}\n", "rank", "agent", "score");
    for (rank, &i) in b.ranking.iter().enumerate() {
        s.push_str(&format!("{:>4}  {:<width$}  {:>8.4}\n", rank + 1, m.agents[i], b.scores[i]));
    }
    s.push_str("weights:");
    for (c, w) in m.criteria.iter().zip(&b.weights) {
        s.push_str(&format!(" {c}={w:.4}"));
    }
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_merge() {
        let mut m = FulfillmentMatrix::new(vec!["a".into(), "b".into()]);
        m.push_trials("gpt", &[vec![true, false], vec![true, true]]).unwrap();
        let text = m.to_csv();
        assert_eq!(text, "agent,a,b\ngpt,2,1\n");
        let back = FulfillmentMatrix::from_csv(&text).unwrap();
        assert_eq!(back, m);
        let merged = FulfillmentMatrix::merge(vec![m.clone(), back]).unwrap();
        assert_eq!(merged.agents.len(), 2);
        let other = FulfillmentMatrix::new(vec!["z".into()]);
        assert!(FulfillmentMatrix::merge(vec![m, other]).is_err());
        assert!(FulfillmentMatrix::from_csv("name,a\nx,1\n").is_err());
        assert!(FulfillmentMatrix::from_csv("agent,a\nx,one\n").is_err());
    }
}
