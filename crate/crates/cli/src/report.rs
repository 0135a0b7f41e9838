//! Report CSV rows.
//!
//! Columns: `slot,seed,alpha,beta,gamma,active_racks,active_pms,migrations,
//! c_ene,c_rel,g_rel,objective,wall_time`. Costs are dollars, `objective`
//! is the normalized weighted value and `wall_time` is seconds (written as
//! 0 unless timing is requested, so reruns stay byte-identical). Rows
//! averaged over seeds carry `mean` in the seed column.

use std::fmt;

use relcon_core::{CostWeights, SlotReport};

use crate::error::Result;

pub const HEADER: [&str; 13] = [
    "slot",
    "seed",
    "alpha",
    "beta",
    "gamma",
    "active_racks",
    "active_pms",
    "migrations",
    "c_ene",
    "c_rel",
    "g_rel",
    "objective",
    "wall_time",
];

pub const SOLVER_HEADER: [&str; 7] = [
    "slot",
    "seed",
    "alpha",
    "beta",
    "gamma",
    "proof",
    "nodes_explored",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedLabel {
    Seed(u64),
    Mean,
}

impl fmt::Display for SeedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedLabel::Seed(s) => write!(f, "{s}"),
            SeedLabel::Mean => f.write_str("mean"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub slot: u64,
    pub seed: SeedLabel,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub active_racks: f64,
    pub active_pms: f64,
    pub migrations: f64,
    pub c_ene: f64,
    pub c_rel: f64,
    pub g_rel: f64,
    pub objective: f64,
    pub wall_time: f64,
}

impl Row {
    pub fn from_report(r: &SlotReport<f64>, seed: u64, w: &CostWeights<f64>, timing: bool) -> Self {
        Self {
            slot: r.slot,
            seed: SeedLabel::Seed(seed),
            alpha: w.alpha,
            beta: w.beta,
            gamma: w.gamma,
            active_racks: r.active_racks as f64,
            active_pms: r.active_pms as f64,
            migrations: r.n_migrations as f64,
            c_ene: r.c_ene,
            c_rel: r.c_rel,
            g_rel: r.g_rel,
            objective: r.objective,
            wall_time: if timing { r.wall_time } else { 0.0 },
        }
    }

    /// Column-wise mean of `rows`, which share slot and weights. Sums run in slice order.
    pub fn mean(rows: &[Row]) -> Option<Row> {
        let first = rows.first()?;
        let n = rows.len() as f64;
        let avg = |f: fn(&Row) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Some(Row {
            seed: SeedLabel::Mean,
            active_racks: avg(|r| r.active_racks),
            active_pms: avg(|r| r.active_pms),
            migrations: avg(|r| r.migrations),
            c_ene: avg(|r| r.c_ene),
            c_rel: avg(|r| r.c_rel),
            g_rel: avg(|r| r.g_rel),
            objective: avg(|r| r.objective),
            wall_time: avg(|r| r.wall_time),
            ..first.clone()
        })
    }

    fn record(&self) -> [String; 13] {
        [
            self.slot.to_string(),
            self.seed.to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            self.gamma.to_string(),
            self.active_racks.to_string(),
            self.active_pms.to_string(),
            self.migrations.to_string(),
            self.c_ene.to_string(),
            self.c_rel.to_string(),
            self.g_rel.to_string(),
            self.objective.to_string(),
            self.wall_time.to_string(),
        ]
    }
}

/// Proof label and search effort of one slot decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverRow {
    pub slot: u64,
    pub seed: u64,
    pub weights: (f64, f64, f64),
    pub proof: &'static str,
    pub nodes_explored: u64,
}

impl SolverRow {
    pub fn from_report(r: &SlotReport<f64>, seed: u64, w: &CostWeights<f64>) -> Self {
        Self {
            slot: r.slot,
            seed,
            weights: (w.alpha, w.beta, w.gamma),
            proof: r.proof.label(),
            nodes_explored: r.nodes_explored,
        }
    }
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn rows_to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    finish(w)
}

pub fn solver_rows_to_csv(rows: &[SolverRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SOLVER_HEADER)?;
    for r in rows {
        let (a, b, g) = r.weights;
        w.write_record([
            r.slot.to_string(),
            r.seed.to_string(),
            a.to_string(),
            b.to_string(),
            g.to_string(),
            r.proof.to_string(),
            r.nodes_explored.to_string(),
        ])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, pms: f64) -> Row {
        Row {
            slot: 0,
            seed: SeedLabel::Seed(seed),
            alpha: 1.0,
            beta: 0.2,
            gamma: 1.0,
            active_racks: 4.0,
            active_pms: pms,
            migrations: 3.0,
            c_ene: 0.5,
            c_rel: 1.0,
            g_rel: 0.25,
            objective: -0.125,
            wall_time: 0.0,
        }
    }

    #[test]
    fn header_is_fixed() {
        let csv = rows_to_csv(&[row(1, 13.0)]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "slot,seed,alpha,beta,gamma,active_racks,active_pms,migrations,c_ene,c_rel,g_rel,objective,wall_time"
        );
        assert_eq!(
            lines.next().unwrap(),
            "0,1,1,0.2,1,4,13,3,0.5,1,0.25,-0.125,0"
        );
    }

    #[test]
    fn mean_row_is_labeled() {
        let m = Row::mean(&[row(0, 13.0), row(1, 14.0)]).unwrap();
        assert_eq!(m.seed, SeedLabel::Mean);
        assert_eq!(m.active_pms, 13.5);
        assert_eq!(m.alpha, 1.0);
        assert!(Row::mean(&[]).is_none());
    }
}
