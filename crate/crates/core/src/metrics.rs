//! Regret accounting against the ground truth. Only the evaluation side
//! touches this module; the optimizers never see true risks.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::environment::{GroundTruth, Optimum};
use crate::run::{RunOutput, Site};
use crate::{Error, Result};

/// Column order of [`RunTrace::write_csv`].
pub const CSV_HEADER: [&str; 9] =
    ["step", "theta_0", "theta_1", "pr", "inst_regret", "cum_regret", "depth", "cell_index", "samples"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based deployment counter.
    pub step: usize,
    pub theta: Vec<f64>,
    pub pr: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub site: Site,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub optimum: Optimum,
    pub records: Vec<TraceRecord>,
    pub final_theta: Option<Vec<f64>>,
    pub simple_regret: Option<f64>,
    pub wall_clock_secs: f64,
}

impl RunTrace {
    pub fn new(optimum: Optimum) -> Self {
        Self { optimum, records: Vec::new(), final_theta: None, simple_regret: None, wall_clock_secs: 0.0 }
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Cumulative regret after each deployment.
    pub fn curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cum_regret).collect()
    }

    pub fn min_inst_regret(&self) -> Option<f64> {
        self.records.iter().map(|r| r.inst_regret).min_by(f64::total_cmp)
    }

    /// Appends one deployment with its true risk and regret.
    pub fn record_deploy<G: GroundTruth + ?Sized>(&mut self, theta: &[f64], site: Site, samples: usize, oracle: &G) {
        let pr = oracle.true_pr(theta);
        let inst_regret = pr - self.optimum.value;
        let cum_regret = self.cumulative_regret() + inst_regret;
        self.records.push(TraceRecord {
            step: self.records.len() + 1,
            theta: theta.to_vec(),
            pr,
            inst_regret,
            cum_regret,
            site,
            samples,
        });
    }

    /// Sets the returned decision and its simple regret.
    pub fn finish<G: GroundTruth + ?Sized>(&mut self, theta: &[f64], oracle: &G, wall_clock_secs: f64) {
        self.simple_regret = Some(oracle.true_pr(theta) - self.optimum.value);
        self.final_theta = Some(theta.to_vec());
        self.wall_clock_secs = wall_clock_secs;
    }

    /// Builds the full trace of a finished run.
    pub fn from_output<G: GroundTruth + ?Sized>(
        output: &RunOutput,
        oracle: &G,
        optimum: Optimum,
        wall_clock_secs: f64,
    ) -> Self {
        let mut trace = Self::new(optimum);
        for d in &output.deployments {
            trace.record_deploy(&d.theta, d.site.clone(), d.samples, oracle);
        }
        trace.finish(&output.best, oracle, wall_clock_secs);
        trace
    }

    /// Writes the per-deployment CSV. Only the first two coordinates of `θ`
    /// have columns; an arm index goes in `cell_index` with an empty `depth`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.records {
            let coord = |k: usize| r.theta.get(k).map_or(String::new(), |v| v.to_string());
            let (depth, index) = match r.site {
                Site::Cell { depth, index } => (depth.to_string(), index.to_string()),
                Site::Arm(i) => (String::new(), i.to_string()),
            };
            w.write_record([
                r.step.to_string(),
                coord(0),
                coord(1),
                r.pr.to_string(),
                r.inst_regret.to_string(),
                r.cum_regret.to_string(),
                depth,
                index,
                r.samples.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}
