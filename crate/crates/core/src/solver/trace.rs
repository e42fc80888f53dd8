use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-outer-iteration diagnostics of a solver run. Entry `k = 0` describes
/// the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    /// Outer-iteration number of each recorded entry.
    pub k: Vec<usize>,
    /// `‖G(x^k)‖²` (for PGM: the squared gradient-mapping norm).
    pub residual: Vec<f64>,
    pub normalized_residual: Vec<f64>,
    pub objective: Option<Vec<f64>>,
    pub distance: Option<Vec<f64>>,
    pub wall_time: Vec<f64>,
    /// Every block index used, in update order.
    pub selection_order: Vec<usize>,
    /// `‖G(x^{k-1})‖²` before every single block update, when requested.
    pub update_residuals: Vec<f64>,
    /// `‖x^k − x*‖` after every single block update, when requested and an
    /// oracle point is available.
    pub update_distances: Vec<f64>,
    pub gamma: f64,
    /// The step-size exceeded the guaranteed range and was allowed explicitly.
    pub unsafe_step: bool,
    /// Number of block updates that increased the distance to the oracle by
    /// more than [`crate::solver::MONOTONICITY_SLACK`] (counted only for
    /// guarded steps with a provably nonexpansive denoiser). Block
    /// cocoercivity only controls pairs that differ in a single block, so a
    /// nonzero count is possible for multi-block partitions even when the run
    /// converges.
    pub monotonicity_violations: usize,
}

impl ConvergenceTrace {
    pub(crate) fn new(gamma: f64, unsafe_step: bool, has_objective: bool, has_oracle: bool) -> Self {
        Self {
            gamma,
            unsafe_step,
            objective: has_objective.then(Vec::new),
            distance: has_oracle.then(Vec::new),
            ..Self::default()
        }
    }

    pub(crate) fn push(
        &mut self,
        k: usize,
        residual: f64,
        objective: Option<f64>,
        distance: Option<f64>,
        wall_time: f64,
    ) {
        let r0 = self.residual.first().copied().unwrap_or(residual);
        let normalized = if r0 > 0.0 {
            residual / r0
        } else if residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        self.k.push(k);
        self.residual.push(residual);
        self.normalized_residual.push(normalized);
        if let (Some(series), Some(v)) = (self.objective.as_mut(), objective) {
            series.push(v);
        }
        if let (Some(series), Some(v)) = (self.distance.as_mut(), distance) {
            series.push(v);
        }
        self.wall_time.push(wall_time);
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// False when the distance to the oracle increased at some block update.
    pub fn is_valid(&self) -> bool {
        self.monotonicity_violations == 0
    }

    pub fn final_normalized_residual(&self) -> Option<f64> {
        self.normalized_residual.last().copied()
    }

    /// CSV with header `k,residual,normalized_residual,objective,distance,wall_time_s`.
    /// Absent series and, unless `include_wall_time`, the timing column are
    /// written as empty fields so the file is reproducible.
    pub fn to_csv(&self, include_wall_time: bool) -> String {
        let mut out = String::from("k,residual,normalized_residual,objective,distance,wall_time_s\n");
        let opt = |s: &Option<Vec<f64>>, i: usize| {
            s.as_ref()
                .and_then(|v| v.get(i))
                .map(|v| v.to_string())
                .unwrap_or_default()
        };
        for i in 0..self.len() {
            let wall = if include_wall_time {
                self.wall_time[i].to_string()
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.k[i],
                self.residual[i],
                self.normalized_residual[i],
                opt(&self.objective, i),
                opt(&self.distance, i),
                wall
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path, include_wall_time: bool) -> Result<()> {
        fs::write(path, self.to_csv(include_wall_time)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = ConvergenceTrace::new(0.5, false, false, true);
        t.push(0, 4.0, None, Some(1.0), 0.25);
        t.push(1, 1.0, None, Some(0.5), 0.5);
        let csv = t.to_csv(false);
        assert_eq!(
            csv,
            "k,residual,normalized_residual,objective,distance,wall_time_s\n0,4,1,,1,\n1,1,0.25,,0.5,\n"
        );
        assert!(t.to_csv(true).lines().nth(2).unwrap().ends_with(",0.5"));
    }

    #[test]
    fn zero_initial_residual_normalizes_to_zero() {
        let mut t = ConvergenceTrace::new(1.0, false, false, false);
        t.push(0, 0.0, None, None, 0.0);
        t.push(1, 0.0, None, None, 0.0);
        assert_eq!(t.normalized_residual, vec![0.0, 0.0]);
    }
}
