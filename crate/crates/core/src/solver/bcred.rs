use super::selection::SelectionStream;
use super::{squared_norm, Clock, ConvergenceTrace, RunOutput, Solver, SolverConfig, MONOTONICITY_SLACK};
use crate::error::Result;

impl Solver<'_> {
    /// Block-coordinate RED: each update refreshes one block,
    /// `x_i ← x_i − γ G_i(x)`.
    pub fn bcred(&self, config: &SolverConfig) -> Result<RunOutput> {
        self.check_common(config)?;
        let (gamma, unsafe_step) = self.bcred_step(config)?;
        let problem = self.problem;
        let partition = self.partition;
        let tau = config.tau;
        let mut x = self.initial_point(config)?;
        let clock = Clock::start();
        let mut trace = ConvergenceTrace::new(
            gamma,
            unsafe_step,
            problem.prior.is_some(),
            problem.oracle.is_some(),
        );
        let check_monotone = self.monotonicity_applies(config, unsafe_step);
        let track_distance = check_monotone || (config.record_updates && problem.oracle.is_some());

        let residual0 = squared_norm(&self.operator_g(&x, tau, config.pad)?);
        trace.push(0, residual0, problem.objective(&x)?, self.distance(&x), clock.seconds());

        let mut r = if config.cached_residual {
            Some(problem.data().residual(&x)?)
        } else {
            None
        };
        let mut prev_dist = self.distance(&x);
        let mut stream = SelectionStream::new(config.selection, partition.num_blocks());

        for k in 1..=config.iterations {
            for i in stream.next_epoch() {
                if config.record_updates {
                    trace
                        .update_residuals
                        .push(squared_norm(&self.operator_g(&x, tau, config.pad)?));
                }
                let g = self.block_g(&x, i, tau, config.pad, r.as_deref())?;
                let idx = partition.block(i)?;
                for (&j, gj) in idx.iter().zip(&g) {
                    x[j] -= gamma * gj;
                }
                if let Some(r) = r.as_mut() {
                    let ag = problem.model.apply_block_columns(partition, i, &g)?;
                    for (rv, av) in r.iter_mut().zip(&ag) {
                        *rv -= gamma * av;
                    }
                }
                trace.selection_order.push(i);
                if track_distance {
                    let d = self.distance(&x);
                    if let (Some(d), Some(p)) = (d, prev_dist) {
                        if check_monotone && d > p + MONOTONICITY_SLACK {
                            trace.monotonicity_violations += 1;
                        }
                        if config.record_updates {
                            trace.update_distances.push(d);
                        }
                    }
                    prev_dist = d;
                }
            }

            let last = k == config.iterations;
            if config.record_trace || config.stop_tol.is_some() || last {
                let residual = squared_norm(&self.operator_g(&x, tau, config.pad)?);
                let stop = config
                    .stop_tol
                    .is_some_and(|tol| normalized(residual, residual0) <= tol);
                if config.record_trace || stop || last {
                    trace.push(
                        k,
                        residual,
                        problem.objective(&x)?,
                        self.distance(&x),
                        clock.seconds(),
                    );
                }
                if stop {
                    break;
                }
            }
        }
        Ok(RunOutput { x, trace })
    }

    /// Block `i` of `G(x)`. With a cached residual the data term uses it
    /// directly; otherwise `Ax − y` is recomputed.
    pub(crate) fn block_g(
        &self,
        x: &[f64],
        i: usize,
        tau: f64,
        pad: Option<usize>,
        cached: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let problem = self.problem;
        let partition = self.partition;
        let mut g = match cached {
            Some(r) => problem.model.lsq_block_gradient(partition, i, r)?,
            None => {
                let r = problem.data().residual(x)?;
                problem.model.lsq_block_gradient(partition, i, &r)?
            }
        };
        let xi = partition.extract(x, i)?;
        let h = if let Some(p) = pad {
            let d = problem.denoiser.blockwise_denoise(x, partition, i, p)?;
            xi.iter().zip(&d).map(|(a, b)| tau * (a - b)).collect()
        } else if problem.denoiser.is_pointwise() {
            problem.denoiser.validate()?;
            problem.denoiser.red_operator_pointwise(&xi, tau)
        } else {
            let full = problem.denoiser.red_operator(x, tau)?;
            partition.extract(&full, i)?
        };
        for (gv, hv) in g.iter_mut().zip(&h) {
            *gv += hv;
        }
        Ok(g)
    }
}

pub(crate) fn normalized(residual: f64, residual0: f64) -> f64 {
    if residual0 > 0.0 {
        residual / residual0
    } else if residual == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}
