use super::bcred::normalized;
use super::{squared_norm, Clock, ConvergenceTrace, RunOutput, Solver, SolverConfig, MONOTONICITY_SLACK};
use crate::error::Result;

impl Solver<'_> {
    /// Full-gradient RED, `x ← x − γ G(x)`. The selection rule, cached
    /// residual and per-update recording options are ignored.
    pub fn red_full(&self, config: &SolverConfig) -> Result<RunOutput> {
        self.check_common(config)?;
        let (gamma, unsafe_step) = self.red_step(config)?;
        let problem = self.problem;
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

        let mut g = self.operator_g(&x, tau, config.pad)?;
        let residual0 = squared_norm(&g);
        trace.push(0, residual0, problem.objective(&x)?, self.distance(&x), clock.seconds());
        let mut prev_dist = self.distance(&x);

        for k in 1..=config.iterations {
            for (xv, gv) in x.iter_mut().zip(&g) {
                *xv -= gamma * gv;
            }
            let dist = self.distance(&x);
            if check_monotone {
                if let (Some(d), Some(p)) = (dist, prev_dist) {
                    if d > p + MONOTONICITY_SLACK {
                        trace.monotonicity_violations += 1;
                    }
                }
            }
            prev_dist = dist;
            g = self.operator_g(&x, tau, config.pad)?;
            let residual = squared_norm(&g);
            let last = k == config.iterations;
            let stop = config
                .stop_tol
                .is_some_and(|tol| normalized(residual, residual0) <= tol);
            if config.record_trace || stop || last {
                trace.push(k, residual, problem.objective(&x)?, dist, clock.seconds());
            }
            if stop {
                break;
            }
        }
        Ok(RunOutput { x, trace })
    }
}
