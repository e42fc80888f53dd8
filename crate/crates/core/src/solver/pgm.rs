use super::bcred::normalized;
use super::{squared_norm, Clock, ConvergenceTrace, RunOutput, Solver, SolverConfig, StepSize};
use crate::error::{Error, Result};
use crate::moreau::SmoothableFunction;

impl Solver<'_> {
    /// Proximal gradient on `f = g + h`: `x ← prox_{γh}(x − γ∇g(x))` with
    /// `γ ≤ 1/L`.
    ///
    /// The trace residual is the squared gradient-mapping norm
    /// `‖(x − x⁺)/γ‖²` and the objective is `f(x)`, both at the start of each
    /// iteration. Stops early once the iterate no longer changes.
    pub fn pgm(&self, h: &SmoothableFunction, config: &SolverConfig) -> Result<RunOutput> {
        let problem = self.problem;
        let l = self.lipschitz.global;
        let max = if l > 0.0 { 1.0 / l } else { f64::INFINITY };
        let (gamma, unsafe_step) = match config.gamma {
            StepSize::Auto => (if max.is_finite() { max } else { 1.0 }, false),
            StepSize::Fixed(g) => {
                if !(g > 0.0) || !g.is_finite() {
                    return Err(Error::InvalidStepSize(format!("gamma must be positive, got {g}")));
                }
                if g > max * (1.0 + super::STEP_GUARD_SLACK) {
                    if !config.allow_unsafe_step {
                        return Err(Error::InvalidStepSize(format!(
                            "gamma = {g} exceeds 1/L = {max}"
                        )));
                    }
                    (g, true)
                } else {
                    (g, false)
                }
            }
        };
        let mut x = self.initial_point(config)?;
        let data = problem.data();
        let clock = Clock::start();
        let mut trace = ConvergenceTrace::new(gamma, unsafe_step, true, problem.oracle.is_some());
        let mut residual0 = None;

        for k in 0..config.iterations {
            let grad = data.gradient(&x)?;
            let step: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - gamma * b).collect();
            let next = h.prox(gamma, &step)?;
            let mapping: Vec<f64> = x.iter().zip(&next).map(|(a, b)| (a - b) / gamma).collect();
            let residual = squared_norm(&mapping);
            let r0 = *residual0.get_or_insert(residual);
            let objective = data.value(&x)? + h.value(&x);
            let stop = next == x
                || config
                    .stop_tol
                    .is_some_and(|tol| normalized(residual, r0) <= tol);
            if config.record_trace || k == 0 || stop {
                trace.push(k, residual, Some(objective), self.distance(&x), clock.seconds());
            }
            if stop {
                return Ok(RunOutput { x, trace });
            }
            x = next;
        }
        let grad = data.gradient(&x)?;
        let step: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - gamma * b).collect();
        let next = h.prox(gamma, &step)?;
        let mapping: Vec<f64> = x.iter().zip(&next).map(|(a, b)| (a - b) / gamma).collect();
        let objective = data.value(&x)? + h.value(&x);
        trace.push(
            config.iterations,
            squared_norm(&mapping),
            Some(objective),
            self.distance(&x),
            clock.seconds(),
        );
        Ok(RunOutput { x, trace })
    }
}
