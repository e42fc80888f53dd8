//! RED solvers for `g(x) = ½‖Ax − y‖²` with a denoiser prior.
//!
//! - [`Solver::bcred`]: block-coordinate RED, one block of
//!   `G(x) = ∇g(x) + τ(x − D(x))` per update, optionally with a cached
//!   residual `r = Ax − y`.
//! - [`Solver::red_full`]: full-gradient RED, `x ← x − γ G(x)`.
//! - [`Solver::pgm`]: proximal gradient on an explicit regularizer, used for
//!   reference optima.
//!
//! One outer iteration is `b` block updates; traces are recorded per outer
//! iteration.

mod bcred;
mod bounds;
mod pgm;
mod red;
mod selection;
mod trace;

pub use bounds::{coordinate_descent_bound, theorem1_bound, theorem2_bound, theorem2_schedule};
pub use selection::{selection_stream, Selection};
pub use trace::ConvergenceTrace;

use crate::blocks::BlockPartition;
use crate::denoise::{tv2d_value, Denoiser};
use crate::error::{Error, Result};
use crate::forward::{ForwardModel, LeastSquares, LipschitzInfo};
use crate::linalg::norm_sq;
use crate::moreau::SmoothableFunction;

/// Allowed increase of `‖x^k − x*‖` per block update before a trace is
/// flagged.
pub const MONOTONICITY_SLACK: f64 = 1e-12;
/// Relative tolerance on explicit step-sizes above the guaranteed maximum.
pub const STEP_GUARD_SLACK: f64 = 1e-9;

/// Explicit regularizer `h`, used to report `f = g + h`.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Function(SmoothableFunction),
    /// `λ · TV_iso` on a `height × width` image.
    IsotropicTv { lambda: f64, height: usize, width: usize },
    /// `(τ/2) xᵀ(x − Wx)` for the problem's linear-smoother denoiser.
    RedQuadratic { tau: f64 },
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub model: ForwardModel,
    pub y: Vec<f64>,
    pub denoiser: Denoiser,
    pub prior: Option<Prior>,
    /// A known point of `zer(G)`, enabling distance diagnostics.
    pub oracle: Option<Vec<f64>>,
}

impl Problem {
    pub fn new(model: ForwardModel, y: Vec<f64>, denoiser: Denoiser) -> Result<Self> {
        if y.len() != model.rows() {
            return Err(Error::DimensionMismatch(format!(
                "measurements have length {}, model has {} rows",
                y.len(),
                model.rows()
            )));
        }
        denoiser.validate()?;
        if let Some((h, w)) = denoiser.image_shape() {
            if h * w != model.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "denoiser image {h}x{w} does not match signal length {}",
                    model.cols()
                )));
            }
        }
        Ok(Self {
            model,
            y,
            denoiser,
            prior: None,
            oracle: None,
        })
    }

    pub fn with_prior(mut self, prior: Prior) -> Self {
        self.prior = Some(prior);
        self
    }

    pub fn with_oracle(mut self, oracle: Vec<f64>) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn dim(&self) -> usize {
        self.model.cols()
    }

    pub fn data(&self) -> LeastSquares<'_> {
        LeastSquares {
            model: &self.model,
            y: &self.y,
        }
    }

    /// `G(x) = Aᵀ(Ax − y) + τ(x − D(x))` with the full-image denoiser.
    pub fn operator_g(&self, x: &[f64], tau: f64) -> Result<Vec<f64>> {
        let mut g = self.data().gradient(x)?;
        let h = self.denoiser.red_operator(x, tau)?;
        for (gi, hi) in g.iter_mut().zip(&h) {
            *gi += hi;
        }
        Ok(g)
    }

    /// `f(x) = g(x) + h(x)` when an explicit prior is attached.
    pub fn objective(&self, x: &[f64]) -> Result<Option<f64>> {
        let Some(prior) = &self.prior else {
            return Ok(None);
        };
        let g = self.data().value(x)?;
        Ok(Some(g + self.prior_value(prior, x)?))
    }

    fn prior_value(&self, prior: &Prior, x: &[f64]) -> Result<f64> {
        Ok(match prior {
            Prior::Function(h) => h.value(x),
            Prior::IsotropicTv {
                lambda,
                height,
                width,
            } => lambda * tv2d_value(x, *height, *width),
            Prior::RedQuadratic { tau } => self.denoiser.red_objective_linear(x, *tau)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// The largest step with guarantees: `1/(L_max + 2τ)` for BC-RED,
    /// `1/(L + 2τ)` for full RED, `1/L` for PGM.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPoint {
    Zeros,
    AdjointY,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub gamma: StepSize,
    pub selection: Selection,
    /// Outer iterations; each is `b` block updates for BC-RED.
    pub iterations: usize,
    pub x0: InitialPoint,
    /// Stop once the normalized residual reaches this value.
    pub stop_tol: Option<f64>,
    /// Maintain `r = Ax − y` incrementally (BC-RED only).
    pub cached_residual: bool,
    /// Use padded block-wise denoising with this many context pixels.
    pub pad: Option<usize>,
    pub allow_unsafe_step: bool,
    /// Record `‖G‖²` (and the oracle distance) around every block update.
    pub record_updates: bool,
    /// Record every outer iteration; when false only the initial and final
    /// entries are kept.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            gamma: StepSize::Auto,
            selection: Selection::Cyclic,
            iterations: 100,
            x0: InitialPoint::Zeros,
            stop_tol: None,
            cached_residual: false,
            pad: None,
            allow_unsafe_step: false,
            record_updates: false,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub x: Vec<f64>,
    pub trace: ConvergenceTrace,
}

/// Shared context for runs on one problem and partition; estimates the
/// Lipschitz constants once.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    problem: &'a Problem,
    partition: &'a BlockPartition,
    lipschitz: LipschitzInfo,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a Problem, partition: &'a BlockPartition) -> Result<Self> {
        let lipschitz = problem.model.estimate_lipschitz(partition)?;
        Self::with_lipschitz(problem, partition, lipschitz)
    }

    pub fn with_lipschitz(
        problem: &'a Problem,
        partition: &'a BlockPartition,
        lipschitz: LipschitzInfo,
    ) -> Result<Self> {
        if partition.dim() != problem.dim() {
            return Err(Error::DimensionMismatch(format!(
                "partition covers {} coordinates, signal has {}",
                partition.dim(),
                problem.dim()
            )));
        }
        if lipschitz.blocks.len() != partition.num_blocks() {
            return Err(Error::DimensionMismatch(
                "Lipschitz constants do not match the partition".into(),
            ));
        }
        Ok(Self {
            problem,
            partition,
            lipschitz,
        })
    }

    pub fn lipschitz(&self) -> &LipschitzInfo {
        &self.lipschitz
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn partition(&self) -> &BlockPartition {
        self.partition
    }

    /// Step-size for BC-RED under `config`: `(γ, unsafe)`.
    pub fn bcred_step(&self, config: &SolverConfig) -> Result<(f64, bool)> {
        resolve_step(config, self.lipschitz.max + 2.0 * config.tau)
    }

    pub fn red_step(&self, config: &SolverConfig) -> Result<(f64, bool)> {
        resolve_step(config, self.lipschitz.global + 2.0 * config.tau)
    }

    fn check_common(&self, config: &SolverConfig) -> Result<()> {
        if !(config.tau > 0.0) || !config.tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                config.tau
            )));
        }
        if self.problem.denoiser == Denoiser::Expanding {
            return Err(Error::Incompatible(
                "the expanding denoiser is a test fixture and cannot be used in a solver".into(),
            ));
        }
        if config.pad.is_some() && self.partition.tile_rect(0).is_none() {
            return Err(Error::Incompatible(
                "block-wise denoising (pad) needs a tile partition".into(),
            ));
        }
        if let Some(tol) = config.stop_tol {
            if !(tol >= 0.0) {
                return Err(Error::InvalidParameter(format!("stop_tol must be nonnegative, got {tol}")));
            }
        }
        Ok(())
    }

    fn initial_point(&self, config: &SolverConfig) -> Result<Vec<f64>> {
        match &config.x0 {
            InitialPoint::Zeros => Ok(vec![0.0; self.problem.dim()]),
            InitialPoint::AdjointY => self.problem.model.adjoint(&self.problem.y),
            InitialPoint::Given(x) => {
                if x.len() != self.problem.dim() {
                    return Err(Error::LengthMismatch {
                        expected: self.problem.dim(),
                        got: x.len(),
                    });
                }
                Ok(x.clone())
            }
        }
    }

    /// `D(x)` as used by the solver: the full-image denoiser, or the
    /// assembled padded block-wise outputs when `pad` is set.
    pub fn denoised(&self, x: &[f64], pad: Option<usize>) -> Result<Vec<f64>> {
        match pad {
            None => self.problem.denoiser.denoise(x),
            Some(p) => {
                let mut out = vec![0.0; x.len()];
                for i in 0..self.partition.num_blocks() {
                    let d = self.problem.denoiser.blockwise_denoise(x, self.partition, i, p)?;
                    self.partition.scatter(&mut out, &d, i)?;
                }
                Ok(out)
            }
        }
    }

    /// `G(x)` with the denoiser configured by `pad`.
    pub fn operator_g(&self, x: &[f64], tau: f64, pad: Option<usize>) -> Result<Vec<f64>> {
        if pad.is_none() {
            return self.problem.operator_g(x, tau);
        }
        let mut g = self.problem.data().gradient(x)?;
        let d = self.denoised(x, pad)?;
        for ((gi, xi), di) in g.iter_mut().zip(x).zip(&d) {
            *gi += tau * (xi - di);
        }
        Ok(g)
    }

    fn distance(&self, x: &[f64]) -> Option<f64> {
        self.problem
            .oracle
            .as_ref()
            .map(|o| crate::linalg::dist(x, o))
    }

    /// Distance monotonicity is tracked only for guarded steps with a
    /// provably nonexpansive denoiser and no padding.
    fn monotonicity_applies(&self, config: &SolverConfig, unsafe_step: bool) -> bool {
        self.problem.oracle.is_some()
            && !unsafe_step
            && config.pad.is_none()
            && self.problem.denoiser.is_provably_nonexpansive()
    }
}

fn resolve_step(config: &SolverConfig, curvature: f64) -> Result<(f64, bool)> {
    let max = if curvature > 0.0 { 1.0 / curvature } else { f64::INFINITY };
    match config.gamma {
        StepSize::Auto => Ok((if max.is_finite() { max } else { 1.0 }, false)),
        StepSize::Fixed(gamma) => {
            if !(gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::InvalidStepSize(format!("gamma must be positive, got {gamma}")));
            }
            if gamma > max * (1.0 + STEP_GUARD_SLACK) {
                if config.allow_unsafe_step {
                    return Ok((gamma, true));
                }
                return Err(Error::InvalidStepSize(format!(
                    "gamma = {gamma} exceeds the guaranteed maximum {max}"
                )));
            }
            Ok((gamma, false))
        }
    }
}

/// Elapsed-time helper shared by the run loops.
pub(crate) struct Clock(std::time::Instant);

impl Clock {
    pub(crate) fn start() -> Self {
        Self(std::time::Instant::now())
    }

    pub(crate) fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Full-gradient RED on `problem` (single-block Lipschitz estimate).
pub fn red_full_run(problem: &Problem, config: &SolverConfig) -> Result<RunOutput> {
    let partition = BlockPartition::single(problem.dim())?;
    Solver::new(problem, &partition)?.red_full(config)
}

/// BC-RED on `problem` with the given partition.
pub fn bcred_run(problem: &Problem, partition: &BlockPartition, config: &SolverConfig) -> Result<RunOutput> {
    Solver::new(problem, partition)?.bcred(config)
}

/// Proximal gradient on `f = g + h` for a prox-representable `h`.
pub fn pgm_run(problem: &Problem, h: &SmoothableFunction, config: &SolverConfig) -> Result<RunOutput> {
    let partition = BlockPartition::single(problem.dim())?;
    Solver::new(problem, &partition)?.pgm(h, config)
}

pub(crate) fn squared_norm(v: &[f64]) -> f64 {
    norm_sq(v)
}
