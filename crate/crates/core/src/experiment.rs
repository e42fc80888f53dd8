//! Config-driven experiments: phantom → measurements → reconstruction, with
//! trace, image and summary outputs.
//!
//! Every output is a function of the config text alone. The summary embeds
//! the resolved config (all defaults filled in, paths absolute) followed by
//! `result.*` lines, and can be used as a config to reproduce the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::blocks::{BlockPartition, PartitionSpec};
use crate::config::ConfigMap;
use crate::denoise::{
    certify_block_nonexpansive, Denoiser, Kernel, NonexpansivenessReport, DEFAULT_TV2D_ITERS,
    DEFAULT_TV2D_TOL,
};
use crate::error::{Error, Result};
use crate::forward::{FourierMask, ForwardModel, ForwardSpec};
use crate::image::{read_pgm, write_pgm, GrayImage};
use crate::linalg::{dist, norm, solve_dense};
use crate::metrics::{add_noise_at_input_snr, snr_db};
use crate::moreau::SmoothableFunction;
use crate::phantom;
use crate::solver::{
    InitialPoint, Prior, Problem, RunOutput, Selection, Solver, SolverConfig, StepSize,
};

#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSpec {
    Piecewise { n: usize, seed: u64 },
    Blobs { height: usize, width: usize, seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSource {
    File(PathBuf),
    Radial { lines: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardChoice {
    Identity,
    Gaussian { m: usize, seed: u64 },
    Fourier { mask: MaskSource },
    MatrixFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorChoice {
    None,
    L1 { lambda: f64 },
    Tv1d { lambda: f64 },
    Tikhonov { lambda: f64 },
    Tv2d { lambda: f64 },
    /// `(τ/2) xᵀ(x − Wx)` for a linear smoother.
    RedQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bcred,
    Red,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleChoice {
    None,
    /// Solve the affine equation `G(x) = 0` directly; linear denoisers only.
    Direct,
    /// Minimize `f = g + h` with proximal gradient for the given number of
    /// iterations and report the objective gap.
    Pgm { iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DenoiserChoice {
    Identity,
    SoftThreshold { theta: f64 },
    Tv1d { weight: f64 },
    Tv2d { weight: f64, inner_iters: usize, inner_tol: f64 },
    Smoother { rows: usize, weights: Vec<f64> },
    /// `tau = None` uses the solver's τ.
    GradientStep { lambda: f64, tau: Option<f64> },
    Expanding,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionChoice {
    Contiguous { blocks: usize },
    Tiles { tile_height: usize, tile_width: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    pub trace_csv: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Write measured wall time into the trace (makes it non-reproducible).
    pub wall_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub phantom: PhantomSpec,
    pub forward: ForwardChoice,
    pub input_snr_db: f64,
    pub noise_seed: u64,
    pub denoiser: DenoiserChoice,
    pub prior: PriorChoice,
    pub partition: PartitionChoice,
    pub algorithm: Algorithm,
    pub solver: SolverConfig,
    /// Initial point read from a one-column file, overriding `solver.x0`.
    pub x0_file: Option<PathBuf>,
    pub oracle: OracleChoice,
    pub certificate_trials: usize,
    pub certificate_seed: u64,
    pub outputs: Outputs,
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Experiment {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_map(ConfigMap::read(path)?)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        Self::from_map(ConfigMap::parse(text, base_dir)?)
    }

    pub fn from_map(mut c: ConfigMap) -> Result<Self> {
        let phantom = match c.take_required("phantom.kind")?.as_str() {
            "piecewise" => PhantomSpec::Piecewise {
                n: c.take_or("phantom.n", 128)?,
                seed: c.take_or("phantom.seed", 0)?,
            },
            "blobs" => PhantomSpec::Blobs {
                height: c.take_or("phantom.height", 32)?,
                width: c.take_or("phantom.width", 32)?,
                seed: c.take_or("phantom.seed", 0)?,
            },
            "file" => PhantomSpec::File {
                path: c
                    .take_path("phantom.path")
                    .ok_or_else(|| Error::config("phantom.path", "missing required key"))?,
            },
            other => return Err(Error::config("phantom.kind", format!("unknown phantom `{other}`"))),
        };

        let forward = match c.take_required("forward.kind")?.as_str() {
            "identity" => ForwardChoice::Identity,
            "gaussian" => ForwardChoice::Gaussian {
                m: c.take_parsed_required("forward.m")?,
                seed: c.take_or("forward.seed", 0)?,
            },
            "fourier" => {
                let mask = match c.take_path("forward.mask") {
                    Some(p) => MaskSource::File(p),
                    None => MaskSource::Radial {
                        lines: c.take_or("forward.radial_lines", 8)?,
                    },
                };
                ForwardChoice::Fourier { mask }
            }
            "matrix-file" => ForwardChoice::MatrixFile {
                path: c
                    .take_path("forward.path")
                    .ok_or_else(|| Error::config("forward.path", "missing required key"))?,
            },
            other => return Err(Error::config("forward.kind", format!("unknown forward model `{other}`"))),
        };

        let input_snr_db = c.take_or("noise.input_snr_db", 40.0)?;
        let noise_seed = c.take_or("noise.seed", 0)?;

        let denoiser = match c.take_required("denoiser.kind")?.as_str() {
            "identity" => DenoiserChoice::Identity,
            "soft-threshold" => DenoiserChoice::SoftThreshold {
                theta: c.take_parsed_required("denoiser.theta")?,
            },
            "tv1d" => DenoiserChoice::Tv1d {
                weight: c.take_parsed_required("denoiser.weight")?,
            },
            "tv2d" => DenoiserChoice::Tv2d {
                weight: c.take_parsed_required("denoiser.weight")?,
                inner_iters: c.take_or("denoiser.inner_iters", DEFAULT_TV2D_ITERS)?,
                inner_tol: c.take_or("denoiser.inner_tol", DEFAULT_TV2D_TOL)?,
            },
            "smoother" => {
                let raw = c.take_or("denoiser.kernel", "0.25,0.5,0.25".to_string())?;
                let weights = raw
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::config("denoiser.kernel", format!("cannot parse `{raw}`")))?;
                DenoiserChoice::Smoother {
                    rows: c.take_or("denoiser.kernel_rows", 1)?,
                    weights,
                }
            }
            "gradient-step" => DenoiserChoice::GradientStep {
                lambda: c.take_parsed_required("denoiser.lambda")?,
                tau: c.take_parsed("denoiser.tau")?,
            },
            "expanding" => DenoiserChoice::Expanding,
            other => return Err(Error::config("denoiser.kind", format!("unknown denoiser `{other}`"))),
        };

        let prior = match c.take_or("prior.kind", "none".to_string())?.as_str() {
            "none" => PriorChoice::None,
            "red-quadratic" => PriorChoice::RedQuadratic,
            kind => {
                let lambda = c.take_parsed_required("prior.lambda")?;
                match kind {
                    "l1" => PriorChoice::L1 { lambda },
                    "tv1d" => PriorChoice::Tv1d { lambda },
                    "tikhonov" => PriorChoice::Tikhonov { lambda },
                    "tv2d" => PriorChoice::Tv2d { lambda },
                    other => return Err(Error::config("prior.kind", format!("unknown prior `{other}`"))),
                }
            }
        };

        let partition = match c.take_or("partition.kind", "contiguous".to_string())?.as_str() {
            "contiguous" => PartitionChoice::Contiguous {
                blocks: c.take_or("partition.blocks", 1)?,
            },
            "tiles" => PartitionChoice::Tiles {
                tile_height: c.take_parsed_required("partition.tile_height")?,
                tile_width: c.take_parsed_required("partition.tile_width")?,
            },
            other => return Err(Error::config("partition.kind", format!("unknown partition `{other}`"))),
        };

        let algorithm = match c.take_or("solver.algorithm", "bcred".to_string())?.as_str() {
            "bcred" => Algorithm::Bcred,
            "red" => Algorithm::Red,
            "pgm" => Algorithm::Pgm,
            other => return Err(Error::config("solver.algorithm", format!("unknown algorithm `{other}`"))),
        };
        let tau = c.take_or("solver.tau", 1.0)?;
        let gamma = match c.take_or("solver.gamma", "auto".to_string())?.as_str() {
            "auto" => StepSize::Auto,
            v => StepSize::Fixed(
                v.parse()
                    .map_err(|_| Error::config("solver.gamma", format!("cannot parse `{v}`")))?,
            ),
        };
        let seed = c.take_or("solver.seed", 0u64)?;
        let selection = match c.take_or("solver.selection", "cyclic".to_string())?.as_str() {
            "cyclic" => Selection::Cyclic,
            "iid" => Selection::Iid { seed },
            "epoch" => Selection::EpochShuffle { seed },
            other => return Err(Error::config("solver.selection", format!("unknown selection `{other}`"))),
        };
        let mut x0_file = None;
        let x0 = match c.take_or("solver.x0", "zeros".to_string())?.as_str() {
            "zeros" => InitialPoint::Zeros,
            "adjoint-y" => InitialPoint::AdjointY,
            v => match v.strip_prefix("file:") {
                Some(p) => {
                    x0_file = Some(c.base_dir().join(p));
                    InitialPoint::Zeros
                }
                None => return Err(Error::config("solver.x0", format!("unknown initial point `{v}`"))),
            },
        };
        let stop_tol = match c.take_or("solver.stop_tol", "none".to_string())?.as_str() {
            "none" => None,
            v => Some(
                v.parse()
                    .map_err(|_| Error::config("solver.stop_tol", format!("cannot parse `{v}`")))?,
            ),
        };
        let pad = match c.take_or("solver.pad", "none".to_string())?.as_str() {
            "none" => None,
            v => Some(
                v.parse()
                    .map_err(|_| Error::config("solver.pad", format!("cannot parse `{v}`")))?,
            ),
        };
        let solver = SolverConfig {
            tau,
            gamma,
            selection,
            iterations: c.take_or("solver.iterations", 100)?,
            x0,
            stop_tol,
            cached_residual: c.take_bool("solver.cached_residual", false)?,
            pad,
            allow_unsafe_step: c.take_bool("solver.allow_unsafe_step", false)?,
            record_updates: false,
            record_trace: true,
        };
        let denoiser = match denoiser {
            DenoiserChoice::GradientStep { lambda, tau: None } => DenoiserChoice::GradientStep {
                lambda,
                tau: Some(solver.tau),
            },
            other => other,
        };
        let oracle = match c.take_or("solver.oracle", "none".to_string())?.as_str() {
            "none" => OracleChoice::None,
            "direct" => OracleChoice::Direct,
            "pgm" => OracleChoice::Pgm {
                iterations: c.take_or("solver.oracle_iterations", 100_000)?,
            },
            other => return Err(Error::config("solver.oracle", format!("unknown oracle `{other}`"))),
        };

        let certificate_trials = c.take_or("certificate.trials", 64)?;
        let certificate_seed = c.take_or("certificate.seed", 0)?;
        let outputs = Outputs {
            trace_csv: c.take_path("output.trace_csv"),
            image: c.take_path("output.image"),
            summary: c.take_path("output.summary"),
            wall_time: c.take_bool("output.wall_time", false)?,
        };
        c.finish()?;

        let exp = Self {
            phantom,
            forward,
            input_snr_db,
            noise_seed,
            denoiser,
            prior,
            partition,
            algorithm,
            solver,
            x0_file,
            oracle,
            certificate_trials,
            certificate_seed,
            outputs,
        };
        exp.check_outputs()?;
        Ok(exp)
    }

    fn check_outputs(&self) -> Result<()> {
        let o = &self.outputs;
        let paths: Vec<(&str, &PathBuf)> = [
            ("output.trace_csv", &o.trace_csv),
            ("output.image", &o.image),
            ("output.summary", &o.summary),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_ref().map(|p| (k, p)))
        .collect();
        for (i, (key, p)) in paths.iter().enumerate() {
            if paths[..i].iter().any(|(_, q)| q == p) {
                return Err(Error::config(*key, "output paths must be distinct"));
            }
        }
        Ok(())
    }

    /// The resolved config: every key with its effective value, paths
    /// absolute. Parsing it back gives an identical experiment.
    pub fn resolved_config(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.phantom {
            PhantomSpec::Piecewise { n, seed } => {
                kv("phantom.kind", "piecewise".into());
                kv("phantom.n", n.to_string());
                kv("phantom.seed", seed.to_string());
            }
            PhantomSpec::Blobs { height, width, seed } => {
                kv("phantom.kind", "blobs".into());
                kv("phantom.height", height.to_string());
                kv("phantom.width", width.to_string());
                kv("phantom.seed", seed.to_string());
            }
            PhantomSpec::File { path } => {
                kv("phantom.kind", "file".into());
                kv("phantom.path", path_str(path));
            }
        }
        match &self.forward {
            ForwardChoice::Identity => kv("forward.kind", "identity".into()),
            ForwardChoice::Gaussian { m, seed } => {
                kv("forward.kind", "gaussian".into());
                kv("forward.m", m.to_string());
                kv("forward.seed", seed.to_string());
            }
            ForwardChoice::Fourier { mask } => {
                kv("forward.kind", "fourier".into());
                match mask {
                    MaskSource::File(p) => kv("forward.mask", path_str(p)),
                    MaskSource::Radial { lines } => kv("forward.radial_lines", lines.to_string()),
                }
            }
            ForwardChoice::MatrixFile { path } => {
                kv("forward.kind", "matrix-file".into());
                kv("forward.path", path_str(path));
            }
        }
        kv("noise.input_snr_db", self.input_snr_db.to_string());
        kv("noise.seed", self.noise_seed.to_string());
        match &self.denoiser {
            DenoiserChoice::Identity => kv("denoiser.kind", "identity".into()),
            DenoiserChoice::SoftThreshold { theta } => {
                kv("denoiser.kind", "soft-threshold".into());
                kv("denoiser.theta", theta.to_string());
            }
            DenoiserChoice::Tv1d { weight } => {
                kv("denoiser.kind", "tv1d".into());
                kv("denoiser.weight", weight.to_string());
            }
            DenoiserChoice::Tv2d {
                weight,
                inner_iters,
                inner_tol,
            } => {
                kv("denoiser.kind", "tv2d".into());
                kv("denoiser.weight", weight.to_string());
                kv("denoiser.inner_iters", inner_iters.to_string());
                kv("denoiser.inner_tol", inner_tol.to_string());
            }
            DenoiserChoice::Smoother { rows, weights } => {
                kv("denoiser.kind", "smoother".into());
                kv("denoiser.kernel", join_f64(weights));
                kv("denoiser.kernel_rows", rows.to_string());
            }
            DenoiserChoice::GradientStep { lambda, tau } => {
                kv("denoiser.kind", "gradient-step".into());
                kv("denoiser.lambda", lambda.to_string());
                kv("denoiser.tau", tau.unwrap_or(self.solver.tau).to_string());
            }
            DenoiserChoice::Expanding => kv("denoiser.kind", "expanding".into()),
        }
        match self.prior {
            PriorChoice::None => kv("prior.kind", "none".into()),
            PriorChoice::RedQuadratic => kv("prior.kind", "red-quadratic".into()),
            PriorChoice::L1 { lambda }
            | PriorChoice::Tv1d { lambda }
            | PriorChoice::Tikhonov { lambda }
            | PriorChoice::Tv2d { lambda } => {
                let name = match self.prior {
                    PriorChoice::L1 { .. } => "l1",
                    PriorChoice::Tv1d { .. } => "tv1d",
                    PriorChoice::Tikhonov { .. } => "tikhonov",
                    _ => "tv2d",
                };
                kv("prior.kind", name.into());
                kv("prior.lambda", lambda.to_string());
            }
        }
        match &self.partition {
            PartitionChoice::Contiguous { blocks } => {
                kv("partition.kind", "contiguous".into());
                kv("partition.blocks", blocks.to_string());
            }
            PartitionChoice::Tiles {
                tile_height,
                tile_width,
            } => {
                kv("partition.kind", "tiles".into());
                kv("partition.tile_height", tile_height.to_string());
                kv("partition.tile_width", tile_width.to_string());
            }
        }
        let sc = &self.solver;
        kv(
            "solver.algorithm",
            match self.algorithm {
                Algorithm::Bcred => "bcred",
                Algorithm::Red => "red",
                Algorithm::Pgm => "pgm",
            }
            .into(),
        );
        kv("solver.tau", sc.tau.to_string());
        kv(
            "solver.gamma",
            match sc.gamma {
                StepSize::Auto => "auto".into(),
                StepSize::Fixed(g) => g.to_string(),
            },
        );
        let (selection, seed) = match sc.selection {
            Selection::Cyclic => ("cyclic", 0),
            Selection::Iid { seed } => ("iid", seed),
            Selection::EpochShuffle { seed } => ("epoch", seed),
        };
        kv("solver.selection", selection.into());
        kv("solver.seed", seed.to_string());
        kv("solver.iterations", sc.iterations.to_string());
        match (&self.x0_file, &sc.x0) {
            (Some(p), _) => kv("solver.x0", format!("file:{}", path_str(p))),
            (None, InitialPoint::AdjointY) => kv("solver.x0", "adjoint-y".into()),
            (None, _) => kv("solver.x0", "zeros".into()),
        }
        kv(
            "solver.stop_tol",
            sc.stop_tol.map_or("none".into(), |t| t.to_string()),
        );
        kv("solver.cached_residual", sc.cached_residual.to_string());
        kv("solver.pad", sc.pad.map_or("none".into(), |p| p.to_string()));
        kv("solver.allow_unsafe_step", sc.allow_unsafe_step.to_string());
        match self.oracle {
            OracleChoice::None => kv("solver.oracle", "none".into()),
            OracleChoice::Direct => kv("solver.oracle", "direct".into()),
            OracleChoice::Pgm { iterations } => {
                kv("solver.oracle", "pgm".into());
                kv("solver.oracle_iterations", iterations.to_string());
            }
        }
        kv("certificate.trials", self.certificate_trials.to_string());
        kv("certificate.seed", self.certificate_seed.to_string());
        if let Some(p) = &self.outputs.trace_csv {
            kv("output.trace_csv", path_str(p));
        }
        if let Some(p) = &self.outputs.image {
            kv("output.image", path_str(p));
        }
        if let Some(p) = &self.outputs.summary {
            kv("output.summary", path_str(p));
        }
        kv("output.wall_time", self.outputs.wall_time.to_string());
        s
    }
}

/// Ground-truth signal with its image shape (`None` for 1-D signals).
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub values: Vec<f64>,
    pub shape: Option<(usize, usize)>,
}

pub fn load_phantom(spec: &PhantomSpec) -> Result<Signal> {
    match spec {
        PhantomSpec::Piecewise { n, seed } => Ok(Signal {
            values: phantom::piecewise_constant(*n, *seed)?,
            shape: None,
        }),
        PhantomSpec::Blobs { height, width, seed } => Ok(Signal {
            values: phantom::blobs(*height, *width, *seed)?,
            shape: Some((*height, *width)),
        }),
        PhantomSpec::File { path } => {
            let img = read_pgm(path)?;
            Ok(Signal {
                shape: Some((img.height, img.width)),
                values: img.pixels,
            })
        }
    }
}

fn build_denoiser(choice: &DenoiserChoice, shape: Option<(usize, usize)>, n: usize, tau: f64) -> Result<Denoiser> {
    let (height, width) = shape.unwrap_or((1, n));
    Ok(match choice {
        DenoiserChoice::Identity => Denoiser::Identity,
        DenoiserChoice::SoftThreshold { theta } => Denoiser::SoftThreshold { theta: *theta },
        DenoiserChoice::Tv1d { weight } => Denoiser::Tv1d { weight: *weight },
        DenoiserChoice::Tv2d {
            weight,
            inner_iters,
            inner_tol,
        } => Denoiser::Tv2d {
            weight: *weight,
            inner_iters: *inner_iters,
            inner_tol: *inner_tol,
            height,
            width,
        },
        DenoiserChoice::Smoother { rows, weights } => {
            if *rows == 0 || weights.len() % rows != 0 {
                return Err(Error::config(
                    "denoiser.kernel_rows",
                    format!("{} weights do not form {rows} rows", weights.len()),
                ));
            }
            Denoiser::LinearSmoother {
                kernel: Kernel::new(*rows, weights.len() / rows, weights.clone())?,
                height,
                width,
            }
        }
        DenoiserChoice::GradientStep { lambda, tau: own } => Denoiser::GradientStep {
            lambda: *lambda,
            tau: own.unwrap_or(tau),
        },
        DenoiserChoice::Expanding => Denoiser::Expanding,
    })
}

fn build_forward(choice: &ForwardChoice, n: usize, shape: Option<(usize, usize)>) -> Result<ForwardModel> {
    let spec = match choice {
        ForwardChoice::Identity => ForwardSpec::Identity { n },
        ForwardChoice::Gaussian { m, seed } => ForwardSpec::Gaussian { m: *m, n, seed: *seed },
        ForwardChoice::Fourier { mask } => {
            let (h, w) = shape.unwrap_or((1, n));
            let mask = match mask {
                MaskSource::File(p) => FourierMask::read(p)?,
                MaskSource::Radial { lines } => FourierMask::radial(h, w, *lines),
            };
            ForwardSpec::Fourier { mask }
        }
        ForwardChoice::MatrixFile { path } => ForwardSpec::MatrixFile { path: path.clone() },
    };
    let model = ForwardModel::build(&spec)?;
    if model.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "forward model has {} columns, phantom has {n} values",
            model.cols()
        )));
    }
    Ok(model)
}

fn build_partition(choice: &PartitionChoice, n: usize, shape: Option<(usize, usize)>) -> Result<BlockPartition> {
    match choice {
        PartitionChoice::Contiguous { blocks } => {
            BlockPartition::new(n, PartitionSpec::Contiguous { blocks: *blocks })
        }
        PartitionChoice::Tiles {
            tile_height,
            tile_width,
        } => {
            let (height, width) = shape.ok_or_else(|| {
                Error::Incompatible("tile partitions need a 2-D phantom".into())
            })?;
            BlockPartition::new(
                n,
                PartitionSpec::Tiles {
                    height,
                    width,
                    tile_height: *tile_height,
                    tile_width: *tile_width,
                },
            )
        }
    }
}

fn build_prior(choice: PriorChoice, shape: Option<(usize, usize)>, tau: f64) -> Result<Option<Prior>> {
    Ok(match choice {
        PriorChoice::None => None,
        PriorChoice::L1 { lambda } => Some(Prior::Function(SmoothableFunction::L1 { lambda })),
        PriorChoice::Tv1d { lambda } => Some(Prior::Function(SmoothableFunction::Tv1d { lambda })),
        PriorChoice::Tikhonov { lambda } => {
            Some(Prior::Function(SmoothableFunction::Tikhonov { lambda }))
        }
        PriorChoice::Tv2d { lambda } => {
            let (height, width) = shape.ok_or_else(|| {
                Error::Incompatible("the tv2d prior needs a 2-D phantom".into())
            })?;
            Some(Prior::IsotropicTv {
                lambda,
                height,
                width,
            })
        }
        PriorChoice::RedQuadratic => Some(Prior::RedQuadratic { tau }),
    })
}

/// Everything needed to run an experiment, validated before any iteration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub truth: Signal,
    pub problem: Problem,
    pub partition: BlockPartition,
    pub input_snr_db: f64,
}

pub fn prepare(exp: &Experiment) -> Result<Prepared> {
    let truth = load_phantom(&exp.phantom)?;
    let n = truth.values.len();
    let model = build_forward(&exp.forward, n, truth.shape)?;
    let denoiser = build_denoiser(&exp.denoiser, truth.shape, n, exp.solver.tau)?;
    let partition = build_partition(&exp.partition, n, truth.shape)?;
    let prior = build_prior(exp.prior, truth.shape, exp.solver.tau)?;
    let clean = model.apply(&truth.values)?;
    let noisy = add_noise_at_input_snr(&clean, exp.input_snr_db, exp.noise_seed)?;
    let mut problem = Problem::new(model, noisy.y, denoiser)?;
    if let Some(p) = prior {
        problem = problem.with_prior(p);
    }
    Ok(Prepared {
        truth,
        problem,
        partition,
        input_snr_db: noisy.input_snr_db,
    })
}

/// Zero of the affine operator `G` for linear denoisers, assembled column by
/// column and solved densely.
pub fn direct_fixed_point(solver: &Solver<'_>, tau: f64, pad: Option<usize>) -> Result<Vec<f64>> {
    let linear = matches!(
        solver.problem().denoiser,
        Denoiser::Identity | Denoiser::GradientStep { .. } | Denoiser::LinearSmoother { .. }
    );
    if !linear {
        return Err(Error::Incompatible(
            "the direct oracle needs a linear denoiser (identity, gradient-step or smoother)".into(),
        ));
    }
    let n = solver.problem().dim();
    let g0 = solver.operator_g(&vec![0.0; n], tau, pad)?;
    let mut matrix = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = solver.operator_g(&e, tau, pad)?;
        for (i, (c, z)) in col.iter().zip(&g0).enumerate() {
            matrix[i * n + j] = c - z;
        }
        e[j] = 0.0;
    }
    let rhs: Vec<f64> = g0.iter().map(|v| -v).collect();
    solve_dense(&matrix, &rhs)
        .ok_or_else(|| Error::Incompatible("G is singular; no unique fixed point".into()))
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub run: RunOutput,
    pub truth: Signal,
    pub snr_db: f64,
    pub input_snr_db: f64,
    pub l_global: f64,
    pub l_max: f64,
    pub certificate: NonexpansivenessReport,
    pub final_distance: Option<f64>,
    pub reference_objective: Option<f64>,
    pub final_objective: Option<f64>,
}

pub fn run(exp: &Experiment) -> Result<ExperimentResult> {
    let Prepared {
        truth,
        mut problem,
        partition,
        input_snr_db,
    } = prepare(exp)?;
    let mut config = exp.solver.clone();
    if let Some(p) = &exp.x0_file {
        config.x0 = InitialPoint::Given(read_column(p)?);
    }
    let config = &config;

    let lipschitz = problem.model.estimate_lipschitz(&partition)?;
    let mut reference_objective = None;
    {
        let solver = Solver::with_lipschitz(&problem, &partition, lipschitz.clone())?;
        match exp.oracle {
            OracleChoice::None => {}
            OracleChoice::Direct => {
                let x_star = direct_fixed_point(&solver, config.tau, config.pad)?;
                problem = problem.with_oracle(x_star);
            }
            OracleChoice::Pgm { iterations } => {
                let h = function_prior(&problem)?;
                let cfg = SolverConfig {
                    iterations,
                    record_trace: false,
                    gamma: StepSize::Auto,
                    x0: InitialPoint::Zeros,
                    ..config.clone()
                };
                let reference = solver.pgm(&h, &cfg)?;
                reference_objective = problem.objective(&reference.x)?;
            }
        }
    }
    let solver = Solver::with_lipschitz(&problem, &partition, lipschitz)?;
    let run = match exp.algorithm {
        Algorithm::Bcred => solver.bcred(config)?,
        Algorithm::Red => solver.red_full(config)?,
        Algorithm::Pgm => solver.pgm(&function_prior(&problem)?, config)?,
    };

    let certificate = if exp.certificate_trials == 0 {
        NonexpansivenessReport {
            trials: 0,
            max_ratio: f64::NAN,
            passed: false,
            seed: exp.certificate_seed,
        }
    } else {
        certify_block_nonexpansive(
            &partition,
            exp.certificate_trials,
            exp.certificate_seed,
            1.0,
            |x, i| match config.pad {
                Some(p) => problem.denoiser.blockwise_denoise(x, &partition, i, p),
                None => partition.extract(&problem.denoiser.denoise(x)?, i),
            },
        )?
    };

    let final_distance = problem.oracle.as_ref().map(|o| {
        let d = dist(&run.x, o);
        let scale = norm(o);
        if scale > 0.0 { d / scale } else { d }
    });
    let final_objective = problem.objective(&run.x)?;
    let snr = snr_db(&run.x, &truth.values)?;
    Ok(ExperimentResult {
        snr_db: snr,
        input_snr_db,
        l_global: solver.lipschitz().global,
        l_max: solver.lipschitz().max,
        run,
        truth,
        certificate,
        final_distance,
        reference_objective,
        final_objective,
    })
}

fn function_prior(problem: &Problem) -> Result<SmoothableFunction> {
    match &problem.prior {
        Some(Prior::Function(h)) => Ok(*h),
        _ => Err(Error::Incompatible(
            "proximal gradient needs an l1, tv1d or tikhonov prior".into(),
        )),
    }
}

/// Floats in artifacts use Rust's shortest round-trip formatting; infinities
/// are written as `inf` / `-inf`.
fn fmt_f64(v: f64) -> String {
    v.to_string()
}

pub fn summary_text(exp: &Experiment, res: &ExperimentResult) -> String {
    let mut s = exp.resolved_config();
    s.push('\n');
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "result.{k} = {v}");
    };
    kv("input_snr_db", fmt_f64(res.input_snr_db));
    kv("final_snr_db", fmt_f64(res.snr_db));
    kv(
        "final_normalized_residual",
        res.run
            .trace
            .final_normalized_residual()
            .map_or("none".into(), fmt_f64),
    );
    kv("outer_iterations", res.run.trace.k.last().copied().unwrap_or(0).to_string());
    kv("gamma", fmt_f64(res.run.trace.gamma));
    kv("unsafe_step", res.run.trace.unsafe_step.to_string());
    kv("l_global", fmt_f64(res.l_global));
    kv("l_max", fmt_f64(res.l_max));
    kv("certificate_passed", res.certificate.passed.to_string());
    kv("certificate_max_ratio", fmt_f64(res.certificate.max_ratio));
    kv("certificate_trials", res.certificate.trials.to_string());
    kv("monotonicity_violations", res.run.trace.monotonicity_violations.to_string());
    if let Some(d) = res.final_distance {
        kv("final_distance", fmt_f64(d));
    }
    if let Some(f) = res.final_objective {
        kv("final_objective", fmt_f64(f));
    }
    if let (Some(fr), Some(f)) = (res.reference_objective, res.final_objective) {
        kv("reference_objective", fmt_f64(fr));
        kv("objective_gap", fmt_f64(f - fr));
    }
    s
}

/// Write a signal as a PGM image (2-D) or a one-column CSV (1-D).
pub fn write_signal(values: &[f64], shape: Option<(usize, usize)>, path: &Path) -> Result<()> {
    match shape {
        Some((height, width)) => write_pgm(
            &GrayImage {
                height,
                width,
                pixels: values.to_vec(),
            },
            path,
        ),
        None => {
            let mut s = String::new();
            for v in values {
                let _ = writeln!(s, "{v}");
            }
            fs::write(path, s).map_err(|e| Error::io(path, e))
        }
    }
}

/// One value per line.
pub fn read_column(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse().map_err(|_| Error::MalformedHeader {
                path: path.to_path_buf(),
                reason: format!("bad value `{l}`"),
            })
        })
        .collect()
}

/// Run an experiment and write all configured outputs.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentResult> {
    let res = run(exp)?;
    let o = &exp.outputs;
    if let Some(p) = &o.trace_csv {
        res.run.trace.write_csv(p, o.wall_time)?;
    }
    if let Some(p) = &o.image {
        write_signal(&res.run.x, res.truth.shape, p)?;
    }
    if let Some(p) = &o.summary {
        fs::write(p, summary_text(exp, &res)).map_err(|e| Error::io(p, e))?;
    }
    Ok(res)
}

#[derive(Debug, Clone)]
pub struct DenoiseResult {
    pub noisy: Vec<f64>,
    pub denoised: Vec<f64>,
    pub shape: Option<(usize, usize)>,
    pub input_snr_db: f64,
    pub output_snr_db: f64,
}

/// One-shot denoising of the phantom with white noise added directly in the
/// signal domain at `noise.input_snr_db`. Writes `output.image` and
/// `output.summary` when configured.
pub fn denoise_experiment(exp: &Experiment) -> Result<DenoiseResult> {
    let truth = load_phantom(&exp.phantom)?;
    let n = truth.values.len();
    let denoiser = build_denoiser(&exp.denoiser, truth.shape, n, exp.solver.tau)?;
    let noisy = add_noise_at_input_snr(&truth.values, exp.input_snr_db, exp.noise_seed)?;
    let denoised = denoiser.denoise(&noisy.y)?;
    let out = DenoiseResult {
        output_snr_db: snr_db(&denoised, &truth.values)?,
        input_snr_db: noisy.input_snr_db,
        noisy: noisy.y,
        denoised,
        shape: truth.shape,
    };
    if let Some(p) = &exp.outputs.image {
        write_signal(&out.denoised, out.shape, p)?;
    }
    if let Some(p) = &exp.outputs.summary {
        let mut s = exp.resolved_config();
        let _ = writeln!(s, "\nresult.input_snr_db = {}", fmt_f64(out.input_snr_db));
        let _ = writeln!(s, "result.output_snr_db = {}", fmt_f64(out.output_snr_db));
        fs::write(p, s).map_err(|e| Error::io(p, e))?;
    }
    Ok(out)
}
