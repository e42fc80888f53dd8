//! Property-check suite: invariants of every module evaluated on small seeded
//! instances, reported as a table with the measured value and its tolerance.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::blocks::{BlockPartition, PartitionSpec};
use crate::denoise::{
    check_block_nonexpansive, tv2d_prox, Denoiser, Kernel, NONEXPANSIVE_LIMIT,
};
use crate::error::{Error, Result};
use crate::forward::{FourierMask, ForwardModel, ForwardSpec};
use crate::genmat::radon_matrix;
use crate::linalg::{dot, max_abs_diff, norm, norm_sq, solve_dense, sub};
use crate::metrics::{add_noise_at_input_snr, snr_db};
use crate::moreau::{envelope_gap, moreau_gradient, moreau_value, SmoothableFunction};
use crate::problems;
use crate::rng::SplitMix64;
use crate::solver::{
    theorem1_bound, theorem2_bound, InitialPoint, Problem, Selection, Solver, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Blocks,
    Forward,
    Denoisers,
    Moreau,
    Solvers,
    Metrics,
}

impl Scope {
    pub const ALL: [Scope; 6] = [
        Scope::Blocks,
        Scope::Forward,
        Scope::Denoisers,
        Scope::Moreau,
        Scope::Solvers,
        Scope::Metrics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scope::Blocks => "blocks",
            Scope::Forward => "forward",
            Scope::Denoisers => "denoisers",
            Scope::Moreau => "moreau",
            Scope::Solvers => "solvers",
            Scope::Metrics => "metrics",
        }
    }

    /// Comma-separated scope names; `all` selects every scope and the empty
    /// string selects none.
    pub fn parse_list(s: &str) -> Result<Vec<Scope>> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if tok == "all" {
                out.extend(Scope::ALL);
                continue;
            }
            let scope = Scope::ALL
                .into_iter()
                .find(|sc| sc.name() == tok)
                .ok_or_else(|| Error::config("scope", format!("unknown scope `{tok}`")))?;
            out.push(scope);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A fixture that is supposed to fail did fail.
    ExpectedFail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub scope: Scope,
    pub name: String,
    pub status: CheckStatus,
    /// Measured quantity; the check passes when `measured <= tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn failures(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.status == CheckStatus::Fail)
            .count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn to_table(&self) -> String {
        let mut s = String::from("status         scope      check                                              measured       tolerance\n");
        for e in &self.entries {
            let status = match e.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::ExpectedFail => "EXPECTED-FAIL",
            };
            let _ = write!(
                s,
                "{status:<14} {:<10} {:<50} {:<14.6e} {:.3e}",
                e.scope.name(),
                e.name,
                e.measured,
                e.tolerance
            );
            if let Some(d) = &e.detail {
                let _ = write!(s, "  ({d})");
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "{} checks, {} failed",
            self.entries.len(),
            self.failures()
        );
        s
    }
}

type CheckFn = fn() -> Result<(f64, f64)>;

struct Check {
    scope: Scope,
    name: &'static str,
    run: CheckFn,
    /// The check is a negative fixture: failing is the expected outcome.
    fixture: bool,
}

/// Run every registered check in `scopes`. The expanding-denoiser fixture is
/// only included on request and shows up as an expected failure.
pub fn property_check_suite(scopes: &[Scope], include_fixtures: bool) -> CheckReport {
    let checks: Vec<Check> = registry()
        .into_iter()
        .filter(|c| scopes.contains(&c.scope) && (include_fixtures || !c.fixture))
        .collect();
    let entries = checks
        .par_iter()
        .map(|c| {
            let (status, measured, tolerance, detail) = match (c.run)() {
                Ok((m, tol)) => {
                    let ok = m <= tol;
                    let status = match (ok, c.fixture) {
                        (true, false) => CheckStatus::Pass,
                        (false, true) => CheckStatus::ExpectedFail,
                        _ => CheckStatus::Fail,
                    };
                    (status, m, tol, None)
                }
                Err(e) => (CheckStatus::Fail, f64::NAN, f64::NAN, Some(e.to_string())),
            };
            CheckEntry {
                scope: c.scope,
                name: c.name.to_string(),
                status,
                measured,
                tolerance,
                detail,
            }
        })
        .collect();
    CheckReport { entries }
}

fn registry() -> Vec<Check> {
    use Scope::*;
    let c = |scope, name, run: CheckFn| Check {
        scope,
        name,
        run,
        fixture: false,
    };
    vec![
        c(Blocks, "16 tiles of 40x40 partition a 160x160 image", tiles_partition),
        c(Blocks, "inject/extract round trip", inject_extract),
        c(Forward, "adjoint test, dense 8x12", adjoint_dense),
        c(Forward, "adjoint test, gaussian 32x64", || {
            adjoint_of(&ForwardSpec::Gaussian { m: 32, n: 64, seed: 1 })
        }),
        c(Forward, "adjoint test, subsampled fourier 8x8", || {
            adjoint_of(&ForwardSpec::Fourier {
                mask: FourierMask::radial(8, 8, 3),
            })
        }),
        c(Forward, "adjoint test, radon 8x8 / 6 views", || {
            let (m, n, data) = radon_matrix(8, 6)?;
            adjoint_of(&ForwardSpec::Dense { m, n, data })
        }),
        c(Forward, "block columns match apply(inject), gaussian", || {
            block_apply(&ForwardSpec::Gaussian { m: 24, n: 40, seed: 4 })
        }),
        c(Forward, "block columns match apply(inject), fourier", || {
            block_apply(&ForwardSpec::Fourier {
                mask: FourierMask::radial(8, 5, 4),
            })
        }),
        c(Forward, "L_max <= L <= b L_max", lipschitz_ordering),
        c(Denoisers, "nonexpansive: identity", || certificate(Denoiser::Identity)),
        c(Denoisers, "nonexpansive: soft-threshold", || {
            certificate(Denoiser::SoftThreshold { theta: 0.3 })
        }),
        c(Denoisers, "nonexpansive: tv1d", || certificate(Denoiser::Tv1d { weight: 0.5 })),
        c(Denoisers, "nonexpansive: [1/4 1/2 1/4] smoother", || {
            certificate(Denoiser::LinearSmoother {
                kernel: Kernel::row(vec![0.25, 0.5, 0.25])?,
                height: 8,
                width: 8,
            })
        }),
        c(Denoisers, "nonexpansive: gradient-step (lambda <= 2 tau)", || {
            certificate(Denoiser::GradientStep { lambda: 1.5, tau: 1.0 })
        }),
        c(Denoisers, "tv2d dual objective nonincreasing", tv2d_dual_monotone),
        c(Denoisers, "explicit RED regularizer gradient (finite diff.)", red_regularizer_gradient),
        Check {
            scope: Denoisers,
            name: "nonexpansive: expanding fixture D(x) = 2x",
            run: || certificate(Denoiser::Expanding),
            fixture: true,
        },
        c(Moreau, "envelope gradient (finite diff.)", moreau_fd),
        c(Moreau, "envelope gap within [0, mu G^2 / 2]", moreau_gap),
        c(Moreau, "Huber closed form", huber),
        c(Moreau, "soft-threshold RED operator = tau grad envelope", red_equals_envelope_gradient),
        c(Solvers, "ridge: BC-RED reaches the direct solution", ridge_convergence),
        c(Solvers, "b = 1 BC-RED equals full RED bitwise", single_block_equivalence),
        c(Solvers, "cached residual matches uncached", cached_equivalence),
        c(Solvers, "block cocoercivity 1/(L_max + 2 tau)", block_cocoercivity),
        c(Solvers, "Theorem 1 rate bound (ridge, t = 800)", theorem1_check),
        c(Solvers, "Theorem 2 objective bound (lasso, tau = 10)", theorem2_check),
        c(Metrics, "input SNR round trip", snr_roundtrip),
        c(Metrics, "SNR invariant under permutations", snr_permutation),
    ]
}

fn tiles_partition() -> Result<(f64, f64)> {
    let p = BlockPartition::new(
        160 * 160,
        PartitionSpec::Tiles {
            height: 160,
            width: 160,
            tile_height: 40,
            tile_width: 40,
        },
    )?;
    let mut seen = vec![0usize; p.dim()];
    for b in p.blocks() {
        for &j in b {
            seen[j] += 1;
        }
    }
    let bad = seen.iter().filter(|&&c| c != 1).count() + p.num_blocks().abs_diff(16);
    Ok((bad as f64, 0.0))
}

fn inject_extract() -> Result<(f64, f64)> {
    let p = BlockPartition::new(50, PartitionSpec::Contiguous { blocks: 7 })?;
    let mut rng = SplitMix64::new(1);
    let x = rng.normal_vec(50);
    let mut sum = vec![0.0; 50];
    for i in 0..p.num_blocks() {
        let back = p.inject(&p.extract(&x, i)?, i)?;
        for (s, v) in sum.iter_mut().zip(&back) {
            *s += v;
        }
    }
    Ok((max_abs_diff(&sum, &x), 0.0))
}

fn adjoint_error(model: &ForwardModel, seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let x = rng.normal_vec(model.cols());
        let u = rng.normal_vec(model.rows());
        let lhs = dot(&model.apply(&x)?, &u);
        let rhs = dot(&x, &model.adjoint(&u)?);
        worst = worst.max((lhs - rhs).abs() / (norm(&x) * norm(&u)));
    }
    Ok(worst)
}

fn adjoint_dense() -> Result<(f64, f64)> {
    let mut rng = SplitMix64::new(8);
    let data = rng.normal_vec(8 * 12);
    adjoint_of(&ForwardSpec::Dense { m: 8, n: 12, data })
}

fn adjoint_of(spec: &ForwardSpec) -> Result<(f64, f64)> {
    let model = ForwardModel::build(spec)?;
    Ok((adjoint_error(&model, 3)?, 1e-10))
}

fn block_apply(spec: &ForwardSpec) -> Result<(f64, f64)> {
    let model = ForwardModel::build(spec)?;
    let p = BlockPartition::new(model.cols(), PartitionSpec::Contiguous { blocks: 5 })?;
    let mut rng = SplitMix64::new(5);
    let mut worst = 0.0f64;
    for i in 0..p.num_blocks() {
        let h = rng.normal_vec(p.block_len(i)?);
        let a = model.apply_block_columns(&p, i, &h)?;
        let b = model.apply(&p.inject(&h, i)?)?;
        worst = worst.max(max_abs_diff(&a, &b));
    }
    Ok((worst, 1e-12))
}

fn lipschitz_ordering() -> Result<(f64, f64)> {
    let model = ForwardModel::build(&ForwardSpec::Gaussian { m: 32, n: 64, seed: 1 })?;
    let p = BlockPartition::new(64, PartitionSpec::Contiguous { blocks: 8 })?;
    let info = model.estimate_lipschitz(&p)?;
    let b = p.num_blocks() as f64;
    let excess = (info.max - info.global).max(info.global - b * info.max).max(0.0);
    Ok((excess / info.global, 1e-9))
}

fn certificate(d: Denoiser) -> Result<(f64, f64)> {
    let p = BlockPartition::new(
        64,
        PartitionSpec::Tiles {
            height: 8,
            width: 8,
            tile_height: 4,
            tile_width: 4,
        },
    )?;
    let report = check_block_nonexpansive(&d, &p, 400, 17, 2.0)?;
    Ok((report.max_ratio, NONEXPANSIVE_LIMIT))
}

fn tv2d_dual_monotone() -> Result<(f64, f64)> {
    let mut rng = SplitMix64::new(6);
    let x = rng.normal_vec(12 * 10);
    let out = tv2d_prox(&x, 12, 10, 0.4, 200, 0.0, true);
    let dual = out.dual_objective;
    let worst = dual
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
        .fold(0.0f64, f64::max);
    Ok((worst, 1e-12))
}

fn red_regularizer_gradient() -> Result<(f64, f64)> {
    let tau = 0.7;
    let d = Denoiser::LinearSmoother {
        kernel: Kernel::row(vec![0.25, 0.5, 0.25])?,
        height: 1,
        width: 20,
    };
    let mut rng = SplitMix64::new(9);
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = rng.normal_vec(20);
        let h = d.red_operator(&x, tau)?;
        for j in 0..20 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += eps;
            xm[j] -= eps;
            let fd = (d.red_objective_linear(&xp, tau)? - d.red_objective_linear(&xm, tau)?) / (2.0 * eps);
            worst = worst.max((fd - h[j]).abs());
        }
    }
    Ok((worst, 1e-5))
}

fn moreau_fd() -> Result<(f64, f64)> {
    let mut rng = SplitMix64::new(10);
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for h in [
        SmoothableFunction::L1 { lambda: 0.8 },
        SmoothableFunction::Tv1d { lambda: 0.3 },
        SmoothableFunction::Tikhonov { lambda: 2.0 },
    ] {
        for _ in 0..10 {
            let x = rng.normal_vec(12);
            let mu = 0.5;
            let g = moreau_gradient(&h, mu, &x)?;
            for j in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += eps;
                xm[j] -= eps;
                let fd = (moreau_value(&h, mu, &xp)? - moreau_value(&h, mu, &xm)?) / (2.0 * eps);
                worst = worst.max((fd - g[j]).abs());
            }
        }
    }
    Ok((worst, 1e-5))
}

fn moreau_gap() -> Result<(f64, f64)> {
    let mut rng = SplitMix64::new(11);
    let n = 16;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..300 {
        let x = rng.normal_vec(n);
        let mu = [0.01, 0.1, 1.0][k % 3];
        for h in [SmoothableFunction::L1 { lambda: 0.6 }, SmoothableFunction::Tv1d { lambda: 0.4 }] {
            let gap = envelope_gap(&h, mu, &x)?;
            let g = h.subgradient_bound(n, norm(&x));
            let upper = 0.5 * mu * g * g;
            // distance outside [0, upper], relative to the upper bound
            let outside = (-gap).max(gap - upper) / upper.max(1e-300);
            worst = worst.max(outside);
        }
    }
    Ok((worst.max(0.0), 1e-12))
}

fn huber() -> Result<(f64, f64)> {
    let h = SmoothableFunction::L1 { lambda: 1.0 };
    let mut err = 0.0f64;
    // |x| > μ: |x| − μ/2 scaled by μ; |x| ≤ μ: x²/2
    for (x, mu, want) in [(3.0, 1.0, 2.5), (0.4, 1.0, 0.08), (-2.0, 0.5, 0.875), (0.0, 2.0, 0.0)] {
        err = err.max((moreau_value(&h, mu, &[x])? - want).abs());
    }
    Ok((err, 1e-12))
}

fn red_equals_envelope_gradient() -> Result<(f64, f64)> {
    let lambda = 0.3;
    let tau = 2.5;
    let h = SmoothableFunction::L1 { lambda };
    let d = h.prox_denoiser(tau)?;
    let mut rng = SplitMix64::new(12);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x = rng.normal_vec(10);
        let red = d.red_operator(&x, tau)?;
        let env: Vec<f64> = moreau_gradient(&h, 1.0 / tau, &x)?.iter().map(|v| tau * v).collect();
        worst = worst.max(max_abs_diff(&red, &env));
    }
    Ok((worst, 1e-12))
}

fn contiguous(n: usize, blocks: usize) -> Result<BlockPartition> {
    BlockPartition::new(n, PartitionSpec::Contiguous { blocks })
}

/// Solution of `(AᵀA + λI) x = Aᵀy`.
fn ridge_solution(problem: &Problem, lambda: f64) -> Result<Vec<f64>> {
    let n = problem.dim();
    let m = problem.model.rows();
    let a = problem.model.to_dense();
    let mut normal = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for r in 0..m {
                acc += a[r * n + i] * a[r * n + j];
            }
            normal[i * n + j] = acc + if i == j { lambda } else { 0.0 };
        }
    }
    let rhs = problem.model.adjoint(&problem.y)?;
    solve_dense(&normal, &rhs).ok_or_else(|| Error::Incompatible("singular normal matrix".into()))
}

fn ridge_convergence() -> Result<(f64, f64)> {
    let problem = problems::ridge()?;
    let x_star = ridge_solution(&problem, problems::RIDGE_LAMBDA)?;
    let p = contiguous(64, 8)?;
    let cfg = SolverConfig {
        iterations: 2000,
        record_trace: false,
        ..SolverConfig::default()
    };
    let out = Solver::new(&problem, &p)?.bcred(&cfg)?;
    Ok((crate::linalg::dist(&out.x, &x_star) / norm(&x_star), 1e-8))
}

fn single_block_equivalence() -> Result<(f64, f64)> {
    let problem = problems::tv1d(1.0)?;
    let p = contiguous(64, 1)?;
    let solver = Solver::new(&problem, &p)?;
    let cfg = SolverConfig {
        iterations: 100,
        ..SolverConfig::default()
    };
    let a = solver.bcred(&cfg)?;
    let b = solver.red_full(&cfg)?;
    let identical = a.x.iter().zip(&b.x).all(|(u, v)| u.to_bits() == v.to_bits());
    Ok((if identical { 0.0 } else { max_abs_diff(&a.x, &b.x).max(f64::MIN_POSITIVE) }, 0.0))
}

fn cached_equivalence() -> Result<(f64, f64)> {
    let problem = problems::lasso(1.0)?;
    let p = contiguous(32, 4)?;
    let solver = Solver::new(&problem, &p)?;
    let base = SolverConfig {
        iterations: 100,
        selection: Selection::Iid { seed: 3 },
        ..SolverConfig::default()
    };
    let a = solver.bcred(&base)?;
    let b = solver.bcred(&SolverConfig {
        cached_residual: true,
        ..base
    })?;
    Ok((max_abs_diff(&a.x, &b.x) / norm(&a.x).max(1e-300), 1e-10))
}

fn block_cocoercivity() -> Result<(f64, f64)> {
    let problem = problems::ridge()?;
    let p = contiguous(64, 8)?;
    let solver = Solver::new(&problem, &p)?;
    let tau = 1.0;
    let beta = 1.0 / (solver.lipschitz().max + 2.0 * tau);
    let mut rng = SplitMix64::new(13);
    let mut worst = 0.0f64;
    for t in 0..1000 {
        let i = t % p.num_blocks();
        let x = rng.normal_vec(64);
        let h = rng.normal_vec(p.block_len(i)?);
        let mut z = x.clone();
        for (&j, v) in p.block(i)?.iter().zip(&h) {
            z[j] += v;
        }
        let gx = solver.block_g(&x, i, tau, None, None)?;
        let gz = solver.block_g(&z, i, tau, None, None)?;
        let dg = sub(&gz, &gx);
        let slack = dot(&dg, &h) - beta * norm_sq(&dg);
        worst = worst.max(-slack);
    }
    Ok((worst, 1e-9))
}

/// Mean over selection seeds of `(1/t) Σ ‖G(x^{k-1})‖²` relative to the bound.
fn theorem1_check() -> Result<(f64, f64)> {
    let problem = problems::ridge()?;
    let x_star = ridge_solution(&problem, problems::RIDGE_LAMBDA)?;
    let p = contiguous(64, 8)?;
    let solver = Solver::new(&problem, &p)?;
    let seeds = 20;
    let mut mean = 0.0;
    let mut gamma = 0.0;
    for seed in 0..seeds {
        let out = solver.bcred(&SolverConfig {
            iterations: 100,
            selection: Selection::Iid { seed },
            record_updates: true,
            record_trace: false,
            ..SolverConfig::default()
        })?;
        gamma = out.trace.gamma;
        let r = &out.trace.update_residuals;
        mean += r.iter().sum::<f64>() / r.len() as f64 / seeds as f64;
    }
    let r0 = norm(&x_star);
    let bound = theorem1_bound(8, solver.lipschitz().max, 1.0, gamma, r0, 800)?;
    Ok((mean / bound, 1.0))
}

fn theorem2_check() -> Result<(f64, f64)> {
    let tau = 10.0;
    let problem = problems::lasso(tau)?;
    let h = SmoothableFunction::L1 {
        lambda: problems::LASSO_LAMBDA,
    };
    let p = contiguous(32, 4)?;
    let solver = Solver::new(&problem, &p)?;
    let reference = solver.pgm(
        &h,
        &SolverConfig {
            iterations: 200_000,
            record_trace: false,
            ..SolverConfig::default()
        },
    )?;
    let x_star = reference.x;
    let f_star = problem.objective(&x_star)?.unwrap_or(0.0);
    let t_updates = 500;
    let seeds = 20;
    let mut mean_gap = 0.0;
    let mut gamma = 0.0;
    for seed in 0..seeds {
        let out = solver.bcred(&SolverConfig {
            tau,
            iterations: t_updates / 4,
            selection: Selection::Iid { seed },
            record_trace: false,
            x0: InitialPoint::Zeros,
            ..SolverConfig::default()
        })?;
        gamma = out.trace.gamma;
        mean_gap += (problem.objective(&out.x)?.unwrap_or(0.0) - f_star) / seeds as f64;
    }
    let r0 = norm(&x_star);
    let g0 = h.subgradient_bound(32, 0.0);
    let bound = theorem2_bound(4, gamma, r0, g0, tau, t_updates)?;
    Ok((mean_gap / bound, 1.0))
}

fn snr_roundtrip() -> Result<(f64, f64)> {
    let mut rng = SplitMix64::new(14);
    let mut worst = 0.0f64;
    for (k, snr) in [10.0, 30.0, 40.0, 65.5].into_iter().enumerate() {
        let clean = rng.normal_vec(50);
        let sys = add_noise_at_input_snr(&clean, snr, k as u64)?;
        worst = worst.max((snr_db(&sys.y, &clean)? - snr).abs());
    }
    Ok((worst, 1e-9))
}

fn snr_permutation() -> Result<(f64, f64)> {
    let mut rng = SplitMix64::new(15);
    let r = rng.normal_vec(40);
    let e: Vec<f64> = r.iter().map(|v| v + 0.1 * rng.normal()).collect();
    let mut perm: Vec<usize> = (0..40).collect();
    rng.shuffle(&mut perm);
    let rp: Vec<f64> = perm.iter().map(|&j| r[j]).collect();
    let ep: Vec<f64> = perm.iter().map(|&j| e[j]).collect();
    Ok(((snr_db(&e, &r)? - snr_db(&ep, &rp)?).abs(), 1e-12))
}
