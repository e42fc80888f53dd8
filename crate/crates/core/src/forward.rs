//! Linear measurement operators and the least-squares data-fidelity
//! `g(x) = ½‖Ax − y‖²`.
//!
//! Every model maps real `n`-vectors to real `m`-vectors. Complex Fourier
//! measurements are realified: the first half of the output holds the real
//! parts of the selected frequencies, the second half the imaginary parts, with
//! unitary `1/√n` scaling.
//!
//! Block-column products (`A_i h`, `A_iᵀ r`) only touch the columns of the
//! block, and the full products are the same code run over every column. A
//! single-block partition therefore reproduces the full-vector arithmetic
//! bit-for-bit.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::blocks::BlockPartition;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq};
use crate::rng::SplitMix64;

const MATRIX_MAGIC: &[u8; 4] = b"BMAT";

pub const POWER_MAX_ITERS: usize = 10_000;
pub const POWER_TOL: f64 = 1e-10;
/// Multiplicative upward bias applied to every Lipschitz estimate.
pub const LIPSCHITZ_SAFETY: f64 = 1.0 + 1e-6;

/// Boolean frequency-selection grid for the subsampled Fourier model, in
/// unshifted DFT index order (DC at `(0, 0)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourierMask {
    pub height: usize,
    pub width: usize,
    pub bits: Vec<bool>,
}

impl FourierMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries for a {height}x{width} grid",
                bits.len()
            )));
        }
        Ok(Self { height, width, bits })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Radial lines through the DC component, `lines` equally spaced angles in
    /// `[0, π)`.
    pub fn radial(height: usize, width: usize, lines: usize) -> Self {
        let mut bits = vec![false; height * width];
        let (ch, cw) = ((height / 2) as f64, (width / 2) as f64);
        let radius = (height.max(width) as f64) * std::f64::consts::SQRT_2 / 2.0;
        let steps = (4.0 * radius).ceil() as i64;
        for l in 0..lines {
            let angle = std::f64::consts::PI * l as f64 / lines as f64;
            let (s, c) = angle.sin_cos();
            for k in -steps..=steps {
                let t = k as f64 * 0.5;
                let r = (ch + t * s).round();
                let q = (cw + t * c).round();
                if r < 0.0 || q < 0.0 || r >= height as f64 || q >= width as f64 {
                    continue;
                }
                // centred grid -> unshifted DFT index
                let u = (r as usize + height - height / 2) % height;
                let v = (q as usize + width - width / 2) % width;
                bits[u * width + v] = true;
            }
        }
        bits[0] = true;
        Self {
            height,
            width,
            bits,
        }
    }

    /// ASCII format: first line `H W`, then `H` lines of `W` characters `0`/`1`.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let malformed = |reason: &str| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| malformed("missing header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| malformed("header must be `H W`"))?;
        let [height, width] = dims[..] else {
            return Err(malformed("header must be `H W`"));
        };
        let mut bits = Vec::with_capacity(height * width);
        for _ in 0..height {
            let line = lines.next().ok_or_else(|| Error::Truncated {
                path: path.to_path_buf(),
            })?;
            let row = line.trim_end();
            if row.len() != width {
                return Err(malformed("mask row has wrong width"));
            }
            for ch in row.chars() {
                match ch {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => return Err(malformed("mask characters must be 0 or 1")),
                }
            }
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = format!("{} {}\n", self.height, self.width);
        for row in self.bits.chunks(self.width) {
            text.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardSpec {
    Identity { n: usize },
    Dense { m: usize, n: usize, data: Vec<f64> },
    Gaussian { m: usize, n: usize, seed: u64 },
    Fourier { mask: FourierMask },
    MatrixFile { path: std::path::PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Dense,
    GaussianRandom { seed: u64 },
    SubsampledFourier,
    MatrixFile,
}

#[derive(Debug, Clone)]
enum Operator {
    /// Row-major `m × n`.
    Dense(Vec<f64>),
    Fourier(FourierOp),
}

#[derive(Debug, Clone)]
struct FourierOp {
    height: usize,
    width: usize,
    /// Selected `(u, v)` frequencies in row-major mask order.
    freqs: Vec<(usize, usize)>,
    /// `(cos, sin)` of `2π u p / H`, indexed `u * H + p`.
    row_twiddle: Vec<(f64, f64)>,
    /// `(cos, sin)` of `2π v q / W`, indexed `v * W + q`.
    col_twiddle: Vec<(f64, f64)>,
    scale: f64,
}

fn twiddles(len: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(len * len);
    for f in 0..len {
        for p in 0..len {
            // reduce the product first so large indices keep full precision
            let k = (f * p) % len;
            let angle = 2.0 * std::f64::consts::PI * k as f64 / len as f64;
            let (s, c) = angle.sin_cos();
            out.push((c, s));
        }
    }
    out
}

impl FourierOp {
    fn new(mask: &FourierMask) -> Result<Self> {
        let freqs: Vec<(usize, usize)> = (0..mask.height)
            .flat_map(|u| (0..mask.width).map(move |v| (u, v)))
            .filter(|&(u, v)| mask.bits[u * mask.width + v])
            .collect();
        if freqs.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            height: mask.height,
            width: mask.width,
            freqs,
            row_twiddle: twiddles(mask.height),
            col_twiddle: twiddles(mask.width),
            scale: 1.0 / ((mask.height * mask.width) as f64).sqrt(),
        })
    }

    #[inline]
    fn phase(&self, (u, v): (usize, usize), pixel: usize) -> (f64, f64) {
        let (p, q) = (pixel / self.width, pixel % self.width);
        let (cu, su) = self.row_twiddle[u * self.height + p];
        let (cv, sv) = self.col_twiddle[v * self.width + q];
        (cu * cv - su * sv, su * cv + cu * sv)
    }

    fn apply_cols(&self, cols: &[usize], h: &[f64]) -> Vec<f64> {
        let k = self.freqs.len();
        let mut out = vec![0.0; 2 * k];
        for (f, &freq) in self.freqs.iter().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for (&pixel, &val) in cols.iter().zip(h) {
                let (c, s) = self.phase(freq, pixel);
                re += val * c;
                im -= val * s;
            }
            out[f] = self.scale * re;
            out[k + f] = self.scale * im;
        }
        out
    }

    fn adjoint_cols(&self, cols: &[usize], u: &[f64]) -> Vec<f64> {
        let k = self.freqs.len();
        cols.iter()
            .map(|&pixel| {
                let mut acc = 0.0;
                for (f, &freq) in self.freqs.iter().enumerate() {
                    let (c, s) = self.phase(freq, pixel);
                    acc += u[f] * c - u[k + f] * s;
                }
                self.scale * acc
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardModel {
    m: usize,
    n: usize,
    kind: ModelKind,
    op: Operator,
    all_cols: Vec<usize>,
}

impl ForwardModel {
    pub fn build(spec: &ForwardSpec) -> Result<Self> {
        let (m, n, kind, op) = match spec {
            ForwardSpec::Identity { n } => {
                let n = *n;
                if n == 0 {
                    return Err(Error::DimensionMismatch("n must be at least 1".into()));
                }
                let mut data = vec![0.0; n * n];
                for i in 0..n {
                    data[i * n + i] = 1.0;
                }
                (n, n, ModelKind::Dense, Operator::Dense(data))
            }
            ForwardSpec::Dense { m, n, data } => {
                check_dims(*m, *n)?;
                if data.len() != m * n {
                    return Err(Error::DimensionMismatch(format!(
                        "dense matrix has {} entries, expected {}x{}",
                        data.len(),
                        m,
                        n
                    )));
                }
                (*m, *n, ModelKind::Dense, Operator::Dense(data.clone()))
            }
            ForwardSpec::Gaussian { m, n, seed } => {
                check_dims(*m, *n)?;
                let mut rng = SplitMix64::new(*seed);
                let sd = 1.0 / (*m as f64).sqrt();
                let data = (0..m * n).map(|_| sd * rng.normal()).collect();
                (
                    *m,
                    *n,
                    ModelKind::GaussianRandom { seed: *seed },
                    Operator::Dense(data),
                )
            }
            ForwardSpec::Fourier { mask } => {
                check_dims(mask.height, mask.width)?;
                let op = FourierOp::new(mask)?;
                (
                    2 * op.freqs.len(),
                    mask.height * mask.width,
                    ModelKind::SubsampledFourier,
                    Operator::Fourier(op),
                )
            }
            ForwardSpec::MatrixFile { path } => {
                let (m, n, data) = read_matrix(path)?;
                (m, n, ModelKind::MatrixFile, Operator::Dense(data))
            }
        };
        Ok(Self {
            m,
            n,
            kind,
            op,
            all_cols: (0..n).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    fn apply_cols(&self, cols: &[usize], h: &[f64]) -> Vec<f64> {
        match &self.op {
            Operator::Dense(a) => {
                let n = self.n;
                (0..self.m)
                    .map(|r| {
                        let row = &a[r * n..(r + 1) * n];
                        let mut acc = 0.0;
                        for (&c, &v) in cols.iter().zip(h) {
                            acc += row[c] * v;
                        }
                        acc
                    })
                    .collect()
            }
            Operator::Fourier(f) => f.apply_cols(cols, h),
        }
    }

    fn adjoint_cols(&self, cols: &[usize], u: &[f64]) -> Vec<f64> {
        match &self.op {
            Operator::Dense(a) => {
                let n = self.n;
                let mut out = vec![0.0; cols.len()];
                for (r, &ur) in u.iter().enumerate() {
                    let row = &a[r * n..(r + 1) * n];
                    for (o, &c) in out.iter_mut().zip(cols) {
                        *o += row[c] * ur;
                    }
                }
                out
            }
            Operator::Fourier(f) => f.adjoint_cols(cols, u),
        }
    }

    /// `Ax`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        expect_len(self.n, x.len())?;
        Ok(self.apply_cols(&self.all_cols, x))
    }

    /// `Aᵀu`.
    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        expect_len(self.m, u.len())?;
        Ok(self.adjoint_cols(&self.all_cols, u))
    }

    /// `A_i h`, touching only the columns of block `i`.
    pub fn apply_block_columns(
        &self,
        partition: &BlockPartition,
        i: usize,
        h: &[f64],
    ) -> Result<Vec<f64>> {
        expect_len(self.n, partition.dim())?;
        let idx = partition.block(i)?;
        expect_len(idx.len(), h.len())?;
        Ok(self.apply_cols(idx, h))
    }

    /// `A_iᵀ r`, the least-squares block gradient for residual `r = Ax − y`.
    pub fn lsq_block_gradient(
        &self,
        partition: &BlockPartition,
        i: usize,
        r: &[f64],
    ) -> Result<Vec<f64>> {
        expect_len(self.n, partition.dim())?;
        expect_len(self.m, r.len())?;
        let idx = partition.block(i)?;
        Ok(self.adjoint_cols(idx, r))
    }

    /// Row-major dense copy of the operator, built column by column.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.op {
            Operator::Dense(a) => a.clone(),
            Operator::Fourier(_) => {
                let mut out = vec![0.0; self.m * self.n];
                for c in 0..self.n {
                    let col = self.apply_cols(&[c], &[1.0]);
                    for (r, v) in col.into_iter().enumerate() {
                        out[r * self.n + c] = v;
                    }
                }
                out
            }
        }
    }

    pub fn estimate_lipschitz(&self, partition: &BlockPartition) -> Result<LipschitzInfo> {
        expect_len(self.n, partition.dim())?;
        let global = power_iteration(self.n, |v| {
            self.adjoint_cols(&self.all_cols, &self.apply_cols(&self.all_cols, v))
        });
        let per_block: Vec<PowerResult> = partition
            .blocks()
            .par_iter()
            .map(|idx| power_iteration(idx.len(), |v| self.adjoint_cols(idx, &self.apply_cols(idx, v))))
            .collect();
        let blocks: Vec<f64> = per_block.iter().map(|p| p.value).collect();
        let max = blocks.iter().copied().fold(0.0, f64::max);
        let iterations_used = per_block
            .iter()
            .map(|p| p.iterations)
            .chain([global.iterations])
            .max()
            .unwrap_or(0);
        let residual = per_block
            .iter()
            .map(|p| p.rel_change)
            .chain([global.rel_change])
            .fold(0.0, f64::max);
        Ok(LipschitzInfo {
            global: global.value,
            blocks,
            max,
            iterations_used,
            residual,
        })
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "operator dimensions must be positive, got {m}x{n}"
        )));
    }
    Ok(())
}

fn expect_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch(format!(
            "expected length {expected}, got {got}"
        )));
    }
    Ok(())
}

/// Lipschitz constants of `∇g` and its blocks: squared spectral norms of `A`
/// and of each column block `A_i`, biased upward by [`LIPSCHITZ_SAFETY`].
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzInfo {
    pub global: f64,
    pub blocks: Vec<f64>,
    pub max: f64,
    /// Largest power-iteration count over all estimates.
    pub iterations_used: usize,
    /// Largest final relative change over all estimates.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct PowerResult {
    value: f64,
    iterations: usize,
    rel_change: f64,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// Starts from the normalized all-ones vector; when the first Rayleigh
/// quotient is exactly zero it restarts once from a fixed non-constant vector.
fn power_iteration(dim: usize, op: impl Fn(&[f64]) -> Vec<f64>) -> PowerResult {
    let ones = vec![1.0; dim];
    let fallback: Vec<f64> = (0..dim).map(|j| 1.0 + 0.5 * ((j + 1) as f64).sin()).collect();
    for start in [ones, fallback] {
        let scale = 1.0 / norm(&start);
        let mut v: Vec<f64> = start.iter().map(|x| x * scale).collect();
        let mut prev = 0.0;
        let mut rel_change = f64::INFINITY;
        let mut iterations = 0;
        let mut estimate = 0.0;
        while iterations < POWER_MAX_ITERS {
            iterations += 1;
            let w = op(&v);
            estimate = dot(&v, &w);
            let wn = norm(&w);
            if estimate <= 0.0 || wn == 0.0 {
                estimate = 0.0;
                break;
            }
            v = w.iter().map(|x| x / wn).collect();
            rel_change = (estimate - prev).abs() / estimate;
            prev = estimate;
            if rel_change < POWER_TOL {
                break;
            }
        }
        if estimate > 0.0 {
            return PowerResult {
                value: estimate * LIPSCHITZ_SAFETY,
                iterations,
                rel_change,
            };
        }
    }
    PowerResult {
        value: 0.0,
        iterations: 0,
        rel_change: 0.0,
    }
}

/// Binary little-endian layout: `BMAT`, `u32 m`, `u32 n`, then `m·n` `f64`
/// values in row-major order.
pub fn read_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: "missing BMAT magic".into(),
        });
    }
    let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if m == 0 || n == 0 {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("zero dimension {m}x{n}"),
        });
    }
    let body = &bytes[12..];
    if body.len() < m * n * 8 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
        });
    }
    let data = body
        .chunks_exact(8)
        .take(m * n)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((m, n, data))
}

pub fn write_matrix(path: &Path, m: usize, n: usize, data: &[f64]) -> Result<()> {
    if data.len() != m * n {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} entries, expected {m}x{n}",
            data.len()
        )));
    }
    let mut bytes = Vec::with_capacity(12 + 8 * data.len());
    bytes.extend_from_slice(MATRIX_MAGIC);
    bytes.extend_from_slice(&(m as u32).to_le_bytes());
    bytes.extend_from_slice(&(n as u32).to_le_bytes());
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `g(x) = ½‖Ax − y‖²` for a borrowed model and measurement vector.
#[derive(Debug, Clone, Copy)]
pub struct LeastSquares<'a> {
    pub model: &'a ForwardModel,
    pub y: &'a [f64],
}

impl<'a> LeastSquares<'a> {
    pub fn new(model: &'a ForwardModel, y: &'a [f64]) -> Result<Self> {
        expect_len(model.rows(), y.len())?;
        Ok(Self { model, y })
    }

    /// `r(x) = Ax − y`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.model.apply(x)?;
        for (ri, yi) in r.iter_mut().zip(self.y) {
            *ri -= yi;
        }
        Ok(r)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(0.5 * norm_sq(&self.residual(x)?))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.model.adjoint(&self.residual(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::PartitionSpec;

    fn dense(m: usize, n: usize, data: Vec<f64>) -> ForwardModel {
        ForwardModel::build(&ForwardSpec::Dense { m, n, data }).unwrap()
    }

    #[test]
    fn identity_and_scaled_identity() {
        let id = ForwardModel::build(&ForwardSpec::Identity { n: 4 }).unwrap();
        let x = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(id.apply(&x).unwrap(), x.to_vec());
        assert_eq!(id.adjoint(&x).unwrap(), x.to_vec());

        let mut data = vec![0.0; 16];
        for i in 0..4 {
            data[i * 4 + i] = 2.0;
        }
        let two = dense(4, 4, data);
        assert_eq!(two.apply(&x).unwrap(), vec![2.0, -4.0, 6.0, 1.0]);
        assert_eq!(two.adjoint(&x).unwrap(), vec![2.0, -4.0, 6.0, 1.0]);
    }

    #[test]
    fn block_columns_of_identity() {
        let id = ForwardModel::build(&ForwardSpec::Identity { n: 4 }).unwrap();
        let p = BlockPartition::new(4, PartitionSpec::Contiguous { blocks: 2 }).unwrap();
        assert_eq!(
            id.apply_block_columns(&p, 1, &[1.0, 1.0]).unwrap(),
            vec![0.0, 0.0, 1.0, 1.0]
        );
        assert_eq!(id.apply_block_columns(&p, 0, &[0.0, 0.0]).unwrap(), vec![0.0; 4]);
        assert!(id.apply_block_columns(&p, 2, &[0.0, 0.0]).is_err());
        assert!(id.apply_block_columns(&p, 0, &[0.0]).is_err());
        // A = I, y = 0: r = x and the block gradient is x_i
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(id.lsq_block_gradient(&p, 1, &x).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn dimension_errors() {
        let id = ForwardModel::build(&ForwardSpec::Identity { n: 3 }).unwrap();
        assert!(matches!(id.apply(&[1.0]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(id.adjoint(&[1.0; 4]), Err(Error::DimensionMismatch(_))));
        assert!(ForwardModel::build(&ForwardSpec::Dense {
            m: 2,
            n: 2,
            data: vec![1.0; 3]
        })
        .is_err());
    }

    #[test]
    fn fourier_dc_of_constant_image() {
        let mut bits = vec![false; 16];
        bits[0] = true;
        let mask = FourierMask::new(4, 4, bits).unwrap();
        let f = ForwardModel::build(&ForwardSpec::Fourier { mask }).unwrap();
        assert_eq!(f.rows(), 2);
        let y = f.apply(&[1.0; 16]).unwrap();
        assert!((y[0] - 4.0).abs() < 1e-14);
        assert!(y[1].abs() < 1e-14);
    }

    #[test]
    fn empty_mask_is_rejected() {
        let mask = FourierMask::new(2, 2, vec![false; 4]).unwrap();
        assert!(matches!(
            ForwardModel::build(&ForwardSpec::Fourier { mask }),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn full_mask_is_an_isometry() {
        let mask = FourierMask::new(3, 4, vec![true; 12]).unwrap();
        let f = ForwardModel::build(&ForwardSpec::Fourier { mask }).unwrap();
        let mut rng = SplitMix64::new(9);
        let x = rng.normal_vec(12);
        let y = f.apply(&x).unwrap();
        assert!((norm_sq(&y) - norm_sq(&x)).abs() < 1e-12 * norm_sq(&x));
        // AᵀA = I for the complete unitary DFT on real inputs
        let back = f.adjoint(&y).unwrap();
        assert!(crate::linalg::max_abs_diff(&back, &x) < 1e-12);
    }

    #[test]
    fn lipschitz_of_diagonal() {
        let a = dense(2, 2, vec![1.0, 0.0, 0.0, 2.0]);
        let p = BlockPartition::new(2, PartitionSpec::Contiguous { blocks: 2 }).unwrap();
        let info = a.estimate_lipschitz(&p).unwrap();
        assert!((info.blocks[0] - LIPSCHITZ_SAFETY).abs() < 1e-12);
        assert!((info.blocks[1] - 4.0 * LIPSCHITZ_SAFETY).abs() < 1e-12);
        assert!((info.global - 4.0 * LIPSCHITZ_SAFETY).abs() < 1e-9);
        assert_eq!(info.max, info.blocks[1]);
    }

    #[test]
    fn lipschitz_of_identity_and_zero() {
        let id = ForwardModel::build(&ForwardSpec::Identity { n: 6 }).unwrap();
        let p = BlockPartition::new(6, PartitionSpec::Contiguous { blocks: 3 }).unwrap();
        let info = id.estimate_lipschitz(&p).unwrap();
        assert!((info.global - LIPSCHITZ_SAFETY).abs() < 1e-15);
        assert!(info.blocks.iter().all(|&l| (l - LIPSCHITZ_SAFETY).abs() < 1e-15));

        let zero = dense(2, 6, vec![0.0; 12]);
        let info = zero.estimate_lipschitz(&p).unwrap();
        assert_eq!(info.global, 0.0);
        assert_eq!(info.max, 0.0);
    }

    #[test]
    fn lipschitz_with_start_vector_in_null_space() {
        // all-ones lies in the null space of [1, -1]
        let a = dense(1, 2, vec![1.0, -1.0]);
        let p = BlockPartition::single(2).unwrap();
        let info = a.estimate_lipschitz(&p).unwrap();
        assert!((info.global - 2.0 * LIPSCHITZ_SAFETY).abs() < 1e-9);
    }

    #[test]
    fn matrix_file_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bmat");
        let data = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        write_matrix(&path, 2, 3, &data).unwrap();
        let model = ForwardModel::build(&ForwardSpec::MatrixFile { path: path.clone() }).unwrap();
        assert_eq!((model.rows(), model.cols()), (2, 3));
        assert_eq!(model.to_dense(), data);

        let bad = dir.path().join("bad.bmat");
        fs::write(&bad, b"XMAT\x01\0\0\0\x01\0\0\0").unwrap();
        assert!(matches!(read_matrix(&bad), Err(Error::MalformedHeader { .. })));
        let short = dir.path().join("short.bmat");
        fs::write(&short, b"BMAT\x02\0\0\0\x02\0\0\0abcd").unwrap();
        assert!(matches!(read_matrix(&short), Err(Error::Truncated { .. })));
        assert!(matches!(
            read_matrix(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn mask_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.txt");
        let mask = FourierMask::radial(8, 6, 3);
        mask.write(&path).unwrap();
        assert_eq!(FourierMask::read(&path).unwrap(), mask);
        fs::write(&path, "2 2\n01\n").unwrap();
        assert!(matches!(FourierMask::read(&path), Err(Error::Truncated { .. })));
        fs::write(&path, "2 2\n01\n1x\n").unwrap();
        assert!(matches!(
            FourierMask::read(&path),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn gaussian_is_deterministic() {
        let spec = ForwardSpec::Gaussian { m: 5, n: 7, seed: 3 };
        let a = ForwardModel::build(&spec).unwrap().to_dense();
        let b = ForwardModel::build(&spec).unwrap().to_dense();
        assert_eq!(a, b);
        let c = ForwardModel::build(&ForwardSpec::Gaussian { m: 5, n: 7, seed: 4 })
            .unwrap()
            .to_dense();
        assert_ne!(a, c);
    }
}
