//! The numerical core: random sigmoid hidden layer, slowness-based
//! projection selection, and the ridge-regularized linear readout.
//!
//! Training data is a time-ordered matrix of hidden activations in which
//! consecutive rows of one recording differ only in object pose. Projection
//! selection sphere-transforms the centered activations, eigendecomposes
//! the covariance of consecutive differences, and keeps the directions of
//! smallest difference energy (mode `slow`), largest (mode `fast`), the
//! principal-variance directions (mode `pca`) or the raw leading
//! coordinates (mode `identity`).

use crate::{Error, Result, Scalar};
use byteorder::{ByteOrder, LittleEndian};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const MODEL_MAGIC: &[u8; 4] = b"SELM";
pub const MODEL_VERSION: u16 = 1;
/// magic + version + six u32 dimensions
pub const MODEL_HEADER_LEN: usize = 4 + 2 + 6 * 4;
/// mode byte + C as f64
pub const MODEL_TRAILER_LEN: usize = 1 + 8;

/// Random input projection with sigmoid nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer<T: Scalar> {
    /// `input_dim x n`, entries i.i.d. N(0, 1).
    pub w_in: DMatrix<T>,
}

impl<T: Scalar> HiddenLayer<T> {
    pub fn input_dim(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn width(&self) -> usize {
        self.w_in.ncols()
    }
}

/// Deterministically initialize the hidden layer from a seed.
pub fn init_hidden<T: Scalar>(input_dim: usize, n: usize, seed: u64) -> HiddenLayer<T> {
    assert!(input_dim >= 1 && n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Draws are made in f64 so every scalar lane sees the same sequence.
    let w_in = DMatrix::from_fn(input_dim, n, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        T::from_f64_c(v)
    });
    HiddenLayer { w_in }
}

/// `H = f(W_in^T x)` for a single input vector.
pub fn hidden_activations<T: Scalar>(x: &[T], hidden: &HiddenLayer<T>) -> Result<DVector<T>> {
    if x.len() != hidden.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: hidden.input_dim(),
            got: x.len(),
            context: "input vector vs hidden layer".into(),
        });
    }
    let xv = DVector::from_column_slice(x);
    let mut h = hidden.w_in.tr_mul(&xv);
    h.apply(|v| *v = v.sigmoid());
    Ok(h)
}

/// Batched activations: rows of `x` are samples, output rows are `H_i`.
pub fn hidden_activations_batch<T: Scalar>(
    x: &DMatrix<T>,
    hidden: &HiddenLayer<T>,
) -> Result<DMatrix<T>> {
    if x.ncols() != hidden.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: hidden.input_dim(),
            got: x.ncols(),
            context: "input matrix columns vs hidden layer".into(),
        });
    }
    let mut h = x * &hidden.w_in;
    h.apply(|v| *v = v.sigmoid());
    Ok(h)
}

/// Projection-selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    Slow,
    Fast,
    Pca,
    Identity,
}

impl ProjectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProjectionMode::Slow => "slow",
            ProjectionMode::Fast => "fast",
            ProjectionMode::Pca => "pca",
            ProjectionMode::Identity => "identity",
        }
    }

    pub fn to_byte(self) -> u8 {
        match self {
            ProjectionMode::Slow => 0,
            ProjectionMode::Fast => 1,
            ProjectionMode::Pca => 2,
            ProjectionMode::Identity => 3,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0 => ProjectionMode::Slow,
            1 => ProjectionMode::Fast,
            2 => ProjectionMode::Pca,
            3 => ProjectionMode::Identity,
            other => return Err(Error::ModelFormat(format!("unknown mode byte {other}"))),
        })
    }
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "slow" => ProjectionMode::Slow,
            "fast" => ProjectionMode::Fast,
            "pca" => ProjectionMode::Pca,
            "identity" => ProjectionMode::Identity,
            other => return Err(Error::Config(format!("unknown projection mode '{other}'"))),
        })
    }
}

/// Selected linear projection of the hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowProjection<T: Scalar> {
    /// Training mean of the hidden activations, subtracted before projecting.
    pub mean_h: DVector<T>,
    /// `n x k`.
    pub w_slow: DMatrix<T>,
    /// Mean squared consecutive change of each projection on training data.
    pub delta_energies: Vec<T>,
    pub mode: ProjectionMode,
}

impl<T: Scalar> SlowProjection<T> {
    pub fn hidden_width(&self) -> usize {
        self.w_slow.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.w_slow.ncols()
    }
}

fn center_rows<T: Scalar>(h: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
    let m = h.nrows();
    let inv_m = T::from_f64_c(1.0 / m as f64);
    let mut mean = DVector::zeros(h.ncols());
    for j in 0..h.ncols() {
        let mut acc = T::zero();
        for i in 0..m {
            acc += h[(i, j)];
        }
        mean[j] = acc * inv_m;
    }
    let mut centered = h.clone();
    for j in 0..h.ncols() {
        for i in 0..m {
            centered[(i, j)] -= mean[j];
        }
    }
    (centered, mean)
}

/// Eigenpairs of a symmetric matrix sorted by eigenvalue. Ties keep the
/// decomposition's original order (stable sort), making the choice within
/// equal-eigenvalue subspaces deterministic.
fn sorted_symmetric_eigen<T: Scalar>(mat: DMatrix<T>, ascending: bool) -> (Vec<T>, DMatrix<T>) {
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        if ascending {
            x.partial_cmp(&y).unwrap()
        } else {
            y.partial_cmp(&x).unwrap()
        }
    });
    let vals: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (vals, vecs)
}

/// Flip each column so its largest-magnitude entry is positive.
fn fix_signs<T: Scalar>(mat: &mut DMatrix<T>) {
    for j in 0..mat.ncols() {
        let mut best = 0usize;
        for i in 0..mat.nrows() {
            if Float::abs(mat[(i, j)]) > Float::abs(mat[(best, j)]) {
                best = i;
            }
        }
        if mat[(best, j)] < T::zero() {
            for i in 0..mat.nrows() {
                mat[(i, j)] = -mat[(i, j)];
            }
        }
    }
}

/// Consecutive-row differences, taken only within each recording.
fn difference_rows<T: Scalar>(h: &DMatrix<T>, recording_lens: &[usize]) -> Result<DMatrix<T>> {
    let total: usize = recording_lens.iter().sum();
    if total != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: total,
            context: "recording lengths vs sample count".into(),
        });
    }
    let d_count: usize = recording_lens.iter().map(|&l| l.saturating_sub(1)).sum();
    if d_count == 0 {
        return Err(Error::Config(
            "need at least one recording with two or more samples".into(),
        ));
    }
    let mut diffs = DMatrix::zeros(d_count, h.ncols());
    let mut row = 0usize;
    let mut out = 0usize;
    for &len in recording_lens {
        for i in 1..len {
            for j in 0..h.ncols() {
                diffs[(out, j)] = h[(row + i, j)] - h[(row + i - 1, j)];
            }
            out += 1;
        }
        row += len;
    }
    Ok(diffs)
}

fn mean_delta_energies<T: Scalar>(projected: &DMatrix<T>, recording_lens: &[usize]) -> Result<Vec<T>> {
    let diffs = difference_rows(projected, recording_lens)?;
    let inv = T::from_f64_c(1.0 / diffs.nrows() as f64);
    Ok((0..diffs.ncols())
        .map(|j| {
            let mut acc = T::zero();
            for i in 0..diffs.nrows() {
                acc += diffs[(i, j)] * diffs[(i, j)];
            }
            acc * inv
        })
        .collect())
}

/// Fit the projection layer on time-ordered hidden activations.
///
/// `h` holds one sample per row; `recording_lens` gives the consecutive-run
/// structure (differences are never taken across recording boundaries).
/// `eps` is the relative eigenvalue floor for rank truncation during
/// sphering.
pub fn fit_projection<T: Scalar>(
    h: &DMatrix<T>,
    recording_lens: &[usize],
    k: usize,
    mode: ProjectionMode,
    eps: f64,
) -> Result<SlowProjection<T>> {
    let (m, n) = (h.nrows(), h.ncols());
    if m < 2 {
        return Err(Error::Config("projection fitting needs >= 2 samples".into()));
    }
    if k > n {
        return Err(Error::RankDeficient {
            requested: k,
            achievable: n,
        });
    }
    if h.iter().any(|v| !Float::is_finite(*v)) {
        return Err(Error::NonFinite("hidden activations".into()));
    }
    let lens_owned;
    let lens: &[usize] = if recording_lens.is_empty() {
        lens_owned = [m];
        &lens_owned
    } else {
        recording_lens
    };

    match mode {
        ProjectionMode::Identity => {
            let mut w = DMatrix::zeros(n, k);
            for j in 0..k {
                w[(j, j)] = T::one();
            }
            let projected = h * &w;
            let delta_energies = mean_delta_energies(&projected, lens)?;
            Ok(SlowProjection {
                mean_h: DVector::zeros(n),
                w_slow: w,
                delta_energies,
                mode,
            })
        }
        ProjectionMode::Pca => {
            let (centered, mean_h) = center_rows(h);
            let denom = T::from_f64_c(1.0 / (m as f64 - 1.0));
            let cov = centered.tr_mul(&centered) * denom;
            let (vals, vecs) = sorted_symmetric_eigen(cov, false);
            let lmax = nalgebra::RealField::max(vals[0], T::zero());
            let rank = vals
                .iter()
                .filter(|&&v| v >= lmax * T::from_f64_c(eps) && v > T::zero())
                .count();
            if k > rank {
                return Err(Error::RankDeficient {
                    requested: k,
                    achievable: rank,
                });
            }
            let mut w = vecs.columns(0, k).clone_owned();
            fix_signs(&mut w);
            let projected = &centered * &w;
            let delta_energies = mean_delta_energies(&projected, lens)?;
            Ok(SlowProjection {
                mean_h,
                w_slow: w,
                delta_energies,
                mode,
            })
        }
        ProjectionMode::Slow | ProjectionMode::Fast => {
            let (centered, mean_h) = center_rows(h);
            let denom = T::from_f64_c(1.0 / (m as f64 - 1.0));
            let cov = centered.tr_mul(&centered) * denom;
            let (vals, vecs) = sorted_symmetric_eigen(cov, false);
            let lmax = nalgebra::RealField::max(vals[0], T::zero());
            let rank = vals
                .iter()
                .filter(|&&v| v >= lmax * T::from_f64_c(eps) && v > T::zero())
                .count();
            if k > rank {
                return Err(Error::RankDeficient {
                    requested: k,
                    achievable: rank,
                });
            }
            // Sphering transform: n x rank.
            let mut sphere = vecs.columns(0, rank).clone_owned();
            for j in 0..rank {
                let scale = T::one() / Float::sqrt(vals[j]);
                for i in 0..n {
                    sphere[(i, j)] *= scale;
                }
            }
            let sphered = &centered * &sphere; // m x rank, identity covariance
            let diffs = difference_rows(&sphered, lens)?;
            let dinv = T::from_f64_c(1.0 / diffs.nrows() as f64);
            let dcov = diffs.tr_mul(&diffs) * dinv;
            let ascending = mode == ProjectionMode::Slow;
            let (dvals, dvecs) = sorted_symmetric_eigen(dcov, ascending);
            let picked = dvecs.columns(0, k).clone_owned();
            let mut w = &sphere * &picked; // n x k
            fix_signs(&mut w);
            let delta_energies = dvals[..k].to_vec();
            Ok(SlowProjection {
                mean_h,
                w_slow: w,
                delta_energies,
                mode,
            })
        }
    }
}

/// `Y = W_slow^T (H - mean_H)` for one activation vector.
pub fn project<T: Scalar>(h: &DVector<T>, proj: &SlowProjection<T>) -> Result<DVector<T>> {
    if h.len() != proj.hidden_width() {
        return Err(Error::DimensionMismatch {
            expected: proj.hidden_width(),
            got: h.len(),
            context: "activation vector vs projection".into(),
        });
    }
    Ok(proj.w_slow.tr_mul(&(h - &proj.mean_h)))
}

/// Batched projection: rows in, rows out.
pub fn project_batch<T: Scalar>(h: &DMatrix<T>, proj: &SlowProjection<T>) -> Result<DMatrix<T>> {
    if h.ncols() != proj.hidden_width() {
        return Err(Error::DimensionMismatch {
            expected: proj.hidden_width(),
            got: h.ncols(),
            context: "activation matrix vs projection".into(),
        });
    }
    let mut centered = h.clone();
    for j in 0..centered.ncols() {
        for i in 0..centered.nrows() {
            centered[(i, j)] -= proj.mean_h[j];
        }
    }
    Ok(centered * &proj.w_slow)
}

/// Ridge-regularized linear readout.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputLayer<T: Scalar> {
    /// `k x M`.
    pub w_out: DMatrix<T>,
    pub c: T,
}

/// Solve `(I/C + Y^T Y) W_out = Y^T T` with a Cholesky factorization.
pub fn fit_output<T: Scalar>(
    y: &DMatrix<T>,
    targets: &DMatrix<T>,
    c: T,
) -> Result<OutputLayer<T>> {
    if y.nrows() != targets.nrows() {
        return Err(Error::DimensionMismatch {
            expected: y.nrows(),
            got: targets.nrows(),
            context: "feature rows vs target rows".into(),
        });
    }
    if c <= T::zero() || !Float::is_finite(c) {
        return Err(Error::Config("regularization C must be positive".into()));
    }
    if y.iter().any(|v| !Float::is_finite(*v)) || targets.iter().any(|v| !Float::is_finite(*v)) {
        return Err(Error::NonFinite("RLS inputs".into()));
    }
    let k = y.ncols();
    let mut gram = y.tr_mul(y);
    let ridge = T::one() / c;
    for i in 0..k {
        gram[(i, i)] += ridge;
    }
    let rhs = y.tr_mul(targets);
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NonFinite("ridge gram matrix not positive definite".into()))?;
    let w_out = chol.solve(&rhs);
    Ok(OutputLayer { w_out, c })
}

/// `t = W_out^T Y`.
pub fn predict_scores<T: Scalar>(y: &DVector<T>, out: &OutputLayer<T>) -> Result<DVector<T>> {
    if y.len() != out.w_out.nrows() {
        return Err(Error::DimensionMismatch {
            expected: out.w_out.nrows(),
            got: y.len(),
            context: "projected vector vs output layer".into(),
        });
    }
    Ok(out.w_out.tr_mul(y))
}

/// The complete fitted pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowElmModel<T: Scalar> {
    pub hidden: HiddenLayer<T>,
    pub projection: SlowProjection<T>,
    pub output: OutputLayer<T>,
    pub num_objects: u32,
    pub pose_bins: u32,
}

impl<T: Scalar> SlowElmModel<T> {
    pub fn num_classes(&self) -> usize {
        (self.num_objects * self.pose_bins) as usize
    }

    /// Verify the dimension chain input_dim -> n -> k -> M.
    pub fn validate(&self) -> Result<()> {
        let n = self.hidden.width();
        if self.projection.hidden_width() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.projection.hidden_width(),
                context: "hidden width vs projection".into(),
            });
        }
        if self.output.w_out.nrows() != self.projection.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.projection.output_dim(),
                got: self.output.w_out.nrows(),
                context: "projection k vs output layer".into(),
            });
        }
        if self.output.w_out.ncols() != self.num_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_classes(),
                got: self.output.w_out.ncols(),
                context: "output columns vs class count".into(),
            });
        }
        Ok(())
    }

    /// Score one input vector end to end.
    pub fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        let h = hidden_activations(x, &self.hidden)?;
        let y = project(&h, &self.projection)?;
        let t = predict_scores(&y, &self.output)?;
        Ok(t.as_slice().to_vec())
    }

    /// Score a batch (rows are samples); returns samples x M.
    pub fn predict_batch(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let h = hidden_activations_batch(x, &self.hidden)?;
        let y = project_batch(&h, &self.projection)?;
        Ok(y * &self.output.w_out)
    }
}

fn push_matrix_rows<T: Scalar>(out: &mut Vec<u8>, m: &DMatrix<T>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_f64_c().to_le_bytes());
        }
    }
}

/// Serialize a model to the `SELM` byte layout (always 64-bit floats).
pub fn model_to_bytes<T: Scalar>(model: &SlowElmModel<T>) -> Vec<u8> {
    let d = model.hidden.input_dim();
    let n = model.hidden.width();
    let k = model.projection.output_dim();
    let m = model.num_classes();
    let payload = d * n + n + n * k + k + k * m;
    let mut out = Vec::with_capacity(MODEL_HEADER_LEN + 8 * payload + MODEL_TRAILER_LEN);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for dim in [
        d as u32,
        n as u32,
        k as u32,
        m as u32,
        model.num_objects,
        model.pose_bins,
    ] {
        out.extend_from_slice(&dim.to_le_bytes());
    }
    push_matrix_rows(&mut out, &model.hidden.w_in);
    for v in model.projection.mean_h.iter() {
        out.extend_from_slice(&v.to_f64_c().to_le_bytes());
    }
    push_matrix_rows(&mut out, &model.projection.w_slow);
    for v in &model.projection.delta_energies {
        out.extend_from_slice(&v.to_f64_c().to_le_bytes());
    }
    push_matrix_rows(&mut out, &model.output.w_out);
    out.push(model.projection.mode.to_byte());
    out.extend_from_slice(&model.output.c.to_f64_c().to_le_bytes());
    out
}

struct F64Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> F64Reader<'a> {
    fn take(&mut self, count: usize) -> Result<&'a [u8]> {
        let end = self.pos + count;
        if end > self.bytes.len() {
            return Err(Error::ModelFormat(format!(
                "truncated model file: need {} bytes at offset {}, have {}",
                count,
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> Result<DMatrix<T>> {
        let raw = self.take(rows * cols * 8)?;
        Ok(DMatrix::from_fn(rows, cols, |i, j| {
            T::from_f64_c(LittleEndian::read_f64(&raw[(i * cols + j) * 8..]))
        }))
    }

    fn vector<T: Scalar>(&mut self, len: usize) -> Result<Vec<T>> {
        let raw = self.take(len * 8)?;
        Ok((0..len)
            .map(|i| T::from_f64_c(LittleEndian::read_f64(&raw[i * 8..])))
            .collect())
    }
}

/// Deserialize a model; rejects bad magic, version, or truncation.
pub fn model_from_bytes<T: Scalar>(bytes: &[u8]) -> Result<SlowElmModel<T>> {
    if bytes.len() < MODEL_HEADER_LEN {
        return Err(Error::ModelFormat("file shorter than header".into()));
    }
    if &bytes[0..4] != MODEL_MAGIC {
        return Err(Error::ModelFormat("bad magic, expected 'SELM'".into()));
    }
    let version = LittleEndian::read_u16(&bytes[4..6]);
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {version}"
        )));
    }
    let dim = |i: usize| LittleEndian::read_u32(&bytes[6 + 4 * i..]) as usize;
    let (d, n, k, m) = (dim(0), dim(1), dim(2), dim(3));
    let num_objects = dim(4) as u32;
    let pose_bins = dim(5) as u32;
    if m != (num_objects * pose_bins) as usize {
        return Err(Error::ModelFormat(format!(
            "class count {m} != objects {num_objects} x bins {pose_bins}"
        )));
    }
    let expected = MODEL_HEADER_LEN + 8 * (d * n + n + n * k + k + k * m) + MODEL_TRAILER_LEN;
    if bytes.len() != expected {
        return Err(Error::ModelFormat(format!(
            "file size {} != expected {expected} for declared dimensions",
            bytes.len()
        )));
    }
    let mut r = F64Reader {
        bytes,
        pos: MODEL_HEADER_LEN,
    };
    let w_in = r.matrix(d, n)?;
    let mean_h = DVector::from_vec(r.vector(n)?);
    let w_slow = r.matrix(n, k)?;
    let delta_energies = r.vector(k)?;
    let w_out = r.matrix(k, m)?;
    let mode = ProjectionMode::from_byte(r.take(1)?[0])?;
    let c = T::from_f64_c(LittleEndian::read_f64(r.take(8)?));
    let model = SlowElmModel {
        hidden: HiddenLayer { w_in },
        projection: SlowProjection {
            mean_h,
            w_slow,
            delta_energies,
            mode,
        },
        output: OutputLayer { w_out, c },
        num_objects,
        pose_bins,
    };
    model.validate()?;
    Ok(model)
}

pub fn save_model<T: Scalar>(model: &SlowElmModel<T>, path: &std::path::Path) -> Result<()> {
    Ok(std::fs::write(path, model_to_bytes(model))?)
}

pub fn load_model<T: Scalar>(path: &std::path::Path) -> Result<SlowElmModel<T>> {
    model_from_bytes(&std::fs::read(path)?)
}

/// Expected model file size for a given dimension chain.
pub fn model_file_size(input_dim: usize, n: usize, k: usize, m: usize) -> usize {
    MODEL_HEADER_LEN + 8 * (input_dim * n + n + n * k + k + k * m) + MODEL_TRAILER_LEN
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn init_hidden_deterministic() {
        let a: HiddenLayer<f64> = init_hidden(12, 7, 99);
        let b: HiddenLayer<f64> = init_hidden(12, 7, 99);
        assert_eq!(a, b);
        let c: HiddenLayer<f64> = init_hidden(12, 7, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn init_hidden_shape() {
        let h: HiddenLayer<f64> = init_hidden(3600, 30, 1);
        assert_eq!((h.w_in.nrows(), h.w_in.ncols()), (3600, 30));
    }

    #[test]
    fn init_hidden_standard_normal_statistics() {
        let h: HiddenLayer<f64> = init_hidden(1000, 1000, 5);
        let m = h.w_in.len() as f64;
        let mean: f64 = h.w_in.iter().sum::<f64>() / m;
        let var: f64 = h.w_in.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn activations_at_zero_input() {
        let hidden: HiddenLayer<f64> = init_hidden(10, 5, 0);
        let h = hidden_activations(&[0.0; 10], &hidden).unwrap();
        assert!(h.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn activation_scalar_value() {
        let hidden = HiddenLayer {
            w_in: DMatrix::from_column_slice(2, 1, &[1.0f64, 1.0]),
        };
        let h = hidden_activations(&[1.0, 1.0], &hidden).unwrap();
        assert_relative_eq!(h[0], 0.8807970779778823, epsilon = 1e-12);
    }

    #[test]
    fn activations_bounded_in_unit_interval() {
        let hidden: HiddenLayer<f64> = init_hidden(50, 40, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let h = hidden_activations(&x, &hidden).unwrap();
            assert!(h.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn activations_dimension_mismatch() {
        let hidden: HiddenLayer<f64> = init_hidden(10, 5, 0);
        assert!(hidden_activations(&[0.0; 9], &hidden).is_err());
    }

    #[test]
    fn batch_matches_single() {
        let hidden: HiddenLayer<f64> = init_hidden(8, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(5, 8, |_, _| rng.gen_range(-1.0..1.0));
        let batch = hidden_activations_batch(&x, &hidden).unwrap();
        for i in 0..5 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let single = hidden_activations(&row, &hidden).unwrap();
            for j in 0..6 {
                assert_relative_eq!(batch[(i, j)], single[j], epsilon = 1e-14);
            }
        }
    }

    fn random_sequence(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn sphered_output_has_identity_covariance() {
        let h = random_sequence(400, 6, 11);
        let proj = fit_projection(&h, &[400], 6, ProjectionMode::Slow, 1e-10).unwrap();
        let y = project_batch(&h, &proj).unwrap();
        let (centered, _) = center_rows(&y);
        let cov = centered.tr_mul(&centered) / 399.0;
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(cov[(i, j)], expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn slow_projection_recovers_planted_slow_signal() {
        // Coordinate 0 is a slow sinusoid, coordinate 1 is fast noise.
        let m = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = DMatrix::from_fn(m, 2, |i, j| {
            if j == 0 {
                (2.0 * std::f64::consts::PI * i as f64 / m as f64).sin()
            } else {
                rng.gen_range(-1.0..1.0)
            }
        });
        let proj = fit_projection(&h, &[m], 1, ProjectionMode::Slow, 1e-10).unwrap();
        // Alignment in input space: the recovered direction should be
        // dominated by coordinate 0.
        let w = proj.w_slow.column(0);
        let cosine = w[0].abs() / (w[0] * w[0] + w[1] * w[1]).sqrt();
        assert!(cosine > 0.99, "alignment {cosine}");
    }

    #[test]
    fn slow_and_fast_are_reversed_orderings() {
        let h = random_sequence(300, 5, 21);
        let slow = fit_projection(&h, &[300], 5, ProjectionMode::Slow, 1e-10).unwrap();
        let fast = fit_projection(&h, &[300], 5, ProjectionMode::Fast, 1e-10).unwrap();
        let mut rev = fast.delta_energies.clone();
        rev.reverse();
        for (a, b) in slow.delta_energies.iter().zip(&rev) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9);
        }
        // Slow energies are non-decreasing.
        for w in slow.delta_energies.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn rank_deficient_k_reports_achievable() {
        // Rank-2 data in 4 dimensions.
        let base = random_sequence(100, 2, 8);
        let h = DMatrix::from_fn(100, 4, |i, j| match j {
            0 | 1 => base[(i, j)],
            2 => base[(i, 0)] + base[(i, 1)],
            _ => base[(i, 0)] - base[(i, 1)],
        });
        let err = fit_projection(&h, &[100], 4, ProjectionMode::Slow, 1e-8).unwrap_err();
        match err {
            Error::RankDeficient {
                requested,
                achievable,
            } => {
                assert_eq!(requested, 4);
                assert_eq!(achievable, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn differences_respect_recording_boundaries() {
        // Two recordings whose junction would be a huge jump; the jump must
        // not contribute to delta energies.
        let mut h = DMatrix::zeros(20, 2);
        for i in 0..10 {
            h[(i, 0)] = i as f64 * 0.01;
            h[(i, 1)] = (i as f64 * 2.0).sin();
        }
        for i in 10..20 {
            h[(i, 0)] = 1000.0 + i as f64 * 0.01;
            h[(i, 1)] = (i as f64 * 2.0).sin();
        }
        let split = mean_delta_energies(&h, &[10, 10]).unwrap();
        let joined = mean_delta_energies(&h, &[20]).unwrap();
        assert!(split[0] < 1e-3);
        assert!(joined[0] > 1.0);
    }

    #[test]
    fn project_at_mean_is_zero() {
        let h = random_sequence(50, 4, 2);
        let proj = fit_projection(&h, &[50], 3, ProjectionMode::Slow, 1e-10).unwrap();
        let y = project(&proj.mean_h.clone(), &proj).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identity_mode_passes_through() {
        let h = random_sequence(50, 4, 3);
        let proj = fit_projection(&h, &[50], 4, ProjectionMode::Identity, 1e-10).unwrap();
        let x = DVector::from_vec(vec![0.1, -0.2, 0.3, 0.7]);
        let y = project(&x, &proj).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn projected_training_mean_is_zero() {
        let h = random_sequence(200, 5, 13);
        for mode in [ProjectionMode::Slow, ProjectionMode::Fast, ProjectionMode::Pca] {
            let proj = fit_projection(&h, &[200], 3, mode, 1e-10).unwrap();
            let y = project_batch(&h, &proj).unwrap();
            for j in 0..3 {
                let mean: f64 = y.column(j).iter().sum::<f64>() / 200.0;
                assert!(mean.abs() < 1e-8, "mode {mode:?} mean {mean}");
            }
        }
    }

    #[test]
    fn fit_output_closed_form_identity() {
        let y = DMatrix::<f64>::identity(6, 6);
        let t = DMatrix::<f64>::identity(6, 6);
        let out = fit_output(&y, &t, 1.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_relative_eq!(out.w_out[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fit_output_large_c_approaches_least_squares() {
        let y = random_sequence(50, 10, 31);
        let t = random_sequence(50, 3, 32);
        let out = fit_output(&y, &t, 1e8).unwrap();
        let pinv = (y.tr_mul(&y)).try_inverse().unwrap() * y.tr_mul(&t);
        let diff = (&out.w_out - &pinv).norm() / pinv.norm();
        assert!(diff < 1e-4, "relative difference {diff}");
    }

    #[test]
    fn fit_output_residual_small() {
        for seed in 0..5u64 {
            let y = random_sequence(50, 10, 100 + seed);
            let t = random_sequence(50, 4, 200 + seed);
            let c = 2.5;
            let out = fit_output(&y, &t, c).unwrap();
            let mut lhs = y.tr_mul(&y) * &out.w_out;
            lhs += &out.w_out / c;
            let rhs = y.tr_mul(&t);
            let rel = (&lhs - &rhs).norm() / rhs.norm();
            assert!(rel < 1e-8, "residual {rel}");
        }
    }

    #[test]
    fn fit_output_rejects_non_finite() {
        let mut y = random_sequence(10, 3, 1);
        y[(2, 1)] = f64::NAN;
        let t = random_sequence(10, 2, 2);
        assert!(fit_output(&y, &t, 1.0).is_err());
    }

    #[test]
    fn predict_scores_linearity() {
        let out = OutputLayer {
            w_out: DMatrix::<f64>::identity(4, 4),
            c: 1.0,
        };
        let zero = predict_scores(&DVector::zeros(4), &out).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        assert_eq!(predict_scores(&y, &out).unwrap(), y);
    }

    fn small_model(seed: u64) -> SlowElmModel<f64> {
        let hidden: HiddenLayer<f64> = init_hidden(16, 12, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let x = DMatrix::from_fn(40, 16, |_, _| if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
        let h = hidden_activations_batch(&x, &hidden).unwrap();
        let proj = fit_projection(&h, &[40], 5, ProjectionMode::Slow, 1e-10).unwrap();
        let y = project_batch(&h, &proj).unwrap();
        let t = DMatrix::from_fn(40, 4, |i, j| if i % 4 == j { 1.0 } else { 0.0 });
        let out = fit_output(&y, &t, 1.0).unwrap();
        SlowElmModel {
            hidden,
            projection: proj,
            output: out,
            num_objects: 2,
            pose_bins: 2,
        }
    }

    #[test]
    fn model_round_trip_bit_identical_predictions() {
        let model = small_model(7);
        let bytes = model_to_bytes(&model);
        let loaded: SlowElmModel<f64> = model_from_bytes(&bytes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..100 {
            let x: Vec<f64> = (0..16)
                .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            let a = model.predict(&x).unwrap();
            let b = loaded.predict(&x).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn model_corrupt_magic_rejected() {
        let model = small_model(7);
        let mut bytes = model_to_bytes(&model);
        bytes[1] = b'X';
        assert!(model_from_bytes::<f64>(&bytes).is_err());
    }

    #[test]
    fn model_truncation_rejected() {
        let model = small_model(7);
        let mut bytes = model_to_bytes(&model);
        bytes.truncate(bytes.len() - 4);
        assert!(model_from_bytes::<f64>(&bytes).is_err());
    }

    #[test]
    fn model_file_size_matches_layout() {
        let model = small_model(3);
        let bytes = model_to_bytes(&model);
        assert_eq!(bytes.len(), model_file_size(16, 12, 5, 4));
        assert_eq!(
            bytes.len(),
            MODEL_HEADER_LEN + 8 * (16 * 12 + 12 + 12 * 5 + 5 + 5 * 4) + MODEL_TRAILER_LEN
        );
    }
}
