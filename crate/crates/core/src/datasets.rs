//! Synthetic in-distribution / OOD data and the `OODD` binary format.
//!
//! Generators are pure functions of their arguments. Every generated value
//! is rounded to `f32` precision so that a dataset survives a save/load
//! round trip unchanged.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Label value marking an unlabeled sample.
pub const UNLABELED: u32 = u32::MAX;

const MAGIC: &[u8; 4] = b"OODD";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// Seed used for class-mean placement when the class count exceeds the
/// dimension. Means never depend on the sampling seed.
const MEANS_SEED: u64 = 0x6d65_616e_735f_7631;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Feature matrix `[N, D]` with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: Tensor,
    pub labels: Vec<u32>,
    pub class_count: usize,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(x: Tensor, labels: Vec<u32>, class_count: usize, split: Split) -> Result<Self> {
        if x.shape().len() != 2 {
            return Err(Error::dim(format!(
                "features must be [N, D], got {:?}",
                x.shape()
            )));
        }
        if labels.len() != x.rows() {
            return Err(Error::dim(format!(
                "{} labels for {} rows",
                labels.len(),
                x.rows()
            )));
        }
        if let Some(bad) = labels
            .iter()
            .find(|&&l| l != UNLABELED && l as usize >= class_count)
        {
            return Err(Error::Schema(format!(
                "label {bad} outside [0, {class_count})"
            )));
        }
        Ok(Self {
            x,
            labels,
            class_count,
            split,
        })
    }

    /// An unlabeled sample set.
    pub fn unlabeled(x: Tensor, class_count: usize, split: Split) -> Result<Self> {
        let n = x.rows();
        Self::new(x, vec![UNLABELED; n], class_count, split)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(|&l| l != UNLABELED)
    }

    /// Labels as class indices; fails if any row is unlabeled.
    pub fn class_indices(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if l == UNLABELED {
                    Err(Error::Schema(format!("row {i} is unlabeled")))
                } else {
                    Ok(l as usize)
                }
            })
            .collect()
    }

    /// Row-wise concatenation; class counts must agree.
    pub fn concat(&self, other: &LabeledDataset) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::dim(format!(
                "cannot concatenate D={} with D={}",
                self.dim(),
                other.dim()
            )));
        }
        let mut data = self.x.data().to_vec();
        data.extend_from_slice(other.x.data());
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let x = Tensor::matrix(labels.len(), self.dim(), data)?;
        Self::new(x, labels, self.class_count.max(other.class_count), self.split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OodGroup {
    Near,
    Far,
}

impl OodGroup {
    pub fn as_str(&self) -> &'static str {
        match self {
            OodGroup::Near => "near",
            OodGroup::Far => "far",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodSet {
    pub name: String,
    pub group: OodGroup,
    pub data: LabeledDataset,
}

/// IND test split, named OOD test sets, and a held-out OOD validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct OodSuite {
    pub ind_test: LabeledDataset,
    pub ood: Vec<OodSet>,
    pub ood_val: LabeledDataset,
}

impl OodSuite {
    pub fn new(ind_test: LabeledDataset, ood: Vec<OodSet>, ood_val: LabeledDataset) -> Result<Self> {
        let d = ind_test.dim();
        for s in &ood {
            if s.data.dim() != d {
                return Err(Error::dim(format!(
                    "OOD set `{}` has D={}, IND has D={d}",
                    s.name,
                    s.data.dim()
                )));
            }
            if s.data.x == ood_val.x {
                return Err(Error::Schema(format!(
                    "OOD validation set duplicates test set `{}`",
                    s.name
                )));
            }
        }
        if ood_val.dim() != d {
            return Err(Error::dim("OOD validation dimension differs from IND"));
        }
        Ok(Self {
            ind_test,
            ood,
            ood_val,
        })
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn round_f32(v: f64) -> f64 {
    v as f32 as f64
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Geometry of a Gaussian-blob classification problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub classes: usize,
    pub dim: usize,
    /// Distance between the two closest class means.
    pub margin: f64,
}

impl BlobSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::param(format!("need ≥ 2 classes, got {}", self.classes)));
        }
        if self.dim == 0 {
            return Err(Error::param("dimension must be ≥ 1"));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::param(format!("margin must be ≥ 0, got {}", self.margin)));
        }
        Ok(())
    }

    /// Class means. For `C ≤ D` these are the centered simplex vertices
    /// `eᵢ − 1/C` scaled to pairwise distance `margin`; otherwise fixed
    /// pseudo-random points rescaled so the nearest pair is `margin` apart.
    pub fn means(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let (c, d) = (self.classes, self.dim);
        let means = if c <= d {
            let s = self.margin / std::f64::consts::SQRT_2;
            (0..c)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            let e = if i == j { 1.0 } else { 0.0 };
                            let centre = if j < c { 1.0 / c as f64 } else { 0.0 };
                            s * (e - centre)
                        })
                        .collect()
                })
                .collect()
        } else {
            let mut r = rng(MEANS_SEED ^ ((c as u64) << 32) ^ d as u64);
            let raw: Vec<Vec<f64>> = (0..c)
                .map(|_| (0..d).map(|_| normal(&mut r)).collect())
                .collect();
            let mut nearest = f64::INFINITY;
            for i in 0..c {
                for j in i + 1..c {
                    nearest = nearest.min(dist(&raw[i], &raw[j]));
                }
            }
            let s = self.margin / nearest;
            raw.into_iter()
                .map(|m| m.into_iter().map(|v| v * s).collect())
                .collect()
        };
        Ok(means)
    }

    /// Per-class translation of length `shift` pointing from each class mean
    /// toward the centroid of all means. Shifted blobs crowd the region
    /// between classes while staying close to the training data.
    pub fn shift_offsets(&self, shift: f64) -> Result<Vec<Vec<f64>>> {
        let means = self.means()?;
        let d = self.dim;
        let centroid: Vec<f64> = (0..d)
            .map(|j| means.iter().map(|m| m[j]).sum::<f64>() / means.len() as f64)
            .collect();
        Ok(means
            .iter()
            .map(|m| {
                let to_c: Vec<f64> = centroid.iter().zip(m).map(|(c, v)| c - v).collect();
                let norm = to_c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    vec![0.0; d]
                } else {
                    to_c.iter().map(|v| shift * v / norm).collect()
                }
            })
            .collect())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn sample_blobs(
    spec: &BlobSpec,
    per_class_n: usize,
    offsets: Option<&[Vec<f64>]>,
    seed: u64,
) -> Result<(Vec<f64>, Vec<u32>)> {
    if per_class_n == 0 {
        return Err(Error::Empty("per_class_n must be ≥ 1".into()));
    }
    let means = spec.means()?;
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(spec.classes * per_class_n * spec.dim);
    let mut labels = Vec::with_capacity(spec.classes * per_class_n);
    let zero = vec![0.0; spec.dim];
    for (k, mean) in means.iter().enumerate() {
        let offset = offsets.map_or(&zero, |o| &o[k]);
        for _ in 0..per_class_n {
            for (m, o) in mean.iter().zip(offset) {
                data.push(round_f32(m + o + normal(&mut r)));
            }
            labels.push(k as u32);
        }
    }
    Ok((data, labels))
}

/// `C` unit-variance Gaussian blobs, `per_class_n` samples each, rows
/// grouped by class.
pub fn gen_blobs(spec: &BlobSpec, per_class_n: usize, seed: u64, split: Split) -> Result<LabeledDataset> {
    let (data, labels) = sample_blobs(spec, per_class_n, None, seed)?;
    let x = Tensor::matrix(labels.len(), spec.dim, data)?;
    LabeledDataset::new(x, labels, spec.classes, split)
}

/// Near-OOD: every IND blob translated by `shift` toward the centroid of the
/// class means (see [`BlobSpec::shift_offsets`]), `⌈n / C⌉` samples per
/// class. Unlabeled.
pub fn gen_shifted_blobs(spec: &BlobSpec, n: usize, shift: f64, seed: u64) -> Result<LabeledDataset> {
    if !shift.is_finite() {
        return Err(Error::param("shift must be finite"));
    }
    let per_class = n.div_ceil(spec.classes);
    let offsets = spec.shift_offsets(shift)?;
    let (data, _) = sample_blobs(spec, per_class, Some(&offsets), seed)?;
    let rows = data.len() / spec.dim;
    let x = Tensor::matrix(rows, spec.dim, data)?;
    LabeledDataset::unlabeled(x, spec.classes, Split::Test)
}

/// Far-OOD spherical shell: uniform direction, radius `radius + width·N(0,1)`.
pub fn gen_ring(
    n: usize,
    dim: usize,
    radius: f64,
    width: f64,
    class_count: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::Empty("ring needs n ≥ 1".into()));
    }
    if !(width >= 0.0) || !(radius >= 0.0) || dim == 0 {
        return Err(Error::param(format!(
            "ring needs radius ≥ 0, width ≥ 0, dim ≥ 1 (got {radius}, {width}, {dim})"
        )));
    }
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let dir: Vec<f64> = loop {
            let v: Vec<f64> = (0..dim).map(|_| normal(&mut r)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        };
        let rad = radius + width * normal(&mut r);
        data.extend(dir.iter().map(|u| round_f32(u * rad)));
    }
    LabeledDataset::unlabeled(Tensor::matrix(n, dim, data)?, class_count, Split::Test)
}

/// Far-OOD: uniform samples from `[-half_width, half_width]^dim`.
pub fn gen_uniform_cube(
    n: usize,
    dim: usize,
    half_width: f64,
    class_count: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::Empty("cube needs n ≥ 1".into()));
    }
    if !(half_width > 0.0) || dim == 0 {
        return Err(Error::param(format!("cube half width must be > 0, got {half_width}")));
    }
    let mut r = rng(seed);
    let data = (0..n * dim)
        .map(|_| round_f32(r.random_range(-half_width..half_width)))
        .collect();
    LabeledDataset::unlabeled(Tensor::matrix(n, dim, data)?, class_count, Split::Test)
}

/// Parameters of the desk-scale benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeskPreset {
    pub blobs: BlobSpec,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
    pub ood_n: usize,
    pub near_shift: f64,
    pub ring_radius: f64,
    pub ring_width: f64,
    pub cube_half_width: f64,
}

impl Default for DeskPreset {
    fn default() -> Self {
        Self {
            blobs: BlobSpec {
                classes: 4,
                dim: 8,
                margin: 6.0,
            },
            train_per_class: 250,
            val_per_class: 100,
            test_per_class: 250,
            ood_n: 1000,
            near_shift: 2.0,
            ring_radius: 10.0,
            ring_width: 1.0,
            cube_half_width: 10.0,
        }
    }
}

/// All splits of a generated benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskData {
    pub train: LabeledDataset,
    pub ind_val: LabeledDataset,
    pub suite: OodSuite,
}

impl DeskPreset {
    /// Generates every split from one seed; each split draws from its own
    /// derived sub-seed.
    pub fn generate(&self, seed: u64) -> Result<DeskData> {
        let sub = |k: u64| seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k);
        let spec = &self.blobs;
        let (c, d) = (spec.classes, spec.dim);
        let train = gen_blobs(spec, self.train_per_class, sub(1), Split::Train)?;
        let ind_val = gen_blobs(spec, self.val_per_class, sub(2), Split::Val)?;
        let ind_test = gen_blobs(spec, self.test_per_class, sub(3), Split::Test)?;
        let near = gen_shifted_blobs(spec, self.ood_n, self.near_shift, sub(4))?;
        let ring = gen_ring(self.ood_n, d, self.ring_radius, self.ring_width, c, sub(5))?;
        let cube = gen_uniform_cube(self.ood_n, d, self.cube_half_width, c, sub(6))?;

        // Held-out near-OOD sample, like a benchmark's validation OOD classes.
        let mut ood_val = gen_shifted_blobs(spec, self.val_per_class * c, self.near_shift, sub(7))?;
        ood_val.split = Split::Val;

        let ood = vec![
            OodSet {
                name: "shifted".into(),
                group: OodGroup::Near,
                data: near,
            },
            OodSet {
                name: "ring".into(),
                group: OodGroup::Far,
                data: ring,
            },
            OodSet {
                name: "cube".into(),
                group: OodGroup::Far,
                data: cube,
            },
        ];
        Ok(DeskData {
            train,
            ind_val,
            suite: OodSuite::new(ind_test, ood, ood_val)?,
        })
    }
}

/// Serializes to the little-endian `OODD` v1 layout.
pub fn encode_dataset(ds: &LabeledDataset) -> Vec<u8> {
    let (n, d) = (ds.len(), ds.dim());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n * (d + 1));
    out.extend_from_slice(MAGIC);
    for v in [VERSION, n as u32, d as u32, ds.class_count as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in ds.x.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for &l in &ds.labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take4(&mut self, what: &str) -> Result<[u8; 4]> {
        let chunk = self.bytes.get(self.pos..self.pos + 4).ok_or_else(|| Error::Parse {
            offset: self.pos,
            message: format!("truncated while reading {what}"),
        })?;
        self.pos += 4;
        Ok(chunk.try_into().unwrap())
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.take4(what).map(u32::from_le_bytes)
    }
}

/// Parses the `OODD` v1 layout. Features are promoted to `f64`.
pub fn decode_dataset(bytes: &[u8], split: Split) -> Result<LabeledDataset> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take4("magic")? != MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad magic, expected `OODD`".into(),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Parse {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let n = r.u32("N")? as usize;
    let d = r.u32("D")? as usize;
    let c = r.u32("C")? as usize;
    if n == 0 || d == 0 {
        return Err(Error::Schema(format!("dataset must have N ≥ 1 and D ≥ 1, got N={n}, D={d}")));
    }
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n * d {
        let at = r.pos;
        let v = f32::from_le_bytes(r.take4("features")?);
        if !v.is_finite() {
            return Err(Error::Parse {
                offset: at,
                message: format!("feature {i} is not finite"),
            });
        }
        data.push(v as f64);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(r.u32("labels")?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Parse {
            offset: r.pos,
            message: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    LabeledDataset::new(Tensor::matrix(n, d, data)?, labels, c, split)
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_dataset(ds)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>, split: Split) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes, split)
}

/// CSV with header `x0,…,x{D-1},label`; unlabeled rows get label `-1`.
pub fn to_csv(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..ds.dim()).map(|j| format!("x{j}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",label\n");
    for (row, &l) in ds.x.row_iter().zip(&ds.labels) {
        for v in row {
            write!(out, "{},", *v as f32).unwrap();
        }
        if l == UNLABELED {
            out.push_str("-1\n");
        } else {
            writeln!(out, "{l}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blobs() -> BlobSpec {
        BlobSpec {
            classes: 2,
            dim: 2,
            margin: 6.0,
        }
    }

    #[test]
    fn blobs_are_separated_by_margin() {
        let spec = two_blobs();
        let m = spec.means().unwrap();
        assert!((dist(&m[0], &m[1]) - 6.0).abs() < 1e-12);
        let ds = gen_blobs(&spec, 20, 3, Split::Train).unwrap();
        let rows: Vec<&[f64]> = ds.x.row_iter().collect();
        let mut nearest = f64::INFINITY;
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if ds.labels[i] != ds.labels[j] {
                    nearest = nearest.min(dist(rows[i], rows[j]));
                }
            }
        }
        assert!(nearest >= 2.0, "nearest cross-class distance {nearest}");
    }

    #[test]
    fn many_class_means_keep_margin() {
        let spec = BlobSpec {
            classes: 20,
            dim: 3,
            margin: 4.0,
        };
        let m = spec.means().unwrap();
        let mut nearest = f64::INFINITY;
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                nearest = nearest.min(dist(&m[i], &m[j]));
            }
        }
        assert!((nearest - 4.0).abs() < 1e-9);
    }

    #[test]
    fn empty_class_is_rejected() {
        assert!(matches!(
            gen_blobs(&two_blobs(), 0, 1, Split::Train),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn negative_ring_width_is_rejected() {
        assert!(matches!(
            gen_ring(10, 2, 5.0, -1.0, 2, 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = DeskPreset::default().generate(7).unwrap();
        let b = DeskPreset::default().generate(7).unwrap();
        assert_eq!(encode_dataset(&a.train), encode_dataset(&b.train));
        assert_eq!(a, b);
        let c = DeskPreset::default().generate(8).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn zero_shift_uses_the_ind_generator() {
        let spec = two_blobs();
        let ind = gen_blobs(&spec, 5, 11, Split::Test).unwrap();
        let shifted = gen_shifted_blobs(&spec, 10, 0.0, 11).unwrap();
        assert_eq!(ind.x, shifted.x);
    }

    #[test]
    fn shift_moves_every_mean_toward_the_centroid() {
        let spec = DeskPreset::default().blobs;
        let means = spec.means().unwrap();
        let radius = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (m, o) in means.iter().zip(spec.shift_offsets(2.5).unwrap()) {
            assert!((radius(&o) - 2.5).abs() < 1e-12);
            let moved: Vec<f64> = m.iter().zip(&o).map(|(a, b)| a + b).collect();
            assert!((radius(m) - radius(&moved) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_built_file_parses() {
        let mut bytes = b"OODD".to_vec();
        for v in [1u32, 2, 2, 3] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in [1.0f32, -2.0, 0.5, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&UNLABELED.to_le_bytes());
        let ds = decode_dataset(&bytes, Split::Test).unwrap();
        assert_eq!(ds.x.shape(), &[2, 2]);
        assert_eq!(ds.x.data(), &[1.0, -2.0, 0.5, 4.0]);
        assert_eq!(ds.labels, vec![2, UNLABELED]);
        assert_eq!(ds.class_count, 3);
        assert_eq!(encode_dataset(&ds), bytes);
    }

    #[test]
    fn truncated_file_reports_offset() {
        let ds = gen_blobs(&two_blobs(), 3, 1, Split::Test).unwrap();
        let bytes = encode_dataset(&ds);
        let cut = &bytes[..bytes.len() - 3];
        match decode_dataset(cut, Split::Test) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, bytes.len() - 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            decode_dataset(b"OODX", Split::Test),
            Err(Error::Parse { offset: 0, .. })
        ));
    }

    #[test]
    fn out_of_range_label_is_schema_error() {
        let mut bytes = b"OODD".to_vec();
        for v in [1u32, 1, 1, 2] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&5u32.to_le_bytes());
        assert!(matches!(decode_dataset(&bytes, Split::Test), Err(Error::Schema(_))));
    }

    #[test]
    fn csv_has_expected_header() {
        let ds = gen_ring(2, 3, 1.0, 0.0, 2, 1).unwrap();
        let csv = to_csv(&ds);
        assert!(csv.starts_with("x0,x1,x2,label\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().ends_with(",-1"));
    }
}
