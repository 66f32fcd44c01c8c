//! Dataset ingestion and preprocessing: CSV loading, PCA reduction, min-max
//! rescaling to `[-1, 1]`, the semisupervised train/test split, and the
//! separable toy generator.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_rows, Error, Result};

pub const TRAIN_NORMALS: usize = 30;
pub const TEST_NORMALS: usize = 25;
pub const TEST_ANOMALIES: usize = 25;
pub const REDUCED_WIDTH: usize = 5;

pub const NORMAL: u8 = 0;
pub const ANOMALOUS: u8 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub name: String,
    pub rows: Vec<Vec<f64>>,
    /// `0` normal, `1` anomalous.
    pub labels: Vec<u8>,
}

impl RawDataset {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        check_len(rows.len(), labels.len())?;
        check_rows(&rows, "dataset rows")?;
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::BadLabel {
                row,
                value: labels[row].to_string(),
            });
        }
        Ok(Self {
            name: name.into(),
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let anomalous = self.labels.iter().filter(|&&l| l == ANOMALOUS).count();
        (self.labels.len() - anomalous, anomalous)
    }

    /// Writes `f0,…,f{d-1},label` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.width()).map(|k| format!("f{k}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Loads a headed CSV. Every column except `label_column` is a numeric
/// feature, kept in header order. Row numbers in errors are 1-based data
/// rows (the header is not counted).
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    read_csv(file, &name, label_column)
}

pub fn read_csv<R: Read>(reader: R, name: &str, label_column: &str) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_no = r + 1;
        let mut row = Vec::with_capacity(header.len() - 1);
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if c == label_idx {
                let label = match cell.parse::<f64>() {
                    Ok(0.0) => NORMAL,
                    Ok(1.0) => ANOMALOUS,
                    _ => {
                        return Err(Error::BadLabel {
                            row: row_no,
                            value: cell.to_string(),
                        })
                    }
                };
                labels.push(label);
            } else {
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::NonNumeric {
                        row: row_no,
                        column: header.get(c).cloned().unwrap_or_else(|| c.to_string()),
                        value: cell.to_string(),
                    })?;
                row.push(v);
            }
        }
        rows.push(row);
    }
    RawDataset::new(name, rows, labels)
}

/// Mean and principal directions of a PCA fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaRecord {
    pub mean: Vec<f64>,
    /// One unit-norm direction per retained component.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaRecord {
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.mean.len(), x.len())?;
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((w, v), m)| w * (v - m))
                    .sum()
            })
            .collect())
    }
}

/// Mean-centers the rows and projects them on the top-`k` principal
/// directions. Each direction's sign is fixed so that its largest-magnitude
/// entry is positive.
pub fn pca_reduce(data: &RawDataset, k: usize) -> Result<(RawDataset, PcaRecord)> {
    let d = check_rows(&data.rows, "dataset rows")?;
    let n = data.rows.len();
    if k == 0 || d < k {
        return Err(Error::invalid(format!(
            "PCA to {k} components needs at least {k} columns, got {d}"
        )));
    }
    if n < k + 1 {
        return Err(Error::invalid(format!(
            "PCA to {k} components needs at least {} rows, got {n}",
            k + 1
        )));
    }
    let mean: Vec<f64> = (0..d)
        .map(|c| data.rows.iter().map(|r| r[c]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| data.rows[i][j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::invalid("SVD did not produce right singular vectors"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut dir: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = dir
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            dir.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(dir);
        let s = svd.singular_values[idx];
        explained_variance.push(s * s / (n - 1) as f64);
    }
    let pca = PcaRecord {
        mean,
        components,
        explained_variance,
    };
    let rows = data
        .rows
        .iter()
        .map(|r| pca.transform(r))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        RawDataset {
            name: data.name.clone(),
            rows,
            labels: data.labels.clone(),
        },
        pca,
    ))
}

/// Per-feature `(min, max)` of the training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let d = check_rows(rows, "scaler input")?;
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for c in 0..d {
                min[c] = min[c].min(r[c]);
                max[c] = max[c].max(r[c]);
            }
        }
        Ok(Self { min, max })
    }

    /// `2(v - min)/(max - min) - 1`, unclamped; constant features map to 0.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.min.len(), x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(c, &v)| {
                let span = self.max[c] - self.min[c];
                if span > 0.0 {
                    2.0 * (v - self.min[c]) / span - 1.0
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Scaled training rows, scaled test rows and the fitted scaler.
pub type Scaled = (Vec<Vec<f64>>, Vec<Vec<f64>>, MinMaxScaler);

/// Fits the scaler on `train` and applies it to both sets.
pub fn rescale_minmax(train: &[Vec<f64>], test: &[Vec<f64>]) -> Result<Scaled> {
    let scaler = MinMaxScaler::fit(train)?;
    let train = scaler.transform_rows(train)?;
    let test = scaler.transform_rows(test)?;
    Ok((train, test, scaler))
}

/// Row indices chosen for training and testing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    /// Normal test rows first, then anomalous ones.
    pub test: Vec<usize>,
    pub test_labels: Vec<u8>,
}

/// Seeded draw without replacement of 30 training normals and a 25/25
/// test set.
pub fn sample_split(data: &RawDataset, seed: u64) -> Result<SplitIndices> {
    let normals: Vec<usize> = (0..data.len())
        .filter(|&i| data.labels[i] == NORMAL)
        .collect();
    let anomalies: Vec<usize> = (0..data.len())
        .filter(|&i| data.labels[i] == ANOMALOUS)
        .collect();
    let need_normal = TRAIN_NORMALS + TEST_NORMALS;
    if normals.len() < need_normal || anomalies.len() < TEST_ANOMALIES {
        return Err(Error::InsufficientClasses {
            need_normal,
            need_anomalous: TEST_ANOMALIES,
            normal: normals.len(),
            anomalous: anomalies.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked_normal = index::sample(&mut rng, normals.len(), need_normal);
    let picked_anomalous = index::sample(&mut rng, anomalies.len(), TEST_ANOMALIES);
    let normal_rows: Vec<usize> = picked_normal.iter().map(|i| normals[i]).collect();
    let train = normal_rows[..TRAIN_NORMALS].to_vec();
    let mut test = normal_rows[TRAIN_NORMALS..].to_vec();
    test.extend(picked_anomalous.iter().map(|i| anomalies[i]));
    let mut test_labels = vec![NORMAL; TEST_NORMALS];
    test_labels.extend(std::iter::repeat_n(ANOMALOUS, TEST_ANOMALIES));
    Ok(SplitIndices {
        train,
        test,
        test_labels,
    })
}

/// A dataset ready for fitting: 30 normal training rows and a labelled
/// 25/25 test set, all scaled with training statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessedDataset {
    pub name: String,
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
    pub test_labels: Vec<u8>,
    pub scaler: MinMaxScaler,
    pub pca: PcaRecord,
    pub split: SplitIndices,
}

/// PCA on the full feature matrix, then split, then scaling fitted on the
/// training rows.
pub fn prepare(data: &RawDataset, seed: u64) -> Result<ProcessedDataset> {
    let (reduced, pca) = pca_reduce(data, REDUCED_WIDTH)?;
    let split = sample_split(&reduced, seed)?;
    let pick = |idx: &[usize]| {
        idx.iter()
            .map(|&i| reduced.rows[i].clone())
            .collect::<Vec<_>>()
    };
    let (train, test, scaler) = rescale_minmax(&pick(&split.train), &pick(&split.test))?;
    Ok(ProcessedDataset {
        name: data.name.clone(),
        train,
        test,
        test_labels: split.test_labels.clone(),
        scaler,
        pca,
        split,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub n_normal: usize,
    pub n_anomalous: usize,
    pub dim: usize,
    /// Anomalies sit at a distance drawn from `[lo, hi]` on either side of
    /// the plane.
    pub offset_band: (f64, f64),
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n_normal: TRAIN_NORMALS + TEST_NORMALS,
            n_anomalous: TEST_ANOMALIES,
            dim: REDUCED_WIDTH,
            offset_band: (0.4, 1.0),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyDataset {
    pub data: RawDataset,
    /// Unit normal of the plane holding the normal rows.
    pub plane_normal: Vec<f64>,
}

/// Normal rows are uniform points of `[-1, 1]^dim` projected onto a random
/// hyperplane through the origin; anomalies are projected points shifted
/// along the plane normal. Normal rows come first.
pub fn generate_toy(config: &ToyConfig) -> Result<ToyDataset> {
    if config.n_normal == 0 || config.n_anomalous == 0 {
        return Err(Error::invalid(
            "toy data needs at least one row of each class",
        ));
    }
    if config.dim < 2 {
        return Err(Error::invalid("toy data needs at least two dimensions"));
    }
    let (lo, hi) = config.offset_band;
    if !(0.0 <= lo && lo <= hi) {
        return Err(Error::invalid(format!("invalid offset band ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w = loop {
        let v: Vec<f64> = (0..config.dim)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            break v.into_iter().map(|a| a / norm).collect::<Vec<f64>>();
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let on_plane = |rng: &mut ChaCha8Rng| {
        let u: Vec<f64> = (0..config.dim)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let p = dot(&u, &w);
        let mut x: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - p * b).collect();
        // a second pass removes the residual left by rounding
        let p = dot(&x, &w);
        x.iter_mut().zip(&w).for_each(|(a, b)| *a -= p * b);
        x
    };

    let mut rows = Vec::with_capacity(config.n_normal + config.n_anomalous);
    let mut labels = Vec::with_capacity(rows.capacity());
    for _ in 0..config.n_normal {
        rows.push(on_plane(&mut rng));
        labels.push(NORMAL);
    }
    for _ in 0..config.n_anomalous {
        let x = on_plane(&mut rng);
        let magnitude = rng.random_range(lo..=hi);
        let delta = if rng.random_bool(0.5) {
            magnitude
        } else {
            -magnitude
        };
        rows.push(x.iter().zip(&w).map(|(a, b)| a + delta * b).collect());
        labels.push(ANOMALOUS);
    }
    Ok(ToyDataset {
        data: RawDataset::new("toy", rows, labels)?,
        plane_normal: w,
    })
}
