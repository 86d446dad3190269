use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::transform::{FeatureMatrix, FeatureRecord, FeatureSet};

/// Top-k principal axes of flattened feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x d`, row-major, orthonormal rows.
    pub components: Vec<f64>,
    /// Covariance eigenvalue of each retained component, non-increasing.
    pub explained_variance: Vec<f64>,
    pub k: usize,
    pub d: usize,
}

/// Fits PCA on flattened training vectors (all of equal length `d`).
///
/// Components are ordered by non-increasing eigenvalue; each is signed so its
/// largest-magnitude coordinate is positive.
pub fn pca_fit_rows(rows: &[&[f32]], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    let d = rows.first().map_or(0, |r| r.len());
    if d == 0 {
        return Err(Error::Dimension("PCA needs non-empty training vectors".into()));
    }
    if k == 0 || k > d {
        return Err(Error::Dimension(format!("PCA k = {k} must lie in 1..={d}")));
    }
    if n < k + 1 {
        return Err(Error::Dimension(format!(
            "PCA with k = {k} needs at least {} training vectors, got {n}",
            k + 1
        )));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension("PCA training vectors differ in length".into()));
    }
    let mut mean = vec![0.0f64; d];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r.iter()) {
            *m += f64::from(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| f64::from(rows[i][j]) - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut components = Vec::with_capacity(k * d);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let col = eig.eigenvectors.column(idx);
        let pivot = (0..d).fold(0, |best, j| if col[j].abs() > col[best].abs() { j } else { best });
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        components.extend(col.iter().map(|v| v * sign));
        explained_variance.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        k,
        d,
    })
}

/// Fits PCA on `rows x 2` feature matrices flattened row-major.
pub fn pca_fit(train: &[FeatureMatrix], k: usize) -> Result<PcaModel> {
    let rows: Vec<&[f32]> = train.iter().map(|m| m.values.as_slice()).collect();
    pca_fit_rows(&rows, k)
}

/// `components * (x - mean)`.
pub fn pca_project(m: &PcaModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    m.project(&features.values)
}

impl PcaModel {
    pub fn project(&self, x: &[f32]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::Dimension(format!(
                "PCA input has {} values, model expects {}",
                x.len(),
                self.d
            )));
        }
        let centered: Vec<f64> = x
            .iter()
            .zip(&self.mean)
            .map(|(&v, m)| f64::from(v) - m)
            .collect();
        Ok(self
            .components
            .chunks_exact(self.d)
            .map(|c| c.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Maps coordinates back to the input space (mean included).
    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.k {
            return Err(Error::Dimension(format!(
                "PCA coordinates have {} values, model keeps {}",
                z.len(),
                self.k
            )));
        }
        let mut out = self.mean.clone();
        for (c, &zi) in self.components.chunks_exact(self.d).zip(z) {
            for (o, &ci) in out.iter_mut().zip(c) {
                *o += ci * zi;
            }
        }
        Ok(out)
    }

    /// Projects every record; the `k` coordinates become `k/2` rows of two.
    pub fn project_set(&self, set: &FeatureSet) -> Result<FeatureSet> {
        if !self.k.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "PCA k = {} cannot be laid out as rows of two",
                self.k
            )));
        }
        let records = set
            .records
            .iter()
            .map(|r| {
                let z = self.project(&r.values)?;
                Ok(FeatureRecord {
                    class_id: r.class_id,
                    snr_db: r.snr_db,
                    split: r.split,
                    values: z.into_iter().map(|v| v as f32).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureSet {
            repr: set.repr,
            rows: self.k / 2,
            bin_freqs: None,
            projected: true,
            records,
        })
    }
}
