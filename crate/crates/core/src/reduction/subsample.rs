use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seed;
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsampleMethod {
    Random,
    Uniform,
    /// Rows with the largest mean magnitude over the training set.
    HighMagnitudeRank,
}

impl SubsampleMethod {
    pub fn name(self) -> &'static str {
        match self {
            SubsampleMethod::Random => "random",
            SubsampleMethod::Uniform => "uniform",
            SubsampleMethod::HighMagnitudeRank => "hmr",
        }
    }
}

impl fmt::Display for SubsampleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubsampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SubsampleMethod::Random),
            "uniform" => Ok(SubsampleMethod::Uniform),
            "hmr" | "high-magnitude-rank" => Ok(SubsampleMethod::HighMagnitudeRank),
            _ => Err(Error::Config(format!("unknown subsampling method '{s}'"))),
        }
    }
}

/// Row subsampling applied identically to every record of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleSpec {
    pub method: SubsampleMethod,
    pub rate: f64,
    pub seed: u64,
    /// Sorted row indices, once resolved.
    pub indices: Option<Vec<usize>>,
}

impl SubsampleSpec {
    pub fn new(method: SubsampleMethod, rate: f64, seed: u64) -> Self {
        Self {
            method,
            rate,
            seed,
            indices: None,
        }
    }
}

/// Rows kept out of `rows`: `round(rate * rows)`, ties to even, at least 1.
pub fn subsample_count(rate: f64, rows: usize) -> Result<usize> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Config(format!("subsampling rate {rate} must lie in (0, 1]")));
    }
    if rate * (rows as f64) < 1.0 {
        return Err(Error::Dimension(format!(
            "subsampling rate {rate} keeps no rows out of {rows}"
        )));
    }
    Ok(((rate * rows as f64).round_ties_even() as usize).clamp(1, rows))
}

/// Chooses the row indices for `spec` on matrices of `rows` rows.
///
/// `train` supplies the flattened training matrices; only
/// [`SubsampleMethod::HighMagnitudeRank`] reads them.
pub fn subsample_resolve<'a, I>(spec: &SubsampleSpec, rows: usize, train: I) -> Result<SubsampleSpec>
where
    I: IntoIterator<Item = &'a [f32]>,
{
    let count = subsample_count(spec.rate, rows)?;
    let indices = match spec.method {
        SubsampleMethod::Uniform => {
            let stride = ((1.0 / spec.rate).round_ties_even() as usize).max(1);
            let idx: Vec<usize> = (0..count).map(|i| i * stride).collect();
            if idx.last().is_some_and(|&last| last >= rows) {
                return Err(Error::Dimension(format!(
                    "uniform stride {stride} runs past {rows} rows"
                )));
            }
            idx
        }
        SubsampleMethod::Random => {
            let mut rng = seed::rng(spec.seed);
            let mut idx = rand::seq::index::sample(&mut rng, rows, count).into_vec();
            idx.sort_unstable();
            idx
        }
        SubsampleMethod::HighMagnitudeRank => {
            let mut sums = vec![0.0f64; rows];
            let mut n = 0usize;
            for m in train {
                if m.len() != 2 * rows {
                    return Err(Error::Dimension(format!(
                        "training matrix has {} values, expected {}",
                        m.len(),
                        2 * rows
                    )));
                }
                for (s, pair) in sums.iter_mut().zip(m.chunks_exact(2)) {
                    *s += f64::from(pair[0]).hypot(f64::from(pair[1]));
                }
                n += 1;
            }
            if n == 0 {
                return Err(Error::Data(
                    "high-magnitude-rank subsampling needs training records".into(),
                ));
            }
            let mut order: Vec<usize> = (0..rows).collect();
            order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
            let mut idx = order[..count].to_vec();
            idx.sort_unstable();
            idx
        }
    };
    Ok(SubsampleSpec {
        indices: Some(indices),
        ..spec.clone()
    })
}

/// Keeps the resolved rows, in order.
pub fn subsample_apply(spec: &SubsampleSpec, features: &FeatureMatrix) -> Result<FeatureMatrix> {
    let idx = spec
        .indices
        .as_ref()
        .ok_or_else(|| Error::Config("subsampling indices not resolved".into()))?;
    features.select_rows(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::Representation;
    use proptest::prelude::*;

    fn matrix(rows: usize) -> FeatureMatrix {
        FeatureMatrix {
            values: (0..2 * rows).map(|v| v as f32).collect(),
            rows,
            repr: Representation::FreqAmpPhase,
            bin_freqs: None,
        }
    }

    #[test]
    fn uniform_quarter() {
        let s = subsample_resolve(&SubsampleSpec::new(SubsampleMethod::Uniform, 0.25, 0), 128, [])
            .unwrap();
        let idx = s.indices.unwrap();
        assert_eq!(idx.len(), 32);
        assert_eq!(idx, (0..32).map(|i| 4 * i).collect::<Vec<_>>());
    }

    #[test]
    fn random_is_seeded() {
        let spec = SubsampleSpec::new(SubsampleMethod::Random, 0.125, 77);
        let a = subsample_resolve(&spec, 128, []).unwrap();
        let b = subsample_resolve(&spec, 128, []).unwrap();
        assert_eq!(a, b);
        let idx = a.indices.unwrap();
        assert_eq!(idx.len(), 16);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let other = SubsampleSpec::new(SubsampleMethod::Random, 0.125, 78);
        assert_ne!(subsample_resolve(&other, 128, []).unwrap().indices.unwrap(), idx);
    }

    /// Ranks rows by mean magnitude with an explicit per-record loop.
    fn brute_force_top(train: &[Vec<f32>], rows: usize, count: usize) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = (0..rows)
            .map(|r| {
                let mean = train
                    .iter()
                    .map(|m| {
                        let (a, b) = (f64::from(m[2 * r]), f64::from(m[2 * r + 1]));
                        (a * a + b * b).sqrt()
                    })
                    .sum::<f64>()
                    / train.len() as f64;
                (mean, r)
            })
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        let mut top: Vec<usize> = scored[..count].iter().map(|s| s.1).collect();
        top.sort_unstable();
        top
    }

    #[test]
    fn high_magnitude_rank_finds_energetic_rows() {
        let rows = 16;
        let mut rng = crate::seed::rng(4);
        let train: Vec<Vec<f32>> = (0..30)
            .map(|_| {
                (0..2 * rows)
                    .map(|j| {
                        let base: f32 = rand::Rng::random::<f32>(&mut rng) - 0.5;
                        if j / 2 == 5 || j / 2 == 9 { 10.0 * (base + 1.0) } else { base }
                    })
                    .collect()
            })
            .collect();
        let spec = SubsampleSpec::new(SubsampleMethod::HighMagnitudeRank, 2.0 / rows as f64, 0);
        let got = subsample_resolve(&spec, rows, train.iter().map(|v| v.as_slice())).unwrap();
        assert_eq!(got.indices.as_deref(), Some(&[5usize, 9][..]));
        assert_eq!(brute_force_top(&train, rows, 2), vec![5, 9]);
        let spec4 = SubsampleSpec::new(SubsampleMethod::HighMagnitudeRank, 0.25, 0);
        let got4 = subsample_resolve(&spec4, rows, train.iter().map(|v| v.as_slice())).unwrap();
        assert_eq!(got4.indices.unwrap(), brute_force_top(&train, rows, 4));
    }

    #[test]
    fn high_magnitude_rank_needs_data() {
        let spec = SubsampleSpec::new(SubsampleMethod::HighMagnitudeRank, 0.5, 0);
        assert!(matches!(subsample_resolve(&spec, 8, []), Err(Error::Data(_))));
    }

    #[test]
    fn apply_shapes() {
        let m = matrix(128);
        let all = subsample_resolve(&SubsampleSpec::new(SubsampleMethod::Uniform, 1.0, 0), 128, [])
            .unwrap();
        assert_eq!(subsample_apply(&all, &m).unwrap(), m);
        let q = subsample_resolve(&SubsampleSpec::new(SubsampleMethod::Random, 0.25, 3), 128, [])
            .unwrap();
        assert_eq!(subsample_apply(&q, &m).unwrap().rows, 32);
        // Band-selected 52 rows at 1/8: 6.5 rounds to 6.
        assert_eq!(subsample_count(0.125, 52).unwrap(), 6);
        let e = subsample_resolve(&SubsampleSpec::new(SubsampleMethod::Uniform, 0.125, 0), 52, [])
            .unwrap();
        assert_eq!(subsample_apply(&e, &matrix(52)).unwrap().rows, 6);
    }

    #[test]
    fn bad_indices_and_rates() {
        let spec = SubsampleSpec {
            indices: Some(vec![0, 200]),
            ..SubsampleSpec::new(SubsampleMethod::Random, 0.5, 0)
        };
        assert!(matches!(subsample_apply(&spec, &matrix(128)), Err(Error::Dimension(_))));
        let unresolved = SubsampleSpec::new(SubsampleMethod::Random, 0.5, 0);
        assert!(subsample_apply(&unresolved, &matrix(4)).is_err());
        assert!(subsample_count(0.0, 10).is_err());
        assert!(subsample_count(1.5, 10).is_err());
        assert!(subsample_count(0.05, 10).is_err());
    }

    proptest! {
        #[test]
        fn count_and_order_invariants(
            rows in 8usize..200, denom in prop::sample::select(vec![1usize, 2, 4, 8]), seed: u64
        ) {
            let rate = 1.0 / denom as f64;
            let want = (rate * rows as f64).round_ties_even() as usize;
            for method in [SubsampleMethod::Random, SubsampleMethod::Uniform] {
                let s = subsample_resolve(&SubsampleSpec::new(method, rate, seed), rows, []).unwrap();
                let idx = s.indices.unwrap();
                prop_assert_eq!(idx.len(), want.max(1));
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(idx.iter().all(|&i| i < rows));
            }
            let train: Vec<Vec<f32>> = (0..5)
                .map(|r| (0..2 * rows).map(|j| ((j * 31 + r * 7) % 13) as f32).collect())
                .collect();
            let a = subsample_resolve(
                &SubsampleSpec::new(SubsampleMethod::HighMagnitudeRank, rate, seed),
                rows,
                train.iter().map(|v| v.as_slice()),
            ).unwrap();
            let b = subsample_resolve(
                &SubsampleSpec::new(SubsampleMethod::HighMagnitudeRank, rate, seed ^ 1),
                rows,
                train.iter().rev().map(|v| v.as_slice()),
            ).unwrap();
            prop_assert_eq!(a.indices, b.indices);
        }
    }
}
