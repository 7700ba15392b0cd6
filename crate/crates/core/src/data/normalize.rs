use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    None,
    /// Per-feature rescale to `[0, 1]`.
    #[default]
    MinMax,
    /// Per-feature `(x - mean) / std` with the population standard deviation.
    ZScore,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Scheme::None),
            "minmax" | "min-max" => Ok(Scheme::MinMax),
            "zscore" | "z-score" => Ok(Scheme::ZScore),
            other => Err(format!("unknown normalization scheme {other:?}")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::None => "none",
            Scheme::MinMax => "minmax",
            Scheme::ZScore => "zscore",
        })
    }
}

/// Affine per-feature transform `x' = (x - shift) / scale`, fitted on one
/// dataset and reapplied verbatim to others. Constant columns keep
/// `shift = 0, scale = 1` and are flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub scheme: Scheme,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub constant: Vec<bool>,
}

impl NormalizationParams {
    pub fn identity(p: usize) -> Self {
        NormalizationParams { scheme: Scheme::None, shift: vec![0.0; p], scale: vec![1.0; p], constant: vec![false; p] }
    }

    pub fn fit(d: &Dataset, scheme: Scheme) -> Self {
        let p = d.p();
        let mut params = NormalizationParams::identity(p);
        params.scheme = scheme;
        if scheme == Scheme::None {
            return params;
        }
        let n = d.n() as f64;
        for j in 0..p {
            let col = d.rows().map(|r| r[j]);
            let (shift, spread) = match scheme {
                Scheme::MinMax => {
                    let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    (lo, hi - lo)
                }
                Scheme::ZScore => {
                    let mean = col.sum::<f64>() / n;
                    let var = d.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
                Scheme::None => unreachable!(),
            };
            if spread > 0.0 && spread.is_finite() {
                params.shift[j] = shift;
                params.scale[j] = spread;
            } else {
                params.constant[j] = true;
            }
        }
        params
    }

    pub fn p(&self) -> usize {
        self.shift.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, c))| (v - s) / c)
            .collect()
    }

    pub fn invert_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, c))| v * c + s)
            .collect()
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset, DataError> {
        if d.p() != self.p() {
            return Err(DataError::Dimension { expected: self.p(), found: d.p() });
        }
        let x: Vec<f64> = d.rows().flat_map(|r| self.apply_row(r)).collect();
        let out = Dataset::new(d.id(), x, d.p(), d.labels().to_vec())?;
        Ok(match d.names() {
            Some(names) => out.with_names(names.to_vec()),
            None => out,
        })
    }

    pub fn invert(&self, d: &Dataset) -> Result<Dataset, DataError> {
        if d.p() != self.p() {
            return Err(DataError::Dimension { expected: self.p(), found: d.p() });
        }
        let x: Vec<f64> = d.rows().flat_map(|r| self.invert_row(r)).collect();
        Dataset::new(d.id(), x, d.p(), d.labels().to_vec())
    }
}

/// Fits `scheme` on `d` and returns the transformed copy with its parameters.
pub fn normalize(d: &Dataset, scheme: Scheme) -> (Dataset, NormalizationParams) {
    let params = NormalizationParams::fit(d, scheme);
    let out = params.apply(d).expect("parameters fitted on the same dataset");
    (out, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> Dataset {
        let y = (0..values.len()).map(|i| Label::from_bool(i % 2 == 0)).collect();
        Dataset::new("c", values.to_vec(), 1, y).unwrap()
    }

    #[test]
    fn min_max_rescales() {
        let (out, params) = normalize(&column(&[0.0, 5.0, 10.0]), Scheme::MinMax);
        assert_eq!(out.features(), &[0.0, 0.5, 1.0]);
        assert!(!params.constant[0]);
    }

    #[test]
    fn none_is_identity() {
        let d = column(&[3.0, -1.0, 7.5]);
        let (out, _) = normalize(&d, Scheme::None);
        assert_eq!(out, d);
    }

    #[test]
    fn constant_column_passes_through() {
        let (out, params) = normalize(&column(&[2.0, 2.0, 2.0]), Scheme::ZScore);
        assert_eq!(out.features(), &[2.0, 2.0, 2.0]);
        assert_eq!(params.constant, vec![true]);
    }

    #[test]
    fn applies_to_other_data_and_checks_width() {
        let (_, params) = normalize(&column(&[0.0, 4.0]), Scheme::MinMax);
        assert_eq!(params.apply_row(&[2.0]), vec![0.5]);
        let wide = Dataset::new("w", vec![1.0, 2.0, 3.0, 4.0], 2, vec![Label::Positive; 2]).unwrap();
        assert!(params.apply(&wide).is_err());
    }

    proptest! {
        #[test]
        fn inverse_recovers_columns(values in prop::collection::vec(-1e3f64..1e3, 2..30), zscore: bool) {
            let d = column(&values);
            let scheme = if zscore { Scheme::ZScore } else { Scheme::MinMax };
            let (out, params) = normalize(&d, scheme);
            let back = params.invert(&out).unwrap();
            for (a, b) in back.features().iter().zip(d.features()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
