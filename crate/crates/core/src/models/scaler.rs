use serde::{Deserialize, Serialize};

use super::ModelError;

/// Per-column standardization `(x - mean) / scale` fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    /// Population standard deviation; zero-variance columns get scale 1.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        if rows.len() < 2 {
            return Err(ModelError::TooFewRows(rows.len()));
        }
        let p = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; p];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_column() {
        let s = Scaler::fit(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(s.mean, vec![1.0]);
        assert_eq!(s.scale, vec![1.0]);
    }

    #[test]
    fn constant_column_passes_through() {
        let rows = vec![vec![3.0, 1.0], vec![3.0, 2.0], vec![3.0, 6.0]];
        let s = Scaler::fit(&rows).unwrap();
        assert_eq!(s.scale[0], 1.0);
        assert!(s.transform(&rows).iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn transformed_training_column_has_zero_mean() {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![(i * i) as f64 + 0.5]).collect();
        let s = Scaler::fit(&rows).unwrap();
        let t = s.transform(&rows);
        let m: f64 = t.iter().map(|r| r[0]).sum::<f64>() / 7.0;
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn needs_two_rows() {
        assert!(matches!(Scaler::fit(&[vec![1.0]]), Err(ModelError::TooFewRows(1))));
    }
}
