//! Evaluation metrics over paired predictions and ground truth.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("predicted ({predicted}) and actual ({actual}) lengths differ")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("empty prediction set")]
    Empty,
    #[error("label range [{min}, {max}] is degenerate")]
    DegenerateRange { min: f64, max: f64 },
    #[error("actual value {0} at index {1} is not positive")]
    NonPositiveActual(f64, usize),
    #[error("baseline error must be positive, got {0}")]
    NonPositiveBaseline(f64),
}

/// Paired predictions `ŷ` and targets `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    predicted: Vec<f64>,
    actual: Vec<f64>,
}

impl PredictionSet {
    pub fn new(predicted: Vec<f64>, actual: Vec<f64>) -> Result<Self, MetricError> {
        if predicted.len() != actual.len() {
            return Err(MetricError::LengthMismatch {
                predicted: predicted.len(),
                actual: actual.len(),
            });
        }
        if predicted.is_empty() {
            return Err(MetricError::Empty);
        }
        Ok(Self { predicted, actual })
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn actual(&self) -> &[f64] {
        &self.actual
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.predicted.iter().copied().zip(self.actual.iter().copied())
    }
}

/// Mean absolute error.
pub fn mae(p: &PredictionSet) -> f64 {
    p.pairs().map(|(y_hat, y)| (y_hat - y).abs()).sum::<f64>() / p.len() as f64
}

/// Mean absolute error normalised by the label range, in percent.
pub fn nae_range(p: &PredictionSet, y_min: f64, y_max: f64) -> Result<f64, MetricError> {
    if !(y_max > y_min) {
        return Err(MetricError::DegenerateRange {
            min: y_min,
            max: y_max,
        });
    }
    Ok(mae(p) / (y_max - y_min) * 100.0)
}

/// Mean of `|ŷ - y| / y`; every target must be positive.
pub fn nae_relative(p: &PredictionSet) -> Result<f64, MetricError> {
    if let Some((i, &y)) = p.actual.iter().enumerate().find(|(_, &y)| !(y > 0.0)) {
        return Err(MetricError::NonPositiveActual(y, i));
    }
    Ok(p.pairs().map(|(y_hat, y)| (y_hat - y).abs() / y).sum::<f64>() / p.len() as f64)
}

pub fn rmse(p: &PredictionSet) -> f64 {
    (p.pairs().map(|(y_hat, y)| (y_hat - y).powi(2)).sum::<f64>() / p.len() as f64).sqrt()
}

/// Ratio of a GAN model's error to the baseline network's error.
pub fn relative_error(mae_gan: f64, mae_baseline: f64) -> Result<f64, MetricError> {
    if !(mae_baseline > 0.0) {
        return Err(MetricError::NonPositiveBaseline(mae_baseline));
    }
    Ok(mae_gan / mae_baseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(p: &[f64], a: &[f64]) -> PredictionSet {
        PredictionSet::new(p.to_vec(), a.to_vec()).unwrap()
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&set(&[1.0, 2.0], &[1.0, 2.0])), 0.0);
        assert_eq!(mae(&set(&[2.0, 4.0], &[1.0, 2.0])), 1.5);
        assert_eq!(mae(&set(&[0.0], &[-3.0])), 3.0);
    }

    #[test]
    fn nae_range_examples() {
        assert_eq!(nae_range(&set(&[1.0], &[1.0]), 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(nae_range(&set(&[1.0], &[2.0]), 0.0, 10.0).unwrap(), 10.0);
        assert_eq!(nae_range(&set(&[1.0, 3.0], &[0.0, 0.0]), -2.0, 2.0).unwrap(), 50.0);
        assert!(matches!(
            nae_range(&set(&[1.0], &[1.0]), 1.0, 1.0),
            Err(MetricError::DegenerateRange { .. })
        ));
    }

    #[test]
    fn nae_relative_examples() {
        assert_eq!(nae_relative(&set(&[4.0], &[4.0])).unwrap(), 0.0);
        assert_eq!(nae_relative(&set(&[2.0], &[1.0])).unwrap(), 1.0);
        assert_eq!(nae_relative(&set(&[3.0, 6.0], &[2.0, 4.0])).unwrap(), 0.5);
        assert!(nae_relative(&set(&[1.0], &[0.0])).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&set(&[1.0, 2.0], &[1.0, 2.0])), 0.0);
        assert!((rmse(&set(&[3.0, 4.0], &[0.0, 0.0])) - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rmse(&set(&[5.0], &[0.0])), 5.0);
    }

    #[test]
    fn relative_error_examples() {
        let r = relative_error(0.103021762222052, 0.152554657757282).unwrap();
        assert!((r - 0.675310500096047).abs() < 1e-9);
        assert_eq!(relative_error(0.2, 0.2).unwrap(), 1.0);
        assert_eq!(relative_error(0.0, 0.3).unwrap(), 0.0);
        assert!(relative_error(0.1, 0.0).is_err());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            PredictionSet::new(vec![1.0], vec![]),
            Err(MetricError::LengthMismatch {
                predicted: 1,
                actual: 0
            })
        );
        assert_eq!(PredictionSet::new(vec![], vec![]), Err(MetricError::Empty));
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..64)) {
            let (p, a): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let s = PredictionSet::new(p, a).unwrap();
            prop_assert!(mae(&s) <= rmse(&s) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn metrics_are_permutation_invariant(
            pairs in prop::collection::vec((-1e3f64..1e3, 0.1f64..1e3), 1..32),
            rotate in 0usize..32,
        ) {
            let mut shuffled = pairs.clone();
            let k = rotate % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let (p, a): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let (ps, as_): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            let x = PredictionSet::new(p, a).unwrap();
            let y = PredictionSet::new(ps, as_).unwrap();
            let close = |u: f64, v: f64| (u - v).abs() <= 1e-9 * (1.0 + u.abs());
            prop_assert!(close(mae(&x), mae(&y)));
            prop_assert!(close(rmse(&x), rmse(&y)));
            prop_assert!(close(nae_relative(&x).unwrap(), nae_relative(&y).unwrap()));
            prop_assert!(close(nae_range(&x, -1.0, 3.0).unwrap(), nae_range(&y, -1.0, 3.0).unwrap()));
        }
    }
}
