use crate::error::{Error, Result};

/// Probabilities are clamped to this before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Categorical cross-entropy `-sum(y * ln p)` of a predicted distribution
/// against a one-hot (or any probability) target.
pub fn loss_cce(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "prediction has {} entries, target {}",
            predicted.len(),
            target.len()
        )));
    }
    Ok(predicted
        .iter()
        .zip(target)
        .filter(|(_, &y)| y != 0.0)
        .map(|(&p, &y)| -y * p.max(PROB_FLOOR).ln())
        .sum())
}

pub fn loss_mse(predicted: f64, target: f64) -> f64 {
    let d = predicted - target;
    d * d
}

/// Mean squared error over `(predicted, target)` pairs; 0 for no pairs.
pub fn mean_squared_error(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|&(p, t)| loss_mse(p, t)).sum::<f64>() / pairs.len() as f64
}

pub fn one_hot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cce_examples() {
        assert_eq!(loss_cce(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        let uniform = loss_cce(&[0.25; 4], &one_hot(2, 4)).unwrap();
        assert!((uniform - 4f64.ln()).abs() < 1e-12);
        let p = loss_cce(&[0.8, 0.2], &[1.0, 0.0]).unwrap();
        assert!((p - 0.223_143_551_314_209_7).abs() < 1e-12);
        // zero probability on the target is clamped, not infinite
        assert!(
            (loss_cce(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 27.631_021_115_928_547).abs() < 1e-9
        );
        assert!(loss_cce(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(loss_mse(3.0, 3.0), 0.0);
        assert_eq!(loss_mse(0.0, 2.0), 4.0);
        assert_eq!(mean_squared_error(&[(1.0, 0.0), (0.0, 1.0)]), 1.0);
    }
}
