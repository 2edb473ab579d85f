use ndarray::Array2;
use rand::Rng;

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    /// Deterministic inference; dropout is the identity.
    Eval,
    /// Monte-Carlo inference: masks stay active.
    Mc,
}

impl DropoutMode {
    pub(crate) fn active(self) -> bool {
        !matches!(self, DropoutMode::Eval)
    }
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(config(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Inverted-dropout mask (`0` or `1 / (1 - rate)`), or `None` when dropout
/// is a no-op.
pub(crate) fn make_mask<R: Rng + ?Sized>(
    shape: (usize, usize),
    rate: f64,
    mode: DropoutMode,
    rng: &mut R,
) -> Option<Array2<f64>> {
    if rate == 0.0 || !mode.active() {
        return None;
    }
    let keep = 1.0 / (1.0 - rate);
    Some(Array2::from_shape_simple_fn(shape, || {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        }
    }))
}

/// Applies inverted dropout to `x`.
pub fn dropout_apply<R: Rng + ?Sized>(
    x: &Array2<f64>,
    rate: f64,
    mode: DropoutMode,
    rng: &mut R,
) -> Result<Array2<f64>> {
    check_rate(rate)?;
    Ok(match make_mask(x.dim(), rate, mode, rng) {
        Some(mask) => x * &mask,
        None => x.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64);
        for mode in [DropoutMode::Train, DropoutMode::Eval, DropoutMode::Mc] {
            assert_eq!(dropout_apply(&x, 0.0, mode, &mut rng).unwrap(), x);
        }
    }

    #[test]
    fn eval_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::ones((5, 5));
        assert_eq!(dropout_apply(&x, 0.2, DropoutMode::Eval, &mut rng).unwrap(), x);
    }

    #[test]
    fn rate_one_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::ones((1, 1));
        assert_eq!(
            dropout_apply(&x, 1.0, DropoutMode::Train, &mut rng).unwrap_err().class(),
            "config"
        );
    }

    #[test]
    fn inverted_scaling_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = Array2::ones((10_000, 1));
        let y = dropout_apply(&x, 0.2, DropoutMode::Train, &mut rng).unwrap();
        let mean = y.mean().unwrap();
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!(y.iter().all(|v| *v == 0.0 || (*v - 1.25).abs() < 1e-12));
    }
}
