//! State dropout in two flavours: regular (zero and rescale) and recurrent
//! (keep the previous state's element instead of the new one).

use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};
use crate::numcore::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutKind {
    Regular,
    Recurrent,
}

/// Per-element record of what a training-mode dropout did.
#[derive(Debug, Clone, PartialEq)]
pub enum DropoutMask {
    /// Multiplier per element: 0 or 1/(1-rate).
    Regular(Vec<f64>),
    /// `true` where the previous value was kept.
    Recurrent(Vec<bool>),
}

impl DropoutMask {
    /// Splits an upstream gradient into `(grad_new, grad_prev)`.
    pub fn backward(&self, grad: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
        match self {
            DropoutMask::Regular(scale) => (grad.iter().zip(scale).map(|(g, s)| g * s).collect(), None),
            DropoutMask::Recurrent(kept) => {
                let new = grad.iter().zip(kept).map(|(&g, &k)| if k { 0.0 } else { g }).collect();
                let prev = grad.iter().zip(kept).map(|(&g, &k)| if k { g } else { 0.0 }).collect();
                (new, Some(prev))
            }
        }
    }
}

fn validate(rate: f64, kind: DropoutKind) -> Result<()> {
    let ok = match kind {
        DropoutKind::Regular => (0.0..1.0).contains(&rate),
        DropoutKind::Recurrent => (0.0..=1.0).contains(&rate),
    };
    if ok {
        Ok(())
    } else {
        Err(GrnnError::Parameter(format!("{kind:?} dropout rate {rate} out of range")))
    }
}

/// Training-mode dropout that also returns the mask. With `rate == 0` no
/// randomness is consumed and no mask is produced.
pub fn dropout_forward(
    new: &[f64],
    prev: Option<&[f64]>,
    rate: f64,
    kind: DropoutKind,
    rng: &mut Rng,
) -> Result<(Vec<f64>, Option<DropoutMask>)> {
    validate(rate, kind)?;
    if rate == 0.0 {
        return Ok((new.to_vec(), None));
    }
    match kind {
        DropoutKind::Regular => {
            let scale = 1.0 / (1.0 - rate);
            let mask: Vec<f64> = new.iter().map(|_| if rng.uniform() < rate { 0.0 } else { scale }).collect();
            let out = new.iter().zip(&mask).map(|(v, k)| v * k).collect();
            Ok((out, Some(DropoutMask::Regular(mask))))
        }
        DropoutKind::Recurrent => {
            let prev = prev.ok_or_else(|| GrnnError::Parameter("recurrent dropout needs the previous state".into()))?;
            if prev.len() != new.len() {
                return Err(GrnnError::shape("recurrent dropout: previous and new state lengths differ"));
            }
            let kept: Vec<bool> = new.iter().map(|_| rng.uniform() < rate).collect();
            let out = new.iter().zip(prev).zip(&kept).map(|((&n, &p), &k)| if k { p } else { n }).collect();
            Ok((out, Some(DropoutMask::Recurrent(kept))))
        }
    }
}

pub fn dropout_apply(
    new: &[f64],
    prev: Option<&[f64]>,
    rate: f64,
    kind: DropoutKind,
    rng: &mut Rng,
    training: bool,
) -> Result<Vec<f64>> {
    validate(rate, kind)?;
    if kind == DropoutKind::Recurrent && prev.is_none() {
        return Err(GrnnError::Parameter("recurrent dropout needs the previous state".into()));
    }
    if !training {
        return Ok(new.to_vec());
    }
    Ok(dropout_forward(new, prev, rate, kind, rng)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_and_inference_are_identity() {
        let mut rng = Rng::new(0);
        let new = [1.0, -2.0, 3.0];
        let prev = [9.0, 9.0, 9.0];
        for kind in [DropoutKind::Regular, DropoutKind::Recurrent] {
            assert_eq!(dropout_apply(&new, Some(&prev), 0.0, kind, &mut rng, true).unwrap(), new);
            assert_eq!(dropout_apply(&new, Some(&prev), 0.5, kind, &mut rng, false).unwrap(), new);
        }
    }

    #[test]
    fn recurrent_rate_one_returns_prev() {
        let mut rng = Rng::new(0);
        let out = dropout_apply(&[1.0, 2.0], Some(&[3.0, 4.0]), 1.0, DropoutKind::Recurrent, &mut rng, true).unwrap();
        assert_eq!(out, vec![3.0, 4.0]);
    }

    #[test]
    fn invalid_rates_rejected() {
        let mut rng = Rng::new(0);
        assert!(dropout_apply(&[1.0], None, 1.0, DropoutKind::Regular, &mut rng, true).is_err());
        assert!(dropout_apply(&[1.0], None, 0.1, DropoutKind::Recurrent, &mut rng, true).is_err());
    }

    #[test]
    fn regular_mask_statistics() {
        let mut rng = Rng::new(17);
        let mut data_rng = Rng::new(18);
        let input: Vec<f64> = (0..100_000).map(|_| data_rng.uniform_in(0.5, 1.5)).collect();
        let out = dropout_apply(&input, None, 0.3, DropoutKind::Regular, &mut rng, true).unwrap();
        let zeroed = out.iter().filter(|&&v| v == 0.0).count() as f64 / input.len() as f64;
        assert!((zeroed - 0.3).abs() < 0.01, "{zeroed}");
        let out_mean = out.iter().sum::<f64>() / out.len() as f64;
        let in_mean = input.iter().sum::<f64>() / input.len() as f64;
        assert!((out_mean - in_mean).abs() < 0.01, "{out_mean} vs {in_mean}");
    }

    #[test]
    fn recurrent_backward_routes_gradient() {
        let mask = DropoutMask::Recurrent(vec![true, false]);
        let (new, prev) = mask.backward(&[1.0, 2.0]);
        assert_eq!(new, vec![0.0, 2.0]);
        assert_eq!(prev.unwrap(), vec![1.0, 0.0]);
    }
}
