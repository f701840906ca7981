use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};
use crate::numcore::matrix::{dot, Matrix};
use crate::numcore::rng::Rng;

/// Two-layer perceptron: ReLU hidden layer of width `hidden`, one raw logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParameters {
    pub w_hidden: Matrix,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpCache {
    pub input: Vec<f64>,
    pub pre: Vec<f64>,
    /// Post-ReLU, post-dropout activations.
    pub act: Vec<f64>,
    /// Per-unit dropout multiplier (0 or 1/(1-rate)); `None` when no dropout ran.
    pub mask: Option<Vec<f64>>,
}

impl MlpParameters {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        MlpParameters {
            w_hidden: Matrix::zeros(hidden, input),
            b_hidden: vec![0.0; hidden],
            w_out: vec![0.0; hidden],
            b_out: vec![0.0],
        }
    }

    pub fn init(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        MlpParameters {
            w_hidden: Matrix::fan_in_uniform(hidden, input, rng),
            b_hidden: vec![0.0; hidden],
            w_out: (0..hidden).map(|_| rng.uniform_in(-bound, bound)).collect(),
            b_out: vec![0.0],
        }
    }

    pub fn input(&self) -> usize {
        self.w_hidden.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.rows()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        vec![self.w_hidden.data(), &self.b_hidden, &self.w_out, &self.b_out]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w_hidden.data_mut(), &mut self.b_hidden, &mut self.w_out, &mut self.b_out]
    }

    pub fn forward(&self, input: &[f64]) -> Result<(f64, MlpCache)> {
        self.forward_segments(&[input], None)
    }

    /// Forward pass on the concatenation of `segments`, with optional
    /// training-mode dropout `(rate, rng)` on the hidden layer.
    pub fn forward_segments(
        &self,
        segments: &[&[f64]],
        dropout: Option<(f64, &mut Rng)>,
    ) -> Result<(f64, MlpCache)> {
        let n: usize = segments.iter().map(|s| s.len()).sum();
        if n != self.input() {
            return Err(GrnnError::shape(format!("mlp expects input[{}], got [{n}]", self.input())));
        }
        let mut pre = vec![0.0; self.hidden()];
        self.w_hidden.affine_segments(segments, &self.b_hidden, &mut pre);
        let mut act: Vec<f64> = pre.iter().map(|&a| a.max(0.0)).collect();
        let mask = match dropout {
            Some((rate, rng)) if rate > 0.0 => {
                let scale = 1.0 / (1.0 - rate);
                let mask: Vec<f64> = (0..act.len())
                    .map(|_| if rng.uniform() < rate { 0.0 } else { scale })
                    .collect();
                act.iter_mut().zip(&mask).for_each(|(a, k)| *a *= k);
                Some(mask)
            }
            _ => None,
        };
        let logit = dot(&self.w_out, &act) + self.b_out[0];
        let input = segments.iter().flat_map(|s| s.iter().copied()).collect();
        Ok((logit, MlpCache { input, pre, act, mask }))
    }

    /// Accumulates into `grads`, returns the gradient w.r.t. the input.
    pub fn backward(&self, cache: &MlpCache, grad_logit: f64, grads: &mut MlpParameters) -> Result<Vec<f64>> {
        if cache.input.len() != self.input() || cache.pre.len() != self.hidden() || grads.w_hidden.rows() != self.hidden() {
            return Err(GrnnError::shape("mlp cache or gradient does not match parameters"));
        }
        grads.b_out[0] += grad_logit;
        let mut d_pre = vec![0.0; self.hidden()];
        for j in 0..self.hidden() {
            grads.w_out[j] += grad_logit * cache.act[j];
            let keep = cache.mask.as_ref().map_or(1.0, |m| m[j]);
            if cache.pre[j] > 0.0 {
                d_pre[j] = grad_logit * self.w_out[j] * keep;
            }
        }
        grads.w_hidden.add_outer_segments(&d_pre, &[&cache.input]);
        crate::numcore::matrix::add_assign(&mut grads.b_hidden, &d_pre);
        let mut d_in = vec![0.0; self.input()];
        self.w_hidden.add_transpose_mul(&d_pre, &mut d_in);
        Ok(d_in)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::gradcheck::finite_diff_check;

    #[test]
    fn zero_parameters_give_zero_logit() {
        let p = MlpParameters::zeros(5, 3);
        assert_eq!(p.forward(&[1.0, 2.0, 3.0, -4.0, 5.0]).unwrap().0, 0.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = MlpParameters::init(4, 4, &mut Rng::new(1));
        let (_, cache) = p.forward(&[0.1, 0.2, -0.3, 0.4]).unwrap();
        let mut g = MlpParameters::zeros(4, 4);
        let d = p.backward(&cache, 0.0, &mut g).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
        assert!(g.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = MlpParameters::zeros(4, 4);
        assert!(p.forward(&[0.0; 3]).is_err());
    }

    fn check(m: usize, seed: u64) -> f64 {
        let mut rng = Rng::new(seed);
        let mut p = MlpParameters::init(m, m, &mut rng);
        for t in p.tensors_mut() {
            t.iter_mut().for_each(|v| *v += rng.uniform_in(-0.2, 0.2));
        }
        let x: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
        let n_params: usize = p.tensors().iter().map(|t| t.len()).sum();
        let mut theta: Vec<f64> = p.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        theta.extend(&x);
        let unpack = |th: &[f64]| {
            let mut q = p.clone();
            let mut k = 0;
            for t in q.tensors_mut() {
                t.iter_mut().for_each(|v| {
                    *v = th[k];
                    k += 1;
                });
            }
            (q, th[n_params..].to_vec())
        };
        let f = |th: &[f64]| {
            let (q, x) = unpack(th);
            let l = q.forward(&x).unwrap().0;
            0.5 * l * l
        };
        let (q, x0) = unpack(&theta);
        let (l, cache) = q.forward(&x0).unwrap();
        let mut g = MlpParameters::zeros(m, m);
        let dx = q.backward(&cache, l, &mut g).unwrap();
        let mut analytic: Vec<f64> = g.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        analytic.extend(dx);
        finite_diff_check(f, &mut theta, &analytic, 1e-5).unwrap()
    }

    #[test]
    fn backward_matches_finite_differences() {
        assert!(check(4, 3) <= 1e-6);
        for seed in 0..100 {
            for m in [2, 3, 5] {
                let err = check(m, seed);
                assert!(err <= 1e-5, "m={m} seed={seed} err={err}");
            }
        }
    }

    #[test]
    fn dropout_mask_scales_survivors() {
        let p = MlpParameters::init(3, 64, &mut Rng::new(2));
        let mut rng = Rng::new(3);
        let (_, cache) = p.forward_segments(&[&[1.0, -1.0, 0.5]], Some((0.5, &mut rng))).unwrap();
        let mask = cache.mask.unwrap();
        assert!(mask.iter().all(|&k| k == 0.0 || k == 2.0));
        assert!(mask.contains(&0.0));
    }
}
