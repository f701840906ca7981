//! Gated recurrent unit with an exact hand-written reverse pass.
//!
//! ```text
//! z  = σ(W_z [h; u] + b_z)
//! r  = σ(W_r [h; u] + b_r)
//! c  = tanh(W_c [r ⊙ h; u] + b_c)
//! h' = (1 - z) ⊙ h + z ⊙ c
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};
use crate::numcore::matrix::{sigmoid, Matrix};
use crate::numcore::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParameters {
    pub w_update: Matrix,
    pub w_reset: Matrix,
    pub w_candidate: Matrix,
    pub b_update: Vec<f64>,
    pub b_reset: Vec<f64>,
    pub b_candidate: Vec<f64>,
}

/// Everything the reverse pass needs from one forward call.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCache {
    pub h_prev: Vec<f64>,
    pub input: Vec<f64>,
    pub update: Vec<f64>,
    pub reset: Vec<f64>,
    pub reset_h: Vec<f64>,
    pub candidate: Vec<f64>,
}

impl GruParameters {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let cols = hidden + input;
        GruParameters {
            w_update: Matrix::zeros(hidden, cols),
            w_reset: Matrix::zeros(hidden, cols),
            w_candidate: Matrix::zeros(hidden, cols),
            b_update: vec![0.0; hidden],
            b_reset: vec![0.0; hidden],
            b_candidate: vec![0.0; hidden],
        }
    }

    /// Fan-in uniform weights, zero biases.
    pub fn init(hidden: usize, input: usize, rng: &mut Rng) -> Self {
        let cols = hidden + input;
        GruParameters {
            w_update: Matrix::fan_in_uniform(hidden, cols, rng),
            w_reset: Matrix::fan_in_uniform(hidden, cols, rng),
            w_candidate: Matrix::fan_in_uniform(hidden, cols, rng),
            b_update: vec![0.0; hidden],
            b_reset: vec![0.0; hidden],
            b_candidate: vec![0.0; hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_update.len()
    }

    pub fn input(&self) -> usize {
        self.w_update.cols() - self.hidden()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w_update.data(),
            self.w_reset.data(),
            self.w_candidate.data(),
            &self.b_update,
            &self.b_reset,
            &self.b_candidate,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_update.data_mut(),
            self.w_reset.data_mut(),
            self.w_candidate.data_mut(),
            &mut self.b_update,
            &mut self.b_reset,
            &mut self.b_candidate,
        ]
    }

    pub fn forward(&self, h_prev: &[f64], input: &[f64]) -> Result<(Vec<f64>, GruCache)> {
        let m = self.hidden();
        if h_prev.len() != m || input.len() != self.input() {
            return Err(GrnnError::shape(format!(
                "gru expects h[{m}] and input[{}], got h[{}] and input[{}]",
                self.input(),
                h_prev.len(),
                input.len()
            )));
        }
        let mut update = vec![0.0; m];
        let mut reset = vec![0.0; m];
        let mut candidate = vec![0.0; m];
        self.w_update.affine_segments(&[h_prev, input], &self.b_update, &mut update);
        self.w_reset.affine_segments(&[h_prev, input], &self.b_reset, &mut reset);
        update.iter_mut().for_each(|v| *v = sigmoid(*v));
        reset.iter_mut().for_each(|v| *v = sigmoid(*v));
        let reset_h: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
        self.w_candidate.affine_segments(&[&reset_h, input], &self.b_candidate, &mut candidate);
        candidate.iter_mut().for_each(|v| *v = v.tanh());
        let h_new = (0..m)
            .map(|i| (1.0 - update[i]) * h_prev[i] + update[i] * candidate[i])
            .collect();
        let cache = GruCache {
            h_prev: h_prev.to_vec(),
            input: input.to_vec(),
            update,
            reset,
            reset_h,
            candidate,
        };
        Ok((h_new, cache))
    }

    /// Accumulates parameter gradients into `grads` and returns
    /// `(grad_h_prev, grad_input)`.
    pub fn backward(
        &self,
        cache: &GruCache,
        grad_h_new: &[f64],
        grads: &mut GruParameters,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.hidden();
        let n_in = self.input();
        if cache.h_prev.len() != m
            || cache.input.len() != n_in
            || cache.update.len() != m
            || grad_h_new.len() != m
            || !grads.w_update.same_shape(&self.w_update)
        {
            return Err(GrnnError::shape("gru cache or gradient does not match parameters"));
        }
        let h = &cache.h_prev;
        let u = &cache.input;
        let mut d_h = vec![0.0; m];
        let mut d_u = vec![0.0; n_in];
        let mut d_cand = vec![0.0; m];
        let mut d_update = vec![0.0; m];
        for i in 0..m {
            let g = grad_h_new[i];
            let z = cache.update[i];
            let c = cache.candidate[i];
            d_h[i] = g * (1.0 - z);
            d_cand[i] = g * z * (1.0 - c * c);
            d_update[i] = g * (c - h[i]) * z * (1.0 - z);
        }

        // candidate path
        grads.w_candidate.add_outer_segments(&d_cand, &[&cache.reset_h, u]);
        crate::numcore::matrix::add_assign(&mut grads.b_candidate, &d_cand);
        let mut d_cat = vec![0.0; m + n_in];
        self.w_candidate.add_transpose_mul(&d_cand, &mut d_cat);
        let mut d_reset = vec![0.0; m];
        for i in 0..m {
            let r = cache.reset[i];
            d_h[i] += d_cat[i] * r;
            d_reset[i] = d_cat[i] * h[i] * r * (1.0 - r);
        }
        for (du, dc) in d_u.iter_mut().zip(&d_cat[m..]) {
            *du += dc;
        }

        // gates
        for (w, gw, gb, d) in [
            (&self.w_reset, &mut grads.w_reset, &mut grads.b_reset, &d_reset),
            (&self.w_update, &mut grads.w_update, &mut grads.b_update, &d_update),
        ] {
            gw.add_outer_segments(d, &[h, u]);
            crate::numcore::matrix::add_assign(gb, d);
            d_cat.iter_mut().for_each(|v| *v = 0.0);
            w.add_transpose_mul(d, &mut d_cat);
            crate::numcore::matrix::add_assign(&mut d_h, &d_cat[..m]);
            crate::numcore::matrix::add_assign(&mut d_u, &d_cat[m..]);
        }
        Ok((d_h, d_u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::gradcheck::finite_diff_check;

    /// Scalar-by-scalar reimplementation used as an independent oracle.
    fn oracle_forward(p: &GruParameters, h: &[f64], u: &[f64]) -> Vec<f64> {
        let m = h.len();
        let x: Vec<f64> = h.iter().chain(u).copied().collect();
        let mut out = vec![0.0; m];
        let mut r = vec![0.0; m];
        for i in 0..m {
            let mut a = p.b_reset[i];
            for j in 0..x.len() {
                a += p.w_reset.get(i, j) * x[j];
            }
            r[i] = 1.0 / (1.0 + (-a).exp());
        }
        for i in 0..m {
            let mut az = p.b_update[i];
            let mut ac = p.b_candidate[i];
            for j in 0..x.len() {
                az += p.w_update.get(i, j) * x[j];
                let xj = if j < m { r[j] * x[j] } else { x[j] };
                ac += p.w_candidate.get(i, j) * xj;
            }
            let z = 1.0 / (1.0 + (-az).exp());
            out[i] = (1.0 - z) * h[i] + z * ac.tanh();
        }
        out
    }

    fn away_from_zero(rng: &mut Rng) -> f64 {
        let v = rng.uniform_in(0.5, 1.0);
        if rng.below(2) == 0 { v } else { -v }
    }

    fn random_instance(m: usize, d_in: usize, seed: u64) -> (GruParameters, Vec<f64>, Vec<f64>) {
        let mut rng = Rng::new(seed);
        let mut p = GruParameters::init(m, d_in, &mut rng);
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v += rng.uniform_in(-0.3, 0.3);
            }
        }
        let h = (0..m).map(|_| away_from_zero(&mut rng)).collect();
        let u = (0..d_in).map(|_| away_from_zero(&mut rng)).collect();
        (p, h, u)
    }

    #[test]
    fn zero_weights_halve_the_state() {
        let p = GruParameters::zeros(3, 2);
        let (h, _) = p.forward(&[1.0, -2.0, 0.5], &[3.0, 4.0]).unwrap();
        assert_eq!(h, vec![0.5, -1.0, 0.25]);
    }

    #[test]
    fn matches_scalar_oracle() {
        for seed in 0..10 {
            let (p, h, u) = random_instance(2, 3, seed);
            let (out, _) = p.forward(&h, &u).unwrap();
            for (a, b) in out.iter().zip(oracle_forward(&p, &h, &u)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let (p, h, u) = random_instance(3, 4, 1);
        let (_, cache) = p.forward(&h, &u).unwrap();
        let mut g = GruParameters::zeros(3, 4);
        let (dh, du) = p.backward(&cache, &[0.0; 3], &mut g).unwrap();
        assert!(dh.iter().chain(&du).all(|&v| v == 0.0));
        assert!(g.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn zero_weights_backward_halves_upstream() {
        let p = GruParameters::zeros(2, 2);
        let (_, cache) = p.forward(&[0.3, -0.1], &[1.0, 2.0]).unwrap();
        let mut g = GruParameters::zeros(2, 2);
        let (dh, _) = p.backward(&cache, &[1.0, 0.0], &mut g).unwrap();
        assert_eq!(dh, vec![0.5, 0.0]);
    }

    #[test]
    fn mismatched_cache_rejected() {
        let (p, h, u) = random_instance(3, 4, 1);
        let (_, cache) = p.forward(&h, &u).unwrap();
        let other = GruParameters::zeros(2, 4);
        let mut g = GruParameters::zeros(2, 4);
        assert!(other.backward(&cache, &[0.0; 2], &mut g).is_err());
        assert!(p.forward(&h[..2], &u).is_err());
    }

    /// Loss `sum_i w_i h'_i` so every output coordinate is exercised.
    fn check(m: usize, d_in: usize, seed: u64) -> f64 {
        let (p, h, u) = random_instance(m, d_in, seed);
        let weights: Vec<f64> = (0..m).map(|i| 0.7 - 0.3 * i as f64).collect();
        let n_params: usize = p.tensors().iter().map(|t| t.len()).sum();
        let mut theta: Vec<f64> = p.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        theta.extend(&h);
        theta.extend(&u);
        let unpack = |theta: &[f64]| {
            let mut q = p.clone();
            let mut k = 0;
            for t in q.tensors_mut() {
                for v in t.iter_mut() {
                    *v = theta[k];
                    k += 1;
                }
            }
            (q, theta[n_params..n_params + m].to_vec(), theta[n_params + m..].to_vec())
        };
        let f = |theta: &[f64]| {
            let (q, h, u) = unpack(theta);
            let (out, _) = q.forward(&h, &u).unwrap();
            out.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>()
        };
        let (q, h0, u0) = unpack(&theta);
        let (_, cache) = q.forward(&h0, &u0).unwrap();
        let mut g = GruParameters::zeros(m, d_in);
        let (dh, du) = q.backward(&cache, &weights, &mut g).unwrap();
        let mut analytic: Vec<f64> = g.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        analytic.extend(dh);
        analytic.extend(du);
        finite_diff_check(f, &mut theta, &analytic, 1e-5).unwrap()
    }

    #[test]
    fn backward_matches_finite_differences() {
        assert!(check(3, 4, 11) <= 1e-6);
        for seed in 0..100 {
            for m in [2, 3, 5] {
                let err = check(m, m + 1, seed);
                assert!(err <= 1e-5, "m={m} seed={seed} err={err}");
            }
        }
    }

    #[test]
    fn output_is_a_convex_combination() {
        for seed in 0..200 {
            let (p, mut h, u) = random_instance(4, 3, seed);
            h.iter_mut().for_each(|v| *v *= 3.0);
            let (out, _) = p.forward(&h, &u).unwrap();
            for (o, hp) in out.iter().zip(&h) {
                assert!(o.abs() <= hp.abs().max(1.0));
            }
        }
    }
}
