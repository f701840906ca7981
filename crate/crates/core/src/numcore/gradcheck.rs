//! Central finite-difference gradient checks.

use crate::error::{GrnnError, Result};

/// Relative error used throughout: `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Maximum relative error between `analytic` and central differences of `f`
/// over every coordinate of `params`. `params` is restored before returning.
pub fn finite_diff_check<F>(f: F, params: &mut [f64], analytic: &[f64], eps: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let coords: Vec<usize> = (0..params.len()).collect();
    finite_diff_check_subset(f, params, analytic, eps, &coords)
}

/// As [`finite_diff_check`] but only over `coords`.
pub fn finite_diff_check_subset<F>(
    f: F,
    params: &mut [f64],
    analytic: &[f64],
    eps: f64,
    coords: &[usize],
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if analytic.len() != params.len() {
        return Err(GrnnError::shape(format!(
            "analytic gradient has {} entries for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(GrnnError::Parameter(format!("finite-difference step {eps} must be positive")));
    }
    let mut worst = 0.0f64;
    for &i in coords {
        let orig = params[i];
        params[i] = orig + eps;
        let plus = f(params);
        params[i] = orig - eps;
        let minus = f(params);
        params[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(GrnnError::Evaluation(format!("non-finite loss while perturbing coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}

/// Derivative along coordinate `i` by Ridders' extrapolation of central
/// differences (a Richardson tableau over shrinking steps, keeping the entry
/// with the smallest error estimate). `f` also returns a region tag, for
/// example a ReLU activation pattern: the starting step is divided by ten
/// until both `x ± h` land in the same region as `x`, or `min_step` is reached.
pub fn extrapolated_derivative<F, R>(f: &F, params: &mut [f64], i: usize, step: f64, min_step: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> (f64, R),
    R: PartialEq,
{
    const SHRINK: f64 = 1.4;
    const LEVELS: usize = 10;
    const SAFE: f64 = 2.0;

    let (_, base) = f(params);
    let orig = params[i];
    let mut central = |h: f64| -> Result<(f64, bool)> {
        params[i] = orig + h;
        let (plus, r_plus) = f(params);
        params[i] = orig - h;
        let (minus, r_minus) = f(params);
        params[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(GrnnError::Evaluation(format!("non-finite loss while perturbing coordinate {i}")));
        }
        Ok(((plus - minus) / (2.0 * h), r_plus == base && r_minus == base))
    };

    let mut h = step;
    let mut first = central(h)?;
    while !first.1 && h / 10.0 >= min_step {
        h /= 10.0;
        first = central(h)?;
    }
    let mut table = vec![vec![0.0; LEVELS]; LEVELS];
    table[0][0] = first.0;
    let mut best = first.0;
    let mut err = f64::INFINITY;
    for k in 1..LEVELS {
        h /= SHRINK;
        table[0][k] = central(h)?.0;
        let mut fac = SHRINK * SHRINK;
        for j in 1..=k {
            table[j][k] = (table[j - 1][k] * fac - table[j - 1][k - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let e = (table[j][k] - table[j - 1][k]).abs().max((table[j][k] - table[j - 1][k - 1]).abs());
            if e <= err {
                err = e;
                best = table[j][k];
            }
        }
        if (table[k][k] - table[k - 1][k - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Ok(best)
}

/// Maximum relative error of `analytic` against [`extrapolated_derivative`].
pub fn extrapolated_check<F, R>(f: F, params: &mut [f64], analytic: &[f64], step: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> (f64, R),
    R: PartialEq,
{
    if analytic.len() != params.len() {
        return Err(GrnnError::shape(format!("analytic gradient has {} entries for {} parameters", analytic.len(), params.len())));
    }
    if !(step > 0.0) {
        return Err(GrnnError::Parameter(format!("finite-difference step {step} must be positive")));
    }
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let numeric = extrapolated_derivative(&f, params, i, step, step * 1e-4)?;
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}
