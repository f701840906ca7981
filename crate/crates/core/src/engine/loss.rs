use crate::numcore::matrix::sigmoid;

/// Squared error and its derivative w.r.t. the prediction.
pub fn loss_mse(prediction: f64, target: f64) -> (f64, f64) {
    let d = prediction - target;
    (d * d, 2.0 * d)
}

/// Binary cross-entropy on a logit, in the overflow-free form
/// `max(l, 0) - l y + ln(1 + e^{-|l|})`, and its derivative `σ(l) - y`.
pub fn loss_bce(logit: f64, label: f64) -> (f64, f64) {
    let loss = logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p();
    (loss, sigmoid(logit) - label)
}
