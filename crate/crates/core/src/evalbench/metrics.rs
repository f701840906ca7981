use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub mrr: f64,
    pub recall_at_k: f64,
}

pub fn compute_metrics(ranks: &[usize], k: usize) -> Result<RankMetrics> {
    if ranks.is_empty() {
        return Err(GrnnError::Evaluation("metrics of an empty rank list are undefined".into()));
    }
    if ranks.contains(&0) {
        return Err(GrnnError::Evaluation("ranks start at 1".into()));
    }
    let n = ranks.len() as f64;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    let recall_at_k = ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
    Ok(RankMetrics { mrr, recall_at_k })
}

/// Expected MRR of a uniformly random ranking over `universe` candidates: H(U)/U.
pub fn random_ranker_mrr(universe: usize) -> f64 {
    (1..=universe).map(|r| 1.0 / r as f64).sum::<f64>() / universe as f64
}

/// Stop once neither metric has improved for `patience` epochs.
pub fn early_stop_check(history: &[RankMetrics], patience: usize) -> bool {
    fn age(values: impl Iterator<Item = f64>, len: usize) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut best_at = 0;
        for (i, v) in values.enumerate() {
            if v > best {
                best = v;
                best_at = i;
            }
        }
        len - 1 - best_at
    }
    if history.is_empty() {
        return false;
    }
    let n = history.len();
    age(history.iter().map(|h| h.mrr), n) >= patience && age(history.iter().map(|h| h.recall_at_k), n) >= patience
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let m = compute_metrics(&[1, 1, 1], 10).unwrap();
        assert_eq!((m.mrr, m.recall_at_k), (1.0, 1.0));
        let m = compute_metrics(&[1, 2, 4], 10).unwrap();
        assert!((m.mrr - 1.75 / 3.0).abs() < 1e-15);
        assert_eq!(m.recall_at_k, 1.0);
        assert_eq!(compute_metrics(&[11, 11], 10).unwrap().recall_at_k, 0.0);
        assert!(compute_metrics(&[], 10).is_err());
    }

    #[test]
    fn random_ranker_closed_form() {
        assert!((random_ranker_mrr(1000) - 0.007485).abs() < 1e-6);
        assert_eq!(random_ranker_mrr(1), 1.0);
    }

    fn hist(pairs: &[(f64, f64)]) -> Vec<RankMetrics> {
        pairs.iter().map(|&(mrr, recall_at_k)| RankMetrics { mrr, recall_at_k }).collect()
    }

    #[test]
    fn early_stopping_rules() {
        let mut h = vec![(0.5, 0.5)];
        h.extend(std::iter::repeat_n((0.4, 0.4), 249));
        assert!(!early_stop_check(&hist(&h), 250));
        h.push((0.4, 0.4));
        assert!(early_stop_check(&hist(&h), 250));

        // mrr stagnant for 300 epochs, recall improved 100 epochs ago
        let mut h = vec![(0.5, 0.1)];
        h.extend(std::iter::repeat_n((0.4, 0.1), 199));
        h.push((0.4, 0.2));
        h.extend(std::iter::repeat_n((0.4, 0.1), 100));
        assert!(!early_stop_check(&hist(&h), 250));
    }
}
