//! Benchmark pipeline for JODIE-style interaction datasets.

pub mod dataset;
pub mod metrics;
pub mod ranking;
pub mod runner;
pub mod search;

pub use dataset::{chrono_split, load_jodie_csv, load_jodie_reader, Dataset, Splits};
pub use metrics::{compute_metrics, early_stop_check, random_ranker_mrr, RankMetrics};
pub use ranking::{rank_from_scores, rank_range, rank_true_destination, sample_negative, CandidateScorer};
pub use runner::{best_trial, run_trial, EpochReport, TrialOutcome, TrialSettings};
pub use search::{random_search, SearchSpace, TrialConfig};
