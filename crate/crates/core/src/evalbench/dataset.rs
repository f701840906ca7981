//! JODIE-schema CSV ingestion.
//!
//! Layout: one header row, then `user_id,item_id,timestamp,state_label,f_1,...,f_k`
//! with the same `k` on every row. Users are mapped to node ids `0..U` and
//! items to `U..U+I`, both in order of first appearance.

use std::collections::HashMap;
use std::io::Read;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::dyngraph::{Event, NodeId};
use crate::error::{GrnnError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub events: Vec<Event>,
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn num_nodes(&self) -> usize {
        self.user_ids.len() + self.item_ids.len()
    }

    /// Node ids of every item seen anywhere in the dataset.
    pub fn destinations(&self) -> Vec<NodeId> {
        (self.user_ids.len()..self.num_nodes()).collect()
    }
}

pub fn load_jodie_csv(path: &Path, limit: Option<usize>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| GrnnError::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    load_jodie_reader(file, path.to_path_buf(), &name, limit)
}

/// Reads at most `limit` events (a chronological prefix) from `reader`.
pub fn load_jodie_reader<R: Read>(reader: R, path: PathBuf, name: &str, limit: Option<usize>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut users: HashMap<String, usize> = HashMap::new();
    let mut items: HashMap<String, usize> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut raw: Vec<(usize, usize, f64, Vec<f64>)> = Vec::new();
    let mut feature_dim = None;
    let mut last_time = f64::NEG_INFINITY;
    let err = |line: u64, msg: String| GrnnError::Ingestion { path: path.clone(), line, msg };

    for rec in rdr.records() {
        if limit.is_some_and(|l| raw.len() >= l) {
            break;
        }
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 4 {
            return Err(err(line, format!("expected at least 4 fields, found {}", rec.len())));
        }
        let time: f64 = rec[2].parse().map_err(|_| err(line, format!("timestamp {:?} is not a number", &rec[2])))?;
        if !time.is_finite() {
            return Err(err(line, "timestamp is not finite".into()));
        }
        if time < last_time {
            return Err(GrnnError::Data(format!("{}:{line}: timestamp {time} decreases (previous {last_time})", path.display())));
        }
        last_time = time;
        let features = rec
            .iter()
            .skip(4)
            .enumerate()
            .map(|(i, f)| f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(line, format!("feature {i} value {f:?} is not a finite number"))))
            .collect::<Result<Vec<f64>>>()?;
        match feature_dim {
            None => feature_dim = Some(features.len()),
            Some(d) if d != features.len() => return Err(err(line, format!("{} features, expected {d}", features.len()))),
            _ => {}
        }
        let u = *users.entry(rec[0].to_string()).or_insert_with(|| {
            user_ids.push(rec[0].to_string());
            user_ids.len() - 1
        });
        let i = *items.entry(rec[1].to_string()).or_insert_with(|| {
            item_ids.push(rec[1].to_string());
            item_ids.len() - 1
        });
        raw.push((u, i, time, features));
    }
    let n_users = user_ids.len();
    let events = raw
        .into_iter()
        .enumerate()
        .map(|(k, (u, i, t, x))| Event::new(k, u, n_users + i, t, x, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { name: name.to_string(), events, user_ids, item_ids, feature_dim: feature_dim.unwrap_or(0) })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Chronological split: `floor(n·train)` and `floor(n·val)` events, the
/// remainder goes to test.
pub fn chrono_split(n: usize, train_frac: f64, val_frac: f64) -> Result<Splits> {
    if !(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0) {
        return Err(GrnnError::Config(format!("split fractions {train_frac}/{val_frac} must be positive with sum < 1")));
    }
    let n_train = (n as f64 * train_frac + 1e-9).floor() as usize;
    let n_val = (n as f64 * val_frac + 1e-9).floor() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(GrnnError::Config(format!("split of {n} events leaves an empty part")));
    }
    Ok(Splits { train: 0..n_train, val: n_train..n_train + n_val, test: n_train + n_val..n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Dataset> {
        load_jodie_reader(text.as_bytes(), "mem.csv".into(), "mem", None)
    }

    #[test]
    fn small_file_remaps_ids() {
        let ds = load("user_id,item_id,timestamp,state_label,comma_separated_list_of_features\nu7,i3,0.0,0,0.5,1.0\nu8,i3,1.0,0,0.1,0.2\nu7,i9,2.0,1,0.0,0.0\n").unwrap();
        assert_eq!(ds.events.len(), 3);
        assert_eq!(ds.user_ids, vec!["u7", "u8"]);
        assert_eq!(ds.item_ids, vec!["i3", "i9"]);
        assert_eq!((ds.events[0].src, ds.events[0].dst), (0, 2));
        assert_eq!((ds.events[1].src, ds.events[1].dst), (1, 2));
        assert_eq!((ds.events[2].src, ds.events[2].dst), (0, 3));
        assert_eq!(ds.destinations(), vec![2, 3]);
        assert_eq!(ds.feature_dim, 2);
    }

    #[test]
    fn bad_feature_names_line() {
        let e = load("h\n0,0,0.0,0,1.0\n1,0,1.0,0,abc\n").unwrap_err();
        match e {
            GrnnError::Ingestion { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("abc"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn decreasing_time_is_data_error() {
        assert!(matches!(load("h\n0,0,5.0,0\n1,0,1.0,0\n"), Err(GrnnError::Data(_))));
    }

    #[test]
    fn limit_takes_prefix() {
        let ds = load_jodie_reader("h\n0,0,0,0\n1,1,1,0\n2,2,2,0\n".as_bytes(), "m".into(), "m", Some(2)).unwrap();
        assert_eq!(ds.events.len(), 2);
        assert_eq!(ds.item_ids.len(), 2);
    }

    #[test]
    fn split_sizes() {
        let s = chrono_split(100, 0.7, 0.15).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 15, 15));
        let s = chrono_split(10, 0.7, 0.15).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (7, 1, 2));
        assert!(chrono_split(3, 0.7, 0.15).is_err());
        assert!(chrono_split(100, 0.9, 0.2).is_err());
    }
}
