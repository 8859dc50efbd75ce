use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::thread;

use serde::{Deserialize, Serialize};

use super::episode::{run_episode, EpisodeRecord, Policies};
use super::{Condition, ExperimentConfig, HarnessError};
use crate::quad::{Outcome, Uncertainty};

/// Aggregate of one (condition, uncertainty) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub condition: Condition,
    pub uncertainty: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful episodes only; absent when there were none.
    pub mean_success_time: Option<f64>,
    pub mean_divergence: f64,
}

pub const SUMMARY_HEADER: &str = "condition,uncertainty,episodes,successes,success_rate,mean_success_time,mean_divergence";

pub fn summarize(condition: Condition, uncertainty: &Uncertainty, records: &[EpisodeRecord]) -> SummaryRow {
    let n = records.len();
    let times: Vec<f64> = records.iter().filter_map(|r| r.success_time).collect();
    let successes = records.iter().filter(|r| r.outcome == Outcome::Success).count();
    SummaryRow {
        condition,
        uncertainty: uncertainty.to_string(),
        episodes: n,
        successes,
        success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
        mean_success_time: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
        mean_divergence: if n == 0 { 0.0 } else { records.iter().map(|r| r.divergence).sum::<f64>() / n as f64 },
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        let time = r.mean_success_time.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.condition.label(),
            r.uncertainty,
            r.episodes,
            r.successes,
            r.success_rate,
            time,
            r.mean_divergence
        )?;
    }
    Ok(())
}

pub fn read_summary_csv<R: BufRead>(r: R) -> Result<Vec<SummaryRow>, HarnessError> {
    let mut lines = r.lines();
    let header = lines.next().transpose().map_err(|e| HarnessError::Io(e.to_string()))?;
    if header.as_deref() != Some(SUMMARY_HEADER) {
        return Err(HarnessError::Format(format!("unexpected summary header {header:?}")));
    }
    let bad = |line: &str| HarnessError::Format(format!("malformed summary row {line:?}"));
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| HarnessError::Io(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(&line));
        }
        rows.push(SummaryRow {
            condition: f[0].parse()?,
            uncertainty: f[1].to_string(),
            episodes: f[2].parse().map_err(|_| bad(&line))?,
            successes: f[3].parse().map_err(|_| bad(&line))?,
            success_rate: f[4].parse().map_err(|_| bad(&line))?,
            mean_success_time: if f[5].is_empty() { None } else { Some(f[5].parse().map_err(|_| bad(&line))?) },
            mean_divergence: f[6].parse().map_err(|_| bad(&line))?,
        });
    }
    Ok(rows)
}

/// Episode records on disk, one JSON document per seed.
#[derive(Debug, Clone)]
pub struct RecordStore {
    root: PathBuf,
}

impl RecordStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, condition: Condition, uncertainty: &Uncertainty, seed: u64) -> PathBuf {
        self.root.join(condition.slug()).join(uncertainty.to_string()).join(format!("seed_{seed}.json"))
    }

    pub fn load(&self, condition: Condition, uncertainty: &Uncertainty, seed: u64) -> Result<Option<EpisodeRecord>, HarnessError> {
        let path = self.path(condition, uncertainty, seed);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let rec: EpisodeRecord =
            serde_json::from_str(&text).map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))?;
        if rec.seed != seed || rec.condition != condition || rec.uncertainty != *uncertainty {
            return Err(HarnessError::Format(format!("{} does not match its key", path.display())));
        }
        Ok(Some(rec))
    }

    pub fn save(&self, rec: &EpisodeRecord) -> Result<(), HarnessError> {
        let path = self.path(rec.condition, &rec.uncertainty, rec.seed);
        write_atomic(&path, &serde_json::to_string(rec).map_err(|e| HarnessError::Format(e.to_string()))?)
    }
}

/// Writes through a temporary sibling so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let io_err = |e: io::Error| HarnessError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Seeded evaluation of trained policies, optionally persisted.
pub struct Experiment<'a> {
    cfg: &'a ExperimentConfig,
    policies: &'a Policies,
    store: Option<RecordStore>,
    force: bool,
}

impl<'a> Experiment<'a> {
    pub fn new(cfg: &'a ExperimentConfig, policies: &'a Policies) -> Self {
        Self { cfg, policies, store: None, force: false }
    }

    /// Persists every record and reuses existing ones unless `force`.
    pub fn with_store(mut self, store: RecordStore, force: bool) -> Self {
        self.store = Some(store);
        self.force = force;
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        self.cfg
    }

    fn episode(&self, condition: Condition, uncertainty: Uncertainty, seed: u64) -> Result<EpisodeRecord, HarnessError> {
        if let (Some(store), false) = (&self.store, self.force) {
            if let Some(rec) = store.load(condition, &uncertainty, seed)? {
                return Ok(rec);
            }
        }
        let rec = run_episode(self.cfg, self.policies, condition, uncertainty, seed)?;
        if let Some(store) = &self.store {
            store.save(&rec)?;
        }
        Ok(rec)
    }

    /// All seeds of the configuration, in seed order.
    pub fn run_condition(&self, condition: Condition, uncertainty: Uncertainty) -> Result<Vec<EpisodeRecord>, HarnessError> {
        let seeds: Vec<u64> = self.cfg.seeds().collect();
        let threads = self.cfg.threads.min(seeds.len()).max(1);
        if threads == 1 {
            return seeds.iter().map(|&s| self.episode(condition, uncertainty, s)).collect();
        }
        let mut slots: Vec<Option<Result<EpisodeRecord, HarnessError>>> = (0..seeds.len()).map(|_| None).collect();
        thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let seeds = &seeds;
                    scope.spawn(move || {
                        (w..seeds.len())
                            .step_by(threads)
                            .map(|i| (i, self.episode(condition, uncertainty, seeds[i])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("episode worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|r| r.expect("every seed assigned")).collect()
    }

    pub fn summary(&self, condition: Condition, uncertainty: Uncertainty) -> Result<SummaryRow, HarnessError> {
        Ok(summarize(condition, &uncertainty, &self.run_condition(condition, uncertainty)?))
    }
}

/// Success rate and mean success time per condition on the shared seed set.
pub fn success_table(exp: &Experiment<'_>, conditions: &[Condition], uncertainty: Uncertainty) -> Result<Vec<SummaryRow>, HarnessError> {
    conditions.iter().map(|&c| exp.summary(c, uncertainty)).collect()
}

/// RL and MRAC-RL at each effectiveness level, paired on the same seeds.
pub fn loe_sweep(exp: &Experiment<'_>, betas: &[f64]) -> Result<Vec<SummaryRow>, HarnessError> {
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
        return Err(HarnessError::Config(format!("LOE effectiveness must lie in (0, 1], got {b}")));
    }
    let mut rows = Vec::with_capacity(2 * betas.len());
    for &beta in betas {
        for c in [Condition::Rl, Condition::MracRl] {
            rows.push(exp.summary(c, exp.config().loe(beta))?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Trajectory;

    fn record(seed: u64, outcome: Outcome, t: Option<f64>) -> EpisodeRecord {
        EpisodeRecord {
            seed,
            condition: Condition::Rl,
            uncertainty: Uncertainty::None,
            outcome,
            success_time: t,
            divergence: 0.5,
            fault: None,
            trajectory: Trajectory::default(),
        }
    }

    #[test]
    fn aggregation_counts_and_means() {
        let recs = [record(0, Outcome::Success, Some(2.0)), record(1, Outcome::Crash, None), record(2, Outcome::Success, Some(4.0))];
        let row = summarize(Condition::Rl, &Uncertainty::None, &recs);
        assert_eq!((row.episodes, row.successes), (3, 2));
        assert_eq!(row.success_rate * 3.0, 2.0);
        assert_eq!(row.mean_success_time, Some(3.0));
        let fail = summarize(Condition::Rl, &Uncertainty::None, &recs[1..2]);
        assert_eq!((fail.success_rate, fail.mean_success_time), (0.0, None));
    }

    #[test]
    fn summary_csv_round_trip() {
        let rows = vec![
            summarize(Condition::Rl, &Uncertainty::None, &[record(0, Outcome::Timeout, None)]),
            summarize(Condition::MracRl, &Uncertainty::Parametric { pct: 0.25 }, &[record(0, Outcome::Success, Some(1.25))]),
        ];
        let mut buf = Vec::new();
        write_summary_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(SUMMARY_HEADER));
        assert!(text.contains("RL,none,1,0,0,,0.5"));
        let back = read_summary_csv(io::Cursor::new(buf)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].mean_success_time, Some(1.25));
        assert_eq!(back[1].condition, Condition::MracRl);
    }

    #[test]
    fn store_round_trip_and_key_check() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::new(dir.path());
        let rec = record(7, Outcome::Success, Some(1.0));
        store.save(&rec).unwrap();
        assert_eq!(store.load(Condition::Rl, &Uncertainty::None, 7).unwrap(), Some(rec));
        assert_eq!(store.load(Condition::Rl, &Uncertainty::None, 8).unwrap(), None);
        fs::copy(store.path(Condition::Rl, &Uncertainty::None, 7), store.path(Condition::Rl, &Uncertainty::None, 9)).unwrap();
        assert!(store.load(Condition::Rl, &Uncertainty::None, 9).is_err());
    }
}
