use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mracrl::harness::{
    loe_sweep, run_episode, success_table, train_policy, write_atomic, write_summary_csv, Condition, EpisodeRecord,
    Experiment, ExperimentConfig, Policies, PolicyKind, RecordStore, SummaryRow,
};
use mracrl::quad::Uncertainty;
use mracrl::sim::Trajectory;

use crate::{plot, Command, OUTPUT_DIR_ENV};

pub fn run_command(command: Command) -> Result<()> {
    match command {
        Command::Train { config, domain_randomized, seed } => train(&config, domain_randomized, seed),
        Command::Eval { config, policy, condition, episodes, force } => eval(&config, policy, condition, episodes, force),
        Command::Compare { config, force } => compare(&config, force),
        Command::SweepLoe { config, betas, force } => sweep(&config, &betas, force),
        Command::Plot { trajectories, labels, out } => plot_files(&trajectories, &labels, &out),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

/// Exclusive claim on an output directory, released on drop.
struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(".mracrl.lock");
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).with_context(|| {
            format!("{} is locked by another run; remove {} if that run is gone", dir.display(), path.display())
        })?;
        writeln!(file, "{}", std::process::id())?;
        Ok(Self { path })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Validates, locks the output directory and echoes the resolved config.
fn prepare(cfg: &ExperimentConfig) -> Result<OutputLock> {
    cfg.validate()?;
    let lock = OutputLock::acquire(&cfg.output_dir)?;
    write_atomic(&cfg.output_dir.join("resolved_config.json"), &cfg.to_json()?)?;
    Ok(lock)
}

fn train(config: &Path, domain_randomized: bool, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.ppo.rng_seed = s;
    }
    let _lock = prepare(&cfg)?;
    let kind = if domain_randomized { PolicyKind::DomainRandomized } else { PolicyKind::Nominal };
    let stem = kind.default_file().trim_end_matches("_policy.json");
    let log_path = cfg.output_dir.join(format!("train_log_{stem}.jsonl"));
    let mut log = BufWriter::new(File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    let mut write_err = None;
    let outcome = train_policy(&cfg, domain_randomized, None, |line| {
        let cost = line.mean_episode_cost.map_or("-".to_string(), |c| format!("{c:.4}"));
        eprintln!(
            "batch {:>4}  steps {:>8}  episodes {:>4}  mean cost {cost}  kl {:.4}",
            line.batch, line.total_steps, line.episodes_completed, line.stats.approx_kl
        );
        let res = serde_json::to_string(line).map_err(anyhow::Error::from).and_then(|s| Ok(writeln!(log, "{s}")?));
        if let Err(e) = res {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.context(format!("writing {}", log_path.display())));
    }
    log.flush()?;
    let path = cfg.policy_path(kind);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    outcome.policy.save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn experiment<'a>(cfg: &'a ExperimentConfig, policies: &'a Policies, force: bool) -> Experiment<'a> {
    Experiment::new(cfg, policies).with_store(RecordStore::new(cfg.output_dir.join("records")), force)
}

fn emit_summary(cfg: &ExperimentConfig, name: &str, rows: &[SummaryRow]) -> Result<()> {
    let mut buf = Vec::new();
    write_summary_csv(rows, &mut buf)?;
    let text = String::from_utf8(buf)?;
    write_atomic(&cfg.output_dir.join(name), &text)?;
    print!("{text}");
    Ok(())
}

fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes the first seed's rollouts next to the zero-uncertainty baseline of
/// the nominal policy.
fn export_first_seed(cfg: &ExperimentConfig, policies: &Policies, records: &[&EpisodeRecord]) -> Result<()> {
    let dir = cfg.output_dir.join("trajectories");
    let Some(seed) = cfg.seeds().next() else { return Ok(()) };
    let base_condition = if policies.nominal.is_some() { Condition::Rl } else { Condition::DrRl };
    let base = run_episode(cfg, policies, base_condition, Uncertainty::None, seed)?;
    write_trajectory(&dir.join(format!("baseline_seed_{seed}.csv")), &base.trajectory)?;
    for rec in records {
        let name = format!("{}_{}_seed_{seed}.csv", rec.condition.slug(), rec.uncertainty);
        write_trajectory(&dir.join(name), &rec.trajectory)?;
    }
    Ok(())
}

fn eval(config: &Path, policy: Option<PathBuf>, condition: Condition, episodes: Option<usize>, force: bool) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(n) = episodes {
        cfg.episodes = n;
    }
    if let Some(p) = policy {
        match condition.policy() {
            PolicyKind::Nominal => cfg.policies.rl = Some(p),
            PolicyKind::DomainRandomized => cfg.policies.dr_rl = Some(p),
        }
    }
    cfg.conditions = vec![condition];
    let _lock = prepare(&cfg)?;
    let policies = Policies::load(&cfg, &[condition])?;
    let exp = experiment(&cfg, &policies, force);
    let uncertainty = cfg.evaluation_uncertainty();
    let records = exp.run_condition(condition, uncertainty)?;
    let row = mracrl::harness::summarize(condition, &uncertainty, &records);
    export_first_seed(&cfg, &policies, &[&records[0]])?;
    emit_summary(&cfg, &format!("eval_{}.csv", condition.slug()), &[row])
}

fn compare(config: &Path, force: bool) -> Result<()> {
    let cfg = load_config(config)?;
    let _lock = prepare(&cfg)?;
    let policies = Policies::load(&cfg, &cfg.conditions)?;
    let exp = experiment(&cfg, &policies, force);
    let uncertainty = cfg.evaluation_uncertainty();
    let rows = success_table(&exp, &cfg.conditions, uncertainty)?;
    let seed = cfg.seed_base;
    let store = RecordStore::new(cfg.output_dir.join("records"));
    let firsts: Vec<EpisodeRecord> =
        cfg.conditions.iter().filter_map(|&c| store.load(c, &uncertainty, seed).transpose()).collect::<Result<_, _>>()?;
    export_first_seed(&cfg, &policies, &firsts.iter().collect::<Vec<_>>())?;
    emit_summary(&cfg, "compare.csv", &rows)
}

fn sweep(config: &Path, betas: &[f64], force: bool) -> Result<()> {
    if betas.is_empty() {
        bail!("--betas must list at least one level");
    }
    let cfg = load_config(config)?;
    let _lock = prepare(&cfg)?;
    let conditions = [Condition::Rl, Condition::MracRl];
    let policies = Policies::load(&cfg, &conditions)?;
    let exp = experiment(&cfg, &policies, force);
    let rows = loe_sweep(&exp, betas)?;
    let store = RecordStore::new(cfg.output_dir.join("records"));
    let mut firsts = Vec::new();
    for &beta in betas {
        for c in conditions {
            firsts.extend(store.load(c, &cfg.loe(beta), cfg.seed_base)?);
        }
    }
    export_first_seed(&cfg, &policies, &firsts.iter().collect::<Vec<_>>())?;
    emit_summary(&cfg, "sweep_loe.csv", &rows)
}

fn plot_files(paths: &[PathBuf], labels: &[String], out: &Path) -> Result<()> {
    if !labels.is_empty() && labels.len() != paths.len() {
        bail!("{} labels given for {} trajectories", labels.len(), paths.len());
    }
    let mut series = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let traj = Trajectory::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))?;
        let label = match labels.get(i) {
            Some(l) => l.clone(),
            None => p.file_stem().map_or_else(|| format!("series {}", i + 1), |s| s.to_string_lossy().into_owned()),
        };
        series.push(plot::Series { label, source: p.display().to_string(), trajectory: traj });
    }
    let svg = plot::render(&series)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    println!("{}", out.display());
    Ok(())
}
