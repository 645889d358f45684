//! Batch runners and reports: pairwise evaluation, throughput benchmark,
//! agent timing, self-play log generation.
//!
//! A step is one applied agent action: a play, pass, tribute or
//! back-tribute.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::agents::{make_agent, Agent};
use crate::cards::derive_seed;
use crate::engine::Seat;
use crate::error::HarnessError;
use crate::record::{to_log, write_log};
use crate::runner::{run_match, MatchRecord, RunOptions};

/// Seed of match `index` in a batch seeded with `seed`.
pub fn match_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, index)
}

/// Agents for one match; seat `i` gets `names[i]`.
pub fn seat_agents(
    names: &[&str; 4],
    seed: u64,
) -> Result<[Box<dyn Agent + Send>; 4], HarnessError> {
    let mut out = Vec::with_capacity(4);
    for (i, name) in names.iter().enumerate() {
        out.push(make_agent(name, derive_seed(seed, 0x5EA7 + i as u64))?);
    }
    Ok(out.try_into().ok().expect("four agents"))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::BadArgument(e.to_string()))
}

/// Run matches `0..n` in parallel; results come back in index order.
pub fn run_batch(
    names: &[&str; 4],
    n: u64,
    seed: u64,
    workers: usize,
    opts: &RunOptions,
) -> Result<Vec<MatchRecord>, HarnessError> {
    for name in names {
        make_agent(name, 0)?;
    }
    pool(workers)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let s = match_seed(seed, i);
                let mut agents = seat_agents(names, s)?;
                run_match(&mut agents, s, opts).map_err(|fault| HarnessError::Fault {
                    index: i,
                    seed: s,
                    fault,
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub team_a: String,
    pub team_b: String,
    pub matches: u64,
    pub rounds: u64,
    /// Rounds team A won with reward +3, +2, +1.
    pub a_won: [u64; 3],
    /// Rounds team B won with reward +3, +2, +1.
    pub b_won: [u64; 3],
    /// Rounds settled with all-zero rewards.
    pub zero: u64,
    pub a_match_wins: u64,
}

impl EvalReport {
    fn pct(&self, n: u64) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            100.0 * n as f64 / self.rounds as f64
        }
    }

    /// Percent of rounds won by team A with +3, +2, +1.
    pub fn a_tiers(&self) -> [f64; 3] {
        self.a_won.map(|n| self.pct(n))
    }

    pub fn b_tiers(&self) -> [f64; 3] {
        self.b_won.map(|n| self.pct(n))
    }

    /// Percent of rounds by reward magnitude 3, 2, 1, 0. Sums to 100.
    pub fn magnitude_tiers(&self) -> [f64; 4] {
        [
            self.pct(self.a_won[0] + self.b_won[0]),
            self.pct(self.a_won[1] + self.b_won[1]),
            self.pct(self.a_won[2] + self.b_won[2]),
            self.pct(self.zero),
        ]
    }

    pub fn win_rate(&self) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            self.a_match_wins as f64 / self.matches as f64
        }
    }

    fn add(&mut self, rec: &MatchRecord, a_team: usize) {
        self.matches += 1;
        if rec.winning_team == a_team {
            self.a_match_wins += 1;
        }
        for r in &rec.results {
            self.rounds += 1;
            let a = r.rewards[a_team];
            match a {
                0 => self.zero += 1,
                x if x > 0 => self.a_won[(3 - x) as usize] += 1,
                x => self.b_won[(3 + x) as usize] += 1,
            }
        }
    }

    pub const TSV_HEADER: &'static str =
        "team_a\tteam_b\tmatches\trounds\ta_won_3_pct\ta_won_2_pct\ta_won_1_pct\tb_won_3_pct\tb_won_2_pct\tb_won_1_pct\tzero_pct\twin_rate";

    pub fn tsv_row(&self) -> String {
        let a = self.a_tiers();
        let b = self.b_tiers();
        format!(
            "{}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.4}",
            self.team_a,
            self.team_b,
            self.matches,
            self.rounds,
            a[0],
            a[1],
            a[2],
            b[0],
            b[1],
            b[2],
            self.pct(self.zero),
            self.win_rate()
        )
    }

    pub fn table(&self) -> String {
        let a = self.a_tiers();
        let t = self.magnitude_tiers();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} (seats 0,2) vs {} (seats 1,3)",
            self.team_a, self.team_b
        );
        let _ = writeln!(s, "matches {}  rounds {}", self.matches, self.rounds);
        let _ = writeln!(
            s,
            "{:<44}{:>8}",
            "rounds won by team A with reward 3 (%)",
            format!("{:.2}", a[0])
        );
        let _ = writeln!(
            s,
            "{:<44}{:>8}",
            "rounds won by team A with reward 2 (%)",
            format!("{:.2}", a[1])
        );
        let _ = writeln!(
            s,
            "{:<44}{:>8}",
            "rounds won by team A with reward 1 (%)",
            format!("{:.2}", a[2])
        );
        let _ = writeln!(
            s,
            "{:<44}{:>8}",
            "rounds by |reward| 3 / 2 / 1 / 0 (%)",
            format!("{:.2} / {:.2} / {:.2} / {:.2}", t[0], t[1], t[2], t[3])
        );
        let _ = writeln!(
            s,
            "{:<44}{:>8}",
            "match win rate of team A",
            format!("{:.4}", self.win_rate())
        );
        s
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub team_a: String,
    pub team_b: String,
    pub matches: u64,
    pub seed: u64,
    pub workers: usize,
    /// Also play every deal with the teams' seats swapped.
    pub mirrored: bool,
}

pub fn evaluate(cfg: &EvalConfig) -> Result<EvalReport, HarnessError> {
    if cfg.matches == 0 {
        return Err(HarnessError::BadArgument(
            "matches must be at least 1".into(),
        ));
    }
    let (a, b) = (cfg.team_a.as_str(), cfg.team_b.as_str());
    let mut report = EvalReport {
        team_a: cfg.team_a.clone(),
        team_b: cfg.team_b.clone(),
        matches: 0,
        rounds: 0,
        a_won: [0; 3],
        b_won: [0; 3],
        zero: 0,
        a_match_wins: 0,
    };
    let opts = RunOptions::default();
    for rec in run_batch(&[a, b, a, b], cfg.matches, cfg.seed, cfg.workers, &opts)? {
        report.add(&rec, 0);
    }
    if cfg.mirrored {
        for rec in run_batch(&[b, a, b, a], cfg.matches, cfg.seed, cfg.workers, &opts)? {
            report.add(&rec, 1);
        }
    }
    Ok(report)
}

/// Win rates of each row agent against each column agent.
pub fn win_matrix(
    agents: &[&str],
    matches: u64,
    seed: u64,
    workers: usize,
) -> Result<String, HarnessError> {
    let mut s = String::from("team_a \\ team_b");
    for b in agents {
        let _ = write!(s, "\t{b}");
    }
    s.push('\n');
    for a in agents {
        s.push_str(a);
        for b in agents {
            let r = evaluate(&EvalConfig {
                team_a: a.to_string(),
                team_b: b.to_string(),
                matches,
                seed,
                workers,
                mirrored: true,
            })?;
            let _ = write!(s, "\t{:.4}", r.win_rate());
        }
        s.push('\n');
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub envs: usize,
    pub steps: u64,
    pub matches: u64,
    pub seconds: f64,
}

impl ThroughputRow {
    pub fn steps_per_hour(&self) -> f64 {
        if self.seconds > 0.0 {
            self.steps as f64 * 3600.0 / self.seconds
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub machine: String,
    pub rows: Vec<ThroughputRow>,
}

pub fn machine_descriptor() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{} {} logical_cpus={cpus}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

impl ThroughputReport {
    pub fn tsv(&self) -> String {
        let mut s = format!(
            "# machine: {}\n# step = one applied action (play, pass, tribute or back-tribute)\nenvs\tsteps\tmatches\tseconds\tsteps_per_hour\n",
            self.machine
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.3}\t{:.0}",
                r.envs,
                r.steps,
                r.matches,
                r.seconds,
                r.steps_per_hour()
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "machine: {}\n{:>5} {:>14} {:>18}\n",
            self.machine, "envs", "steps", "steps/hour"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>5} {:>14} {:>18.0}",
                r.envs,
                r.steps,
                r.steps_per_hour()
            );
        }
        s
    }
}

/// Run `n` random-agent engines in parallel for `duration` and count steps.
/// Each engine finishes its current match after the deadline; elapsed time
/// includes that tail.
pub fn bench_point(envs: usize, duration: Duration, seed: u64) -> ThroughputRow {
    let stop = AtomicBool::new(false);
    let steps = AtomicU64::new(0);
    let matches = AtomicU64::new(0);
    let start = Instant::now();
    std::thread::scope(|scope| {
        for env in 0..envs {
            let (stop, steps, matches) = (&stop, &steps, &matches);
            scope.spawn(move || {
                let mut i = 0u64;
                while !stop.load(Ordering::Relaxed) {
                    let s = match_seed(derive_seed(seed, env as u64), i);
                    let mut agents = seat_agents(&["random"; 4], s).expect("random agent exists");
                    if let Ok(rec) = run_match(&mut agents, s, &RunOptions::default()) {
                        steps.fetch_add(rec.step_count, Ordering::Relaxed);
                        matches.fetch_add(1, Ordering::Relaxed);
                    }
                    i += 1;
                }
            });
        }
        std::thread::sleep(duration);
        stop.store(true, Ordering::Relaxed);
    });
    ThroughputRow {
        envs,
        steps: steps.into_inner(),
        matches: matches.into_inner(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn bench(
    env_counts: &[usize],
    duration: Duration,
    seed: u64,
) -> Result<ThroughputReport, HarnessError> {
    if duration.is_zero() {
        return Err(HarnessError::BadArgument(
            "duration must be positive".into(),
        ));
    }
    if env_counts.is_empty() || env_counts.contains(&0) {
        return Err(HarnessError::BadArgument(
            "environment counts must be at least 1".into(),
        ));
    }
    let mut counts = env_counts.to_vec();
    counts.sort_unstable();
    counts.dedup();
    Ok(ThroughputReport {
        machine: machine_descriptor(),
        rows: counts
            .into_iter()
            .map(|n| bench_point(n, duration, seed))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub agent: String,
    pub selections: u64,
    pub seconds: f64,
}

impl TimingRow {
    pub fn per_second(&self) -> f64 {
        if self.seconds > 0.0 {
            self.selections as f64 / self.seconds
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub matches: u64,
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn tsv(&self) -> String {
        let mut s = String::from("agent\tselections\tseconds\tselections_per_sec\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{:.6}\t{:.1}",
                r.agent,
                r.selections,
                r.seconds,
                r.per_second()
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<12}{:>24}\n", "agent", "time (steps/s)");
        for r in &self.rows {
            let _ = writeln!(s, "{:<12}{:>24.0}", r.agent, r.per_second());
        }
        s
    }
}

/// Time each agent's selection callback over `matches` matches in which it
/// fills all four seats. Engine stepping is excluded.
pub fn time_agents(names: &[&str], matches: u64, seed: u64) -> Result<TimingReport, HarnessError> {
    let opts = RunOptions {
        time_agents: true,
        ..Default::default()
    };
    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let mut selections = 0;
        let mut time = Duration::ZERO;
        for i in 0..matches {
            let s = match_seed(seed, i);
            let mut agents = seat_agents(&[name; 4], s)?;
            let rec = run_match(&mut agents, s, &opts).map_err(|fault| HarnessError::Fault {
                index: i,
                seed: s,
                fault,
            })?;
            selections += rec.decisions.iter().sum::<u64>();
            time += rec.agent_time.iter().sum::<Duration>();
        }
        rows.push(TimingRow {
            agent: name.to_string(),
            selections,
            seconds: time.as_secs_f64(),
        });
    }
    Ok(TimingReport { matches, rows })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfplaySummary {
    pub files: Vec<PathBuf>,
    pub steps: u64,
    pub rounds: u64,
}

/// Play `matches` matches and write one log per match into `dir`.
pub fn selfplay(
    names: &[&str; 4],
    matches: u64,
    seed: u64,
    workers: usize,
    dir: &Path,
) -> Result<SelfplaySummary, HarnessError> {
    fs::create_dir_all(dir)?;
    let opts = RunOptions {
        record_steps: true,
        ..Default::default()
    };
    for name in names {
        make_agent(name, 0)?;
    }
    let results: Vec<Result<(PathBuf, u64, u64), HarnessError>> = pool(workers)?.install(|| {
        (0..matches)
            .into_par_iter()
            .map(|i| {
                let s = match_seed(seed, i);
                let mut agents = seat_agents(names, s)?;
                let rec =
                    run_match(&mut agents, s, &opts).map_err(|fault| HarnessError::Fault {
                        index: i,
                        seed: s,
                        fault,
                    })?;
                let path = dir.join(format!("match-{i:06}.jsonl"));
                let mut w = BufWriter::new(File::create(&path)?);
                write_log(&to_log(&rec)?, &mut w)?;
                std::io::Write::flush(&mut w)?;
                Ok((path, rec.step_count, rec.results.len() as u64))
            })
            .collect()
    });
    let mut summary = SelfplaySummary {
        files: Vec::new(),
        steps: 0,
        rounds: 0,
    };
    for r in results {
        let (path, steps, rounds) = r?;
        summary.files.push(path);
        summary.steps += steps;
        summary.rounds += rounds;
    }
    Ok(summary)
}

/// Human-readable account of a replayed match.
pub fn format_replay(summary: &crate::record::ReplaySummary) -> String {
    let mut s = format!(
        "seed {}  rounds {}  steps {}\n",
        summary.seed,
        summary.results.len(),
        summary.hashes.len()
    );
    for (i, r) in summary.results.iter().enumerate() {
        let order: Vec<String> = r.order.iter().map(Seat::to_string).collect();
        let _ = writeln!(
            s,
            "round {:>3}  level {}  order [{}]  rewards {:?}  levels {}/{}",
            i + 1,
            r.level,
            order.join(","),
            r.rewards,
            r.team_levels[0],
            r.team_levels[1]
        );
    }
    let _ = writeln!(
        s,
        "winner: team {}  final levels {}/{}",
        summary.winning_team, summary.final_levels[0], summary.final_levels[1]
    );
    s
}
