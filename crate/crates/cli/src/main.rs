use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use guandan_core::agents::{make_agent, AGENT_NAMES};
use guandan_core::encode::export_trajectories;
use guandan_core::harness::{self, EvalConfig};
use guandan_core::protocol::{run_bot, serve, ClientMessage, SeatTimeouts, ServerConfig};
use guandan_core::record::{read_log_file, replay};

#[derive(Parser)]
#[command(name = "guandan", version, about = "GuanDan match simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; per-match seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the delimited report (or logs, for selfplay) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of logical CPUs).
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Host rooms over newline JSON and WebSocket on one port.
    Serve {
        #[arg(long, env = "GUANDAN_PORT", default_value_t = 23456)]
        port: u16,
        #[arg(long, default_value_t = 64)]
        max_rooms: usize,
        /// Attach a server-side agent: SEAT=NAME, repeatable.
        #[arg(long = "agent", value_name = "SEAT=NAME")]
        agents: Vec<String>,
        /// Seconds a headless seat may take per decision (0 disables).
        #[arg(long, default_value_t = 30)]
        timeout: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pairwise evaluation: team A in seats 0,2 against team B in seats 1,3.
    Eval {
        team_a: String,
        team_b: String,
        #[arg(long, default_value_t = 1000)]
        matches: u64,
        /// Also play every deal with the seats swapped.
        #[arg(long)]
        mirrored: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Win-rate matrix over a list of agents (mirrored seating).
    Matrix {
        #[arg(required = true)]
        agents: Vec<String>,
        #[arg(long, default_value_t = 200)]
        matches: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Throughput of 1..N parallel random-agent engines.
    Bench {
        /// Largest environment count; every count from 1 up is measured.
        #[arg(long, default_value_t = 10)]
        max_envs: usize,
        /// Seconds per point.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Agent decision throughput, timed around the callback only.
    Time {
        #[arg(default_values_t = AGENT_NAMES.map(String::from))]
        agents: Vec<String>,
        #[arg(long, default_value_t = 20)]
        matches: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Re-execute a match log, checking every state hash.
    Replay { log: PathBuf },
    /// Write one match log per match into --out.
    Selfplay {
        /// Agents for seats 0..3; one name fills all seats.
        #[arg(long = "agent", num_args = 1..=4, default_values_t = ["random".to_string()])]
        agents: Vec<String>,
        #[arg(long, default_value_t = 100)]
        matches: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Convert match logs into per-step trajectory records.
    Export {
        /// Log files or directories of logs.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        /// Output file (stdout if absent); one trajectory stream per log.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Connect an in-process agent to a server as a protocol client.
    Bot {
        #[arg(long, default_value = "127.0.0.1:23456")]
        addr: String,
        #[arg(long, default_value = "greedy")]
        agent: String,
        #[arg(long, default_value_t = 0)]
        seat: u8,
        /// Join this room instead of creating one.
        #[arg(long)]
        room: Option<u32>,
        /// Matches to play when creating a room.
        #[arg(long, default_value_t = 1)]
        matches: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn emit(out: &Option<PathBuf>, delimited: &str, human: &str) -> Result<()> {
    print!("{human}");
    if let Some(path) = out {
        fs::write(path, delimited).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn parse_agents(specs: &[String]) -> Result<[Option<String>; 4]> {
    let mut seats: [Option<String>; 4] = Default::default();
    for spec in specs {
        let (seat, name) = spec.split_once('=').context("expected SEAT=NAME")?;
        let seat: usize = seat.trim().parse().context("seat must be 0..3")?;
        if seat > 3 {
            bail!("seat must be 0..3, got {seat}");
        }
        make_agent(name.trim(), 0)?;
        seats[seat] = Some(name.trim().to_string());
    }
    Ok(seats)
}

fn log_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inside: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<_>>()?;
            inside.retain(|f| f.extension().is_some_and(|x| x == "jsonl"));
            inside.sort();
            files.extend(inside);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn export(logs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut steps = 0;
    for f in log_files(logs)? {
        let log = read_log_file(&f).with_context(|| format!("reading {}", f.display()))?;
        steps += export_trajectories(&log, &mut w)
            .with_context(|| format!("exporting {}", f.display()))?;
    }
    w.flush()?;
    info!("exported {steps} steps");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve {
            port,
            max_rooms,
            agents,
            timeout,
            seed,
        } => {
            let config = ServerConfig {
                port,
                max_rooms,
                agents: parse_agents(&agents)?,
                seed,
                timeouts: SeatTimeouts {
                    headless: (timeout > 0).then(|| Duration::from_secs(timeout)),
                    web: None,
                },
            };
            info!("listening on port {port}");
            serve(config)?;
        }
        Command::Eval {
            team_a,
            team_b,
            matches,
            mirrored,
            common,
        } => {
            let r = harness::evaluate(&EvalConfig {
                team_a,
                team_b,
                matches,
                seed: common.seed,
                workers: common.workers(),
                mirrored,
            })?;
            let tsv = format!("{}\n{}\n", harness::EvalReport::TSV_HEADER, r.tsv_row());
            emit(&common.out, &tsv, &r.table())?;
        }
        Command::Matrix {
            agents,
            matches,
            common,
        } => {
            let names: Vec<&str> = agents.iter().map(String::as_str).collect();
            let m = harness::win_matrix(&names, matches, common.seed, common.workers())?;
            emit(&common.out, &m, &m)?;
        }
        Command::Bench {
            max_envs,
            duration,
            common,
        } => {
            if !duration.is_finite() || duration <= 0.0 {
                bail!("duration must be positive");
            }
            let counts: Vec<usize> = (1..=max_envs).collect();
            let r = harness::bench(&counts, Duration::from_secs_f64(duration), common.seed)?;
            emit(&common.out, &r.tsv(), &r.table())?;
        }
        Command::Time {
            agents,
            matches,
            common,
        } => {
            let names: Vec<&str> = agents.iter().map(String::as_str).collect();
            let r = harness::time_agents(&names, matches, common.seed)?;
            emit(&common.out, &r.tsv(), &r.table())?;
        }
        Command::Replay { log } => {
            let parsed =
                read_log_file(&log).with_context(|| format!("reading {}", log.display()))?;
            let summary = replay(&parsed)?;
            print!("{}", harness::format_replay(&summary));
            println!("verified {} state hashes", summary.hashes.len());
        }
        Command::Selfplay {
            agents,
            matches,
            common,
        } => {
            let names: [&str; 4] = match agents.len() {
                1 => [agents[0].as_str(); 4],
                4 => [&agents[0], &agents[1], &agents[2], &agents[3]].map(String::as_str),
                n => bail!("give one agent or four, not {n}"),
            };
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("logs"));
            let s = harness::selfplay(&names, matches, common.seed, common.workers(), &dir)?;
            println!(
                "wrote {} logs to {} ({} rounds, {} steps)",
                s.files.len(),
                dir.display(),
                s.rounds,
                s.steps
            );
        }
        Command::Export { logs, out } => export(&logs, out.as_deref())?,
        Command::Bot {
            addr,
            agent,
            seat,
            room,
            matches,
            seed,
        } => {
            let mut a = make_agent(&agent, seed)?;
            let user_id = format!("{agent}-{seat}");
            let hello = match room {
                Some(room_id) => ClientMessage::JoinRoom {
                    user_id,
                    room_id,
                    seat_num: seat,
                },
                None => ClientMessage::CreateRoom {
                    user_id,
                    round: matches,
                    seat_num: seat,
                },
            };
            let o = run_bot(addr.as_str(), a.as_mut(), &hello)?;
            println!(
                "room {} seat {}: {} matches, victories {:?}, {} actions, {} errors",
                o.room_id,
                o.seat,
                o.matches_finished,
                o.victories,
                o.actions_sent,
                o.errors.len()
            );
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GUANDAN_LOG", "info")).init();
    run(Cli::parse())
}
