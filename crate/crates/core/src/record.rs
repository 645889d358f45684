//! Line-delimited match logs and verified replay.
//!
//! A log is a header line followed by one line per applied action, one line
//! per settled round and a closing line. Every step carries the post-action
//! hand sizes and a state hash so replay can pinpoint divergence.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cards::Level;
use crate::combos::{Action, WireAction};
use crate::engine::{settle_round, start_match, start_round, Phase, Role, RoundResult, Seat};
use crate::error::RecordError;
use crate::runner::{round_seed, MatchRecord, Observer};

pub const LOG_FORMAT: &str = "guandan-match-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogLine {
    Step {
        round: u32,
        seat: Seat,
        phase: Phase,
        act: WireAction,
        hands: [u8; 4],
        hash: String,
    },
    Settle {
        round: u32,
        order: [Seat; 4],
        roles: [Role; 4],
        rewards: [i32; 4],
        levels: [Level; 2],
    },
    End {
        winner: usize,
        levels: [Level; 2],
        steps: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchLog {
    pub header: LogHeader,
    pub lines: Vec<LogLine>,
}

fn hex(h: u64) -> String {
    format!("{h:016x}")
}

/// Build the log lines of a match run with `record_steps` enabled.
pub fn to_log(rec: &MatchRecord) -> Result<MatchLog, RecordError> {
    if rec.steps.len() as u64 != rec.step_count {
        return Err(RecordError::Format {
            line: 0,
            message: "match was run without step recording".into(),
        });
    }
    let mut lines = Vec::with_capacity(rec.steps.len() + rec.results.len() + 1);
    let mut steps = rec.steps.iter().peekable();
    for (i, result) in rec.results.iter().enumerate() {
        while let Some(s) = steps.next_if(|s| s.round == i as u32) {
            lines.push(LogLine::Step {
                round: s.round,
                seat: s.seat,
                phase: s.phase,
                act: s.action.to_wire(),
                hands: s.hand_sizes,
                hash: hex(s.state_hash),
            });
        }
        lines.push(LogLine::Settle {
            round: i as u32,
            order: result.order,
            roles: result.roles,
            rewards: result.rewards,
            levels: result.team_levels,
        });
    }
    lines.push(LogLine::End {
        winner: rec.winning_team,
        levels: rec.final_levels,
        steps: rec.step_count,
    });
    Ok(MatchLog {
        header: LogHeader {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            seed: rec.seed,
        },
        lines,
    })
}

pub fn write_log(log: &MatchLog, mut w: impl Write) -> Result<(), RecordError> {
    let to_io = |e: serde_json::Error| RecordError::Io(e.into());
    serde_json::to_writer(&mut w, &log.header).map_err(to_io)?;
    w.write_all(b"\n")?;
    for line in &log.lines {
        serde_json::to_writer(&mut w, line).map_err(to_io)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_log(r: impl BufRead) -> Result<MatchLog, RecordError> {
    let mut header = None;
    let mut lines = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |e: serde_json::Error| RecordError::Format {
            line: i + 1,
            message: e.to_string(),
        };
        if header.is_none() {
            let h: LogHeader = serde_json::from_str(&line).map_err(err)?;
            if h.format != LOG_FORMAT || h.version != LOG_VERSION {
                return Err(RecordError::Format {
                    line: i + 1,
                    message: format!("unsupported log {} v{}", h.format, h.version),
                });
            }
            header = Some(h);
        } else {
            lines.push(serde_json::from_str(&line).map_err(err)?);
        }
    }
    let header = header.ok_or(RecordError::Format {
        line: 0,
        message: "empty log".into(),
    })?;
    Ok(MatchLog { header, lines })
}

pub fn read_log_file(path: impl AsRef<Path>) -> Result<MatchLog, RecordError> {
    read_log(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplaySummary {
    pub seed: u64,
    pub results: Vec<RoundResult>,
    pub final_levels: [Level; 2],
    pub winning_team: usize,
    pub hashes: Vec<u64>,
}

pub fn replay(log: &MatchLog) -> Result<ReplaySummary, RecordError> {
    replay_observed(log, &mut ())
}

/// Re-execute a log through the engine, checking every step's legality,
/// hand sizes and state hash, and every settlement.
pub fn replay_observed(
    log: &MatchLog,
    obs: &mut dyn Observer,
) -> Result<ReplaySummary, RecordError> {
    let seed = log.header.seed;
    let mut m = start_match(seed);
    let mut summary = ReplaySummary {
        seed,
        results: Vec::new(),
        final_levels: m.team_levels,
        winning_team: 0,
        hashes: Vec::new(),
    };
    let mut lines = log.lines.iter();
    let mut step = 0usize;
    let mismatch = |step: usize, message: String| RecordError::Mismatch { step, message };
    loop {
        let mut round = start_round(&m, round_seed(seed, m.round_index))
            .map_err(|e| mismatch(step, e.to_string()))?;
        obs.round_started(&round, &m);
        while round.phase() != Phase::Settled {
            let Some(LogLine::Step {
                round: r,
                seat,
                phase,
                act,
                hands,
                hash,
            }) = lines.next()
            else {
                return Err(mismatch(step, "expected a step line".into()));
            };
            if *r != m.round_index || *seat != round.current_seat() || *phase != round.phase() {
                return Err(mismatch(
                    step,
                    format!(
                        "expected round {} seat {} phase {}, log has round {r} seat {seat} phase {}",
                        m.round_index,
                        round.current_seat(),
                        round.phase().name(),
                        phase.name()
                    ),
                ));
            }
            let action =
                Action::from_wire(act, round.level()).map_err(|e| mismatch(step, e.to_string()))?;
            let actions = round.legal_actions();
            if !actions.contains(&action) {
                return Err(mismatch(step, format!("{action} is not legal here")));
            }
            obs.before_act(&round, &m, &actions);
            let events = round
                .apply_action(*seat, action)
                .map_err(|e| mismatch(step, e.to_string()))?;
            obs.after_act(&round, &m, *seat, &action, &events);
            if round.hand_sizes() != *hands {
                return Err(mismatch(
                    step,
                    format!("hand sizes {:?} != {hands:?}", round.hand_sizes()),
                ));
            }
            let h = round.state_hash(&m);
            if hex(h) != *hash {
                return Err(mismatch(step, format!("state hash {} != {hash}", hex(h))));
            }
            summary.hashes.push(h);
            step += 1;
        }
        let result = settle_round(&round, &mut m).map_err(|e| mismatch(step, e.to_string()))?;
        match lines.next() {
            Some(LogLine::Settle {
                round: r,
                order,
                roles,
                rewards,
                levels,
            }) if *r + 1 == m.round_index
                && *order == result.order
                && *roles == result.roles
                && *rewards == result.rewards
                && *levels == m.team_levels => {}
            other => {
                return Err(mismatch(
                    step,
                    format!("settlement differs: got {other:?}, replay {result:?}"),
                ));
            }
        }
        obs.settled(&round, &m, &result);
        summary.results.push(result);
        if m.terminated {
            break;
        }
    }
    match lines.next() {
        Some(LogLine::End {
            winner,
            levels,
            steps,
        }) if Some(*winner) == m.winning_team
            && *levels == m.team_levels
            && *steps == step as u64 => {}
        other => return Err(mismatch(step, format!("match end differs: {other:?}"))),
    }
    if lines.next().is_some() {
        return Err(mismatch(step, "trailing lines after match end".into()));
    }
    summary.final_levels = m.team_levels;
    summary.winning_team = m.winning_team.unwrap_or(0);
    Ok(summary)
}
