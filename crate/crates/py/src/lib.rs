//! Python bindings: card rules, a steppable match environment, encoders and
//! the batch harness.

use std::path::PathBuf;
use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use guandan_core::agents::{make_agent, Agent, Decision, AGENT_NAMES};
use guandan_core::combos::{self, WireAction};
use guandan_core::encode::{self, ACT_DIM, OBS_DIM};
use guandan_core::engine::{self, Phase};
use guandan_core::harness::{self, EvalConfig};
use guandan_core::record::{read_log_file, replay as replay_log};
use guandan_core::runner::round_seed;
use guandan_core::{Action, CardSet, Combination, Level, MatchState, Rank, RoundState, Seat};

/// `(type, rank, cards)`; a pass is `("PASS", "PASS", None)`.
type PyAction = (String, String, Option<Vec<String>>);

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_level(s: &str) -> PyResult<Level> {
    let mut chars = s.chars();
    match (chars.next().and_then(Rank::from_char), chars.next()) {
        (Some(r), None) => Level::new(r).map_err(err),
        _ => Err(err(format!("bad level {s:?}"))),
    }
}

fn parse_cards(codes: &[String]) -> PyResult<CardSet> {
    CardSet::from_codes(codes).map_err(err)
}

fn to_py(a: &Action) -> PyAction {
    let w = a.to_wire();
    (w.kind, w.rank, w.cards)
}

fn parse_action(a: &PyAction, level: Level) -> PyResult<Action> {
    let wire = WireAction {
        kind: a.0.clone(),
        rank: a.1.clone(),
        cards: a.2.clone(),
    };
    Action::from_wire(&wire, level).map_err(err)
}

fn parse_combo(a: &PyAction, level: Level) -> PyResult<Combination> {
    match parse_action(a, level)? {
        Action::Play(c) => Ok(c),
        other => Err(err(format!("{other} is not a card play"))),
    }
}

fn parse_seat(i: usize) -> PyResult<Seat> {
    Seat::new(i).ok_or_else(|| err(format!("seat {i} out of range")))
}

/// Every combination the cards form at `level`.
#[pyfunction]
fn classify(cards: Vec<String>, level: &str) -> PyResult<Vec<PyAction>> {
    let level = parse_level(level)?;
    Ok(combos::classify(parse_cards(&cards)?, level)
        .into_iter()
        .map(|c| to_py(&Action::Play(c)))
        .collect())
}

/// Legal plays from `hand`, in canonical order; pass comes first when
/// following `incumbent`.
#[pyfunction]
#[pyo3(signature = (hand, level, incumbent=None))]
fn legal_plays(
    hand: Vec<String>,
    level: &str,
    incumbent: Option<PyAction>,
) -> PyResult<Vec<PyAction>> {
    let level = parse_level(level)?;
    let inc = incumbent.map(|a| parse_combo(&a, level)).transpose()?;
    let plays = combos::legal_plays(parse_cards(&hand)?, inc.as_ref(), level).map_err(err)?;
    Ok(plays.into_iter().map(|c| to_py(&Action::Play(c))).collect())
}

#[pyfunction]
fn beats(challenger: PyAction, incumbent: PyAction, level: &str) -> PyResult<bool> {
    let level = parse_level(level)?;
    Ok(combos::beats(
        &parse_combo(&challenger, level)?,
        &parse_combo(&incumbent, level)?,
        level,
    ))
}

/// The 79-entry action vector as bytes.
#[pyfunction]
fn encode_action<'py>(
    py: Python<'py>,
    action: PyAction,
    level: &str,
) -> PyResult<Bound<'py, PyBytes>> {
    let level = parse_level(level)?;
    let v = encode::encode_action(&parse_action(&action, level)?, level);
    Ok(PyBytes::new(py, &v))
}

/// A match driven one decision at a time. Seats listed in `bots` are played
/// by built-in agents; `step` advances through them automatically.
#[pyclass(unsendable)]
struct Env {
    seed: u64,
    m: MatchState,
    round: RoundState,
    actions: Vec<Action>,
    bots: [Option<Box<dyn Agent + Send>>; 4],
    bot_names: [Option<String>; 4],
    pending: [i32; 4],
    rounds: Vec<[i32; 4]>,
}

impl Env {
    fn fresh(seed: u64) -> PyResult<(MatchState, RoundState)> {
        let m = engine::start_match(seed);
        let round = engine::start_round(&m, round_seed(seed, 0)).map_err(err)?;
        Ok((m, round))
    }

    fn notify_all(&mut self, events: &[engine::Event]) {
        for e in events {
            self.bots.iter_mut().flatten().for_each(|b| b.notify(e));
        }
    }

    fn begin_round(&mut self) {
        let opening = self.round.opening_events();
        self.notify_all(&opening);
        self.actions = self.round.legal_actions();
    }

    /// Apply one action; settle and deal the next round when it ends.
    fn apply(&mut self, index: usize) -> PyResult<()> {
        let Some(&action) = self.actions.get(index) else {
            return Err(err(format!(
                "action index {index} out of range 0..{}",
                self.actions.len()
            )));
        };
        let seat = self.round.current_seat();
        let events = self.round.apply_action(seat, action).map_err(err)?;
        self.notify_all(&events);
        if self.round.phase() == Phase::Settled {
            let r = engine::settle_round(&self.round, &mut self.m).map_err(err)?;
            for (p, x) in self.pending.iter_mut().zip(r.rewards) {
                *p += x;
            }
            self.rounds.push(r.rewards);
            if self.m.terminated {
                self.actions.clear();
                return Ok(());
            }
            self.round = engine::start_round(&self.m, round_seed(self.seed, self.m.round_index))
                .map_err(err)?;
            self.begin_round();
        } else {
            self.actions = self.round.legal_actions();
        }
        Ok(())
    }

    fn run_bots(&mut self) -> PyResult<()> {
        while !self.m.terminated {
            let seat = self.round.current_seat().index();
            let Some(bot) = self.bots[seat].as_mut() else {
                break;
            };
            let d = Decision::new(&self.round, &self.m, &self.actions);
            let i = bot.act(&d);
            self.apply(i)?;
        }
        Ok(())
    }

    fn make_bots(
        names: &[Option<String>; 4],
        seed: u64,
    ) -> PyResult<[Option<Box<dyn Agent + Send>>; 4]> {
        let mut out: [Option<Box<dyn Agent + Send>>; 4] = Default::default();
        for (i, name) in names.iter().enumerate() {
            if let Some(n) = name {
                out[i] = Some(
                    make_agent(n, guandan_core::cards::derive_seed(seed, 0x5EA7 + i as u64))
                        .map_err(err)?,
                );
            }
        }
        Ok(out)
    }
}

#[pymethods]
impl Env {
    #[new]
    #[pyo3(signature = (seed=0, bots=None))]
    fn new(seed: u64, bots: Option<Vec<Option<String>>>) -> PyResult<Env> {
        let names: [Option<String>; 4] = match bots {
            None => Default::default(),
            Some(v) => v.try_into().map_err(|_| err("bots must list four seats"))?,
        };
        let (m, round) = Env::fresh(seed)?;
        let mut env = Env {
            seed,
            m,
            round,
            actions: Vec::new(),
            bots: Env::make_bots(&names, seed)?,
            bot_names: names,
            pending: [0; 4],
            rounds: Vec::new(),
        };
        env.begin_round();
        env.run_bots()?;
        Ok(env)
    }

    /// Restart the match, optionally with a new seed.
    #[pyo3(signature = (seed=None))]
    fn reset(&mut self, seed: Option<u64>) -> PyResult<()> {
        let seed = seed.unwrap_or(self.seed);
        *self = Env::new(seed, Some(self.bot_names.to_vec()))?;
        Ok(())
    }

    /// Apply action `index` for the current seat, then let bots move.
    /// Returns the per-seat rewards of rounds settled since the last step.
    fn step(&mut self, index: usize) -> PyResult<[i32; 4]> {
        if self.m.terminated {
            return Err(PyRuntimeError::new_err("match is over; call reset()"));
        }
        self.apply(index)?;
        self.run_bots()?;
        Ok(std::mem::take(&mut self.pending))
    }

    fn legal_actions(&self) -> Vec<PyAction> {
        self.actions.iter().map(to_py).collect()
    }

    /// Action vectors for the legal actions, concatenated.
    fn action_vectors<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        let mut out = vec![0u8; ACT_DIM * self.actions.len()];
        for (chunk, a) in out.chunks_mut(ACT_DIM).zip(&self.actions) {
            encode::encode_action_into(chunk, a);
        }
        PyBytes::new(py, &out)
    }

    /// The 722-entry observation for `seat` (default: the seat to act).
    #[pyo3(signature = (seat=None))]
    fn observation<'py>(
        &self,
        py: Python<'py>,
        seat: Option<usize>,
    ) -> PyResult<Bound<'py, PyBytes>> {
        let seat = match seat {
            Some(s) => parse_seat(s)?,
            None => self.round.current_seat(),
        };
        Ok(PyBytes::new(
            py,
            &encode::encode_observation(&self.round, &self.m, seat),
        ))
    }

    fn hand(&self, seat: usize) -> PyResult<Vec<String>> {
        Ok(self.round.hand(parse_seat(seat)?).codes())
    }

    #[getter]
    fn current_seat(&self) -> usize {
        self.round.current_seat().index()
    }

    #[getter]
    fn phase(&self) -> &'static str {
        self.round.phase().name()
    }

    #[getter]
    fn level(&self) -> String {
        self.round.level().to_string()
    }

    #[getter]
    fn team_levels(&self) -> [String; 2] {
        self.m.team_levels.map(|l| l.to_string())
    }

    #[getter]
    fn done(&self) -> bool {
        self.m.terminated
    }

    #[getter]
    fn winning_team(&self) -> Option<usize> {
        self.m.winning_team
    }

    /// Rewards of every settled round so far.
    #[getter]
    fn round_rewards(&self) -> Vec<[i32; 4]> {
        self.rounds.clone()
    }

    fn state_hash(&self) -> u64 {
        self.round.state_hash(&self.m)
    }
}

/// Pairwise evaluation; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (team_a, team_b, matches=1000, seed=0, workers=1, mirrored=false))]
fn evaluate<'py>(
    py: Python<'py>,
    team_a: String,
    team_b: String,
    matches: u64,
    seed: u64,
    workers: usize,
    mirrored: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = EvalConfig {
        team_a,
        team_b,
        matches,
        seed,
        workers: workers.max(1),
        mirrored,
    };
    let r = py.detach(|| harness::evaluate(&cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("team_a", &r.team_a)?;
    d.set_item("team_b", &r.team_b)?;
    d.set_item("matches", r.matches)?;
    d.set_item("rounds", r.rounds)?;
    d.set_item("a_tiers", r.a_tiers())?;
    d.set_item("b_tiers", r.b_tiers())?;
    d.set_item("magnitude_tiers", r.magnitude_tiers())?;
    d.set_item("win_rate", r.win_rate())?;
    Ok(d)
}

/// Steps per hour for each environment count: list of (envs, steps, seconds, steps_per_hour).
#[pyfunction]
#[pyo3(name = "bench", signature = (envs, seconds=1.0, seed=0))]
fn throughput(
    py: Python<'_>,
    envs: Vec<usize>,
    seconds: f64,
    seed: u64,
) -> PyResult<Vec<(usize, u64, f64, f64)>> {
    if !seconds.is_finite() || seconds <= 0.0 {
        return Err(err("seconds must be positive"));
    }
    let r = py
        .detach(|| harness::bench(&envs, Duration::from_secs_f64(seconds), seed))
        .map_err(err)?;
    Ok(r.rows
        .iter()
        .map(|x| (x.envs, x.steps, x.seconds, x.steps_per_hour()))
        .collect())
}

/// Write `matches` logs into `out_dir`; returns their paths.
#[pyfunction]
#[pyo3(signature = (agents, matches, out_dir, seed=0, workers=1))]
fn selfplay(
    py: Python<'_>,
    agents: [String; 4],
    matches: u64,
    out_dir: PathBuf,
    seed: u64,
    workers: usize,
) -> PyResult<Vec<PathBuf>> {
    let names = [&agents[0], &agents[1], &agents[2], &agents[3]].map(String::as_str);
    let s = py
        .detach(|| harness::selfplay(&names, matches, seed, workers.max(1), &out_dir))
        .map_err(err)?;
    Ok(s.files)
}

/// Re-execute a log, checking every state hash. Returns
/// `(winning_team, rounds, hashes_checked)`.
#[pyfunction]
fn replay(path: PathBuf) -> PyResult<(usize, usize, usize)> {
    let log = read_log_file(&path).map_err(err)?;
    let s = replay_log(&log).map_err(err)?;
    Ok((s.winning_team, s.results.len(), s.hashes.len()))
}

#[pymodule]
fn guandan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("OBS_DIM", OBS_DIM)?;
    m.add("ACT_DIM", ACT_DIM)?;
    m.add("AGENT_NAMES", AGENT_NAMES.to_vec())?;
    m.add_class::<Env>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(legal_plays, m)?)?;
    m.add_function(wrap_pyfunction!(beats, m)?)?;
    m.add_function(wrap_pyfunction!(encode_action, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(throughput, m)?)?;
    m.add_function(wrap_pyfunction!(selfplay, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
