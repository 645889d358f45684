//! Fixed-width observation and action vectors, rewards, and trajectory export.
//!
//! Observation layout (722 entries, all in 0..=2):
//!
//! | offset | width | content                                          |
//! |--------|-------|--------------------------------------------------|
//! | 0      | 54    | own hand counts                                  |
//! | 54     | 54    | unseen cards (deck minus own hand minus played)  |
//! | 108    | 162   | cards played by left, partner, right             |
//! | 270    | 79    | most recent action of the round                  |
//! | 349    | 237   | most recent action of left, partner, right       |
//! | 586    | 84    | remaining-card one-hots of left, partner, right  |
//! | 670    | 39    | own level, opponent level, round level one-hots  |
//! | 709    | 13    | own wild count in the round level's slot         |
//!
//! Action layout (79 entries): 54 card counts, 10 type one-hot, 15 key-rank
//! one-hot. Pass and no-action are all zeros.

use std::io::Write;

use serde::Serialize;

use crate::cards::{CardSet, Level, Rank, CARD_KINDS, HAND_SIZE};
use crate::combos::{Action, Combination, ComboType};
use crate::engine::{Event, MatchState, Role, RoundResult, RoundState, Seat};
use crate::error::RecordError;
use crate::record::{replay_observed, MatchLog};
use crate::runner::Observer;

pub const OBS_DIM: usize = 722;
pub const ACT_DIM: usize = 79;
pub const TYPE_DIM: usize = 10;
pub const RANK_DIM: usize = 15;
pub const COUNT_DIM: usize = HAND_SIZE + 1;
pub const LEVEL_DIM: usize = 13;

pub const OFF_HAND: usize = 0;
pub const OFF_UNSEEN: usize = 54;
pub const OFF_PLAYED: usize = 108;
pub const OFF_LAST: usize = 270;
pub const OFF_RECENT: usize = 349;
pub const OFF_REST: usize = 586;
pub const OFF_LEVELS: usize = 670;
pub const OFF_WILD: usize = 709;

pub type Observation = [u8; OBS_DIM];
pub type ActionVec = [u8; ACT_DIM];

fn put_counts(out: &mut [u8], cards: CardSet) {
    out[..CARD_KINDS].copy_from_slice(&cards.counts());
}

pub fn encode_action_into(out: &mut [u8], action: &Action) {
    out[..ACT_DIM].fill(0);
    let (cards, ctype, key) = match action {
        Action::Play(c) if c.is_pass() => return,
        Action::Play(c) => (c.cards, c.ctype, c.key),
        Action::Tribute(card) | Action::Back(card) => (
            CardSet::EMPTY.with(*card, 1),
            ComboType::Single,
            card.rank(),
        ),
    };
    put_counts(out, cards);
    out[CARD_KINDS + ctype as usize - 1] = 1;
    out[CARD_KINDS + TYPE_DIM + key.index()] = 1;
}

/// The level only matters to callers that re-derive a combination; the
/// vector itself is level-independent.
pub fn encode_action(action: &Action, _level: Level) -> ActionVec {
    let mut v = [0; ACT_DIM];
    encode_action_into(&mut v, action);
    v
}

fn put_combo(out: &mut [u8], c: Option<Combination>) {
    if let Some(c) = c {
        encode_action_into(out, &Action::Play(c));
    }
}

fn put_level(out: &mut [u8], level: Level) {
    out[level.rank().index()] = 1;
}

pub fn encode_observation_into(out: &mut [u8], round: &RoundState, m: &MatchState, seat: Seat) {
    out[..OBS_DIM].fill(0);
    let hand = round.hand(seat);
    put_counts(&mut out[OFF_HAND..], hand);
    let played = Seat::ALL
        .iter()
        .fold(CardSet::EMPTY, |acc, &s| acc.plus(round.played(s)));
    put_counts(
        &mut out[OFF_UNSEEN..],
        CardSet::full_deck().minus(hand).minus(played),
    );
    for k in 1..4 {
        let other = seat.offset(k);
        put_counts(
            &mut out[OFF_PLAYED + (k - 1) * CARD_KINDS..],
            round.played(other),
        );
        put_combo(
            &mut out[OFF_RECENT + (k - 1) * ACT_DIM..],
            round.last_action(other),
        );
        let rest = round.hand(other).len().min(HAND_SIZE);
        out[OFF_REST + (k - 1) * COUNT_DIM + rest] = 1;
    }
    put_combo(&mut out[OFF_LAST..], round.last_play().map(|(_, c)| c));
    put_level(&mut out[OFF_LEVELS..], m.self_level(seat));
    put_level(&mut out[OFF_LEVELS + LEVEL_DIM..], m.oppo_level(seat));
    put_level(&mut out[OFF_LEVELS + 2 * LEVEL_DIM..], round.level());
    let level = round.level();
    out[OFF_WILD + level.rank().index()] = hand.count(level.wild_card());
}

pub fn encode_observation(round: &RoundState, m: &MatchState, seat: Seat) -> Observation {
    let mut v = [0; OBS_DIM];
    encode_observation_into(&mut v, round, m, seat);
    v
}

/// Rewards of a settled round from the roles alone.
pub fn assign_rewards(result: &RoundResult) -> [i32; 4] {
    let banker = result.order[0];
    let partner_role = result.roles[banker.partner().index()];
    let magnitude = match partner_role {
        Role::Follower => 3,
        Role::Third => 2,
        _ => 1,
    };
    if result.level == Level::ACE && partner_role == Role::Dweller {
        return [0; 4];
    }
    Seat::ALL.map(|s| {
        if s.team() == banker.team() {
            magnitude
        } else {
            -magnitude
        }
    })
}

pub const TRAJECTORY_FORMAT: &str = "guandan-trajectories";
pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Serialize)]
struct TrajectoryHeader<'a> {
    format: &'a str,
    version: u32,
    seed: u64,
    obs_dim: usize,
    act_dim: usize,
    seats: usize,
    vector_encoding: &'a str,
}

#[derive(Serialize)]
struct TrajectoryStep<'a> {
    step: u64,
    round: u32,
    phase: &'a str,
    seat: Seat,
    obs: [String; 4],
    act: [String; 4],
    reward: [i32; 4],
    terminal: bool,
}

fn digits(v: &[u8]) -> String {
    v.iter().map(|&d| (b'0' + d) as char).collect()
}

struct Exporter<W: Write> {
    out: W,
    step: u64,
    pending: Option<(u32, &'static str, Seat, [String; 4], [String; 4])>,
    error: Option<std::io::Error>,
}

impl<W: Write> Exporter<W> {
    fn flush(&mut self, reward: [i32; 4], terminal: bool) {
        let Some((round, phase, seat, obs, act)) = self.pending.take() else {
            return;
        };
        let rec = TrajectoryStep {
            step: self.step,
            round,
            phase,
            seat,
            obs,
            act,
            reward,
            terminal,
        };
        self.step += 1;
        if self.error.is_some() {
            return;
        }
        let res = serde_json::to_writer(&mut self.out, &rec)
            .map_err(std::io::Error::from)
            .and_then(|_| self.out.write_all(b"\n"));
        if let Err(e) = res {
            self.error = Some(e);
        }
    }
}

impl<W: Write> Observer for Exporter<W> {
    fn before_act(&mut self, round: &RoundState, m: &MatchState, _actions: &[Action]) {
        self.flush([0; 4], false);
        let obs = Seat::ALL.map(|s| digits(&encode_observation(round, m, s)));
        let act = std::array::from_fn(|_| "0".repeat(ACT_DIM));
        self.pending = Some((
            m.round_index,
            round.phase().name(),
            round.current_seat(),
            obs,
            act,
        ));
    }

    fn after_act(
        &mut self,
        round: &RoundState,
        _m: &MatchState,
        seat: Seat,
        action: &Action,
        _events: &[Event],
    ) {
        if let Some(p) = &mut self.pending {
            p.4[seat.index()] = digits(&encode_action(action, round.level()));
        }
    }

    fn settled(&mut self, _round: &RoundState, _m: &MatchState, result: &RoundResult) {
        self.flush(assign_rewards(result), true);
    }
}

/// Replay `log` and write one JSON line per applied action: the four seats'
/// observations before the action, the action vectors (zero for seats that
/// did not act), rewards (nonzero only on the step that ended a round) and a
/// terminal flag marking round ends. Returns the number of step records.
pub fn export_trajectories(log: &MatchLog, mut out: impl Write) -> Result<u64, RecordError> {
    let header = TrajectoryHeader {
        format: TRAJECTORY_FORMAT,
        version: TRAJECTORY_VERSION,
        seed: log.header.seed,
        obs_dim: OBS_DIM,
        act_dim: ACT_DIM,
        seats: 4,
        vector_encoding: "digits",
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    let mut ex = Exporter {
        out,
        step: 0,
        pending: None,
        error: None,
    };
    replay_observed(log, &mut ex)?;
    if let Some(e) = ex.error {
        return Err(e.into());
    }
    Ok(ex.step)
}

/// Key rank slot used by the action encoding.
pub fn rank_slot(rank: Rank) -> usize {
    CARD_KINDS + TYPE_DIM + rank.index()
}
