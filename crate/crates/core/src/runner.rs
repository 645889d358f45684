//! The match loop: deal, tribute, play and settle until a team wins.

use std::time::{Duration, Instant};

use crate::agents::{Agent, Decision};
use crate::cards::{derive_seed, Level};
use crate::combos::Action;
use crate::engine::{
    settle_round, start_match, start_round, Event, MatchState, Phase, RoundResult, RoundState, Seat,
};
use crate::error::MatchFault;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Abort the match after this many applied actions.
    pub step_ceiling: u64,
    /// Keep per-step records (with state hashes) in the result.
    pub record_steps: bool,
    /// Measure wall-clock time spent inside agent callbacks.
    pub time_agents: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            step_ceiling: 1_000_000,
            record_steps: false,
            time_agents: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub round: u32,
    pub seat: Seat,
    pub phase: Phase,
    pub action: Action,
    /// Hand sizes after the action.
    pub hand_sizes: [u8; 4],
    pub state_hash: u64,
}

#[derive(Debug, Clone)]
pub struct MatchRecord {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub results: Vec<RoundResult>,
    pub final_levels: [Level; 2],
    pub winning_team: usize,
    pub step_count: u64,
    pub agent_time: [Duration; 4],
    pub decisions: [u64; 4],
}

/// Hooks into the match loop. All methods default to no-ops.
pub trait Observer {
    fn round_started(&mut self, _round: &RoundState, _m: &MatchState) {}
    fn before_act(&mut self, _round: &RoundState, _m: &MatchState, _actions: &[Action]) {}
    fn after_act(
        &mut self,
        _round: &RoundState,
        _m: &MatchState,
        _seat: Seat,
        _action: &Action,
        _events: &[Event],
    ) {
    }
    fn settled(&mut self, _round: &RoundState, _m: &MatchState, _result: &RoundResult) {}
}

impl Observer for () {}

/// Seed of the deal for round `index` of the match seeded with `seed`.
pub fn round_seed(seed: u64, index: u32) -> u64 {
    derive_seed(seed, index as u64)
}

pub fn run_match(
    agents: &mut [Box<dyn Agent + Send>; 4],
    seed: u64,
    opts: &RunOptions,
) -> Result<MatchRecord, MatchFault> {
    run_match_observed(agents, seed, opts, &mut ())
}

pub fn run_match_observed(
    agents: &mut [Box<dyn Agent + Send>; 4],
    seed: u64,
    opts: &RunOptions,
    obs: &mut dyn Observer,
) -> Result<MatchRecord, MatchFault> {
    let mut m = start_match(seed);
    let mut rec = MatchRecord {
        seed,
        steps: Vec::new(),
        results: Vec::new(),
        final_levels: m.team_levels,
        winning_team: 0,
        step_count: 0,
        agent_time: [Duration::ZERO; 4],
        decisions: [0; 4],
    };
    let fault = |seat: Seat| move |source| MatchFault::Engine { seat, source };
    loop {
        let mut round =
            start_round(&m, round_seed(seed, m.round_index)).map_err(fault(Seat::ALL[0]))?;
        obs.round_started(&round, &m);
        for e in round.opening_events() {
            agents.iter_mut().for_each(|a| a.notify(&e));
        }
        while round.phase() != Phase::Settled {
            if rec.step_count >= opts.step_ceiling {
                return Err(MatchFault::StepCeiling(opts.step_ceiling));
            }
            let seat = round.current_seat();
            let actions = round.legal_actions();
            obs.before_act(&round, &m, &actions);
            let decision = Decision::new(&round, &m, &actions);
            let agent = &mut agents[seat.index()];
            let index = if opts.time_agents {
                let t = Instant::now();
                let i = agent.act(&decision);
                rec.agent_time[seat.index()] += t.elapsed();
                i
            } else {
                agent.act(&decision)
            };
            rec.decisions[seat.index()] += 1;
            let Some(&action) = actions.get(index) else {
                return Err(MatchFault::BadIndex {
                    seat,
                    index,
                    len: actions.len(),
                });
            };
            let phase = round.phase();
            let events = round.apply_action(seat, action).map_err(fault(seat))?;
            rec.step_count += 1;
            for e in &events {
                agents.iter_mut().for_each(|a| a.notify(e));
            }
            obs.after_act(&round, &m, seat, &action, &events);
            if opts.record_steps {
                rec.steps.push(StepRecord {
                    round: m.round_index,
                    seat,
                    phase,
                    action,
                    hand_sizes: round.hand_sizes(),
                    state_hash: round.state_hash(&m),
                });
            }
        }
        let result = settle_round(&round, &mut m).map_err(fault(round.current_seat()))?;
        obs.settled(&round, &m, &result);
        rec.results.push(result);
        if m.terminated {
            break;
        }
    }
    rec.final_levels = m.team_levels;
    rec.winning_team = m.winning_team.expect("terminated match has a winner");
    Ok(rec)
}
