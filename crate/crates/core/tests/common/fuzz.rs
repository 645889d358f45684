//! Invariant-checking observer for whole matches, with reference
//! settlement and encoder checks.

use guandan_core::cards::{CardSet, Rank};
use guandan_core::combos::Action;
use guandan_core::encode::{self, ACT_DIM, OBS_DIM};
use guandan_core::engine::{Event, MatchState, Phase, Role, RoundResult, RoundState, Seat};
use guandan_core::runner::Observer;

const ACE: usize = 12;

/// Level bookkeeping kept from the rules text alone.
#[derive(Debug, Clone, Default)]
pub struct RefLevels {
    pub levels: [usize; 2],
    pub strikes: [u8; 2],
    pub round_level: usize,
    pub winner: Option<usize>,
}

impl RefLevels {
    /// Expected rewards and the new state after a round with this finishing
    /// order (seat indices).
    pub fn settle(&mut self, order: [usize; 4]) -> [i32; 4] {
        let banker = order[0];
        let team = banker % 2;
        let partner_place = order.iter().position(|&s| s == (banker + 2) % 4).unwrap();
        let delta = 4 - partner_place;
        let at_ace = self.round_level == ACE;
        let rewards = if at_ace && partner_place == 3 {
            [0; 4]
        } else {
            std::array::from_fn(|s| {
                if s % 2 == team {
                    delta as i32
                } else {
                    -(delta as i32)
                }
            })
        };
        let before = self.levels;
        if at_ace && before[team] == ACE && partner_place != 3 {
            self.winner = Some(team);
        } else {
            self.levels[team] = (before[team] + delta).min(ACE);
            let dweller_team = order[3] % 2;
            if at_ace && before[dweller_team] == ACE {
                self.strikes[dweller_team] += 1;
                if self.strikes[dweller_team] == 3 {
                    self.strikes[dweller_team] = 0;
                    self.levels[dweller_team] = 0;
                }
            }
        }
        self.round_level = self.levels[team];
        rewards
    }
}

/// Check one observation vector against the state it was built from.
pub fn check_observation(round: &RoundState, m: &MatchState, seat: Seat) -> Result<(), String> {
    let v = encode::encode_observation(round, m, seat);
    if v.len() != OBS_DIM || 5 * 54 + 4 * ACT_DIM + 3 * 28 + 39 + 13 != OBS_DIM {
        return Err("observation width".into());
    }
    if v.iter().any(|&x| x > 2) {
        return Err("entry above 2".into());
    }
    let hand = round.hand(seat);
    if v[..54] != hand.counts() {
        return Err("hand block".into());
    }
    // Own hand, unseen and everything played partition the pack.
    let own_played = round.played(seat).counts();
    for i in 0..54 {
        let total = v[i] + v[54 + i] + own_played[i] + v[108 + i] + v[162 + i] + v[216 + i];
        if total != 2 {
            return Err(format!("card {i} accounted {total} times"));
        }
    }
    for b in 0..4 {
        let a = &v[270 + b * ACT_DIM..270 + (b + 1) * ACT_DIM];
        let cards: u32 = a[..54].iter().map(|&x| x as u32).sum();
        let types = a[54..64].iter().filter(|&&x| x == 1).count();
        let keys = a[64..79].iter().filter(|&&x| x == 1).count();
        let zero = a.iter().all(|&x| x == 0);
        if !zero && (cards == 0 || types != 1 || keys != 1 || a[54..79].iter().any(|&x| x > 1)) {
            return Err(format!("action block {b} malformed"));
        }
    }
    for k in 1..4 {
        let block = &v[586 + (k - 1) * 28..586 + k * 28];
        let rest = round.hand(seat.offset(k)).len().min(27);
        if block.iter().filter(|&&x| x == 1).count() != 1
            || block[rest] != 1
            || block.iter().any(|&x| x > 1)
        {
            return Err(format!("rest block {k}"));
        }
    }
    let levels = [m.self_level(seat), m.oppo_level(seat), round.level()];
    for (i, level) in levels.iter().enumerate() {
        let block = &v[670 + i * 13..670 + (i + 1) * 13];
        if block.iter().sum::<u8>() != 1 || block[level.rank().index()] != 1 {
            return Err(format!("level block {i}"));
        }
    }
    let wild_slot = 709 + round.level().rank().index();
    let wilds = hand.count(round.level().wild_card());
    if v[wild_slot] != wilds || v[709..722].iter().map(|&x| x as u32).sum::<u32>() != wilds as u32 {
        return Err("wild block".into());
    }
    Ok(())
}

/// Counts of the checks a fuzz run performed and the failures it found.
#[derive(Debug, Default)]
pub struct FuzzStats {
    pub matches: u64,
    pub steps: u64,
    pub rounds: u64,
    pub observations: u64,
    pub a_strike_events: u64,
    pub resets: u64,
    pub zero_reward_rounds: u64,
    pub violations: Vec<String>,
    pub reward_violations: Vec<String>,
    pub encoder_violations: Vec<String>,
}

/// Observer checking conservation, turn order, roles, rewards, levels and
/// (every `obs_every` decisions) the encoder.
pub struct Checker<'a> {
    pub stats: &'a mut FuzzStats,
    pub obs_every: u64,
    pub seed: u64,
    reference: RefLevels,
    expected: Option<(Seat, Vec<Action>)>,
    decisions: u64,
}

impl<'a> Checker<'a> {
    pub fn new(stats: &'a mut FuzzStats, seed: u64, obs_every: u64) -> Self {
        Checker {
            stats,
            obs_every,
            seed,
            reference: RefLevels::default(),
            expected: None,
            decisions: 0,
        }
    }

    fn fail(&mut self, what: String) {
        if self.stats.violations.len() < 20 {
            self.stats
                .violations
                .push(format!("seed {}: {what}", self.seed));
        } else {
            self.stats.violations.push(String::new());
        }
    }

    fn conserved(round: &RoundState) -> bool {
        let mut all = round.in_transit();
        for s in Seat::ALL {
            all = all.plus(round.hand(s)).plus(round.played(s));
        }
        all == CardSet::full_deck()
    }
}

impl Observer for Checker<'_> {
    fn round_started(&mut self, round: &RoundState, m: &MatchState) {
        if !Self::conserved(round) {
            self.fail("deal does not conserve the pack".into());
        }
        if round.level().rank().index() != self.reference.round_level {
            self.fail(format!(
                "round level {} expected {}",
                round.level(),
                self.reference.round_level
            ));
        }
        let levels = m.team_levels.map(|l| l.rank().index());
        if levels != self.reference.levels {
            self.fail(format!(
                "team levels {levels:?} expected {:?}",
                self.reference.levels
            ));
        }
    }

    fn before_act(&mut self, round: &RoundState, m: &MatchState, actions: &[Action]) {
        let seat = round.current_seat();
        if actions.is_empty() {
            self.fail("no legal action".into());
        }
        if round.phase() == Phase::Play && round.is_finished(seat) {
            self.fail(format!("finished seat {seat} asked to play"));
        }
        let hand = round.hand(seat);
        for a in actions {
            let ok = match a {
                Action::Play(c) => hand.contains(c.cards),
                Action::Tribute(c) | Action::Back(c) => hand.count(*c) > 0,
            };
            if !ok {
                self.fail(format!("action {a:?} uses cards not in hand"));
                break;
            }
        }
        self.expected = Some((seat, actions.to_vec()));
        if self.obs_every > 0 && self.decisions % self.obs_every == 0 {
            for s in Seat::ALL {
                self.stats.observations += 1;
                if let Err(e) = check_observation(round, m, s) {
                    self.stats
                        .encoder_violations
                        .push(format!("seed {}: {e}", self.seed));
                }
            }
        }
        self.decisions += 1;
    }

    fn after_act(
        &mut self,
        round: &RoundState,
        _m: &MatchState,
        seat: Seat,
        action: &Action,
        _events: &[Event],
    ) {
        self.stats.steps += 1;
        match self.expected.take() {
            Some((s, actions)) if s == seat && actions.contains(action) => {}
            _ => self.fail(format!(
                "seat {seat} applied {action:?} out of turn or illegally"
            )),
        }
        if !Self::conserved(round) {
            self.fail(format!("card conservation broken after {action:?}"));
        }
    }

    fn settled(&mut self, _round: &RoundState, m: &MatchState, r: &RoundResult) {
        self.stats.rounds += 1;
        let order = r.order.map(|s| s.index());
        let mut seen = [false; 4];
        order.iter().for_each(|&s| seen[s] = true);
        let bijective = seen.iter().all(|&x| x)
            && r.order
                .iter()
                .enumerate()
                .all(|(place, s)| r.roles[s.index()] == Role::BY_PLACE[place]);
        if !bijective {
            self.fail(format!(
                "roles {:?} not a bijection with order {order:?}",
                r.roles
            ));
        }
        let was_a = self.reference.levels.map(|l| l == 12);
        let strikes_before = self.reference.strikes;
        let rewards = self.reference.settle(order);
        if rewards == [0; 4] {
            self.stats.zero_reward_rounds += 1;
        }
        if rewards != r.rewards || encode::assign_rewards(r) != rewards {
            self.stats.reward_violations.push(format!(
                "seed {}: order {order:?} level {} rewards {:?} expected {rewards:?}",
                self.seed, r.level, r.rewards
            ));
        }
        for t in 0..2 {
            if was_a[t] && self.reference.strikes[t] != strikes_before[t] {
                self.stats.a_strike_events += 1;
                if self.reference.strikes[t] == 0 {
                    self.stats.resets += 1;
                }
            }
        }
        let levels = m.team_levels.map(|l| l.rank().index());
        if levels != self.reference.levels || m.a_strikes != self.reference.strikes {
            self.fail(format!(
                "after round: levels {levels:?} strikes {:?}, expected {:?} {:?}",
                m.a_strikes, self.reference.levels, self.reference.strikes
            ));
        }
        if m.team_levels.iter().any(|l| l.rank() > Rank::Ace) {
            self.fail("level beyond A".into());
        }
        if m.terminated != self.reference.winner.is_some()
            || (m.terminated && m.winning_team != self.reference.winner)
        {
            self.fail("termination disagrees with the reference".into());
        }
    }
}

/// Play `matches` random-agent matches under the checker.
pub fn fuzz(matches: u64, seed: u64, obs_every: u64) -> FuzzStats {
    use guandan_core::harness::{match_seed, seat_agents};
    use guandan_core::runner::{run_match_observed, RunOptions};
    let mut stats = FuzzStats::default();
    for i in 0..matches {
        let s = match_seed(seed, i);
        let mut agents = seat_agents(&["random"; 4], s).unwrap();
        let mut checker = Checker::new(&mut stats, s, obs_every);
        let res = run_match_observed(&mut agents, s, &RunOptions::default(), &mut checker);
        match res {
            Ok(rec) => {
                stats.matches += 1;
                if rec.step_count != rec.decisions.iter().sum::<u64>() {
                    stats
                        .violations
                        .push(format!("seed {s}: step count disagrees with decisions"));
                }
            }
            Err(e) => stats.violations.push(format!("seed {s}: {e}")),
        }
    }
    stats
}
