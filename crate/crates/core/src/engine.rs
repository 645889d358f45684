//! Round and match state machines.
//!
//! Seats are numbered 0..4 in counterclockwise play order, so the player
//! after seat `i` is `i + 1 mod 4` and teammates sit opposite (`i + 2`).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cards::{build_deck, deal, Card, CardSet, Level};
use crate::combos::{
    beats, classify, legal_back_tributes, legal_plays, legal_tributes, Action, Combination,
};
use crate::error::EngineError;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seat(u8);

impl Seat {
    pub const ALL: [Seat; 4] = [Seat(0), Seat(1), Seat(2), Seat(3)];

    pub fn new(i: usize) -> Option<Seat> {
        (i < 4).then_some(Seat(i as u8))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn team(self) -> usize {
        (self.0 % 2) as usize
    }

    /// The next seat in counterclockwise play order (left-hand opponent).
    #[inline]
    pub fn next(self) -> Seat {
        Seat((self.0 + 1) % 4)
    }

    #[inline]
    pub fn partner(self) -> Seat {
        Seat((self.0 + 2) % 4)
    }

    /// The seat playing just before this one (right-hand opponent).
    #[inline]
    pub fn prev(self) -> Seat {
        Seat((self.0 + 3) % 4)
    }

    #[inline]
    pub fn offset(self, by: usize) -> Seat {
        Seat(((self.0 as usize + by) % 4) as u8)
    }

    /// Counterclockwise steps from `from` to `self`.
    #[inline]
    pub fn distance_from(self, from: Seat) -> usize {
        (self.0 as usize + 4 - from.0 as usize) % 4
    }
}

impl fmt::Debug for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seat({})", self.0)
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Banker,
    Follower,
    Third,
    Dweller,
}

impl Role {
    pub const BY_PLACE: [Role; 4] = [Role::Banker, Role::Follower, Role::Third, Role::Dweller];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Tribute,
    #[serde(rename = "back")]
    BackTribute,
    Play,
    Settled,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Tribute => "tribute",
            Phase::BackTribute => "back",
            Phase::Play => "play",
            Phase::Settled => "settled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub from: Seat,
    pub to: Seat,
    pub card: Card,
}

/// What happened as a result of one applied action, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Played {
        seat: Seat,
        action: Combination,
        greater: Option<(Seat, Combination)>,
    },
    Finished {
        seat: Seat,
        place: usize,
    },
    TrickWon {
        winner: Seat,
        leader: Seat,
    },
    /// All tribute cards have been paid and routed.
    Tributes(Vec<Transfer>),
    /// All back-tribute cards have been returned.
    Backs(Vec<Transfer>),
    /// The losing side held both red jokers; no tribute this round.
    AntiTribute(Vec<Seat>),
    RoundOver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BackDuty {
    returner: Seat,
    payer: Seat,
    received: Card,
}

#[derive(Debug, Clone)]
pub struct RoundState {
    level: Level,
    hands: [CardSet; 4],
    phase: Phase,
    current: Seat,
    greater: Option<(Seat, Combination)>,
    passes: u8,
    passes_needed: u8,
    finish_order: Vec<Seat>,
    history: Vec<(Seat, Combination)>,
    played: [CardSet; 4],
    last_action: [Option<Combination>; 4],
    tributes: Vec<Transfer>,
    backs: Vec<Transfer>,
    payers: Vec<Seat>,
    paid: Vec<(Seat, Card)>,
    back_duties: Vec<BackDuty>,
    in_transit: CardSet,
    play_leader: Seat,
    anti_tribute: Option<Vec<Seat>>,
    receivers: (Seat, Seat),
    dealt: [CardSet; 4],
}

impl RoundState {
    fn blank(level: Level, hands: [CardSet; 4], leader: Seat) -> RoundState {
        RoundState {
            level,
            hands,
            phase: Phase::Play,
            current: leader,
            greater: None,
            passes: 0,
            passes_needed: 3,
            finish_order: Vec::new(),
            history: Vec::new(),
            played: [CardSet::EMPTY; 4],
            last_action: [None; 4],
            tributes: Vec::new(),
            backs: Vec::new(),
            payers: Vec::new(),
            paid: Vec::new(),
            back_duties: Vec::new(),
            in_transit: CardSet::EMPTY,
            play_leader: leader,
            anti_tribute: None,
            receivers: (leader, leader),
            dealt: hands,
        }
    }

    /// A round in the play phase with arbitrary hands; used for scripted
    /// scenarios. Card conservation is the caller's responsibility.
    pub fn scripted(level: Level, hands: [CardSet; 4], leader: Seat) -> RoundState {
        RoundState::blank(level, hands, leader)
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn hand(&self, seat: Seat) -> CardSet {
        self.hands[seat.index()]
    }

    pub fn hands(&self) -> &[CardSet; 4] {
        &self.hands
    }

    /// Hands as dealt, before any tribute exchange.
    pub fn dealt_hands(&self) -> &[CardSet; 4] {
        &self.dealt
    }

    pub fn hand_sizes(&self) -> [u8; 4] {
        self.hands.map(|h| h.len() as u8)
    }

    pub fn current_seat(&self) -> Seat {
        self.current
    }

    pub fn greater(&self) -> Option<(Seat, Combination)> {
        self.greater
    }

    pub fn consecutive_passes(&self) -> u8 {
        self.passes
    }

    pub fn finish_order(&self) -> &[Seat] {
        &self.finish_order
    }

    pub fn is_finished(&self, seat: Seat) -> bool {
        self.finish_order.contains(&seat)
    }

    /// Play-phase history: every play and pass in order.
    pub fn history(&self) -> &[(Seat, Combination)] {
        &self.history
    }

    /// Cards each seat has played so far this round.
    pub fn played(&self, seat: Seat) -> CardSet {
        self.played[seat.index()]
    }

    /// The most recent play or pass by `seat` this round.
    pub fn last_action(&self, seat: Seat) -> Option<Combination> {
        self.last_action[seat.index()]
    }

    pub fn tribute_ledger(&self) -> (&[Transfer], &[Transfer]) {
        (&self.tributes, &self.backs)
    }

    pub fn in_transit(&self) -> CardSet {
        self.in_transit
    }

    /// Seats that waived tribute this round, when anti-tribute applied.
    pub fn anti_tribute(&self) -> Option<&[Seat]> {
        self.anti_tribute.as_deref()
    }

    /// Events that precede the first action of the round.
    pub fn opening_events(&self) -> Vec<Event> {
        self.anti_tribute
            .iter()
            .map(|seats| Event::AntiTribute(seats.clone()))
            .collect()
    }

    /// For a pending back-tribute: who paid the returner and with what card.
    pub fn pending_back(&self) -> Option<(Seat, Card)> {
        (self.phase == Phase::BackTribute)
            .then(|| self.back_duties.first().map(|d| (d.payer, d.received)))
            .flatten()
    }

    /// The most recent play or pass of the round, if any.
    pub fn last_play(&self) -> Option<(Seat, Combination)> {
        self.history.last().copied()
    }

    fn next_active(&self, from: Seat) -> Seat {
        let mut s = from.next();
        while self.is_finished(s) {
            s = s.next();
        }
        s
    }

    fn is_complete(&self) -> bool {
        match self.finish_order.as_slice() {
            [a, b] => a.team() == b.team(),
            order => order.len() >= 3,
        }
    }

    /// Legal actions for the seat to move, in canonical order.
    pub fn legal_actions(&self) -> Vec<Action> {
        let hand = self.hands[self.current.index()];
        match self.phase {
            Phase::Tribute => legal_tributes(hand, self.level)
                .into_iter()
                .map(Action::Tribute)
                .collect(),
            Phase::BackTribute => legal_back_tributes(hand, self.level)
                .into_iter()
                .map(Action::Back)
                .collect(),
            Phase::Play => legal_plays(hand, self.greater.as_ref().map(|g| &g.1), self.level)
                .map(|v| v.into_iter().map(Action::Play).collect())
                .unwrap_or_default(),
            Phase::Settled => Vec::new(),
        }
    }

    /// Apply one action by `seat`. On error the state is unchanged.
    pub fn apply_action(&mut self, seat: Seat, action: Action) -> Result<Vec<Event>, EngineError> {
        if self.phase == Phase::Settled {
            return Err(EngineError::InvalidState("round is over".into()));
        }
        if seat != self.current {
            return Err(EngineError::OutOfTurn {
                expected: self.current,
                got: seat,
            });
        }
        let illegal = |reason: &str| EngineError::IllegalAction {
            seat,
            reason: reason.to_string(),
        };
        let hand = self.hands[seat.index()];
        match (self.phase, action) {
            (Phase::Tribute, Action::Tribute(card)) => {
                if !legal_tributes(hand, self.level).contains(&card) {
                    return Err(illegal("not a legal tribute card"));
                }
                Ok(self.pay_tribute(seat, card))
            }
            (Phase::BackTribute, Action::Back(card)) => {
                if !legal_back_tributes(hand, self.level).contains(&card) {
                    return Err(illegal("not a legal back-tribute card"));
                }
                Ok(self.return_card(seat, card))
            }
            (Phase::Play, Action::Play(c)) if c.is_pass() => {
                if self.greater.is_none() {
                    return Err(illegal("the leader may not pass"));
                }
                Ok(self.pass(seat))
            }
            (Phase::Play, Action::Play(c)) => {
                if !hand.contains(c.cards) {
                    return Err(illegal("cards not in hand"));
                }
                let Some(play) = classify(c.cards, self.level)
                    .into_iter()
                    .find(|k| k.ctype == c.ctype && k.key == c.key)
                else {
                    return Err(illegal("cards do not form that combination"));
                };
                if let Some((_, g)) = &self.greater {
                    if !beats(&play, g, self.level) {
                        return Err(illegal("does not beat the current trick"));
                    }
                }
                Ok(self.play(seat, play))
            }
            _ => Err(illegal(&format!(
                "wrong action kind for the {} phase",
                self.phase.name()
            ))),
        }
    }

    fn pay_tribute(&mut self, seat: Seat, card: Card) -> Vec<Event> {
        self.hands[seat.index()].remove(card);
        self.in_transit.insert(card);
        self.paid.push((seat, card));
        self.payers.retain(|&s| s != seat);
        if let Some(&next) = self.payers.first() {
            self.current = next;
            return Vec::new();
        }
        let (banker, follower) = self.receivers;
        let routed: Vec<Transfer> = match self.paid.as_slice() {
            [(payer, card)] => vec![Transfer {
                from: *payer,
                to: banker,
                card: *card,
            }],
            [(p1, c1), (p2, c2)] => {
                // Payers were queued nearest-to-Banker first, so a tie keeps
                // that order.
                let first_high = self.level.elevated(c1.rank()) >= self.level.elevated(c2.rank());
                let (hi, lo) = if first_high {
                    ((*p1, *c1), (*p2, *c2))
                } else {
                    ((*p2, *c2), (*p1, *c1))
                };
                vec![
                    Transfer {
                        from: hi.0,
                        to: banker,
                        card: hi.1,
                    },
                    Transfer {
                        from: lo.0,
                        to: follower,
                        card: lo.1,
                    },
                ]
            }
            _ => unreachable!("one or two payers"),
        };
        for t in &routed {
            self.in_transit.remove(t.card);
            self.hands[t.to.index()].insert(t.card);
        }
        self.play_leader = routed[0].from;
        self.back_duties = routed
            .iter()
            .map(|t| BackDuty {
                returner: t.to,
                payer: t.from,
                received: t.card,
            })
            .collect();
        self.tributes = routed.clone();
        self.phase = Phase::BackTribute;
        self.current = self.back_duties[0].returner;
        vec![Event::Tributes(routed)]
    }

    fn return_card(&mut self, seat: Seat, card: Card) -> Vec<Event> {
        let duty = self.back_duties.remove(0);
        debug_assert_eq!(duty.returner, seat);
        self.hands[seat.index()].remove(card);
        self.in_transit.insert(card);
        self.backs.push(Transfer {
            from: seat,
            to: duty.payer,
            card,
        });
        if let Some(next) = self.back_duties.first() {
            self.current = next.returner;
            return Vec::new();
        }
        for t in &self.backs {
            self.in_transit.remove(t.card);
            self.hands[t.to.index()].insert(t.card);
        }
        self.phase = Phase::Play;
        self.current = self.play_leader;
        vec![Event::Backs(self.backs.clone())]
    }

    fn pass(&mut self, seat: Seat) -> Vec<Event> {
        self.history.push((seat, Combination::PASS));
        self.last_action[seat.index()] = Some(Combination::PASS);
        self.passes += 1;
        let mut events = vec![Event::Played {
            seat,
            action: Combination::PASS,
            greater: self.greater,
        }];
        if self.passes >= self.passes_needed {
            let (winner, _) = self.greater.take().expect("open trick");
            let leader = if !self.is_finished(winner) {
                winner
            } else if !self.is_finished(winner.partner()) {
                winner.partner()
            } else {
                self.next_active(winner)
            };
            self.passes = 0;
            self.current = leader;
            events.push(Event::TrickWon { winner, leader });
        } else {
            self.current = self.next_active(seat);
        }
        events
    }

    fn play(&mut self, seat: Seat, combo: Combination) -> Vec<Event> {
        let i = seat.index();
        self.hands[i] = self.hands[i].minus(combo.cards);
        self.played[i] = self.played[i].plus(combo.cards);
        self.history.push((seat, combo));
        self.last_action[i] = Some(combo);
        self.greater = Some((seat, combo));
        self.passes = 0;
        let mut events = vec![Event::Played {
            seat,
            action: combo,
            greater: self.greater,
        }];
        if self.hands[i].is_empty() {
            self.finish_order.push(seat);
            events.push(Event::Finished {
                seat,
                place: self.finish_order.len(),
            });
            if self.is_complete() {
                self.phase = Phase::Settled;
                self.greater = None;
                events.push(Event::RoundOver);
                return events;
            }
        }
        self.passes_needed = Seat::ALL
            .iter()
            .filter(|&&s| s != seat && !self.is_finished(s))
            .count() as u8;
        self.current = self.next_active(seat);
        events
    }

    /// Finishing order of all four seats. When a team finished first and
    /// second, the other two are ordered by cards left (fewer first), ties by
    /// counterclockwise distance from the Banker.
    pub fn full_order(&self) -> Option<[Seat; 4]> {
        if self.phase != Phase::Settled {
            return None;
        }
        let mut order = self.finish_order.clone();
        let banker = order[0];
        let mut rest: Vec<Seat> = Seat::ALL
            .iter()
            .copied()
            .filter(|s| !order.contains(s))
            .collect();
        rest.sort_by_key(|s| (self.hands[s.index()].len(), s.distance_from(banker)));
        order.extend(rest);
        Some([order[0], order[1], order[2], order[3]])
    }

    /// Stable digest of everything that determines future play.
    pub fn state_hash(&self, m: &MatchState) -> u64 {
        let mut h = Sha256::new();
        h.update([self.level.rank() as u8, self.phase as u8, self.current.0]);
        for hand in &self.hands {
            h.update(hand.bits().to_le_bytes());
        }
        for p in &self.played {
            h.update(p.bits().to_le_bytes());
        }
        h.update(self.in_transit.bits().to_le_bytes());
        match &self.greater {
            Some((s, c)) => {
                h.update([1, s.0, c.ctype as u8, c.key as u8]);
                h.update(c.cards.bits().to_le_bytes());
            }
            None => h.update([0]),
        }
        h.update([self.passes, self.passes_needed]);
        h.update(self.finish_order.iter().map(|s| s.0).collect::<Vec<_>>());
        h.update([
            m.team_levels[0].rank() as u8,
            m.team_levels[1].rank() as u8,
            m.round_level.rank() as u8,
            m.a_strikes[0],
            m.a_strikes[1],
        ]);
        h.update(m.round_index.to_le_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchState {
    pub seed: u64,
    pub team_levels: [Level; 2],
    pub round_level: Level,
    pub a_strikes: [u8; 2],
    pub last_roles: Option<[Role; 4]>,
    pub round_index: u32,
    pub terminated: bool,
    pub winning_team: Option<usize>,
}

impl MatchState {
    pub fn self_level(&self, seat: Seat) -> Level {
        self.team_levels[seat.team()]
    }

    pub fn oppo_level(&self, seat: Seat) -> Level {
        self.team_levels[1 - seat.team()]
    }
}

pub fn start_match(seed: u64) -> MatchState {
    MatchState {
        seed,
        team_levels: [Level::TWO; 2],
        round_level: Level::TWO,
        a_strikes: [0; 2],
        last_roles: None,
        round_index: 0,
        terminated: false,
        winning_team: None,
    }
}

/// Seat that leads given the revealer and the sequence of revealed cards:
/// jokers are skipped; otherwise count counterclockwise from the revealer
/// (who counts as one) by the card's value.
pub fn first_leader_from_reveals(
    revealer: Seat,
    reveals: impl IntoIterator<Item = Card>,
) -> Option<Seat> {
    reveals
        .into_iter()
        .find_map(|c| c.rank().count_value())
        .map(|v| revealer.offset(v as usize - 1))
}

/// Cut the shuffled deck at random positions until a non-joker shows, then
/// count from the revealer.
pub fn determine_first_leader(deck_order: &[Card], revealer: Seat, rng: &mut ChaCha8Rng) -> Seat {
    let reveals = std::iter::repeat_with(|| deck_order[rng.random_range(0..deck_order.len())]);
    first_leader_from_reveals(revealer, reveals).expect("deck has non-joker cards")
}

/// Seats owed tribute: `(payer, receiver)` pairs before the cards are seen.
/// A single Dweller pays the Banker; when the winners took first and
/// second both losers pay, to Banker and Follower by the cards' rank.
pub fn tribute_targets(last_roles: &[Role; 4]) -> Vec<(Seat, Seat)> {
    let seat_of = |r: Role| Seat::ALL[last_roles.iter().position(|&x| x == r).unwrap()];
    let banker = seat_of(Role::Banker);
    let follower = seat_of(Role::Follower);
    if follower.team() == banker.team() {
        let mut payers = [seat_of(Role::Third), seat_of(Role::Dweller)];
        payers.sort_by_key(|s| s.distance_from(banker));
        vec![(payers[0], banker), (payers[1], follower)]
    } else {
        vec![(seat_of(Role::Dweller), banker)]
    }
}

pub fn start_round(m: &MatchState, seed: u64) -> Result<RoundState, EngineError> {
    if m.terminated {
        return Err(EngineError::InvalidState("match is over".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = build_deck().shuffled(&mut rng);
    let hands = deal(&order);
    let revealer = Seat::ALL[rng.random_range(0..4)];
    if m.last_roles.is_some() {
        return start_round_with(m, hands, revealer);
    }
    let leader = determine_first_leader(&order, revealer, &mut rng);
    start_round_with(m, hands, leader)
}

/// Start a round from a fixed deal. `first_leader` is used only when there
/// was no previous round; later rounds open with the tribute phase.
pub fn start_round_with(
    m: &MatchState,
    hands: [CardSet; 4],
    first_leader: Seat,
) -> Result<RoundState, EngineError> {
    if m.terminated {
        return Err(EngineError::InvalidState("match is over".into()));
    }
    Ok(match &m.last_roles {
        None => RoundState::blank(m.round_level, hands, first_leader),
        Some(roles) => RoundState::with_tribute(m.round_level, hands, roles),
    })
}

impl RoundState {
    /// A round that opens with the tribute phase (or anti-tribute) given the
    /// previous round's roles.
    pub fn with_tribute(level: Level, hands: [CardSet; 4], roles: &[Role; 4]) -> RoundState {
        let targets = tribute_targets(roles);
        let banker = targets[0].1;
        let follower = targets.get(1).map(|t| t.1).unwrap_or(banker);
        let payers: Vec<Seat> = targets.iter().map(|t| t.0).collect();
        let red_jokers: u8 = payers
            .iter()
            .map(|p| hands[p.index()].count(Card::RED_JOKER))
            .sum();
        let mut round = RoundState::blank(level, hands, banker);
        round.receivers = (banker, follower);
        if red_jokers == 2 {
            round.anti_tribute = Some(
                payers
                    .iter()
                    .copied()
                    .filter(|p| hands[p.index()].count(Card::RED_JOKER) > 0)
                    .collect(),
            );
            return round;
        }
        round.phase = Phase::Tribute;
        round.current = payers[0];
        round.payers = payers;
        round
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundResult {
    pub level: Level,
    pub order: [Seat; 4],
    pub roles: [Role; 4],
    pub winning_team: usize,
    pub level_delta: u8,
    pub rewards: [i32; 4],
    /// Team levels after this settlement.
    pub team_levels: [Level; 2],
    pub match_over: bool,
}

/// Close a finished round: assign roles, rewards and level changes, and
/// advance the match.
pub fn settle_round(round: &RoundState, m: &mut MatchState) -> Result<RoundResult, EngineError> {
    let order = round
        .full_order()
        .ok_or_else(|| EngineError::InvalidState("round is not finished".into()))?;
    if m.terminated {
        return Err(EngineError::InvalidState("match is over".into()));
    }
    let mut roles = [Role::Dweller; 4];
    for (place, seat) in order.iter().enumerate() {
        roles[seat.index()] = Role::BY_PLACE[place];
    }
    let banker = order[0];
    let winners = banker.team();
    let partner_role = roles[banker.partner().index()];
    let delta = match partner_role {
        Role::Follower => 3,
        Role::Third => 2,
        _ => 1,
    };
    let at_ace = round.level == Level::ACE;
    let zero = at_ace && partner_role == Role::Dweller;
    let mut rewards = [0i32; 4];
    if !zero {
        for s in Seat::ALL {
            rewards[s.index()] = if s.team() == winners { delta } else { -delta };
        }
    }

    let before = m.team_levels;
    if at_ace && before[winners] == Level::ACE && partner_role != Role::Dweller {
        m.terminated = true;
        m.winning_team = Some(winners);
    } else {
        m.team_levels[winners] = before[winners].advanced(delta as u8);
        for team in 0..2 {
            if !(at_ace && before[team] == Level::ACE) {
                continue;
            }
            let dwelt = Seat::ALL
                .iter()
                .any(|s| s.team() == team && roles[s.index()] == Role::Dweller);
            if dwelt {
                m.a_strikes[team] += 1;
                if m.a_strikes[team] >= 3 {
                    m.a_strikes[team] = 0;
                    m.team_levels[team] = Level::TWO;
                }
            }
        }
    }
    m.round_level = m.team_levels[winners];
    m.last_roles = Some(roles);
    m.round_index += 1;
    Ok(RoundResult {
        level: round.level,
        order,
        roles,
        winning_team: winners,
        level_delta: delta as u8,
        rewards,
        team_levels: m.team_levels,
        match_over: m.terminated,
    })
}
