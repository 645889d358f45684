//! Agent interface and the built-in baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cards::{Card, CardSet, Level};
use crate::combos::{Action, Combination};
use crate::engine::{Event, MatchState, Phase, RoundState, Seat};
use crate::error::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Play,
    Tribute,
    Back,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Play => "play",
            Stage::Tribute => "tribute",
            Stage::Back => "back",
        }
    }
}

/// Everything a seat may see when asked to act. Mirrors the fields of an
/// act request.
#[derive(Debug, Clone)]
pub struct Decision<'a> {
    pub stage: Stage,
    pub seat: Seat,
    pub hand: CardSet,
    pub rest: [u8; 4],
    pub self_level: Level,
    pub oppo_level: Level,
    pub round_level: Level,
    pub greater: Option<(Seat, Combination)>,
    pub last: Option<(Seat, Combination)>,
    /// During back-tribute: the payer and the card received from them.
    pub tribute: Option<(Seat, Card)>,
    pub actions: &'a [Action],
}

impl<'a> Decision<'a> {
    pub fn new(round: &RoundState, m: &MatchState, actions: &'a [Action]) -> Decision<'a> {
        let seat = round.current_seat();
        let stage = match round.phase() {
            Phase::Tribute => Stage::Tribute,
            Phase::BackTribute => Stage::Back,
            _ => Stage::Play,
        };
        Decision {
            stage,
            seat,
            hand: round.hand(seat),
            rest: round.hand_sizes(),
            self_level: m.self_level(seat),
            oppo_level: m.oppo_level(seat),
            round_level: round.level(),
            greater: round.greater(),
            last: if stage == Stage::Play {
                round.last_play()
            } else {
                None
            },
            tribute: round.pending_back(),
            actions,
        }
    }
}

pub trait Agent {
    fn name(&self) -> &str;
    /// Index into `decision.actions`.
    fn act(&mut self, decision: &Decision) -> usize;
    fn notify(&mut self, _event: &Event) {}
}

pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> RandomAgent {
        RandomAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, d: &Decision) -> usize {
        random_choice(d.actions.len(), &mut self.rng)
    }
}

pub fn random_choice(len: usize, rng: &mut ChaCha8Rng) -> usize {
    if len <= 1 {
        0
    } else {
        rng.random_range(0..len)
    }
}

/// Always picks the first listed action. Useful for measuring harness
/// overhead.
pub struct FirstAgent;

impl Agent for FirstAgent {
    fn name(&self) -> &str {
        "first"
    }

    fn act(&mut self, _d: &Decision) -> usize {
        0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyAgent {
    /// Bombs are only spent on non-bomb tricks once the hand is this small.
    pub bomb_threshold: usize,
    pub reserve_bombs: bool,
}

impl Default for GreedyAgent {
    fn default() -> Self {
        GreedyAgent {
            bomb_threshold: 8,
            reserve_bombs: true,
        }
    }
}

impl Agent for GreedyAgent {
    fn name(&self) -> &str {
        "greedy"
    }

    fn act(&mut self, d: &Decision) -> usize {
        greedy_choice(d, self)
    }
}

fn play_cost(c: &Combination, level: Level) -> (bool, u8, usize, u8) {
    let bomb = c.ctype.is_bomb();
    (
        bomb,
        c.bomb_tier().unwrap_or(0),
        c.size(),
        c.key_strength(level),
    )
}

pub fn greedy_choice(d: &Decision, params: &GreedyAgent) -> usize {
    let level = d.round_level;
    let min_by = |f: &dyn Fn(&Action) -> Option<(bool, u8, usize, u8)>| {
        d.actions
            .iter()
            .enumerate()
            .filter_map(|(i, a)| f(a).map(|k| (k, i)))
            .min()
            .map(|(_, i)| i)
    };
    match d.stage {
        Stage::Tribute | Stage::Back => min_by(&|a| match a {
            Action::Tribute(c) | Action::Back(c) => Some((false, 0, 0, level.elevated(c.rank()))),
            _ => None,
        })
        .unwrap_or(0),
        Stage::Play => {
            let plays = |bombs: bool| {
                min_by(&|a| match a {
                    Action::Play(c) if !c.is_pass() && c.ctype.is_bomb() == bombs => {
                        Some(play_cost(c, level))
                    }
                    _ => None,
                })
            };
            let leading = d.greater.is_none();
            if leading {
                return plays(false).or_else(|| plays(true)).unwrap_or(0);
            }
            let greater_is_bomb = d.greater.is_some_and(|(_, g)| g.ctype.is_bomb());
            if let Some(i) = plays(false) {
                return i;
            }
            let may_bomb =
                !params.reserve_bombs || greater_is_bomb || d.hand.len() <= params.bomb_threshold;
            let pass = d.actions.iter().position(|a| *a == Action::PASS);
            match (may_bomb, plays(true), pass) {
                (true, Some(i), _) => i,
                (_, _, Some(p)) => p,
                (_, Some(i), None) => i,
                _ => 0,
            }
        }
    }
}

pub const AGENT_NAMES: [&str; 3] = ["random", "greedy", "first"];

pub fn make_agent(name: &str, seed: u64) -> Result<Box<dyn Agent + Send>, AgentError> {
    match name {
        "random" => Ok(Box::new(RandomAgent::new(seed))),
        "greedy" => Ok(Box::new(GreedyAgent::default())),
        "first" => Ok(Box::new(FirstAgent)),
        _ => Err(AgentError::Unknown(name.to_string())),
    }
}
