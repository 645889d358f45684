use std::fmt;

use crate::agents::{Agent, Decision};
use crate::cards::{derive_seed, CardSet};
use crate::combos::Action;
use crate::engine::{
    settle_round, start_match, start_round, start_round_with, Event, MatchState, Phase, RoundState,
    Seat,
};
use crate::runner::round_seed;

use super::{ActRequest, ClientMessage, Notification, ServerMessage};

/// Where a room's deals come from.
#[derive(Debug, Clone)]
pub enum Dealer {
    /// Shuffle from a seed; match `k` of the room uses `derive_seed(seed, k)`
    /// exactly as the batch runner does.
    Seeded(u64),
    /// Fixed hands, used in order across all rounds and matches. The seat
    /// leads the first round of every match.
    Fixed(Vec<[CardSet; 4]>, Seat),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoomError {
    BadSeat(u8),
    SeatTaken(u8),
    BadRound,
    UnknownRoom(u32),
    AlreadySeated,
    NotSeated,
    WrongPlayer { claimed: u8, seat: u8 },
    NotStarted,
    Finished,
    RoomLimit,
    OutOfDeals,
}

impl RoomError {
    pub fn code(&self) -> &'static str {
        match self {
            RoomError::BadSeat(_) => "bad_seat",
            RoomError::SeatTaken(_) => "seat_taken",
            RoomError::BadRound => "bad_round",
            RoomError::UnknownRoom(_) => "unknown_room",
            RoomError::AlreadySeated => "already_seated",
            RoomError::NotSeated => "not_seated",
            RoomError::WrongPlayer { .. } => "wrong_player",
            RoomError::NotStarted => "not_started",
            RoomError::Finished => "finished",
            RoomError::RoomLimit => "room_limit",
            RoomError::OutOfDeals => "out_of_deals",
        }
    }

    pub fn to_message(&self) -> ServerMessage {
        ServerMessage::error(self.code(), self.to_string())
    }
}

impl fmt::Display for RoomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoomError::BadSeat(s) => write!(f, "seat {s} is outside 0..3"),
            RoomError::SeatTaken(s) => write!(f, "seat {s} is occupied"),
            RoomError::BadRound => write!(f, "round must be at least 1"),
            RoomError::UnknownRoom(r) => write!(f, "no room {r}"),
            RoomError::AlreadySeated => write!(f, "connection already holds a seat"),
            RoomError::NotSeated => write!(f, "connection holds no seat"),
            RoomError::WrongPlayer { claimed, seat } => {
                write!(f, "player {claimed} sent from seat {seat}")
            }
            RoomError::NotStarted => write!(f, "game has not started"),
            RoomError::Finished => write!(f, "room is finished"),
            RoomError::RoomLimit => write!(f, "room limit reached"),
            RoomError::OutOfDeals => write!(f, "no deals left"),
        }
    }
}

/// One outgoing message for one seat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub seat: Seat,
    pub msg: ServerMessage,
}

struct Game {
    m: MatchState,
    round: RoundState,
    actions: Vec<Action>,
}

pub struct Room {
    id: u32,
    setting_times: u32,
    cur_times: u32,
    users: [Option<String>; 4],
    dealer: Dealer,
    deals_used: usize,
    game: Option<Game>,
    finished: bool,
}

fn broadcast(out: &mut Vec<Delivery>, n: Notification) {
    let msg = ServerMessage::Notify(n);
    out.extend(Seat::ALL.map(|seat| Delivery {
        seat,
        msg: msg.clone(),
    }));
}

impl Room {
    pub fn new(id: u32, setting_times: u32, dealer: Dealer) -> Result<Room, RoomError> {
        if setting_times == 0 {
            return Err(RoomError::BadRound);
        }
        Ok(Room {
            id,
            setting_times,
            cur_times: 0,
            users: Default::default(),
            dealer,
            deals_used: 0,
            game: None,
            finished: false,
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn setting_times(&self) -> u32 {
        self.setting_times
    }

    pub fn cur_times(&self) -> u32 {
        self.cur_times
    }

    pub fn is_started(&self) -> bool {
        self.game.is_some()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn user(&self, seat: Seat) -> Option<&str> {
        self.users[seat.index()].as_deref()
    }

    pub fn is_full(&self) -> bool {
        self.users.iter().all(Option::is_some)
    }

    pub fn round(&self) -> Option<&RoundState> {
        self.game.as_ref().map(|g| &g.round)
    }

    pub fn match_state(&self) -> Option<&MatchState> {
        self.game.as_ref().map(|g| &g.m)
    }

    /// Seat awaited by the engine, if the game is running.
    pub fn awaiting(&self) -> Option<Seat> {
        let g = self.game.as_ref()?;
        (!self.finished && g.round.phase() != Phase::Settled).then(|| g.round.current_seat())
    }

    /// The outstanding act request and its seat.
    pub fn pending_request(&self) -> Option<(Seat, ActRequest)> {
        let seat = self.awaiting()?;
        let g = self.game.as_ref()?;
        Some((
            seat,
            ActRequest::from_decision(&Decision::new(&g.round, &g.m, &g.actions)),
        ))
    }

    /// Let an in-process agent answer the outstanding request.
    pub fn agent_choice(&self, agent: &mut dyn Agent) -> Option<(Seat, ClientMessage)> {
        let seat = self.awaiting()?;
        let g = self.game.as_ref()?;
        let d = Decision::new(&g.round, &g.m, &g.actions);
        let index = agent.act(&d);
        let req = ActRequest::from_decision(&d);
        let msg = ClientMessage::answer(self.id, seat.index() as u8, &req, index)?;
        Some((seat, msg))
    }

    /// Bind `user` to `seat`. Returns the acknowledgment plus, on the fourth
    /// seat, the opening of the first match.
    pub fn bind(
        &mut self,
        user: &str,
        seat_num: u8,
        request: &str,
    ) -> Result<Vec<Delivery>, RoomError> {
        if self.finished {
            return Err(RoomError::Finished);
        }
        let seat = Seat::new(seat_num as usize).ok_or(RoomError::BadSeat(seat_num))?;
        if self.users[seat.index()].is_some() {
            return Err(RoomError::SeatTaken(seat_num));
        }
        self.users[seat.index()] = Some(user.to_string());
        let mut out = vec![Delivery {
            seat,
            msg: ServerMessage::Ack {
                request: request.to_string(),
                room_id: self.id,
                seat_num,
            },
        }];
        if self.is_full() {
            self.start_match(&mut out)?;
        }
        Ok(out)
    }

    fn start_match(&mut self, out: &mut Vec<Delivery>) -> Result<(), RoomError> {
        let seed = match &self.dealer {
            Dealer::Seeded(s) => derive_seed(*s, self.cur_times as u64),
            Dealer::Fixed(..) => 0,
        };
        let m = start_match(seed);
        let round = self.deal(&m)?;
        self.game = Some(Game {
            m,
            round,
            actions: Vec::new(),
        });
        self.open_round(out);
        Ok(())
    }

    fn deal(&mut self, m: &MatchState) -> Result<RoundState, RoomError> {
        let r = match &self.dealer {
            Dealer::Seeded(_) => start_round(m, round_seed(m.seed, m.round_index)),
            Dealer::Fixed(deals, leader) => {
                let hands = *deals.get(self.deals_used).ok_or(RoomError::OutOfDeals)?;
                start_round_with(m, hands, *leader)
            }
        };
        self.deals_used += 1;
        r.map_err(|_| RoomError::Finished)
    }

    fn open_round(&mut self, out: &mut Vec<Delivery>) {
        let g = self.game.as_mut().expect("game running");
        for seat in Seat::ALL {
            out.push(Delivery {
                seat,
                msg: ServerMessage::Notify(Notification::Beginning {
                    hand_cards: g.round.dealt_hands()[seat.index()],
                    my_pos: seat.index() as u8,
                }),
            });
        }
        for e in g.round.opening_events() {
            if let Event::AntiTribute(seats) = e {
                broadcast(
                    out,
                    Notification::AntiTribute {
                        anti_nums: seats.len() as u8,
                        anti_pos: {
                            let mut pos: Vec<u8> = seats.iter().map(|s| s.index() as u8).collect();
                            pos.sort_unstable();
                            pos
                        },
                    },
                );
            }
        }
        self.issue(out);
    }

    fn issue(&mut self, out: &mut Vec<Delivery>) {
        let g = self.game.as_mut().expect("game running");
        g.actions = g.round.legal_actions();
        let d = Decision::new(&g.round, &g.m, &g.actions);
        out.push(Delivery {
            seat: d.seat,
            msg: ServerMessage::Act(ActRequest::from_decision(&d)),
        });
    }

    /// Handle a PLAY, TRIBUTE or PAYTRIBUTE message arriving from the
    /// connection bound to `from`. Rejections go to the sender only, and the
    /// awaited seat is re-prompted.
    pub fn handle_action(&mut self, from: Seat, msg: &ClientMessage) -> Vec<Delivery> {
        let mut out = Vec::new();
        if let Err((code, message)) = self.try_action(from, msg, &mut out) {
            out.clear();
            out.push(Delivery {
                seat: from,
                msg: ServerMessage::error(code, message),
            });
            if self.awaiting() == Some(from) {
                self.issue(&mut out);
            }
        }
        out
    }

    fn try_action(
        &mut self,
        from: Seat,
        msg: &ClientMessage,
        out: &mut Vec<Delivery>,
    ) -> Result<(), (&'static str, String)> {
        let reject = |e: RoomError| (e.code(), e.to_string());
        if self.finished {
            return Err(reject(RoomError::Finished));
        }
        let Some(g) = self.game.as_mut() else {
            return Err(reject(RoomError::NotStarted));
        };
        let (player, act, phase) = match msg {
            ClientMessage::Play { player, act, .. } => (*player, act, Phase::Play),
            ClientMessage::Tribute { player, act, .. } => (*player, act, Phase::Tribute),
            ClientMessage::PayTribute { player, act, .. } => (*player, act, Phase::BackTribute),
            _ => return Err(("bad_request", format!("{} is not an action", msg.kind()))),
        };
        if player as usize != from.index() {
            return Err(reject(RoomError::WrongPlayer {
                claimed: player,
                seat: from.index() as u8,
            }));
        }
        if g.round.current_seat() != from {
            return Err((
                "out_of_turn",
                format!(
                    "seat {} is to move, not seat {from}",
                    g.round.current_seat()
                ),
            ));
        }
        if g.round.phase() != phase {
            return Err((
                "wrong_stage",
                format!(
                    "{} sent during the {} stage",
                    msg.kind(),
                    g.round.phase().name()
                ),
            ));
        }
        let action = Action::from_wire(act, g.round.level())
            .map_err(|e| ("illegal_action", e.to_string()))?;
        if !g.actions.contains(&action) {
            return Err(("illegal_action", format!("{act} is not in the action list")));
        }
        let events = g
            .round
            .apply_action(from, action)
            .map_err(|e| ("illegal_action", e.to_string()))?;
        for e in events {
            match e {
                Event::Played {
                    seat,
                    action,
                    greater,
                } => broadcast(
                    out,
                    Notification::Play {
                        cur_pos: seat.index() as i8,
                        cur_action: Some(Action::Play(action).to_wire()),
                        greater_pos: greater.map_or(-1, |g| g.0.index() as i8),
                        greater_action: greater.map(|g| Action::Play(g.1).to_wire()),
                    },
                ),
                Event::Tributes(ts) => broadcast(out, Notification::transfers(false, &ts)),
                Event::Backs(ts) => broadcast(out, Notification::transfers(true, &ts)),
                Event::RoundOver => {
                    self.finish_round(out);
                    return Ok(());
                }
                Event::Finished { .. } | Event::TrickWon { .. } | Event::AntiTribute(_) => {}
            }
        }
        self.issue(out);
        Ok(())
    }

    fn finish_round(&mut self, out: &mut Vec<Delivery>) {
        let g = self.game.as_mut().expect("game running");
        let result = settle_round(&g.round, &mut g.m).expect("round is settled");
        let finished = g.round.finish_order().len();
        broadcast(
            out,
            Notification::EpisodeOver {
                order: result.order.map(|s| s.index() as u8),
                cur_rank: result.level,
                rest_cards: result.order[finished..]
                    .iter()
                    .map(|s| (s.index() as u8, g.round.hand(*s)))
                    .collect(),
            },
        );
        if !result.match_over {
            let m = g.m.clone();
            match self.deal(&m) {
                Ok(r) => {
                    self.game.as_mut().unwrap().round = r;
                    self.open_round(out);
                }
                Err(e) => self.fault(out, e),
            }
            return;
        }
        self.cur_times += 1;
        let m = &self.game.as_ref().unwrap().m;
        let victory = m.winning_team.unwrap_or(0) as u8;
        let victory_rank = m.team_levels;
        broadcast(
            out,
            Notification::GameOver {
                cur_times: self.cur_times,
                setting_times: self.setting_times,
            },
        );
        broadcast(
            out,
            Notification::GameResult {
                victory,
                victory_rank,
            },
        );
        if self.cur_times < self.setting_times {
            if let Err(e) = self.start_match(out) {
                self.fault(out, e);
            }
        } else {
            self.finished = true;
        }
    }

    fn fault(&mut self, out: &mut Vec<Delivery>, e: RoomError) {
        self.finished = true;
        let msg = e.to_message();
        out.extend(Seat::ALL.map(|seat| Delivery {
            seat,
            msg: msg.clone(),
        }));
    }

    /// A seat's connection dropped: abort the match and tell the others.
    pub fn abort(&mut self, dropped: Seat) -> Vec<Delivery> {
        if self.finished {
            return Vec::new();
        }
        self.finished = true;
        let mut out = Vec::new();
        if self.game.is_some() {
            broadcast(
                &mut out,
                Notification::GameOver {
                    cur_times: self.cur_times,
                    setting_times: self.setting_times,
                },
            );
        }
        let msg = ServerMessage::error(
            "aborted",
            format!("seat {dropped} disconnected; match aborted"),
        );
        out.extend(
            Seat::ALL
                .into_iter()
                .filter(|&s| s != dropped)
                .map(|seat| Delivery {
                    seat,
                    msg: msg.clone(),
                }),
        );
        out.retain(|d| d.seat != dropped);
        out
    }

    /// A seat failed to act in time.
    pub fn timeout(&mut self, seat: Seat) -> Vec<Delivery> {
        if self.finished {
            return Vec::new();
        }
        self.finished = true;
        let msg = ServerMessage::error(
            "timeout",
            format!("seat {seat} did not act in time; match aborted"),
        );
        Seat::ALL
            .map(|seat| Delivery {
                seat,
                msg: msg.clone(),
            })
            .to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::RandomAgent;

    fn full_room(seed: u64, times: u32) -> (Room, Vec<Delivery>) {
        let mut room = Room::new(1, times, Dealer::Seeded(seed)).unwrap();
        let mut out = Vec::new();
        for s in 0..4u8 {
            out.extend(room.bind(&format!("user{s}"), s, "JOIN_ROOM").unwrap());
        }
        (room, out)
    }

    #[test]
    fn fourth_join_deals_and_prompts() {
        let (room, out) = full_room(3, 1);
        let begins: Vec<_> = out
            .iter()
            .filter_map(|d| match &d.msg {
                ServerMessage::Notify(Notification::Beginning { hand_cards, my_pos }) => {
                    assert_eq!(*my_pos as usize, d.seat.index());
                    Some(hand_cards.len())
                }
                _ => None,
            })
            .collect();
        assert_eq!(begins, vec![27; 4]);
        let acts: Vec<_> = out
            .iter()
            .filter(|d| matches!(d.msg, ServerMessage::Act(_)))
            .collect();
        assert_eq!(acts.len(), 1);
        assert_eq!(Some(acts[0].seat), room.awaiting());
    }

    #[test]
    fn occupied_and_bad_seats_rejected() {
        let mut room = Room::new(1, 1, Dealer::Seeded(0)).unwrap();
        room.bind("a", 0, "CREATE_ROOM").unwrap();
        assert_eq!(room.bind("b", 0, "JOIN_ROOM"), Err(RoomError::SeatTaken(0)));
        assert_eq!(room.bind("b", 5, "JOIN_ROOM"), Err(RoomError::BadSeat(5)));
        assert_eq!(room.user(Seat::ALL[0]), Some("a"));
        assert!(Room::new(2, 0, Dealer::Seeded(0)).is_err());
    }

    #[test]
    fn illegal_and_out_of_turn_actions_reprompt() {
        let (mut room, _) = full_room(8, 1);
        let seat = room.awaiting().unwrap();
        let other = seat.next();
        let pass = ClientMessage::Play {
            room_id: 1,
            player: other.index() as u8,
            act: crate::combos::WireAction::pass(),
        };
        let out = room.handle_action(other, &pass);
        assert_eq!(out.len(), 1);
        assert!(matches!(&out[0].msg, ServerMessage::Error { code, .. } if code == "out_of_turn"));
        // The leader may not pass: error plus a fresh prompt.
        let pass = ClientMessage::Play {
            room_id: 1,
            player: seat.index() as u8,
            act: crate::combos::WireAction::pass(),
        };
        let out = room.handle_action(seat, &pass);
        assert_eq!(out.len(), 2);
        assert!(matches!(&out[1].msg, ServerMessage::Act(_)));
        assert_eq!(room.awaiting(), Some(seat));
    }

    #[test]
    fn bots_finish_a_two_match_room() {
        let (mut room, _) = full_room(21, 2);
        let mut agents: Vec<RandomAgent> = (0..4).map(RandomAgent::new).collect();
        let mut stages = std::collections::BTreeSet::new();
        let mut steps = 0;
        while !room.is_finished() {
            let seat = room.awaiting().unwrap();
            let (s, msg) = room.agent_choice(&mut agents[seat.index()]).unwrap();
            for d in room.handle_action(s, &msg) {
                match d.msg {
                    ServerMessage::Notify(n) => {
                        stages.insert(n.stage());
                    }
                    ServerMessage::Error { message, .. } => panic!("{message}"),
                    _ => {}
                }
            }
            steps += 1;
            assert!(steps < 200_000);
        }
        assert_eq!(room.cur_times(), 2);
        for s in [
            "play",
            "tribute",
            "back",
            "episodeOver",
            "gameOver",
            "gameResult",
        ] {
            assert!(stages.contains(s), "{s}");
        }
    }
}
