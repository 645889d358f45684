//! Room-based JSON wire protocol.
//!
//! Clients send `{"type": ..., "data": {...}}`; the server answers with
//! `notify` broadcasts, targeted `act` requests, and `ack`/`error` replies.

mod client;
mod room;
mod server;

pub use client::{run_bot, BotOutcome};
pub use room::{Dealer, Delivery, Room, RoomError};
pub use server::{serve, SeatTimeouts, Server, ServerConfig};

use serde::{Deserialize, Serialize};

use crate::agents::{Decision, Stage};
use crate::cards::{Card, CardSet, Level};
use crate::combos::{Action, WireAction};
use crate::engine::{Seat, Transfer};
use crate::error::ComboError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data")]
pub enum ClientMessage {
    #[serde(rename = "CREATE_ROOM", rename_all = "camelCase")]
    CreateRoom {
        user_id: String,
        round: u32,
        seat_num: u8,
    },
    #[serde(rename = "JOIN_ROOM", rename_all = "camelCase")]
    JoinRoom {
        user_id: String,
        room_id: u32,
        seat_num: u8,
    },
    #[serde(rename = "PLAY", rename_all = "camelCase")]
    Play {
        #[serde(alias = "roomID")]
        room_id: u32,
        player: u8,
        act: WireAction,
    },
    #[serde(rename = "TRIBUTE", rename_all = "camelCase")]
    Tribute {
        #[serde(alias = "roomID")]
        room_id: u32,
        player: u8,
        act: WireAction,
    },
    #[serde(rename = "PAYTRIBUTE", rename_all = "camelCase")]
    PayTribute {
        #[serde(alias = "roomID")]
        room_id: u32,
        player: u8,
        tribute_pos: u8,
        tribute: Card,
        act: WireAction,
    },
}

impl ClientMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ClientMessage::CreateRoom { .. } => "CREATE_ROOM",
            ClientMessage::JoinRoom { .. } => "JOIN_ROOM",
            ClientMessage::Play { .. } => "PLAY",
            ClientMessage::Tribute { .. } => "TRIBUTE",
            ClientMessage::PayTribute { .. } => "PAYTRIBUTE",
        }
    }

    /// The action message a client sends for the given act request.
    pub fn answer(
        room_id: u32,
        player: u8,
        req: &ActRequest,
        index: usize,
    ) -> Option<ClientMessage> {
        let act = req.action_list().get(index)?.clone();
        Some(match req {
            ActRequest::Play { .. } => ClientMessage::Play {
                room_id,
                player,
                act,
            },
            ActRequest::Tribute { .. } => ClientMessage::Tribute {
                room_id,
                player,
                act,
            },
            ActRequest::Back {
                tribute_pos,
                tribute,
                ..
            } => ClientMessage::PayTribute {
                room_id,
                player,
                tribute_pos: *tribute_pos,
                tribute: *tribute,
                act,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicInfo {
    pub rest: u8,
}

/// `[seat, receiver, card]` in tribute and back-tribute results.
pub type TransferTriple = (u8, u8, Card);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage")]
pub enum Notification {
    #[serde(rename = "beginning", rename_all = "camelCase")]
    Beginning { hand_cards: CardSet, my_pos: u8 },
    #[serde(rename = "play", rename_all = "camelCase")]
    Play {
        cur_pos: i8,
        cur_action: Option<WireAction>,
        greater_pos: i8,
        greater_action: Option<WireAction>,
    },
    #[serde(rename = "tribute")]
    Tribute { result: Vec<TransferTriple> },
    #[serde(rename = "anti-tribute", rename_all = "camelCase")]
    AntiTribute { anti_nums: u8, anti_pos: Vec<u8> },
    #[serde(rename = "back")]
    Back { result: Vec<TransferTriple> },
    #[serde(rename = "episodeOver", rename_all = "camelCase")]
    EpisodeOver {
        order: [u8; 4],
        cur_rank: Level,
        rest_cards: Vec<(u8, CardSet)>,
    },
    #[serde(rename = "gameOver", rename_all = "camelCase")]
    GameOver { cur_times: u32, setting_times: u32 },
    #[serde(rename = "gameResult", rename_all = "camelCase")]
    GameResult {
        victory: u8,
        victory_rank: [Level; 2],
    },
}

impl Notification {
    pub fn stage(&self) -> &'static str {
        match self {
            Notification::Beginning { .. } => "beginning",
            Notification::Play { .. } => "play",
            Notification::Tribute { .. } => "tribute",
            Notification::AntiTribute { .. } => "anti-tribute",
            Notification::Back { .. } => "back",
            Notification::EpisodeOver { .. } => "episodeOver",
            Notification::GameOver { .. } => "gameOver",
            Notification::GameResult { .. } => "gameResult",
        }
    }

    pub fn transfers(stage_back: bool, ts: &[Transfer]) -> Notification {
        let result = ts
            .iter()
            .map(|t| (t.from.index() as u8, t.to.index() as u8, t.card))
            .collect();
        if stage_back {
            Notification::Back { result }
        } else {
            Notification::Tribute { result }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage")]
pub enum ActRequest {
    #[serde(rename = "play", rename_all = "camelCase")]
    Play {
        hand_cards: CardSet,
        public_info: [PublicInfo; 4],
        self_rank: Level,
        oppo_rank: Level,
        cur_rank: Level,
        cur_pos: i8,
        cur_action: Option<WireAction>,
        greater_action: Option<WireAction>,
        greater_pos: i8,
        action_list: Vec<WireAction>,
        index_range: usize,
    },
    #[serde(rename = "tribute", rename_all = "camelCase")]
    Tribute {
        hand_cards: CardSet,
        self_rank: Level,
        oppo_rank: Level,
        cur_rank: Level,
        action_list: Vec<WireAction>,
        index_range: usize,
    },
    #[serde(rename = "back", rename_all = "camelCase")]
    Back {
        hand_cards: CardSet,
        self_rank: Level,
        oppo_rank: Level,
        cur_rank: Level,
        tribute_pos: u8,
        tribute: Card,
        action_list: Vec<WireAction>,
        index_range: usize,
    },
}

fn pos(p: Option<Seat>) -> i8 {
    p.map_or(-1, |s| s.index() as i8)
}

impl ActRequest {
    pub fn from_decision(d: &Decision) -> ActRequest {
        let action_list: Vec<WireAction> = d.actions.iter().map(Action::to_wire).collect();
        let index_range = action_list.len().saturating_sub(1);
        match d.stage {
            Stage::Play => ActRequest::Play {
                hand_cards: d.hand,
                public_info: d.rest.map(|rest| PublicInfo { rest }),
                self_rank: d.self_level,
                oppo_rank: d.oppo_level,
                cur_rank: d.round_level,
                cur_pos: pos(d.last.map(|l| l.0)),
                cur_action: d.last.map(|l| Action::Play(l.1).to_wire()),
                greater_action: d.greater.map(|g| Action::Play(g.1).to_wire()),
                greater_pos: pos(d.greater.map(|g| g.0)),
                action_list,
                index_range,
            },
            Stage::Tribute => ActRequest::Tribute {
                hand_cards: d.hand,
                self_rank: d.self_level,
                oppo_rank: d.oppo_level,
                cur_rank: d.round_level,
                action_list,
                index_range,
            },
            Stage::Back => {
                let (payer, card) = d
                    .tribute
                    .expect("back-tribute decision carries the tribute");
                ActRequest::Back {
                    hand_cards: d.hand,
                    self_rank: d.self_level,
                    oppo_rank: d.oppo_level,
                    cur_rank: d.round_level,
                    tribute_pos: payer.index() as u8,
                    tribute: card,
                    action_list,
                    index_range,
                }
            }
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            ActRequest::Play { .. } => Stage::Play,
            ActRequest::Tribute { .. } => Stage::Tribute,
            ActRequest::Back { .. } => Stage::Back,
        }
    }

    pub fn action_list(&self) -> &[WireAction] {
        match self {
            ActRequest::Play { action_list, .. }
            | ActRequest::Tribute { action_list, .. }
            | ActRequest::Back { action_list, .. } => action_list,
        }
    }

    pub fn hand_cards(&self) -> CardSet {
        match self {
            ActRequest::Play { hand_cards, .. }
            | ActRequest::Tribute { hand_cards, .. }
            | ActRequest::Back { hand_cards, .. } => *hand_cards,
        }
    }

    pub fn levels(&self) -> (Level, Level, Level) {
        match self {
            ActRequest::Play {
                self_rank,
                oppo_rank,
                cur_rank,
                ..
            }
            | ActRequest::Tribute {
                self_rank,
                oppo_rank,
                cur_rank,
                ..
            }
            | ActRequest::Back {
                self_rank,
                oppo_rank,
                cur_rank,
                ..
            } => (*self_rank, *oppo_rank, *cur_rank),
        }
    }

    /// Parse the action list back into engine actions.
    pub fn actions(&self) -> Result<Vec<Action>, ComboError> {
        let level = self.levels().2;
        self.action_list()
            .iter()
            .map(|w| Action::from_wire(w, level))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ServerMessage {
    #[serde(rename = "notify")]
    Notify(Notification),
    #[serde(rename = "act")]
    Act(ActRequest),
    #[serde(rename = "ack", rename_all = "camelCase")]
    Ack {
        request: String,
        room_id: u32,
        seat_num: u8,
    },
    #[serde(rename = "error")]
    Error { code: String, message: String },
}

impl ServerMessage {
    pub fn error(code: &str, message: impl Into<String>) -> ServerMessage {
        ServerMessage::Error {
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}
