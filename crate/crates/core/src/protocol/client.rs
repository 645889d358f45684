//! A headless protocol client driving an in-process agent.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use log::debug;

use crate::agents::{Agent, Decision};
use crate::cards::Level;
use crate::combos::{Action, Combination, WireAction};
use crate::engine::Seat;

use super::{ActRequest, ClientMessage, Notification, ServerMessage};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BotOutcome {
    pub room_id: u32,
    pub seat: u8,
    pub matches_finished: u32,
    pub victories: Vec<u8>,
    pub errors: Vec<String>,
    pub actions_sent: u64,
}

fn combo(w: &Option<WireAction>, pos: i8, level: Level) -> Option<(Seat, Combination)> {
    let seat = Seat::new(usize::try_from(pos).ok()?)?;
    match Action::from_wire(w.as_ref()?, level).ok()? {
        Action::Play(c) => Some((seat, c)),
        _ => None,
    }
}

fn decision<'a>(req: &ActRequest, seat: Seat, actions: &'a [Action]) -> Decision<'a> {
    let (self_level, oppo_level, round_level) = req.levels();
    let hand = req.hand_cards();
    let mut d = Decision {
        stage: req.stage(),
        seat,
        hand,
        rest: [27; 4],
        self_level,
        oppo_level,
        round_level,
        greater: None,
        last: None,
        tribute: None,
        actions,
    };
    d.rest[seat.index()] = hand.len() as u8;
    match req {
        ActRequest::Play {
            public_info,
            cur_pos,
            cur_action,
            greater_pos,
            greater_action,
            ..
        } => {
            d.rest = public_info.map(|p| p.rest);
            d.last = combo(cur_action, *cur_pos, round_level);
            d.greater = combo(greater_action, *greater_pos, round_level);
        }
        ActRequest::Back {
            tribute_pos,
            tribute,
            ..
        } => {
            d.tribute = Seat::new(*tribute_pos as usize).map(|s| (s, *tribute));
        }
        ActRequest::Tribute { .. } => {}
    }
    d
}

/// Connect, create or join a room, and play until the room's matches are
/// done or the server aborts.
pub fn run_bot(
    addr: impl ToSocketAddrs,
    agent: &mut dyn Agent,
    hello: &ClientMessage,
) -> io::Result<BotOutcome> {
    let stream = TcpStream::connect(addr)?;
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut send = |m: &ClientMessage| -> io::Result<()> {
        let mut line = serde_json::to_string(m).map_err(io::Error::from)?;
        line.push('\n');
        writer.write_all(line.as_bytes())
    };
    send(hello)?;
    let mut out = BotOutcome::default();
    let mut seat = match hello {
        ClientMessage::CreateRoom { seat_num, .. } | ClientMessage::JoinRoom { seat_num, .. } => {
            *seat_num
        }
        _ => 0,
    };
    let mut last_match = false;
    for line in BufReader::new(stream).lines() {
        let msg: ServerMessage = serde_json::from_str(&line?).map_err(io::Error::from)?;
        match msg {
            ServerMessage::Ack {
                room_id, seat_num, ..
            } => {
                out.room_id = room_id;
                seat = seat_num;
            }
            ServerMessage::Notify(Notification::Beginning { my_pos, .. }) => seat = my_pos,
            ServerMessage::Notify(Notification::GameOver {
                cur_times,
                setting_times,
            }) => {
                out.matches_finished = cur_times;
                last_match = cur_times >= setting_times;
            }
            ServerMessage::Notify(Notification::GameResult { victory, .. }) => {
                out.victories.push(victory);
                if last_match {
                    break;
                }
            }
            ServerMessage::Notify(_) => {}
            ServerMessage::Act(req) => {
                let actions = req
                    .actions()
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                let s = Seat::new(seat as usize).unwrap_or(Seat::ALL[0]);
                let index = agent.act(&decision(&req, s, &actions));
                let reply =
                    ClientMessage::answer(out.room_id, seat, &req, index).ok_or_else(|| {
                        io::Error::new(io::ErrorKind::InvalidData, "agent index out of range")
                    })?;
                send(&reply)?;
                out.actions_sent += 1;
            }
            ServerMessage::Error { code, message } => {
                debug!("server error {code}: {message}");
                out.errors.push(format!("{code}: {message}"));
                // Fatal for the room, or the hello itself was refused.
                if matches!(code.as_str(), "aborted" | "timeout") || out.room_id == 0 {
                    break;
                }
            }
        }
    }
    out.seat = seat;
    Ok(out)
}
