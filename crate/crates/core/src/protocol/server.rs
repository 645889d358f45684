//! Socket transport. One listener serves both bindings: a connection whose
//! first bytes are an HTTP `GET` is upgraded to a WebSocket (one JSON object
//! per text frame); anything else speaks newline-delimited JSON.
//!
//! All rooms live on a single hub thread, which serializes every event of
//! every room. Each connection has its own I/O thread(s).

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use tungstenite::{Message, WebSocket};

use crate::agents::{make_agent, Agent};
use crate::cards::derive_seed;
use crate::engine::Seat;

use super::room::{Dealer, Delivery, Room, RoomError};
use super::{ClientMessage, ServerMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeatTimeouts {
    /// Applied to newline-JSON (headless) connections.
    pub headless: Option<Duration>,
    /// Applied to WebSocket (browser) connections.
    pub web: Option<Duration>,
}

impl Default for SeatTimeouts {
    fn default() -> Self {
        SeatTimeouts {
            headless: Some(Duration::from_secs(30)),
            web: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub port: u16,
    pub max_rooms: usize,
    /// Agents attached server-side to these seats of every new room.
    pub agents: [Option<String>; 4],
    pub seed: u64,
    pub timeouts: SeatTimeouts,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            port: 23456,
            max_rooms: 64,
            agents: Default::default(),
            seed: 0,
            timeouts: SeatTimeouts::default(),
        }
    }
}

type ConnId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConnKind {
    Lines,
    Web,
}

enum HubMsg {
    Open(ConnId, ConnKind, Sender<String>),
    Line(ConnId, String),
    Closed(ConnId),
}

struct Conn {
    kind: ConnKind,
    tx: Sender<String>,
    seat: Option<(u32, Seat)>,
}

struct Hub {
    config: ServerConfig,
    rooms: HashMap<u32, Room>,
    conns: HashMap<ConnId, Conn>,
    seats: HashMap<(u32, Seat), ConnId>,
    bots: HashMap<(u32, Seat), Box<dyn Agent + Send>>,
    deadlines: HashMap<u32, (Seat, Instant)>,
    next_room: u32,
}

impl Hub {
    fn new(config: ServerConfig) -> Hub {
        Hub {
            config,
            rooms: HashMap::new(),
            conns: HashMap::new(),
            seats: HashMap::new(),
            bots: HashMap::new(),
            deadlines: HashMap::new(),
            next_room: 1,
        }
    }

    fn send(&self, conn: ConnId, msg: &ServerMessage) {
        if let Some(c) = self.conns.get(&conn) {
            let _ = c.tx.send(msg.to_json());
        }
    }

    fn run(mut self, rx: Receiver<HubMsg>) {
        loop {
            let wait = self
                .deadlines
                .values()
                .map(|(_, at)| at.saturating_duration_since(Instant::now()))
                .min()
                .unwrap_or(Duration::from_secs(3600));
            match rx.recv_timeout(wait) {
                Ok(HubMsg::Open(id, kind, tx)) => {
                    self.conns.insert(
                        id,
                        Conn {
                            kind,
                            tx,
                            seat: None,
                        },
                    );
                }
                Ok(HubMsg::Line(id, line)) => self.on_line(id, &line),
                Ok(HubMsg::Closed(id)) => self.on_close(id),
                Err(RecvTimeoutError::Timeout) => self.expire(),
                Err(RecvTimeoutError::Disconnected) => return,
            }
        }
    }

    fn on_line(&mut self, id: ConnId, line: &str) {
        let msg: ClientMessage = match serde_json::from_str(line) {
            Ok(m) => m,
            Err(e) => {
                self.send(id, &ServerMessage::error("bad_request", e.to_string()));
                return;
            }
        };
        debug!("conn {id}: {}", msg.kind());
        let bound = self.conns.get(&id).and_then(|c| c.seat);
        match (&msg, bound) {
            (ClientMessage::CreateRoom { .. } | ClientMessage::JoinRoom { .. }, Some(_)) => {
                self.send(id, &RoomError::AlreadySeated.to_message());
            }
            (
                ClientMessage::CreateRoom {
                    user_id,
                    round,
                    seat_num,
                },
                None,
            ) => {
                if let Err(e) = self.create(id, user_id, *round, *seat_num) {
                    self.send(id, &e.to_message());
                }
            }
            (
                ClientMessage::JoinRoom {
                    user_id,
                    room_id,
                    seat_num,
                },
                None,
            ) => {
                if let Err(e) = self.join(id, user_id, *room_id, *seat_num) {
                    self.send(id, &e.to_message());
                }
            }
            (_, None) => self.send(id, &RoomError::NotSeated.to_message()),
            (_, Some((room_id, seat))) => {
                let Some(room) = self.rooms.get_mut(&room_id) else {
                    self.send(id, &RoomError::UnknownRoom(room_id).to_message());
                    return;
                };
                let out = room.handle_action(seat, &msg);
                self.deliver(room_id, out);
            }
        }
    }

    fn create(
        &mut self,
        id: ConnId,
        user: &str,
        round: u32,
        seat_num: u8,
    ) -> Result<(), RoomError> {
        let live = self.rooms.values().filter(|r| !r.is_finished()).count();
        if live >= self.config.max_rooms {
            return Err(RoomError::RoomLimit);
        }
        let seat = Seat::new(seat_num as usize).ok_or(RoomError::BadSeat(seat_num))?;
        let room_id = self.next_room;
        let mut room = Room::new(
            room_id,
            round,
            Dealer::Seeded(derive_seed(self.config.seed, room_id as u64)),
        )?;
        let mut out = room.bind(user, seat_num, "CREATE_ROOM")?;
        self.next_room += 1;
        self.bind_conn(id, room_id, seat);
        for s in Seat::ALL {
            let Some(name) = &self.config.agents[s.index()] else {
                continue;
            };
            if s == seat {
                continue;
            }
            let agent = make_agent(name, derive_seed(room_id as u64, s.index() as u64))
                .map_err(|_| RoomError::NotSeated)?;
            out.extend(room.bind(&format!("bot-{name}"), s.index() as u8, "JOIN_ROOM")?);
            self.bots.insert((room_id, s), agent);
        }
        info!("room {room_id} created by {user} at seat {seat_num}");
        self.rooms.insert(room_id, room);
        self.deliver(room_id, out);
        Ok(())
    }

    fn join(
        &mut self,
        id: ConnId,
        user: &str,
        room_id: u32,
        seat_num: u8,
    ) -> Result<(), RoomError> {
        let room = self
            .rooms
            .get_mut(&room_id)
            .ok_or(RoomError::UnknownRoom(room_id))?;
        let out = room.bind(user, seat_num, "JOIN_ROOM")?;
        self.bind_conn(id, room_id, Seat::ALL[seat_num as usize]);
        info!("{user} joined room {room_id} at seat {seat_num}");
        self.deliver(room_id, out);
        Ok(())
    }

    fn bind_conn(&mut self, id: ConnId, room_id: u32, seat: Seat) {
        if let Some(c) = self.conns.get_mut(&id) {
            c.seat = Some((room_id, seat));
        }
        self.seats.insert((room_id, seat), id);
    }

    /// Send deliveries to connections, then let server-side bots act until a
    /// remote seat is awaited.
    fn deliver(&mut self, room_id: u32, mut out: Vec<Delivery>) {
        loop {
            for d in &out {
                if let Some(&conn) = self.seats.get(&(room_id, d.seat)) {
                    self.send(conn, &d.msg);
                    if matches!(d.msg, ServerMessage::Act(_)) {
                        self.arm_deadline(room_id, d.seat, conn);
                    }
                }
            }
            let Some(room) = self.rooms.get_mut(&room_id) else {
                return;
            };
            if room.is_finished() {
                self.close_room(room_id);
                return;
            }
            let Some(seat) = room.awaiting() else {
                return;
            };
            let Some(bot) = self.bots.get_mut(&(room_id, seat)) else {
                return;
            };
            let Some((s, msg)) = room.agent_choice(bot.as_mut()) else {
                warn!("room {room_id}: bot at seat {seat} produced no action");
                return;
            };
            out = room.handle_action(s, &msg);
            if out
                .iter()
                .any(|d| d.seat == s && matches!(d.msg, ServerMessage::Error { .. }))
            {
                warn!("room {room_id}: bot at seat {seat} was rejected; stopping");
                out.retain(|d| d.seat != s);
                let faults = room.timeout(s);
                out.extend(faults);
            }
        }
    }

    fn arm_deadline(&mut self, room_id: u32, seat: Seat, conn: ConnId) {
        let kind = self.conns.get(&conn).map(|c| c.kind);
        let limit = match kind {
            Some(ConnKind::Lines) => self.config.timeouts.headless,
            Some(ConnKind::Web) => self.config.timeouts.web,
            None => None,
        };
        match limit {
            Some(d) => {
                self.deadlines.insert(room_id, (seat, Instant::now() + d));
            }
            None => {
                self.deadlines.remove(&room_id);
            }
        }
    }

    fn expire(&mut self) {
        let now = Instant::now();
        let due: Vec<(u32, Seat)> = self
            .deadlines
            .iter()
            .filter(|(_, (_, at))| *at <= now)
            .map(|(r, (s, _))| (*r, *s))
            .collect();
        for (room_id, seat) in due {
            self.deadlines.remove(&room_id);
            let Some(room) = self.rooms.get_mut(&room_id) else {
                continue;
            };
            if room.awaiting() != Some(seat) {
                continue;
            }
            warn!("room {room_id}: seat {seat} timed out");
            let out = room.timeout(seat);
            self.deliver(room_id, out);
        }
    }

    fn on_close(&mut self, id: ConnId) {
        let Some(conn) = self.conns.remove(&id) else {
            return;
        };
        let Some((room_id, seat)) = conn.seat else {
            return;
        };
        self.seats.remove(&(room_id, seat));
        if let Some(room) = self.rooms.get_mut(&room_id) {
            info!("room {room_id}: seat {seat} disconnected");
            let out = room.abort(seat);
            self.deliver(room_id, out);
        }
    }

    fn close_room(&mut self, room_id: u32) {
        self.rooms.remove(&room_id);
        self.deadlines.remove(&room_id);
        self.bots.retain(|(r, _), _| *r != room_id);
        let conns: Vec<ConnId> = self
            .seats
            .iter()
            .filter(|((r, _), _)| *r == room_id)
            .map(|(_, c)| *c)
            .collect();
        self.seats.retain(|(r, _), _| *r != room_id);
        for c in conns {
            if let Some(conn) = self.conns.get_mut(&c) {
                conn.seat = None;
            }
        }
        info!("room {room_id} closed");
    }
}

pub struct Server {
    listener: TcpListener,
    config: ServerConfig,
}

impl Server {
    pub fn bind(config: ServerConfig) -> io::Result<Server> {
        let listener = TcpListener::bind(("0.0.0.0", config.port))?;
        Ok(Server { listener, config })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accept connections forever.
    pub fn run(self) -> io::Result<()> {
        let (tx, rx) = mpsc::channel();
        let hub = Hub::new(self.config.clone());
        thread::spawn(move || hub.run(rx));
        info!("listening on {}", self.listener.local_addr()?);
        for (id, stream) in (1u64..).zip(self.listener.incoming()) {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    warn!("accept failed: {e}");
                    continue;
                }
            };
            let tx = tx.clone();
            thread::spawn(move || {
                if let Err(e) = handle_conn(id, stream, tx.clone()) {
                    debug!("conn {id}: {e}");
                }
                let _ = tx.send(HubMsg::Closed(id));
            });
        }
        Ok(())
    }

    /// Run on a background thread; returns the bound address.
    pub fn spawn(config: ServerConfig) -> io::Result<SocketAddr> {
        let server = Server::bind(config)?;
        let addr = server.local_addr()?;
        thread::spawn(move || server.run());
        Ok(addr)
    }
}

pub fn serve(config: ServerConfig) -> io::Result<()> {
    Server::bind(config)?.run()
}

fn handle_conn(id: ConnId, stream: TcpStream, hub: Sender<HubMsg>) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut head = [0u8; 4];
    let n = stream.peek(&mut head)?;
    if n >= 3 && &head[..3] == b"GET" {
        handle_web(id, stream, hub)
    } else {
        handle_lines(id, stream, hub)
    }
}

fn handle_lines(id: ConnId, stream: TcpStream, hub: Sender<HubMsg>) -> io::Result<()> {
    let (out_tx, out_rx) = mpsc::channel::<String>();
    let _ = hub.send(HubMsg::Open(id, ConnKind::Lines, out_tx));
    let mut writer = stream.try_clone()?;
    thread::spawn(move || {
        for line in out_rx {
            if writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .is_err()
            {
                break;
            }
        }
        let _ = writer.shutdown(std::net::Shutdown::Both);
    });
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if hub.send(HubMsg::Line(id, line)).is_err() {
            break;
        }
    }
    Ok(())
}

fn handle_web(id: ConnId, stream: TcpStream, hub: Sender<HubMsg>) -> io::Result<()> {
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(io::Error::other)?;
    ws.get_mut()
        .set_read_timeout(Some(Duration::from_millis(20)))?;
    let (out_tx, out_rx) = mpsc::channel::<String>();
    let _ = hub.send(HubMsg::Open(id, ConnKind::Web, out_tx));
    loop {
        loop {
            match out_rx.try_recv() {
                Ok(text) => ws.send(Message::text(text)).map_err(io::Error::other)?,
                Err(mpsc::TryRecvError::Empty) => break,
                Err(mpsc::TryRecvError::Disconnected) => return Ok(()),
            }
        }
        match ws.read() {
            Ok(Message::Text(t)) => {
                if hub.send(HubMsg::Line(id, t.to_string())).is_err() {
                    return Ok(());
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                return Ok(())
            }
            Err(e) => return Err(io::Error::other(e)),
        }
    }
}
