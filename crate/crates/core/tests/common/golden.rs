//! Protocol fixtures: exact value checks for every printed example, and a
//! scripted room whose live traffic is held to the same shapes.

use std::collections::{BTreeMap, BTreeSet};

use guandan_core::agents::{make_agent, Agent};
use guandan_core::cards::{build_deck, shuffle_deal, Card, CardSet, Level, Rank};
use guandan_core::combos::{classify, Action, ComboType};
use guandan_core::engine::Seat;
use guandan_core::protocol::{
    ActRequest, ClientMessage, Dealer, Notification, PublicInfo, Room, ServerMessage,
};
use serde_json::Value;

pub fn fixtures() -> Value {
    let text = include_str!("../fixtures/printed_messages.json");
    serde_json::from_str(text).expect("fixture file parses")
}

/// Field-by-field differences between two JSON values.
pub fn diff(path: &str, expected: &Value, actual: &Value, out: &mut Vec<String>) {
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => {
            for (k, ev) in e {
                match a.get(k) {
                    Some(av) => diff(&format!("{path}.{k}"), ev, av, out),
                    None => out.push(format!("{path}.{k}: missing")),
                }
            }
            for k in a.keys().filter(|k| !e.contains_key(*k)) {
                out.push(format!("{path}.{k}: unexpected field"));
            }
        }
        (Value::Array(e), Value::Array(a)) if e.len() == a.len() => {
            for (i, (ev, av)) in e.iter().zip(a).enumerate() {
                diff(&format!("{path}[{i}]"), ev, av, out);
            }
        }
        _ if expected == actual => {}
        _ => out.push(format!("{path}: expected {expected}, got {actual}")),
    }
}

fn set(codes: &[&str]) -> CardSet {
    CardSet::from_codes(codes).unwrap()
}

fn card(code: &str) -> Card {
    set(&[code]).iter().next().unwrap()
}

fn level(r: Rank) -> Level {
    Level::new(r).unwrap()
}

fn wire(codes: &[&str], ctype: ComboType, lvl: Level) -> guandan_core::combos::WireAction {
    let c = classify(set(codes), lvl)
        .into_iter()
        .find(|c| c.ctype == ctype)
        .unwrap();
    Action::Play(c).to_wire()
}

/// Every printed example rebuilt from typed values.
pub fn typed_examples() -> Vec<(&'static str, Value)> {
    let k = level(Rank::King);
    let bomb_a = wire(&["HA", "HA", "CA", "DA"], ComboType::Bomb, k);
    let single_2 = wire(&["S2"], ComboType::Single, level(Rank::Two));
    let client = [
        (
            "client.create_room",
            ClientMessage::CreateRoom {
                user_id: "user1".into(),
                round: 1,
                seat_num: 0,
            },
        ),
        (
            "client.join_room",
            ClientMessage::JoinRoom {
                user_id: "user2".into(),
                room_id: 1,
                seat_num: 1,
            },
        ),
        (
            "client.play",
            ClientMessage::Play {
                room_id: 1,
                player: 0,
                act: Action::PASS.to_wire(),
            },
        ),
        (
            "client.tribute",
            ClientMessage::Tribute {
                room_id: 1,
                player: 0,
                act: Action::Tribute(card("D2")).to_wire(),
            },
        ),
        (
            "client.pay_tribute",
            ClientMessage::PayTribute {
                room_id: 1,
                player: 0,
                tribute_pos: 3,
                tribute: card("S2"),
                act: Action::Back(card("H2")).to_wire(),
            },
        ),
    ];
    let notify = [
        (
            "notify.beginning",
            Notification::Beginning {
                hand_cards: set(&["S2", "H2", "C2"]),
                my_pos: 1,
            },
        ),
        (
            "notify.play",
            Notification::Play {
                cur_pos: 1,
                cur_action: Some(single_2.clone()),
                greater_pos: 1,
                greater_action: Some(single_2),
            },
        ),
        (
            "notify.tribute",
            Notification::Tribute {
                result: vec![(0, 3, card("S2"))],
            },
        ),
        (
            "notify.anti-tribute",
            Notification::AntiTribute {
                anti_nums: 2,
                anti_pos: vec![0, 2],
            },
        ),
        (
            "notify.back",
            Notification::Back {
                result: vec![(3, 0, card("S2"))],
            },
        ),
        (
            "notify.episodeOver",
            Notification::EpisodeOver {
                order: [0, 1, 2, 3],
                cur_rank: Level::ACE,
                rest_cards: vec![(3, set(&["C2"]))],
            },
        ),
        (
            "notify.gameOver",
            Notification::GameOver {
                cur_times: 1,
                setting_times: 1,
            },
        ),
        (
            "notify.gameResult",
            Notification::GameResult {
                victory: 0,
                victory_rank: [Level::ACE, k],
            },
        ),
    ];
    let act = [
        (
            "act.play",
            ActRequest::Play {
                hand_cards: set(&["S2", "H2"]),
                public_info: [22, 23, 23, 27].map(|rest| PublicInfo { rest }),
                self_rank: k,
                oppo_rank: level(Rank::Nine),
                cur_rank: k,
                cur_pos: 2,
                cur_action: Some(bomb_a.clone()),
                greater_action: Some(bomb_a),
                greater_pos: 2,
                action_list: vec![
                    Action::PASS.to_wire(),
                    wire(&["H9", "H9", "C9", "D9"], ComboType::Bomb, k),
                ],
                index_range: 21,
            },
        ),
        (
            "act.tribute",
            ActRequest::Tribute {
                hand_cards: set(&["H3", "D3"]),
                self_rank: Level::TWO,
                oppo_rank: level(Rank::Nine),
                cur_rank: level(Rank::Nine),
                action_list: vec![Action::Tribute(card("D2")).to_wire()],
                index_range: 0,
            },
        ),
        (
            "act.back",
            ActRequest::Back {
                hand_cards: set(&["H2", "S3"]),
                self_rank: level(Rank::Five),
                oppo_rank: level(Rank::Nine),
                cur_rank: level(Rank::Nine),
                tribute_pos: 3,
                tribute: card("S2"),
                action_list: vec![
                    Action::Back(card("H2")).to_wire(),
                    Action::Back(card("S3")).to_wire(),
                ],
                index_range: 11,
            },
        ),
    ];
    let mut out: Vec<(&'static str, Value)> = Vec::new();
    out.extend(client.iter().map(|(n, m)| (*n, to(m))));
    out.extend(
        notify
            .into_iter()
            .map(|(n, m)| (n, to(&ServerMessage::Notify(m)))),
    );
    out.extend(
        act.into_iter()
            .map(|(n, m)| (n, to(&ServerMessage::Act(m)))),
    );
    out
}

fn to<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap()
}

fn lookup<'a>(fx: &'a Value, name: &str) -> &'a Value {
    let (group, key) = name.split_once('.').unwrap();
    &fx[group][key]
}

/// Exact comparison of every printed example, both directions: typed value
/// to JSON, and fixture JSON back into the typed value.
pub fn exact_diffs() -> (usize, Vec<String>) {
    let fx = fixtures();
    let mut diffs = Vec::new();
    let examples = typed_examples();
    for (name, actual) in &examples {
        let expected = lookup(&fx, name);
        diff(name, expected, actual, &mut diffs);
        let reparsed = if name.starts_with("client") {
            serde_json::from_value::<ClientMessage>(expected.clone())
                .map(|m| serde_json::to_value(m).unwrap())
        } else {
            serde_json::from_value::<ServerMessage>(expected.clone())
                .map(|m| serde_json::to_value(m).unwrap())
        };
        match reparsed {
            Ok(v) => diff(&format!("{name} (reparsed)"), expected, &v, &mut diffs),
            Err(e) => diffs.push(format!("{name}: fixture does not parse: {e}")),
        }
    }
    (examples.len(), diffs)
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Same field names, and each field of the same JSON kind. A `null` is
/// accepted where the fixture shows an action (no action yet in the trick).
pub fn shape_diffs(name: &str, expected: &Value, actual: &Value, out: &mut Vec<String>) {
    let (Value::Object(e), Value::Object(a)) = (expected, actual) else {
        out.push(format!("{name}: not an object"));
        return;
    };
    let ek: BTreeSet<&String> = e.keys().collect();
    let ak: BTreeSet<&String> = a.keys().collect();
    if ek != ak {
        out.push(format!("{name}: fields {ak:?}, fixture has {ek:?}"));
        return;
    }
    for (k, ev) in e {
        let av = &a[k];
        let nullable = k.ends_with("Action");
        if kind(ev) != kind(av) && !(nullable && av.is_null()) {
            out.push(format!(
                "{name}.{k}: {} where fixture has {}",
                kind(av),
                kind(ev)
            ));
        }
    }
}

#[derive(Debug, Default)]
pub struct ScriptedReport {
    pub messages: usize,
    pub notify_stages: BTreeSet<String>,
    pub act_stages: BTreeSet<String>,
    pub client_types: BTreeSet<String>,
    pub diffs: Vec<String>,
}

/// Round-one hands: seat 1 holds S2 H2 C2 and leads. Later deals always
/// split both red jokers between seats 0 and 2, so whenever seats 1 and 3
/// take first and second the payers can refuse tribute.
pub fn scripted_deals(rounds: usize) -> Vec<[CardSet; 4]> {
    let deck = build_deck();
    let mut first = shuffle_deal(&deck, 77);
    let wanted = [card("S2"), card("H2"), card("C2")];
    for &c in &wanted {
        if first[1].count(c) > 0 {
            continue;
        }
        let from = (0..4).find(|&s| first[s].count(c) > 0).unwrap();
        let give = first[1].iter().find(|x| !wanted.contains(x)).unwrap();
        first[from].remove(c);
        first[1].remove(give);
        first[from].insert(give);
        first[1].insert(c);
    }
    let mut deals = vec![first];
    for i in 1..rounds {
        let mut d = shuffle_deal(&deck, 1000 + i as u64);
        for hand in d.iter_mut() {
            while hand.remove(Card::RED_JOKER) {}
        }
        for t in [0, 2] {
            let short = (0..4).find(|&s| d[s].len() < 27).unwrap();
            if short != t {
                let give = d[t].iter().next().unwrap();
                d[t].remove(give);
                d[short].insert(give);
            }
            d[t].insert(Card::RED_JOKER);
        }
        deals.push(d);
    }
    deals
}

/// Drive a one-match room with bots, checking every message against the
/// fixture shapes, and the opening messages exactly.
pub fn scripted_match() -> ScriptedReport {
    let fx = fixtures();
    let mut report = ScriptedReport::default();
    let mut room = Room::new(1, 1, Dealer::Fixed(scripted_deals(400), Seat::ALL[1])).unwrap();
    let mut traffic: Vec<ServerMessage> = Vec::new();

    let hello = [
        ClientMessage::CreateRoom {
            user_id: "user0".into(),
            round: 1,
            seat_num: 0,
        },
        ClientMessage::JoinRoom {
            user_id: "user1".into(),
            room_id: 1,
            seat_num: 1,
        },
        ClientMessage::JoinRoom {
            user_id: "user2".into(),
            room_id: 1,
            seat_num: 2,
        },
        ClientMessage::JoinRoom {
            user_id: "user3".into(),
            room_id: 1,
            seat_num: 3,
        },
    ];
    let check_client = |report: &mut ScriptedReport, m: &ClientMessage| {
        let v = serde_json::to_value(m).unwrap();
        let key = match m.kind() {
            "CREATE_ROOM" => "create_room",
            "JOIN_ROOM" => "join_room",
            "PLAY" => "play",
            "TRIBUTE" => "tribute",
            _ => "pay_tribute",
        };
        if report.client_types.insert(m.kind().to_string()) {
            shape_diffs(
                &format!("client {key}"),
                &fx["client"][key]["data"],
                &v["data"],
                &mut report.diffs,
            );
            if v["type"] != fx["client"][key]["type"] {
                report
                    .diffs
                    .push(format!("client {key}: type {}", v["type"]));
            }
        }
    };
    for m in &hello {
        check_client(&mut report, m);
        let (user, seat) = match m {
            ClientMessage::CreateRoom {
                user_id, seat_num, ..
            }
            | ClientMessage::JoinRoom {
                user_id, seat_num, ..
            } => (user_id.clone(), *seat_num),
            _ => unreachable!(),
        };
        for d in room.bind(&user, seat, m.kind()).unwrap() {
            traffic.push(d.msg);
        }
    }

    // Seat 1 opens with the printed single.
    let opening = ClientMessage::Play {
        room_id: 1,
        player: 1,
        act: wire(&["S2"], ComboType::Single, Level::TWO),
    };
    check_client(&mut report, &opening);
    for d in room.handle_action(Seat::ALL[1], &opening) {
        traffic.push(d.msg);
    }

    let mut agents: Vec<Box<dyn Agent + Send>> = ["random", "greedy", "random", "greedy"]
        .iter()
        .enumerate()
        .map(|(i, n)| make_agent(n, 40 + i as u64).unwrap())
        .collect();
    let mut guard = 0;
    while !room.is_finished() && guard < 200_000 {
        guard += 1;
        let seat = room.awaiting().unwrap();
        let (s, msg) = room.agent_choice(agents[seat.index()].as_mut()).unwrap();
        check_client(&mut report, &msg);
        for d in room.handle_action(s, &msg) {
            traffic.push(d.msg);
        }
    }
    if !room.is_finished() {
        report.diffs.push("scripted match did not finish".into());
    }

    // Exact: seat 1's opening hand starts with the printed cards, and the
    // first play notification is the printed one.
    let mut exact_done = BTreeMap::new();
    for msg in &traffic {
        let v = serde_json::to_value(msg).unwrap();
        report.messages += 1;
        match msg {
            ServerMessage::Notify(n) => {
                let stage = n.stage();
                report.notify_stages.insert(stage.to_string());
                shape_diffs(
                    &format!("notify {stage}"),
                    &fx["notify"][stage],
                    &v,
                    &mut report.diffs,
                );
                match n {
                    Notification::Beginning { my_pos: 1, .. }
                        if !exact_done.contains_key("beginning") =>
                    {
                        let mut trimmed = v.clone();
                        trimmed["handCards"] =
                            Value::Array(v["handCards"].as_array().unwrap()[..3].to_vec());
                        diff(
                            "scripted beginning",
                            &fx["notify"]["beginning"],
                            &trimmed,
                            &mut report.diffs,
                        );
                        exact_done.insert("beginning", ());
                    }
                    Notification::Play { .. } if !exact_done.contains_key("play") => {
                        diff(
                            "scripted play",
                            &fx["notify"]["play"],
                            &v,
                            &mut report.diffs,
                        );
                        exact_done.insert("play", ());
                    }
                    Notification::AntiTribute { .. } if !exact_done.contains_key("anti") => {
                        diff(
                            "scripted anti-tribute",
                            &fx["notify"]["anti-tribute"],
                            &v,
                            &mut report.diffs,
                        );
                        exact_done.insert("anti", ());
                    }
                    Notification::GameOver { .. } => {
                        diff(
                            "scripted gameOver",
                            &fx["notify"]["gameOver"],
                            &v,
                            &mut report.diffs,
                        );
                    }
                    _ => {}
                }
            }
            ServerMessage::Act(req) => {
                let stage = req.stage().name();
                report.act_stages.insert(stage.to_string());
                shape_diffs(
                    &format!("act {stage}"),
                    &fx["act"][stage],
                    &v,
                    &mut report.diffs,
                );
                let list = req.action_list();
                if v["indexRange"].as_u64() != Some(list.len() as u64 - 1) {
                    report.diffs.push(format!(
                        "act {stage}: indexRange {} for {} actions",
                        v["indexRange"],
                        list.len()
                    ));
                }
                if req.actions().is_err() {
                    report
                        .diffs
                        .push(format!("act {stage}: action list does not parse back"));
                }
            }
            ServerMessage::Ack { .. } => {}
            ServerMessage::Error { code, message } => {
                report.diffs.push(format!("server error {code}: {message}"))
            }
        }
    }
    for must in ["beginning", "play", "anti"] {
        if !exact_done.contains_key(must) {
            report
                .diffs
                .push(format!("scripted match never produced the {must} example"));
        }
    }
    report
}
