//! One representative per (type, key) at level 7, and the ranking rules
//! checked over every ordered pair.

use guandan_core::cards::{CardSet, Level, Rank};
use guandan_core::combos::{beats, classify, Combination, ComboType};

const RANKS: &str = "23456789TJQKA";

fn rank_char(i: usize) -> char {
    RANKS.as_bytes()[i] as char
}

fn run_char(i: usize) -> char {
    // Run positions: 0 is the low ace, 1..=13 are 2..A.
    if i == 0 {
        'A'
    } else {
        rank_char(i - 1)
    }
}

fn pick(codes: &[String], ctype: ComboType, level: Level) -> Combination {
    let cards = CardSet::from_codes(codes).unwrap();
    classify(cards, level)
        .into_iter()
        .find(|c| c.ctype == ctype)
        .unwrap_or_else(|| panic!("{codes:?} is not a {ctype}"))
}

pub fn level() -> Level {
    Level::new(Rank::Seven).unwrap()
}

pub fn representatives() -> Vec<Combination> {
    let lvl = level();
    let mut out = Vec::new();
    let c = |s: &str| s.to_string();
    for r in 0..13 {
        let k = rank_char(r);
        out.push(pick(&[format!("S{k}")], ComboType::Single, lvl));
        out.push(pick(
            &[format!("S{k}"), format!("C{k}")],
            ComboType::Pair,
            lvl,
        ));
        out.push(pick(
            &[format!("S{k}"), format!("C{k}"), format!("D{k}")],
            ComboType::Triple,
            lvl,
        ));
        let p = if r == 0 { '3' } else { '2' };
        out.push(pick(
            &[
                format!("S{k}"),
                format!("C{k}"),
                format!("D{k}"),
                format!("S{p}"),
                format!("C{p}"),
            ],
            ComboType::FullHouse,
            lvl,
        ));
        // Eight natural copies, then the two wild H7s for 9- and 10-card bombs.
        let mut pool: Vec<String> = ["S", "C", "D", "H", "S", "C", "D", "H"]
            .iter()
            .map(|s| format!("{s}{k}"))
            .collect();
        if k != '7' {
            pool.extend([c("H7"), c("H7")]);
        }
        for size in 4..=pool.len() {
            out.push(pick(&pool[..size], ComboType::Bomb, lvl));
        }
    }
    for top in 4..=13 {
        let cards: Vec<String> = (top - 4..=top)
            .enumerate()
            .map(|(i, p)| format!("{}{}", if i == 0 { 'C' } else { 'S' }, run_char(p)))
            .collect();
        out.push(pick(&cards, ComboType::Straight, lvl));
        let flush: Vec<String> = (top - 4..=top)
            .map(|p| format!("S{}", run_char(p)))
            .collect();
        out.push(pick(&flush, ComboType::StraightFlush, lvl));
    }
    for top in 2..=13 {
        let cards: Vec<String> = (top - 2..=top)
            .flat_map(|p| ["S", "C"].map(|s| format!("{s}{}", run_char(p))))
            .collect();
        out.push(pick(&cards, ComboType::Tube, lvl));
    }
    for top in 1..=13 {
        let cards: Vec<String> = (top - 1..=top)
            .flat_map(|p| ["S", "C", "D"].map(|s| format!("{s}{}", run_char(p))))
            .collect();
        out.push(pick(&cards, ComboType::Plate, lvl));
    }
    for j in ["SB", "HR"] {
        out.push(pick(&[c(j)], ComboType::Single, lvl));
        out.push(pick(&[c(j), c(j)], ComboType::Pair, lvl));
    }
    out.push(pick(
        &[c("SB"), c("SB"), c("HR"), c("HR")],
        ComboType::JokerBomb,
        lvl,
    ));
    out
}

fn strength_elevated(r: Rank) -> u8 {
    match r {
        Rank::Seven => 13,
        Rank::BlackJoker => 14,
        Rank::RedJoker => 15,
        r => r as u8,
    }
}

/// Rule-by-rule check of `beats` over every ordered pair.
pub fn check() -> (usize, usize, Vec<String>) {
    let lvl = level();
    let reps = representatives();
    let mut bad = Vec::new();
    let mut pairs = 0;
    for a in &reps {
        for b in &reps {
            pairs += 1;
            let got = beats(a, b, lvl);
            let name = format!("{a} over {b}");
            let (ta, tb) = (a.ctype, b.ctype);
            let (rule, expected) = if ta == ComboType::JokerBomb || tb == ComboType::JokerBomb {
                (
                    "joker bomb supremacy",
                    ta == ComboType::JokerBomb && tb != ComboType::JokerBomb,
                )
            } else if ta == ComboType::StraightFlush && tb == ComboType::Bomb {
                ("straight flush outranks 4/5-card bombs only", b.size() <= 5)
            } else if ta == ComboType::Bomb && tb == ComboType::StraightFlush {
                ("6+ card bombs outrank straight flushes", a.size() >= 6)
            } else if ta == ComboType::Bomb && tb == ComboType::Bomb && a.size() != b.size() {
                ("bigger bomb wins regardless of rank", a.size() > b.size())
            } else if ta == ComboType::Bomb && tb == ComboType::Bomb {
                (
                    "equal bombs by elevated rank",
                    strength_elevated(a.key) > strength_elevated(b.key),
                )
            } else if ta == ComboType::StraightFlush && tb == ComboType::StraightFlush {
                ("straight flushes by top card", a.key > b.key)
            } else if ta.is_bomb() != tb.is_bomb() {
                ("bombs override non-bombs", ta.is_bomb())
            } else if ta != tb {
                ("different non-bomb types are incomparable", false)
            } else if matches!(
                ta,
                ComboType::Single | ComboType::Pair | ComboType::Triple | ComboType::FullHouse
            ) {
                (
                    "level card above A, jokers above level",
                    strength_elevated(a.key) > strength_elevated(b.key),
                )
            } else {
                ("runs by natural top card", a.key > b.key)
            };
            if got != expected {
                bad.push(format!("{rule}: {name} gave {got}"));
            }
        }
    }
    // Full house compares the triple only.
    let fh = |codes: &[&str]| {
        pick(
            &codes.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            ComboType::FullHouse,
            lvl,
        )
    };
    let low_triple = fh(&["S8", "C8", "D8", "SA", "CA"]);
    let high_triple = fh(&["S9", "C9", "D9", "S2", "C2"]);
    if beats(&low_triple, &high_triple, lvl) || !beats(&high_triple, &low_triple, lvl) {
        bad.push("full house compared by its pair".into());
    }
    // Suits never break ties between straight flushes.
    let sf = |s: char| {
        pick(
            &"56789"
                .chars()
                .map(|r| format!("{s}{r}"))
                .collect::<Vec<_>>(),
            ComboType::StraightFlush,
            lvl,
        )
    };
    if beats(&sf('S'), &sf('C'), lvl) || beats(&sf('C'), &sf('S'), lvl) {
        bad.push("straight flush suit used as tie-break".into());
    }
    (reps.len(), pairs, bad)
}
