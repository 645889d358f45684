//! Brute-force reference for combination rules, written from the rules
//! rather than from the library. Ranks are plain numbers: 0..=12 for 2..A,
//! 13 black joker, 14 red joker.

use std::collections::{BTreeMap, BTreeSet};

use guandan_core::cards::{Card, CardSet, Level, Rank};
use guandan_core::combos::{Combination, ComboType};
use rand::seq::SliceRandom;
use rand::Rng;

pub const BJ: usize = 13;
pub const RJ: usize = 14;
const ACE: usize = 12;

pub fn rank_of(card: Card) -> usize {
    match card.index() {
        52 => BJ,
        53 => RJ,
        i => i / 4,
    }
}

/// Suit 0..=3 for suited cards, None for jokers.
pub fn suit_of(card: Card) -> Option<usize> {
    (card.index() < 52).then(|| card.index() % 4)
}

fn wild_index(level: usize) -> usize {
    level * 4 + 1
}

/// Every (type, key) a multiset of ranks satisfies. `flush` says whether
/// the physical suits allow a straight flush.
pub fn shapes(ranks: &[usize], flush: bool) -> Vec<(ComboType, usize)> {
    let n = ranks.len();
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let mut groups: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &sorted {
        *groups.entry(r).or_default() += 1;
    }
    let jokers = sorted.iter().any(|&r| r >= BJ);
    let same = groups.len() == 1;
    let mut out = Vec::new();
    match n {
        1 => out.push((ComboType::Single, sorted[0])),
        2 if same => out.push((ComboType::Pair, sorted[0])),
        3 if same && !jokers => out.push((ComboType::Triple, sorted[0])),
        _ => {}
    }
    if (4..=10).contains(&n) && same && !jokers {
        out.push((ComboType::Bomb, sorted[0]));
    }
    if sorted == [BJ, BJ, RJ, RJ] {
        out.push((ComboType::JokerBomb, RJ));
    }
    let distinct: Vec<usize> = groups.keys().copied().collect();
    let consecutive = |d: &[usize]| d.windows(2).all(|w| w[1] == w[0] + 1);
    // Runs may use the ace low (before the 2) but never wrap past it.
    let run_top = |d: &[usize], width: usize| -> Option<usize> {
        if d.len() != width || jokers {
            return None;
        }
        if consecutive(d) {
            return Some(d[width - 1]);
        }
        let low: Vec<usize> = (0..width - 1).collect();
        (d[width - 1] == ACE && d[..width - 1] == low[..]).then(|| width - 2)
    };
    if n == 5 {
        if groups.values().all(|&c| c == 1) {
            if let Some(top) = run_top(&distinct, 5) {
                out.push((ComboType::Straight, top));
                if flush {
                    out.push((ComboType::StraightFlush, top));
                }
            }
        }
        let triple = groups.iter().find(|(&r, &c)| c == 3 && r < BJ);
        let pair = groups.values().any(|&c| c == 2);
        if let (Some((&t, _)), true) = (triple, pair) {
            out.push((ComboType::FullHouse, t));
        }
    }
    if n == 6 {
        if groups.values().all(|&c| c == 2) {
            if let Some(top) = run_top(&distinct, 3) {
                out.push((ComboType::Tube, top));
            }
        }
        if groups.values().all(|&c| c == 3) {
            if let Some(top) = run_top(&distinct, 2) {
                out.push((ComboType::Plate, top));
            }
        }
    }
    out
}

/// All (type, key) interpretations of an exact card multiset. Wild cards
/// try every suited rank; a set made only of wild cards is read as-is.
pub fn interpretations(cards: &[Card], level: usize) -> BTreeSet<(ComboType, usize)> {
    let wild = wild_index(level);
    let naturals: Vec<Card> = cards
        .iter()
        .copied()
        .filter(|c| c.index() != wild)
        .collect();
    let w = cards.len() - naturals.len();
    let mut out = BTreeSet::new();
    if naturals.is_empty() {
        out.extend(shapes(&vec![level; w], true));
        return out;
    }
    let base: Vec<usize> = naturals.iter().map(|&c| rank_of(c)).collect();
    let suits: BTreeSet<Option<usize>> = naturals.iter().map(|&c| suit_of(c)).collect();
    let flush = suits.len() == 1 && !suits.contains(&None);
    let total = 13usize.pow(w as u32);
    for code in 0..total {
        let mut ranks = base.clone();
        let mut c = code;
        for _ in 0..w {
            ranks.push(c % 13);
            c /= 13;
        }
        out.extend(shapes(&ranks, flush));
    }
    out
}

fn elevated(rank: usize, level: usize) -> usize {
    match rank {
        r if r == level => 13,
        r if r >= BJ => r + 1,
        r => r,
    }
}

fn is_run(t: ComboType) -> bool {
    matches!(
        t,
        ComboType::Tube | ComboType::Plate | ComboType::Straight | ComboType::StraightFlush
    )
}

/// (ctype, key, size) triples compared by the written ranking rules.
pub fn ref_beats(a: (ComboType, usize, usize), b: (ComboType, usize, usize), level: usize) -> bool {
    let strength =
        |(t, k, _): (ComboType, usize, usize)| if is_run(t) { k } else { elevated(k, level) };
    // Bomb ladder: 4, 5, straight flush, 6, 7, 8, 9, 10, jokers.
    let tier = |(t, _, n): (ComboType, usize, usize)| match t {
        ComboType::Bomb if n <= 5 => Some(n - 4),
        ComboType::StraightFlush => Some(2),
        ComboType::Bomb => Some(n - 3),
        ComboType::JokerBomb => Some(100),
        _ => None,
    };
    match (tier(a), tier(b)) {
        (Some(x), Some(y)) => x > y || (x == y && strength(a) > strength(b)),
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => a.0 == b.0 && a.2 == b.2 && strength(a) > strength(b),
    }
}

pub type Identity = (ComboType, usize, u128);

pub fn identity(c: &Combination) -> Identity {
    (c.ctype, c.key.index(), c.cards.bits())
}

/// Every distinct sub-multiset of `hand` with 1..=10 cards.
pub fn sub_multisets(hand: CardSet) -> Vec<Vec<Card>> {
    let kinds: Vec<(Card, usize)> = hand
        .distinct()
        .map(|c| (c, hand.count(c) as usize))
        .collect();
    let mut out = vec![Vec::new()];
    for &(card, count) in &kinds {
        let mut next = Vec::with_capacity(out.len() * (count + 1));
        for prefix in &out {
            for k in 0..=count {
                if prefix.len() + k > 10 {
                    break;
                }
                let mut p = prefix.clone();
                p.extend(std::iter::repeat_n(card, k));
                next.push(p);
            }
        }
        out = next;
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Reference answer for `legal_plays` (pass excluded).
pub fn ref_legal(
    hand: CardSet,
    incumbent: Option<&Combination>,
    level: usize,
) -> BTreeSet<Identity> {
    let mut out = BTreeSet::new();
    for sub in sub_multisets(hand) {
        let bits = sub.iter().fold(CardSet::EMPTY, |mut s, &c| {
            s.insert(c);
            s
        });
        for (t, k) in interpretations(&sub, level) {
            let ok = match incumbent {
                None => true,
                Some(inc) => ref_beats(
                    (t, k, sub.len()),
                    (inc.ctype, inc.key.index(), inc.size()),
                    level,
                ),
            };
            if ok {
                out.insert((t, k, bits.bits()));
            }
        }
    }
    out
}

pub fn level_of(rank: usize) -> Level {
    Level::new(Rank::SUITED[rank]).unwrap()
}

/// A random hand of 1..=`max` cards with exactly `wilds` heart level cards.
/// Half the hands draw from a narrow rank window so that runs, bombs and
/// full houses actually occur.
pub fn random_hand(rng: &mut impl Rng, level: usize, max: usize, wilds: usize) -> CardSet {
    let n = rng.random_range(wilds.max(1)..=max);
    let wild = wild_index(level);
    let mut pool: Vec<Card> = CardSet::full_deck()
        .iter()
        .filter(|c| c.index() != wild)
        .collect();
    if rng.random_bool(0.5) {
        let lo = rng.random_range(0..=9usize);
        let hi = lo + rng.random_range(2..=4usize);
        let jokers = rng.random_bool(0.3);
        pool.retain(|&c| {
            let r = rank_of(c);
            (lo..=hi).contains(&r) || (r == ACE && lo == 0) || (jokers && r >= BJ)
        });
    }
    pool.shuffle(rng);
    let mut hand = CardSet::EMPTY;
    for _ in 0..wilds {
        hand.insert(Card::from_index(wild).unwrap());
    }
    for &c in pool.iter().take(n - wilds) {
        hand.insert(c);
    }
    hand
}

#[derive(Debug, Default)]
pub struct OracleStats {
    pub states: usize,
    pub wild_counts: [usize; 3],
    pub following: usize,
    pub plays_compared: usize,
    pub mismatches: Vec<String>,
}

/// Compare `legal_plays` with the reference on `n` random states. Wild
/// counts cycle 0, 1, 2; every other state follows a random incumbent.
pub fn equivalence(n: usize, seed: u64) -> OracleStats {
    use guandan_core::combos::legal_plays;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut stats = OracleStats::default();
    for i in 0..n {
        let level = rng.random_range(0..13usize);
        let lvl = level_of(level);
        let wilds = i % 3;
        let hand = random_hand(&mut rng, level, 12, wilds);
        let incumbent = if i % 2 == 1 {
            let other_wilds = rng.random_range(0..=2);
            let other = random_hand(&mut rng, level, 10, other_wilds);
            let leads = legal_plays(other, None, lvl).unwrap();
            Some(leads[rng.random_range(0..leads.len())])
        } else {
            None
        };
        stats.states += 1;
        stats.wild_counts[wilds] += 1;
        stats.following += incumbent.is_some() as usize;
        let got = legal_plays(hand, incumbent.as_ref(), lvl).unwrap();
        let expected = ref_legal(hand, incumbent.as_ref(), level);
        let mut body = &got[..];
        if incumbent.is_some() {
            if got.first().map(|c| c.is_pass()) != Some(true) {
                stats
                    .mismatches
                    .push(format!("state {i}: pass missing or misplaced"));
            }
            body = &got[1..];
        }
        stats.plays_compared += body.len();
        let got_set: BTreeSet<Identity> = body.iter().map(identity).collect();
        if got_set.len() != body.len() {
            stats
                .mismatches
                .push(format!("state {i}: duplicate actions"));
        }
        if body
            .windows(2)
            .any(|w| w[0].canonical_cmp(&w[1], lvl) != std::cmp::Ordering::Less)
        {
            stats
                .mismatches
                .push(format!("state {i}: not in canonical order"));
        }
        if got_set != expected {
            let missing: Vec<_> = expected.difference(&got_set).take(3).collect();
            let extra: Vec<_> = got_set.difference(&expected).take(3).collect();
            stats.mismatches.push(format!(
                "state {i}: hand {:?} level {level} incumbent {:?}: missing {missing:?} extra {extra:?}",
                hand.codes(),
                incumbent.map(|c| c.to_string())
            ));
        }
    }
    stats
}
