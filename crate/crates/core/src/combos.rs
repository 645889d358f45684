//! Combination classification, ranking and legal-action generation.
//!
//! There are two independent routes to "what can these cards be":
//! [`classify`] tries every rank assignment of the wild cards against the
//! structural definitions, while [`legal_plays`] builds combinations rank by
//! rank from the hand. Tests hold the two against each other and against a
//! subset-enumeration oracle.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cards::{Card, CardSet, Level, Rank, Suit};
use crate::error::ComboError;

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComboType {
    Pass = 0,
    Single,
    Pair,
    Triple,
    Tube,
    Plate,
    FullHouse,
    Straight,
    Bomb,
    StraightFlush,
    JokerBomb,
}

impl ComboType {
    pub const ALL: [ComboType; 11] = [
        ComboType::Pass,
        ComboType::Single,
        ComboType::Pair,
        ComboType::Triple,
        ComboType::Tube,
        ComboType::Plate,
        ComboType::FullHouse,
        ComboType::Straight,
        ComboType::Bomb,
        ComboType::StraightFlush,
        ComboType::JokerBomb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComboType::Pass => "PASS",
            ComboType::Single => "Single",
            ComboType::Pair => "Pair",
            ComboType::Triple => "Triple",
            ComboType::Tube => "Tube",
            ComboType::Plate => "Plate",
            ComboType::FullHouse => "FullHouse",
            ComboType::Straight => "Straight",
            ComboType::Bomb => "Bomb",
            ComboType::StraightFlush => "StraightFlush",
            ComboType::JokerBomb => "JokerBomb",
        }
    }

    pub fn from_name(name: &str) -> Option<ComboType> {
        ComboType::ALL.iter().copied().find(|t| t.name() == name)
    }

    /// Bomb, straight flush and joker bomb: the types that override everything
    /// weaker regardless of shape.
    #[inline]
    pub fn is_bomb(self) -> bool {
        matches!(
            self,
            ComboType::Bomb | ComboType::StraightFlush | ComboType::JokerBomb
        )
    }

    /// Types ranked by the top of a run in natural order.
    #[inline]
    pub fn is_sequence(self) -> bool {
        matches!(
            self,
            ComboType::Tube | ComboType::Plate | ComboType::Straight | ComboType::StraightFlush
        )
    }
}

impl fmt::Display for ComboType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ranks the wild cards of a combination stand for, sorted; one entry per
/// heart level card used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct WildAssignment([Option<Rank>; 2]);

impl WildAssignment {
    pub const NONE: WildAssignment = WildAssignment([None, None]);

    pub fn from_ranks(ranks: &[Rank]) -> WildAssignment {
        let mut out = [None, None];
        let mut v: Vec<Rank> = ranks.to_vec();
        v.sort();
        for (slot, r) in out.iter_mut().zip(v) {
            *slot = Some(r);
        }
        WildAssignment(out)
    }

    /// `n` wild cards all standing for `r`.
    #[inline]
    pub fn repeat(r: Rank, n: u8) -> WildAssignment {
        match n {
            0 => WildAssignment::NONE,
            1 => WildAssignment([Some(r), None]),
            _ => WildAssignment([Some(r), Some(r)]),
        }
    }

    #[inline]
    fn push(self, r: Rank) -> WildAssignment {
        match self.0 {
            [None, _] => WildAssignment([Some(r), None]),
            [Some(a), None] if a <= r => WildAssignment([Some(a), Some(r)]),
            [Some(a), None] => WildAssignment([Some(r), Some(a)]),
            _ => self,
        }
    }

    pub fn ranks(self) -> impl Iterator<Item = Rank> {
        self.0.into_iter().flatten()
    }

    pub fn len(self) -> usize {
        self.0.iter().flatten().count()
    }

    pub fn is_empty(self) -> bool {
        self.0[0].is_none()
    }
}

/// A concrete playable combination.
///
/// Identity (equality, hashing) is the triple (type, key rank, card multiset);
/// the wild assignment is carried along as annotation only.
#[derive(Debug, Clone, Copy)]
pub struct Combination {
    pub ctype: ComboType,
    pub key: Rank,
    pub cards: CardSet,
    pub wilds: WildAssignment,
}

impl PartialEq for Combination {
    fn eq(&self, other: &Self) -> bool {
        self.ctype == other.ctype && self.key == other.key && self.cards == other.cards
    }
}

impl Eq for Combination {}

impl Hash for Combination {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ctype.hash(state);
        self.key.hash(state);
        self.cards.hash(state);
    }
}

impl Combination {
    pub const PASS: Combination = Combination {
        ctype: ComboType::Pass,
        key: Rank::Two,
        cards: CardSet::EMPTY,
        wilds: WildAssignment::NONE,
    };

    #[inline]
    pub fn is_pass(&self) -> bool {
        self.ctype == ComboType::Pass
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.cards.len()
    }

    /// Strength of the key within its type: natural order for runs, elevated
    /// order for everything else.
    #[inline]
    pub fn key_strength(&self, level: Level) -> u8 {
        if self.ctype.is_sequence() {
            self.key as u8
        } else {
            level.elevated(self.key)
        }
    }

    /// Position in the bomb hierarchy, or `None` for non-bombs. 4- and 5-card
    /// bombs sit below straight flushes, 6+ card bombs above, and the joker
    /// bomb above all.
    #[inline]
    pub fn bomb_tier(&self) -> Option<u8> {
        match self.ctype {
            ComboType::Bomb => Some(2 * self.size() as u8),
            ComboType::StraightFlush => Some(11),
            ComboType::JokerBomb => Some(u8::MAX),
            _ => None,
        }
    }

    /// Canonical list order: type, then key strength, then cards compared
    /// lexicographically as sorted index sequences.
    pub fn canonical_cmp(&self, other: &Combination, level: Level) -> Ordering {
        self.ctype
            .cmp(&other.ctype)
            .then_with(|| self.key_strength(level).cmp(&other.key_strength(level)))
            .then_with(|| lex_cmp(self.cards, other.cards))
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return f.write_str("PASS");
        }
        write!(f, "{}({}) {:?}", self.ctype, self.key, self.cards)
    }
}

/// Lexicographic order on the ascending card-index sequences of two sets.
pub fn lex_cmp(a: CardSet, b: CardSet) -> Ordering {
    let diff = a.bits() ^ b.bits();
    if diff == 0 {
        return Ordering::Equal;
    }
    let field = diff.trailing_zeros() / 2;
    let shift = 2 * field;
    let ca = (a.bits() >> shift) & 3;
    let cb = (b.bits() >> shift) & 3;
    let rest = |x: u128| x >> (shift + 2);
    // The side holding more copies of the first differing card is smaller,
    // unless the other side ends right there (a proper prefix).
    if ca > cb {
        if rest(b.bits()) == 0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    } else if rest(a.bits()) == 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// True iff `challenger` may be played over `incumbent`.
pub fn beats(challenger: &Combination, incumbent: &Combination, level: Level) -> bool {
    if challenger.is_pass() || incumbent.is_pass() {
        return false;
    }
    match (challenger.bomb_tier(), incumbent.bomb_tier()) {
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => {
            (a, challenger.key_strength(level)) > (b, incumbent.key_strength(level))
        }
        (None, None) => {
            challenger.ctype == incumbent.ctype
                && challenger.size() == incumbent.size()
                && challenger.key_strength(level) > incumbent.key_strength(level)
        }
    }
}

/// Rank at a position of the run order, where index 0 is the low ace and
/// 1..=13 are 2..A.
#[inline]
fn seq_rank(idx: usize) -> Rank {
    if idx == 0 {
        Rank::Ace
    } else {
        Rank::SUITED[idx - 1]
    }
}

/// Every interpretation of exactly these cards.
///
/// Brute force: each wild card (heart level card) is tried as every suited
/// rank, and each resulting rank multiset is tested against all structural
/// definitions. A set made only of wild cards keeps their natural identity.
pub fn classify(cards: CardSet, level: Level) -> Vec<Combination> {
    let n = cards.len();
    if n == 0 || n > 10 {
        return Vec::new();
    }
    let wild = level.wild_card();
    let w = cards.count(wild) as usize;
    let mut natural = cards;
    for _ in 0..w {
        natural.remove(wild);
    }
    let mut base = [0u8; 15];
    let mut suits = Vec::new();
    for c in natural.iter() {
        base[c.rank().index()] += 1;
        suits.push(c.suit());
    }
    let suited_flush = !natural.is_empty()
        && natural.iter().all(|c| !c.rank().is_joker())
        && suits.windows(2).all(|p| p[0] == p[1]);

    let assignments: Vec<Vec<Rank>> = if natural.is_empty() {
        vec![vec![level.rank(); w]]
    } else {
        let mut acc: Vec<Vec<Rank>> = vec![Vec::new()];
        for _ in 0..w {
            acc = acc
                .into_iter()
                .flat_map(|prefix| {
                    Rank::SUITED.iter().map(move |&r| {
                        let mut p = prefix.clone();
                        p.push(r);
                        p
                    })
                })
                .collect();
        }
        acc
    };

    let mut out: Vec<Combination> = Vec::new();
    for assign in assignments {
        let mut counts = base;
        for r in &assign {
            counts[r.index()] += 1;
        }
        let wilds = WildAssignment::from_ranks(&assign);
        for (ctype, key) in structures(&counts, n, suited_flush) {
            let c = Combination {
                ctype,
                key,
                cards,
                wilds,
            };
            if !out
                .iter()
                .any(|o| o.ctype == c.ctype && o.key == c.key && o.wilds == c.wilds)
            {
                out.push(c);
            }
        }
    }
    out.sort_by(|a, b| {
        a.canonical_cmp(b, level)
            .then_with(|| a.wilds.0.cmp(&b.wilds.0))
    });
    out
}

/// Structural tests on a rank-count vector of `n` cards.
fn structures(counts: &[u8; 15], n: usize, flush: bool) -> Vec<(ComboType, Rank)> {
    let mut out = Vec::new();
    let suited = &counts[..13];
    let single_rank = |k: u8| Rank::ALL.iter().copied().find(|r| counts[r.index()] == k);
    let seq_count = |idx: usize| counts[seq_rank(idx).index()];
    match n {
        1 => out.push((ComboType::Single, single_rank(1).unwrap())),
        2 => {
            if let Some(r) = single_rank(2) {
                out.push((ComboType::Pair, r));
            }
        }
        3 => {
            if let Some(r) = suited.iter().position(|&c| c == 3) {
                out.push((ComboType::Triple, Rank::SUITED[r]));
            }
        }
        _ => {}
    }
    if n >= 4 {
        if let Some(r) = suited.iter().position(|&c| c as usize == n) {
            out.push((ComboType::Bomb, Rank::SUITED[r]));
        }
    }
    if n == 4 && counts[Rank::BlackJoker.index()] == 2 && counts[Rank::RedJoker.index()] == 2 {
        out.push((ComboType::JokerBomb, Rank::RedJoker));
    }
    if n == 5 {
        for start in 0..=9 {
            if (start..start + 5).all(|i| seq_count(i) == 1) {
                let top = seq_rank(start + 4);
                out.push((ComboType::Straight, top));
                if flush {
                    out.push((ComboType::StraightFlush, top));
                }
            }
        }
        let triple = suited.iter().position(|&c| c == 3);
        let pair = counts.iter().position(|&c| c == 2);
        if let (Some(t), Some(_)) = (triple, pair) {
            out.push((ComboType::FullHouse, Rank::SUITED[t]));
        }
    }
    if n == 6 {
        for start in 0..=11 {
            if (start..start + 3).all(|i| seq_count(i) == 2) {
                out.push((ComboType::Tube, seq_rank(start + 2)));
            }
        }
        for start in 0..=12 {
            if (start..start + 2).all(|i| seq_count(i) == 3) {
                out.push((ComboType::Plate, seq_rank(start + 1)));
            }
        }
    }
    out
}

/// Hand decomposed for generation: natural (non-wild) suited cards per rank
/// and suit, jokers, and the number of wild cards.
struct HandView {
    level: Level,
    wild: Card,
    wilds: u8,
    natural: [[u8; 4]; 13],
    jokers: [u8; 2],
}

impl HandView {
    fn new(hand: CardSet, level: Level) -> HandView {
        let wild = level.wild_card();
        let mut natural = [[0u8; 4]; 13];
        for c in hand.distinct() {
            let r = c.rank();
            if !r.is_joker() && c != wild {
                natural[r.index()][c.suit() as usize] = hand.count(c);
            }
        }
        HandView {
            level,
            wild,
            wilds: hand.count(wild),
            natural,
            jokers: [hand.count(Card::BLACK_JOKER), hand.count(Card::RED_JOKER)],
        }
    }

    fn rank_total(&self, r: usize) -> u8 {
        self.natural[r].iter().sum()
    }

    /// Calls `f` with every sub-multiset of exactly `size` natural cards of
    /// rank index `r`.
    fn subsets(&self, r: usize, size: u8, f: &mut dyn FnMut(CardSet)) {
        if size > self.rank_total(r) {
            return;
        }
        let rank = Rank::SUITED[r];
        let avail = self.natural[r];
        fn rec(
            rank: Rank,
            avail: &[u8; 4],
            suit: usize,
            left: u8,
            acc: CardSet,
            f: &mut dyn FnMut(CardSet),
        ) {
            if left == 0 {
                f(acc);
                return;
            }
            if suit == 4 {
                return;
            }
            let card = Card::new(Suit::ALL[suit], rank);
            for take in 0..=avail[suit].min(left) {
                rec(rank, avail, suit + 1, left - take, acc.with(card, take), f);
            }
        }
        rec(rank, &avail, 0, size, CardSet::EMPTY, f);
    }

    /// Groups of `width` cards of suited rank `r`, using up to `budget` wild
    /// cards, with at least `min_natural` natural cards. Reports the cards and
    /// the number of wilds consumed.
    fn groups(
        &self,
        r: usize,
        width: u8,
        budget: u8,
        min_natural: u8,
        f: &mut dyn FnMut(CardSet, u8),
    ) {
        for j in 0..=budget.min(width) {
            let nat = width - j;
            if nat < min_natural {
                continue;
            }
            let wild = self.wild;
            self.subsets(r, nat, &mut |s| f(s.with(wild, j), j));
        }
    }
}

struct Sink<'a> {
    level: Level,
    out: &'a mut Vec<Combination>,
    filter: Option<Combination>,
}

impl Sink<'_> {
    #[inline]
    fn emit(&mut self, ctype: ComboType, key: Rank, cards: CardSet, wilds: WildAssignment) {
        let c = Combination {
            ctype,
            key,
            cards,
            wilds,
        };
        if let Some(inc) = &self.filter {
            if !beats(&c, inc, self.level) {
                return;
            }
        }
        self.out.push(c);
    }
}

fn gen_singles(hand: CardSet, view: &HandView, sink: &mut Sink) {
    for c in hand.distinct() {
        let wilds = if c == view.wild {
            WildAssignment::from_ranks(&[view.level.rank()])
        } else {
            WildAssignment::NONE
        };
        sink.emit(
            ComboType::Single,
            c.rank(),
            CardSet::EMPTY.with(c, 1),
            wilds,
        );
    }
}

fn gen_sets(view: &HandView, width: u8, ctype: ComboType, sink: &mut Sink) {
    let level = view.level.rank();
    for r in 0..13 {
        let rank = Rank::SUITED[r];
        view.groups(r, width, view.wilds, 1, &mut |cards, j| {
            sink.emit(ctype, rank, cards, WildAssignment::repeat(rank, j));
        });
        // All-wild groups keep their natural identity.
        if rank == level && view.wilds >= width {
            sink.emit(
                ctype,
                rank,
                CardSet::EMPTY.with(view.wild, width),
                WildAssignment::repeat(rank, width),
            );
        }
    }
    if ctype == ComboType::Pair {
        if view.jokers[0] == 2 {
            sink.emit(
                ComboType::Pair,
                Rank::BlackJoker,
                CardSet::EMPTY.with(Card::BLACK_JOKER, 2),
                WildAssignment::NONE,
            );
        }
        if view.jokers[1] == 2 {
            sink.emit(
                ComboType::Pair,
                Rank::RedJoker,
                CardSet::EMPTY.with(Card::RED_JOKER, 2),
                WildAssignment::NONE,
            );
        }
    }
}

fn gen_bombs(view: &HandView, sink: &mut Sink) {
    for r in 0..13 {
        let rank = Rank::SUITED[r];
        let nat = view.rank_total(r);
        for j in 0..=view.wilds {
            let wilds = WildAssignment::repeat(rank, j);
            for size in 4.max(j + 1)..=nat + j {
                let wild = view.wild;
                view.subsets(r, size - j, &mut |s| {
                    sink.emit(ComboType::Bomb, rank, s.with(wild, j), wilds);
                });
            }
        }
    }
    if view.jokers == [2, 2] {
        sink.emit(
            ComboType::JokerBomb,
            Rank::RedJoker,
            CardSet::EMPTY
                .with(Card::BLACK_JOKER, 2)
                .with(Card::RED_JOKER, 2),
            WildAssignment::NONE,
        );
    }
}

/// Straights and straight flushes. Wild cards fit any suit.
fn gen_straights(view: &HandView, want_plain: bool, want_flush: bool, sink: &mut Sink) {
    const MIXED: u8 = 5;
    const OPEN: u8 = 4;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        view: &HandView,
        start: usize,
        pos: usize,
        acc: CardSet,
        wilds: WildAssignment,
        used: u8,
        suit: u8,
        flags: (bool, bool),
        sink: &mut Sink,
    ) {
        if pos == 5 {
            let top = seq_rank(start + 4);
            if flags.0 {
                sink.emit(ComboType::Straight, top, acc, wilds);
            }
            if flags.1 && suit != MIXED {
                sink.emit(ComboType::StraightFlush, top, acc, wilds);
            }
            return;
        }
        let rank = seq_rank(start + pos);
        let r = rank.index();
        for s in 0..4u8 {
            if view.natural[r][s as usize] == 0 {
                continue;
            }
            let next_suit = if suit == OPEN || suit == s { s } else { MIXED };
            if !flags.0 && next_suit == MIXED {
                continue;
            }
            let card = Card::new(Suit::ALL[s as usize], rank);
            rec(
                view,
                start,
                pos + 1,
                acc.with(card, 1),
                wilds,
                used,
                next_suit,
                flags,
                sink,
            );
        }
        if used < view.wilds {
            rec(
                view,
                start,
                pos + 1,
                acc.with(view.wild, 1),
                wilds.push(rank),
                used + 1,
                suit,
                flags,
                sink,
            );
        }
    }
    for start in 0..=9 {
        rec(
            view,
            start,
            0,
            CardSet::EMPTY,
            WildAssignment::NONE,
            0,
            OPEN,
            (want_plain, want_flush),
            sink,
        );
    }
}

/// Tubes (three consecutive pairs) and plates (two consecutive triples).
fn gen_runs(view: &HandView, ctype: ComboType, sink: &mut Sink) {
    let (len, width, last_start) = match ctype {
        ComboType::Tube => (3usize, 2u8, 11usize),
        ComboType::Plate => (2, 3, 12),
        _ => unreachable!(),
    };
    fn rec(
        view: &HandView,
        ctype: ComboType,
        idxs: &[usize],
        width: u8,
        acc: CardSet,
        wilds: WildAssignment,
        used: u8,
        top: Rank,
        sink: &mut Sink,
    ) {
        let Some((&first, rest)) = idxs.split_first() else {
            if used < acc.len() as u8 {
                sink.emit(ctype, top, acc, wilds);
            }
            return;
        };
        let rank = seq_rank(first);
        view.groups(rank.index(), width, view.wilds - used, 0, &mut |g, j| {
            let mut w = wilds;
            for _ in 0..j {
                w = w.push(rank);
            }
            rec(
                view,
                ctype,
                rest,
                width,
                acc.plus(g),
                w,
                used + j,
                top,
                sink,
            );
        });
    }
    for start in 0..=last_start {
        let idxs: Vec<usize> = (start..start + len).collect();
        let top = seq_rank(start + len - 1);
        rec(
            view,
            ctype,
            &idxs,
            width,
            CardSet::EMPTY,
            WildAssignment::NONE,
            0,
            top,
            sink,
        );
    }
}

fn gen_full_houses(view: &HandView, sink: &mut Sink) {
    let level = view.level.rank();
    for t in 0..13 {
        let trank = Rank::SUITED[t];
        view.groups(t, 3, view.wilds, 1, &mut |triple, jt| {
            let tw = WildAssignment::repeat(trank, jt);
            let left = view.wilds - jt;
            for p in 0..13 {
                if p == t {
                    continue;
                }
                let prank = Rank::SUITED[p];
                view.groups(p, 2, left.min(1), 1, &mut |pair, jp| {
                    let mut w = tw;
                    for _ in 0..jp {
                        w = w.push(prank);
                    }
                    sink.emit(ComboType::FullHouse, trank, triple.plus(pair), w);
                });
            }
            // A pair made of both wild cards: one representative rank.
            if left == 2 {
                let prank = if trank != level {
                    level
                } else {
                    Rank::SUITED[(t + 1) % 13]
                };
                sink.emit(
                    ComboType::FullHouse,
                    trank,
                    triple.with(view.wild, 2),
                    tw.push(prank).push(prank),
                );
            }
            for (i, joker) in [Card::BLACK_JOKER, Card::RED_JOKER].into_iter().enumerate() {
                if view.jokers[i] == 2 {
                    sink.emit(ComboType::FullHouse, trank, triple.with(joker, 2), tw);
                }
            }
        });
    }
}

fn generate(
    hand: CardSet,
    level: Level,
    types: &[ComboType],
    filter: Option<Combination>,
) -> Vec<Combination> {
    let view = HandView::new(hand, level);
    let mut out = Vec::with_capacity(64);
    let mut sink = Sink {
        level,
        out: &mut out,
        filter,
    };
    let want = |t: ComboType| types.contains(&t);
    if want(ComboType::Single) {
        gen_singles(hand, &view, &mut sink);
    }
    if want(ComboType::Pair) {
        gen_sets(&view, 2, ComboType::Pair, &mut sink);
    }
    if want(ComboType::Triple) {
        gen_sets(&view, 3, ComboType::Triple, &mut sink);
    }
    if want(ComboType::Tube) {
        gen_runs(&view, ComboType::Tube, &mut sink);
    }
    if want(ComboType::Plate) {
        gen_runs(&view, ComboType::Plate, &mut sink);
    }
    if want(ComboType::FullHouse) {
        gen_full_houses(&view, &mut sink);
    }
    let plain = want(ComboType::Straight);
    let flush = want(ComboType::StraightFlush);
    if plain || flush {
        gen_straights(&view, plain, flush, &mut sink);
    }
    if want(ComboType::Bomb) {
        gen_bombs(&view, &mut sink);
    }
    out.sort_unstable_by(|a, b| a.canonical_cmp(b, level));
    out.dedup();
    out
}

const ALL_PLAYS: [ComboType; 10] = [
    ComboType::Single,
    ComboType::Pair,
    ComboType::Triple,
    ComboType::Tube,
    ComboType::Plate,
    ComboType::FullHouse,
    ComboType::Straight,
    ComboType::Bomb,
    ComboType::StraightFlush,
    ComboType::JokerBomb,
];

/// Every legal play from `hand`, in canonical order.
///
/// Leading (`incumbent == None`): every formable combination, no pass.
/// Following: pass first, then every combination that beats the incumbent.
pub fn legal_plays(
    hand: CardSet,
    incumbent: Option<&Combination>,
    level: Level,
) -> Result<Vec<Combination>, ComboError> {
    if hand.is_empty() {
        return Err(ComboError::EmptyHand);
    }
    match incumbent {
        None => Ok(generate(hand, level, &ALL_PLAYS, None)),
        Some(inc) => {
            let mut types = vec![
                ComboType::Bomb,
                ComboType::StraightFlush,
                ComboType::JokerBomb,
            ];
            if !inc.ctype.is_bomb() {
                types.push(inc.ctype);
            }
            let mut out = Vec::with_capacity(16);
            out.push(Combination::PASS);
            out.extend(generate(hand, level, &types, Some(*inc)));
            Ok(out)
        }
    }
}

/// Cards the tribute payer may hand over: every distinct card of the highest
/// elevated rank, the heart level cards excepted.
pub fn legal_tributes(hand: CardSet, level: Level) -> Vec<Card> {
    let wild = level.wild_card();
    let eligible = || hand.distinct().filter(move |&c| c != wild);
    let Some(best) = eligible().map(|c| level.elevated(c.rank())).max() else {
        return Vec::new();
    };
    eligible()
        .filter(|c| level.elevated(c.rank()) == best)
        .collect()
}

/// Cards the tribute receiver may return: every distinct card of natural rank
/// 10 or below. If there are none, the cards of the lowest elevated rank.
pub fn legal_back_tributes(hand: CardSet, level: Level) -> Vec<Card> {
    let low: Vec<Card> = hand
        .distinct()
        .filter(|c| !c.rank().is_joker() && c.rank() <= Rank::Ten)
        .collect();
    if !low.is_empty() {
        return low;
    }
    let Some(min) = hand.distinct().map(|c| level.elevated(c.rank())).min() else {
        return Vec::new();
    };
    hand.distinct()
        .filter(|c| level.elevated(c.rank()) == min)
        .collect()
}

/// One decision of any phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    /// A card play, or a pass when the combination is [`Combination::PASS`].
    Play(Combination),
    Tribute(Card),
    Back(Card),
}

impl Action {
    pub const PASS: Action = Action::Play(Combination::PASS);

    pub fn to_wire(&self) -> WireAction {
        match self {
            Action::Play(c) if c.is_pass() => WireAction::pass(),
            Action::Play(c) => WireAction {
                kind: c.ctype.name().to_string(),
                rank: c.key.as_char().to_string(),
                cards: Some(c.cards.codes()),
            },
            Action::Tribute(card) => WireAction {
                kind: "tribute".into(),
                rank: "tribute".into(),
                cards: Some(vec![card.code().to_string()]),
            },
            Action::Back(card) => WireAction {
                kind: "back".into(),
                rank: "back".into(),
                cards: Some(vec![card.code().to_string()]),
            },
        }
    }

    /// Parse a wire action. Plays are re-classified so a structurally invalid
    /// combination is rejected here.
    pub fn from_wire(wire: &WireAction, level: Level) -> Result<Action, ComboError> {
        let bad = |m: &str| ComboError::BadWire(format!("{m}: {wire}"));
        let single_card = || -> Result<Card, ComboError> {
            match wire.cards.as_deref() {
                Some([code]) => Ok(code.parse()?),
                _ => Err(bad("expected exactly one card")),
            }
        };
        match wire.kind.as_str() {
            "PASS" => {
                if wire.rank != "PASS" || wire.cards.is_some() {
                    return Err(bad("malformed pass"));
                }
                Ok(Action::PASS)
            }
            "tribute" => Ok(Action::Tribute(single_card()?)),
            "back" => Ok(Action::Back(single_card()?)),
            name => {
                let ctype = ComboType::from_name(name).ok_or_else(|| bad("unknown type"))?;
                let mut chars = wire.rank.chars();
                let key = match (chars.next(), chars.next()) {
                    (Some(c), None) => Rank::from_char(c).ok_or_else(|| bad("unknown rank"))?,
                    _ => return Err(bad("unknown rank")),
                };
                let codes = wire.cards.as_deref().ok_or_else(|| bad("missing cards"))?;
                let cards = CardSet::from_codes(codes)?;
                classify(cards, level)
                    .into_iter()
                    .find(|c| c.ctype == ctype && c.key == key)
                    .map(Action::Play)
                    .ok_or_else(|| bad("cards do not form that combination"))
            }
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Play(c) => write!(f, "{c}"),
            Action::Tribute(c) => write!(f, "tribute {c}"),
            Action::Back(c) => write!(f, "back {c}"),
        }
    }
}

/// The three-element wire form `[type, rank, cards]`; a pass is
/// `['PASS', 'PASS', 'PASS']`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireAction {
    pub kind: String,
    pub rank: String,
    /// `None` encodes the literal `'PASS'` in third position.
    pub cards: Option<Vec<String>>,
}

impl WireAction {
    pub fn pass() -> WireAction {
        WireAction {
            kind: "PASS".into(),
            rank: "PASS".into(),
            cards: None,
        }
    }
}

impl fmt::Display for WireAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cards {
            None => write!(f, "[{}, {}, PASS]", self.kind, self.rank),
            Some(c) => write!(f, "[{}, {}, {:?}]", self.kind, self.rank, c),
        }
    }
}

impl Serialize for WireAction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(3)?;
        t.serialize_element(&self.kind)?;
        t.serialize_element(&self.rank)?;
        match &self.cards {
            None => t.serialize_element("PASS")?,
            Some(c) => t.serialize_element(c)?,
        }
        t.end()
    }
}

impl<'de> Deserialize<'de> for WireAction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<WireAction, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Third {
            Word(String),
            Cards(Vec<String>),
        }
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = WireAction;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a [type, rank, cards] triple")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<WireAction, A::Error> {
                let kind: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let rank: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let third: Third = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(2, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(4, &self));
                }
                let cards = match third {
                    Third::Word(w) if w == "PASS" => None,
                    Third::Word(w) => return Err(de::Error::custom(format!("unexpected {w:?}"))),
                    Third::Cards(c) => Some(c),
                };
                Ok(WireAction { kind, rank, cards })
            }
        }
        d.deserialize_seq(V)
    }
}
