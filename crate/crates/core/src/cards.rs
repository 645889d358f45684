//! Card identities, the two-deck composition and level-aware rank ordering.
//!
//! A [`Card`] is one of 54 distinct identities (52 suited cards plus the two
//! jokers). A hand is a [`CardSet`]: a multiset where every identity appears
//! at most twice, packed two bits per identity into a `u128`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CardError;

/// Number of distinct card identities.
pub const CARD_KINDS: usize = 54;
/// Number of cards in the two-deck pack.
pub const DECK_SIZE: usize = 108;
/// Cards dealt to each seat.
pub const HAND_SIZE: usize = 27;

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rank {
    Two = 0,
    Three,
    Four,
    Five,
    Six,
    Seven,
    Eight,
    Nine,
    Ten,
    Jack,
    Queen,
    King,
    Ace,
    BlackJoker,
    RedJoker,
}

impl Rank {
    pub const ALL: [Rank; 15] = [
        Rank::Two,
        Rank::Three,
        Rank::Four,
        Rank::Five,
        Rank::Six,
        Rank::Seven,
        Rank::Eight,
        Rank::Nine,
        Rank::Ten,
        Rank::Jack,
        Rank::Queen,
        Rank::King,
        Rank::Ace,
        Rank::BlackJoker,
        Rank::RedJoker,
    ];

    /// The thirteen suited ranks, 2 through A.
    pub const SUITED: [Rank; 13] = [
        Rank::Two,
        Rank::Three,
        Rank::Four,
        Rank::Five,
        Rank::Six,
        Rank::Seven,
        Rank::Eight,
        Rank::Nine,
        Rank::Ten,
        Rank::Jack,
        Rank::Queen,
        Rank::King,
        Rank::Ace,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Option<Rank> {
        Rank::ALL.get(i).copied()
    }

    #[inline]
    pub fn is_joker(self) -> bool {
        matches!(self, Rank::BlackJoker | Rank::RedJoker)
    }

    /// Single-character form used on the wire: `2`..`9`, `T`, `J`, `Q`, `K`,
    /// `A`, and `B`/`R` for the black and red joker.
    pub fn as_char(self) -> char {
        b"23456789TJQKABR"[self.index()] as char
    }

    pub fn from_char(c: char) -> Option<Rank> {
        "23456789TJQKABR".find(c).and_then(Rank::from_index)
    }

    /// Face value used when counting seats for the opening lead: A counts 1,
    /// J/Q/K count 11/12/13. Jokers have no value.
    pub fn count_value(self) -> Option<u8> {
        match self {
            Rank::Ace => Some(1),
            r if r.is_joker() => None,
            r => Some(r as u8 + 2),
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Suit {
    Spade = 0,
    Heart,
    Club,
    Diamond,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Spade, Suit::Heart, Suit::Club, Suit::Diamond];

    pub fn as_char(self) -> char {
        b"SHCD"[self as usize] as char
    }

    pub fn from_char(c: char) -> Option<Suit> {
        "SHCD".find(c).map(|i| Suit::ALL[i])
    }
}

/// One of the 54 card identities.
///
/// Suited cards are indexed `rank * 4 + suit`, so sorting by index sorts by
/// rank first and then by suit in S, H, C, D order. The black joker is 52
/// and the red joker 53.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card(u8);

const CODES: [&str; CARD_KINDS] = [
    "S2", "H2", "C2", "D2", "S3", "H3", "C3", "D3", "S4", "H4", "C4", "D4", "S5", "H5", "C5", "D5",
    "S6", "H6", "C6", "D6", "S7", "H7", "C7", "D7", "S8", "H8", "C8", "D8", "S9", "H9", "C9", "D9",
    "ST", "HT", "CT", "DT", "SJ", "HJ", "CJ", "DJ", "SQ", "HQ", "CQ", "DQ", "SK", "HK", "CK", "DK",
    "SA", "HA", "CA", "DA", "SB", "HR",
];

impl Card {
    pub const BLACK_JOKER: Card = Card(52);
    pub const RED_JOKER: Card = Card(53);

    pub fn new(suit: Suit, rank: Rank) -> Card {
        match rank {
            Rank::BlackJoker => Card::BLACK_JOKER,
            Rank::RedJoker => Card::RED_JOKER,
            r => Card(r as u8 * 4 + suit as u8),
        }
    }

    #[inline]
    pub fn from_index(i: usize) -> Option<Card> {
        (i < CARD_KINDS).then_some(Card(i as u8))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn rank(self) -> Rank {
        match self.0 {
            52 => Rank::BlackJoker,
            53 => Rank::RedJoker,
            i => Rank::SUITED[(i / 4) as usize],
        }
    }

    /// Jokers report their codec suit: spade for black, heart for red.
    #[inline]
    pub fn suit(self) -> Suit {
        match self.0 {
            52 => Suit::Spade,
            53 => Suit::Heart,
            i => Suit::ALL[(i % 4) as usize],
        }
    }

    /// True for the heart-suited card of the round level.
    #[inline]
    pub fn is_wild(self, level: Level) -> bool {
        self == level.wild_card()
    }

    pub fn code(self) -> &'static str {
        CODES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = Card> {
        (0..CARD_KINDS as u8).map(Card)
    }
}

impl fmt::Debug for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Card {
    type Err = CardError;

    fn from_str(s: &str) -> Result<Card, CardError> {
        CODES
            .iter()
            .position(|c| *c == s)
            .map(|i| Card(i as u8))
            .ok_or_else(|| CardError::BadCode(s.to_string()))
    }
}

impl Serialize for Rank {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.as_char())
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Rank, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Rank::from_char(c),
            _ => None,
        }
        .ok_or_else(|| serde::de::Error::custom(CardError::BadRank(s)))
    }
}

impl Serialize for Card {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Card, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The current round level: a suited rank from 2 to A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Rank", into = "Rank")]
pub struct Level(Rank);

impl Level {
    pub const TWO: Level = Level(Rank::Two);
    pub const ACE: Level = Level(Rank::Ace);

    pub fn new(rank: Rank) -> Result<Level, CardError> {
        if rank.is_joker() {
            Err(CardError::JokerLevel)
        } else {
            Ok(Level(rank))
        }
    }

    #[inline]
    pub fn rank(self) -> Rank {
        self.0
    }

    #[inline]
    pub fn wild_card(self) -> Card {
        Card::new(Suit::Heart, self.0)
    }

    /// Advance by `steps`, capped at A.
    pub fn advanced(self, steps: u8) -> Level {
        let i = (self.0 as usize + steps as usize).min(Rank::Ace as usize);
        Level(Rank::SUITED[i])
    }

    /// Strength of `rank` in single/pair/triple/bomb comparisons: 2..A map to
    /// 0..12 except the level rank, which sits at 13 above A; the jokers are
    /// 14 and 15.
    #[inline]
    pub fn elevated(self, rank: Rank) -> u8 {
        match rank {
            Rank::BlackJoker => 14,
            Rank::RedJoker => 15,
            r if r == self.0 => 13,
            r => r as u8,
        }
    }
}

impl TryFrom<Rank> for Level {
    type Error = CardError;
    fn try_from(r: Rank) -> Result<Level, CardError> {
        Level::new(r)
    }
}

impl From<Level> for Rank {
    fn from(l: Level) -> Rank {
        l.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankOrder {
    /// Level rank promoted between A and the black joker.
    Elevated,
    /// Plain sequence order 2 < 3 < ... < A; jokers excluded.
    Natural,
}

pub fn compare_rank(
    a: Rank,
    b: Rank,
    level: Level,
    mode: RankOrder,
) -> Result<Ordering, CardError> {
    match mode {
        RankOrder::Elevated => Ok(level.elevated(a).cmp(&level.elevated(b))),
        RankOrder::Natural => {
            if a.is_joker() || b.is_joker() {
                return Err(CardError::JokerInSequence);
            }
            Ok(a.cmp(&b))
        }
    }
}

const LO_BITS: u128 = 0x5555_5555_5555_5555_5555_5555_5555_5555;
const HI_BITS: u128 = 0xAAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAA;

/// A multiset of cards with multiplicity at most two per identity.
///
/// Addition and subtraction are plain integer arithmetic on the packed
/// representation; callers keep every per-card count within 0..=3 (union of
/// disjoint parts of one deck) and never subtract more than is present.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CardSet(u128);

impl CardSet {
    pub const EMPTY: CardSet = CardSet(0);

    #[inline]
    pub fn from_bits(bits: u128) -> CardSet {
        CardSet(bits)
    }

    #[inline]
    pub fn bits(self) -> u128 {
        self.0
    }

    /// The full 108-card pack: two of every identity.
    pub fn full_deck() -> CardSet {
        let mut s = CardSet::EMPTY;
        for c in Card::all() {
            s.insert(c);
            s.insert(c);
        }
        s
    }

    #[inline]
    pub fn count(self, card: Card) -> u8 {
        ((self.0 >> (card.index() * 2)) & 3) as u8
    }

    #[inline]
    pub fn insert(&mut self, card: Card) {
        debug_assert!(self.count(card) < 3);
        self.0 += 1u128 << (card.index() * 2);
    }

    /// Remove one copy; returns false if the card is absent.
    #[inline]
    pub fn remove(&mut self, card: Card) -> bool {
        if self.count(card) == 0 {
            return false;
        }
        self.0 -= 1u128 << (card.index() * 2);
        true
    }

    #[inline]
    pub fn with(mut self, card: Card, n: u8) -> CardSet {
        for _ in 0..n {
            self.insert(card);
        }
        self
    }

    #[inline]
    pub fn len(self) -> usize {
        ((self.0 & LO_BITS).count_ones() + 2 * (self.0 & HI_BITS).count_ones()) as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Multiset containment.
    pub fn contains(self, other: CardSet) -> bool {
        let mut a = self.0;
        let mut b = other.0;
        while b != 0 {
            if (b & 3) > (a & 3) {
                return false;
            }
            a >>= 2;
            b >>= 2;
        }
        true
    }

    /// Multiset sum; panics in debug builds on overflow past three copies.
    #[inline]
    pub fn plus(self, other: CardSet) -> CardSet {
        CardSet(self.0 + other.0)
    }

    /// Multiset difference; `other` must be contained in `self`.
    #[inline]
    pub fn minus(self, other: CardSet) -> CardSet {
        debug_assert!(self.contains(other));
        CardSet(self.0 - other.0)
    }

    /// Cards in index order, repeated by multiplicity.
    pub fn iter(self) -> impl Iterator<Item = Card> {
        let bits = self.0;
        (0..CARD_KINDS).flat_map(move |i| {
            let n = ((bits >> (i * 2)) & 3) as usize;
            std::iter::repeat_n(Card(i as u8), n)
        })
    }

    /// Distinct identities present, in index order.
    pub fn distinct(self) -> impl Iterator<Item = Card> {
        let bits = self.0;
        (0..CARD_KINDS)
            .filter(move |i| (bits >> (i * 2)) & 3 != 0)
            .map(|i| Card(i as u8))
    }

    pub fn to_vec(self) -> Vec<Card> {
        self.iter().collect()
    }

    pub fn codes(self) -> Vec<String> {
        self.iter().map(|c| c.code().to_string()).collect()
    }

    /// Per-identity counts in index order (the 54-slot count vector).
    pub fn counts(self) -> [u8; CARD_KINDS] {
        let mut out = [0u8; CARD_KINDS];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = ((self.0 >> (i * 2)) & 3) as u8;
        }
        out
    }

    /// Count of cards per rank.
    pub fn rank_counts(self) -> [u8; 15] {
        let mut out = [0u8; 15];
        for (i, n) in self.counts().into_iter().enumerate() {
            out[Card(i as u8).rank().index()] += n;
        }
        out
    }

    pub fn from_codes<S: AsRef<str>>(codes: &[S]) -> Result<CardSet, CardError> {
        let mut s = CardSet::EMPTY;
        for code in codes {
            let card: Card = code.as_ref().parse()?;
            if s.count(card) >= 2 {
                return Err(CardError::TooManyCopies(card.code().to_string()));
            }
            s.insert(card);
        }
        Ok(s)
    }
}

impl FromIterator<Card> for CardSet {
    fn from_iter<I: IntoIterator<Item = Card>>(iter: I) -> CardSet {
        let mut s = CardSet::EMPTY;
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl fmt::Debug for CardSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

impl Serialize for CardSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|c| c.code()))
    }
}

impl<'de> Deserialize<'de> for CardSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<CardSet, D::Error> {
        let codes = Vec::<String>::deserialize(d)?;
        CardSet::from_codes(&codes).map_err(serde::de::Error::custom)
    }
}

/// The canonical 108-card pack in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deck {
    cards: Vec<Card>,
}

impl Deck {
    pub fn cards(&self) -> &[Card] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    /// A uniformly shuffled copy of the deck order.
    pub fn shuffled(&self, rng: &mut ChaCha8Rng) -> Vec<Card> {
        let mut order = self.cards.clone();
        order.shuffle(rng);
        order
    }
}

pub fn build_deck() -> Deck {
    Deck {
        cards: CardSet::full_deck().to_vec(),
    }
}

/// Deal a shuffled deck order round-robin starting from seat 0.
pub fn deal(order: &[Card]) -> [CardSet; 4] {
    let mut hands = [CardSet::EMPTY; 4];
    for (i, &c) in order.iter().enumerate() {
        hands[i % 4].insert(c);
    }
    hands
}

/// Shuffle with a seeded generator and deal 27 cards to each seat.
pub fn shuffle_deal(deck: &Deck, seed: u64) -> [CardSet; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    deal(&deck.shuffled(&mut rng))
}

/// Derive an independent child seed; used to split one match seed into
/// per-round and per-match streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
