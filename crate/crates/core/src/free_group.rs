//! Reduced words in the free group of rank `r`.
//!
//! A letter is stored as a single byte `2 * generator + inverse_bit`, so the
//! natural byte order of letters is `a < A < b < B < ...`. Words compare in
//! shortlex order (length first, then letters), which fixes every
//! enumeration order in the crate.
//!
//! The string format uses lowercase letters for generators and uppercase for
//! their inverses. The letter `e` is reserved for the identity, so the
//! generator names run `a b c d f g h ...`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Generator names in index order. `e` is skipped: it names the identity.
const GENERATOR_NAMES: &[u8] = b"abcdfghijklmnopqrstuvwxyz";

/// Largest supported rank (one generator per available name).
pub const MAX_RANK: usize = GENERATOR_NAMES.len();

/// A signed generator: `s_i` or `s_i^{-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Letter {
        debug_assert!(generator < MAX_RANK);
        Letter((generator as u8) << 1 | inverse as u8)
    }

    /// Generator index, 0-based.
    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    /// Position of the letter in `a, A, b, B, ...`; used to index per-letter tables.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn from_code(code: usize) -> Letter {
        Letter(code as u8)
    }

    pub fn to_char(self) -> char {
        let c = GENERATOR_NAMES[self.generator()] as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        let lower = c.to_ascii_lowercase();
        let idx = GENERATOR_NAMES.iter().position(|&b| b as char == lower)?;
        Some(Letter::new(idx, c.is_ascii_uppercase()))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Inline storage covers every word the desk-scale windows produce.
type Letters = SmallVec<[Letter; 16]>;

/// A freely reduced word. The empty word is the identity `e`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct GroupWord {
    letters: Letters,
}

impl GroupWord {
    pub fn identity() -> GroupWord {
        GroupWord {
            letters: Letters::new(),
        }
    }

    pub fn letter(l: Letter) -> GroupWord {
        GroupWord {
            letters: smallvec![l],
        }
    }

    /// The generator `s_i` (0-based index).
    pub fn generator(i: usize) -> GroupWord {
        GroupWord::letter(Letter::new(i, false))
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(letters: I) -> GroupWord {
        let mut out = Letters::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        GroupWord { letters: out }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    pub fn inv(&self) -> GroupWord {
        GroupWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn mul(&self, other: &GroupWord) -> GroupWord {
        let mut k = 0;
        let (a, b) = (&self.letters, &other.letters);
        while k < a.len() && k < b.len() && a[a.len() - 1 - k] == b[k].inverse() {
            k += 1;
        }
        let mut letters = Letters::with_capacity(a.len() + b.len() - 2 * k);
        letters.extend_from_slice(&a[..a.len() - k]);
        letters.extend_from_slice(&b[k..]);
        GroupWord { letters }
    }

    /// `self · l`, reduced.
    pub fn mul_letter(&self, l: Letter) -> GroupWord {
        let mut letters = self.letters.clone();
        if letters.last() == Some(&l.inverse()) {
            letters.pop();
        } else {
            letters.push(l);
        }
        GroupWord { letters }
    }

    /// `l · self`, reduced.
    pub fn letter_mul(&self, l: Letter) -> GroupWord {
        if self.letters.first() == Some(&l.inverse()) {
            GroupWord {
                letters: Letters::from_slice(&self.letters[1..]),
            }
        } else {
            let mut letters = Letters::with_capacity(self.letters.len() + 1);
            letters.push(l);
            letters.extend_from_slice(&self.letters);
            GroupWord { letters }
        }
    }

    /// Word with the last letter removed (the parent in the right Cayley tree).
    pub fn parent(&self) -> Option<GroupWord> {
        if self.letters.is_empty() {
            None
        } else {
            Some(GroupWord {
                letters: Letters::from_slice(&self.letters[..self.letters.len() - 1]),
            })
        }
    }

    /// Largest generator index used, if any.
    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.generator()).max()
    }

    /// Parses the word string format. `e` and the empty string denote the identity.
    pub fn parse(s: &str, rank: usize) -> Result<GroupWord> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(GroupWord::identity());
        }
        let mut raw = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = Letter::from_char(c)
                .filter(|l| l.generator() < rank)
                .ok_or_else(|| Error::input(format!("unknown generator {c:?} for rank {rank}")))?;
            raw.push(l);
        }
        Ok(GroupWord::reduce(raw))
    }
}

impl Ord for GroupWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for GroupWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for GroupWord {
    type Err = Error;

    /// Parses without a rank bound (any of the 25 generator names).
    fn from_str(s: &str) -> Result<GroupWord> {
        GroupWord::parse(s, MAX_RANK)
    }
}

impl serde::Serialize for GroupWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for GroupWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The rank-`r` free group with its standard generating set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FreeGroup {
    rank: usize,
}

impl FreeGroup {
    pub fn new(rank: usize) -> Result<FreeGroup> {
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::input(format!(
                "rank must be in 1..={MAX_RANK}, got {rank}"
            )));
        }
        Ok(FreeGroup { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn generator_name(&self, i: usize) -> char {
        GENERATOR_NAMES[i] as char
    }

    /// The `2r` letters in code order `a, A, b, B, ...`.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + Clone {
        (0..2 * self.rank).map(Letter::from_code)
    }

    /// Builds a word from raw letters, rejecting letters outside the rank.
    pub fn reduce(&self, letters: &[Letter]) -> Result<GroupWord> {
        if let Some(l) = letters.iter().find(|l| l.generator() >= self.rank) {
            return Err(Error::input(format!(
                "generator index {} out of range for rank {}",
                l.generator(),
                self.rank
            )));
        }
        Ok(GroupWord::reduce(letters.iter().copied()))
    }

    pub fn parse(&self, s: &str) -> Result<GroupWord> {
        GroupWord::parse(s, self.rank)
    }

    pub fn contains(&self, g: &GroupWord) -> bool {
        g.max_generator().is_none_or(|m| m < self.rank)
    }

    /// Closed-form size of the ball of radius `radius`.
    pub fn ball_size(&self, radius: usize) -> usize {
        if self.rank == 1 {
            return 2 * radius + 1;
        }
        let q = 2 * self.rank - 1;
        let mut size = 1usize;
        let mut sphere = 2 * self.rank;
        for _ in 0..radius {
            size += sphere;
            sphere *= q;
        }
        size
    }

    /// All reduced words of length at most `radius`, in shortlex order.
    pub fn ball(&self, radius: usize) -> Vec<GroupWord> {
        let mut out = vec![GroupWord::identity()];
        let mut start = 0;
        for _ in 0..radius {
            let end = out.len();
            for i in start..end {
                let w = out[i].clone();
                for l in self.letters() {
                    if w.last() != Some(l.inverse()) {
                        let mut letters = w.letters.clone();
                        letters.push(l);
                        out.push(GroupWord { letters });
                    }
                }
            }
            start = end;
        }
        out
    }

    /// Elements `f` of the radius-`radius` ball such that the geodesic from `f`
    /// to `g1` in the left Cayley tree (edges `g -- s g`) passes through `g2`.
    ///
    /// The left Cayley tree distance is `d(f, g) = |g f^{-1}|`.
    pub fn past_window(
        &self,
        g1: &GroupWord,
        g2: &GroupWord,
        radius: usize,
    ) -> Result<Vec<GroupWord>> {
        if g1 == g2 {
            return Err(Error::input("past window needs distinct group elements"));
        }
        let dist = |a: &GroupWord, b: &GroupWord| b.mul(&a.inv()).len();
        let d12 = dist(g2, g1);
        Ok(self
            .ball(radius)
            .into_iter()
            .filter(|f| dist(f, g1) == dist(f, g2) + d12)
            .collect())
    }
}

/// Shortlex index of each word of a ball, for table lookups.
#[derive(Clone, Debug)]
pub struct BallIndex {
    words: Vec<GroupWord>,
    index: HashMap<GroupWord, usize>,
    /// For each non-identity word: (index of parent, last letter).
    parents: Vec<Option<(usize, Letter)>>,
}

impl BallIndex {
    pub fn new(group: &FreeGroup, radius: usize) -> BallIndex {
        BallIndex::from_words(group.ball(radius))
    }

    /// Index over an arbitrary prefix-closed, shortlex-sorted word list.
    pub fn from_words(words: Vec<GroupWord>) -> BallIndex {
        let index: HashMap<GroupWord, usize> = words
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        let parents = words
            .iter()
            .map(|w| w.parent().map(|p| (index[&p], w.last().unwrap())))
            .collect();
        BallIndex {
            words,
            index,
            parents,
        }
    }

    pub fn words(&self) -> &[GroupWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, g: &GroupWord) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn parent(&self, i: usize) -> Option<(usize, Letter)> {
        self.parents[i]
    }
}
