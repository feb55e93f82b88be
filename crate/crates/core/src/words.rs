//! Word primitives: normalization under alphabet permutations, square
//! detection and the minimal-square test.
//!
//! Letters are small integers. Words print as base-36 digit strings
//! (`0`-`9`, then `a`-`k`), which covers alphabets of up to
//! [`MAX_ALPHABET`] letters.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Letter = u8;

/// Largest alphabet the text formats can represent.
pub const MAX_ALPHABET: usize = 21;

const UNMAPPED: u8 = u8::MAX;

#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

/// An occurrence of a square `uu` inside a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Square {
    pub start: usize,
    pub period: usize,
}

impl Word {
    pub fn new() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, a: Letter) {
        self.0.push(a);
    }

    /// Checks every letter against `alphabet_size`.
    pub fn check_alphabet(&self, alphabet_size: usize) -> Result<()> {
        check_letters(&self.0, alphabet_size)
    }
}

impl From<&[Letter]> for Word {
    fn from(letters: &[Letter]) -> Self {
        Word(letters.to_vec())
    }
}

pub(crate) fn check_letters(letters: &[Letter], alphabet_size: usize) -> Result<()> {
    match letters.iter().find(|&&a| a as usize >= alphabet_size) {
        Some(&letter) => Err(Error::LetterOutOfRange {
            letter,
            alphabet: alphabet_size,
        }),
        None => Ok(()),
    }
}

pub(crate) fn letter_char(a: Letter) -> char {
    std::char::from_digit(a as u32, 36).expect("letter below 36")
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &a in &self.0 {
            write!(f, "{}", letter_char(a))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_digit(36) {
                Some(d) if (d as usize) < MAX_ALPHABET && !c.is_ascii_uppercase() => {
                    Ok(d as Letter)
                }
                _ => Err(Error::parse(
                    0,
                    format!("invalid letter {c:?} in word {s:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// Renames letters in order of first occurrence, which yields the
/// lexicographically least image of `w` under alphabet bijections.
pub fn normalize(w: &Word, alphabet_size: usize) -> Result<Word> {
    w.check_alphabet(alphabet_size)?;
    Ok(Word(normalize_letters(&w.0)))
}

pub(crate) fn normalize_letters(letters: &[Letter]) -> Vec<Letter> {
    let mut map = [UNMAPPED; 256];
    let mut next = 0u8;
    letters
        .iter()
        .map(|&a| {
            let slot = &mut map[a as usize];
            if *slot == UNMAPPED {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect()
}

/// Leftmost, then shortest, occurrence of a square with period at most
/// `max_period`.
pub fn find_square(w: &Word, max_period: usize) -> Option<Square> {
    find_square_in(&w.0, max_period)
}

pub(crate) fn find_square_in(letters: &[Letter], max_period: usize) -> Option<Square> {
    let n = letters.len();
    for start in 0..n {
        let longest = max_period.min((n - start) / 2);
        for period in 1..=longest {
            let (a, b) = (
                &letters[start..start + period],
                &letters[start + period..start + 2 * period],
            );
            if a == b {
                return Some(Square { start, period });
            }
        }
    }
    None
}

/// Smallest period `q <= max_period` such that `letters` ends with a square
/// of period `q`.
pub(crate) fn square_suffix(letters: &[Letter], max_period: usize) -> Option<usize> {
    let n = letters.len();
    (1..=max_period.min(n / 2)).find(|&q| letters[n - q..] == letters[n - 2 * q..n - q])
}

pub fn is_square_free(w: &Word) -> bool {
    find_square_in(&w.0, usize::MAX).is_none()
}

/// True iff `w = uu` with `u` non-empty and every proper factor of `w` is
/// square-free.
pub fn is_minimal_square(w: &Word) -> bool {
    let n = w.len();
    if n == 0 || n % 2 == 1 {
        return false;
    }
    let (u, v) = w.0.split_at(n / 2);
    // Every proper factor lies inside w minus its first or its last letter.
    u == v
        && find_square_in(&w.0[1..], usize::MAX).is_none()
        && find_square_in(&w.0[..n - 1], usize::MAX).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&w("102"), 4).unwrap(), w("012"));
        assert_eq!(normalize(&w("2121"), 4).unwrap(), w("0101"));
        assert_eq!(normalize(&w("0123"), 4).unwrap(), w("0123"));
        assert_eq!(normalize(&Word::new(), 2).unwrap(), Word::new());
    }

    #[test]
    fn normalize_rejects_out_of_range() {
        assert!(matches!(
            normalize(&w("0130"), 3),
            Err(Error::LetterOutOfRange {
                letter: 3,
                alphabet: 3
            })
        ));
    }

    #[test]
    fn find_square_examples() {
        assert_eq!(
            find_square(&w("0101"), 2),
            Some(Square {
                start: 0,
                period: 2
            })
        );
        assert_eq!(find_square(&w("010"), 2), None);
        assert_eq!(find_square(&w("012012"), 2), None);
        assert_eq!(
            find_square(&w("012012"), 3),
            Some(Square {
                start: 0,
                period: 3
            })
        );
        // leftmost wins over shorter
        assert_eq!(
            find_square(&w("0120122"), 3),
            Some(Square {
                start: 0,
                period: 3
            })
        );
    }

    #[test]
    fn minimal_square_examples() {
        assert!(is_minimal_square(&w("00")));
        assert!(!is_minimal_square(&w("010010")));
        assert!(is_minimal_square(&w("012012")));
        assert!(is_minimal_square(&w("0101")));
        assert!(!is_minimal_square(&w("")));
        assert!(!is_minimal_square(&w("012")));
        assert!(!is_minimal_square(&w("0110")));
    }

    #[test]
    fn text_round_trip_covers_large_alphabets() {
        let word = Word::from_letters((0..21).collect());
        assert_eq!(word.to_string(), "0123456789abcdefghijk");
        assert_eq!(word.to_string().parse::<Word>().unwrap(), word);
        assert!("l".parse::<Word>().is_err());
        assert!("A".parse::<Word>().is_err());
    }

    fn brute_square(letters: &[Letter], max_period: usize) -> Option<Square> {
        let n = letters.len();
        let mut found = Vec::new();
        for i in 0..n {
            for j in i + 1..=n {
                let len = j - i;
                if len % 2 == 0 && len / 2 <= max_period {
                    let half = len / 2;
                    if letters[i..i + half] == letters[i + half..j] {
                        found.push((i, half));
                    }
                }
            }
        }
        found
            .into_iter()
            .min()
            .map(|(start, period)| Square { start, period })
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(letters in prop::collection::vec(0u8..5, 0..16)) {
            let once = normalize(&Word::from_letters(letters), 5).unwrap();
            prop_assert_eq!(normalize(&once, 5).unwrap(), once.clone());
        }

        #[test]
        fn normalize_preserves_squares(letters in prop::collection::vec(0u8..4, 0..14), p in 1usize..7) {
            let word = Word::from_letters(letters);
            let norm = normalize(&word, 4).unwrap();
            prop_assert_eq!(find_square(&word, p), find_square(&norm, p));
        }

        #[test]
        fn find_square_matches_brute_force(letters in prop::collection::vec(0u8..4, 0..=12), p in 1usize..7) {
            prop_assert_eq!(find_square_in(&letters, p), brute_square(&letters, p));
        }

        #[test]
        fn minimal_square_prefixes_are_square_free(u in prop::collection::vec(0u8..4, 1..6)) {
            let mut letters = u.clone();
            letters.extend_from_slice(&u);
            let word = Word::from_letters(letters);
            if is_minimal_square(&word) {
                for len in 0..word.len() {
                    prop_assert!(is_square_free(&Word::from(&word.letters()[..len])));
                }
            }
        }
    }
}
