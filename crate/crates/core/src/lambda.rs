//! The set Λ of normalized proper prefixes of minimal squares of bounded
//! period, stored as an array trie, together with the suffix
//! classification `w ↦ Λ(w)` and the single-letter transition it induces.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::digest;
use crate::error::{Error, Result};
use crate::words::{self, check_letters, Letter, Word, MAX_ALPHABET};

pub const NO_CHILD: u32 = u32::MAX;

/// Largest supported period bound; node depths are stored in a byte.
pub const MAX_PERIOD: usize = 127;

/// Index of a word of Λ. Identifiers are breadth-first by (length,
/// lexicographic order), so the empty word is always `0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LambdaState(pub u32);

impl LambdaState {
    pub const ROOT: LambdaState = LambdaState(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Array trie over Λ.
///
/// Node `i` owns `children[i * alphabet .. (i + 1) * alphabet]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaSet {
    period: usize,
    alphabet: usize,
    children: Vec<u32>,
    parent: Vec<u32>,
    letter: Vec<Letter>,
    depth: Vec<u8>,
}

impl LambdaSet {
    fn with_root(period: usize, alphabet: usize) -> Self {
        LambdaSet {
            period,
            alphabet,
            children: vec![NO_CHILD; alphabet],
            parent: vec![NO_CHILD],
            letter: vec![0],
            depth: vec![0],
        }
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Longest word length in Λ, `2p - 1`.
    pub fn max_word_len(&self) -> usize {
        2 * self.period - 1
    }

    pub fn root(&self) -> LambdaState {
        LambdaState::ROOT
    }

    pub fn depth(&self, s: LambdaState) -> usize {
        self.depth[s.index()] as usize
    }

    pub fn child(&self, s: LambdaState, a: Letter) -> Option<LambdaState> {
        match self.children[s.index() * self.alphabet + a as usize] {
            NO_CHILD => None,
            id => Some(LambdaState(id)),
        }
    }

    /// Letters of the normalized word stored at `s`.
    pub fn word_letters(&self, s: LambdaState) -> Vec<Letter> {
        let mut out = vec![0; self.depth(s)];
        let mut node = s.0;
        for slot in out.iter_mut().rev() {
            *slot = self.letter[node as usize];
            node = self.parent[node as usize];
        }
        out
    }

    pub fn word(&self, s: LambdaState) -> Word {
        Word::from_letters(self.word_letters(s))
    }

    pub fn states(&self) -> impl Iterator<Item = LambdaState> {
        (0..self.len() as u32).map(LambdaState)
    }

    pub fn words(&self) -> impl Iterator<Item = Word> + '_ {
        self.states().map(|s| self.word(s))
    }

    /// Exact lookup of a (normalized) word.
    pub fn id_of(&self, w: &Word) -> Option<LambdaState> {
        let mut node = self.root();
        for &a in w.letters() {
            if a as usize >= self.alphabet {
                return None;
            }
            node = self.child(node, a)?;
        }
        Some(node)
    }

    /// Looks up the normalization of `letters` without allocating it.
    fn lookup_normalized(&self, letters: &[Letter]) -> Option<LambdaState> {
        let mut map = [u8::MAX; 256];
        let mut next = 0u8;
        let mut node = 0u32;
        for &a in letters {
            let slot = &mut map[a as usize];
            if *slot == u8::MAX {
                *slot = next;
                next += 1;
            }
            if *slot as usize >= self.alphabet {
                return None;
            }
            node = self.children[node as usize * self.alphabet + *slot as usize];
            if node == NO_CHILD {
                return None;
            }
        }
        Some(LambdaState(node))
    }

    /// Λ(w): the longest word of Λ that is a suffix of `w` up to a
    /// permutation of the alphabet.
    ///
    /// Fails if `w` contains a square of period at most `p`.
    pub fn classify(&self, w: &Word) -> Result<LambdaState> {
        w.check_alphabet(self.alphabet)?;
        if let Some(sq) = words::find_square_in(w.letters(), self.period) {
            return Err(Error::ShortSquare {
                word: w.to_string(),
                period: sq.period,
                bound: self.period,
            });
        }
        Ok(self.classify_unchecked(w.letters()))
    }

    /// Λ(w) without the short-square precondition check.
    pub fn classify_unchecked(&self, letters: &[Letter]) -> LambdaState {
        let n = letters.len();
        let first = n.saturating_sub(self.max_word_len());
        (first..n)
            .find_map(|start| self.lookup_normalized(&letters[start..]))
            .unwrap_or(LambdaState::ROOT)
    }

    /// Appends `a` to the representative of `s`. Returns `None` when the
    /// extension ends with a square of period at most `p`, and Λ of the
    /// extension otherwise.
    ///
    /// Panics if `a` is outside the alphabet.
    pub fn step(&self, s: LambdaState, a: Letter) -> Option<LambdaState> {
        let mut rep = self.word_letters(s);
        rep.push(a);
        self.step_from(&rep)
    }

    /// Same as [`step`](Self::step) on a prepared buffer holding the
    /// representative followed by the new letter.
    pub(crate) fn step_from(&self, extended: &[Letter]) -> Option<LambdaState> {
        let a = *extended.last().expect("non-empty extension");
        assert!((a as usize) < self.alphabet, "letter {a} out of alphabet");
        if words::square_suffix(extended, self.period).is_some() {
            None
        } else {
            Some(self.classify_unchecked(extended))
        }
    }

    /// Cursor at the empty word for letter-by-letter classification of
    /// concrete words.
    pub fn cursor(&self) -> Cursor {
        Cursor {
            state: LambdaState::ROOT,
            suffix: Vec::with_capacity(self.max_word_len() + 1),
        }
    }

    /// Appends a concrete letter to the word tracked by `cur`. Returns
    /// `None` if that closes a square of period at most `p`.
    ///
    /// [`step`](Self::step) works in the normalized frame of the stored
    /// word; the cursor keeps the actual letters of the suffix Λ(w) so
    /// that callers never have to translate letters.
    pub fn advance(&self, cur: &Cursor, a: Letter) -> Option<Cursor> {
        assert!((a as usize) < self.alphabet, "letter {a} out of alphabet");
        let mut suffix = Vec::with_capacity(cur.suffix.len() + 1);
        suffix.extend_from_slice(&cur.suffix);
        suffix.push(a);
        if words::square_suffix(&suffix, self.period).is_some() {
            return None;
        }
        let state = self.classify_unchecked(&suffix);
        let keep = self.depth(state);
        suffix.drain(..suffix.len() - keep);
        Some(Cursor { state, suffix })
    }

    fn push_node(&mut self, parent: u32, a: Letter, depth: u8) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(parent);
        self.letter.push(a);
        self.depth.push(depth);
        self.children
            .extend(std::iter::repeat_n(NO_CHILD, self.alphabet));
        self.children[parent as usize * self.alphabet + a as usize] = id;
        id
    }

    fn insert_path(&mut self, letters: &[Letter], max_nodes: usize) -> Result<()> {
        let mut node = 0u32;
        for (i, &a) in letters.iter().enumerate() {
            let slot = self.children[node as usize * self.alphabet + a as usize];
            node = if slot == NO_CHILD {
                if self.len() >= max_nodes {
                    return Err(Error::ResourceGuard(format!(
                        "lambda construction exceeded {max_nodes} nodes"
                    )));
                }
                self.push_node(node, a, (i + 1) as u8)
            } else {
                slot
            };
        }
        Ok(())
    }

    /// Renumbers nodes breadth-first with children in letter order, which
    /// is (length, lexicographic) order.
    fn canonicalize(self) -> Self {
        let n = self.len();
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([0u32]);
        while let Some(node) = queue.pop_front() {
            order.push(node);
            let row = &self.children[node as usize * self.alphabet..][..self.alphabet];
            queue.extend(row.iter().copied().filter(|&c| c != NO_CHILD));
        }
        let mut rank = vec![0u32; n];
        for (new, &old) in order.iter().enumerate() {
            rank[old as usize] = new as u32;
        }
        let mut out = LambdaSet::with_root(self.period, self.alphabet);
        out.children = vec![NO_CHILD; n * self.alphabet];
        out.parent = vec![NO_CHILD; n];
        out.letter = vec![0; n];
        out.depth = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            let old = old as usize;
            if old != 0 {
                out.parent[new] = rank[self.parent[old] as usize];
            }
            out.letter[new] = self.letter[old];
            out.depth[new] = self.depth[old];
            for a in 0..self.alphabet {
                let c = self.children[old * self.alphabet + a];
                if c != NO_CHILD {
                    out.children[new * self.alphabet + a] = rank[c as usize];
                }
            }
        }
        out
    }

    /// Canonical text form; see the crate documentation for the layout.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.period + 1) + 64);
        out.push_str("lambda v1\n");
        let _ = writeln!(
            out,
            "p={} alphabet={} count={}",
            self.period,
            self.alphabet,
            self.len()
        );
        for s in self.states() {
            if s == LambdaState::ROOT {
                out.push_str("-\n");
            } else {
                for a in self.word_letters(s) {
                    out.push(words::letter_char(a));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn digest(&self) -> u64 {
        digest::fnv1a64(self.to_text().as_bytes())
    }

    /// Parses the canonical text form, checking structure (prefix closure,
    /// canonical order, normalization, short-square-freeness, lengths).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, "lambda v1")) => {}
            _ => return Err(Error::parse(1, "expected header \"lambda v1\"")),
        }
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(2, "missing parameter line"))?;
        let fields = parse_fields(line_no, header, &["p", "alphabet", "count"])?;
        let (period, alphabet, count) = (fields[0], fields[1], fields[2]);
        validate_params(period, alphabet).map_err(|e| Error::parse(line_no, e.to_string()))?;

        let mut set = LambdaSet::with_root(period, alphabet);
        let mut prev: Option<Word> = None;
        let mut seen = 0usize;
        for (line_no, line) in lines {
            let word = if line == "-" {
                Word::new()
            } else if line.is_empty() {
                return Err(Error::parse(line_no, "empty line"));
            } else {
                line.parse::<Word>()
                    .map_err(|_| Error::parse(line_no, format!("bad word {line:?}")))?
            };
            let bad = |msg: &str| Error::parse(line_no, format!("{msg}: {word}"));
            check_letters(word.letters(), alphabet).map_err(|_| bad("letter out of range"))?;
            if seen == 0 {
                if !word.is_empty() {
                    return Err(bad("first word must be the empty word"));
                }
            } else {
                if word.len() > 2 * period - 1 {
                    return Err(bad("word longer than 2p-1"));
                }
                if words::normalize_letters(word.letters()) != word.letters() {
                    return Err(bad("word is not normalized"));
                }
                if words::find_square_in(word.letters(), usize::MAX).is_some() {
                    return Err(bad("word contains a square"));
                }
                let p = prev.as_ref().expect("previous word");
                if (p.len(), p.letters()) >= (word.len(), word.letters()) {
                    return Err(bad("words out of canonical order"));
                }
                let (init, last) = word.letters().split_at(word.len() - 1);
                let parent = set
                    .id_of(&Word::from(init))
                    .ok_or_else(|| bad("prefix missing"))?;
                set.push_node(parent.0, last[0], word.len() as u8);
            }
            seen += 1;
            prev = Some(word);
        }
        if seen != count {
            return Err(Error::parse(2, format!("count={count} but {seen} words")));
        }
        Ok(set)
    }
}

/// A concrete word reduced to its class: the state Λ(w) and the actual
/// letters of the suffix it was read from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cursor {
    state: LambdaState,
    suffix: Vec<Letter>,
}

impl Cursor {
    pub fn state(&self) -> LambdaState {
        self.state
    }

    pub fn suffix(&self) -> &[Letter] {
        &self.suffix
    }
}

pub(crate) fn parse_fields(line_no: usize, line: &str, keys: &[&str]) -> Result<Vec<usize>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != keys.len() {
        return Err(Error::parse(line_no, format!("expected fields {keys:?}")));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(part, key)| {
            part.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(line_no, format!("expected {key}=<int>, got {part:?}")))
        })
        .collect()
}

pub(crate) fn validate_params(period: usize, alphabet: usize) -> Result<()> {
    if period == 0 || period > MAX_PERIOD {
        return Err(Error::InvalidParameter(format!(
            "period bound must be in 1..={MAX_PERIOD}, got {period}"
        )));
    }
    if !(2..=MAX_ALPHABET).contains(&alphabet) {
        return Err(Error::InvalidParameter(format!(
            "alphabet size must be in 2..={MAX_ALPHABET}, got {alphabet}"
        )));
    }
    Ok(())
}

/// Builds Λ for squares of period at most `period` over `alphabet_size`
/// letters.
pub fn build_lambda(period: usize, alphabet_size: usize) -> Result<LambdaSet> {
    build_lambda_limited(period, alphabet_size, u32::MAX as usize)
}

/// [`build_lambda`] failing with [`Error::ResourceGuard`] once the trie
/// would exceed `max_nodes` nodes.
pub fn build_lambda_limited(
    period: usize,
    alphabet_size: usize,
    max_nodes: usize,
) -> Result<LambdaSet> {
    validate_params(period, alphabet_size)?;
    let mut gen = SquareGenerator {
        period,
        alphabet: alphabet_size,
        max_nodes,
        trie: LambdaSet::with_root(period, alphabet_size),
        u: Vec::with_capacity(period),
        uu: Vec::with_capacity(2 * period),
    };
    gen.extend(0)?;
    Ok(gen.trie.canonicalize())
}

/// Depth-first walk over normalized square-free period words `u`.
struct SquareGenerator {
    period: usize,
    alphabet: usize,
    max_nodes: usize,
    trie: LambdaSet,
    u: Vec<Letter>,
    uu: Vec<Letter>,
}

impl SquareGenerator {
    fn extend(&mut self, distinct: usize) -> Result<()> {
        if !self.u.is_empty() && self.doubled_is_minimal() {
            let n = self.uu.len();
            self.trie.insert_path(&self.uu[..n - 1], self.max_nodes)?;
        }
        if self.u.len() == self.period {
            return Ok(());
        }
        let top = distinct.min(self.alphabet - 1);
        for a in 0..=top as Letter {
            self.u.push(a);
            if words::square_suffix(&self.u, usize::MAX).is_none() {
                self.extend(distinct.max(a as usize + 1))?;
            }
            self.u.pop();
        }
        Ok(())
    }

    /// `u` is square-free, so `uu` is minimal iff no prefix of length in
    /// `(|u|, 2|u|)` ends with a square and `uu` has no square suffix of
    /// period below `|u|`.
    fn doubled_is_minimal(&mut self) -> bool {
        let n = self.u.len();
        self.uu.clear();
        self.uu.extend_from_slice(&self.u);
        self.uu.extend_from_slice(&self.u);
        (n + 1..2 * n).all(|end| words::square_suffix(&self.uu[..end], usize::MAX).is_none())
            && words::square_suffix(&self.uu, n - 1).is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn listing(set: &LambdaSet) -> Vec<String> {
        set.words().map(|w| w.to_string()).collect()
    }

    #[test]
    fn small_instances() {
        assert_eq!(listing(&build_lambda(1, 4).unwrap()), ["", "0"]);
        assert_eq!(
            listing(&build_lambda(2, 4).unwrap()),
            ["", "0", "01", "010"]
        );
        // "012" is a proper prefix of the minimal square 012012.
        assert_eq!(
            listing(&build_lambda(3, 4).unwrap()),
            ["", "0", "01", "010", "012", "0120", "01201"]
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_lambda(0, 4).is_err());
        assert!(build_lambda(2, 1).is_err());
        assert!(build_lambda(2, 22).is_err());
    }

    #[test]
    fn node_limit_is_a_resource_error() {
        assert!(matches!(
            build_lambda_limited(6, 4, 20),
            Err(Error::ResourceGuard(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let l2 = build_lambda(2, 4).unwrap();
        assert_eq!(l2.classify(&Word::new()).unwrap(), l2.root());
        assert_eq!(l2.classify(&w("3")).unwrap(), l2.id_of(&w("0")).unwrap());
        let l3 = build_lambda(3, 4).unwrap();
        assert_eq!(
            l3.classify(&w("0102")).unwrap(),
            l3.id_of(&w("012")).unwrap()
        );
        assert_eq!(
            l3.classify(&w("3123")).unwrap(),
            l3.id_of(&w("0120")).unwrap()
        );
        assert_eq!(
            l3.classify(&w("3120")).unwrap(),
            l3.id_of(&w("012")).unwrap()
        );
    }

    #[test]
    fn classify_rejects_short_squares() {
        let l2 = build_lambda(2, 4).unwrap();
        assert!(matches!(
            l2.classify(&w("03232")),
            Err(Error::ShortSquare { period: 2, .. })
        ));
        // a period-3 square is invisible at p = 2
        assert!(l2.classify(&w("012012")).is_ok());
        assert!(l2.classify(&w("04")).is_err());
    }

    #[test]
    fn step_examples() {
        let l2 = build_lambda(2, 4).unwrap();
        let zero = l2.id_of(&w("0")).unwrap();
        for a in 0..4 {
            assert_eq!(l2.step(l2.root(), a), Some(zero));
        }
        assert_eq!(l2.step(zero, 0), None);
        let s01 = l2.id_of(&w("01")).unwrap();
        let s010 = l2.step(s01, 0).unwrap();
        assert_eq!(l2.word(s010), w("010"));
        assert_eq!(l2.step(s010, 1), None);
        assert_eq!(l2.step(s010, 0), None);
        assert_eq!(l2.step(s010, 2), Some(s01));
    }

    #[test]
    fn text_round_trip() {
        for p in 1..=5 {
            let set = build_lambda(p, 4).unwrap();
            let text = set.to_text();
            let parsed = LambdaSet::from_text(&text).unwrap();
            assert_eq!(parsed, set);
            assert_eq!(parsed.digest(), set.digest());
        }
        let l3 = build_lambda(3, 4).unwrap();
        assert_eq!(
            l3.to_text(),
            "lambda v1\np=3 alphabet=4 count=7\n-\n0\n01\n010\n012\n0120\n01201\n"
        );
    }

    #[test]
    fn from_text_rejects_malformed_input() {
        let ok = "lambda v1\np=2 alphabet=4 count=4\n-\n0\n01\n010\n";
        assert!(LambdaSet::from_text(ok).is_ok());
        for bad in [
            "lambda v2\np=2 alphabet=4 count=4\n-\n0\n01\n010\n",
            "lambda v1\np=2 alphabet=4 count=5\n-\n0\n01\n010\n",
            "lambda v1\np=2 alphabet=4 count=3\n-\n01\n010\n",
            "lambda v1\np=2 alphabet=4 count=4\n-\n0\n010\n01\n",
            "lambda v1\np=2 alphabet=4 count=4\n-\n0\n01\n011\n",
            "lambda v1\np=2 alphabet=4 count=3\n-\n0\n02\n",
            "lambda v1\np=1 alphabet=4 count=3\n-\n0\n01\n",
        ] {
            assert!(LambdaSet::from_text(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn same_set_for_large_alphabets() {
        for p in 1..=4 {
            let base = listing(&build_lambda(p, (2 * p - 1).max(2)).unwrap());
            for a in 2 * p..=2 * p + 2 {
                assert_eq!(listing(&build_lambda(p, a).unwrap()), base, "p={p} a={a}");
            }
        }
    }

    fn brute_classify(set: &LambdaSet, letters: &[Letter]) -> LambdaState {
        (0..=letters.len())
            .find_map(|start| {
                set.id_of(&Word::from_letters(words::normalize_letters(
                    &letters[start..],
                )))
            })
            .unwrap()
    }

    /// Random words avoiding squares of period <= p, grown letter by letter.
    fn short_square_free(seed: Vec<u8>, p: usize) -> Vec<Letter> {
        let mut out = Vec::new();
        for choice in seed {
            for shift in 0..4 {
                out.push((choice + shift) % 4);
                if words::square_suffix(&out, p).is_some() {
                    out.pop();
                } else {
                    break;
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn incremental_classification_matches_direct(
            seed in prop::collection::vec(0u8..4, 0..=40),
            p in 1usize..=5,
        ) {
            let set = build_lambda(p, 4).unwrap();
            let letters = short_square_free(seed, p);
            let mut cur = set.cursor();
            for (i, &a) in letters.iter().enumerate() {
                // the normalized-frame step agrees with the concrete one
                let frame = words::normalize_letters(&[cur.suffix(), &[a]].concat());
                let via_step = set.step(cur.state(), *frame.last().unwrap());
                let next = set.advance(&cur, a).expect("no short square by construction");
                prop_assert_eq!(via_step, Some(next.state()));
                prop_assert!(set.depth(next.state()) <= set.depth(cur.state()) + 1);
                cur = next;
                prop_assert_eq!(cur.state(), brute_classify(&set, &letters[..=i]));
                prop_assert_eq!(cur.state(), set.classify(&Word::from(&letters[..=i])).unwrap());
            }
            // one more letter that closes a short square is refused
            if let Some(&last) = letters.last() {
                prop_assert!(set.advance(&cur, last).is_none());
            }
        }
    }
}
