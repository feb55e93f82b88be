//! Brute-force ground truth at desk scale: naive enumeration of Λ, counts
//! of square-free words, weighted counts for fixed list assignments and the
//! game against an adversary that picks each list just in time.
//!
//! Square detection here is a deliberately naive scan so that these checks
//! share no search code with the main pipeline.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::Rng;

use crate::bounds::search_beta;
use crate::digest;
use crate::error::{Error, Result};
use crate::lambda::{Cursor, LambdaSet, LambdaState};
use crate::rational::{ratio, Rational};
use crate::weights::{Certificate, WeightVector};
use crate::words::{Letter, Word};

/// Largest period bound [`brute_lambda`] accepts.
pub const BRUTE_LAMBDA_MAX_PERIOD: usize = 6;
/// Upper limit on `a·(a-1)^(n-1)`, the number of words without period-1
/// squares, for exhaustive counting.
pub const COUNT_BUDGET: u128 = 1 << 26;
/// Longest game in exact mode.
pub const EXACT_GAME_MAX_LEN: usize = 16;
/// Longest game in short-square mode.
pub const SHORT_GAME_MAX_LEN: usize = 256;

fn has_square(letters: &[Letter]) -> bool {
    let n = letters.len();
    (0..n).any(|i| (1..=(n - i) / 2).any(|q| letters[i..i + q] == letters[i + q..i + 2 * q]))
}

fn ends_with_square(letters: &[Letter]) -> bool {
    let n = letters.len();
    (1..=n / 2).any(|q| letters[n - q..] == letters[n - 2 * q..n - q])
}

fn first_occurrence_rename(letters: &[Letter]) -> Vec<Letter> {
    let mut seen: Vec<Letter> = Vec::new();
    letters
        .iter()
        .map(|a| match seen.iter().position(|b| b == a) {
            Some(i) => i as Letter,
            None => {
                seen.push(*a);
                (seen.len() - 1) as Letter
            }
        })
        .collect()
}

/// Λ re-derived from scratch: every word `u` of length at most `p`, keep
/// `uu` when all its proper factors are square-free, normalize, collect
/// proper prefixes.
pub fn brute_lambda(p: usize, alphabet_size: usize) -> Result<BTreeSet<Word>> {
    if p == 0 || alphabet_size < 2 {
        return Err(Error::InvalidParameter(
            "need p >= 1 and alphabet >= 2".into(),
        ));
    }
    if p > BRUTE_LAMBDA_MAX_PERIOD || (alphabet_size as u128).pow(p as u32) > 10_000_000 {
        return Err(Error::ResourceGuard(format!(
            "brute-force lambda is limited to p <= {BRUTE_LAMBDA_MAX_PERIOD} and alphabet^p <= 10^7"
        )));
    }
    let mut out = BTreeSet::new();
    out.insert(Word::new());
    for q in 1..=p {
        let mut u = vec![0 as Letter; q];
        loop {
            let uu = [u.as_slice(), u.as_slice()].concat();
            if !has_square(&uu[1..]) && !has_square(&uu[..2 * q - 1]) {
                let normal = first_occurrence_rename(&uu);
                for len in 0..2 * q {
                    out.insert(Word::from(&normal[..len]));
                }
            }
            // odometer over A^q
            let Some(pos) = u.iter().rposition(|&a| (a as usize) + 1 < alphabet_size) else {
                break;
            };
            u[pos] += 1;
            u[pos + 1..].iter_mut().for_each(|a| *a = 0);
        }
    }
    Ok(out)
}

fn count_guard(n: usize, alphabet_size: usize) -> Result<()> {
    let bound = (alphabet_size as u128)
        .checked_mul((alphabet_size as u128 - 1).saturating_pow(n.saturating_sub(1) as u32));
    match bound {
        Some(b) if b <= COUNT_BUDGET => Ok(()),
        _ => Err(Error::ResourceGuard(format!(
            "exhaustive search over length {n} and {alphabet_size} letters is too large"
        ))),
    }
}

/// Number of square-free words of length `n` over `alphabet_size` letters.
pub fn count_squarefree(n: usize, alphabet_size: usize) -> Result<u64> {
    if alphabet_size == 0 {
        return Ok(u64::from(n == 0));
    }
    count_guard(n, alphabet_size)?;
    fn walk(word: &mut Vec<Letter>, n: usize, alphabet: usize) -> u64 {
        if word.len() == n {
            return 1;
        }
        let mut total = 0;
        for a in 0..alphabet as Letter {
            word.push(a);
            if !ends_with_square(word) {
                total += walk(word, n, alphabet);
            }
            word.pop();
        }
        total
    }
    Ok(walk(&mut Vec::with_capacity(n), n, alphabet_size))
}

/// A sequence of equal-size letter lists, one per position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ListAssignment {
    lists: Vec<Vec<Letter>>,
    list_size: usize,
}

impl ListAssignment {
    pub fn new(lists: Vec<Vec<Letter>>, alphabet_size: usize) -> Result<Self> {
        let list_size = lists.first().map_or(0, Vec::len);
        let mut sorted = Vec::with_capacity(lists.len());
        for (i, list) in lists.into_iter().enumerate() {
            let set: BTreeSet<Letter> = list.iter().copied().collect();
            if set.len() != list.len() || list.len() != list_size || list_size == 0 {
                return Err(Error::InvalidParameter(format!(
                    "list {i} must hold {list_size} distinct letters"
                )));
            }
            if set.iter().any(|&a| a as usize >= alphabet_size) {
                return Err(Error::InvalidParameter(format!(
                    "list {i} has a letter outside the alphabet"
                )));
            }
            sorted.push(set.into_iter().collect());
        }
        Ok(ListAssignment {
            lists: sorted,
            list_size,
        })
    }

    pub fn constant(list: &[Letter], len: usize, alphabet_size: usize) -> Result<Self> {
        Self::new(vec![list.to_vec(); len], alphabet_size)
    }

    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        len: usize,
        alphabet_size: usize,
        list_size: usize,
    ) -> Self {
        assert!(list_size >= 1 && list_size <= alphabet_size);
        let lists = (0..len)
            .map(|_| {
                let mut l: Vec<Letter> = rand::seq::index::sample(rng, alphabet_size, list_size)
                    .into_iter()
                    .map(|a| a as Letter)
                    .collect();
                l.sort_unstable();
                l
            })
            .collect();
        ListAssignment { lists, list_size }
    }

    pub fn lists(&self) -> &[Vec<Letter>] {
        &self.lists
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn respects(&self, w: &Word) -> bool {
        w.len() <= self.lists.len()
            && w.letters()
                .iter()
                .zip(&self.lists)
                .all(|(a, l)| l.contains(a))
    }
}

/// Certificate weights with the Λ they are indexed by.
#[derive(Clone, Copy, Debug)]
pub struct Weighting<'a> {
    pub lambda: &'a LambdaSet,
    pub weights: &'a WeightVector,
}

impl<'a> Weighting<'a> {
    /// Pairs a certificate with Λ after checking they belong together.
    pub fn from_certificate(lambda: &'a LambdaSet, cert: &'a Certificate) -> Result<Self> {
        let actual = lambda.digest();
        if actual != cert.lambda_digest {
            return Err(Error::DigestMismatch {
                expected: digest::to_hex(actual),
                found: digest::to_hex(cert.lambda_digest),
            });
        }
        if cert.weights.len() != lambda.len() {
            return Err(Error::DimensionMismatch {
                expected: lambda.len(),
                found: cert.weights.len(),
            });
        }
        Ok(Weighting {
            lambda,
            weights: &cert.weights,
        })
    }

    fn weight(&self, s: LambdaState) -> &BigUint {
        self.weights.get(s)
    }
}

/// Word counts `|S_n|` and weighted totals `Ŝ_n = Σ_{w ∈ S_n} C_{Λ(w)}`
/// for `n = 0..=n_max`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelTotals {
    pub counts: Vec<u64>,
    pub weighted: Vec<BigUint>,
}

/// Enumerates the square-free words respecting `assignment` up to length
/// `n_max`, weighting each by the coefficient of its class.
pub fn weighted_totals(
    weighting: Weighting<'_>,
    assignment: &ListAssignment,
    n_max: usize,
) -> Result<LevelTotals> {
    if assignment.len() < n_max {
        return Err(Error::InvalidParameter(format!(
            "assignment has {} lists, need {n_max}",
            assignment.len()
        )));
    }
    let mut totals = LevelTotals {
        counts: vec![0; n_max + 1],
        weighted: vec![BigUint::zero(); n_max + 1],
    };
    let mut word = Vec::with_capacity(n_max);
    walk_assignment(
        weighting,
        assignment,
        n_max,
        &mut word,
        weighting.lambda.cursor(),
        &mut totals,
    );
    Ok(totals)
}

fn walk_assignment(
    weighting: Weighting<'_>,
    assignment: &ListAssignment,
    n_max: usize,
    word: &mut Vec<Letter>,
    cursor: Cursor,
    totals: &mut LevelTotals,
) {
    let depth = word.len();
    totals.counts[depth] += 1;
    totals.weighted[depth] += weighting.weight(cursor.state());
    if depth == n_max {
        return;
    }
    for &a in &assignment.lists()[depth] {
        word.push(a);
        if !ends_with_square(word) {
            let next = weighting
                .lambda
                .advance(&cursor, a)
                .expect("square-free extension has no short square");
            walk_assignment(weighting, assignment, n_max, word, next, totals);
        }
        word.pop();
    }
}

/// First `n` at which the weighted totals violate the growth inequalities,
/// or `None` if they hold throughout.
///
/// Two inequalities are checked for each `n`:
/// * `Ŝ_{n+1} >= α Ŝ_n - Σ_{i=p+1}^{⌊(n+1)/2⌋} Ŝ_{n+1-i}`, which every
///   valid certificate implies with no condition on β;
/// * `Ŝ_{n+1} >= β Ŝ_n` when a β is supplied.
pub fn first_growth_failure(
    weighted: &[BigUint],
    alpha: &Rational,
    p: usize,
    beta: Option<&Rational>,
) -> Option<usize> {
    let to_int = |v: &BigUint| BigInt::from(v.clone());
    (0..weighted.len().saturating_sub(1)).find(|&n| {
        let next = to_int(&weighted[n + 1]);
        let cur = to_int(&weighted[n]);
        let long: BigInt = (p + 1..=n.div_ceil(2))
            .map(|i| to_int(&weighted[n + 1 - i]))
            .sum();
        let recurrence_ok = alpha.denom() * (&next + long) >= alpha.numer() * &cur;
        let beta_ok = beta.is_none_or(|b| b.denom() * &next >= b.numer() * &cur);
        !(recurrence_ok && beta_ok)
    })
}

/// The β used by the growth checks: the largest grid value with
/// denominator 1000 satisfying the main condition, if any.
pub fn certificate_beta(cert: &Certificate) -> Result<Option<Rational>> {
    search_beta(&cert.alpha, cert.period, &ratio(1, 1000))
}

/// Checks the weighted growth inequalities of [`first_growth_failure`] for
/// one fixed assignment up to length `n_max`.
pub fn check_weighted_growth(
    lambda: &LambdaSet,
    cert: &Certificate,
    assignment: &ListAssignment,
    n_max: usize,
) -> Result<bool> {
    let weighting = Weighting::from_certificate(lambda, cert)?;
    let beta = certificate_beta(cert)?;
    let totals = weighted_totals(weighting, assignment, n_max)?;
    Ok(first_growth_failure(&totals.weighted, &cert.alpha, cert.period, beta.as_ref()).is_none())
}

/// Result of checking every assignment of a given length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepReport {
    pub assignments: u64,
    /// First assignment prefix (in lexicographic order of lists) that
    /// violates a growth inequality.
    pub failure: Option<Vec<Vec<Letter>>>,
    /// An assignment of full length minimizing the number of square-free
    /// words, and that number.
    pub worst: (Vec<Vec<Letter>>, u64),
}

/// All `list_size`-subsets of the alphabet in lexicographic order.
pub fn all_lists(alphabet_size: usize, list_size: usize) -> Vec<Vec<Letter>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<Letter>, out: &mut Vec<Vec<Letter>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..n {
            cur.push(a as Letter);
            rec(a + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, alphabet_size, list_size, &mut Vec::new(), &mut out);
    out
}

/// Runs the growth checks over every assignment of length `n_max` with
/// lists of `list_size` letters, sharing work between common prefixes.
pub fn sweep_assignments(
    lambda: &LambdaSet,
    cert: &Certificate,
    n_max: usize,
) -> Result<SweepReport> {
    let weighting = Weighting::from_certificate(lambda, cert)?;
    let beta = certificate_beta(cert)?;
    let lists = all_lists(cert.alphabet_size, cert.list_size);
    let budget = (lists.len() as u128).checked_pow(n_max as u32);
    if budget.is_none_or(|b| b > 1 << 24) {
        return Err(Error::ResourceGuard(format!(
            "{} lists over {n_max} positions is too many assignments",
            lists.len()
        )));
    }
    let mut sweep = Sweep {
        weighting,
        alpha: &cert.alpha,
        p: cert.period,
        beta: beta.as_ref(),
        lists: &lists,
        n_max,
        path: Vec::new(),
        weighted: vec![weighting.weight(LambdaState::ROOT).clone()],
        report: SweepReport {
            assignments: 0,
            failure: None,
            worst: (Vec::new(), u64::MAX),
        },
    };
    let root = vec![(Vec::new(), lambda.cursor())];
    sweep.descend(&root);
    Ok(sweep.report)
}

struct Sweep<'a> {
    weighting: Weighting<'a>,
    alpha: &'a Rational,
    p: usize,
    beta: Option<&'a Rational>,
    lists: &'a [Vec<Letter>],
    n_max: usize,
    path: Vec<usize>,
    weighted: Vec<BigUint>,
    report: SweepReport,
}

impl Sweep<'_> {
    fn descend(&mut self, level: &[(Vec<Letter>, Cursor)]) {
        if self.report.failure.is_some() {
            return;
        }
        let depth = self.path.len();
        if depth > 0 {
            let n = depth - 1;
            let window = &self.weighted[..=depth];
            if first_growth_failure(window, self.alpha, self.p, self.beta) == Some(n) {
                self.report.failure =
                    Some(self.path.iter().map(|&i| self.lists[i].clone()).collect());
                return;
            }
        }
        if depth == self.n_max {
            self.report.assignments += 1;
            let count = level.len() as u64;
            if count < self.report.worst.1 {
                self.report.worst = (
                    self.path.iter().map(|&i| self.lists[i].clone()).collect(),
                    count,
                );
            }
            return;
        }
        for (i, list) in self.lists.iter().enumerate() {
            let mut next = Vec::new();
            let mut total = BigUint::zero();
            for (word, cursor) in level {
                for &a in list {
                    let mut w = word.clone();
                    w.push(a);
                    if ends_with_square(&w) {
                        continue;
                    }
                    let c = self
                        .weighting
                        .lambda
                        .advance(cursor, a)
                        .expect("square-free extension has no short square");
                    total += self.weighting.weight(c.state());
                    next.push((w, c));
                }
            }
            self.path.push(i);
            self.weighted.push(total);
            self.descend(&next);
            self.weighted.pop();
            self.path.pop();
        }
    }
}

/// How the game judges legality of a move.
#[derive(Clone, Copy, Debug)]
pub enum GameMode<'a> {
    /// Full square-freeness; positions are keyed by the normalized word.
    Exact,
    /// Only squares of period at most `p` are forbidden; positions are
    /// keyed by `(remaining length, Λ-state)`.
    ShortSquare(&'a LambdaSet),
}

/// Value of the list game.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightedCount {
    /// Words reached under the adversary's choices, per Λ-state (empty
    /// when no Λ is available).
    pub by_state: BTreeMap<LambdaState, BigUint>,
    /// `Σ C_{Λ(w)}` over those words, or their number when unweighted.
    pub total_weight: BigUint,
    pub word_count: BigUint,
    /// Lists chosen by the adversary along one line of play, written in
    /// the normalized frame of the position.
    pub trace: Vec<Vec<Letter>>,
}

#[derive(Clone, Debug, Default)]
struct Value {
    weight: BigUint,
    count: BigUint,
    by_state: BTreeMap<LambdaState, BigUint>,
}

impl Value {
    fn add(&mut self, other: &Value) {
        self.weight += &other.weight;
        self.count += &other.count;
        for (s, c) in &other.by_state {
            *self.by_state.entry(*s).or_default() += c;
        }
    }
}

/// Position in the game: the concrete word (exact mode) or the Λ-state
/// (short-square mode), always in a normalized frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Position {
    Word(Vec<Letter>),
    State(LambdaState),
}

struct Game<'a> {
    n: usize,
    alphabet: usize,
    lists: Vec<Vec<Letter>>,
    mode: GameMode<'a>,
    weighting: Option<Weighting<'a>>,
    classifier: Option<&'a LambdaSet>,
    memo: HashMap<(usize, Position), Rc<Value>>,
}

impl<'a> Game<'a> {
    fn leaf(&self, pos: &Position) -> Value {
        let state = match pos {
            Position::State(s) => Some(*s),
            Position::Word(w) => self.classifier.map(|l| l.classify_unchecked(w)),
        };
        let weight = match (self.weighting, state) {
            (Some(wt), Some(s)) => wt.weight(s).clone(),
            _ => BigUint::one(),
        };
        Value {
            weight,
            count: BigUint::one(),
            by_state: state.map(|s| (s, BigUint::one())).into_iter().collect(),
        }
    }

    /// Child position for each letter, `None` when blocked.
    fn moves(&self, pos: &Position) -> Vec<Option<Position>> {
        (0..self.alphabet as Letter)
            .map(|a| match (pos, self.mode) {
                (Position::State(s), GameMode::ShortSquare(l)) => {
                    l.step(*s, a).map(Position::State)
                }
                (Position::Word(w), _) => {
                    let mut next = w.clone();
                    next.push(a);
                    (!ends_with_square(&next))
                        .then(|| Position::Word(first_occurrence_rename(&next)))
                }
                (Position::State(_), GameMode::Exact) => {
                    unreachable!("state positions are short-square only")
                }
            })
            .collect()
    }

    fn value(&mut self, remaining: usize, pos: Position) -> Rc<Value> {
        if remaining == 0 {
            return Rc::new(self.leaf(&pos));
        }
        let key = (remaining, pos);
        if let Some(v) = self.memo.get(&key) {
            return Rc::clone(v);
        }
        let (remaining, pos) = key;
        let children: Vec<Option<Rc<Value>>> = self
            .moves(&pos)
            .into_iter()
            .map(|m| m.map(|p| self.value(remaining - 1, p)))
            .collect();
        let (_, list) = self.best_list(&children);
        let mut total = Value::default();
        for &a in &self.lists[list] {
            if let Some(child) = &children[a as usize] {
                total.add(child);
            }
        }
        let total = Rc::new(total);
        self.memo.insert((remaining, pos), Rc::clone(&total));
        total
    }

    /// Lexicographically least list minimizing the weight.
    fn best_list(&self, children: &[Option<Rc<Value>>]) -> (BigUint, usize) {
        let zero = BigUint::zero();
        self.lists
            .iter()
            .enumerate()
            .map(|(i, list)| {
                let w: BigUint = list
                    .iter()
                    .map(|&a| children[a as usize].as_ref().map_or(&zero, |c| &c.weight))
                    .sum();
                (w, i)
            })
            .min()
            .expect("at least one list")
    }

    fn trace(&mut self) -> Vec<Vec<Letter>> {
        let mut pos = self.start();
        let mut out = Vec::new();
        for remaining in (1..=self.n).rev() {
            let moves = self.moves(&pos);
            let children: Vec<Option<Rc<Value>>> = moves
                .iter()
                .map(|m| m.clone().map(|p| self.value(remaining - 1, p)))
                .collect();
            let (_, list) = self.best_list(&children);
            out.push(self.lists[list].clone());
            let reply = self.lists[list].iter().find(|&&a| {
                children[a as usize]
                    .as_ref()
                    .is_some_and(|c| !c.count.is_zero())
            });
            match reply {
                Some(&a) => pos = moves[a as usize].clone().expect("legal move"),
                None => break,
            }
        }
        out
    }

    fn start(&self) -> Position {
        match self.mode {
            GameMode::Exact => Position::Word(Vec::new()),
            GameMode::ShortSquare(l) => Position::State(l.root()),
        }
    }
}

/// Minimax value of the game where, for each of `n` positions, an
/// adversary announces a list of `list_size` letters and the player picks a
/// letter from it. The adversary minimizes the number (or the total
/// weight, when `weighting` is given) of words reachable at length `n`.
pub fn adversary_min_count(
    n: usize,
    alphabet_size: usize,
    list_size: usize,
    mode: GameMode<'_>,
    weighting: Option<Weighting<'_>>,
) -> Result<WeightedCount> {
    if !(1..=alphabet_size).contains(&list_size) {
        return Err(Error::InvalidParameter(format!(
            "list size must be in 1..={alphabet_size}"
        )));
    }
    let classifier = match mode {
        GameMode::ShortSquare(l) => Some(l),
        GameMode::Exact => weighting.map(|w| w.lambda),
    };
    for l in classifier.into_iter().chain(weighting.map(|w| w.lambda)) {
        if l.alphabet_size() != alphabet_size {
            return Err(Error::InvalidParameter(
                "lambda set has a different alphabet".into(),
            ));
        }
    }
    if let (GameMode::ShortSquare(l), Some(w)) = (mode, weighting) {
        if l.digest() != w.lambda.digest() {
            return Err(Error::InvalidParameter(
                "weights and game use different lambda sets".into(),
            ));
        }
    }
    match mode {
        GameMode::Exact => {
            count_guard(n, alphabet_size)?;
            if n > EXACT_GAME_MAX_LEN {
                return Err(Error::ResourceGuard(format!(
                    "exact game is limited to n <= {EXACT_GAME_MAX_LEN}"
                )));
            }
        }
        GameMode::ShortSquare(_) if n > SHORT_GAME_MAX_LEN => {
            return Err(Error::ResourceGuard(format!(
                "short-square game is limited to n <= {SHORT_GAME_MAX_LEN}"
            )));
        }
        GameMode::ShortSquare(_) => {}
    }
    let mut game = Game {
        n,
        alphabet: alphabet_size,
        lists: all_lists(alphabet_size, list_size),
        mode,
        weighting,
        classifier,
        memo: HashMap::new(),
    };
    let root = game.value(n, game.start());
    let trace = game.trace();
    let value = Rc::unwrap_or_clone(root);
    Ok(WeightedCount {
        by_state: value.by_state,
        total_weight: value.weight,
        word_count: value.count,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::lambda::build_lambda;
    use crate::weights::{run_fixed_point, FixedPointConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(set: &BTreeSet<Word>) -> Vec<String> {
        let mut v: Vec<String> = set.iter().map(Word::to_string).collect();
        v.sort_by_key(|s| (s.len(), s.clone()));
        v
    }

    #[test]
    fn brute_lambda_examples() {
        assert_eq!(words(&brute_lambda(1, 4).unwrap()), ["", "0"]);
        assert_eq!(words(&brute_lambda(2, 4).unwrap()), ["", "0", "01", "010"]);
        assert_eq!(
            words(&brute_lambda(3, 4).unwrap()),
            ["", "0", "01", "010", "012", "0120", "01201"]
        );
        assert!(matches!(brute_lambda(7, 4), Err(Error::ResourceGuard(_))));
    }

    #[test]
    fn brute_lambda_matches_trie_construction() {
        for a in [3, 4, 5] {
            for p in 1..=5 {
                let trie: BTreeSet<Word> = build_lambda(p, a).unwrap().words().collect();
                assert_eq!(trie, brute_lambda(p, a).unwrap(), "p={p} a={a}");
            }
        }
    }

    #[test]
    fn square_free_counts() {
        let ternary: Vec<u64> = (0..=10).map(|n| count_squarefree(n, 3).unwrap()).collect();
        assert_eq!(ternary, [1, 3, 6, 12, 18, 30, 42, 60, 78, 108, 144]);
        let binary: Vec<u64> = (1..=5).map(|n| count_squarefree(n, 2).unwrap()).collect();
        assert_eq!(binary, [2, 2, 2, 0, 0]);
        assert_eq!(count_squarefree(2, 4).unwrap(), 12);
        assert!(matches!(
            count_squarefree(40, 4),
            Err(Error::ResourceGuard(_))
        ));
    }

    #[test]
    fn quaternary_counts_grow_by_at_most_three() {
        let counts: Vec<u64> = (1..=9).map(|n| count_squarefree(n, 4).unwrap()).collect();
        assert_eq!(&counts[..3], &[4, 12, 36]);
        for pair in counts.windows(2) {
            assert!(pair[1] <= 3 * pair[0]);
            assert!(2 * pair[1] > 5 * pair[0]);
        }
    }

    #[test]
    fn assignments_validate() {
        assert!(ListAssignment::new(vec![vec![0, 1, 2], vec![3, 1, 0]], 4).is_ok());
        assert!(ListAssignment::new(vec![vec![0, 1, 1]], 4).is_err());
        assert!(ListAssignment::new(vec![vec![0, 1, 2], vec![0, 1]], 4).is_err());
        assert!(ListAssignment::new(vec![vec![0, 1, 4]], 4).is_err());
        let a = ListAssignment::new(vec![vec![2, 1, 0], vec![3, 1, 0]], 4).unwrap();
        assert_eq!(a.lists()[0], [0, 1, 2]);
        assert!(a.respects(&"23".parse().unwrap()));
        assert!(!a.respects(&"32".parse().unwrap()));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = ListAssignment::random(&mut rng, 10, 4, 3);
        assert_eq!(r.len(), 10);
        assert!(r
            .lists()
            .iter()
            .all(|l| l.len() == 3 && l.windows(2).all(|w| w[0] < w[1])));
    }

    fn certificate(p: usize) -> (LambdaSet, Certificate) {
        let set = build_lambda(p, 4).unwrap();
        let cert = run_fixed_point(&build_graph(&set), &FixedPointConfig::new(3)).unwrap();
        (set, cert)
    }

    #[test]
    fn constant_assignment_is_ternary_counting() {
        let (set, cert) = certificate(3);
        let w = Weighting::from_certificate(&set, &cert).unwrap();
        let a = ListAssignment::constant(&[0, 1, 2], 10, 4).unwrap();
        let totals = weighted_totals(w, &a, 10).unwrap();
        let ternary: Vec<u64> = (0..=10).map(|n| count_squarefree(n, 3).unwrap()).collect();
        assert_eq!(totals.counts, ternary);
        // weighted totals regrouped by class agree with a direct sum
        let mut direct = vec![BigUint::zero(); 11];
        let mut stack = vec![Vec::<Letter>::new()];
        while let Some(word) = stack.pop() {
            let s = set.classify(&Word::from(word.as_slice())).unwrap();
            direct[word.len()] += cert.weights.get(s);
            if word.len() < 10 {
                for c in 0..3 {
                    let mut next = word.clone();
                    next.push(c);
                    if !has_square(&next) {
                        stack.push(next);
                    }
                }
            }
        }
        assert_eq!(totals.weighted, direct);
    }

    #[test]
    fn growth_checks_on_small_certificates() {
        let (set, cert) = certificate(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = ListAssignment::random(&mut rng, 12, 4, 3);
            assert!(check_weighted_growth(&set, &cert, &a, 12).unwrap());
        }
        let one = ListAssignment::random(&mut rng, 1, 4, 3);
        assert!(check_weighted_growth(&set, &cert, &one, 1).unwrap());
    }

    #[test]
    fn growth_check_detects_inflated_alpha() {
        let (set, mut cert) = certificate(3);
        cert.alpha = ratio(3, 1);
        let a = ListAssignment::constant(&[0, 1, 2], 8, 4).unwrap();
        assert!(!check_weighted_growth(&set, &cert, &a, 8).unwrap());
    }

    #[test]
    fn first_failure_reports_index() {
        let w: Vec<BigUint> = [10u32, 20, 25, 10]
            .iter()
            .map(|&v| BigUint::from(v))
            .collect();
        assert_eq!(first_growth_failure(&w, &ratio(2, 1), 5, None), Some(1));
        assert_eq!(first_growth_failure(&w[..2], &ratio(2, 1), 5, None), None);
        assert_eq!(
            first_growth_failure(&w[..2], &ratio(1, 1), 5, Some(&ratio(3, 1))),
            Some(0)
        );
        // the long-square correction kicks in once 2(p+1) <= n+1
        let flat: Vec<BigUint> = vec![BigUint::from(1u32); 6];
        assert_eq!(first_growth_failure(&flat, &ratio(2, 1), 1, None), Some(0));
        assert_eq!(
            first_growth_failure(&flat[2..], &ratio(1, 1), 1, None),
            None
        );
    }

    #[test]
    fn sweep_small() {
        let (set, cert) = certificate(3);
        let report = sweep_assignments(&set, &cert, 5).unwrap();
        assert_eq!(report.assignments, 4u64.pow(5));
        assert_eq!(report.failure, None);
        // brute force over all assignments for the minimum count
        let lists = all_lists(4, 3);
        let mut worst = u64::MAX;
        for code in 0..4usize.pow(5) {
            let chosen: Vec<Vec<Letter>> = (0..5)
                .map(|i| lists[(code >> (2 * i)) & 3].clone())
                .collect();
            let a = ListAssignment::new(chosen, 4).unwrap();
            let w = Weighting::from_certificate(&set, &cert).unwrap();
            worst = worst.min(weighted_totals(w, &a, 5).unwrap().counts[5]);
        }
        assert_eq!(report.worst.1, worst);
    }

    #[test]
    fn game_small_values() {
        for (n, want) in [(1usize, 3u32), (2, 6)] {
            let v = adversary_min_count(n, 4, 3, GameMode::Exact, None).unwrap();
            assert_eq!(v.word_count, BigUint::from(want));
            assert_eq!(v.total_weight, BigUint::from(want));
            assert!(v.by_state.is_empty());
            assert_eq!(v.trace.len(), n);
        }
        let v = adversary_min_count(0, 4, 3, GameMode::Exact, None).unwrap();
        assert_eq!(v.word_count, BigUint::one());
    }

    #[test]
    fn powerless_adversary_counts_square_free_words() {
        for n in 0..=7 {
            let v = adversary_min_count(n, 4, 4, GameMode::Exact, None).unwrap();
            assert_eq!(v.word_count, BigUint::from(count_squarefree(n, 4).unwrap()));
        }
    }

    #[test]
    fn smaller_lists_never_help_the_player() {
        for n in 1..=7 {
            let values: Vec<BigUint> = (1..=4)
                .map(|k| {
                    adversary_min_count(n, 4, k, GameMode::Exact, None)
                        .unwrap()
                        .word_count
                })
                .collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]), "n={n}: {values:?}");
        }
    }

    #[test]
    fn short_square_game_agrees_with_exact_for_short_words() {
        // no square of period > p fits in 2p + 1 letters
        for p in 1..=4 {
            let set = build_lambda(p, 4).unwrap();
            for n in 0..=2 * p + 1 {
                let exact = adversary_min_count(n, 4, 3, GameMode::Exact, None).unwrap();
                let short =
                    adversary_min_count(n, 4, 3, GameMode::ShortSquare(&set), None).unwrap();
                assert_eq!(exact.word_count, short.word_count, "p={p} n={n}");
            }
        }
    }

    #[test]
    fn weighted_short_game_grows_by_alpha() {
        let (set, cert) = certificate(4);
        let w = Weighting::from_certificate(&set, &cert).unwrap();
        let root = cert.root_weight().clone();
        for n in 0..=12u32 {
            let v = adversary_min_count(n as usize, 4, 3, GameMode::ShortSquare(&set), Some(w))
                .unwrap();
            // total ≥ α^n · C_ε, compared exactly
            let bound =
                cert.alpha.pow(n as i32) * Rational::from_integer(BigInt::from(root.clone()));
            assert!(Rational::from_integer(BigInt::from(v.total_weight.clone())) >= bound);
            let regrouped: BigUint = v
                .by_state
                .iter()
                .map(|(s, c)| c * cert.weights.get(*s))
                .sum();
            assert_eq!(regrouped, v.total_weight);
            assert_eq!(v.by_state.values().sum::<BigUint>(), v.word_count);
        }
    }

    #[test]
    fn exact_weighted_game_uses_certificate_classes() {
        let (set, cert) = certificate(3);
        let w = Weighting::from_certificate(&set, &cert).unwrap();
        let v = adversary_min_count(6, 4, 3, GameMode::Exact, Some(w)).unwrap();
        let regrouped: BigUint = v
            .by_state
            .iter()
            .map(|(s, c)| c * cert.weights.get(*s))
            .sum();
        assert_eq!(regrouped, v.total_weight);
    }

    #[test]
    fn weighting_rejects_foreign_certificate() {
        let (set3, _) = certificate(3);
        let (_, cert4) = certificate(4);
        assert!(matches!(
            Weighting::from_certificate(&set3, &cert4),
            Err(Error::DigestMismatch { .. })
        ));
    }
}
