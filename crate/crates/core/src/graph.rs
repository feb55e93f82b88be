//! Letter-transition multigraph over Λ.

use std::fmt::Write as _;
use std::ops::AddAssign;

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lambda::{parse_fields, LambdaSet, LambdaState};
use crate::words::Letter;

pub const BLOCKED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub target: u32,
    pub multiplicity: u32,
}

/// Vertex `v` reads letter `a` into `letter_map[v * alphabet + a]`, which is
/// either a target id or [`BLOCKED`]. Arcs aggregate letters with equal
/// targets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionGraph {
    period: usize,
    alphabet: usize,
    letter_map: Vec<u32>,
    arc_offsets: Vec<usize>,
    arcs: Vec<Arc>,
    lambda_digest: u64,
}

pub fn build_graph(lambda: &LambdaSet) -> TransitionGraph {
    let alphabet = lambda.alphabet_size();
    let mut letter_map = vec![BLOCKED; lambda.len() * alphabet];
    letter_map
        .par_chunks_mut(alphabet)
        .enumerate()
        .for_each(|(v, row)| {
            let mut buf = lambda.word_letters(LambdaState(v as u32));
            buf.push(0);
            for (a, slot) in row.iter_mut().enumerate() {
                *buf.last_mut().unwrap() = a as Letter;
                if let Some(t) = lambda.step_from(&buf) {
                    *slot = t.0;
                }
            }
        });
    TransitionGraph::from_letter_map(lambda.period(), alphabet, letter_map, lambda.digest())
}

impl TransitionGraph {
    fn from_letter_map(period: usize, alphabet: usize, letter_map: Vec<u32>, digest: u64) -> Self {
        let mut arc_offsets = Vec::with_capacity(letter_map.len() / alphabet + 1);
        let mut arcs = Vec::new();
        let mut targets = Vec::with_capacity(alphabet);
        arc_offsets.push(0);
        for row in letter_map.chunks(alphabet) {
            targets.clear();
            targets.extend(row.iter().copied().filter(|&t| t != BLOCKED));
            targets.sort_unstable();
            for chunk in targets.chunk_by(|a, b| a == b) {
                arcs.push(Arc {
                    target: chunk[0],
                    multiplicity: chunk.len() as u32,
                });
            }
            arc_offsets.push(arcs.len());
        }
        TransitionGraph {
            period,
            alphabet,
            letter_map,
            arc_offsets,
            arcs,
            lambda_digest: digest,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.arc_offsets.len() - 1
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Digest of the Λ text this graph was built from.
    pub fn lambda_digest(&self) -> u64 {
        self.lambda_digest
    }

    pub fn target(&self, v: LambdaState, a: Letter) -> Option<LambdaState> {
        match self.letter_map[v.index() * self.alphabet + a as usize] {
            BLOCKED => None,
            t => Some(LambdaState(t)),
        }
    }

    pub fn letter_row(&self, v: LambdaState) -> &[u32] {
        &self.letter_map[v.index() * self.alphabet..][..self.alphabet]
    }

    pub fn arcs(&self, v: LambdaState) -> &[Arc] {
        &self.arcs[self.arc_offsets[v.index()]..self.arc_offsets[v.index() + 1]]
    }

    pub fn open_letters(&self, v: LambdaState) -> usize {
        self.letter_row(v).iter().filter(|&&t| t != BLOCKED).count()
    }

    /// Minimum over lists `l` of `list_size` letters of the summed weight of
    /// the non-blocked targets reached through `l`.
    ///
    /// Blocked letters contribute zero, so the adversary's best list drops
    /// the `alphabet - list_size` largest per-letter contributions.
    pub fn min_list_sum<W>(&self, v: LambdaState, weights: &[W], list_size: usize) -> W
    where
        W: Clone + Ord + Zero + for<'a> AddAssign<&'a W>,
    {
        let zero = W::zero();
        let mut contributions: Vec<&W> = self
            .letter_row(v)
            .iter()
            .map(|&t| {
                if t == BLOCKED {
                    &zero
                } else {
                    &weights[t as usize]
                }
            })
            .collect();
        min_list_sum_of(&mut contributions, list_size)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("graph v1\n");
        let _ = writeln!(
            out,
            "vertices={} alphabet={}",
            self.vertex_count(),
            self.alphabet
        );
        for (v, row) in self.letter_map.chunks(self.alphabet).enumerate() {
            let _ = write!(out, "{v}:");
            for &t in row {
                if t == BLOCKED {
                    out.push_str(" x");
                } else {
                    let _ = write!(out, " {t}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form of a graph built from `source`.
    pub fn from_text(text: &str, source: &LambdaSet) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        if lines.next().map(|(_, l)| l) != Some("graph v1") {
            return Err(Error::parse(1, "expected header \"graph v1\""));
        }
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(2, "missing parameter line"))?;
        let fields = parse_fields(line_no, header, &["vertices", "alphabet"])?;
        let (n, alphabet) = (fields[0], fields[1]);
        if n != source.len() {
            return Err(Error::DimensionMismatch {
                expected: source.len(),
                found: n,
            });
        }
        if alphabet != source.alphabet_size() {
            return Err(Error::parse(line_no, "alphabet differs from lambda set"));
        }
        let mut letter_map = Vec::with_capacity(n * alphabet);
        let mut rows = 0;
        for (line_no, line) in lines {
            let (id, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, "expected \"<id>: ...\""))?;
            if id.trim().parse::<usize>().ok() != Some(rows) {
                return Err(Error::parse(line_no, format!("expected vertex id {rows}")));
            }
            let before = letter_map.len();
            for tok in rest.split_whitespace() {
                let t = match tok {
                    "x" => BLOCKED,
                    _ => match tok.parse::<u32>() {
                        Ok(t) if (t as usize) < n => t,
                        _ => return Err(Error::parse(line_no, format!("bad target {tok:?}"))),
                    },
                };
                letter_map.push(t);
            }
            if letter_map.len() - before != alphabet {
                return Err(Error::parse(
                    line_no,
                    format!("expected {alphabet} targets"),
                ));
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows,
            });
        }
        Ok(Self::from_letter_map(
            source.period(),
            alphabet,
            letter_map,
            source.digest(),
        ))
    }
}

/// Sum of the `list_size` smallest contributions.
pub fn min_list_sum_of<W>(contributions: &mut [&W], list_size: usize) -> W
where
    W: Clone + Ord + Zero + for<'a> AddAssign<&'a W>,
{
    contributions.sort_unstable();
    let mut sum = W::zero();
    for c in contributions.iter().take(list_size) {
        sum += *c;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::build_lambda;
    use crate::words::Word;
    use num_bigint::BigUint;

    fn id(set: &LambdaSet, s: &str) -> LambdaState {
        set.id_of(&s.parse::<Word>().unwrap()).unwrap()
    }

    #[test]
    fn arcs_on_the_period_two_instance() {
        let set = build_lambda(2, 4).unwrap();
        let g = build_graph(&set);
        let (eps, zero, zo, zoz) = (set.root(), id(&set, "0"), id(&set, "01"), id(&set, "010"));
        assert_eq!(
            g.arcs(eps),
            [Arc {
                target: zero.0,
                multiplicity: 4
            }]
        );
        assert_eq!(
            g.arcs(zero),
            [Arc {
                target: zo.0,
                multiplicity: 3
            }]
        );
        // "010": 0 and 1 close squares, 2 and 3 fall back to "01"
        assert_eq!(g.target(zoz, 0), None);
        assert_eq!(g.target(zoz, 1), None);
        assert_eq!(g.target(zoz, 2), Some(zo));
        assert_eq!(g.target(zoz, 3), Some(zo));
        assert_eq!(g.target(zo, 0), Some(zoz));
        assert_eq!(g.target(zo, 1), None);
    }

    #[test]
    fn multiplicities_count_open_letters() {
        for p in 1..=6 {
            let set = build_lambda(p, 4).unwrap();
            let g = build_graph(&set);
            for v in set.states() {
                let total: u32 = g.arcs(v).iter().map(|a| a.multiplicity).sum();
                assert_eq!(total as usize, g.open_letters(v));
                for a in 0..4 {
                    assert_eq!(g.target(v, a), set.step(v, a));
                }
            }
        }
    }

    #[test]
    fn min_list_sum_examples() {
        let set = build_lambda(2, 4).unwrap();
        let g = build_graph(&set);
        let unit = vec![1u64; set.len()];
        assert_eq!(g.min_list_sum(set.root(), &unit, 3), 3);
        let w = vec![BigUint::from(7u32); set.len()];
        assert_eq!(g.min_list_sum(set.root(), &w, 3), BigUint::from(21u32));

        let (five, three, two, zero) = (5u64, 3u64, 2u64, 0u64);
        assert_eq!(min_list_sum_of(&mut [&five, &three, &two, &zero], 3), 5);
        assert_eq!(min_list_sum_of(&mut [&five, &three, &two, &zero], 2), 2);
        assert_eq!(min_list_sum_of(&mut [&five, &three, &two, &zero], 4), 10);
    }

    #[test]
    fn min_over_lists_matches_enumeration() {
        let set = build_lambda(5, 4).unwrap();
        let g = build_graph(&set);
        let weights: Vec<u64> = (0..set.len() as u64).map(|i| (i * 7919) % 101).collect();
        for list_size in 1..=4 {
            for v in set.states() {
                let brute = (0u32..16)
                    .filter(|m| m.count_ones() as usize == list_size)
                    .map(|m| {
                        (0..4u8)
                            .filter(|a| m >> a & 1 == 1)
                            .filter_map(|a| g.target(v, a))
                            .map(|t| weights[t.index()])
                            .sum::<u64>()
                    })
                    .min()
                    .unwrap();
                assert_eq!(g.min_list_sum(v, &weights, list_size), brute);
            }
        }
    }

    #[test]
    fn text_round_trip_and_determinism() {
        let set = build_lambda(4, 4).unwrap();
        let g = build_graph(&set);
        let again = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| build_graph(&set));
        assert_eq!(g, again);
        let parsed = TransitionGraph::from_text(&g.to_text(), &set).unwrap();
        assert_eq!(parsed, g);
        let small = build_lambda(2, 4).unwrap();
        assert_eq!(
            build_graph(&small).to_text(),
            "graph v1\nvertices=4 alphabet=4\n0: 1 1 1 1\n1: x 2 2 2\n2: 3 x 2 2\n3: x x 2 2\n"
        );
        assert!(TransitionGraph::from_text(&g.to_text(), &small).is_err());
    }
}
