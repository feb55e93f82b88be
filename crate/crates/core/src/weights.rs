//! Coefficient iteration, the growth constant α and exact certificate
//! checking.
//!
//! A certificate is a weight `C_v >= 0` for every vertex of the transition
//! graph together with a rational `α` such that `C_ε > 0` and, for every
//! vertex `v`,
//!
//! ```text
//! α · C_v <= min over lists l of Σ_{a ∈ l, a not blocked} C_{target(v, a)}
//! ```
//!
//! Everything here is integer arithmetic; the iteration is only a way to
//! find good weights, while [`verify_certificate`] decides soundness on its
//! own.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::digest;
use crate::error::{Error, Result};
use crate::graph::TransitionGraph;
use crate::lambda::{parse_fields, LambdaState};
use crate::rational::{self, Rational};

pub const DEFAULT_ITERATIONS: usize = 50;
pub const DEFAULT_NORM_TARGET: u64 = 100_000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightVector(Vec<BigUint>);

impl WeightVector {
    pub fn new(values: Vec<BigUint>) -> Self {
        WeightVector(values)
    }

    pub fn uniform(len: usize, value: u64) -> Self {
        WeightVector(vec![BigUint::from(value); len])
    }

    pub fn values(&self) -> &[BigUint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, s: LambdaState) -> &BigUint {
        &self.0[s.index()]
    }

    pub fn max(&self) -> Option<&BigUint> {
        self.0.iter().max()
    }

    pub fn to_text(&self, lambda_digest: u64) -> String {
        let mut out = String::from("weights v1\n");
        let _ = writeln!(
            out,
            "count={} lambda_digest={}",
            self.len(),
            digest::to_hex(lambda_digest)
        );
        push_values(&mut out, &self.0);
        out
    }

    /// Parses a weights file, returning the vector and its Λ digest.
    pub fn from_text(text: &str) -> Result<(Self, u64)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        if lines.next().map(|(_, l)| l) != Some("weights v1") {
            return Err(Error::parse(1, "expected header \"weights v1\""));
        }
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(2, "missing parameter line"))?;
        let (count, digest_part) = header
            .split_once(' ')
            .ok_or_else(|| Error::parse(line_no, "expected count=<int> lambda_digest=<hex>"))?;
        let count = parse_fields(line_no, count, &["count"])?[0];
        let digest = digest_part
            .strip_prefix("lambda_digest=")
            .and_then(digest::from_hex)
            .ok_or_else(|| Error::parse(line_no, "bad lambda_digest"))?;
        let values = parse_values(lines, count)?;
        Ok((WeightVector(values), digest))
    }
}

fn push_values(out: &mut String, values: &[BigUint]) {
    for v in values {
        let _ = writeln!(out, "{v}");
    }
}

fn parse_values<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    count: usize,
) -> Result<Vec<BigUint>> {
    let values = lines
        .map(|(line_no, line)| {
            line.trim()
                .parse::<BigUint>()
                .map_err(|_| Error::parse(line_no, format!("bad weight {line:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != count {
        return Err(Error::DimensionMismatch {
            expected: count,
            found: values.len(),
        });
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub period: usize,
    pub alphabet_size: usize,
    pub list_size: usize,
    pub weights: WeightVector,
    pub alpha: Rational,
    pub lambda_digest: u64,
}

/// Where the weights of a certificate file live.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightsLocation {
    Inline,
    File(String),
}

impl Certificate {
    pub fn root_weight(&self) -> &BigUint {
        self.weights.get(LambdaState::ROOT)
    }

    /// Certificate text with the weights inline.
    pub fn to_text(&self) -> String {
        let mut out = self.header(&WeightsLocation::Inline);
        push_values(&mut out, self.weights.values());
        out
    }

    /// Certificate text referring to a separate weights file.
    pub fn to_text_with_weights_file(&self, path: &str) -> String {
        self.header(&WeightsLocation::File(path.to_owned()))
    }

    fn header(&self, location: &WeightsLocation) -> String {
        let mut out = String::from("certificate v1\n");
        let _ = writeln!(
            out,
            "p={} alphabet={} list_size={}",
            self.period, self.alphabet_size, self.list_size
        );
        let _ = writeln!(out, "alpha={}", rational::exact(&self.alpha));
        let _ = writeln!(out, "lambda_digest={}", digest::to_hex(self.lambda_digest));
        match location {
            WeightsLocation::Inline => out.push_str("weights=inline\n"),
            WeightsLocation::File(path) => {
                let _ = writeln!(out, "weights={path}");
            }
        }
        out
    }

    /// Parses a certificate. A `weights=<path>` reference is resolved
    /// against `base_dir` and its digest must match the certificate's.
    pub fn from_text(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing {what}")))
        };
        let (_, head) = next("header")?;
        if head != "certificate v1" {
            return Err(Error::parse(1, "expected header \"certificate v1\""));
        }
        let (line_no, params) = next("parameter line")?;
        let fields = parse_fields(line_no, params, &["p", "alphabet", "list_size"])?;
        let (line_no, alpha_line) = next("alpha line")?;
        let alpha = alpha_line
            .strip_prefix("alpha=")
            .ok_or_else(|| Error::parse(line_no, "expected alpha=<num>/<den>"))
            .and_then(|s| rational::parse(s).map_err(|_| Error::parse(line_no, "bad alpha")))?;
        let (line_no, digest_line) = next("lambda_digest line")?;
        let lambda_digest = digest_line
            .strip_prefix("lambda_digest=")
            .and_then(digest::from_hex)
            .ok_or_else(|| Error::parse(line_no, "expected lambda_digest=<16 hex>"))?;
        let (line_no, weights_line) = next("weights line")?;
        let location = match weights_line.strip_prefix("weights=") {
            Some("inline") => WeightsLocation::Inline,
            Some(path) if !path.is_empty() => WeightsLocation::File(path.to_owned()),
            _ => return Err(Error::parse(line_no, "expected weights=<path|inline>")),
        };
        let weights = match location {
            WeightsLocation::Inline => {
                let values = lines
                    .map(|(line_no, line)| {
                        line.trim()
                            .parse::<BigUint>()
                            .map_err(|_| Error::parse(line_no, format!("bad weight {line:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                WeightVector(values)
            }
            WeightsLocation::File(path) => {
                let path = match base_dir {
                    Some(dir) => dir.join(path),
                    None => path.into(),
                };
                let (w, file_digest) = WeightVector::from_text(&std::fs::read_to_string(path)?)?;
                if file_digest != lambda_digest {
                    return Err(Error::DigestMismatch {
                        expected: digest::to_hex(lambda_digest),
                        found: digest::to_hex(file_digest),
                    });
                }
                w
            }
        };
        Ok(Certificate {
            period: fields[0],
            alphabet_size: fields[1],
            list_size: fields[2],
            weights,
            alpha,
            lambda_digest,
        })
    }
}

fn check_list_size(g: &TransitionGraph, list_size: usize) -> Result<()> {
    if list_size == 0 || list_size > g.alphabet_size() {
        return Err(Error::InvalidParameter(format!(
            "list size must be in 1..={}, got {list_size}",
            g.alphabet_size()
        )));
    }
    Ok(())
}

fn check_dimension(g: &TransitionGraph, c: &WeightVector) -> Result<()> {
    if c.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            found: c.len(),
        });
    }
    Ok(())
}

/// One simultaneous update `c'(v) = min_list_sum(v, c)`. Reads `c` only and
/// writes a fresh vector.
pub fn iterate(g: &TransitionGraph, c: &WeightVector, list_size: usize) -> Result<WeightVector> {
    check_dimension(g, c)?;
    check_list_size(g, list_size)?;
    let next = (0..g.vertex_count() as u32)
        .into_par_iter()
        .map(|v| g.min_list_sum(LambdaState(v), c.values(), list_size))
        .collect();
    Ok(WeightVector(next))
}

/// Scales to average `target_avg`, rounding down:
/// `c(v) · target_avg · n / Σc`.
pub fn renormalize(c: &WeightVector, target_avg: u64) -> Result<WeightVector> {
    if target_avg == 0 {
        return Err(Error::InvalidParameter(
            "normalization target must be positive".into(),
        ));
    }
    let total: BigUint = c.values().iter().sum();
    if total.is_zero() {
        return Err(Error::ZeroVector);
    }
    let factor = BigUint::from(target_avg) * BigUint::from(c.len());
    let scaled = c
        .values()
        .par_iter()
        .map(|v| v * &factor / &total)
        .collect();
    Ok(WeightVector(scaled))
}

/// Smallest growth `min_list_sum(v) / c(v)` over vertices with positive
/// weight. Zero-weight vertices satisfy the certificate inequality for any
/// α and are skipped.
pub fn compute_alpha(g: &TransitionGraph, c: &WeightVector, list_size: usize) -> Result<Rational> {
    check_dimension(g, c)?;
    check_list_size(g, list_size)?;
    // Compare fractions by cross-multiplication; reduce once at the end.
    let best = (0..g.vertex_count() as u32)
        .into_par_iter()
        .filter(|&v| !c.values()[v as usize].is_zero())
        .map(|v| {
            let s = LambdaState(v);
            (
                g.min_list_sum(s, c.values(), list_size),
                c.get(s).clone(),
                v,
            )
        })
        .reduce_with(|a, b| {
            let (lhs, rhs) = (&a.0 * &b.1, &b.0 * &a.1);
            if lhs < rhs || (lhs == rhs && a.2 < b.2) {
                a
            } else {
                b
            }
        });
    match best {
        Some((num, den, _)) => Ok(rational::from_uints(&num, &den)),
        None => Err(Error::ZeroVector),
    }
}

/// Why a certificate does not hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// `C_ε = 0`.
    ZeroRoot,
    /// `α · C_v > min_list_sum(v)` at this vertex.
    Inequality { vertex: u32 },
}

/// Exact check of a certificate against a graph, reporting the first
/// violation. Structural mismatches are errors rather than violations.
pub fn find_violation(g: &TransitionGraph, cert: &Certificate) -> Result<Option<Violation>> {
    if cert.lambda_digest != g.lambda_digest() {
        return Err(Error::DigestMismatch {
            expected: digest::to_hex(g.lambda_digest()),
            found: digest::to_hex(cert.lambda_digest),
        });
    }
    check_dimension(g, &cert.weights)?;
    if cert.period != g.period() || cert.alphabet_size != g.alphabet_size() {
        return Err(Error::InvalidParameter(format!(
            "certificate is for p={} alphabet={}, graph is p={} alphabet={}",
            cert.period,
            cert.alphabet_size,
            g.period(),
            g.alphabet_size()
        )));
    }
    check_list_size(g, cert.list_size)?;
    if cert.root_weight().is_zero() {
        return Ok(Some(Violation::ZeroRoot));
    }
    let (num, den) = (cert.alpha.numer(), cert.alpha.denom());
    debug_assert!(den.is_positive());
    let w = cert.weights.values();
    let bad = (0..g.vertex_count() as u32)
        .into_par_iter()
        .find_first(|&v| {
            let bound = g.min_list_sum(LambdaState(v), w, cert.list_size);
            num * BigInt::from(w[v as usize].clone()) > den * BigInt::from(bound)
        });
    Ok(bad.map(|vertex| Violation::Inequality { vertex }))
}

pub fn verify_certificate(g: &TransitionGraph, cert: &Certificate) -> Result<bool> {
    find_violation(g, cert).map(|v| v.is_none())
}

/// Starting vector of the iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StartVector {
    /// Every coefficient equal to the normalization target.
    #[default]
    Uniform,
    /// Coefficients drawn uniformly from `1..=2·target` by a seeded ChaCha8
    /// generator.
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPointConfig {
    pub list_size: usize,
    pub iterations: usize,
    pub norm_target: u64,
    pub start: StartVector,
}

impl FixedPointConfig {
    pub fn new(list_size: usize) -> Self {
        FixedPointConfig {
            list_size,
            iterations: DEFAULT_ITERATIONS,
            norm_target: DEFAULT_NORM_TARGET,
            start: StartVector::Uniform,
        }
    }
}

pub fn start_vector(len: usize, norm_target: u64, start: StartVector) -> WeightVector {
    match start {
        StartVector::Uniform => WeightVector::uniform(len, norm_target),
        StartVector::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hi = norm_target.saturating_mul(2).max(1);
            WeightVector(
                (0..len)
                    .map(|_| BigUint::from(rng.random_range(1..=hi)))
                    .collect(),
            )
        }
    }
}

/// Alternates [`iterate`] and [`renormalize`] `iterations` times, sets α to
/// [`compute_alpha`] of the result and verifies the certificate before
/// returning it.
pub fn run_fixed_point(g: &TransitionGraph, cfg: &FixedPointConfig) -> Result<Certificate> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidParameter(
            "iterations must be at least 1".into(),
        ));
    }
    check_list_size(g, cfg.list_size)?;
    let mut c = start_vector(g.vertex_count(), cfg.norm_target, cfg.start);
    for _ in 0..cfg.iterations {
        c = renormalize(&iterate(g, &c, cfg.list_size)?, cfg.norm_target)?;
    }
    if c.get(LambdaState::ROOT).is_zero() {
        return Err(Error::DeadVertex { vertex: 0 });
    }
    let alpha = compute_alpha(g, &c, cfg.list_size)?;
    let cert = Certificate {
        period: g.period(),
        alphabet_size: g.alphabet_size(),
        list_size: cfg.list_size,
        weights: c,
        alpha,
        lambda_digest: g.lambda_digest(),
    };
    match find_violation(g, &cert)? {
        None => Ok(cert),
        Some(Violation::ZeroRoot) => Err(Error::DeadVertex { vertex: 0 }),
        Some(Violation::Inequality { vertex }) => Err(Error::VerificationFailed(format!(
            "inequality fails at vertex {vertex}"
        ))),
    }
}

/// Growth constant a single update achieves from unit weights: the
/// minimum over vertices of `min_list_sum(v, 1)`.
pub fn unit_alpha(g: &TransitionGraph, list_size: usize) -> Result<Rational> {
    compute_alpha(g, &WeightVector::uniform(g.vertex_count(), 1), list_size)
}
