//! `sqfree`: builds Λ, the transition graph and weight certificates, checks
//! growth bounds and runs the brute-force oracles.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqfree_core::bounds::{
    beta_four_verdict, check_beta_main, estimate_lambda_size, growth_bound, search_beta,
    CellConvention, Verdict,
};
use sqfree_core::lambda::build_lambda_limited;
use sqfree_core::oracle::{self, GameMode, ListAssignment, Weighting};
use sqfree_core::weights::{
    find_violation, StartVector, Violation, DEFAULT_ITERATIONS, DEFAULT_NORM_TARGET,
};
use sqfree_core::{
    build_graph, run_fixed_point, Certificate, Error, FixedPointConfig, LambdaSet, Rational,
    TransitionGraph,
};
use sqfree_core::{digest, rational};

const EXIT_VERIFY: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "sqfree",
    version,
    about = "Square-free words over list assignments: weight certificates and growth bounds"
)]
struct Cli {
    /// Directory for Λ, graph, weights and certificate files.
    #[arg(long, global = true, env = "SQF_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Memory budget in bytes for the Λ build; accepts K, M, G suffixes.
    #[arg(long, global = true, default_value = "8G", value_parser = parse_bytes)]
    max_mem: u64,
    /// Skip the memory budget check.
    #[arg(long, global = true)]
    allow_large: bool,
    /// Re-read every written file and check it against the in-memory value.
    #[arg(long, global = true)]
    validate: bool,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Instance {
    #[arg(long, short = 'p')]
    period: usize,
    #[arg(long, short = 'a', default_value_t = 4)]
    alphabet: usize,
}

#[derive(Args, Debug, Clone)]
struct Iteration {
    #[arg(long, short = 'l', default_value_t = 3)]
    list_size: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = DEFAULT_NORM_TARGET)]
    norm_target: u64,
    /// Start from seeded random weights instead of uniform ones.
    #[arg(long)]
    seed_vector: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build Λ and write it to the output directory.
    Build(Instance),
    /// Build the transition graph over Λ.
    Graph(Instance),
    /// Iterate weights and write a verified certificate.
    Certify {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        iteration: Iteration,
    },
    /// Re-verify a certificate with exact arithmetic.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Search for β with |S_n| ≥ βⁿ, or check a given β.
    Bound {
        #[arg(long, required_unless_present_any = ["alpha_override", "four_list"])]
        certificate: Option<PathBuf>,
        /// Use this α instead of a certificate (needs --period).
        #[arg(long, requires = "period", value_parser = parse_rational)]
        alpha_override: Option<Rational>,
        #[arg(long, short = 'p')]
        period: Option<usize>,
        /// Check this β instead of searching.
        #[arg(long, value_parser = parse_rational)]
        beta: Option<Rational>,
        /// Check β against the lists-of-size-4 condition (needs --beta).
        #[arg(long, requires = "beta")]
        four_list: bool,
        #[arg(long, default_value = "1/1000", value_parser = parse_rational)]
        precision: Rational,
    },
    /// Upper estimate of |Λ|.
    Estimate {
        #[command(flatten)]
        instance: Instance,
        /// Drop the n = 1 cells instead of reading (k-1)^(-1) as 1/(k-1).
        #[arg(long)]
        strict_cells: bool,
    },
    /// Brute-force ground truth.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Enumerate Λ naively and compare with the trie build.
    Lambda(Instance),
    /// Count square-free words of a given length.
    Count {
        #[arg(long, short = 'n')]
        length: usize,
        #[arg(long, short = 'a', default_value_t = 4)]
        alphabet: usize,
    },
    /// Value of the list game against a just-in-time adversary.
    Game {
        #[arg(long, short = 'n')]
        length: usize,
        #[arg(long, short = 'a', default_value_t = 4)]
        alphabet: usize,
        #[arg(long, short = 'l', default_value_t = 3)]
        list_size: usize,
        /// Forbid only squares of period ≤ p.
        #[arg(long, short = 'p')]
        period: Option<usize>,
        /// Weight words by this certificate.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Check the weighted growth inequalities over list assignments.
    Growth {
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long, short = 'n')]
        length: usize,
        /// Every assignment of the given length.
        #[arg(long)]
        exhaustive: bool,
        /// Number of random assignments.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

fn parse_bytes(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (digits, scale) = match s.chars().last() {
        Some('K' | 'k') => (&s[..s.len() - 1], 1u64 << 10),
        Some('M' | 'm') => (&s[..s.len() - 1], 1 << 20),
        Some('G' | 'g') => (&s[..s.len() - 1], 1 << 30),
        Some('T' | 't') => (&s[..s.len() - 1], 1 << 40),
        _ => (s, 1),
    };
    digits
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(scale))
        .ok_or_else(|| format!("invalid size {s:?}"))
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::VerificationFailed(_)
            | Error::DigestMismatch { .. }
            | Error::DeadVertex { .. }
            | Error::DimensionMismatch { .. } => EXIT_VERIFY,
            Error::ResourceGuard(_) => EXIT_GUARD,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn verify(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VERIFY,
            message: message.into(),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Build(inst) => cmd_build(cli, inst),
        Command::Graph(inst) => cmd_graph(cli, inst),
        Command::Certify {
            instance,
            iteration,
        } => cmd_certify(cli, instance, iteration),
        Command::Verify { certificate } => cmd_verify(cli, certificate),
        Command::Bound {
            certificate,
            alpha_override,
            period,
            beta,
            four_list,
            precision,
        } => cmd_bound(
            cli,
            certificate.as_deref(),
            alpha_override.as_ref().zip(*period),
            beta.as_ref(),
            *four_list,
            precision,
        ),
        Command::Estimate {
            instance,
            strict_cells,
        } => cmd_estimate(instance, *strict_cells),
        Command::Oracle(cmd) => cmd_oracle(cli, cmd),
    }
}

fn lambda_path(cli: &Cli, inst: &Instance) -> PathBuf {
    cli.out_dir
        .join(format!("lambda_p{}_a{}.txt", inst.period, inst.alphabet))
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    fs::write(path, text).map_err(Error::from)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn read_file(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })
}

/// Bytes per trie node: child row, parent, letter, depth.
fn bytes_per_node(alphabet: usize) -> u64 {
    4 * alphabet as u64 + 4 + 1 + 1
}

/// Refuses builds whose projected size exceeds the memory budget, and
/// returns the node cap to enforce during the build.
fn memory_guard(cli: &Cli, inst: &Instance) -> std::result::Result<usize, Failure> {
    if cli.allow_large {
        return Ok(usize::MAX);
    }
    let per_node = bytes_per_node(inst.alphabet);
    let estimate = estimate_lambda_size(inst.period, inst.alphabet, CellConvention::Reciprocal)?;
    let projected_nodes = estimate.ceil().to_integer();
    let projected_bytes = projected_nodes.to_f64().unwrap_or(f64::INFINITY) * per_node as f64;
    if projected_bytes > cli.max_mem as f64 {
        return Err(Failure {
            code: EXIT_GUARD,
            message: format!(
                "projected lambda size for p={} alphabet={} is about {:.3e} nodes ({:.3e} bytes), over the budget of {} bytes; pass --allow-large or raise --max-mem",
                inst.period, inst.alphabet, projected_nodes.to_f64().unwrap_or(f64::INFINITY), projected_bytes, cli.max_mem
            ),
        });
    }
    Ok((cli.max_mem / per_node) as usize)
}

fn peak_memory_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

fn build(cli: &Cli, inst: &Instance) -> std::result::Result<LambdaSet, Failure> {
    let max_nodes = memory_guard(cli, inst)?;
    let start = Instant::now();
    let set = build_lambda_limited(inst.period, inst.alphabet, max_nodes)?;
    info!(
        "built lambda p={} alphabet={}: {} nodes in {:.3}s",
        inst.period,
        inst.alphabet,
        set.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(set)
}

/// Loads Λ from the output directory when present, otherwise builds it.
fn load_or_build(cli: &Cli, inst: &Instance) -> std::result::Result<LambdaSet, Failure> {
    let path = lambda_path(cli, inst);
    if path.exists() {
        let set = LambdaSet::from_text(&read_file(&path)?)?;
        if set.period() != inst.period || set.alphabet_size() != inst.alphabet {
            return Err(Failure::verify(format!(
                "{} holds p={} alphabet={}",
                path.display(),
                set.period(),
                set.alphabet_size()
            )));
        }
        info!("loaded {}", path.display());
        return Ok(set);
    }
    build(cli, inst)
}

fn cmd_build(cli: &Cli, inst: &Instance) -> CmdResult {
    let start = Instant::now();
    let set = build(cli, inst)?;
    let text = set.to_text();
    let path = lambda_path(cli, inst);
    write_file(&path, &text)?;
    if cli.validate {
        let back = LambdaSet::from_text(&read_file(&path)?)?;
        if back != set {
            return Err(Failure::verify(
                "lambda file does not read back identically",
            ));
        }
    }
    println!("p={} alphabet={}", inst.period, inst.alphabet);
    println!("count={}", set.len());
    println!("lambda_digest={}", digest::to_hex(set.digest()));
    if let Some(kib) = peak_memory_kib() {
        println!("peak_memory_kib={kib}");
    }
    println!("wall_seconds={:.3}", start.elapsed().as_secs_f64());
    println!("file={}", path.display());
    Ok(())
}

fn cmd_graph(cli: &Cli, inst: &Instance) -> CmdResult {
    let set = load_or_build(cli, inst)?;
    let g = build_graph(&set);
    let path = cli
        .out_dir
        .join(format!("graph_p{}_a{}.txt", inst.period, inst.alphabet));
    let text = g.to_text();
    write_file(&path, &text)?;
    if cli.validate && TransitionGraph::from_text(&read_file(&path)?, &set)? != g {
        return Err(Failure::verify("graph file does not read back identically"));
    }
    let arcs: usize = set.states().map(|v| g.arcs(v).len()).sum();
    println!("vertices={} arcs={}", g.vertex_count(), arcs);
    println!("file={}", path.display());
    Ok(())
}

fn certificate_names(inst: &Instance, list_size: usize) -> (String, String) {
    let stem = format!("p{}_a{}_l{}", inst.period, inst.alphabet, list_size);
    (
        format!("certificate_{stem}.txt"),
        format!("weights_{stem}.txt"),
    )
}

fn cmd_certify(cli: &Cli, inst: &Instance, it: &Iteration) -> CmdResult {
    if it.list_size < 2 || it.list_size > inst.alphabet {
        return Err(
            Error::InvalidParameter(format!("list size must be in 2..={}", inst.alphabet)).into(),
        );
    }
    let set = load_or_build(cli, inst)?;
    let g = build_graph(&set);
    let cfg = FixedPointConfig {
        list_size: it.list_size,
        iterations: it.iterations,
        norm_target: it.norm_target,
        start: it
            .seed_vector
            .map_or(StartVector::Uniform, |seed| StartVector::Random { seed }),
    };
    let start = Instant::now();
    let cert = run_fixed_point(&g, &cfg)?;
    info!("fixed point in {:.3}s", start.elapsed().as_secs_f64());
    let (cert_name, weights_name) = certificate_names(inst, it.list_size);
    let cert_path = cli.out_dir.join(&cert_name);
    write_file(
        &cli.out_dir.join(&weights_name),
        &cert.weights.to_text(cert.lambda_digest),
    )?;
    write_file(&cert_path, &cert.to_text_with_weights_file(&weights_name))?;
    if cli.validate {
        let back = Certificate::from_text(&read_file(&cert_path)?, Some(&cli.out_dir))?;
        if back != cert {
            return Err(Failure::verify(
                "certificate does not read back identically",
            ));
        }
    }
    let zeros = cert
        .weights
        .values()
        .iter()
        .filter(|w| w.bits() == 0)
        .count();
    if zeros > 0 {
        warn!("{zeros} vertices ended with zero weight");
    }
    println!(
        "p={} alphabet={} list_size={}",
        inst.period, inst.alphabet, it.list_size
    );
    println!("vertices={}", set.len());
    println!("alpha={}", rational::report(&cert.alpha));
    println!("verified=exact");
    println!("file={}", cert_path.display());
    Ok(())
}

fn load_certificate(path: &Path) -> std::result::Result<Certificate, Failure> {
    let text = read_file(path)?;
    Ok(Certificate::from_text(&text, path.parent())?)
}

/// Λ matching a certificate, checked by digest.
fn certificate_lambda(cli: &Cli, cert: &Certificate) -> std::result::Result<LambdaSet, Failure> {
    let inst = Instance {
        period: cert.period,
        alphabet: cert.alphabet_size,
    };
    let set = load_or_build(cli, &inst)?;
    if set.digest() != cert.lambda_digest {
        return Err(Error::DigestMismatch {
            expected: digest::to_hex(set.digest()),
            found: digest::to_hex(cert.lambda_digest),
        }
        .into());
    }
    Ok(set)
}

fn check_certificate(g: &TransitionGraph, cert: &Certificate) -> CmdResult {
    match find_violation(g, cert)? {
        None => Ok(()),
        Some(Violation::ZeroRoot) => Err(Failure::verify("root weight is zero")),
        Some(Violation::Inequality { vertex }) => Err(Failure::verify(format!(
            "certificate inequality fails at vertex {vertex}"
        ))),
    }
}

fn cmd_verify(cli: &Cli, path: &Path) -> CmdResult {
    let cert = load_certificate(path)?;
    let set = certificate_lambda(cli, &cert)?;
    let g = build_graph(&set);
    check_certificate(&g, &cert)?;
    println!(
        "p={} alphabet={} list_size={}",
        cert.period, cert.alphabet_size, cert.list_size
    );
    println!("alpha={}", rational::report(&cert.alpha));
    println!("verified=exact");
    Ok(())
}

fn cmd_bound(
    cli: &Cli,
    certificate: Option<&Path>,
    overridden: Option<(&Rational, usize)>,
    beta: Option<&Rational>,
    four_list: bool,
    precision: &Rational,
) -> CmdResult {
    if four_list {
        let beta = beta.expect("clap enforces --beta");
        let verdict = beta_four_verdict(beta)?;
        println!("beta={}", rational::report(beta));
        match verdict {
            Verdict::Holds => {
                println!("four-list condition holds: count of square-free words ≥ βⁿ")
            }
            Verdict::Fails => println!("four-list condition fails"),
            Verdict::Indeterminate => {
                println!("four-list condition undecided at the √3 bounds used")
            }
        }
        return Ok(());
    }
    let (alpha, period, cert) = match overridden {
        Some((alpha, p)) => {
            println!(
                "alpha={} (override, no certificate checked)",
                rational::report(alpha)
            );
            (alpha.clone(), p, None)
        }
        None => {
            let path = certificate.expect("clap enforces --certificate");
            let cert = load_certificate(path)?;
            let set = certificate_lambda(cli, &cert)?;
            let g = build_graph(&set);
            check_certificate(&g, &cert)?;
            println!(
                "alpha={} (certificate verified)",
                rational::report(&cert.alpha)
            );
            (cert.alpha.clone(), cert.period, Some((g, cert)))
        }
    };
    println!("p={period}");
    let chosen = match beta {
        Some(b) => check_beta_main(&alpha, period, b)?.then(|| b.clone()),
        None => search_beta(&alpha, period, precision)?,
    };
    match chosen {
        None => match beta {
            Some(b) => println!(
                "beta={} does not satisfy the growth condition",
                rational::exact(b)
            ),
            None => println!("no β found"),
        },
        Some(b) => {
            println!(
                "count of square-free words ≥ βⁿ with β = {}",
                rational::report(&b)
            );
            if let Some((g, cert)) = cert {
                let bound = growth_bound(&g, &cert, &b)?;
                println!(
                    "weighted constant C_ε/max C = {}",
                    rational::report(&bound.multiplicative_constant)
                );
            }
        }
    }
    Ok(())
}

fn cmd_estimate(inst: &Instance, strict: bool) -> CmdResult {
    let cells = if strict {
        CellConvention::Strict
    } else {
        CellConvention::Reciprocal
    };
    let e = estimate_lambda_size(inst.period, inst.alphabet, cells)?;
    println!("p={} alphabet={}", inst.period, inst.alphabet);
    println!("estimate={}", rational::report(&e));
    println!("estimate_sci={:.4e}", e.to_f64().unwrap_or(f64::INFINITY));
    Ok(())
}

fn cmd_oracle(cli: &Cli, cmd: &OracleCommand) -> CmdResult {
    match cmd {
        OracleCommand::Lambda(inst) => {
            let brute = oracle::brute_lambda(inst.period, inst.alphabet)?;
            let set = build(cli, inst)?;
            let built: std::collections::BTreeSet<_> = set.words().collect();
            println!("brute_count={} trie_count={}", brute.len(), built.len());
            for w in &brute {
                println!(
                    "{}",
                    if w.is_empty() {
                        "ε".to_owned()
                    } else {
                        w.to_string()
                    }
                );
            }
            if brute != built {
                return Err(Failure::verify(
                    "trie build differs from brute-force enumeration",
                ));
            }
            println!("match=yes");
        }
        OracleCommand::Count { length, alphabet } => {
            println!("count={}", oracle::count_squarefree(*length, *alphabet)?);
        }
        OracleCommand::Game {
            length,
            alphabet,
            list_size,
            period,
            certificate,
        } => {
            let cert = certificate.as_deref().map(load_certificate).transpose()?;
            let cert_set = cert
                .as_ref()
                .map(|c| certificate_lambda(cli, c))
                .transpose()?;
            let short_set = match (period, &cert_set) {
                (Some(p), Some(s)) if s.period() == *p => None,
                (Some(p), _) => Some(build(
                    cli,
                    &Instance {
                        period: *p,
                        alphabet: *alphabet,
                    },
                )?),
                (None, _) => None,
            };
            let weighting = match (&cert_set, &cert) {
                (Some(s), Some(c)) => Some(Weighting::from_certificate(s, c)?),
                _ => None,
            };
            let mode = match (period, &short_set, &cert_set) {
                (None, _, _) => GameMode::Exact,
                (Some(_), Some(s), _) => GameMode::ShortSquare(s),
                (Some(_), None, Some(s)) => GameMode::ShortSquare(s),
                (Some(_), None, None) => unreachable!("short-square set is built above"),
            };
            let v = oracle::adversary_min_count(*length, *alphabet, *list_size, mode, weighting)?;
            println!("words={}", v.word_count);
            if weighting.is_some() {
                println!("weight={}", v.total_weight);
            }
            for (s, c) in &v.by_state {
                let set = cert_set
                    .as_ref()
                    .or(short_set.as_ref())
                    .expect("states need a lambda set");
                let w = set.word(*s);
                println!(
                    "state {} ({}): {c}",
                    s.0,
                    if w.is_empty() {
                        "ε".to_owned()
                    } else {
                        w.to_string()
                    }
                );
            }
            let trace: Vec<String> = v
                .trace
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|&a| char::from_digit(a as u32, 36).unwrap())
                        .collect()
                })
                .collect();
            println!("adversary_lists={}", trace.join(" "));
        }
        OracleCommand::Growth {
            certificate,
            length,
            exhaustive,
            random,
            seed,
        } => {
            let cert = load_certificate(certificate)?;
            let set = certificate_lambda(cli, &cert)?;
            check_certificate(&build_graph(&set), &cert)?;
            let beta = oracle::certificate_beta(&cert)?;
            println!(
                "alpha={} beta={}",
                rational::exact(&cert.alpha),
                beta.as_ref().map_or("none".to_owned(), rational::exact)
            );
            let mut ok = true;
            if *exhaustive {
                let report = oracle::sweep_assignments(&set, &cert, *length)?;
                println!(
                    "exhaustive n={length}: {} assignments, fewest words {}",
                    report.assignments, report.worst.1
                );
                if let Some(bad) = report.failure {
                    println!("violation at assignment prefix {bad:?}");
                    ok = false;
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut failures = 0;
            for _ in 0..*random {
                let a =
                    ListAssignment::random(&mut rng, *length, cert.alphabet_size, cert.list_size);
                if !oracle::check_weighted_growth(&set, &cert, &a, *length)? {
                    failures += 1;
                }
            }
            if *random > 0 {
                println!("random n={length}: {random} assignments, {failures} violations");
            }
            if failures > 0 || !ok {
                return Err(Failure::verify("weighted growth inequality violated"));
            }
            println!("growth=holds");
        }
    }
    Ok(())
}
