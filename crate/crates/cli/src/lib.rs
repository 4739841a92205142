//! Command-line plumbing: argument parsing, subcommand dispatch and rendering.
//!
//! Every subcommand renders to a string so outputs can be compared byte for
//! byte; [`run`] returns that string together with the process exit code.

use std::fmt::Write as _;

use bdcluster::bd_core::BdError;
use bdcluster::laurent_maps::{exponent_relation, reduce_run, verify_matrixmap, Removal, Side};
use bdcluster::poisson::omega;
use bdcluster::seed_builder::Vertex;
use bdcluster::verify::{run_report, ReportConfig};
use bdcluster::exactlin::rat;
use bdcluster::{BdPair, BdTriple, ClusterSeed, Quiver, Sampler};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code when a verification finds a violation.
pub const EXIT_VIOLATION: i32 = 1;
/// Exit code for malformed or unsupported input.
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bdcluster", version, about = "Cluster seeds, Poisson brackets and verification for Belavin-Drinfeld pairs on GL_n")]
pub struct Cli {
    #[command(flatten)]
    pub config: CliConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CliConfig {
    /// Matrix size.
    #[arg(long, global = true, default_value_t = 3)]
    pub n: usize,
    /// Row triple as "a:b,c:d,..." or "-" for the trivial triple.
    #[arg(long = "gamma-r", global = true, default_value = "-", allow_hyphen_values = true)]
    pub gamma_r: String,
    /// Column triple as "a:b,c:d,..." or "-" for the trivial triple.
    #[arg(long = "gamma-c", global = true, default_value = "-", allow_hyphen_values = true)]
    pub gamma_c: String,
    /// Seed for the random evaluation points.
    #[arg(long = "rng", global = true, default_value_t = 42)]
    pub rng_seed: u64,
    /// Number of random evaluation points (at least 2).
    #[arg(long, global = true, default_value_t = 3)]
    pub points: usize,
    /// Random entries are drawn from [-entry-range, entry-range] (at least 2).
    #[arg(long = "entry-range", global = true, default_value_t = 20)]
    pub entry_range: i64,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the output to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// Delete the leftmost root of the run.
    Left,
    /// Delete the rightmost root of the run.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunSide {
    Row,
    Column,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// The pair graph and its maximal alternating paths.
    Graph,
    /// The initial seed: L matrices and where every function lives.
    Seed,
    /// The initial quiver.
    Quiver,
    /// The constant matrix of log-canonical brackets.
    Omega,
    /// The full verification report.
    Verify,
    /// The quiver after a sequence of mutations.
    Mutate {
        /// Vertices as "(i,j),(k,l),...", applied left to right.
        #[arg(long)]
        at: String,
    },
    /// The unipotent map relating the seed to the seed with one root removed.
    Laurent {
        /// The X-run as "a..b" (rows for row runs, columns for column runs).
        #[arg(long)]
        run: String,
        /// Which end of the run loses its root.
        #[arg(long, value_enum)]
        dir: Direction,
        #[arg(long, value_enum, default_value = "row")]
        side: RunSide,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {what} at position {position}: {message}")]
    Syntax { what: &'static str, position: usize, message: String },
    #[error("invalid {what} triple at position {position}: {source}")]
    Triple { what: &'static str, position: usize, source: BdError },
    #[error("{0}")]
    Invalid(String),
    #[error("format {format:?} is not available for {command}")]
    Format { format: Format, command: &'static str },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Rendered output and exit code of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub code: i32,
}

/// Parses a triple written as "a:b,c:d,..." or "-".
///
/// Positions in errors are 1-based character offsets into `spec`.
pub fn parse_bd(n: usize, spec: &str, what: &'static str) -> Result<BdTriple, CliError> {
    let trimmed = spec.trim();
    let mut pairs = Vec::new();
    let mut offsets = Vec::new();
    if trimmed != "-" && !trimmed.is_empty() {
        let mut offset = spec.len() - spec.trim_start().len();
        for item in trimmed.split(',') {
            let syntax = |message: String| CliError::Syntax { what, position: offset + 1, message };
            let (a, b) = item.split_once(':').ok_or_else(|| syntax(format!("expected \"a:b\", found \"{item}\"")))?;
            let num = |s: &str| s.trim().parse::<usize>().map_err(|_| syntax(format!("\"{}\" is not a root index", s.trim())));
            pairs.push((num(a)?, num(b)?));
            offsets.push(offset + 1);
            offset += item.len() + 1;
        }
    }
    BdTriple::new(n, &pairs).map_err(|source| {
        let root = match &source {
            BdError::RootOutOfRange { root, .. }
            | BdError::DuplicateSource { root }
            | BdError::NotOriented { root, .. }
            | BdError::NotIsometry { root, .. }
            | BdError::NotNilpotent { root } => Some(*root),
            BdError::NotInjective { b, .. } => Some(*b),
            _ => None,
        };
        // The last item mentioning the root is the one that broke validity.
        let position = root
            .and_then(|r| pairs.iter().rposition(|&(a, b)| a == r || b == r))
            .map_or(1, |i| offsets[i]);
        CliError::Triple { what, position, source }
    })
}

/// Parses "(i,j),(k,l),..." into vertices.
pub fn parse_vertices(spec: &str) -> Result<Vec<Vertex>, CliError> {
    let what = "vertex list";
    let mut out = Vec::new();
    let mut rest = spec;
    let mut position = 1;
    loop {
        let skipped = rest.len() - rest.trim_start_matches([' ', ',']).len();
        rest = &rest[skipped..];
        position += skipped;
        if rest.is_empty() {
            break;
        }
        let syntax = |message: String| CliError::Syntax { what, position, message };
        let body = rest.strip_prefix('(').ok_or_else(|| syntax("expected \"(\"".into()))?;
        let close = body.find(')').ok_or_else(|| syntax("missing \")\"".into()))?;
        let (i, j) = body[..close].split_once(',').ok_or_else(|| syntax("expected \"(i,j)\"".into()))?;
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| syntax(format!("\"{}\" is not an index", s.trim())));
        out.push((num(i)?, num(j)?));
        position += close + 2;
        rest = &body[close + 1..];
    }
    if out.is_empty() {
        return Err(CliError::Syntax { what, position: 1, message: "no vertices given".into() });
    }
    Ok(out)
}

/// Parses "a..b" (inclusive).
pub fn parse_run(spec: &str) -> Result<(usize, usize), CliError> {
    let syntax = |message: String| CliError::Syntax { what: "run", position: 1, message };
    let (a, b) = spec.split_once("..").ok_or_else(|| syntax(format!("expected \"a..b\", found \"{spec}\"")))?;
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| syntax(format!("\"{}\" is not an index", s.trim())));
    Ok((num(a)?, num(b)?))
}

impl CliConfig {
    pub fn pair(&self) -> Result<BdPair, CliError> {
        if self.n < 2 {
            return Err(CliError::Invalid(format!("matrix size must be at least 2, got {}", self.n)));
        }
        let row = parse_bd(self.n, &self.gamma_r, "row")?;
        let col = parse_bd(self.n, &self.gamma_c, "column")?;
        BdPair::new(row, col).map_err(|e| CliError::Invalid(e.to_string()))
    }

    pub fn report_config(&self) -> Result<ReportConfig, CliError> {
        if self.points < 2 {
            return Err(CliError::Invalid(format!("--points must be at least 2, got {}", self.points)));
        }
        if self.entry_range < 2 {
            return Err(CliError::Invalid(format!("--entry-range must be at least 2, got {}", self.entry_range)));
        }
        Ok(ReportConfig { rng_seed: self.rng_seed, points: self.points, entry_range: self.entry_range })
    }

    fn format(&self, default: Format, allowed: &[Format], command: &'static str) -> Result<Format, CliError> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(CliError::Format { format: f, command })
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn seed_of(pair: &BdPair) -> Result<ClusterSeed, CliError> {
    if !pair.is_aperiodic() {
        let d = pair.decompose();
        let cycles: Vec<String> = d.cycles.iter().map(ToString::to_string).collect();
        return Err(CliError::Invalid(format!("pair is periodic: alternating cycle {}", cycles.join(", "))));
    }
    ClusterSeed::build(pair).map_err(|e| CliError::Invalid(e.to_string()))
}

fn quiver_output(q: &Quiver, format: Format) -> String {
    match format {
        Format::Dot => q.to_dot(),
        Format::Json => json(&q.to_json()),
        Format::Text => {
            let mut s = format!("quiver n={} frozen {}\n", q.n, q.frozen().len());
            for (a, b, m) in q.arrows() {
                let _ = writeln!(s, "{a:?} -> {b:?}{}", if m > 1 { format!(" x{m}") } else { String::new() });
            }
            s
        }
    }
}

#[derive(Serialize)]
struct GraphJson<'a> {
    graph: &'a bdcluster::PairGraph,
    decomposition: &'a bdcluster::PathDecomposition,
    aperiodic: bool,
}

#[derive(Serialize)]
struct PointCheck {
    point: usize,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct LaurentJson {
    pair: String,
    side: Side,
    removal: Removal,
    run: (usize, usize),
    reduced_pair: String,
    distinguished: Vertex,
    with_factor: Vec<Vertex>,
    delta: Option<i64>,
    exponents: Result<Vec<(Vertex, i64)>, String>,
    points: Vec<PointCheck>,
    passed: bool,
}

fn laurent(pair: &BdPair, cfg: &ReportConfig, run: (usize, usize), dir: Direction, side: RunSide) -> Result<LaurentJson, CliError> {
    let side = match side {
        RunSide::Row => Side::Row,
        RunSide::Column => Side::Column,
    };
    let removal = match dir {
        Direction::Left => Removal::Leftmost,
        Direction::Right => Removal::Rightmost,
    };
    seed_of(pair)?;
    let red = reduce_run(pair, side, run, removal).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut smp = Sampler::new(cfg.rng_seed, cfg.entry_range);
    let mut points = Vec::new();
    let mut with_factor = Vec::new();
    let mut tries = 0;
    while points.len() < cfg.points && tries < 1000 {
        tries += 1;
        let z = smp.square(pair.n());
        if red.reduced_seed().f(red.distinguished, &z) == rat(0) {
            continue;
        }
        let check = match verify_matrixmap(&red, &z) {
            Ok(r) => {
                with_factor = r.with_factor;
                PointCheck { point: points.len() + 1, passed: true, detail: format!("{} functions agree", r.vertices_checked) }
            }
            Err(e) => PointCheck { point: points.len() + 1, passed: false, detail: e.to_string() },
        };
        points.push(check);
    }
    if points.len() < cfg.points {
        return Err(CliError::Invalid("no point with a nonzero distinguished function".into()));
    }
    let relation = exponent_relation(&red);
    let passed = points.iter().all(|p| p.passed) && relation.is_ok();
    Ok(LaurentJson {
        pair: pair.to_string(),
        side,
        removal,
        run,
        reduced_pair: red.reduced_pair.to_string(),
        distinguished: red.distinguished,
        with_factor,
        delta: relation.as_ref().ok().map(|r| r.delta),
        exponents: relation
            .map(|r| r.lambda.into_iter().filter(|&(_, l)| l != 0).collect())
            .map_err(|e| e.to_string()),
        points,
        passed,
    })
}

fn laurent_text(r: &LaurentJson) -> String {
    let mut s = format!(
        "pair {}\n{:?} run [{}, {}], {:?} removal\nreduced pair {}\ndistinguished vertex {:?}\n",
        r.pair, r.side, r.run.0, r.run.1, r.removal, r.reduced_pair, r.distinguished
    );
    for p in &r.points {
        let _ = writeln!(s, "{} point {}: {}", if p.passed { "PASS" } else { "FAIL" }, p.point, p.detail);
    }
    let _ = writeln!(s, "extra factor at {:?}", r.with_factor);
    match &r.exponents {
        Ok(e) => {
            let _ = writeln!(s, "PASS exponents: delta = {}, lambda = 1 at {:?}", r.delta.unwrap_or(0), e.iter().map(|p| p.0).collect::<Vec<_>>());
        }
        Err(e) => {
            let _ = writeln!(s, "FAIL exponents: {e}");
        }
    }
    let _ = writeln!(s, "{}", if r.passed { "all checks passed" } else { "verification failed" });
    s
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = &cli.config;
    let pair = cfg.pair()?;
    let ok = |output: String| Ok(Outcome { output, code: EXIT_OK });
    match &cli.command {
        Command::Graph => {
            let format = cfg.format(Format::Dot, &[Format::Dot, Format::Json, Format::Text], "graph")?;
            let graph = pair.graph();
            let d = graph.decompose();
            match format {
                Format::Dot => ok(d.to_dot(pair.n())),
                Format::Json => ok(json(&GraphJson { graph: &graph, decomposition: &d, aperiodic: d.is_aperiodic() })),
                Format::Text => {
                    let mut s = format!("pair {pair}\n");
                    for p in &d.paths {
                        let _ = writeln!(s, "path {p}");
                    }
                    for c in &d.cycles {
                        let _ = writeln!(s, "cycle {c}");
                    }
                    let _ = writeln!(s, "{}", if d.is_aperiodic() { "aperiodic" } else { "periodic" });
                    ok(s)
                }
            }
        }
        Command::Seed => {
            let format = cfg.format(Format::Json, &[Format::Json, Format::Text], "seed")?;
            let seed = seed_of(&pair)?;
            match format {
                Format::Json => ok(json(&seed.summary())),
                _ => {
                    let mut s = format!("pair {pair}\n");
                    for (i, l) in seed.l_matrices.iter().enumerate() {
                        let _ = writeln!(s, "L{i} size {} path {}", l.size, l.path);
                    }
                    for v in seed.vertices() {
                        let loc = seed.locate(v).expect("valid vertex");
                        let tag = if seed.is_frozen(v) { "frozen" } else { "mutable" };
                        let _ = writeln!(s, "f{v:?} {tag} degree {} at {loc:?}", seed.degree(v));
                    }
                    ok(s)
                }
            }
        }
        Command::Quiver => {
            let format = cfg.format(Format::Dot, &[Format::Dot, Format::Json, Format::Text], "quiver")?;
            seed_of(&pair)?;
            let q = Quiver::build(&pair).map_err(|e| CliError::Invalid(e.to_string()))?;
            ok(quiver_output(&q, format))
        }
        Command::Mutate { at } => {
            let format = cfg.format(Format::Dot, &[Format::Dot, Format::Json, Format::Text], "mutate")?;
            let vertices = parse_vertices(at)?;
            seed_of(&pair)?;
            let mut q = Quiver::build(&pair).map_err(|e| CliError::Invalid(e.to_string()))?;
            for v in vertices {
                q = q.mutate(v).map_err(|e| CliError::Invalid(e.to_string()))?;
            }
            ok(quiver_output(&q, format))
        }
        Command::Omega => {
            let format = cfg.format(Format::Json, &[Format::Json, Format::Text], "omega")?;
            let rc = cfg.report_config()?;
            let seed = seed_of(&pair)?;
            let mut smp = Sampler::new(rc.rng_seed, rc.entry_range);
            let pts = seed
                .generic_points(&mut smp, rc.points, 1000)
                .ok_or_else(|| CliError::Invalid("no point with all functions nonzero".into()))?;
            match omega(&seed, &pts) {
                Ok(om) => {
                    let j = om.to_json();
                    if format == Format::Json {
                        return ok(json(&j));
                    }
                    let mut s = String::new();
                    for (v, row) in j.ordering.iter().zip(&j.entries) {
                        let _ = writeln!(s, "{v:?}: {}", row.join(" "));
                    }
                    ok(s)
                }
                Err(e) => Ok(Outcome { output: format!("{e}\n"), code: EXIT_VIOLATION }),
            }
        }
        Command::Verify => {
            let format = cfg.format(Format::Text, &[Format::Json, Format::Text], "verify")?;
            let report = run_report(&pair, cfg.report_config()?);
            let output = match format {
                Format::Json => json(&report),
                _ => report.to_text(),
            };
            Ok(Outcome { output, code: if report.passed() { EXIT_OK } else { EXIT_VIOLATION } })
        }
        Command::Laurent { run, dir, side } => {
            let format = cfg.format(Format::Text, &[Format::Json, Format::Text], "laurent")?;
            let r = laurent(&pair, &cfg.report_config()?, parse_run(run)?, *dir, *side)?;
            let output = match format {
                Format::Json => json(&r),
                _ => laurent_text(&r),
            };
            Ok(Outcome { output, code: if r.passed { EXIT_OK } else { EXIT_VIOLATION } })
        }
    }
}

/// Runs one invocation and writes the output to `--out` when given.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let outcome = dispatch(cli)?;
    if let Some(path) = &cli.config.out {
        std::fs::write(path, &outcome.output).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let t = parse_bd(7, "1:3,2:4,4:1", "row").unwrap();
        assert_eq!(t.pairs(), vec![(1, 3), (2, 4), (4, 1)]);
        assert!(parse_bd(5, "-", "row").unwrap().is_trivial());
        assert!(matches!(
            parse_bd(4, "1:1", "row"),
            Err(CliError::Triple { position: 1, source: BdError::NotNilpotent { root: 1 }, .. })
        ));
        assert!(matches!(parse_bd(4, "1:2, 2:x", "row"), Err(CliError::Syntax { position: 5, .. })));
        assert!(matches!(parse_bd(4, "1:2,3", "row"), Err(CliError::Syntax { position: 5, .. })));
    }

    #[test]
    fn parse_vertex_lists() {
        assert_eq!(parse_vertices("(2,2),(1, 3)").unwrap(), vec![(2, 2), (1, 3)]);
        assert_eq!(parse_vertices(" (4,5)").unwrap(), vec![(4, 5)]);
        assert!(matches!(parse_vertices("(2,2),(1"), Err(CliError::Syntax { position: 7, .. })));
        assert!(parse_vertices("").is_err());
        assert_eq!(parse_run("2..5").unwrap(), (2, 5));
        assert!(parse_run("2-5").is_err());
    }

    #[test]
    fn config_bounds() {
        let cli = Cli::try_parse_from(["bdcluster", "omega", "--points", "1"]).unwrap();
        assert!(matches!(dispatch(&cli), Err(CliError::Invalid(_))));
        let cli = Cli::try_parse_from(["bdcluster", "verify", "--entry-range", "1"]).unwrap();
        assert!(matches!(dispatch(&cli), Err(CliError::Invalid(_))));
    }
}
