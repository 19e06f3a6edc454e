use std::collections::BTreeMap;
use std::fs;
use std::hash::{BuildHasher, RandomState};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fpsb_ara::bid_model::ClampMode;
use fpsb_ara::error::Error;
use fpsb_ara::level_k::{
    solve_average, solve_concept, solve_level2, solve_level2_with_q, AverageSolution, ConceptWeights, Solution,
    SolutionConcept,
};
use fpsb_ara::mc::with_threads;
use fpsb_ara::reproduce::{self, Precision};
use fpsb_ara::scenario::{parse_scenario, DistSpec, Scenario};
use fpsb_ara::solver::ExpectedBid;

/// Optimal bids in first-price sealed-bid auctions by adversarial risk analysis
#[derive(Parser, Debug)]
#[command(name = "fpsb-ara", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a scenario under one solution concept or a weighted average
    Solve(SolveArgs),
    /// Recompute a reference table (1 to 9) as CSV
    Reproduce(ReproduceArgs),
    /// Re-solve a scenario over a grid of one parameter and emit CSV
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Scenario file (JSON)
    #[arg(long)]
    scenario: PathBuf,

    /// Solution concept
    #[arg(long, default_value = "non-strategic")]
    concept: ConceptArg,

    /// Concept weights for `--concept average`, e.g. non-strategic=0.5,level-2=0.5
    #[arg(long)]
    weights: Option<String>,

    /// Monte Carlo seed; one is generated and printed when absent
    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo draws
    #[arg(long)]
    n: Option<usize>,

    /// Clamping of scaled bid CDFs
    #[arg(long)]
    clamp: Option<ClampArg>,

    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,

    /// Write a JSON result record
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// Table id, 1 to 9
    #[arg(long)]
    table: u8,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, default_value_t = fpsb_ara::mc::DEFAULT_DRAWS)]
    n: usize,

    /// Compare with the embedded reference values; exit 4 on any mismatch
    #[arg(long)]
    check: bool,

    /// Report utilities at full precision instead of from the rounded cells
    #[arg(long)]
    exact: bool,

    /// Fix the opponent bid fraction q instead of simulating it (tables 6 to 9)
    #[arg(long)]
    q: Option<f64>,

    #[arg(long)]
    threads: Option<usize>,

    /// Write the CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,

    /// Parameter to vary
    #[arg(long)]
    param: SweepParam,

    #[arg(long)]
    from: f64,

    #[arg(long)]
    to: f64,

    /// Grid points, including both ends
    #[arg(long)]
    steps: usize,

    /// Write the CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ConceptArg {
    NonStrategic,
    #[value(name = "level-1")]
    Level1,
    #[value(name = "level-2")]
    Level2,
    #[value(name = "level-3")]
    Level3,
    Average,
}

impl ConceptArg {
    fn concept(self) -> Option<SolutionConcept> {
        match self {
            ConceptArg::NonStrategic => Some(SolutionConcept::NonStrategic),
            ConceptArg::Level1 => Some(SolutionConcept::LevelK(1)),
            ConceptArg::Level2 => Some(SolutionConcept::LevelK(2)),
            ConceptArg::Level3 => Some(SolutionConcept::LevelK(3)),
            ConceptArg::Average => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ConceptArg::NonStrategic => "non-strategic",
            ConceptArg::Level1 => "level-1",
            ConceptArg::Level2 => "level-2",
            ConceptArg::Level3 => "level-3",
            ConceptArg::Average => "average",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ClampArg {
    Paper,
    Strict,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SweepParam {
    #[value(name = "r_B", alias = "r-b")]
    RiskB,
    #[value(name = "w_B", alias = "w-b")]
    WealthB,
    Tau,
    #[value(name = "q", alias = "q-override")]
    Q,
}

impl SweepParam {
    fn column(self) -> &'static str {
        match self {
            SweepParam::RiskB => "r_B",
            SweepParam::WealthB => "w_B",
            SweepParam::Tau => "tau",
            SweepParam::Q => "q",
        }
    }
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Solver(Error),
    Usage(String),
    Check(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Solver(Error::Numerical(_) | Error::Infeasible(_)) => 3,
            CliError::Solver(_) => 2,
            CliError::Check(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Reproduce(a) => reproduce_table(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.code())
        }
    }
}

fn report(e: &CliError) {
    match e {
        CliError::Solver(Error::Validation(list)) => {
            for v in list.iter() {
                eprintln!("error: {v}");
            }
        }
        CliError::Solver(e) => eprintln!("error: {e}"),
        CliError::Io(m) | CliError::Usage(m) => eprintln!("error: {m}"),
        CliError::Check(m) => eprintln!("{m}"),
    }
}

fn fresh_seed() -> u64 {
    RandomState::new().hash_one(std::time::SystemTime::now())
}

/// Scenario after command-line overrides, with the resolved seed and draw count.
struct Prepared {
    scenario: Scenario,
    seed: u64,
    n: usize,
}

fn prepare(run: &RunArgs) -> CliResult<Prepared> {
    let text = fs::read_to_string(&run.scenario).map_err(|e| io_error(&run.scenario, e))?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(c) = run.clamp {
        scenario.clamp_mode = match c {
            ClampArg::Paper => ClampMode::PaperFaithful,
            ClampArg::Strict => ClampMode::Strict,
        };
    }
    if let Some(n) = run.n {
        scenario.mc.n = n;
    }
    let seed = run.seed.or(scenario.mc.seed).unwrap_or_else(fresh_seed);
    scenario.mc.seed = Some(seed);
    scenario.validate()?;
    let n = scenario.mc.n;
    Ok(Prepared { scenario, seed, n })
}

fn parse_weights(text: &str) -> CliResult<BTreeMap<SolutionConcept, f64>> {
    let mut out = BTreeMap::new();
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("weight `{pair}` is not of the form concept=weight")))?;
        let concept: SolutionConcept = k.parse()?;
        let w: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("weight `{v}` is not a number")))?;
        out.insert(concept, w);
    }
    Ok(out)
}

fn weights_for(run: &RunArgs, s: &Scenario) -> CliResult<ConceptWeights> {
    let map = match (&run.weights, &s.weights) {
        (Some(text), _) => parse_weights(text)?,
        (None, Some(w)) => w.clone(),
        (None, None) => {
            return Err(CliError::Usage(
                "--concept average needs --weights or a `weights` object in the scenario".into(),
            ))
        }
    };
    let weights = ConceptWeights::new(map)?;
    for (c, _) in weights.iter() {
        if let Some(msg) = s.concept_unavailable(c) {
            return Err(CliError::Usage(format!("weights.{c}: {msg}")));
        }
    }
    Ok(weights)
}

#[derive(Serialize)]
#[serde(untagged)]
enum Outcome {
    Single(Solution),
    Average(AverageSolution),
}

fn solve_outcome(run: &RunArgs, p: &Prepared) -> CliResult<Outcome> {
    Ok(match run.concept.concept() {
        Some(c) => {
            if let Some(msg) = p.scenario.concept_unavailable(c) {
                return Err(CliError::Usage(msg));
            }
            Outcome::Single(solve_concept(&p.scenario, c, p.n, p.seed)?)
        }
        None => {
            let w = weights_for(run, &p.scenario)?;
            Outcome::Average(solve_average(&p.scenario, &w, p.n, p.seed)?)
        }
    })
}

#[derive(Serialize)]
struct Record<'a> {
    scenario: &'a Scenario,
    concept: &'a str,
    seed: u64,
    n: usize,
    result: &'a Outcome,
}

fn solve(a: SolveArgs) -> CliResult<()> {
    let p = prepare(&a.run)?;
    let outcome = with_threads(a.run.threads, || solve_outcome(&a.run, &p))??;
    let mut text = String::new();
    render_outcome(&mut text, a.run.concept.name(), &p, &outcome);
    print!("{text}");
    if let Some(path) = &a.out {
        let record = Record {
            scenario: &p.scenario,
            concept: a.run.concept.name(),
            seed: p.seed,
            n: p.n,
            result: &outcome,
        };
        let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(path, json + "\n").map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn render_expected(out: &mut String, e: &ExpectedBid) {
    use std::fmt::Write as _;
    if e.bid.std_error == 0.0 && e.risk.std_error == 0.0 {
        let _ = writeln!(out, "b*        {:.2}", e.bid.mean);
        let _ = writeln!(out, "a_B       {:.4}", e.risk.mean);
    } else {
        let _ = writeln!(out, "E(b*)     {:.2}  (std error {:.4}, n {})", e.bid.mean, e.bid.std_error, e.bid.n);
        let _ = writeln!(out, "E(a_B)    {:.4}  (std error {:.4})", e.risk.mean, e.risk.std_error);
    }
    let _ = writeln!(out, "win       {:.3}", e.win_probability);
    let _ = writeln!(out, "Psi       {:.2}", e.expected_utility);
}

fn render_solution(out: &mut String, s: &Solution) {
    use std::fmt::Write as _;
    match s {
        Solution::NonStrategic { bid } => render_expected(out, bid),
        Solution::Level2(l) => {
            if let Some(o) = &l.opponent {
                let _ = writeln!(out, "E(C*)     {:.2}  (std error {:.4})", o.bid.mean, o.bid.std_error);
            }
            let _ = writeln!(out, "q         {:.4}", l.q);
            render_expected(out, &l.bid);
        }
        Solution::Level3(l) => {
            let _ = writeln!(out, "q_C       {:.4}", l.inner.q);
            let _ = writeln!(
                out,
                "E(C*)     {:.2}  (std error {:.4})",
                l.opponent.mean, l.opponent.std_error
            );
            render_expected(out, &l.bid);
        }
    }
}

fn render_outcome(out: &mut String, concept: &str, p: &Prepared, o: &Outcome) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "concept   {concept}");
    let _ = writeln!(out, "seed      {}", p.seed);
    match o {
        Outcome::Single(s) => render_solution(out, s),
        Outcome::Average(a) => {
            for (c, s) in &a.components {
                let _ = writeln!(out, "[{c}] weight {}", a.weights[c]);
                render_solution(out, s);
            }
            let _ = writeln!(out, "average   {:.2}", a.bid);
        }
    }
}

fn writer(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(fs::File::create(path).map_err(|e| io_error(path, e))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn reproduce_table(a: ReproduceArgs) -> CliResult<()> {
    if !reproduce::TABLE_IDS.contains(&a.table) {
        return Err(CliError::Usage(format!("unknown table {}; expected 1 to 9", a.table)));
    }
    let seed = a.seed.unwrap_or_else(fresh_seed);
    eprintln!("seed: {seed}");
    let opts = reproduce::Options {
        seed,
        n: a.n,
        precision: if a.exact { Precision::Exact } else { Precision::Table },
        q: a.q,
    };
    let table = with_threads(a.threads, || reproduce::reproduce(a.table, &opts))??;
    for note in &table.notes {
        eprintln!("{note}");
    }
    let mut w = csv::Writer::from_writer(writer(&a.out)?);
    w.write_record(table.header()).map_err(csv_error)?;
    for r in table.records() {
        w.write_record(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    if a.check {
        let reference = reproduce::reference(a.table)?;
        let misses = reproduce::check(&table, &reference)?;
        if !misses.is_empty() {
            let mut msg = format!("check failed: {} cell(s) out of tolerance", misses.len());
            for m in &misses {
                msg.push_str(&format!(
                    "\n  {} at {:.2}: expected {} got {:.4} (tolerance {})",
                    m.row, m.column, m.expected, m.actual, m.tolerance
                ));
            }
            return Err(CliError::Check(msg));
        }
        eprintln!("check passed");
    }
    Ok(())
}

/// Raises every belief floor below `tau` to `tau`.
fn lift_floors(s: &mut Scenario, tau: f64) {
    fn lift(d: &mut DistSpec, floor: f64) {
        if let DistSpec::Uniform { lower, upper } = d {
            if *lower < floor && floor < *upper {
                *lower = floor;
            }
        }
    }
    s.reserve = tau;
    lift(&mut s.opponent.value, tau);
    let gamma = s.opponent.value.lower();
    lift(&mut s.opponent.wealth, gamma);
    if let Some(k) = &mut s.levelk {
        lift(&mut k.value, tau);
        let gamma = k.value.lower();
        lift(&mut k.wealth, gamma);
    }
    if let Some(l3) = &mut s.level3 {
        lift(&mut l3.value, tau);
        lift(&mut l3.opponent_value, tau);
    }
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    if a.steps < 2 {
        return Err(CliError::Usage(format!("--steps must be at least 2, got {}", a.steps)));
    }
    if !(a.from.is_finite() && a.to.is_finite()) {
        return Err(CliError::Usage("--from and --to must be finite".into()));
    }
    let p = prepare(&a.run)?;
    if a.param == SweepParam::Q && a.run.concept != ConceptArg::Level2 {
        return Err(CliError::Usage("sweeping q needs --concept level-2".into()));
    }
    let grid: Vec<f64> = (0..a.steps)
        .map(|i| a.from + (a.to - a.from) * i as f64 / (a.steps - 1) as f64)
        .collect();
    eprintln!("seed: {}", p.seed);
    let rows = with_threads(a.run.threads, || sweep_rows(&a, &p, &grid))??;
    let mut w = csv::Writer::from_writer(writer(&a.out)?);
    w.write_record([a.param.column(), "E(b*)", "win", "Psi"]).map_err(csv_error)?;
    let decimals = match a.param {
        SweepParam::RiskB | SweepParam::Q => 4,
        SweepParam::WealthB | SweepParam::Tau => 2,
    };
    for (x, e) in grid.iter().zip(&rows) {
        w.write_record([
            format!("{x:.decimals$}"),
            format!("{:.2}", e.bid.mean),
            format!("{:.3}", e.win_probability),
            format!("{:.2}", e.expected_utility),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn sweep_rows(a: &SweepArgs, p: &Prepared, grid: &[f64]) -> CliResult<Vec<ExpectedBid>> {
    let level2 = a.run.concept == ConceptArg::Level2;
    // The opponent's bid fraction depends on neither r_B nor w_B.
    let shared_q = match a.param {
        SweepParam::RiskB | SweepParam::WealthB if level2 => Some(solve_level2(&p.scenario, p.n, p.seed)?.q),
        _ => None,
    };
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut s = p.scenario.clone();
        match a.param {
            SweepParam::RiskB => s.bidder.risk = x,
            SweepParam::WealthB => s.bidder.wealth = x,
            SweepParam::Tau => lift_floors(&mut s, x),
            SweepParam::Q => {}
        }
        s.validate()?;
        let e = if a.param == SweepParam::Q {
            solve_level2_with_q(&s, x, p.n, p.seed)?.bid
        } else if let Some(q) = shared_q {
            solve_level2_with_q(&s, q, p.n, p.seed)?.bid
        } else {
            match solve_outcome(&a.run, &Prepared { scenario: s, seed: p.seed, n: p.n })? {
                Outcome::Single(sol) => *sol.expected_bid(),
                Outcome::Average(avg) => {
                    return Err(CliError::Usage(format!(
                        "sweep needs a single concept (average bid would be {:.2})",
                        avg.bid
                    )))
                }
            }
        };
        out.push(e);
    }
    Ok(out)
}
