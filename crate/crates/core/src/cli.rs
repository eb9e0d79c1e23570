//! Command-line front end.
//!
//! Every subcommand prints a table to standard output and, with `--out`,
//! writes the same rows as CSV. Exit status: 0 success, 1 invalid arguments,
//! 2 verification failure, 3 I/O failure.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atgame::{estimate_score, GameConfig, ScoreEstimate, DEFAULT_APPLICATION_CAP};
use crate::clock_model::{JumpDistribution, StochasticClock};
use crate::matrix::DenseMatrix;
use crate::quantum_verify::{
    apply_channel_two_ways, build_certificate, build_kraus, verify_continuity_certificate,
    POSITIVITY_TOLERANCE, RESIDUAL_TOLERANCE,
};
use crate::walk_analysis::{
    closed_form_d, continuity_bounds_for_clock, delta_distribution, ladder_bounds,
    perfect_vs_ladder_bounds, solve_expected_absorption, walk_bounds, AbsorptionProblem,
    BoundReport, Boundary,
};
use crate::{Error, Expectation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Header of the score sweep CSV.
pub const SWEEP_HEADER: &str = "d,delta,n_mean,n_stderr,runs,capped_runs,n_lower_headline,n_upper_headline,n_lower_exact,n_upper_exact";
pub const BOUNDS_HEADER: &str = "d,delta,variant,d_lower,d_upper,n_lower,n_upper";
pub const ABSORB_HEADER: &str = "d,delta,z,boundary,solver,closed_form,rel_error";
pub const VERIFY_HEADER: &str = "d,delta,check,value,threshold,status";

const SIGNIFICANT_DIGITS: i32 = 10;
const CUSTOM_SUM_TOLERANCE: f64 = 1e-9;
const VERIFY_TRIALS: usize = 1000;
const VERIFY_DENSITIES: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "resetclock",
    version,
    about = "Reset clocks and the alternate ticks game"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo score of two identical clocks, with analytic bounds.
    Simulate(ExperimentArgs),
    /// Analytic bounds only.
    Bounds(ExperimentArgs),
    /// Exact absorption times against the quadratic closed form.
    Absorb(ExperimentArgs),
    /// Numerical checks of the channel, Kraus and certificate matrices.
    Verify(ExperimentArgs),
    /// Ladder score sweep over d = 20..200 with the reference defaults.
    #[command(name = "reproduce-fig1")]
    ReproduceFig1(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Cycle length, `single` or `start:stop:step` (stop inclusive).
    #[arg(long)]
    pub d: Option<DRange>,
    /// Step probability of the ladder clock.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Games per cycle length.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed; run i uses stream i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial offset, an integer or `half` for floor(d/2).
    #[arg(long)]
    pub z0: Option<InitialOffset>,
    /// Application cap per game.
    #[arg(long)]
    pub cap: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `ladder`, `perfect` or `custom:p0,p1,...`.
    #[arg(long)]
    pub clock: Option<ClockSpec>,
}

/// Inclusive arithmetic range of cycle lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DRange {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl DRange {
    pub fn single(d: usize) -> Self {
        Self {
            start: d,
            stop: d,
            step: 1,
        }
    }

    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.stop).step_by(self.step).collect()
    }
}

impl FromStr for DRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad cycle length {p:?}: {e}"))
        };
        let range = match parts.as_slice() {
            [one] => Self::single(num(one)?),
            [a, b, c] => Self {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => return Err(format!("expected `d` or `start:stop:step`, got {s:?}")),
        };
        if range.start == 0 {
            return Err("cycle length must be positive".into());
        }
        if range.step == 0 || range.start > range.stop {
            return Err(format!("empty range {s:?}"));
        }
        Ok(range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialOffset {
    Half,
    Fixed(i64),
}

impl InitialOffset {
    pub fn resolve(self, d: usize) -> i64 {
        match self {
            InitialOffset::Half => (d / 2) as i64,
            InitialOffset::Fixed(z) => z,
        }
    }
}

impl FromStr for InitialOffset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "half" {
            return Ok(InitialOffset::Half);
        }
        s.parse()
            .map(InitialOffset::Fixed)
            .map_err(|_| format!("expected an integer or `half`, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClockSpec {
    Ladder,
    Perfect,
    /// Offset probabilities, already normalised.
    Custom(Vec<f64>),
}

impl FromStr for ClockSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ladder" => return Ok(ClockSpec::Ladder),
            "perfect" => return Ok(ClockSpec::Perfect),
            _ => {}
        }
        let Some(list) = s.strip_prefix("custom:") else {
            return Err(format!("unknown clock {s:?}"));
        };
        let probs = list
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad probability {p:?}: {e}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err("probabilities must be finite and non-negative".into());
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > CUSTOM_SUM_TOLERANCE {
            return Err(format!("probabilities sum to {sum}, not 1"));
        }
        Ok(ClockSpec::Custom(
            probs.into_iter().map(|p| p / sum).collect(),
        ))
    }
}

impl ClockSpec {
    pub fn build(&self, d: usize, delta: f64) -> crate::Result<StochasticClock<f64>> {
        match self {
            ClockSpec::Ladder => StochasticClock::ladder(d, delta),
            ClockSpec::Perfect => StochasticClock::perfect(d),
            ClockSpec::Custom(p) => {
                if p.len() > d + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "{} offsets given for cycle length {d}",
                        p.len()
                    )));
                }
                StochasticClock::new(JumpDistribution::new(d, p.clone())?, 0)
            }
        }
    }
}

/// Settings after defaults are applied.
#[derive(Debug, Clone)]
struct Settings {
    d: DRange,
    delta: f64,
    runs: usize,
    seed: u64,
    z0: InitialOffset,
    cap: u64,
    out: Option<PathBuf>,
    clock: ClockSpec,
}

impl Settings {
    fn from_args(
        args: ExperimentArgs,
        default_d: Option<DRange>,
        default_runs: usize,
    ) -> Result<Self, Failure> {
        let d = args
            .d
            .or(default_d)
            .ok_or_else(|| Failure::Invalid("--d is required".into()))?;
        let s = Self {
            d,
            delta: args.delta.unwrap_or(0.05),
            runs: args.runs.unwrap_or(default_runs),
            seed: args.seed.unwrap_or(0),
            z0: args.z0.unwrap_or(InitialOffset::Half),
            cap: args.cap.unwrap_or(DEFAULT_APPLICATION_CAP),
            out: args.out,
            clock: args.clock.unwrap_or(ClockSpec::Ladder),
        };
        if !(0.0..=1.0).contains(&s.delta) {
            return Err(Failure::Invalid(format!(
                "--delta {} outside [0, 1]",
                s.delta
            )));
        }
        if s.runs == 0 {
            return Err(Failure::Invalid("--runs must be at least 1".into()));
        }
        if s.cap == 0 {
            return Err(Failure::Invalid("--cap must be positive".into()));
        }
        Ok(s)
    }

    fn clock(&self, d: usize) -> Result<StochasticClock<f64>, Failure> {
        self.clock.build(d, self.delta).map_err(Failure::from)
    }
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Verification(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid arguments: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Verification(_) => EXIT_VERIFICATION,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

/// Decimal rendering with 10 significant digits.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", (SIGNIFICANT_DIGITS - 1) as usize, 0.0);
    }
    // round first so that 9.9999999999 -> 10.00000000 picks the right exponent
    let sci = format!("{:.*e}", (SIGNIFICANT_DIGITS - 1) as usize, x);
    let exponent: i32 = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (SIGNIFICANT_DIGITS - 1 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with("-") && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn format_expectation(e: &Option<Expectation<f64>>) -> String {
    match e {
        None => String::new(),
        Some(e) => format_sig(e.to_f64()),
    }
}

/// A CSV table that is also rendered as aligned text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &str) -> Self {
        Self {
            header: header.split(',').map(String::from).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = line(&self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Tables go to `stdout`, diagnostics to `stderr`.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {f}");
            f.code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (table, out, verdict) = match command {
        Command::Simulate(a) => {
            let s = Settings::from_args(a, None, 500)?;
            (sweep(&s)?, s.out, Ok(()))
        }
        Command::ReproduceFig1(a) => {
            let mut s = Settings::from_args(
                a,
                Some(DRange {
                    start: 20,
                    stop: 200,
                    step: 20,
                }),
                500,
            )?;
            s.clock = ClockSpec::Ladder;
            (sweep(&s)?, s.out, Ok(()))
        }
        Command::Bounds(a) => {
            let s = Settings::from_args(a, None, 1)?;
            (bounds_table(&s)?, s.out, Ok(()))
        }
        Command::Absorb(a) => {
            let s = Settings::from_args(a, None, 1)?;
            (absorb_table(&s)?, s.out, Ok(()))
        }
        Command::Verify(a) => {
            let s = Settings::from_args(a, Some(DRange::single(8)), 1)?;
            let (table, failed) = verify_table(&s)?;
            let verdict = if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verification(failed.join(", ")))
            };
            (table, s.out, verdict)
        }
    };
    stdout
        .write_all(table.render().as_bytes())
        .map_err(|e| Failure::Io(e.to_string()))?;
    if let Some(path) = out {
        let bytes = table.to_csv().map_err(|e| Failure::Io(e.to_string()))?;
        std::fs::write(&path, bytes)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    verdict
}

/// The four tick-bound columns of a sweep row.
fn tick_bounds(
    s: &Settings,
    clock: &StochasticClock<f64>,
    z0: i64,
) -> Result<[Option<Expectation<f64>>; 4], Failure> {
    let d = clock.cycle() as i64;
    if s.clock == ClockSpec::Ladder && s.delta > 0.0 && s.delta < 1.0 {
        let (headline, exact) = ladder_bounds(d, s.delta)?;
        return Ok([
            headline.n_lower,
            headline.n_upper,
            exact.n_lower,
            exact.n_upper,
        ]);
    }
    let (h_lower, h_upper) = match continuity_bounds_for_clock(clock) {
        Ok(r) => (r.n_lower, r.n_upper),
        Err(_) => (None, None),
    };
    let period = clock.expected_jumps_per_tick_exact();
    let delta = delta_distribution(clock.jumps(), clock.jumps())?;
    let per_tick = |boundary| -> crate::Result<Option<Expectation<f64>>> {
        let problem = AbsorptionProblem::for_game(delta.clone(), d, z0, boundary)?;
        let apps = solve_expected_absorption(&problem);
        Ok(Some(match (apps, &period) {
            (Expectation::Finite(a), Expectation::Finite(p)) => Expectation::Finite(a / p),
            (Expectation::Infinite, Expectation::Finite(_)) => Expectation::Infinite,
            (_, Expectation::Infinite) => Expectation::Finite(0.0),
        }))
    };
    Ok([
        h_lower,
        h_upper,
        per_tick(Boundary::Necessary)?,
        per_tick(Boundary::Sufficient)?,
    ])
}

fn step_probability(clock: &StochasticClock<f64>) -> f64 {
    clock.epsilon_continuity()
}

fn sweep(s: &Settings) -> Result<Table, Failure> {
    if s.runs < 2 {
        return Err(Failure::Invalid(
            "score estimates need --runs of at least 2".into(),
        ));
    }
    let mut table = Table::new(SWEEP_HEADER);
    for d in s.d.values() {
        let clock = s.clock(d)?;
        let z0 = s.z0.resolve(d);
        let config = GameConfig::new(clock.clone(), clock.clone(), z0)?
            .with_cap(s.cap)
            .with_seed(s.seed)
            .with_runs(s.runs);
        let est: ScoreEstimate = estimate_score(&config)?;
        let bounds = tick_bounds(s, &clock, z0)?;
        let mut row = vec![
            d.to_string(),
            format_sig(step_probability(&clock)),
            format_sig(est.mean),
            format_sig(est.std_error),
            est.runs.to_string(),
            est.capped_runs.to_string(),
        ];
        row.extend(bounds.iter().map(format_expectation));
        table.rows.push(row);
    }
    Ok(table)
}

fn bound_row(delta: f64, r: &BoundReport<f64>) -> Vec<String> {
    vec![
        r.d.to_string(),
        format_sig(delta),
        r.variant.to_string(),
        format_expectation(&r.d_lower),
        format_expectation(&r.d_upper),
        format_expectation(&r.n_lower),
        format_expectation(&r.n_upper),
    ]
}

fn bounds_table(s: &Settings) -> Result<Table, Failure> {
    let mut table = Table::new(BOUNDS_HEADER);
    for d in s.d.values() {
        let di = d as i64;
        match s.clock {
            ClockSpec::Perfect => {
                let r = perfect_vs_ladder_bounds(di, s.delta)?;
                table.rows.push(bound_row(s.delta, &r));
            }
            _ => {
                let clock = s.clock(d)?;
                let step = step_probability(&clock);
                if s.clock == ClockSpec::Ladder && s.delta > 0.0 && s.delta < 1.0 {
                    let (headline, exact) = ladder_bounds(di, s.delta)?;
                    table.rows.push(bound_row(step, &headline));
                    table.rows.push(bound_row(step, &exact));
                }
                let delta = delta_distribution(clock.jumps(), clock.jumps())?;
                table.rows.push(bound_row(step, &walk_bounds(di, &delta)?));
                if let Ok(r) = continuity_bounds_for_clock(&clock) {
                    table.rows.push(bound_row(step, &r));
                }
            }
        }
    }
    Ok(table)
}

fn absorb_table(s: &Settings) -> Result<Table, Failure> {
    let mut table = Table::new(ABSORB_HEADER);
    for d in s.d.values() {
        let clock = s.clock(d)?;
        let di = d as i64;
        let z = s.z0.resolve(d);
        let delta = delta_distribution(clock.jumps(), clock.jumps())?;
        for boundary in [Boundary::Necessary, Boundary::Sufficient] {
            let problem = AbsorptionProblem::for_game(delta.clone(), di, z, boundary)?;
            let solver = solve_expected_absorption(&problem);
            let closed = closed_form_d(di, z as f64, &delta, boundary)?;
            let rel = match (&solver, &closed) {
                (Expectation::Finite(a), Expectation::Finite(b)) => {
                    let scale = a.abs().max(b.abs());
                    if scale == 0.0 {
                        0.0
                    } else {
                        (a - b).abs() / scale
                    }
                }
                (Expectation::Infinite, Expectation::Infinite) => 0.0,
                _ => f64::INFINITY,
            };
            table.rows.push(vec![
                d.to_string(),
                format_sig(step_probability(&clock)),
                z.to_string(),
                boundary.as_str().to_string(),
                format_sig(solver.to_f64()),
                format_sig(closed.to_f64()),
                format_sig(rel),
            ]);
        }
    }
    Ok(table)
}

/// Random density matrix `A A^T / tr(A A^T)`.
fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseMatrix<f64> {
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    let rho = a.mul(&a.transpose());
    let tr = rho.trace();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // symmetrise against rounding in the product
            out.set(i, j, 0.5 * (rho.get(i, j) + rho.get(j, i)) / tr);
        }
    }
    out
}

fn verify_table(s: &Settings) -> Result<(Table, Vec<String>), Failure> {
    let mut table = Table::new(VERIFY_HEADER);
    let mut failed = Vec::new();
    for d in s.d.values() {
        let clock = s.clock(d)?;
        let step = step_probability(&clock);
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        rng.set_stream(d as u64);

        let kraus = build_kraus(&clock)?;
        let mut channel_diff: f64 = 0.0;
        for _ in 0..VERIFY_DENSITIES {
            let rho = random_density(&mut rng, kraus.states);
            channel_diff = channel_diff.max(apply_channel_two_ways(&clock, &rho)?.max_difference);
        }
        let pair = build_certificate(&clock)?;
        let report = verify_continuity_certificate(&pair, &clock, VERIFY_TRIALS, &mut rng);

        let upper = |name: &str, value: f64| {
            (
                name.to_string(),
                value,
                RESIDUAL_TOLERANCE,
                value <= RESIDUAL_TOLERANCE,
            )
        };
        let lower = |name: &str, value: f64| {
            (
                name.to_string(),
                value,
                POSITIVITY_TOLERANCE,
                value >= POSITIVITY_TOLERANCE,
            )
        };
        let checks = [
            upper("kraus_completeness", kraus.completeness_residual),
            upper("channel_equivalence", channel_diff),
            upper("certificate_identity", report.identity_residual),
            upper(
                "partial_trace_off_diagonal",
                report.partial_trace_off_diagonal,
            ),
            upper(
                "partial_trace_diagonal",
                report.partial_trace_diagonal_error,
            ),
            upper(
                "norm_minus_epsilon",
                (report.trace_norm - report.epsilon).abs(),
            ),
            lower("min_form_x", report.min_form_x),
            lower("min_form_z", report.min_form_z),
        ];
        for (name, value, threshold, ok) in checks {
            if !ok {
                failed.push(format!("{name} at d={d}"));
            }
            table.rows.push(vec![
                d.to_string(),
                format_sig(step),
                name,
                format_sig(value),
                format!("{threshold:e}"),
                if ok { "pass" } else { "fail" }.to_string(),
            ]);
        }
    }
    Ok((table, failed))
}
