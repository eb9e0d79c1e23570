//! The Alternate Ticks Game.
//!
//! Two clocks with the same cycle length are applied once each per round. The
//! players score as long as their ticks strictly alternate; the first tick by
//! either player fixes who leads. Ticks landing in the same round are ordered
//! so that the player expected to tick next goes first, so a simultaneous pair
//! never breaks alternation.
//!
//! Positions are tracked as `x = initial_position + progress`, so a clock has
//! emitted `floor(x / d)` ticks. The relative position is `Q = x_A - x_B`. The
//! leader-oriented value `W` equals `Q` unless player B ticked first, in which
//! case it is `-Q`; the halting boundaries are stated on `W`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clock_model::StochasticClock;
use crate::{Error, Result, Scalar};

pub const DEFAULT_APPLICATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    A,
    B,
}

impl Player {
    pub fn other(self) -> Self {
        match self {
            Player::A => Player::B,
            Player::B => Player::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    Violation,
    CapReached,
}

/// Two clocks, their starting offset and Monte Carlo settings.
#[derive(Debug, Clone)]
pub struct GameConfig<T> {
    clock_a: StochasticClock<T>,
    clock_b: StochasticClock<T>,
    initial_offset: i64,
    pub application_cap: u64,
    pub seed: u64,
    pub runs: usize,
}

impl<T: Scalar> GameConfig<T> {
    /// Places the clocks so that `Q^0 = z0`: the player ahead starts at
    /// position `|z0|`, the other at zero.
    pub fn new(clock_a: StochasticClock<T>, clock_b: StochasticClock<T>, z0: i64) -> Result<Self> {
        let d = clock_a.cycle();
        if clock_b.cycle() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: clock_b.cycle(),
            });
        }
        if z0.unsigned_abs() as usize >= d {
            return Err(Error::InvalidConfig(format!(
                "initial offset {z0} must satisfy |z0| < d = {d}"
            )));
        }
        let (ja, jb) = if z0 >= 0 {
            (z0 as usize, 0)
        } else {
            (0, (-z0) as usize)
        };
        Ok(Self {
            clock_a: clock_a.with_initial_position(ja)?,
            clock_b: clock_b.with_initial_position(jb)?,
            initial_offset: z0,
            application_cap: DEFAULT_APPLICATION_CAP,
            seed: 0,
            runs: 500,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.application_cap = cap;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn clock_a(&self) -> &StochasticClock<T> {
        &self.clock_a
    }

    pub fn clock_b(&self) -> &StochasticClock<T> {
        &self.clock_b
    }

    pub fn cycle(&self) -> usize {
        self.clock_a.cycle()
    }

    pub fn initial_offset(&self) -> i64 {
        self.initial_offset
    }

    pub fn validate(&self) -> Result<()> {
        if self.application_cap == 0 {
            return Err(Error::InvalidConfig(
                "application cap must be at least 1".into(),
            ));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        Ok(())
    }

    /// Randomness for one run; depends only on `(seed, run_index)`.
    pub fn run_rng(&self, run_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(run_index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickRecord {
    pub owner: Player,
    pub application_index: u64,
}

/// Scalar outcome of one game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameSummary {
    pub halt_reason: HaltReason,
    /// Alternating ticks per player: `min(valid_a, valid_b)`.
    pub score: u64,
    pub valid_a: u64,
    pub valid_b: u64,
    /// All ticks emitted through the halting round, violating tick included.
    pub ticks_a: u64,
    pub ticks_b: u64,
    pub applications_used: u64,
    pub leader: Option<Player>,
    pub simultaneous_rounds: u64,
    pub q_min: i64,
    pub q_max: i64,
    /// Extremes of the leader-oriented walk over rounds that ended alive.
    pub w_alive_min: i64,
    pub w_alive_max: i64,
    /// Leader-oriented walk value after the last round.
    pub w_final: i64,
}

/// Full record of one game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTranscript {
    pub summary: GameSummary,
    pub ticks: Vec<TickRecord>,
}

struct Alternation {
    leader: Option<Player>,
    next: Option<Player>,
    valid_a: u64,
    valid_b: u64,
}

impl Alternation {
    /// Registers a tick; `false` means it broke alternation.
    fn accept(&mut self, owner: Player) -> bool {
        match self.next {
            Some(expected) if expected != owner => return false,
            None => self.leader = Some(owner),
            _ => {}
        }
        match owner {
            Player::A => self.valid_a += 1,
            Player::B => self.valid_b += 1,
        }
        self.next = Some(owner.other());
        true
    }

    fn orient(&self, q: i64) -> i64 {
        if self.leader == Some(Player::B) {
            -q
        } else {
            q
        }
    }
}

fn play<T: Scalar>(
    config: &GameConfig<T>,
    run_index: u64,
    mut log: Option<&mut Vec<TickRecord>>,
) -> GameSummary {
    let mut rng = config.run_rng(run_index);
    let (ca, cb) = (&config.clock_a, &config.clock_b);
    let (ja, jb) = (ca.initial_position() as i64, cb.initial_position() as i64);
    let mut sa = ca.start();
    let mut sb = cb.start();
    let mut alt = Alternation {
        leader: None,
        next: None,
        valid_a: 0,
        valid_b: 0,
    };
    let q0 = ja - jb;
    let (mut q_min, mut q_max) = (q0, q0);
    let (mut w_min, mut w_max) = (q0, q0);
    let mut w_final = q0;
    let mut simultaneous = 0;
    let mut halt = HaltReason::CapReached;

    while sa.applications < config.application_cap {
        let ta = ca.advance(&mut sa, rng.gen::<f64>());
        let tb = cb.advance(&mut sb, rng.gen::<f64>());
        let round = sa.applications;
        let order: &[Player] = match (ta, tb) {
            (true, true) => {
                simultaneous += 1;
                if alt.next == Some(Player::B) {
                    &[Player::B, Player::A]
                } else {
                    &[Player::A, Player::B]
                }
            }
            (true, false) => &[Player::A],
            (false, true) => &[Player::B],
            (false, false) => &[],
        };
        let mut violated = false;
        for &owner in order {
            if let Some(log) = log.as_deref_mut() {
                log.push(TickRecord {
                    owner,
                    application_index: round,
                });
            }
            if !alt.accept(owner) {
                violated = true;
                break;
            }
        }
        let q = (ja + sa.progress as i64) - (jb + sb.progress as i64);
        q_min = q_min.min(q);
        q_max = q_max.max(q);
        let w = alt.orient(q);
        w_final = w;
        if violated {
            halt = HaltReason::Violation;
            break;
        }
        w_min = w_min.min(w);
        w_max = w_max.max(w);
    }

    GameSummary {
        halt_reason: halt,
        score: alt.valid_a.min(alt.valid_b),
        valid_a: alt.valid_a,
        valid_b: alt.valid_b,
        ticks_a: sa.ticks_emitted,
        ticks_b: sb.ticks_emitted,
        applications_used: sa.applications,
        leader: alt.leader,
        simultaneous_rounds: simultaneous,
        q_min,
        q_max,
        w_alive_min: w_min,
        w_alive_max: w_max,
        w_final,
    }
}

/// Plays run `run_index` and keeps every tick.
pub fn play_once<T: Scalar>(config: &GameConfig<T>, run_index: u64) -> Result<GameTranscript> {
    config.validate()?;
    let mut ticks = Vec::new();
    let summary = play(config, run_index, Some(&mut ticks));
    Ok(GameTranscript { summary, ticks })
}

/// Plays run `run_index` without recording individual ticks.
pub fn play_summary<T: Scalar>(config: &GameConfig<T>, run_index: u64) -> Result<GameSummary> {
    config.validate()?;
    Ok(play(config, run_index, None))
}

/// Monte Carlo aggregate over `config.runs` games.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEstimate {
    /// Mean alternating score.
    pub mean: f64,
    pub std_error: f64,
    pub runs: usize,
    pub capped_runs: usize,
    /// Mean of `applications_used / E(Y_A)`, the number of inter-tick periods
    /// of clock A that fit into the game.
    pub renewal_mean: f64,
    pub renewal_std_error: f64,
    pub mean_applications: f64,
    pub simultaneous_rounds: u64,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs are played in parallel but aggregated in run order, so the result is
/// independent of the worker count.
pub fn estimate_score<T: Scalar>(config: &GameConfig<T>) -> Result<ScoreEstimate> {
    config.validate()?;
    if config.runs < 2 {
        return Err(Error::InvalidConfig(
            "score estimate needs at least 2 runs".into(),
        ));
    }
    let summaries: Vec<GameSummary> = (0..config.runs as u64)
        .into_par_iter()
        .map(|i| play(config, i, None))
        .collect();
    Ok(aggregate(config, &summaries))
}

pub fn aggregate<T: Scalar>(config: &GameConfig<T>, summaries: &[GameSummary]) -> ScoreEstimate {
    let period = config.clock_a.expected_jumps_per_tick_exact().to_f64();
    let scores: Vec<f64> = summaries.iter().map(|s| s.score as f64).collect();
    let renewal: Vec<f64> = summaries
        .iter()
        .map(|s| s.applications_used as f64 / period)
        .collect();
    let apps: Vec<f64> = summaries
        .iter()
        .map(|s| s.applications_used as f64)
        .collect();
    let (mean, std_error) = mean_and_stderr(&scores);
    let (renewal_mean, renewal_std_error) = mean_and_stderr(&renewal);
    ScoreEstimate {
        mean,
        std_error,
        runs: summaries.len(),
        capped_runs: summaries
            .iter()
            .filter(|s| s.halt_reason == HaltReason::CapReached)
            .count(),
        renewal_mean,
        renewal_std_error,
        mean_applications: mean_and_stderr(&apps).0,
        simultaneous_rounds: summaries.iter().map(|s| s.simultaneous_rounds).sum(),
    }
}

/// Which halting boundaries a game reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryReport {
    /// Raw `Q` left `[0, d]` at some round.
    pub necessary_touched: bool,
    /// Raw `Q` left `[-d, 2d]` at some round.
    pub sufficient_touched: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoundaryViolation {
    #[error("game halted by violation with W = {w} inside [0, {d}] (Q range {q_min}..={q_max})")]
    HaltInsideNecessary {
        w: i64,
        q_min: i64,
        q_max: i64,
        d: i64,
    },
    #[error("game stayed alive with W in {w_min}..={w_max}, outside [-{d}, {two_d}]")]
    AliveOutsideSufficient {
        w_min: i64,
        w_max: i64,
        d: i64,
        two_d: i64,
    },
}

/// Checks a game against the halting boundaries.
///
/// A halt by violation needs `W > d` or `W < 0` in the halting round (and raw
/// `Q` outside `[0, d]` at some point); every round that ends alive must have
/// `W` in `[-d, 2d]`.
pub fn check_halting_boundaries(
    transcript: &GameTranscript,
    d: i64,
) -> std::result::Result<BoundaryReport, BoundaryViolation> {
    check_summary(&transcript.summary, d)
}

pub fn check_summary(
    s: &GameSummary,
    d: i64,
) -> std::result::Result<BoundaryReport, BoundaryViolation> {
    let report = BoundaryReport {
        necessary_touched: s.q_max > d || s.q_min < 0,
        sufficient_touched: s.q_max > 2 * d || s.q_min < -d,
    };
    if s.halt_reason == HaltReason::Violation
        && !((s.w_final > d || s.w_final < 0) && report.necessary_touched)
    {
        return Err(BoundaryViolation::HaltInsideNecessary {
            w: s.w_final,
            q_min: s.q_min,
            q_max: s.q_max,
            d,
        });
    }
    if s.w_alive_max > 2 * d || s.w_alive_min < -d {
        return Err(BoundaryViolation::AliveOutsideSufficient {
            w_min: s.w_alive_min,
            w_max: s.w_alive_max,
            d,
            two_d: 2 * d,
        });
    }
    Ok(report)
}
