//! Stochastic reset clocks.
//!
//! A clock's clockwork is a pointer on a circle of `d` positions. Every
//! application of the clock map moves it forward by a random offset `k`
//! drawn from a fixed [`JumpDistribution`]; whenever the cumulative position
//! reaches or passes a multiple of `d` the clock emits a tick and (in
//! [`TickMode::Reset`]) restarts exactly at position zero.

use rand::Rng;

use crate::matrix::{BandedMatrix, DenseMatrix};
use crate::{Error, Expectation, Result, Scalar};

/// Absolute tolerance on the total probability mass.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Homogeneous forward-jump law `p[k]`, `k = 0..=d`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDistribution<T> {
    cycle: usize,
    probs: Vec<T>,
    cdf: Vec<f64>,
}

impl<T: Scalar> JumpDistribution<T> {
    /// Builds the law for a circle of `cycle` positions.
    ///
    /// `probs[k]` is the probability of jumping `k` positions; missing trailing
    /// entries are zero. Offsets above `cycle` must carry no mass.
    pub fn new(cycle: usize, mut probs: Vec<T>) -> Result<Self> {
        if cycle == 0 {
            return Err(Error::InvalidParameter(
                "cycle length must be positive".into(),
            ));
        }
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no offsets given".into()));
        }
        let zero = T::zero();
        let one = T::one();
        for (k, p) in probs.iter().enumerate() {
            if *p < zero || *p > one {
                return Err(Error::InvalidDistribution(format!(
                    "p[{k}] = {p:?} outside [0, 1]"
                )));
            }
            if k > cycle && *p > zero {
                return Err(Error::InvalidDistribution(format!(
                    "offset {k} exceeds cycle length {cycle}"
                )));
            }
        }
        probs.resize(cycle + 1, T::zero());
        let total = probs.iter().cloned().fold(T::zero(), |a, b| a + b);
        if (total.clone() - one).abs_value() > T::from_real(NORMALIZATION_TOLERANCE) {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total:?}"
            )));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p.as_f64();
                acc
            })
            .collect();
        Ok(Self { cycle, probs, cdf })
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    /// Probabilities for offsets `0..=d`.
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, offset: usize) -> T {
        self.probs.get(offset).cloned().unwrap_or_else(T::zero)
    }

    /// Largest offset with positive probability.
    pub fn max_offset(&self) -> usize {
        self.probs.iter().rposition(|p| *p > T::zero()).unwrap_or(0)
    }

    /// Inverse-CDF draw: offset `k` is returned for `u` in `[F(k-1), F(k))`.
    pub fn sample_offset(&self, u: f64) -> usize {
        match self.cdf.iter().position(|&c| u < c) {
            Some(k) => k,
            // u at or above the rounded total mass
            None => self.max_offset(),
        }
    }
}

/// How the pointer behaves when a tick is emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TickMode {
    /// Overshoot past position zero is discarded.
    #[default]
    Reset,
    /// The pointer keeps its overshoot; used to compare against the
    /// relative-walk analysis, which ignores resets.
    Modular,
}

/// A homogeneous stochastic clock started from a basis position.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticClock<T> {
    jumps: JumpDistribution<T>,
    initial_position: usize,
    mode: TickMode,
}

/// Mutable state of one clock during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClockRunState {
    pub position: usize,
    /// Forward positions travelled, including reset corrections.
    pub progress: u64,
    pub ticks_emitted: u64,
    pub applications: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickEvent {
    pub application_index: u64,
    pub tick_number: u64,
}

impl<T: Scalar> StochasticClock<T> {
    pub fn new(jumps: JumpDistribution<T>, initial_position: usize) -> Result<Self> {
        if initial_position >= jumps.cycle() {
            return Err(Error::InvalidParameter(format!(
                "initial position {initial_position} not below cycle length {}",
                jumps.cycle()
            )));
        }
        Ok(Self {
            jumps,
            initial_position,
            mode: TickMode::Reset,
        })
    }

    /// Ladder clock: one step forward with probability `delta`, else stay.
    pub fn ladder(d: usize, delta: T) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be positive".into()));
        }
        if delta < T::zero() || delta > T::one() {
            return Err(Error::InvalidParameter(format!(
                "step probability {delta:?} outside [0, 1]"
            )));
        }
        let stay = T::one() - delta.clone();
        Self::new(JumpDistribution::new(d, vec![stay, delta])?, 0)
    }

    /// Deterministic clock ticking every `d` applications.
    pub fn perfect(d: usize) -> Result<Self> {
        Self::ladder(d, T::one())
    }

    /// Clock that never moves.
    pub fn identity(d: usize) -> Result<Self> {
        Self::ladder(d, T::zero())
    }

    pub fn with_initial_position(mut self, position: usize) -> Result<Self> {
        if position >= self.cycle() {
            return Err(Error::InvalidParameter(format!(
                "initial position {position} not below cycle length {}",
                self.cycle()
            )));
        }
        self.initial_position = position;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: TickMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn jumps(&self) -> &JumpDistribution<T> {
        &self.jumps
    }

    pub fn cycle(&self) -> usize {
        self.jumps.cycle()
    }

    pub fn initial_position(&self) -> usize {
        self.initial_position
    }

    pub fn mode(&self) -> TickMode {
        self.mode
    }

    pub fn start(&self) -> ClockRunState {
        ClockRunState {
            position: self.initial_position,
            ..ClockRunState::default()
        }
    }

    /// One application of the clock map driven by the uniform variate `u`.
    pub fn step(&self, state: &ClockRunState, u: f64) -> (ClockRunState, bool) {
        let mut next = *state;
        let ticked = self.advance(&mut next, u);
        (next, ticked)
    }

    /// In-place form of [`step`](Self::step).
    pub fn advance(&self, state: &mut ClockRunState, u: f64) -> bool {
        let d = self.cycle() as u64;
        let offset = self.jumps.sample_offset(u) as u64;
        let before = state.progress + self.initial_position as u64;
        let mut after = before + offset;
        let ticked = after / d > before / d;
        if ticked {
            state.ticks_emitted += 1;
            if self.mode == TickMode::Reset {
                after = after / d * d;
            }
        }
        state.progress = after - self.initial_position as u64;
        state.position = (after % d) as usize;
        state.applications += 1;
        ticked
    }

    /// Distance of the single-application clockwork channel from the identity:
    /// `1 - p[0]`.
    pub fn epsilon_continuity(&self) -> T {
        T::one() - self.jumps.prob(0)
    }

    /// Exact mean number of applications between consecutive ticks.
    ///
    /// Solves the first-passage system from position zero; only meaningful for
    /// [`TickMode::Reset`], where inter-tick times are i.i.d.
    pub fn expected_jumps_per_tick_exact(&self) -> Expectation<T> {
        let d = self.cycle();
        let stay = self.jumps.prob(0);
        if stay == T::one() {
            return Expectation::Infinite;
        }
        let reach = self.jumps.max_offset().min(d - 1);
        let mut system = BandedMatrix::zeros(d, 0, reach);
        for j in 0..d {
            system.add(j, j, T::one() - stay.clone());
            for k in 1..=reach {
                if j + k < d {
                    system.add(j, j + k, -self.jumps.prob(k));
                }
            }
        }
        match system.solve(vec![T::one(); d]) {
            Some(sol) => Expectation::Finite(sol[0].clone()),
            None => Expectation::Infinite,
        }
    }

    /// One-application transition matrix on positions `0..d`.
    pub fn transition_matrix(&self) -> DenseMatrix<T> {
        let d = self.cycle();
        let mut m = DenseMatrix::zeros(d, d);
        for j in 0..d {
            for (k, p) in self.jumps.probs().iter().enumerate() {
                let target = match self.mode {
                    TickMode::Reset if j + k >= d => 0,
                    _ => (j + k) % d,
                };
                m.add_at(j, target, p.clone());
            }
        }
        m
    }

    /// Runs the clock until `max_ticks` ticks or `cap` applications.
    pub fn sample_ticks<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        max_ticks: u64,
        cap: u64,
    ) -> Vec<TickEvent> {
        let mut state = self.start();
        let mut events = Vec::new();
        while state.ticks_emitted < max_ticks && state.applications < cap {
            if self.advance(&mut state, rng.gen::<f64>()) {
                events.push(TickEvent {
                    application_index: state.applications,
                    tick_number: state.ticks_emitted,
                });
            }
        }
        events
    }
}
