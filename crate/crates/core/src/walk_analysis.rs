//! The relative-position walk `Q` between two clocks.
//!
//! Each round `Q` changes by `Δ = offset_A - offset_B`. The game is certainly
//! alive while `Q` stays in `[0, d]` and certainly over once it leaves
//! `[-d, 2d]`, so absorption times of the walk at those two boundary pairs
//! bracket the game length. This module computes those times exactly (banded
//! elimination), in closed form for symmetric increments, and the derived
//! bounds on the expected number of ticks.
//!
//! The walk treats every increment as if no reset happened; for ladder clocks
//! (maximal offset one) that is exact, for larger offsets it is an
//! approximation of the true game.

use std::fmt;

use rand::Rng;

use crate::clock_model::{JumpDistribution, StochasticClock};
use crate::matrix::BandedMatrix;
use crate::{Error, Expectation, Result, Scalar};

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Law of the per-round increment of the relative position.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaDistribution<T> {
    max_offset: usize,
    /// Index `k + max_offset` holds `P(Δ = k)`.
    probs: Vec<T>,
    symmetric: bool,
}

impl<T: Scalar> DeltaDistribution<T> {
    /// `centered[i]` is `P(Δ = i - m)` for a vector of odd length `2m + 1`.
    pub fn new(centered: Vec<T>) -> Result<Self> {
        if centered.len().is_multiple_of(2) {
            return Err(Error::InvalidDistribution(
                "centered increment vector must have odd length".into(),
            ));
        }
        if centered.iter().any(|p| *p < T::zero() || *p > T::one()) {
            return Err(Error::InvalidDistribution(
                "probability outside [0, 1]".into(),
            ));
        }
        let total = centered.iter().cloned().fold(T::zero(), |a, b| a + b);
        if (total.clone() - T::one()).abs_value() > T::from_real(1e-12) {
            return Err(Error::InvalidDistribution(format!(
                "increment probabilities sum to {total:?}"
            )));
        }
        let m = centered.len() / 2;
        let tol = T::from_real(SYMMETRY_TOLERANCE);
        let symmetric =
            (1..=m).all(|k| (centered[m + k].clone() - centered[m - k].clone()).abs_value() <= tol);
        Ok(Self {
            max_offset: m,
            probs: centered,
            symmetric,
        }
        .trimmed())
    }

    /// Symmetric law from `P(Δ = 0)` and `P(Δ = ±k)` for `k = 1..`.
    pub fn symmetric(stay: T, tail: &[T]) -> Result<Self> {
        let mut centered: Vec<T> = tail.iter().rev().cloned().collect();
        centered.push(stay);
        centered.extend(tail.iter().cloned());
        let dist = Self::new(centered)?;
        debug_assert!(dist.symmetric);
        Ok(dist)
    }

    fn trimmed(mut self) -> Self {
        let zero = T::zero();
        while self.max_offset > 0
            && self.probs[0] == zero
            && self.probs[self.probs.len() - 1] == zero
        {
            self.probs.pop();
            self.probs.remove(0);
            self.max_offset -= 1;
        }
        self
    }

    /// Largest `|k|` kept in the support vector.
    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    pub fn prob(&self, k: i64) -> T {
        let m = self.max_offset as i64;
        if k.abs() > m {
            T::zero()
        } else {
            self.probs[(k + m) as usize].clone()
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `Σ_k k² P(Δ = k)` over the full support.
    pub fn second_moment(&self) -> T {
        let m = self.max_offset as i64;
        (-m..=m).fold(T::zero(), |acc, k| {
            let kk = T::from_int(k * k);
            acc + kk * self.prob(k)
        })
    }

    pub fn mean(&self) -> T {
        let m = self.max_offset as i64;
        (-m..=m).fold(T::zero(), |acc, k| acc + T::from_int(k) * self.prob(k))
    }

    fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p.as_f64();
                acc
            })
            .collect()
    }
}

/// Law of `offset_A - offset_B` for independent draws from two clocks.
pub fn delta_distribution<T: Scalar>(
    a: &JumpDistribution<T>,
    b: &JumpDistribution<T>,
) -> Result<DeltaDistribution<T>> {
    if a.cycle() != b.cycle() {
        return Err(Error::DimensionMismatch {
            left: a.cycle(),
            right: b.cycle(),
        });
    }
    let ma = a.max_offset();
    let mb = b.max_offset();
    let m = ma.max(mb);
    let mut centered = vec![T::zero(); 2 * m + 1];
    for i in 0..=ma {
        for j in 0..=mb {
            let idx = (i as i64 - j as i64 + m as i64) as usize;
            let cur = std::mem::replace(&mut centered[idx], T::zero());
            centered[idx] = cur + a.prob(i) * b.prob(j);
        }
    }
    if a == b {
        // identical laws: remove round-off asymmetry from the product sums
        let two = T::from_int(2);
        for k in 1..=m {
            let avg = (centered[m + k].clone() + centered[m - k].clone()) / two.clone();
            centered[m + k] = avg.clone();
            centered[m - k] = avg;
        }
    }
    DeltaDistribution::new(centered)
}

/// Absorbing boundary pair for the relative walk of a `d`-position game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Absorb at `-1` and `d + 1`: leaving `[0, d]` is necessary for a halt.
    Necessary,
    /// Absorb at `-d - 1` and `2d + 1`: leaving `[-d, 2d]` forces a halt.
    Sufficient,
}

impl Boundary {
    pub fn limits(self, d: i64) -> (i64, i64) {
        match self {
            Boundary::Necessary => (-1, d + 1),
            Boundary::Sufficient => (-d - 1, 2 * d + 1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Necessary => "necessary",
            Boundary::Sufficient => "sufficient",
        }
    }
}

/// Expected time for the walk started at `start` to reach
/// `(-inf, lower] ∪ [upper, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionProblem<T> {
    pub delta: DeltaDistribution<T>,
    pub lower_boundary: i64,
    pub upper_boundary: i64,
    pub start: i64,
}

impl<T: Scalar> AbsorptionProblem<T> {
    pub fn new(delta: DeltaDistribution<T>, lower: i64, upper: i64, start: i64) -> Result<Self> {
        if upper - lower < 2 {
            return Err(Error::InvalidParameter(format!(
                "empty interior between {lower} and {upper}"
            )));
        }
        Ok(Self {
            delta,
            lower_boundary: lower,
            upper_boundary: upper,
            start,
        })
    }

    pub fn for_game(
        delta: DeltaDistribution<T>,
        d: i64,
        start: i64,
        boundary: Boundary,
    ) -> Result<Self> {
        let (lo, hi) = boundary.limits(d);
        Self::new(delta, lo, hi, start)
    }

    pub fn is_interior(&self, z: i64) -> bool {
        z > self.lower_boundary && z < self.upper_boundary
    }

    /// Simulates the walk once and returns the number of rounds until
    /// absorption, or `cap` if it is still inside.
    pub fn sample_absorption_steps<R: Rng + ?Sized>(&self, rng: &mut R, cap: u64) -> u64 {
        let cdf = self.delta.cdf();
        let m = self.delta.max_offset as i64;
        let mut z = self.start;
        let mut steps = 0;
        while self.is_interior(z) && steps < cap {
            let u: f64 = rng.gen();
            let idx = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
            z += idx as i64 - m;
            steps += 1;
        }
        steps
    }
}

/// Expected absorption times at every interior point `lower + 1 ..= upper - 1`.
///
/// Solves `D_z = 1 + Σ_k P(Δ = k) D_{z+k}` with `D = 0` outside the interior by
/// banded direct elimination.
pub fn solve_absorption_profile<T: Scalar>(
    delta: &DeltaDistribution<T>,
    lower: i64,
    upper: i64,
) -> Expectation<Vec<T>> {
    let n = (upper - lower - 1).max(0) as usize;
    if n == 0 {
        return Expectation::Finite(Vec::new());
    }
    let stay = delta.prob(0);
    if stay == T::one() {
        return Expectation::Infinite;
    }
    let m = delta.max_offset();
    let band = m.min(n - 1);
    let mut system = BandedMatrix::zeros(n, band, band);
    for i in 0..n {
        system.add(i, i, T::one() - stay.clone());
        for k in 1..=band as i64 {
            for step in [k, -k] {
                let j = i as i64 + step;
                if j >= 0 && (j as usize) < n {
                    system.add(i, j as usize, -delta.prob(step));
                }
            }
        }
    }
    match system.solve(vec![T::one(); n]) {
        Some(x) => Expectation::Finite(x),
        None => Expectation::Infinite,
    }
}

/// Exact expected absorption time of a single problem.
pub fn solve_expected_absorption<T: Scalar>(problem: &AbsorptionProblem<T>) -> Expectation<T> {
    if !problem.is_interior(problem.start) {
        return Expectation::Finite(T::zero());
    }
    match solve_absorption_profile(
        &problem.delta,
        problem.lower_boundary,
        problem.upper_boundary,
    ) {
        Expectation::Finite(profile) => Expectation::Finite(
            profile[(problem.start - problem.lower_boundary - 1) as usize].clone(),
        ),
        Expectation::Infinite => Expectation::Infinite,
    }
}

/// Quadratic solution `A + B z - z² / σ²` of the symmetric recurrence with
/// `D` vanishing at the two boundary points.
///
/// `z` may be fractional (the optimum `d / 2` for odd `d`).
pub fn closed_form_d<T: Scalar>(
    d: i64,
    z: T,
    delta: &DeltaDistribution<T>,
    boundary: Boundary,
) -> Result<Expectation<T>> {
    if !delta.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let (lo, hi) = boundary.limits(d);
    if z <= T::from_int(lo) || z >= T::from_int(hi) {
        return Ok(Expectation::Finite(T::zero()));
    }
    let variance = delta.second_moment();
    if variance.is_zero() {
        return Ok(Expectation::Infinite);
    }
    let dd = T::from_int(d);
    let constant = match boundary {
        Boundary::Necessary => T::from_int(d + 1),
        Boundary::Sufficient => T::from_int((d + 1) * (2 * d + 1)),
    };
    let numerator = constant + dd * z.clone() - z.clone() * z;
    Ok(Expectation::Finite(numerator / variance))
}

/// Which family of analytic bounds a [`BoundReport`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// Quadratic walk solution at `z = d/2`, any symmetric increments.
    WalkQuadratic,
    /// Envelope over all identical ε-continuous clocks with given `m`, `p_{0,m}`.
    ContinuityEnvelope,
    /// Leading-order ladder formulas as usually quoted.
    LadderHeadline,
    /// Ladder bounds evaluated exactly from the walk solution.
    LadderExact,
    /// Perfect clock against a ladder clock.
    PerfectVsLadder,
}

impl BoundVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundVariant::WalkQuadratic => "walk_quadratic",
            BoundVariant::ContinuityEnvelope => "continuity_envelope",
            BoundVariant::LadderHeadline => "ladder_headline",
            BoundVariant::LadderExact => "ladder_exact",
            BoundVariant::PerfectVsLadder => "perfect_vs_ladder",
        }
    }
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluated lower/upper bounds on expected applications (`D`) and ticks (`N`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub d: i64,
    pub variant: BoundVariant,
    pub d_lower: Option<Expectation<T>>,
    pub d_upper: Option<Expectation<T>>,
    pub n_lower: Option<Expectation<T>>,
    pub n_upper: Option<Expectation<T>>,
    pub notes: String,
}

fn finite<T>(v: T) -> Option<Expectation<T>> {
    Some(Expectation::Finite(v))
}

/// Bounds on `D_{d/2}` for identical clocks with symmetric increments.
///
/// `N` is left unset: the mean inter-tick time is not determined by `Δ`.
pub fn walk_bounds<T: Scalar>(d: i64, delta: &DeltaDistribution<T>) -> Result<BoundReport<T>> {
    if !delta.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let variance = delta.second_moment();
    let (lower, upper) = if variance.is_zero() {
        (Some(Expectation::Infinite), Some(Expectation::Infinite))
    } else {
        let dd = T::from_int(d);
        let four = T::from_int(4);
        let lo =
            (dd.clone() * dd.clone() / four.clone() + dd.clone() + T::one()) / variance.clone();
        let hi = (T::from_int(9) * dd.clone() * dd.clone() / four + T::from_int(3) * dd + T::one())
            / variance;
        (finite(lo), finite(hi))
    };
    Ok(BoundReport {
        d,
        variant: BoundVariant::WalkQuadratic,
        d_lower: lower,
        d_upper: upper,
        n_lower: None,
        n_upper: None,
        notes: "start z = d/2; applications only".into(),
    })
}

/// Tick envelope for identical ε-continuous clocks.
///
/// `max_offset` is the furthest jump `m` with probability `p_far = p_{0,m} > 0`;
/// `p_step` is the probability of a single-position jump.
pub fn continuity_bounds<T: Scalar>(
    d: i64,
    epsilon: T,
    max_offset: i64,
    p_far: T,
    p_step: T,
) -> Result<BoundReport<T>> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon:?} outside (0, 1)"
        )));
    }
    if max_offset < 1 || max_offset > d {
        return Err(Error::InvalidParameter(format!(
            "maximal offset {max_offset} outside 1..={d}"
        )));
    }
    if p_far <= T::zero() {
        return Err(Error::InvalidParameter("p_{0,m} must be positive".into()));
    }
    let dd = T::from_int(d);
    let m = T::from_int(max_offset);
    let two = T::from_int(2);
    let four = T::from_int(4);
    let lower = (dd.clone() + four.clone() + four.clone() / dd.clone()) * p_step
        / (four.clone()
            * m.clone()
            * m.clone()
            * epsilon.clone()
            * (two.clone() - epsilon.clone()));
    let upper = (T::from_int(9) * dd.clone() / four + T::from_int(3) + T::one() / dd)
        / (two * (T::one() - epsilon) * m * p_far);
    Ok(BoundReport {
        d,
        variant: BoundVariant::ContinuityEnvelope,
        d_lower: None,
        d_upper: None,
        n_lower: finite(lower),
        n_upper: finite(upper),
        notes: "loose envelope over all clocks sharing epsilon, m and p_{0,m}".into(),
    })
}

/// [`continuity_bounds`] with parameters read off a clock.
pub fn continuity_bounds_for_clock<T: Scalar>(
    clock: &StochasticClock<T>,
) -> Result<BoundReport<T>> {
    let jumps = clock.jumps();
    let m = jumps.max_offset();
    continuity_bounds(
        clock.cycle() as i64,
        clock.epsilon_continuity(),
        m as i64,
        jumps.prob(m),
        jumps.prob(1),
    )
}

/// Ladder-clock tick bounds: `(headline, exact)`.
///
/// The headline pair uses the leading coefficients `1/8, 1/2` and `5/8, 3/2`.
/// The exact pair divides the walk solution at `z = d/2` by `E(Y) = d/δ`;
/// its upper slope is `9/8`, not `5/8`, and both reports say so.
pub fn ladder_bounds<T: Scalar>(d: i64, delta: T) -> Result<(BoundReport<T>, BoundReport<T>)> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "step probability {delta:?} outside (0, 1)"
        )));
    }
    if d < 1 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let dd = T::from_int(d);
    let two = T::from_int(2);
    let eight = T::from_int(8);
    let stay = T::one() - delta.clone();
    let note = "headline upper slope 5/(8(1-delta)); exact walk solution gives 9/(8(1-delta))";

    let h_lower = (dd.clone() / eight.clone() + T::one() / two.clone()) / stay.clone();
    let h_upper =
        (T::from_int(5) * dd.clone() / eight + T::from_int(3) / two.clone()) / stay.clone();
    let to_d = |n: &T| n.clone() * dd.clone() / delta.clone();
    let headline = BoundReport {
        d,
        variant: BoundVariant::LadderHeadline,
        d_lower: finite(to_d(&h_lower)),
        d_upper: finite(to_d(&h_upper)),
        n_lower: finite(h_lower),
        n_upper: finite(h_upper),
        notes: note.into(),
    };

    let cross = delta.clone() * stay;
    let walk = DeltaDistribution::symmetric(T::one() - two.clone() * cross.clone(), &[cross])?;
    let z = dd.clone() / two;
    let lo = closed_form_d(d, z.clone(), &walk, Boundary::Necessary)?;
    let hi = closed_form_d(d, z, &walk, Boundary::Sufficient)?;
    let to_n = |e: &Expectation<T>| e.clone().map(|v| v * delta.clone() / dd.clone());
    let exact = BoundReport {
        d,
        variant: BoundVariant::LadderExact,
        n_lower: Some(to_n(&lo)),
        n_upper: Some(to_n(&hi)),
        d_lower: Some(lo),
        d_upper: Some(hi),
        notes: note.into(),
    };
    Ok((headline, exact))
}

/// Expected applications for a perfect clock `z` positions ahead of a ladder
/// clock: `(b - z)/(1 - δ)` with `b = d + 1` (necessary) or `2d + 1`
/// (sufficient). The ladder clock can never overtake, so `z < 0` gives zero.
pub fn perfect_vs_ladder_d<T: Scalar>(
    d: i64,
    z: i64,
    delta: T,
    boundary: Boundary,
) -> Expectation<T> {
    let (_, hi) = boundary.limits(d);
    if z < 0 || z >= hi {
        return Expectation::Finite(T::zero());
    }
    if delta == T::one() {
        return Expectation::Infinite;
    }
    Expectation::Finite(T::from_int(hi - z) / (T::one() - delta))
}

/// Bounds at the minimising start `z = 0`, with `N = D / d`.
pub fn perfect_vs_ladder_bounds<T: Scalar>(d: i64, delta: T) -> Result<BoundReport<T>> {
    if delta < T::zero() || delta > T::one() {
        return Err(Error::InvalidParameter(format!(
            "step probability {delta:?} outside [0, 1]"
        )));
    }
    if d < 1 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let lo = perfect_vs_ladder_d(d, 0, delta.clone(), Boundary::Necessary);
    let hi = perfect_vs_ladder_d(d, 0, delta, Boundary::Sufficient);
    let per_tick = |e: &Expectation<T>| e.clone().map(|v| v / T::from_int(d));
    Ok(BoundReport {
        d,
        variant: BoundVariant::PerfectVsLadder,
        n_lower: Some(per_tick(&lo)),
        n_upper: Some(per_tick(&hi)),
        d_lower: Some(lo),
        d_upper: Some(hi),
        notes: "perfect clock starts ahead; E(Y) = d".into(),
    })
}
