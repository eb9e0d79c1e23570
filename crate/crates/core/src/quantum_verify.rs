//! Kraus, Choi and dual-certificate matrices of the clock channel.
//!
//! The channel acts on a clockwork of `D = d + 1` basis states and a two-level
//! tick register. Transition probabilities follow the homogeneity rule
//! `p_{jk} = p[(k - j) mod D]`, so `p_{jj} = p[0]` for every `j`. From state `i`
//! a jump to `m >= i` emits no tick and lands on `m`; a jump that wraps to
//! `m < i` emits a tick and resets to `0`.
//!
//! All matrices are real in the computational basis. Bipartite indices are
//! `clock * 2 + tick` for clockwork ⊗ tick and `c * D + c'` for the doubled
//! clockwork.

use rand::Rng;

use crate::clock_model::StochasticClock;
use crate::matrix::DenseMatrix;
use crate::{Error, Real, Result, Scalar};

/// Largest clockwork handled by the dense routines.
pub const MAX_DENSE_STATES: usize = 64;
/// Residual bound for identities that hold exactly in exact arithmetic.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
/// Lower bound accepted for sampled quadratic forms.
pub const POSITIVITY_TOLERANCE: f64 = -1e-10;

fn states_of<T: Scalar>(clock: &StochasticClock<T>) -> Result<usize> {
    let states = clock.cycle() + 1;
    if states > MAX_DENSE_STATES {
        return Err(Error::DimensionTooLarge {
            states,
            limit: MAX_DENSE_STATES,
        });
    }
    Ok(states)
}

/// `p_{jk}` on the `d + 1` clockwork states.
pub fn transition_probabilities<T: Scalar>(clock: &StochasticClock<T>) -> Result<DenseMatrix<T>> {
    let n = states_of(clock)?;
    let mut p = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            p.set(j, k, clock.jumps().prob((k + n - j) % n));
        }
    }
    Ok(p)
}

/// A rank-one Kraus operator `sqrt(p_im) |target><i| ⊗ |tick>`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator<T> {
    pub input: usize,
    pub jump_target: usize,
    pub tick: bool,
    pub weight: T,
    pub amplitude: T,
}

impl<T: Scalar> KrausOperator<T> {
    /// Clockwork state the operator maps into.
    pub fn output_state(&self) -> usize {
        if self.tick {
            0
        } else {
            self.jump_target
        }
    }

    /// `2D x D` matrix from the clockwork into clockwork ⊗ tick.
    pub fn dense(&self, states: usize) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(2 * states, states);
        m.set(
            self.output_state() * 2 + usize::from(self.tick),
            self.input,
            self.amplitude.clone(),
        );
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet<T> {
    pub states: usize,
    pub operators: Vec<KrausOperator<T>>,
    /// `max |Σ M†M - I|`, computed on construction.
    pub completeness_residual: T,
}

impl<T: Scalar> KrausSet<T> {
    /// `Σ M†M` from the dense operators.
    pub fn completeness(&self) -> DenseMatrix<T> {
        let mut acc = DenseMatrix::zeros(self.states, self.states);
        for op in &self.operators {
            let m = op.dense(self.states);
            acc = acc.add(&m.transpose().mul(&m));
        }
        acc
    }

    /// `Σ M ρ M†` on clockwork ⊗ tick.
    pub fn apply(&self, rho: &DenseMatrix<T>) -> DenseMatrix<T> {
        let dim = 2 * self.states;
        let mut out = DenseMatrix::zeros(dim, dim);
        for op in &self.operators {
            let m = op.dense(self.states);
            out = out.add(&m.mul(rho).mul(&m.transpose()));
        }
        out
    }
}

/// Kraus representation of the clock channel; only operators with nonzero
/// weight are kept.
pub fn build_kraus<T: Real>(clock: &StochasticClock<T>) -> Result<KrausSet<T>> {
    let p = transition_probabilities(clock)?;
    let n = p.rows();
    let mut operators = Vec::new();
    for i in 0..n {
        for m in 0..n {
            let weight = *p.get(i, m);
            if weight.is_zero() {
                continue;
            }
            operators.push(KrausOperator {
                input: i,
                jump_target: m,
                tick: i != 0 && m < i,
                amplitude: weight.sqrt(),
                weight,
            });
        }
    }
    let mut set = KrausSet {
        states: n,
        operators,
        completeness_residual: T::zero(),
    };
    set.completeness_residual = set.completeness().max_abs_diff(&DenseMatrix::identity(n));
    Ok(set)
}

/// The channel evaluated straight from its defining sum: only the diagonal
/// of `ρ` is read.
pub fn apply_by_definition<T: Scalar>(p: &DenseMatrix<T>, rho: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = p.rows();
    let mut out = DenseMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        let pop = rho.get(j, j).clone();
        if pop.is_zero() {
            continue;
        }
        for m in 0..n {
            let w = pop.clone() * p.get(j, m).clone();
            if m >= j {
                out.add_at(2 * m, 2 * m, w);
            } else {
                out.add_at(1, 1, w);
            }
        }
    }
    out
}

pub fn validate_density<T: Real>(rho: &DenseMatrix<T>, states: usize) -> Result<()> {
    if rho.rows() != states || rho.cols() != states {
        return Err(Error::InvalidDensityMatrix(format!(
            "shape {}x{}, expected {states}x{states}",
            rho.rows(),
            rho.cols()
        )));
    }
    let tol = T::from_real(1e-10);
    if (rho.trace() - T::one()).abs() > tol {
        return Err(Error::InvalidDensityMatrix(format!(
            "trace {:?}",
            rho.trace()
        )));
    }
    if rho.asymmetry() > tol {
        return Err(Error::InvalidDensityMatrix("not symmetric".into()));
    }
    if !rho.is_positive_semidefinite(tol) {
        return Err(Error::InvalidDensityMatrix(
            "not positive semidefinite".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelComparison<T> {
    pub via_kraus: DenseMatrix<T>,
    pub via_definition: DenseMatrix<T>,
    pub max_difference: T,
}

/// Applies the channel through its Kraus operators and through its defining
/// sum, and reports the largest entrywise disagreement.
pub fn apply_channel_two_ways<T: Real>(
    clock: &StochasticClock<T>,
    rho: &DenseMatrix<T>,
) -> Result<ChannelComparison<T>> {
    let kraus = build_kraus(clock)?;
    validate_density(rho, kraus.states)?;
    let p = transition_probabilities(clock)?;
    let via_kraus = kraus.apply(rho);
    let via_definition = apply_by_definition(&p, rho);
    let max_difference = via_kraus.max_abs_diff(&via_definition);
    Ok(ChannelComparison {
        via_kraus,
        via_definition,
        max_difference,
    })
}

/// Choi matrix `J(Φ) = Σ_ij Φ(|i><j|) ⊗ |i><j|` of
/// `Φ = tr_tick ∘ channel - identity`.
pub fn choi_of_difference<T: Scalar>(clock: &StochasticClock<T>) -> Result<DenseMatrix<T>> {
    let p = transition_probabilities(clock)?;
    let n = p.rows();
    let mut choi = DenseMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let mut unit = DenseMatrix::zeros(n, n);
            unit.set(i, j, T::one());
            let phi = apply_by_definition(&p, &unit)
                .partial_trace_second(n, 2)
                .sub(&unit);
            for a in 0..n {
                for b in 0..n {
                    let v = phi.get(a, b).clone();
                    if !v.is_zero() {
                        choi.set(a * n + i, b * n + j, v);
                    }
                }
            }
        }
    }
    Ok(choi)
}

/// The candidate dual point `(X, Z)` together with `J(Φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificatePair<T> {
    pub states: usize,
    pub x: DenseMatrix<T>,
    pub z: DenseMatrix<T>,
    pub choi: DenseMatrix<T>,
    /// `max |Z - X - J(Φ)|`.
    pub identity_residual: T,
}

/// Builds
/// `X = Σ_{i≠j} |i><j| ⊗ |i><j| + Σ_i (1 - p_ii) |ii><ii|` and
/// `Z = Σ_i Σ_{m>i} p_im |m><m| ⊗ |i><i| + Σ_{i≥1} Σ_{m<i} p_im |0><0| ⊗ |i><i|`
/// and records how well `Z = X + J(Φ)` holds.
pub fn build_certificate<T: Scalar>(clock: &StochasticClock<T>) -> Result<CertificatePair<T>> {
    let p = transition_probabilities(clock)?;
    let n = p.rows();
    let idx = |c: usize, c2: usize| c * n + c2;
    let mut x = DenseMatrix::zeros(n * n, n * n);
    let mut z = DenseMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                x.set(idx(i, i), idx(j, j), T::one());
            }
        }
        x.set(idx(i, i), idx(i, i), T::one() - p.get(i, i).clone());
        for m in 0..n {
            let w = p.get(i, m).clone();
            if m > i {
                z.add_at(idx(m, i), idx(m, i), w);
            } else if m < i {
                z.add_at(idx(0, i), idx(0, i), w);
            }
        }
    }
    let choi = choi_of_difference(clock)?;
    let identity_residual = z.sub(&x).sub(&choi).max_abs();
    Ok(CertificatePair {
        states: n,
        x,
        z,
        choi,
        identity_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateFailure {
    Identity {
        residual: f64,
    },
    NotDiagonal {
        residual: f64,
    },
    DiagonalEntry {
        index: usize,
        value: f64,
        expected: f64,
    },
    NormMismatch {
        norm: f64,
        epsilon: f64,
    },
    /// A unit vector with a negative quadratic form.
    NotPositive {
        matrix: &'static str,
        value: f64,
        witness: Vec<f64>,
    },
}

/// Outcome of the certificate checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub identity_residual: f64,
    /// Largest off-diagonal entry of `tr_C Z`.
    pub partial_trace_off_diagonal: f64,
    /// Largest deviation of `diag(tr_C Z)` from `1 - p_ii`.
    pub partial_trace_diagonal_error: f64,
    /// `||tr_C Z||_∞`, read from the diagonal.
    pub trace_norm: f64,
    pub epsilon: f64,
    pub min_form_x: f64,
    pub min_form_z: f64,
    pub trials: usize,
    pub failures: Vec<CertificateFailure>,
}

impl CertificateReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn positivity_failures(&self) -> impl Iterator<Item = &CertificateFailure> {
        self.failures
            .iter()
            .filter(|f| matches!(f, CertificateFailure::NotPositive { .. }))
    }
}

fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `false` for NaN.
fn within(value: f64, tol: f64) -> bool {
    value <= tol
}

fn nonzeros<T: Scalar>(m: &DenseMatrix<T>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if !v.is_zero() {
                out.push((i, j, v.as_f64()));
            }
        }
    }
    out
}

fn sparse_form(entries: &[(usize, usize, f64)], v: &[f64]) -> f64 {
    entries.iter().map(|&(i, j, a)| a * v[i] * v[j]).sum()
}

/// Checks the certificate: the identity `Z = X + J(Φ)`, that `tr_C Z` is the
/// diagonal matrix `1 - p_ii`, that its norm equals the clock's continuity
/// parameter, and that `X` and `Z` give non-negative quadratic forms on
/// `trials` random real unit vectors.
pub fn verify_continuity_certificate<T: Scalar, R: Rng + ?Sized>(
    pair: &CertificatePair<T>,
    clock: &StochasticClock<T>,
    trials: usize,
    rng: &mut R,
) -> CertificateReport {
    let n = pair.states;
    let mut failures = Vec::new();
    let identity_residual = pair.identity_residual.as_f64();
    if !within(identity_residual, RESIDUAL_TOLERANCE) {
        failures.push(CertificateFailure::Identity {
            residual: identity_residual,
        });
    }

    let reduced = pair.z.partial_trace_first(n, n);
    let off = reduced.max_abs_off_diagonal().as_f64();
    if !within(off, RESIDUAL_TOLERANCE) {
        failures.push(CertificateFailure::NotDiagonal { residual: off });
    }
    let stay = clock.jumps().prob(0).as_f64();
    let mut diag_err: f64 = 0.0;
    let mut trace_norm: f64 = 0.0;
    for (i, v) in reduced.diagonal().iter().enumerate() {
        let v = v.as_f64();
        let err = (v - (1.0 - stay)).abs();
        diag_err = diag_err.max(err);
        trace_norm = trace_norm.max(v.abs());
        if !within(err, RESIDUAL_TOLERANCE) {
            failures.push(CertificateFailure::DiagonalEntry {
                index: i,
                value: v,
                expected: 1.0 - stay,
            });
        }
    }
    let epsilon = clock.epsilon_continuity().as_f64();
    if !within((trace_norm - epsilon).abs(), RESIDUAL_TOLERANCE) {
        failures.push(CertificateFailure::NormMismatch {
            norm: trace_norm,
            epsilon,
        });
    }

    let (sx, sz) = (nonzeros(&pair.x), nonzeros(&pair.z));
    let mut min_x = f64::INFINITY;
    let mut min_z = f64::INFINITY;
    let mut witness_x = None;
    let mut witness_z = None;
    for _ in 0..trials {
        let v = random_unit_vector(rng, n * n);
        let fx = sparse_form(&sx, &v);
        let fz = sparse_form(&sz, &v);
        if fx < min_x {
            min_x = fx;
            witness_x = Some(v.clone());
        }
        if fz < min_z {
            min_z = fz;
            witness_z = Some(v);
        }
    }
    for (name, min, witness) in [("X", min_x, witness_x), ("Z", min_z, witness_z)] {
        if min < POSITIVITY_TOLERANCE {
            failures.push(CertificateFailure::NotPositive {
                matrix: name,
                value: min,
                witness: witness.unwrap_or_default(),
            });
        }
    }

    CertificateReport {
        identity_residual,
        partial_trace_off_diagonal: off,
        partial_trace_diagonal_error: diag_err,
        trace_norm,
        epsilon,
        min_form_x: min_x,
        min_form_z: min_z,
        trials,
        failures,
    }
}

/// Quadratic form of `X` on `(|00> - |11>)/sqrt(2)`, equal to `-p_00` in exact
/// arithmetic. Needs at least two clockwork states.
pub fn antisymmetric_probe<T: Real>(pair: &CertificatePair<T>) -> T {
    let n = pair.states;
    let mut v = vec![T::zero(); n * n];
    let h = T::from_real(std::f64::consts::FRAC_1_SQRT_2);
    v[0] = h;
    v[n + 1] = -h;
    pair.x.quadratic_form(&v)
}
