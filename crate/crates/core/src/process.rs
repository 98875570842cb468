//! Process matrices and the local operations they are probed with.
//!
//! A party's operation with classical outcome `i` is a completely positive map
//! from its input space to its output space, represented by the Choi
//! operator
//!
//! ```text
//! C(N) = Σ_jk |j⟩⟨k|_in ⊗ N(|j⟩⟨k|)_out
//! ```
//!
//! so a measure-and-prepare branch `ρ ↦ Tr[Pρ]·σ` has `C = Pᵀ ⊗ σ`. The joint
//! probability of Alice's branch `M_A` and Bob's branch `M_B` is
//! `Tr[W (M_A ⊗ M_B)]` with subsystems ordered A1, A2, B1, B2.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    bloch_observable, hermitian_eigenvalues, kron, partial_trace, pauli_op, ComplexMatrix, Pauli, PauliString,
};
use crate::rng::task_rng;

pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-10;
pub const UNIT_PROBABILITY_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-12;
/// Probabilities below `-NEGATIVE_PROBABILITY_TOL` are reported as errors.
const NEGATIVE_PROBABILITY_TOL: f64 = 1e-9;
/// Probabilities in `[-CLAMP_TOL, 0)` are rounded up to zero.
const CLAMP_TOL: f64 = 1e-12;

/// Hilbert-space dimensions of A1, A2, B1, B2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub a1: usize,
    pub a2: usize,
    pub b1: usize,
    pub b2: usize,
}

impl SystemDims {
    pub const QUBITS: SystemDims = SystemDims {
        a1: 2,
        a2: 2,
        b1: 2,
        b2: 2,
    };

    pub fn new(a1: usize, a2: usize, b1: usize, b2: usize) -> Result<Self> {
        let dims = Self { a1, a2, b1, b2 };
        if dims.as_array().iter().any(|&d| d < 2) {
            return Err(Error::InvalidInput(format!(
                "subsystem dimensions must be at least 2, got {:?}",
                dims.as_array()
            )));
        }
        Ok(dims)
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.a1, self.a2, self.b1, self.b2]
    }

    pub fn total(&self) -> usize {
        self.a1 * self.a2 * self.b1 * self.b2
    }

    pub fn alice(&self) -> usize {
        self.a1 * self.a2
    }

    pub fn bob(&self) -> usize {
        self.b1 * self.b2
    }

    /// Trace a valid process matrix must have.
    pub fn expected_trace(&self) -> f64 {
        (self.a2 * self.b2) as f64
    }
}

/// Operator `W` on A1⊗A2⊗B1⊗B2.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    dims: SystemDims,
    op: ComplexMatrix,
}

/// On-disk form of a qubit process matrix: a real Pauli expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessFile {
    pub dims: [usize; 4],
    pub pauli_coefficients: BTreeMap<String, f64>,
}

impl ProcessMatrix {
    pub fn new(dims: SystemDims, op: ComplexMatrix) -> Result<Self> {
        if op.dim() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "operator has dimension {} but subsystems {:?} need {}",
                op.dim(),
                dims.as_array(),
                dims.total()
            )));
        }
        Ok(Self { dims, op })
    }

    /// `Σ coeff · pauli_op(string)` on four qubits.
    pub fn from_pauli_coefficients<'a, I>(coefficients: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut op = ComplexMatrix::zeros(16);
        for (label, coeff) in coefficients {
            let s: PauliString = label.parse()?;
            if s.len() != 4 {
                return Err(Error::InvalidInput(format!(
                    "Pauli string '{label}' must have one letter per subsystem (4)"
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::InvalidInput(format!("coefficient of '{label}' is not finite")));
            }
            op = &op + &pauli_op(&s).scale(coeff);
        }
        Self::new(SystemDims::QUBITS, op)
    }

    pub fn from_file(file: &ProcessFile) -> Result<Self> {
        if file.dims != SystemDims::QUBITS.as_array() {
            return Err(Error::InvalidInput(format!(
                "Pauli expansions need dims [2,2,2,2], got {:?}",
                file.dims
            )));
        }
        Self::from_pauli_coefficients(file.pauli_coefficients.iter().map(|(k, &v)| (k.as_str(), v)))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProcessFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("malformed process-matrix JSON: {e}")))?;
        Self::from_file(&file)
    }

    /// Real Pauli expansion of a Hermitian qubit process (coefficients with
    /// magnitude below `1e-15` are dropped).
    pub fn to_file(&self) -> Result<ProcessFile> {
        if self.dims != SystemDims::QUBITS {
            return Err(Error::InvalidInput(
                "only qubit processes have a Pauli file form".into(),
            ));
        }
        let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let mut pauli_coefficients = BTreeMap::new();
        for code in 0..256usize {
            let s = PauliString::new((0..4).map(|k| letters[(code >> (2 * (3 - k))) & 3]).collect())?;
            let coeff = self.op.trace_product(&pauli_op(&s))? / 16.0;
            if coeff.im.abs() > HERMITIAN_TOL {
                return Err(Error::NotHermitian(coeff.im.abs()));
            }
            if coeff.re.abs() > 1e-15 {
                pauli_coefficients.insert(s.to_string(), coeff.re);
            }
        }
        Ok(ProcessFile {
            dims: self.dims.as_array(),
            pauli_coefficients,
        })
    }

    /// `W = 𝟙 / (d_A1 · d_B1)`: no communication in either direction.
    pub fn trivial(dims: SystemDims) -> Self {
        let op = ComplexMatrix::identity(dims.total()).scale(1.0 / (dims.a1 * dims.b1) as f64);
        Self { dims, op }
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn op(&self) -> &ComplexMatrix {
        &self.op
    }
}

/// JSON form of [`ocb_process`].
pub const OCB_FIXTURE_JSON: &str = include_str!("../fixtures/ocb_process.json");

/// The causally non-separable qubit process
/// `W = ¼[𝟙 + (σz^{A2}σz^{B1} + σz^{A1}σx^{B1}σz^{B2})/√2]`.
pub fn ocb_process() -> ProcessMatrix {
    let c = 0.25 * FRAC_1_SQRT_2;
    ProcessMatrix::from_pauli_coefficients([("IIII", 0.25), ("IZZI", c), ("ZIXZ", c)])
        .expect("fixed Pauli expansion is well formed")
}

/// Choi operator of one outcome of a local operation.
#[derive(Debug, Clone, PartialEq)]
pub struct CJOperator {
    pub outcome: usize,
    op: ComplexMatrix,
}

impl CJOperator {
    /// Checks Hermiticity and positivity (min eigenvalue ≥ `-1e-10`).
    pub fn new(outcome: usize, op: ComplexMatrix) -> Result<Self> {
        let min = hermitian_eigenvalues(&op)?[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { outcome, op })
    }

    /// Skips the eigenvalue check; for operators positive by construction.
    pub(crate) fn new_unchecked(outcome: usize, op: ComplexMatrix) -> Self {
        Self { outcome, op }
    }

    pub fn op(&self) -> &ComplexMatrix {
        &self.op
    }

    /// Same outcome, operator multiplied by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            outcome: self.outcome,
            op: self.op.scale(factor),
        }
    }
}

/// A complete set of outcome branches: `Tr_out Σ_i M_i = 𝟙_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    elements: Vec<CJOperator>,
    in_dim: usize,
    out_dim: usize,
}

impl Instrument {
    pub fn new(elements: Vec<CJOperator>, in_dim: usize, out_dim: usize) -> Result<Self> {
        let inst = Self::new_unchecked(elements, in_dim, out_dim)?;
        let dev = inst.completeness_deviation()?;
        if dev > COMPLETENESS_TOL {
            return Err(Error::Incomplete(dev));
        }
        Ok(inst)
    }

    /// Checks shapes and labels but not completeness.
    pub(crate) fn new_unchecked(elements: Vec<CJOperator>, in_dim: usize, out_dim: usize) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidInput("instrument has no elements".into()));
        }
        for (i, e) in elements.iter().enumerate() {
            if e.op.dim() != in_dim * out_dim {
                return Err(Error::DimensionMismatch(format!(
                    "element {i} has dimension {}, expected {in_dim}·{out_dim}",
                    e.op.dim()
                )));
            }
            if elements[..i].iter().any(|o| o.outcome == e.outcome) {
                return Err(Error::InvalidInput(format!("duplicate outcome label {}", e.outcome)));
            }
        }
        Ok(Self {
            elements,
            in_dim,
            out_dim,
        })
    }

    pub fn elements(&self) -> &[CJOperator] {
        &self.elements
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn outcomes(&self) -> Vec<usize> {
        self.elements.iter().map(|e| e.outcome).collect()
    }

    /// Max entrywise distance between `Tr_out Σ_i M_i` and `𝟙_in`.
    pub fn completeness_deviation(&self) -> Result<f64> {
        let sum = self
            .elements
            .iter()
            .skip(1)
            .fold(self.elements[0].op.clone(), |acc, e| &acc + &e.op);
        let reduced = partial_trace(&sum, &[self.in_dim, self.out_dim], &[0])?;
        Ok(reduced.max_abs_diff(&ComplexMatrix::identity(self.in_dim)))
    }
}

fn qubit_state(bloch: [f64; 3]) -> ComplexMatrix {
    (&ComplexMatrix::identity(2) + &bloch_observable(bloch)).scale(0.5)
}

fn check_unit_vector(v: [f64; 3]) -> Result<()> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("axis {v:?} is not a unit vector")));
    }
    Ok(())
}

/// Measure the input qubit along `axis`, keep the branch with eigenvalue
/// `outcome_sign`, and prepare `prepare_state` on the output.
///
/// The outcome label is 0 for the `+1` branch and 1 for the `-1` branch.
pub fn cj_measure_prepare(axis: [f64; 3], outcome_sign: i8, prepare_state: &ComplexMatrix) -> Result<CJOperator> {
    check_unit_vector(axis)?;
    let sign = match outcome_sign {
        1 => 1.0,
        -1 => -1.0,
        other => return Err(Error::InvalidInput(format!("outcome sign must be ±1, got {other}"))),
    };
    check_density(prepare_state)?;
    let projector = qubit_state(axis.map(|a| a * sign));
    let outcome = usize::from(outcome_sign < 0);
    Ok(CJOperator::new_unchecked(
        outcome,
        kron(&projector.transpose(), prepare_state),
    ))
}

fn check_density(rho: &ComplexMatrix) -> Result<()> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidInput(format!(
            "prepared state has trace {tr}, expected 1"
        )));
    }
    let min = hermitian_eigenvalues(rho)?[0];
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

/// Alice's instrument for coin `a`: measure σz (outcome `x`), reprepare the
/// σz eigenstate selected by `a`.
pub fn ocb_alice_instrument(a: u8) -> Instrument {
    let sign = if a & 1 == 0 { 1.0 } else { -1.0 };
    let rho = qubit_state([0.0, 0.0, sign]);
    let elements = [1i8, -1]
        .into_iter()
        .map(|s| cj_measure_prepare([0.0, 0.0, 1.0], s, &rho).expect("fixed axis and state"))
        .collect();
    Instrument::new_unchecked(elements, 2, 2).expect("fixed shapes")
}

/// Bob's instrument for coin `b` and task bit `bprime`.
///
/// With `bprime = 1` he measures σz (outcome `y`) and outputs the maximally
/// mixed state. With `bprime = 0` he applies the single-branch channel
/// `½[𝟙 + (-1)^b σx ⊗ σz]`; his guess is then unused and carries label 0.
pub fn ocb_bob_instrument(b: u8, bprime: u8) -> Instrument {
    if bprime & 1 == 1 {
        let mixed = ComplexMatrix::identity(2).scale(0.5);
        let elements = [1i8, -1]
            .into_iter()
            .map(|s| cj_measure_prepare([0.0, 0.0, 1.0], s, &mixed).expect("fixed axis and state"))
            .collect();
        Instrument::new_unchecked(elements, 2, 2).expect("fixed shapes")
    } else {
        let sign = if b & 1 == 0 { 1.0 } else { -1.0 };
        let op = (&ComplexMatrix::identity(4) + &kron(&Pauli::X.matrix(), &Pauli::Z.matrix()).scale(sign)).scale(0.5);
        Instrument::new_unchecked(vec![CJOperator::new_unchecked(0, op)], 2, 2).expect("fixed shapes")
    }
}

/// Single-branch encoding channel `½[𝟙 + (-1)^b (n·σ) ⊗ (m·σ)]` on B1⊗B2.
pub fn correlated_flip_channel(b: u8, n: [f64; 3], m: [f64; 3]) -> Result<Instrument> {
    check_unit_vector(n)?;
    check_unit_vector(m)?;
    let sign = if b & 1 == 0 { 1.0 } else { -1.0 };
    let corr = kron(&bloch_observable(n), &bloch_observable(m)).scale(sign);
    let op = (&ComplexMatrix::identity(4) + &corr).scale(0.5);
    Instrument::new_unchecked(vec![CJOperator::new_unchecked(0, op)], 2, 2)
}

/// Two-outcome qubit measurement along `axis` followed by preparation of
/// `prepare` (the same state for both outcomes).
pub fn measure_prepare_instrument(axis: [f64; 3], prepare: &ComplexMatrix) -> Result<Instrument> {
    let elements = [1i8, -1]
        .into_iter()
        .map(|s| cj_measure_prepare(axis, s, prepare))
        .collect::<Result<Vec<_>>>()?;
    Instrument::new_unchecked(elements, 2, prepare.dim())
}

/// Pure qubit state with Bloch vector `axis`.
pub fn pure_qubit_state(axis: [f64; 3]) -> Result<ComplexMatrix> {
    check_unit_vector(axis)?;
    Ok(qubit_state(axis))
}

fn check_pair_dims(w: &ProcessMatrix, a_dim: usize, b_dim: usize) -> Result<()> {
    let d = w.dims;
    if a_dim != d.alice() || b_dim != d.bob() {
        return Err(Error::DimensionMismatch(format!(
            "operators on {a_dim}·{b_dim} do not match process dims {:?}",
            d.as_array()
        )));
    }
    Ok(())
}

fn settle_probability(p: Complex64) -> Result<f64> {
    let re = p.re;
    if re < -NEGATIVE_PROBABILITY_TOL {
        return Err(Error::NegativeProbability(re));
    }
    if (-CLAMP_TOL..0.0).contains(&re) {
        return Ok(0.0);
    }
    Ok(re)
}

/// `Tr[W (M_A ⊗ M_B)]`.
pub fn joint_probability(w: &ProcessMatrix, ma: &CJOperator, mb: &CJOperator) -> Result<f64> {
    check_pair_dims(w, ma.op.dim(), mb.op.dim())?;
    settle_probability(w.op.trace_product(&kron(&ma.op, &mb.op))?)
}

/// `Tr_A[W (M_A ⊗ 𝟙_B)]`, the operator Bob's branches are paired with once
/// Alice's branch is fixed.
fn bob_conditional(w: &ProcessMatrix, ma: &ComplexMatrix) -> ComplexMatrix {
    let da = w.dims.alice();
    let db = w.dims.bob();
    let wop = &w.op;
    let mut out = ComplexMatrix::zeros(db);
    for i in 0..da {
        for j in 0..da {
            // W[(i,·),(j,·)] · M_A[j,i]
            let m = ma[(j, i)];
            if m.re == 0.0 && m.im == 0.0 {
                continue;
            }
            for r in 0..db {
                for c in 0..db {
                    out[(r, c)] += wop[(i * db + r, j * db + c)] * m;
                }
            }
        }
    }
    out
}

/// Joint distribution of the two parties' outcome labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub alice_outcomes: Vec<usize>,
    pub bob_outcomes: Vec<usize>,
    /// `probs[i][j]` pairs `alice_outcomes[i]` with `bob_outcomes[j]`.
    pub probs: Vec<Vec<f64>>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    pub fn alice_marginal(&self, outcome: usize) -> f64 {
        self.alice_outcomes
            .iter()
            .position(|&o| o == outcome)
            .map_or(0.0, |i| self.probs[i].iter().sum())
    }

    pub fn bob_marginal(&self, outcome: usize) -> f64 {
        self.bob_outcomes
            .iter()
            .position(|&o| o == outcome)
            .map_or(0.0, |j| self.probs.iter().map(|row| row[j]).sum())
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        match (
            self.alice_outcomes.iter().position(|&o| o == x),
            self.bob_outcomes.iter().position(|&o| o == y),
        ) {
            (Some(i), Some(j)) => self.probs[i][j],
            _ => 0.0,
        }
    }
}

fn raw_distribution(w: &ProcessMatrix, ia: &Instrument, ib: &Instrument) -> Result<Vec<Vec<Complex64>>> {
    check_pair_dims(w, ia.in_dim * ia.out_dim, ib.in_dim * ib.out_dim)?;
    ia.elements
        .iter()
        .map(|ea| {
            let cond = bob_conditional(w, &ea.op);
            ib.elements.iter().map(|eb| cond.trace_product(&eb.op)).collect()
        })
        .collect()
}

/// Distribution of `(x, y)` for a pair of instruments.
pub fn outcome_distribution(w: &ProcessMatrix, ia: &Instrument, ib: &Instrument) -> Result<OutcomeDistribution> {
    let raw = raw_distribution(w, ia, ib)?;
    let probs = raw
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|p| {
                    if p.re < -PSD_TOL {
                        Err(Error::NegativeProbability(p.re))
                    } else {
                        settle_probability(p).map(|v| v.max(0.0))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeDistribution {
        alice_outcomes: ia.outcomes(),
        bob_outcomes: ib.outcomes(),
        probs,
    })
}

/// Families of random complete instruments used to probe validity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKind {
    /// One branch: a Haar-like random isometry into `out ⊗ env`, with the
    /// environment traced out (a random unitary when the dimensions agree).
    Unitary,
    /// Random rank-one projective measurement, each outcome repreparing a
    /// random pure state.
    MeasurePrepare,
}

fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v {
        *z /= norm;
    }
}

/// `count` orthonormal vectors in `C^dim` via Gram–Schmidt (the Q factor of a
/// complex Gaussian matrix).
fn random_orthonormal<R: Rng>(rng: &mut R, dim: usize, count: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = gaussian_vector(rng, dim);
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            for q in &basis {
                let overlap: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= overlap * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            normalize(&mut v);
            basis.push(v);
        }
    }
    basis
}

/// Random complete instrument on `in_dim → out_dim`, reproducible from `seed`.
pub fn random_cptp_instrument(in_dim: usize, out_dim: usize, kind: InstrumentKind, seed: u64) -> Result<Instrument> {
    if in_dim < 2 || out_dim < 2 {
        return Err(Error::InvalidInput(format!(
            "instrument dimensions must be at least 2, got {in_dim}→{out_dim}"
        )));
    }
    let mut rng = task_rng(seed, 0);
    let dim = in_dim * out_dim;
    match kind {
        InstrumentKind::Unitary => {
            let env = in_dim.div_ceil(out_dim);
            let big = out_dim * env;
            // columns[j] = V|j⟩ indexed (o, e) ↦ o·env + e
            let columns = random_orthonormal(&mut rng, big, in_dim);
            let mut choi = ComplexMatrix::zeros(dim);
            for e in 0..env {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                for (j, col) in columns.iter().enumerate() {
                    for o in 0..out_dim {
                        v[j * out_dim + o] = col[o * env + e];
                    }
                }
                choi = &choi + &ComplexMatrix::outer(&v);
            }
            Instrument::new_unchecked(vec![CJOperator::new_unchecked(0, choi)], in_dim, out_dim)
        }
        InstrumentKind::MeasurePrepare => {
            let basis = random_orthonormal(&mut rng, in_dim, in_dim);
            let elements = basis
                .iter()
                .enumerate()
                .map(|(i, phi)| {
                    let mut psi = gaussian_vector(&mut rng, out_dim);
                    normalize(&mut psi);
                    let projector = ComplexMatrix::outer(phi);
                    CJOperator::new_unchecked(i, kron(&projector.transpose(), &ComplexMatrix::outer(&psi)))
                })
                .collect();
            Instrument::new_unchecked(elements, in_dim, out_dim)
        }
    }
}

/// Outcome of [`validate_process`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub hermitian: bool,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub expected_trace: f64,
    /// Max over sampled instrument pairs of `|Σ p(x,y) - 1|`.
    pub unit_probability_deviation: f64,
    pub samples: usize,
    pub verdict: bool,
}

/// Checks Hermiticity, positivity, the trace condition and unit total
/// probability against `n_samples` random pairs of complete instruments.
pub fn validate_process(w: &ProcessMatrix, n_samples: usize, seed: u64) -> Result<ValidationReport> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("validation needs at least one sample".into()));
    }
    let op = &w.op;
    let hermitian = op.is_hermitian(HERMITIAN_TOL);
    let herm_part = ComplexMatrix::from_fn(op.dim(), |r, c| (op[(r, c)] + op[(c, r)].conj()) * 0.5);
    let min_eigenvalue = hermitian_eigenvalues(&herm_part)?[0];
    let trace = op.trace().re;
    let expected_trace = w.dims.expected_trace();

    let d = w.dims;
    let mut unit_probability_deviation = 0.0f64;
    for s in 0..n_samples {
        let mut rng = task_rng(seed, s as u64);
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
            if rng.random_bool(0.5) {
                InstrumentKind::Unitary
            } else {
                InstrumentKind::MeasurePrepare
            }
        };
        let (kind_a, seed_a) = (pick(&mut rng), rng.random::<u64>());
        let (kind_b, seed_b) = (pick(&mut rng), rng.random::<u64>());
        let ia = random_cptp_instrument(d.a1, d.a2, kind_a, seed_a)?;
        let ib = random_cptp_instrument(d.b1, d.b2, kind_b, seed_b)?;
        let total: f64 = raw_distribution(w, &ia, &ib)?.iter().flatten().map(|p| p.re).sum();
        unit_probability_deviation = unit_probability_deviation.max((total - 1.0).abs());
    }

    let verdict = hermitian
        && min_eigenvalue >= -PSD_TOL
        && (trace - expected_trace).abs() <= TRACE_TOL
        && unit_probability_deviation <= UNIT_PROBABILITY_TOL;
    Ok(ValidationReport {
        hermitian,
        min_eigenvalue,
        trace,
        expected_trace,
        unit_probability_deviation,
        samples: n_samples,
        verdict,
    })
}
