//! Information measures on bits and the bounds built from them.
//!
//! All logarithms are base 2 and `0·log 0 = 0`. A "bias" `e` describes a pair
//! of uniform bits that agree with probability `(1+e)/2`; independent biased
//! agreements compose under XOR by multiplying their biases.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use rand::Rng;

use crate::game::{batch_guess_toss, binomial, CorrelationParams, GuessTossCounts, RunBatch};
use crate::rng::task_rng;

/// Slack for analytic comparisons.
pub const ANALYTIC_TOL: f64 = 1e-12;
/// Slack for `I(n) ≤ 1`.
pub const EFFICIENCY_TOL: f64 = 1e-9;

/// `h(p) = -p log₂ p - (1-p) log₂(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
    }
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// Mutual information of two uniform bits with agreement bias `e`,
/// `1 - h((1+e)/2)`, evaluated in a form that stays accurate for small `e`.
pub fn mi_binary(e: f64) -> f64 {
    let e = e.abs().min(1.0);
    if e == 1.0 {
        return 1.0;
    }
    ((1.0 + e) * e.ln_1p() + (1.0 - e) * (-e).ln_1p()) / (2.0 * LN_2)
}

/// Joint distribution of two bits, `p[x][y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryJoint {
    p: [[f64; 2]; 2],
}

impl BinaryJoint {
    pub fn new(p: [[f64; 2]; 2]) -> Result<Self> {
        if p.iter().flatten().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::InvalidInput(format!("joint {p:?} has a negative or NaN entry")));
        }
        let total: f64 = p.iter().flatten().sum();
        if (total - 1.0).abs() > ANALYTIC_TOL {
            return Err(Error::InvalidInput(format!("joint sums to {total}, expected 1")));
        }
        Ok(Self { p })
    }

    /// Uniform marginals, agreement probability `(1+e)/2`.
    pub fn from_bias(e: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&e) {
            return Err(Error::InvalidInput(format!("bias {e} outside [-1, 1]")));
        }
        let same = (1.0 + e) / 4.0;
        let diff = (1.0 - e) / 4.0;
        Self::new([[same, diff], [diff, same]])
    }

    pub fn from_counts(c: &GuessTossCounts) -> Result<Self> {
        let freq = c
            .frequencies()
            .ok_or_else(|| Error::InvalidInput("no samples for this task".into()))?;
        Self::new(freq)
    }

    pub fn product(px0: f64, py0: f64) -> Result<Self> {
        Self::new([
            [px0 * py0, px0 * (1.0 - py0)],
            [(1.0 - px0) * py0, (1.0 - px0) * (1.0 - py0)],
        ])
    }

    pub fn probs(&self) -> [[f64; 2]; 2] {
        self.p
    }

    pub fn row_marginal(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[0][1], self.p[1][0] + self.p[1][1]]
    }

    pub fn col_marginal(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[1][0], self.p[0][1] + self.p[1][1]]
    }

    /// One of the marginals is deterministic.
    pub fn is_degenerate(&self) -> bool {
        let r = self.row_marginal();
        let c = self.col_marginal();
        r[0] * r[1] == 0.0 || c[0] * c[1] == 0.0
    }

    pub fn swapped(&self) -> Self {
        Self {
            p: [[self.p[0][0], self.p[1][0]], [self.p[0][1], self.p[1][1]]],
        }
    }

    pub fn both_flipped(&self) -> Self {
        Self {
            p: [[self.p[1][1], self.p[1][0]], [self.p[0][1], self.p[0][0]]],
        }
    }
}

/// `Σ p(x,y) log₂[p(x,y) / (p(x) p(y))]`.
pub fn mi_joint(j: &BinaryJoint) -> f64 {
    let r = j.row_marginal();
    let c = j.col_marginal();
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let p = j.p[x][y];
            if p > 0.0 {
                mi += p * (p / (r[x] * c[y])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// HGR maximal correlation of two bits.
///
/// For binary alphabets the only non-trivial singular value of the normalized
/// joint is the absolute Pearson correlation,
/// `|p₀₀p₁₁ - p₀₁p₁₀| / √(p_X(0)p_X(1)p_Y(0)p_Y(1))`. A deterministic marginal
/// makes the variables independent and yields 0 (see
/// [`BinaryJoint::is_degenerate`]).
pub fn hgr_binary(j: &BinaryJoint) -> f64 {
    if j.is_degenerate() {
        return 0.0;
    }
    let r = j.row_marginal();
    let c = j.col_marginal();
    let det = j.p[0][0] * j.p[1][1] - j.p[0][1] * j.p[1][0];
    (det.abs() / (r[0] * r[1] * c[0] * c[1]).sqrt()).min(1.0)
}

/// Uniform `X → Y → Z` chain of two binary symmetric stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovChainSpec {
    pub e_xy: f64,
    pub e_yz: f64,
}

impl MarkovChainSpec {
    pub fn new(e_xy: f64, e_yz: f64) -> Result<Self> {
        for e in [e_xy, e_yz] {
            if !(-1.0..=1.0).contains(&e) {
                return Err(Error::InvalidInput(format!("bias {e} outside [-1, 1]")));
            }
        }
        Ok(Self { e_xy, e_yz })
    }

    pub fn composed_bias(&self) -> f64 {
        self.e_xy * self.e_yz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpiCheck {
    /// `I(X:Z)`
    pub lhs: f64,
    /// `ρ*(Y:Z)² · I(X:Y)`
    pub rhs: f64,
    pub holds: bool,
}

/// `I(X:Z) ≤ ρ*(Y:Z)² I(X:Y)` for the chain.
pub fn strong_dpi_check(c: MarkovChainSpec) -> DpiCheck {
    let lhs = mi_binary(c.composed_bias());
    let yz = BinaryJoint::from_bias(c.e_yz).expect("validated bias");
    let rho = hgr_binary(&yz);
    let rhs = rho * rho * mi_binary(c.e_xy);
    DpiCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + ANALYTIC_TOL,
    }
}

/// Strong DPI over a `resolution × resolution` grid of biases in `[-1, 1]²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpiGridReport {
    pub resolution: usize,
    pub points: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen.
    pub worst_excess: f64,
}

pub fn strong_dpi_grid(resolution: usize) -> Result<DpiGridReport> {
    if resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    let axis = |i: usize| (-1.0 + 2.0 * i as f64 / (resolution - 1) as f64).clamp(-1.0, 1.0);
    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..resolution {
        for k in 0..resolution {
            let check = strong_dpi_check(MarkovChainSpec::new(axis(i), axis(k))?);
            worst_excess = worst_excess.max(check.lhs - check.rhs);
            if !check.holds {
                violations += 1;
            }
        }
    }
    Ok(DpiGridReport {
        resolution,
        points: resolution * resolution,
        violations,
        worst_excess,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneShotCondition {
    /// `I(x:b|b'=0) + I(y:a|b'=1)`
    pub value: f64,
    pub holds: bool,
}

/// The single-run signaling budget `I(x:b|b'=0) + I(y:a|b'=1) ≤ 1`.
pub fn one_shot_condition(params: CorrelationParams) -> OneShotCondition {
    let value = mi_binary(params.e1) + mi_binary(params.e2);
    OneShotCondition {
        value,
        holds: value <= 1.0 + ANALYTIC_TOL,
    }
}

/// Boxes used in two independent runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunPairParams {
    pub run1: CorrelationParams,
    pub run2: CorrelationParams,
}

/// Slack of the two run-pair inequalities, `lhs - rhs` for each:
///
/// * `I(E1⁽¹⁾) - I(E1⁽¹⁾E1⁽²⁾) - I(E1⁽¹⁾E2⁽²⁾)`
/// * `I(E2⁽¹⁾) - I(E2⁽¹⁾E1⁽²⁾) - I(E2⁽¹⁾E2⁽²⁾)`
pub fn prop1_margins(rp: RunPairParams) -> [f64; 2] {
    let CorrelationParams { e1: a1, e2: a2 } = rp.run1;
    let CorrelationParams { e1: b1, e2: b2 } = rp.run2;
    [
        mi_binary(a1) - mi_binary(a1 * b1) - mi_binary(a1 * b2),
        mi_binary(a2) - mi_binary(a2 * b1) - mi_binary(a2 * b2),
    ]
}

/// Both run-pair mutual-information inequalities hold (within `1e-12`).
pub fn prop1_condition_i(rp: RunPairParams) -> bool {
    prop1_margins(rp).iter().all(|&m| m >= -ANALYTIC_TOL)
}

/// `(E1⁽²⁾)² + (E2⁽²⁾)² ≤ 1` (within `1e-12`).
pub fn prop1_condition_ii(run2: CorrelationParams) -> bool {
    run2.sq_sum() <= 1.0 + ANALYTIC_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Scan {
    pub run2: CorrelationParams,
    pub condition_ii: bool,
    pub points_checked: usize,
    /// First run-1 box (lexicographic scan order) breaking condition (i).
    pub violation: Option<CorrelationParams>,
    /// Condition (i) over the scanned run-1 boxes agrees with condition (ii).
    pub consistent: bool,
}

/// Lower end of the small-bias search used when condition (ii) fails.
pub const SMALL_BIAS_MIN: f64 = 0.01;
/// Upper end of the small-bias search.
pub const SMALL_BIAS_MAX: f64 = 0.1;

/// Tests the equivalence of the two run-pair conditions for a fixed run-2 box.
///
/// When (ii) holds, (i) is checked on a `resolution²` grid of run-1 boxes in
/// `[0, 1]²`. When it fails, run-1 boxes in `[0.01, 0.1]²` are searched for a
/// counterexample: the ratio `I(X:Z)/I(X:Y)` approaches its supremum
/// `ρ*²` as the run-1 bias goes to zero.
pub fn prop1_equivalence_scan(run2: CorrelationParams, resolution: usize) -> Result<Prop1Scan> {
    if resolution < 10 {
        return Err(Error::InvalidInput(format!(
            "scan resolution must be at least 10, got {resolution}"
        )));
    }
    let condition_ii = prop1_condition_ii(run2);
    let (lo, hi) = if condition_ii {
        (0.0, 1.0)
    } else {
        (SMALL_BIAS_MIN, SMALL_BIAS_MAX)
    };
    let axis = |i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut violation = None;
    let mut points_checked = 0;
    'scan: for i in 0..resolution {
        for k in 0..resolution {
            let run1 = CorrelationParams::new(axis(i), axis(k))?;
            points_checked += 1;
            if !prop1_condition_i(RunPairParams { run1, run2 }) {
                violation = Some(run1);
                break 'scan;
            }
        }
    }
    Ok(Prop1Scan {
        run2,
        condition_ii,
        points_checked,
        consistent: condition_ii == violation.is_none(),
        violation,
    })
}

/// Seeded check of the run-pair equivalence on random run-2 boxes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Sampled {
    pub resolution: usize,
    pub seed: u64,
    /// Scans for boxes with `E1² + E2² ≤ 1`.
    pub inside: Vec<Prop1Scan>,
    /// Scans for boxes with `E1² + E2² ≥ SAMPLED_OUTSIDE_MIN`.
    pub outside: Vec<Prop1Scan>,
}

impl Prop1Sampled {
    pub fn all_consistent(&self) -> bool {
        self.inside.iter().chain(&self.outside).all(|s| s.consistent)
    }
}

/// Squares-sum floor for the sampled boxes outside the quantum region.
pub const SAMPLED_OUTSIDE_MIN: f64 = 1.05;

/// Draws `samples` run-2 boxes uniformly from `[0,1]²` inside the unit disk
/// and `samples` with squares-sum at least [`SAMPLED_OUTSIDE_MIN`], then scans
/// each with [`prop1_equivalence_scan`]. Draw `s` of the inside (outside) set
/// uses stream `2s` (`2s+1`) of `seed`.
pub fn prop1_sampled(samples: usize, resolution: usize, seed: u64) -> Result<Prop1Sampled> {
    let draw = |stream: u64, accept: &dyn Fn(f64) -> bool| {
        let mut rng = task_rng(seed, stream);
        loop {
            let (e1, e2): (f64, f64) = (rng.random(), rng.random());
            if accept(e1 * e1 + e2 * e2) {
                return CorrelationParams::new(e1, e2);
            }
        }
    };
    let inside = (0..samples as u64)
        .map(|s| prop1_equivalence_scan(draw(2 * s, &|q| q <= 1.0)?, resolution))
        .collect::<Result<Vec<_>>>()?;
    let outside = (0..samples as u64)
        .map(|s| prop1_equivalence_scan(draw(2 * s + 1, &|q| q >= SAMPLED_OUTSIDE_MIN)?, resolution))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prop1Sampled {
        resolution,
        seed,
        inside,
        outside,
    })
}

/// Closed-form `I(g_i : t_i | b' = i)` for task `i` of `n` runs.
pub fn task_mi(params: CorrelationParams, n: u32, i: u32) -> f64 {
    let k = (i & ((1u64 << n) - 1) as u32).count_ones() as i32;
    mi_binary(params.e1.powi(n as i32 - k) * params.e2.powi(k))
}

/// `I(n)` with its sandwich bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub n: u32,
    pub i_n: f64,
    /// `(E1²+E2²)^n / (2 ln 2)`
    pub lower: f64,
    /// `(E1²+E2²)^n`
    pub upper: f64,
    /// `I(n) ≤ 1` within `1e-9`.
    pub causal_ok: bool,
}

/// `I(n) = Σ_k C(n,k) I_bin(E1^{n-k} E2^k)`, summing the mutual information
/// of every task string of `n` runs.
pub fn efficiency(params: CorrelationParams, n: u32) -> Result<EfficiencyReport> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one run".into()));
    }
    let i_n = (0..=n)
        .map(|k| binomial(n, k) * mi_binary(params.e1.powi((n - k) as i32) * params.e2.powi(k as i32)))
        .sum();
    let upper = params.sq_sum().powi(n as i32);
    Ok(EfficiencyReport {
        n,
        i_n,
        lower: upper / (2.0 * LN_2),
        upper,
        causal_ok: i_n <= 1.0 + EFFICIENCY_TOL,
    })
}

/// Smallest `n ≤ n_max` with `I(n) > 1`.
pub fn first_violating_n(params: CorrelationParams, n_max: u32) -> Option<u32> {
    (1..=n_max).find(|&n| !efficiency(params, n).expect("n ≥ 1").causal_ok)
}

/// Region of a box relative to the two HGR conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    /// `|E1| + |E2| ≤ 1`
    Causal,
    /// `E1² + E2² ≤ 1` but not causal.
    Quantum,
    Supraquantum,
}

impl std::fmt::Display for CausalClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CausalClass::Causal => "causal",
            CausalClass::Quantum => "quantum",
            CausalClass::Supraquantum => "supraquantum",
        })
    }
}

/// Classifies a box by the sum of HGR correlations and the sum of their
/// squares; for uniform bits `ρ*` equals `|E|`.
pub fn hgr_causal_classify(params: CorrelationParams) -> CausalClass {
    let rho = |e: f64| hgr_binary(&BinaryJoint::from_bias(e.clamp(-1.0, 1.0)).expect("clamped bias"));
    let (r1, r2) = (rho(params.e1), rho(params.e2));
    if r1 + r2 <= 1.0 + ANALYTIC_TOL {
        CausalClass::Causal
    } else if r1 * r1 + r2 * r2 <= 1.0 + ANALYTIC_TOL {
        CausalClass::Quantum
    } else {
        CausalClass::Supraquantum
    }
}

/// Plug-in mutual information with a first-order error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiEstimate {
    pub estimate: f64,
    /// Delta-method standard error.
    pub std_error: f64,
    /// Leading-order plug-in bias, `1/(2N ln 2)` for two bits.
    pub bias: f64,
    pub samples: u64,
}

impl MiEstimate {
    /// Error bar for `estimate - bias`: the delta-method spread plus the
    /// `χ²₁` spread of the plug-in (`√2 · bias`), which dominates near zero.
    pub fn sigma(&self) -> f64 {
        (self.std_error * self.std_error + 2.0 * self.bias * self.bias).sqrt()
    }
}

pub fn mi_estimate(counts: &GuessTossCounts) -> Result<MiEstimate> {
    let j = BinaryJoint::from_counts(counts)?;
    let n = counts.total as f64;
    let r = j.row_marginal();
    let c = j.col_marginal();
    let (mut m1, mut m2) = (0.0, 0.0);
    for x in 0..2 {
        for y in 0..2 {
            let p = j.p[x][y];
            if p > 0.0 {
                let l = (p / (r[x] * c[y])).log2();
                m1 += p * l;
                m2 += p * l * l;
            }
        }
    }
    Ok(MiEstimate {
        estimate: mi_joint(&j),
        std_error: ((m2 - m1 * m1).max(0.0) / n).sqrt(),
        bias: 1.0 / (2.0 * n * LN_2),
        samples: counts.total,
    })
}

/// Empirical `I(n)` from a batch: the sum of per-task plug-in estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalEfficiency {
    pub i_n: f64,
    /// Combined standard error of the independent per-task estimates.
    pub std_error: f64,
    /// Summed plug-in bias.
    pub bias: f64,
    pub per_task: Vec<MiEstimate>,
}

/// Largest run count for which per-task statistics are enumerated.
pub const MAX_TASK_RUNS: u32 = 16;

pub fn empirical_efficiency(batch: &RunBatch) -> Result<EmpiricalEfficiency> {
    if batch.n > MAX_TASK_RUNS {
        return Err(Error::InvalidInput(format!(
            "per-task statistics need n ≤ {MAX_TASK_RUNS}, got {}",
            batch.n
        )));
    }
    let per_task = (0..(1u32 << batch.n))
        .map(|i| mi_estimate(&batch_guess_toss(batch, i)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalEfficiency {
        i_n: per_task.iter().map(|m| m.estimate).sum(),
        std_error: per_task.iter().map(|m| m.std_error * m.std_error).sum::<f64>().sqrt(),
        bias: per_task.iter().map(|m| m.bias).sum(),
        per_task,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::simulate;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn params(e1: f64, e2: f64) -> CorrelationParams {
        CorrelationParams::new(e1, e2).unwrap()
    }

    /// Textbook form of the binary MI, the oracle for `mi_binary`.
    fn mi_oracle(e: f64) -> f64 {
        1.0 - binary_entropy((1.0 + e) / 2.0).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let direct = -0.875 * 0.875f64.log2() - 0.125 * 0.125f64.log2();
        assert!((binary_entropy(0.875).unwrap() - direct).abs() < 1e-15);
        assert!((binary_entropy(0.875).unwrap() - 0.5435644).abs() < 1e-7);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn binary_mi_values() {
        assert_eq!(mi_binary(0.0), 0.0);
        assert_eq!(mi_binary(1.0), 1.0);
        assert_eq!(mi_binary(-1.0), 1.0);
        assert!((mi_binary(0.75) - 0.4564356).abs() < 1e-7);
        for i in 0..=100 {
            let e = -1.0 + i as f64 / 50.0;
            assert!((mi_binary(e) - mi_oracle(e)).abs() < 1e-14, "e = {e}");
            assert_eq!(mi_binary(e), mi_binary(-e));
        }
        // Expanded form: (1+e)/2 log₂(1+e) + (1-e)/2 log₂(1-e).
        let e: f64 = 0.3;
        let expanded = (1.0 + e) / 2.0 * (1.0 + e).log2() + (1.0 - e) / 2.0 * (1.0 - e).log2();
        assert!((mi_binary(e) - expanded).abs() < 1e-15);
    }

    #[test]
    fn small_bias_mi_is_accurate() {
        // Series: Σ_k e^{2k} / (2k(2k-1) ln 2).
        for e in [1e-3f64, 1e-5, 1e-8] {
            let series: f64 = (1..6)
                .map(|k| e.powi(2 * k) / ((2 * k * (2 * k - 1)) as f64 * LN_2))
                .sum();
            assert!(((mi_binary(e) - series) / series).abs() < 1e-9, "e = {e}");
        }
    }

    #[test]
    fn joint_mi_examples() {
        assert!(mi_joint(&BinaryJoint::product(0.3, 0.8).unwrap()) < 1e-15);
        assert!((mi_joint(&BinaryJoint::new([[0.5, 0.0], [0.0, 0.5]]).unwrap()) - 1.0).abs() < 1e-15);
        assert!((mi_joint(&BinaryJoint::from_bias(0.6).unwrap()) - mi_binary(0.6)).abs() < 1e-12);
        assert!(BinaryJoint::new([[0.5, 0.5], [0.1, -0.1]]).is_err());
        assert!(BinaryJoint::new([[0.5, 0.5], [0.1, 0.0]]).is_err());
    }

    #[test]
    fn hgr_examples() {
        assert!((hgr_binary(&BinaryJoint::from_bias(0.6).unwrap()) - 0.6).abs() < 1e-15);
        assert!((hgr_binary(&BinaryJoint::from_bias(-0.6).unwrap()) - 0.6).abs() < 1e-15);
        assert!(hgr_binary(&BinaryJoint::product(0.2, 0.7).unwrap()) < 1e-15);
        assert!((hgr_binary(&BinaryJoint::new([[0.3, 0.0], [0.0, 0.7]]).unwrap()) - 1.0).abs() < 1e-15);
        let degenerate = BinaryJoint::new([[0.4, 0.6], [0.0, 0.0]]).unwrap();
        assert!(degenerate.is_degenerate());
        assert_eq!(hgr_binary(&degenerate), 0.0);
    }

    #[test]
    fn hgr_equals_best_correlation_of_functions() {
        // Brute-force oracle: for binary variables every zero-mean unit-variance
        // function is ±(standardized indicator), so ρ* is the |Pearson| of the bits.
        let j = BinaryJoint::new([[0.1, 0.25], [0.4, 0.25]]).unwrap();
        let p = j.probs();
        let ex: f64 = p[1][0] + p[1][1];
        let ey: f64 = p[0][1] + p[1][1];
        let exy = p[1][1];
        let pearson = (exy - ex * ey) / (ex * (1.0 - ex) * ey * (1.0 - ey)).sqrt();
        assert!((hgr_binary(&j) - pearson.abs()).abs() < 1e-15);
    }

    #[test]
    fn dpi_examples() {
        let c = strong_dpi_check(MarkovChainSpec::new(0.5, 0.6).unwrap());
        assert!((c.lhs - 0.0659).abs() < 1e-4, "{c:?}");
        assert!((c.rhs - 0.0679).abs() < 1e-4, "{c:?}");
        assert!(c.holds);
        let id = strong_dpi_check(MarkovChainSpec::new(0.37, 1.0).unwrap());
        assert!((id.lhs - id.rhs).abs() < 1e-15 && id.holds);
        let zero = strong_dpi_check(MarkovChainSpec::new(0.0, 0.8).unwrap());
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(zero.holds);
        assert!(MarkovChainSpec::new(1.2, 0.0).is_err());
    }

    /// Exact joint of X and Z for the chain, by enumerating X, Y, Z.
    fn chain_joint(e_xy: f64, e_yz: f64) -> BinaryJoint {
        let stage = |e: f64, u: usize, v: usize| if u == v { (1.0 + e) / 2.0 } else { (1.0 - e) / 2.0 };
        let mut p = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    p[x][z] += 0.5 * stage(e_xy, x, y) * stage(e_yz, y, z);
                }
            }
        }
        BinaryJoint::new(p).unwrap()
    }

    #[test]
    fn xor_composition_matches_chain_enumeration() {
        for (a, b) in [(0.5, 0.6), (0.9, -0.3), (0.2, 0.99), (1.0, 0.4)] {
            let j = chain_joint(a, b);
            assert!((mi_joint(&j) - mi_binary(a * b)).abs() < 1e-13);
        }
    }

    #[test]
    fn dpi_grid_has_no_violations() {
        let report = strong_dpi_grid(100).unwrap();
        assert_eq!(report.points, 10_000);
        assert_eq!(report.violations, 0, "{report:?}");
        assert!(strong_dpi_grid(1).is_err());
    }

    #[test]
    fn one_shot_examples() {
        let boundary = one_shot_condition(params(1.0, 0.0));
        assert_eq!(boundary.value, 1.0);
        assert!(boundary.holds);
        let supra = one_shot_condition(params(0.75, 0.75));
        assert!((supra.value - 0.9129).abs() < 1e-4);
        assert!(supra.holds);
        assert!(params(0.75, 0.75).sq_sum() > 1.0);
        let full = one_shot_condition(params(1.0, 1.0));
        assert_eq!(full.value, 2.0);
        assert!(!full.holds);
    }

    #[test]
    fn prop1_condition_examples() {
        let q = CorrelationParams::quantum_point();
        assert!(prop1_condition_i(RunPairParams {
            run1: params(0.9, 0.9),
            run2: q
        }));
        for run1 in [params(0.3, 0.9), params(1.0, 1.0), params(0.0, 0.0)] {
            assert!(prop1_condition_i(RunPairParams {
                run1,
                run2: params(0.0, 0.0)
            }));
        }
        let strong = RunPairParams {
            run1: params(0.05, 0.05),
            run2: params(0.9, 0.9),
        };
        assert!(!prop1_condition_i(strong));
        // Small-bias ratio tends to E1⁽²⁾² + E2⁽²⁾² = 1.62.
        let ratio = (mi_binary(0.05 * 0.9) * 2.0) / mi_binary(0.05);
        assert!((ratio - 1.62).abs() < 0.01, "{ratio}");

        assert!(prop1_condition_ii(q));
        assert!(!prop1_condition_ii(params(1.0, 1.0)));
        assert!(prop1_condition_ii(params(0.6, 0.8)));
    }

    /// Exact two-run joint of (x₁⊕x₂, b₁⊕b₂) given b'₁ = b'₂ = 0.
    fn two_run_joint(e_run1: f64, e_run2: f64) -> BinaryJoint {
        let mut p = [[0.0; 2]; 2];
        for b1 in 0..2 {
            for b2 in 0..2 {
                for f1 in 0..2 {
                    for f2 in 0..2 {
                        let w =
                            0.25 * if f1 == 0 {
                                (1.0 + e_run1) / 2.0
                            } else {
                                (1.0 - e_run1) / 2.0
                            } * if f2 == 0 {
                                (1.0 + e_run2) / 2.0
                            } else {
                                (1.0 - e_run2) / 2.0
                            };
                        let g = (b1 ^ f1) ^ (b2 ^ f2);
                        p[g][b1 ^ b2] += w;
                    }
                }
            }
        }
        BinaryJoint::new(p).unwrap()
    }

    #[test]
    fn run_pair_mi_matches_enumeration() {
        for (a, b) in [(0.9, 0.7), (0.3, 0.3), (-0.5, 0.8)] {
            assert!((mi_joint(&two_run_joint(a, b)) - mi_binary(a * b)).abs() < 1e-13);
        }
    }

    #[test]
    fn prop1_scan_examples() {
        let ok = prop1_equivalence_scan(params(0.6, 0.8), 50).unwrap();
        assert!(ok.condition_ii && ok.violation.is_none() && ok.consistent);
        assert_eq!(ok.points_checked, 2500);

        let bad = prop1_equivalence_scan(params(0.9, 0.9), 50).unwrap();
        assert!(!bad.condition_ii && bad.consistent);
        let v = bad.violation.unwrap();
        assert!(v.e1 <= 0.1 && v.e2 <= 0.1);

        let edge = prop1_equivalence_scan(params(0.0, 1.0), 50).unwrap();
        assert!(edge.condition_ii && edge.violation.is_none());
        assert!(prop1_equivalence_scan(params(0.0, 1.0), 5).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let zero = efficiency(params(0.0, 0.0), 4).unwrap();
        assert_eq!((zero.i_n, zero.lower, zero.upper), (0.0, 0.0, 0.0));

        let r = efficiency(params(0.75, 0.75), 3).unwrap();
        // Oracle: textbook MI for each task class.
        let oracle: f64 = (0..=3).map(|k| binomial(3, k) * mi_oracle(0.75f64.powi(3))).sum();
        assert!((r.i_n - oracle).abs() < 1e-12);
        // All 8 tasks share bias 0.421875: 8·(1 − h(0.7109375)).
        assert!((r.i_n - 1.0599429).abs() < 1e-7, "{r:?}");
        assert!((r.lower - 1.0271).abs() < 1e-4);
        assert!((r.upper - 1.4238).abs() < 1e-4);
        assert!(!r.causal_ok);

        let full = efficiency(params(1.0, 1.0), 1).unwrap();
        assert_eq!(full.i_n, 2.0);
        assert_eq!(full.upper, 2.0);
        assert!(efficiency(params(0.5, 0.5), 0).is_err());
    }

    #[test]
    fn sandwich_holds_on_grid() {
        for i in 0..=50 {
            for k in 0..=50 {
                let p = params(i as f64 / 50.0, k as f64 / 50.0);
                for n in 1..=8 {
                    let r = efficiency(p, n).unwrap();
                    assert!(r.lower - 1e-9 <= r.i_n && r.i_n <= r.upper + 1e-9, "{p:?} {r:?}");
                }
            }
        }
    }

    #[test]
    fn quantum_region_never_violates_efficiency() {
        for i in 0..=50 {
            for k in 0..=50 {
                let p = params(i as f64 / 50.0, k as f64 / 50.0);
                if p.sq_sum() <= 1.0 {
                    assert_eq!(first_violating_n(p, 20), None, "{p:?}");
                }
                if p.sq_sum() >= 1.1 {
                    assert!(first_violating_n(p, 25).is_some(), "{p:?}");
                }
            }
        }
        assert_eq!(first_violating_n(params(0.75, 0.75), 25), Some(3));
        assert_eq!(first_violating_n(CorrelationParams::quantum_point(), 20), None);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(hgr_causal_classify(params(0.5, 0.4)), CausalClass::Causal);
        assert_eq!(
            hgr_causal_classify(CorrelationParams::quantum_point()),
            CausalClass::Quantum
        );
        assert_eq!(hgr_causal_classify(params(0.75, 0.75)), CausalClass::Supraquantum);
        assert_eq!(hgr_causal_classify(params(-0.5, 0.5)), CausalClass::Causal);
        assert_eq!(
            hgr_causal_classify(params(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)),
            CausalClass::Quantum
        );
    }

    #[test]
    fn causal_region_is_inside_quantum_region() {
        for i in 0..=100 {
            for k in 0..=100 {
                let p = params(i as f64 / 100.0, k as f64 / 100.0);
                if p.abs_sum() <= 1.0 {
                    assert!(p.sq_sum() <= 1.0);
                    assert_eq!(hgr_causal_classify(p), CausalClass::Causal);
                }
            }
        }
    }

    #[test]
    fn empirical_efficiency_tracks_closed_form() {
        let p = params(0.75, 0.75);
        for n in 1..=3 {
            let batch = simulate(p, n, 100_000, 41 + n as u64).unwrap();
            let emp = empirical_efficiency(&batch).unwrap();
            let exact = efficiency(p, n).unwrap().i_n;
            assert!(
                (emp.i_n - emp.bias - exact).abs() <= 3.0 * emp.std_error,
                "n={n} {emp:?} vs {exact}"
            );
            for (i, m) in emp.per_task.iter().enumerate() {
                assert!(
                    (m.estimate - m.bias - task_mi(p, n, i as u32)).abs() <= 3.0 * m.sigma(),
                    "n={n} task {i}"
                );
            }
        }
    }

    #[test]
    fn sampled_prop1_is_consistent() {
        let r = prop1_sampled(3, 20, 5).unwrap();
        assert_eq!((r.inside.len(), r.outside.len()), (3, 3));
        assert!(r.inside.iter().all(|s| s.run2.sq_sum() <= 1.0 && s.condition_ii));
        assert!(r
            .outside
            .iter()
            .all(|s| s.run2.sq_sum() >= SAMPLED_OUTSIDE_MIN && !s.condition_ii));
        assert!(r.all_consistent());
        assert_eq!(r, prop1_sampled(3, 20, 5).unwrap());
    }

    #[test]
    fn task_mi_sums_to_efficiency() {
        let p = params(0.8, 0.3);
        for n in 1..=6 {
            let total: f64 = (0..1u32 << n).map(|i| task_mi(p, n, i)).sum();
            assert!((total - efficiency(p, n).unwrap().i_n).abs() < 1e-12);
        }
        assert!((task_mi(p, 2, 0) - mi_binary(0.64)).abs() < 1e-15);
        assert!((task_mi(p, 2, 3) - mi_binary(0.09)).abs() < 1e-15);
    }

    #[test]
    fn independent_bits_stay_within_plugin_spread() {
        let batch = simulate(params(0.0, 0.0), 2, 40_000, 9).unwrap();
        let emp = empirical_efficiency(&batch).unwrap();
        for m in &emp.per_task {
            assert!((m.estimate - m.bias).abs() <= 3.0 * m.sigma(), "{m:?}");
        }
    }

    #[test]
    fn mi_estimate_needs_samples() {
        let empty = GuessTossCounts {
            counts: [[0; 2]; 2],
            total: 0,
        };
        assert!(mi_estimate(&empty).is_err());
    }
}
