//! Region sweeps over `(E1, E2)` and simplex optimization of local operations
//! against a fixed process.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{protocol_game_value, CorrelationParams, GameValue};
use crate::info::{first_violating_n, hgr_causal_classify, one_shot_condition, CausalClass};
use crate::linalg::ComplexMatrix;
use crate::process::{
    correlated_flip_channel, measure_prepare_instrument, pure_qubit_state, validate_process, Instrument, ProcessMatrix,
    SystemDims,
};
use crate::rng::{mix, task_rng};

/// Horizon used by [`find_onecon_supraquantum`] when looking for `I(n) > 1`.
pub const WITNESS_N_MAX: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPoint {
    pub e1: f64,
    pub e2: f64,
    pub abs_sum: f64,
    pub sq_sum: f64,
    pub class: CausalClass,
    /// `I(x:b|b'=0) + I(y:a|b'=1) ≤ 1`
    pub one_con: bool,
    pub first_violating_n: Option<u32>,
}

pub fn classify_point(params: CorrelationParams, n_max: u32) -> RegionPoint {
    RegionPoint {
        e1: params.e1,
        e2: params.e2,
        abs_sum: params.abs_sum(),
        sq_sum: params.sq_sum(),
        class: hgr_causal_classify(params),
        one_con: one_shot_condition(params).holds,
        first_violating_n: first_violating_n(params, n_max),
    }
}

fn grid_value(i: usize, resolution: usize) -> f64 {
    (i as f64 / (resolution - 1) as f64).min(1.0)
}

/// Classifies every point of a uniform `resolution × resolution` grid over
/// `[0, 1]²`, `e1`-major.
pub fn sweep(resolution: usize, n_max: u32) -> Result<Vec<RegionPoint>> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    let rows: Vec<Vec<RegionPoint>> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let e1 = grid_value(i, resolution);
            (0..resolution)
                .map(|k| {
                    let params = CorrelationParams::new(e1, grid_value(k, resolution)).expect("grid inside [0,1]");
                    classify_point(params, n_max)
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// First grid point (spacing `step`) that is supraquantum yet passes the
/// one-shot condition.
///
/// Points are visited by distance from the diagonal, then by the smaller
/// coordinate, then by `e1`, so symmetric witnesses come first.
pub fn find_onecon_supraquantum(step: f64) -> Result<RegionPoint> {
    if !(step > 0.0 && step <= 0.05) {
        return Err(Error::InvalidInput(format!("step must be in (0, 0.05], got {step}")));
    }
    let count = (1.0 / step + 1e-9).floor() as usize;
    let value = |i: usize| (i as f64 * step).min(1.0);
    let mut order: Vec<(usize, usize)> = (0..=count).flat_map(|i| (0..=count).map(move |k| (i, k))).collect();
    order.sort_by_key(|&(i, k)| (i.abs_diff(k), i.min(k), i));
    for (i, k) in order {
        let params = CorrelationParams::new(value(i), value(k))?;
        if hgr_causal_classify(params) == CausalClass::Supraquantum && one_shot_condition(params).holds {
            return Ok(classify_point(params, WITNESS_N_MAX));
        }
    }
    Err(Error::Internal(format!(
        "no supraquantum one-shot witness at step {step}"
    )))
}

/// Bloch vector of the spherical angles `(θ, φ)`.
pub fn axis(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Spherical angles `(θ, φ)` of the five axes defining a local protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolParams {
    pub alice_measure: [f64; 2],
    /// Alice prepares `±` this axis for coin `a = 0 / 1`.
    pub alice_prepare: [f64; 2],
    /// Bob's measurement when `b' = 1`.
    pub bob_measure: [f64; 2],
    /// B1 factor of Bob's `b' = 0` channel.
    pub bob_n: [f64; 2],
    /// B2 factor of Bob's `b' = 0` channel.
    pub bob_m: [f64; 2],
}

impl ProtocolParams {
    pub const LEN: usize = 10;

    /// Every axis along ẑ except `n̂ = x̂`.
    pub fn reference() -> Self {
        Self {
            alice_measure: [0.0, 0.0],
            alice_prepare: [0.0, 0.0],
            bob_measure: [0.0, 0.0],
            bob_n: [FRAC_PI_2, 0.0],
            bob_m: [0.0, 0.0],
        }
    }

    pub fn to_array(&self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        for (slot, pair) in [
            self.alice_measure,
            self.alice_prepare,
            self.bob_measure,
            self.bob_n,
            self.bob_m,
        ]
        .iter()
        .enumerate()
        {
            out[2 * slot] = pair[0];
            out[2 * slot + 1] = pair[1];
        }
        out
    }

    pub fn from_array(v: [f64; Self::LEN]) -> Self {
        Self {
            alice_measure: [v[0], v[1]],
            alice_prepare: [v[2], v[3]],
            bob_measure: [v[4], v[5]],
            bob_n: [v[6], v[7]],
            bob_m: [v[8], v[9]],
        }
    }

    pub fn alice_instrument(&self, a: u8) -> Result<Instrument> {
        let prep = axis(self.alice_prepare[0], self.alice_prepare[1]);
        let sign = if a & 1 == 0 { 1.0 } else { -1.0 };
        let state = pure_qubit_state(prep.map(|c| sign * c))?;
        measure_prepare_instrument(axis(self.alice_measure[0], self.alice_measure[1]), &state)
    }

    pub fn bob_instrument(&self, b: u8, bprime: u8) -> Result<Instrument> {
        if bprime & 1 == 1 {
            let mixed = ComplexMatrix::identity(2).scale(0.5);
            measure_prepare_instrument(axis(self.bob_measure[0], self.bob_measure[1]), &mixed)
        } else {
            correlated_flip_channel(
                b,
                axis(self.bob_n[0], self.bob_n[1]),
                axis(self.bob_m[0], self.bob_m[1]),
            )
        }
    }
}

/// Game value of the protocol described by `params` on `w`.
pub fn evaluate_protocol(w: &ProcessMatrix, params: &ProtocolParams) -> Result<GameValue> {
    protocol_game_value(w, |a| params.alice_instrument(a), |b, bp| params.bob_instrument(b, bp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Add a start at [`ProtocolParams::reference`] ahead of the random ones.
    pub include_reference: bool,
    pub max_evaluations: usize,
    /// Stop once the simplex values span less than this.
    pub value_spread: f64,
}

impl OptimizeOptions {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self {
            restarts,
            seed,
            include_reference: false,
            max_evaluations: 2000,
            value_spread: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best_params: ProtocolParams,
    pub best_value: f64,
    /// Number of simplex runs, including the reference start.
    pub restarts: usize,
    /// Objective evaluations summed over all runs.
    pub evaluations: usize,
    /// Index of the winning run; the reference start, when present, is 0.
    pub best_restart: usize,
}

/// Multi-start Nelder–Mead maximization of the game value over
/// [`ProtocolParams`] with `restarts` seeded random starts.
pub fn optimize_protocol(w: &ProcessMatrix, restarts: usize, seed: u64) -> Result<OptimizationResult> {
    optimize_protocol_with(w, OptimizeOptions::new(restarts, seed))
}

pub fn optimize_protocol_with(w: &ProcessMatrix, opts: OptimizeOptions) -> Result<OptimizationResult> {
    if w.dims() != SystemDims::QUBITS {
        return Err(Error::InvalidInput(format!(
            "protocol search needs qubit systems, got {:?}",
            w.dims().as_array()
        )));
    }
    let report = validate_process(w, 32, opts.seed)?;
    if !report.verdict {
        return Err(Error::InvalidProcess(format!(
            "process failed validation (min eigenvalue {:.3e}, trace {}, probability deviation {:.3e})",
            report.min_eigenvalue, report.trace, report.unit_probability_deviation
        )));
    }
    if opts.restarts == 0 && !opts.include_reference {
        return Err(Error::InvalidInput("need at least one start".into()));
    }
    if opts.max_evaluations <= ProtocolParams::LEN {
        return Err(Error::InvalidInput("evaluation budget too small for a simplex".into()));
    }

    let mut starts = Vec::with_capacity(opts.restarts + 1);
    if opts.include_reference {
        starts.push(Start::Reference);
    }
    starts.extend((0..opts.restarts as u64).map(Start::Random));

    let objective = |x: &[f64; ProtocolParams::LEN]| -> Result<f64> {
        Ok(-evaluate_protocol(w, &ProtocolParams::from_array(*x))?.p_success)
    };
    let runs = starts
        .par_iter()
        .map(|start| {
            let simplex = start.simplex(opts.seed);
            nelder_mead(&objective, simplex, opts.max_evaluations, opts.value_spread)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value < runs[best].value {
            best = i;
        }
    }
    Ok(OptimizationResult {
        best_params: ProtocolParams::from_array(runs[best].point),
        best_value: -runs[best].value,
        restarts: runs.len(),
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        best_restart: best,
    })
}

#[derive(Debug, Clone, Copy)]
enum Start {
    Reference,
    Random(u64),
}

const INITIAL_EDGE: f64 = 0.5;

impl Start {
    fn simplex(&self, seed: u64) -> Vec<[f64; ProtocolParams::LEN]> {
        let origin = match *self {
            Start::Reference => ProtocolParams::reference().to_array(),
            Start::Random(r) => {
                let mut rng = task_rng(mix(seed, r), 0);
                std::array::from_fn(|i| {
                    if i % 2 == 0 {
                        rng.random_range(0.0..PI)
                    } else {
                        rng.random_range(0.0..2.0 * PI)
                    }
                })
            }
        };
        let mut simplex = vec![origin];
        for i in 0..ProtocolParams::LEN {
            let mut v = origin;
            v[i] += INITIAL_EDGE;
            simplex.push(v);
        }
        simplex
    }
}

struct SimplexRun<const D: usize> {
    point: [f64; D],
    value: f64,
    evaluations: usize,
}

/// Minimizes `f` from the given simplex with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½).
fn nelder_mead<F, const D: usize>(
    f: &F,
    simplex: Vec<[f64; D]>,
    max_evaluations: usize,
    value_spread: f64,
) -> Result<SimplexRun<D>>
where
    F: Fn(&[f64; D]) -> Result<f64>,
{
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |x: &[f64; D]| {
        evaluations.set(evaluations.get() + 1);
        f(x)
    };
    let mut verts: Vec<([f64; D], f64)> = simplex
        .into_iter()
        .map(|x| eval(&x).map(|v| (x, v)))
        .collect::<Result<_>>()?;

    let affine = |a: &[f64; D], b: &[f64; D], t: f64| -> [f64; D] { std::array::from_fn(|i| a[i] + t * (b[i] - a[i])) };

    loop {
        // Stable sort keeps earlier vertices ahead on ties.
        verts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = verts[D].1 - verts[0].1;
        if spread < value_spread || evaluations.get() >= max_evaluations {
            break;
        }
        let centroid: [f64; D] = std::array::from_fn(|i| verts[..D].iter().map(|v| v.0[i]).sum::<f64>() / D as f64);
        let worst = verts[D];

        let reflected = affine(&centroid, &worst.0, -1.0);
        let fr = eval(&reflected)?;
        if fr < verts[0].1 {
            let expanded = affine(&centroid, &worst.0, -2.0);
            let fe = eval(&expanded)?;
            verts[D] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < verts[D - 1].1 {
            verts[D] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let c = affine(&centroid, &reflected, 0.5);
            let fc = eval(&c)?;
            (c, fc)
        } else {
            let c = affine(&centroid, &worst.0, 0.5);
            let fc = eval(&c)?;
            (c, fc)
        };
        if fc < fr.min(worst.1) {
            verts[D] = (contracted, fc);
            continue;
        }
        let best = verts[0].0;
        for v in verts.iter_mut().skip(1) {
            v.0 = affine(&best, &v.0, 0.5);
            v.1 = eval(&v.0)?;
        }
    }
    verts.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(SimplexRun {
        point: verts[0].0,
        value: verts[0].1,
        evaluations: evaluations.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::quantum_game_value;
    use crate::process::ocb_process;
    use std::f64::consts::SQRT_2;

    const Q: f64 = (2.0 + SQRT_2) / 4.0;

    fn params(e1: f64, e2: f64) -> CorrelationParams {
        CorrelationParams::new(e1, e2).unwrap()
    }

    #[test]
    fn point_examples() {
        let p = classify_point(params(0.5, 0.4), 25);
        assert_eq!(
            (p.class, p.one_con, p.first_violating_n),
            (CausalClass::Causal, true, None)
        );
        let p = classify_point(params(0.75, 0.75), 25);
        assert_eq!(
            (p.class, p.one_con, p.first_violating_n),
            (CausalClass::Supraquantum, true, Some(3))
        );
        let p = classify_point(CorrelationParams::quantum_point(), 20);
        assert_eq!((p.class, p.first_violating_n), (CausalClass::Quantum, None));
    }

    #[test]
    fn sweep_layout_and_consistency() {
        let pts = sweep(21, 25).unwrap();
        assert_eq!(pts.len(), 441);
        assert_eq!((pts[0].e1, pts[0].e2), (0.0, 0.0));
        assert_eq!((pts[1].e1, pts[1].e2), (0.0, 0.05));
        assert_eq!((pts[440].e1, pts[440].e2), (1.0, 1.0));
        for p in &pts {
            assert_eq!(p.class, hgr_causal_classify(params(p.e1, p.e2)));
            if p.sq_sum <= 1.0 {
                assert_eq!(p.first_violating_n, None);
            }
        }
        let witness = pts.iter().find(|p| p.e1 == 0.75 && p.e2 == 0.75).unwrap();
        assert_eq!(witness.first_violating_n, Some(3));
        assert!(sweep(1, 5).is_err());
    }

    #[test]
    fn classes_escalate_along_rays() {
        for dir in 0..=20 {
            let angle = dir as f64 / 20.0 * FRAC_PI_2;
            let (c, s) = (angle.cos(), angle.sin());
            let mut last = CausalClass::Causal;
            for t in 0..=100 {
                let r = t as f64 / 100.0 * SQRT_2;
                let (e1, e2) = (r * c, r * s);
                if e1 > 1.0 || e2 > 1.0 {
                    break;
                }
                let class = hgr_causal_classify(params(e1, e2));
                assert!(class >= last, "ray {dir} at r = {r}");
                last = class;
            }
        }
    }

    #[test]
    fn witness_search() {
        let p = find_onecon_supraquantum(0.05).unwrap();
        assert_eq!((p.e1, p.e2), (0.75, 0.75));
        assert!(p.sq_sum > 1.0 && p.one_con);
        assert_eq!(p.first_violating_n, Some(3));
        let fine = find_onecon_supraquantum(0.01).unwrap();
        assert_eq!(fine.e1, fine.e2);
        assert_eq!((fine.e1, fine.class), (0.71, CausalClass::Supraquantum));
        assert!(fine.sq_sum > 1.0 && fine.one_con);
        // (0.71² · 2)^n only clears 2 ln 2 near n = 40.
        assert_eq!(fine.first_violating_n, None);
        assert!(first_violating_n(params(0.71, 0.71), 60).is_some());
        assert!(find_onecon_supraquantum(0.1).is_err());
        assert!(find_onecon_supraquantum(0.0).is_err());
    }

    #[test]
    fn reference_protocol_reproduces_quantum_value() {
        let v = evaluate_protocol(&ocb_process(), &ProtocolParams::reference()).unwrap();
        assert!((v.p_success - Q).abs() < 1e-12, "{v:?}");
        assert!((v.p_success - quantum_game_value().p_success).abs() < 1e-12);
        assert!((v.alice_guesses_b - v.bob_guesses_a).abs() < 1e-12);
    }

    #[test]
    fn reference_instruments_match_fixed_ones() {
        use crate::process::{ocb_alice_instrument, ocb_bob_instrument};
        let r = ProtocolParams::reference();
        for a in 0..2 {
            let mine = r.alice_instrument(a).unwrap();
            let fixed = ocb_alice_instrument(a);
            for (x, y) in mine.elements().iter().zip(fixed.elements()) {
                assert!(x.op().max_abs_diff(y.op()) < 1e-15);
            }
        }
        for b in 0..2 {
            for bp in 0..2 {
                let mine = r.bob_instrument(b, bp).unwrap();
                let fixed = ocb_bob_instrument(b, bp);
                for (x, y) in mine.elements().iter().zip(fixed.elements()) {
                    assert!(x.op().max_abs_diff(y.op()) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn params_round_trip_and_completeness() {
        let p = ProtocolParams::from_array(std::array::from_fn(|i| 0.3 * i as f64 + 0.1));
        assert_eq!(ProtocolParams::from_array(p.to_array()), p);
        for a in 0..2 {
            assert!(p.alice_instrument(a).unwrap().completeness_deviation().unwrap() < 1e-10);
        }
        for b in 0..2 {
            for bp in 0..2 {
                assert!(p.bob_instrument(b, bp).unwrap().completeness_deviation().unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn trivial_process_gives_half() {
        let w = ProcessMatrix::trivial(SystemDims::QUBITS);
        for s in 0..5 {
            let x: [f64; 10] = std::array::from_fn(|i| (i as f64 + 1.0) * 0.37 * (s + 1) as f64);
            let v = evaluate_protocol(&w, &ProtocolParams::from_array(x)).unwrap();
            assert!((v.p_success - 0.5).abs() < 1e-12);
        }
        let r = optimize_protocol(&w, 2, 3).unwrap();
        assert!((r.best_value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn nelder_mead_minimizes_quadratic() {
        let f = |x: &[f64; 3]| Ok((x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + 0.5 * x[2] * x[2]);
        let simplex = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let run = nelder_mead(&f, simplex, 2000, 1e-14).unwrap();
        assert!(run.value < 1e-12);
        assert!((run.point[0] - 1.0).abs() < 1e-5 && (run.point[1] + 0.5).abs() < 1e-5);
        assert!(run.evaluations < 2000);
    }

    #[test]
    fn reference_start_keeps_exact_value() {
        let mut opts = OptimizeOptions::new(0, 1);
        opts.include_reference = true;
        let r = optimize_protocol_with(&ocb_process(), opts).unwrap();
        assert!((r.best_value - Q).abs() < 1e-10, "{r:?}");
        assert!(r.best_value <= 1.0);
        assert_eq!((r.restarts, r.best_restart), (1, 0));
    }

    #[test]
    fn optimizer_is_deterministic_and_reproducible() {
        let w = ocb_process();
        let a = optimize_protocol(&w, 4, 11).unwrap();
        let b = optimize_protocol(&w, 4, 11).unwrap();
        assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
        assert_eq!(a.best_params, b.best_params);
        let again = evaluate_protocol(&w, &a.best_params).unwrap().p_success;
        assert!((again - a.best_value).abs() < 1e-10);
        assert!(a.best_value <= Q + 1e-10);
    }

    #[test]
    fn optimizer_rejects_invalid_process() {
        let bad = ProcessMatrix::trivial(SystemDims::QUBITS);
        let scaled = ProcessMatrix::new(SystemDims::QUBITS, bad.op().scale(2.0)).unwrap();
        assert!(optimize_protocol(&scaled, 1, 0).is_err());
    }
}
