//! The two-party causal guessing game and its multi-run reformulation.
//!
//! Alice tosses `a`, Bob tosses `b`, and a shared task bit `b'` decides who
//! guesses: for `b' = 0` Alice must output `x = b`, for `b' = 1` Bob must output
//! `y = a`. All three bits are uniform.
//!
//! Over `n` independent runs with one box `(E1, E2)`, a task string with `k`
//! ones is won when the XOR of the designated guesses matches the XOR of the
//! matching tosses, which happens with probability `½(1 + E1^{n-k} E2^k)`.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{
    ocb_alice_instrument, ocb_bob_instrument, ocb_process, outcome_distribution, Instrument, ProcessMatrix,
};
use crate::rng::task_rng;

/// Box biases: `p(x = b | b'=0) = (1+e1)/2`, `p(y = a | b'=1) = (1+e2)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationParams {
    pub e1: f64,
    pub e2: f64,
}

impl CorrelationParams {
    pub fn new(e1: f64, e2: f64) -> Result<Self> {
        for (name, e) in [("e1", e1), ("e2", e2)] {
            if !e.is_finite() || e.abs() > 1.0 {
                return Err(Error::InvalidInput(format!("{name} = {e} is outside [-1, 1]")));
            }
        }
        Ok(Self { e1, e2 })
    }

    /// `e1 = e2 = 2^(-1/2)`, the biases of the qubit protocol.
    pub fn quantum_point() -> Self {
        Self {
            e1: std::f64::consts::FRAC_1_SQRT_2,
            e2: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn abs_sum(&self) -> f64 {
        self.e1.abs() + self.e2.abs()
    }

    pub fn sq_sum(&self) -> f64 {
        self.e1 * self.e1 + self.e2 * self.e2
    }
}

/// Success probability with its per-task breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameValue {
    pub p_success: f64,
    /// `p(x = b | b' = 0)`
    pub alice_guesses_b: f64,
    /// `p(y = a | b' = 1)`
    pub bob_guesses_a: f64,
}

impl GameValue {
    pub fn from_breakdown(alice_guesses_b: f64, bob_guesses_a: f64) -> Self {
        Self {
            p_success: 0.5 * (alice_guesses_b + bob_guesses_a),
            alice_guesses_b,
            bob_guesses_a,
        }
    }
}

/// Game value of a process with coin-dependent local instruments.
///
/// Alice's outcome label is her guess `x`; Bob's is `y`. Only the queried
/// guess is scored, so Bob's `b' = 0` instrument may have a single branch.
pub fn protocol_game_value<A, B>(w: &ProcessMatrix, alice: A, bob: B) -> Result<GameValue>
where
    A: Fn(u8) -> Result<Instrument>,
    B: Fn(u8, u8) -> Result<Instrument>,
{
    let mut guess_b = 0.0;
    let mut guess_a = 0.0;
    for a in 0..2u8 {
        let ia = alice(a)?;
        for b in 0..2u8 {
            guess_b += outcome_distribution(w, &ia, &bob(b, 0)?)?.alice_marginal(b as usize);
            guess_a += outcome_distribution(w, &ia, &bob(b, 1)?)?.bob_marginal(a as usize);
        }
    }
    Ok(GameValue::from_breakdown(guess_b / 4.0, guess_a / 4.0))
}

/// Value of the causally non-separable qubit protocol.
pub fn quantum_game_value() -> GameValue {
    protocol_game_value(
        &ocb_process(),
        |a| Ok(ocb_alice_instrument(a)),
        |b, bp| Ok(ocb_bob_instrument(b, bp)),
    )
    .expect("fixed protocol is well formed")
}

/// Direction in which a classical strategy may signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalOrder {
    AliceToBob,
    BobToAlice,
}

impl fmt::Display for CausalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CausalOrder::AliceToBob => write!(f, "A→B"),
            CausalOrder::BobToAlice => write!(f, "B→A"),
        }
    }
}

/// Deterministic classical strategy compatible with one causal order.
///
/// The earlier party (the sender) outputs a guess and a `message_bits`-bit
/// message from its own coin and `b'`; the later party (the receiver) guesses
/// from its coin, `b'` and the message. Tables are indexed by
/// `cell = 2·input + b'`; the receiver table by `(cell << message_bits) | m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    pub order: CausalOrder,
    pub message_bits: u8,
    pub sender_output: [u8; 4],
    pub message: [u8; 4],
    pub receiver_output: Vec<u8>,
}

impl ClassicalStrategy {
    pub fn new(
        order: CausalOrder,
        message_bits: u8,
        sender_output: [u8; 4],
        message: [u8; 4],
        receiver_output: Vec<u8>,
    ) -> Result<Self> {
        if !(1..=8).contains(&message_bits) {
            return Err(Error::InvalidInput(format!(
                "message size {message_bits} bits is unsupported"
            )));
        }
        let alphabet = 1usize << message_bits;
        if receiver_output.len() != 4 * alphabet {
            return Err(Error::InvalidInput(format!(
                "receiver table needs {} entries, got {}",
                4 * alphabet,
                receiver_output.len()
            )));
        }
        if sender_output.iter().chain(&receiver_output).any(|&v| v > 1) {
            return Err(Error::InvalidInput("guess tables must hold bits".into()));
        }
        if message.iter().any(|&m| m as usize >= alphabet) {
            return Err(Error::InvalidInput("message out of range".into()));
        }
        Ok(Self {
            order,
            message_bits,
            sender_output,
            message,
            receiver_output,
        })
    }

    /// `(x, y)` for coins `a`, `b` and task bit `bprime`.
    pub fn outputs(&self, a: u8, b: u8, bprime: u8) -> (u8, u8) {
        let (sender_in, receiver_in) = match self.order {
            CausalOrder::AliceToBob => (a, b),
            CausalOrder::BobToAlice => (b, a),
        };
        let s_cell = (2 * sender_in + bprime) as usize;
        let r_cell = (2 * receiver_in + bprime) as usize;
        let sent = self.sender_output[s_cell];
        let m = self.message[s_cell] as usize;
        let received = self.receiver_output[(r_cell << self.message_bits) | m];
        match self.order {
            CausalOrder::AliceToBob => (sent, received),
            CausalOrder::BobToAlice => (received, sent),
        }
    }

    /// Number of winning `(a, b, b')` combinations out of 8.
    pub fn wins(&self) -> (u32, u32) {
        let mut w0 = 0;
        let mut w1 = 0;
        for a in 0..2u8 {
            for b in 0..2u8 {
                let (x, _) = self.outputs(a, b, 0);
                w0 += u32::from(x == b);
                let (_, y) = self.outputs(a, b, 1);
                w1 += u32::from(y == a);
            }
        }
        (w0, w1)
    }
}

impl fmt::Display for ClassicalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (sender, s_in, s_out, receiver, r_in, r_out) = match self.order {
            CausalOrder::AliceToBob => ("Alice", 'a', 'x', "Bob", 'b', 'y'),
            CausalOrder::BobToAlice => ("Bob", 'b', 'y', "Alice", 'a', 'x'),
        };
        writeln!(f, "order {} ({}-bit messages)", self.order, self.message_bits)?;
        writeln!(f, "{sender}: ({s_in},b') -> ({s_out}, m)")?;
        for cell in 0..4 {
            writeln!(
                f,
                "  ({},{}) -> ({}, {})",
                cell / 2,
                cell % 2,
                self.sender_output[cell],
                self.message[cell]
            )?;
        }
        writeln!(f, "{receiver}: ({r_in},b',m) -> {r_out}")?;
        for (idx, out) in self.receiver_output.iter().enumerate() {
            let cell = idx >> self.message_bits;
            let m = idx & ((1 << self.message_bits) - 1);
            writeln!(f, "  ({},{},{}) -> {}", cell / 2, cell % 2, m, out)?;
        }
        Ok(())
    }
}

/// Exact value of a deterministic strategy over uniform `a`, `b`, `b'`.
pub fn strategy_game_value(s: &ClassicalStrategy) -> GameValue {
    let (w0, w1) = s.wins();
    GameValue::from_breakdown(w0 as f64 / 4.0, w1 as f64 / 4.0)
}

/// Maximum over deterministic classical strategies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalBound {
    pub message_bits: u8,
    pub value: f64,
    pub argmax: ClassicalStrategy,
    /// Deterministic strategies covered by the maximization.
    pub strategies: u64,
}

fn strategy_count(message_bits: u8) -> u64 {
    let alphabet = 1u64 << message_bits;
    // 2 orders × sender guesses × messages × receiver guesses
    2 * 16 * alphabet.pow(4) * (1u64 << (4 * alphabet))
}

fn check_message_bits(message_bits: u8) -> Result<()> {
    if !(1..=2).contains(&message_bits) {
        return Err(Error::InvalidInput(format!(
            "message size must be 1 or 2 bits, got {message_bits}"
        )));
    }
    Ok(())
}

/// Largest success probability of any causally ordered deterministic
/// strategy with `message_bits`-bit messages.
///
/// Sender tables and message tables are enumerated exhaustively; for each of
/// them the receiver table is optimized cell by cell, which is exact because
/// every receiver cell contributes independently to the win count. Mixtures
/// cannot do better since the value is affine in the strategy weights.
pub fn classical_max(message_bits: u8) -> Result<ClassicalBound> {
    check_message_bits(message_bits)?;
    let k = message_bits;
    let alphabet = 1usize << k;
    let mut best: Option<(u32, ClassicalStrategy)> = None;

    for order in [CausalOrder::AliceToBob, CausalOrder::BobToAlice] {
        for sender_code in 0..16u32 {
            let sender_output: [u8; 4] = std::array::from_fn(|c| ((sender_code >> c) & 1) as u8);
            for msg_code in 0..alphabet.pow(4) {
                let message: [u8; 4] = std::array::from_fn(|c| ((msg_code >> (k as usize * c)) % alphabet) as u8);

                // Receiver best response: for each (receiver input, b', m),
                // count the sender inputs it would win against per output bit.
                let mut receiver_output = vec![0u8; 4 * alphabet];
                let mut receiver_wins = 0u32;
                for r_in in 0..2u8 {
                    for bp in 0..2u8 {
                        let r_cell = (2 * r_in + bp) as usize;
                        for m in 0..alphabet {
                            let mut score = [0u32; 2];
                            for s_in in 0..2u8 {
                                if message[(2 * s_in + bp) as usize] as usize != m {
                                    continue;
                                }
                                // The receiver is scored when it is the guesser for this b'.
                                let receiver_guesses = match order {
                                    CausalOrder::AliceToBob => bp == 1,
                                    CausalOrder::BobToAlice => bp == 0,
                                };
                                if receiver_guesses {
                                    score[s_in as usize] += 1;
                                }
                            }
                            let out = u8::from(score[1] > score[0]);
                            receiver_output[(r_cell << k) | m] = out;
                            receiver_wins += score[out as usize];
                        }
                    }
                }
                let candidate = ClassicalStrategy {
                    order,
                    message_bits: k,
                    sender_output,
                    message,
                    receiver_output,
                };
                let (w0, w1) = candidate.wins();
                debug_assert_eq!(
                    receiver_wins,
                    match order {
                        CausalOrder::AliceToBob => w1,
                        CausalOrder::BobToAlice => w0,
                    }
                );
                let total = w0 + w1;
                if best.as_ref().is_none_or(|(b, _)| total > *b) {
                    best = Some((total, candidate));
                }
            }
        }
    }
    let (wins, argmax) = best.ok_or_else(|| Error::Internal("empty strategy space".into()))?;
    Ok(ClassicalBound {
        message_bits,
        value: wins as f64 / 8.0,
        argmax,
        strategies: strategy_count(message_bits),
    })
}

/// Calls `f` on every deterministic strategy for one order and message size.
pub fn for_each_strategy(order: CausalOrder, message_bits: u8, mut f: impl FnMut(&ClassicalStrategy)) -> Result<()> {
    check_message_bits(message_bits)?;
    let k = message_bits as usize;
    let alphabet = 1usize << k;
    let receiver_cells = 4 * alphabet;
    let mut s = ClassicalStrategy {
        order,
        message_bits,
        sender_output: [0; 4],
        message: [0; 4],
        receiver_output: vec![0; receiver_cells],
    };
    for sender_code in 0..16u32 {
        s.sender_output = std::array::from_fn(|c| ((sender_code >> c) & 1) as u8);
        for msg_code in 0..alphabet.pow(4) {
            s.message = std::array::from_fn(|c| ((msg_code >> (k * c)) % alphabet) as u8);
            for recv_code in 0..(1u64 << receiver_cells) {
                for (i, slot) in s.receiver_output.iter_mut().enumerate() {
                    *slot = ((recv_code >> i) & 1) as u8;
                }
                f(&s);
            }
        }
    }
    Ok(())
}

/// Maximum by literal enumeration of every strategy (both orders), scoring
/// each one with [`strategy_game_value`]. Returns the value and the number of
/// strategies visited.
pub fn classical_max_exhaustive(message_bits: u8) -> Result<(f64, u64)> {
    let mut best = 0.0f64;
    let mut visited = 0u64;
    for order in [CausalOrder::AliceToBob, CausalOrder::BobToAlice] {
        for_each_strategy(order, message_bits, |s| {
            best = best.max(strategy_game_value(s).p_success);
            visited += 1;
        })?;
    }
    Ok((best, visited))
}

/// Parity of the number of wrong guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Probability that `runs` independent guesses with bias `e` contain an
/// even (or odd) number of mistakes: `(1 ± e^runs)/2`.
pub fn parity_win_prob(e: f64, runs: u32, parity: Parity) -> f64 {
    let p = e.powi(runs as i32);
    match parity {
        Parity::Even => 0.5 * (1.0 + p),
        Parity::Odd => 0.5 * (1.0 - p),
    }
}

/// Winning probability for a task string with `n - k` zeros and `k` ones:
/// `½[1 + E1^{n-k} E2^k]`.
pub fn p_nk(params: CorrelationParams, n: u32, k: u32) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidInput(format!("k = {k} exceeds n = {n}")));
    }
    Ok(0.5 * (1.0 + params.e1.powi((n - k) as i32) * params.e2.powi(k as i32)))
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `P_n = 2^{-n} Σ_{k=0}^{n} C(n,k) p_{n-k,k}`, the mean success over uniform
/// task strings.
pub fn rac_value(params: CorrelationParams, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one run".into()));
    }
    let mut total = 0.0;
    for k in 0..=n {
        total += binomial(n, k) * p_nk(params, n, k)?;
    }
    Ok(total / 2f64.powi(n as i32))
}

/// `½ + (E1 + E2)^n / 2^{n+1}`.
pub fn rac_value_closed_form(params: CorrelationParams, n: u32) -> f64 {
    0.5 + (params.e1 + params.e2).powi(n as i32) / 2f64.powi(n as i32 + 1)
}

/// One trial of `n` runs; bit `j` of each field belongs to run `j` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub a: u32,
    pub b: u32,
    pub bprime: u32,
    pub x: u32,
    pub y: u32,
}

/// Monte Carlo samples of `n`-run games.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunBatch {
    pub params: CorrelationParams,
    pub n: u32,
    pub trials: usize,
    pub seed: u64,
    pub records: Vec<RunRecord>,
}

pub const MAX_RUNS: u32 = 32;
/// Trials per independently seeded block.
const BLOCK: usize = 4096;

/// Draws `trials` games of `n` runs from the box `params`.
///
/// Per run: `a`, `b`, `b'` uniform; when `b' = 0`, `x = b` with probability
/// `(1+E1)/2` and `y` is a fair coin; when `b' = 1`, `y = a` with probability
/// `(1+E2)/2` and `x` is a fair coin. Block `t` of 4096 trials draws from
/// seed `mix(seed, t)`, so the batch does not depend on the thread count.
pub fn simulate(params: CorrelationParams, n: u32, trials: usize, seed: u64) -> Result<RunBatch> {
    if n == 0 || n > MAX_RUNS {
        return Err(Error::InvalidInput(format!(
            "runs per game must be in 1..={MAX_RUNS}, got {n}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let flip1 = (1.0 - params.e1) / 2.0;
    let flip2 = (1.0 - params.e2) / 2.0;
    let blocks = trials.div_ceil(BLOCK);
    let records: Vec<RunRecord> = (0..blocks)
        .into_par_iter()
        .map(|t| {
            let mut rng = task_rng(seed, t as u64);
            let len = BLOCK.min(trials - t * BLOCK);
            (0..len)
                .map(|_| {
                    let mut r = RunRecord {
                        a: 0,
                        b: 0,
                        bprime: 0,
                        x: 0,
                        y: 0,
                    };
                    for j in 0..n {
                        let a = rng.random::<bool>() as u32;
                        let b = rng.random::<bool>() as u32;
                        let bp = rng.random::<bool>() as u32;
                        let (x, y) = if bp == 0 {
                            (b ^ rng.random_bool(flip1) as u32, rng.random::<bool>() as u32)
                        } else {
                            (rng.random::<bool>() as u32, a ^ rng.random_bool(flip2) as u32)
                        };
                        r.a |= a << j;
                        r.b |= b << j;
                        r.bprime |= bp << j;
                        r.x |= x << j;
                        r.y |= y << j;
                    }
                    r
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(RunBatch {
        params,
        n,
        trials,
        seed,
        records,
    })
}

/// Task-bit vector for task index `i`: the first run is the most significant
/// bit of `i` (for `n = 2`, `i = 1` means `b'_1 = 0, b'_2 = 1`).
pub fn task_mask(i: u32, n: u32) -> u32 {
    (0..n).fold(0, |mask, j| mask | (((i >> (n - 1 - j)) & 1) << j))
}

fn parity(v: u32) -> usize {
    (v.count_ones() & 1) as usize
}

/// Guess and toss bits `(g_i, t_i)` of a trial for task vector `mask`.
fn guess_toss(r: &RunRecord, mask: u32, n: u32) -> (usize, usize) {
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let g = parity((r.x & !mask & all) | (r.y & mask));
    let t = parity((r.b & !mask & all) | (r.a & mask));
    (g, t)
}

/// Counts of `(g_i, t_i)` among trials whose task vector encodes `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GuessTossCounts {
    /// `counts[g][t]`
    pub counts: [[u64; 2]; 2],
    pub total: u64,
}

impl GuessTossCounts {
    /// Empirical joint distribution; `None` when no trial had task `i`.
    pub fn frequencies(&self) -> Option<[[f64; 2]; 2]> {
        if self.total == 0 {
            return None;
        }
        let t = self.total as f64;
        Some(self.counts.map(|row| row.map(|c| c as f64 / t)))
    }

    pub fn agreement(&self) -> Option<f64> {
        (self.total > 0).then(|| (self.counts[0][0] + self.counts[1][1]) as f64 / self.total as f64)
    }
}

/// Empirical joint of `g_i` (XOR of designated guesses) and `t_i` (XOR of the
/// matching tosses) over trials with task vector `i`.
pub fn batch_guess_toss(batch: &RunBatch, i: u32) -> Result<GuessTossCounts> {
    if batch.n < 32 && i >= (1u32 << batch.n) {
        return Err(Error::InvalidInput(format!(
            "task index {i} needs more than {} runs",
            batch.n
        )));
    }
    let mask = task_mask(i, batch.n);
    let mut counts = [[0u64; 2]; 2];
    let mut total = 0;
    for r in batch.records.iter().filter(|r| r.bprime == mask) {
        let (g, t) = guess_toss(r, mask, batch.n);
        counts[g][t] += 1;
        total += 1;
    }
    Ok(GuessTossCounts { counts, total })
}

/// Fraction of trials won (`g = t` for the trial's own task vector), an
/// estimate of [`rac_value`].
pub fn empirical_success(batch: &RunBatch) -> f64 {
    let wins = batch
        .records
        .iter()
        .filter(|r| {
            let (g, t) = guess_toss(r, r.bprime, batch.n);
            g == t
        })
        .count();
    wins as f64 / batch.trials as f64
}
