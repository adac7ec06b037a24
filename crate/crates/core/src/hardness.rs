//! Numerical checks of the product-measurement lower bound for the GHZ-like
//! pair `U_±`: exact single-shot total variation, single-qubit Clifford twirl
//! moments, and Monte Carlo distinguishing experiments.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use num_rational::Ratio;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::pairwise_sum;
use crate::error::{resource, validation, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::shadows::{born_sample, PauliBasis};
use crate::sim::circuit::apply_1q;
use crate::sim::{apply_ghz_like, ProductState, StabilizerLabel, StateVector};

/// Largest `n` for exact single-shot TV enumeration (`36^n` terms).
pub const TV_CAP: usize = 4;
/// Largest `n` accepted by [`twirl_moments`].
pub const MOMENT_CAP: usize = 6;

const TRIAL_TAG: u64 = 0xd157;

type M2 = [C64; 4];

const PX: M2 = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
const PZ: M2 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)];

fn mul2(a: &M2, b: &M2) -> M2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}


fn apply2(m: &M2, v: [C64; 2]) -> [C64; 2] {
    [m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]]
}

/// `<a|M|b>` for single-qubit vectors.
fn sandwich(a: [C64; 2], m: &M2, b: [C64; 2]) -> C64 {
    let mb = apply2(m, b);
    a[0].conj() * mb[0] + a[1].conj() * mb[1]
}

/// Fixes the global phase so that the first entry of non-negligible
/// magnitude is real and positive.
fn canonical(m: &M2) -> M2 {
    let pivot = m.iter().find(|z| z.norm() > 1e-9).copied().unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    [m[0] * phase, m[1] * phase, m[2] * phase, m[3] * phase]
}

fn same(a: &M2, b: &M2) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-9)
}

/// The 24 single-qubit Clifford unitaries modulo global phase, generated
/// as the closure of `{H, S}`. Index 0 is the identity.
pub fn single_qubit_cliffords() -> &'static [M2] {
    static TABLE: OnceLock<Vec<M2>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let gens: [M2; 2] = [
            [C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
        ];
        let mut out = vec![canonical(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)])];
        let mut frontier = 0;
        while frontier < out.len() {
            let cur = out[frontier];
            frontier += 1;
            for g in &gens {
                let next = canonical(&mul2(g, &cur));
                if !out.iter().any(|m| same(m, &next)) {
                    out.push(next);
                }
            }
        }
        out
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerConstant {
    pub value: f64,
    /// Sum over the 36 ordered pairs.
    pub pair_sum: f64,
    /// The mean with every term snapped to a multiple of 1/4.
    pub exact: Ratio<i64>,
}

fn stabilizer_states() -> Vec<[C64; 2]> {
    StabilizerLabel::ALL.iter().map(|l| l.amplitudes()).collect()
}

/// `Σ_{x,y} |<x|A|y><y|B|x>|` over single-qubit stabilizer states, with
/// each term snapped to a quarter-integer for the exact value.
fn stabilizer_pair_sum(a: &M2, b: &M2) -> (f64, Ratio<i64>) {
    let states = stabilizer_states();
    let mut sum = 0.0;
    let mut exact = Ratio::from_integer(0);
    for x in &states {
        for y in &states {
            let v = (sandwich(*x, a, *y) * sandwich(*y, b, *x)).norm();
            sum += v;
            let quarters = (4.0 * v).round();
            debug_assert!((4.0 * v - quarters).abs() < 1e-9);
            exact += Ratio::new(quarters as i64, 4);
        }
    }
    (sum, exact)
}

/// Mean of `|<x|X|y><y|Z|x>|` over pairs of single-qubit stabilizer states.
pub fn stabilizer_constant() -> StabilizerConstant {
    let (pair_sum, exact) = stabilizer_pair_sum(&PX, &PZ);
    StabilizerConstant { value: pair_sum / 36.0, pair_sum, exact: exact / 36 }
}

/// Same enumeration with `Z` replaced by `X`.
pub fn stabilizer_constant_xx() -> f64 {
    stabilizer_pair_sum(&PX, &PX).0 / 36.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleShotTv {
    pub n: usize,
    pub exact_tv: f64,
    /// The same sum with `|z|` in place of `|Re z|` (or `|Im z|`).
    pub abs_sum: f64,
    pub bound: f64,
}

/// Upper bound `(14/18)^n` on single-shot TV for random stabilizer inputs
/// and random Pauli bases.
pub fn single_shot_bound(n: usize) -> f64 {
    (14.0f64 / 18.0).powi(n as i32)
}

/// Exact single-shot total variation between `U_+` and `U_-` when the input
/// is a uniform stabilizer product and the measurement a uniform Pauli basis.
pub fn single_measurement_tv(n: usize) -> Result<SingleShotTv> {
    if n == 0 {
        return validation("n must be at least 1");
    }
    if n > TV_CAP {
        return resource(format!("exact TV enumeration capped at n = {TV_CAP}, got {n}"));
    }
    // Per-qubit z = <φ|X|ψ><ψ|Z|φ> for ψ, φ ranging over the six states.
    let states = stabilizer_states();
    let table: Vec<C64> = states
        .iter()
        .flat_map(|psi| states.iter().map(move |phi| sandwich(*phi, &PX, *psi) * sandwich(*psi, &PZ, *phi)))
        .collect();
    let terms = 36usize.pow(n as u32);
    let parts: Vec<(f64, f64)> = (0..terms)
        .into_par_iter()
        .map(|mut idx| {
            let mut z = C64::new(1.0, 0.0);
            for _ in 0..n {
                z *= table[idx % 36];
                idx /= 36;
            }
            let part = if n % 2 == 1 { z.re } else { z.im };
            (part.abs(), z.norm())
        })
        .collect();
    let re_sum = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let abs_sum = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
    let weight = 18f64.powi(n as i32).recip();
    Ok(SingleShotTv { n, exact_tv: re_sum * weight, abs_sum: abs_sum * weight, bound: single_shot_bound(n) })
}

/// Twirl average of `z` and `|z|^2` for one qubit with fixed `ψ`, `φ`,
/// where `z = <φ|W2† X W1|ψ><ψ|W1† Z W2|φ>`.
pub fn twirl_moments_single(psi: [C64; 2], phi: [C64; 2]) -> (C64, f64) {
    let cl = single_qubit_cliffords();
    let mut m2 = C64::new(0.0, 0.0);
    let mut mabs2 = 0.0;
    for w1 in cl {
        let a = apply2(w1, psi);
        for w2 in cl {
            let b = apply2(w2, phi);
            let z = sandwich(b, &PX, a) * sandwich(a, &PZ, b);
            m2 += z * z;
            mabs2 += z.norm_sqr();
        }
    }
    let count = (cl.len() * cl.len()) as f64;
    (m2 / count, mabs2 / count)
}

/// `(E[z^2], E[|z|^2])` over independent single-qubit Clifford twirls on
/// `n` qubits, with every factor of `ψ` and `φ` fixed to `|0>`. Both
/// moments factorize over qubits.
pub fn twirl_moments(n: usize) -> Result<(f64, f64)> {
    let zero = StabilizerLabel::Zero.amplitudes();
    twirl_moments_for(&vec![zero; n], &vec![zero; n])
}

pub fn twirl_moments_for(psi: &[[C64; 2]], phi: &[[C64; 2]]) -> Result<(f64, f64)> {
    let n = psi.len();
    if n == 0 || phi.len() != n {
        return validation("psi and phi must have the same non-zero number of factors");
    }
    if n > MOMENT_CAP {
        return resource(format!("twirl moments capped at n = {MOMENT_CAP}, got {n}"));
    }
    let mut m2 = C64::new(1.0, 0.0);
    let mut mabs2 = 1.0;
    for (p, f) in psi.iter().zip(phi) {
        let (a, b) = twirl_moments_single(*p, *f);
        m2 *= a;
        mabs2 *= b;
    }
    Ok((m2.re, mabs2))
}

/// Per-qubit Clifford indices of the input-side (`w1`) and output-side
/// (`w2`) layers around the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Twirl {
    pub w1: Vec<usize>,
    pub w2: Vec<usize>,
}

impl Twirl {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let k = single_qubit_cliffords().len();
        Self { w1: (0..n).map(|_| rng.random_range(0..k)).collect(), w2: (0..n).map(|_| rng.random_range(0..k)).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwirlMode {
    None,
    LocalCliffordPair,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub input: ProductState,
    pub bases: Vec<PauliBasis>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub input: ProductState,
    pub bases: Vec<PauliBasis>,
    pub outcome: u64,
}

/// An adaptive product-input, product-measurement learner. `next` sees the
/// transcript so far; `guess` additionally receives the twirl layers, which
/// are revealed only after all measurements.
pub trait Strategy: Sync {
    fn id(&self) -> String;
    fn next(&self, n: usize, history: &[Observation], rng: &mut ChaCha8Rng) -> Result<Query>;
    fn guess(&self, n: usize, history: &[Observation], twirl: Option<&Twirl>, rng: &mut ChaCha8Rng) -> Result<i8>;
    /// Analytic per-measurement TV bound for this strategy, when one exists.
    fn tv_bound(&self, _n: usize) -> Option<f64> {
        None
    }
}

/// Output state `W2 U_s W1 |ψ>`.
pub fn target_output(sign: i8, twirl: Option<&Twirl>, input: &ProductState) -> Result<StateVector> {
    let cl = single_qubit_cliffords();
    let mut state = input.to_statevector()?;
    if let Some(t) = twirl {
        for (q, &w) in t.w1.iter().enumerate() {
            apply_1q(state.amplitudes_mut(), q, &cl[w]);
        }
    }
    let mut state = apply_ghz_like(&state, sign)?;
    if let Some(t) = twirl {
        for (q, &w) in t.w2.iter().enumerate() {
            apply_1q(state.amplitudes_mut(), q, &cl[w]);
        }
    }
    Ok(state)
}

/// Born distribution of a per-qubit Pauli-basis measurement on `state`.
pub fn measure_in_bases(mut state: StateVector, bases: &[PauliBasis]) -> Vec<C64> {
    for (q, b) in bases.iter().enumerate() {
        if let Some(rot) = b.rotation() {
            apply_1q(state.amplitudes_mut(), q, &rot);
        }
    }
    state.into_amplitudes()
}

fn outcome_probability(sign: i8, twirl: Option<&Twirl>, obs: &Observation) -> Result<f64> {
    let out = measure_in_bases(target_output(sign, twirl, &obs.input)?, &obs.bases);
    Ok(out[obs.outcome as usize].norm_sqr())
}

/// `log p_s(transcript)` for both signs, in the order `(+1, -1)`.
pub fn transcript_log_likelihoods(history: &[Observation], twirl: Option<&Twirl>) -> Result<(f64, f64)> {
    let mut lp = 0.0;
    let mut lm = 0.0;
    for obs in history {
        lp += outcome_probability(1, twirl, obs)?.ln();
        lm += outcome_probability(-1, twirl, obs)?.ln();
    }
    Ok((lp, lm))
}

fn ml_guess(history: &[Observation], twirl: Option<&Twirl>, rng: &mut ChaCha8Rng) -> Result<i8> {
    let (lp, lm) = transcript_log_likelihoods(history, twirl)?;
    let coin = if rng.random::<bool>() { 1 } else { -1 };
    Ok(if lp == lm || (lp - lm).abs() < 1e-12 {
        coin
    } else if lp > lm {
        1
    } else {
        -1
    })
}

fn random_query(n: usize, rng: &mut ChaCha8Rng) -> Query {
    let labels: Vec<StabilizerLabel> = (0..n).map(|_| StabilizerLabel::ALL[rng.random_range(0..6)]).collect();
    let bases = (0..n).map(|_| PauliBasis::ALL[rng.random_range(0..3)]).collect();
    Query { input: ProductState::from_labels(&labels).expect("stabilizer labels are valid"), bases }
}

/// Uniform stabilizer-product inputs and uniform Pauli bases, decoded by
/// maximum likelihood over the full transcript.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPauliMl;

impl Strategy for RandomPauliMl {
    fn id(&self) -> String {
        "random-pauli-ml".into()
    }

    fn next(&self, n: usize, _history: &[Observation], rng: &mut ChaCha8Rng) -> Result<Query> {
        Ok(random_query(n, rng))
    }

    fn guess(&self, _n: usize, history: &[Observation], twirl: Option<&Twirl>, rng: &mut ChaCha8Rng) -> Result<i8> {
        ml_guess(history, twirl, rng)
    }

    fn tv_bound(&self, n: usize) -> Option<f64> {
        Some(single_shot_bound(n))
    }
}

/// `|+>^n` (odd `n`) or `|+>^{n-1}|i>` (even `n`) measured in the
/// computational basis; the sign is read off an outcome parity.
#[derive(Clone, Copy, Debug, Default)]
pub struct Clever;

impl Strategy for Clever {
    fn id(&self) -> String {
        "clever".into()
    }

    fn next(&self, n: usize, _history: &[Observation], _rng: &mut ChaCha8Rng) -> Result<Query> {
        let mut labels = vec![StabilizerLabel::Plus; n];
        if n % 2 == 0 {
            labels[n - 1] = StabilizerLabel::PlusI;
        }
        Ok(Query { input: ProductState::from_labels(&labels)?, bases: vec![PauliBasis::Z; n] })
    }

    /// For odd `n` the output has support only on parity `s`; for even `n`
    /// the `|i>` qubit drops out of the parity.
    fn guess(&self, n: usize, history: &[Observation], _twirl: Option<&Twirl>, _rng: &mut ChaCha8Rng) -> Result<i8> {
        let Some(obs) = history.last() else {
            return validation("clever strategy needs at least one measurement");
        };
        let mask = if n % 2 == 0 { (1u64 << (n - 1)) - 1 } else { (1u64 << n) - 1 };
        Ok(if (obs.outcome & mask).count_ones() % 2 == 0 { 1 } else { -1 })
    }
}

/// Picks, from a pool of random stabilizer inputs and Pauli bases, the
/// query maximizing `Σ_o |π+ p+(o) − π− p−(o)|` under the untwirled model
/// with the current posterior `π`. Decodes by maximum likelihood.
#[derive(Clone, Copy, Debug)]
pub struct GreedyAdaptive {
    pub pool: usize,
}

impl Default for GreedyAdaptive {
    fn default() -> Self {
        Self { pool: 16 }
    }
}

impl Strategy for GreedyAdaptive {
    fn id(&self) -> String {
        format!("greedy-adaptive-{}", self.pool)
    }

    fn next(&self, n: usize, history: &[Observation], rng: &mut ChaCha8Rng) -> Result<Query> {
        let (lp, lm) = transcript_log_likelihoods(history, None)?;
        let (wp, wm) = if lp.is_finite() || lm.is_finite() {
            let top = lp.max(lm);
            let (a, b) = ((lp - top).exp(), (lm - top).exp());
            (a / (a + b), b / (a + b))
        } else {
            (0.5, 0.5)
        };
        let mut best: Option<(f64, Query)> = None;
        for _ in 0..self.pool.max(1) {
            let q = random_query(n, rng);
            let pp = measure_in_bases(target_output(1, None, &q.input)?, &q.bases);
            let pm = measure_in_bases(target_output(-1, None, &q.input)?, &q.bases);
            let gap: f64 = pp.iter().zip(&pm).map(|(a, b)| (wp * a.norm_sqr() - wm * b.norm_sqr()).abs()).sum();
            if best.as_ref().is_none_or(|(g, _)| gap > *g) {
                best = Some((gap, q));
            }
        }
        Ok(best.expect("pool is non-empty").1)
    }

    fn guess(&self, _n: usize, history: &[Observation], twirl: Option<&Twirl>, rng: &mut ChaCha8Rng) -> Result<i8> {
        ml_guess(history, twirl, rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishRecord {
    pub n: usize,
    pub strategy_id: String,
    pub twirl: TwirlMode,
    pub budget: usize,
    pub trials: usize,
    pub successes: usize,
    pub seed: u64,
    pub success_rate: f64,
    /// `1/2 + budget·TV/2` when the strategy has an analytic TV bound.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub success_bound: Option<f64>,
}

impl DistinguishRecord {
    /// Binomial standard error of the success rate.
    pub fn stderr(&self) -> f64 {
        let p = self.success_rate;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

fn run_trial(n: usize, strategy: &dyn Strategy, budget: usize, mode: TwirlMode, rng: &mut ChaCha8Rng) -> Result<bool> {
    let sign: i8 = if rng.random::<bool>() { 1 } else { -1 };
    let twirl = match mode {
        TwirlMode::None => None,
        TwirlMode::LocalCliffordPair => Some(Twirl::random(n, rng)),
    };
    let mut history = Vec::with_capacity(budget);
    for _ in 0..budget {
        let q = strategy.next(n, &history, rng)?;
        if q.input.num_qubits() != n || q.bases.len() != n {
            return validation(format!("strategy {} returned a query for the wrong qubit count", strategy.id()));
        }
        let amps = measure_in_bases(target_output(sign, twirl.as_ref(), &q.input)?, &q.bases);
        let outcome = born_sample(&amps, rng.random());
        history.push(Observation { input: q.input, bases: q.bases, outcome });
    }
    let guess = strategy.guess(n, &history, twirl.as_ref(), rng)?;
    if guess != 1 && guess != -1 {
        return validation(format!("strategy {} guessed {guess}, expected ±1", strategy.id()));
    }
    Ok(guess == sign)
}

/// Repeated two-hypothesis game: a hidden uniform sign selects `U_±`
/// (optionally twirled), the strategy spends `budget` measurements, then
/// guesses. Trial `t` draws from its own stream, so results are independent
/// of thread count.
pub fn run_distinguishing_experiment(
    n: usize,
    strategy: &dyn Strategy,
    budget: usize,
    trials: usize,
    twirl: TwirlMode,
    seed: u64,
) -> Result<DistinguishRecord> {
    crate::sim::state::check_qubits(n)?;
    if budget == 0 || trials == 0 {
        return validation("budget and trials must be at least 1");
    }
    let base = derive_seed(seed, TRIAL_TAG, n as u64);
    let wins: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(n, strategy, budget, twirl, &mut stream_rng(base, t)))
        .collect::<Result<_>>()?;
    let successes = wins.iter().filter(|w| **w).count();
    let success_bound = match twirl {
        TwirlMode::None => strategy.tv_bound(n).map(|tv| (0.5 + budget as f64 * tv / 2.0).min(1.0)),
        TwirlMode::LocalCliffordPair => None,
    };
    Ok(DistinguishRecord {
        n,
        strategy_id: strategy.id(),
        twirl,
        budget,
        trials,
        successes,
        seed,
        success_rate: successes as f64 / trials as f64,
        success_bound,
    })
}
