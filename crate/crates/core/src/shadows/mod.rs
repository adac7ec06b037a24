//! Classical shadows: randomized Pauli and Clifford measurements of output
//! states and the snapshot estimators built on them.

mod io;
mod mom;
mod tableau;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{resource, validation, Error, Result};
use crate::operator::{SupportOperator, K_MAX};
use crate::rng::stream_rng;
use crate::sim::circuit::apply_1q;
use crate::sim::{ProductState, StabilizerLabel, StateVector, Unitary};

pub use io::{read_shadow, read_shadow_expecting, shadow_from_bytes, shadow_to_bytes, write_shadow, FORMAT_VERSION};
pub use mom::{mean_var, median_of_means, Estimate, DEFAULT_BATCHES};
pub use tableau::{PauliOp, Tableau};

/// Largest register for random Clifford measurements.
pub const CLIFFORD_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShadowKind {
    Pauli,
    Clifford,
}

impl fmt::Display for ShadowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShadowKind::Pauli => "pauli",
            ShadowKind::Clifford => "clifford",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

impl PauliBasis {
    pub const ALL: [PauliBasis; 3] = [PauliBasis::X, PauliBasis::Y, PauliBasis::Z];

    pub fn as_char(self) -> char {
        match self {
            PauliBasis::X => 'X',
            PauliBasis::Y => 'Y',
            PauliBasis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'X' => Ok(PauliBasis::X),
            'Y' => Ok(PauliBasis::Y),
            'Z' => Ok(PauliBasis::Z),
            other => validation(format!("unknown measurement basis {other:?}")),
        }
    }

    /// Eigenstate for outcome bit `b` (0 is the +1 eigenvalue).
    pub fn eigenstate(self, bit: bool) -> StabilizerLabel {
        match (self, bit) {
            (PauliBasis::X, false) => StabilizerLabel::Plus,
            (PauliBasis::X, true) => StabilizerLabel::Minus,
            (PauliBasis::Y, false) => StabilizerLabel::PlusI,
            (PauliBasis::Y, true) => StabilizerLabel::MinusI,
            (PauliBasis::Z, false) => StabilizerLabel::Zero,
            (PauliBasis::Z, true) => StabilizerLabel::One,
        }
    }

    /// Rotation taking this basis to the computational one.
    pub(crate) fn rotation(self) -> Option<[C64; 4]> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            PauliBasis::Z => None,
            PauliBasis::X => Some([C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)]),
            // H · S†.
            PauliBasis::Y => Some([C64::new(h, 0.0), C64::new(0.0, -h), C64::new(h, 0.0), C64::new(0.0, h)]),
        }
    }
}

/// One random-Pauli measurement: per-qubit basis and outcome bits
/// (bit `i` of `bits` is qubit `i`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliSnapshot {
    pub bases: Vec<PauliBasis>,
    pub bits: u64,
}

impl PauliSnapshot {
    pub fn bit(&self, q: usize) -> bool {
        (self.bits >> q) & 1 == 1
    }

    /// Single-qubit factor `3|s><s| - I` for qubit `q`, row-major.
    pub fn factor(&self, q: usize) -> [C64; 4] {
        snapshot_factor(self.bases[q], self.bit(q))
    }
}

fn snapshot_factor(basis: PauliBasis, bit: bool) -> [C64; 4] {
    let s = basis.eigenstate(bit).amplitudes();
    let mut m = [C64::new(0.0, 0.0); 4];
    for r in 0..2 {
        for c in 0..2 {
            m[r * 2 + c] = 3.0 * s[r] * s[c].conj() - if r == c { 1.0 } else { 0.0 };
        }
    }
    m
}

/// One random-Clifford measurement: the sampled `W` and the outcome of
/// measuring `W ρ W†` in the computational basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordSnapshot {
    pub tableau: Tableau,
    pub bits: u64,
}

impl CliffordSnapshot {
    /// `W† |b>` up to a global phase.
    pub fn back_rotated_outcome(&self) -> Vec<C64> {
        let inv = self.tableau.inverse();
        let n = inv.num_qubits();
        let mut cur = inv.stabilizer_state();
        let mut tmp = vec![C64::new(0.0, 0.0); cur.len()];
        for j in 0..n {
            if (self.bits >> j) & 1 == 1 {
                inv.row(j).apply(&cur, &mut tmp);
                std::mem::swap(&mut cur, &mut tmp);
            }
        }
        cur
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshots {
    Pauli(Vec<PauliSnapshot>),
    Clifford(Vec<CliffordSnapshot>),
}

/// What was fed to the target before measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputDescription {
    Labels(Vec<StabilizerLabel>),
    Factors(Vec<[C64; 2]>),
}

impl InputDescription {
    pub fn of(p: &ProductState) -> Self {
        match p.labels() {
            Some(l) => InputDescription::Labels(l.to_vec()),
            None => InputDescription::Factors(p.factors().to_vec()),
        }
    }

    pub fn to_product_state(&self) -> Result<ProductState> {
        match self {
            InputDescription::Labels(l) => ProductState::from_labels(l),
            InputDescription::Factors(f) => ProductState::from_factors(f.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowMeta {
    pub input_state: Option<InputDescription>,
    /// Description hash of the measured target; empty when the state was
    /// measured directly.
    pub target: String,
    pub seed: u64,
}

/// An immutable collection of snapshots of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSet {
    n: usize,
    snapshots: Snapshots,
    pub meta: ShadowMeta,
}

impl ShadowSet {
    pub fn new(n: usize, snapshots: Snapshots, meta: ShadowMeta) -> Result<Self> {
        let m = match &snapshots {
            Snapshots::Pauli(s) => {
                if s.iter().any(|p| p.bases.len() != n || p.bits >> n != 0) {
                    return validation("Pauli snapshot width does not match the qubit count");
                }
                s.len()
            }
            Snapshots::Clifford(s) => {
                if s.iter().any(|c| c.tableau.num_qubits() != n || c.bits >> n != 0) {
                    return validation("Clifford snapshot width does not match the qubit count");
                }
                s.len()
            }
        };
        if m == 0 {
            return validation("a shadow needs at least one snapshot");
        }
        Ok(Self { n, snapshots, meta })
    }

    pub fn kind(&self) -> ShadowKind {
        match self.snapshots {
            Snapshots::Pauli(_) => ShadowKind::Pauli,
            Snapshots::Clifford(_) => ShadowKind::Clifford,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        match &self.snapshots {
            Snapshots::Pauli(s) => s.len(),
            Snapshots::Clifford(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshots(&self) -> &Snapshots {
        &self.snapshots
    }

    pub fn pauli(&self) -> Result<&[PauliSnapshot]> {
        match &self.snapshots {
            Snapshots::Pauli(s) => Ok(s),
            Snapshots::Clifford(_) => Err(Error::KindMismatch { expected: "pauli".into(), found: "clifford".into() }),
        }
    }

    pub fn clifford(&self) -> Result<&[CliffordSnapshot]> {
        match &self.snapshots {
            Snapshots::Clifford(s) => Ok(s),
            Snapshots::Pauli(_) => Err(Error::KindMismatch { expected: "clifford".into(), found: "pauli".into() }),
        }
    }
}

/// Samples an index from the Born distribution of `amps` given a uniform
/// draw `u` in `[0, 1)`.
pub(crate) fn born_sample(amps: &[C64], u: f64) -> u64 {
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if acc > target {
            return i as u64;
        }
    }
    last as u64
}

fn check_shots(m: usize) -> Result<()> {
    if m == 0 {
        return validation("shot count M must be at least 1");
    }
    Ok(())
}

fn unattributed(seed: u64) -> ShadowMeta {
    ShadowMeta { input_state: None, target: String::new(), seed }
}

/// Random-Pauli shadow of `state`. Shot `m` draws from `stream_rng(seed, m)`.
pub fn sample_pauli_shadow(state: &StateVector, m: usize, seed: u64) -> Result<ShadowSet> {
    check_shots(m)?;
    let n = state.num_qubits();
    let snaps: Vec<PauliSnapshot> = (0..m as u64)
        .into_par_iter()
        .map(|shot| {
            let mut rng = stream_rng(seed, shot);
            let bases: Vec<PauliBasis> = (0..n).map(|_| PauliBasis::ALL[rng.random_range(0..3)]).collect();
            let mut amps = state.amplitudes().to_vec();
            for (q, b) in bases.iter().enumerate() {
                if let Some(rot) = b.rotation() {
                    apply_1q(&mut amps, q, &rot);
                }
            }
            let bits = born_sample(&amps, rng.random::<f64>());
            PauliSnapshot { bases, bits }
        })
        .collect();
    ShadowSet::new(n, Snapshots::Pauli(snaps), unattributed(seed))
}

/// Random-Clifford shadow of `state`, with `W` uniform over the Clifford
/// group.
pub fn sample_clifford_shadow(state: &StateVector, m: usize, seed: u64) -> Result<ShadowSet> {
    check_shots(m)?;
    let n = state.num_qubits();
    if n > CLIFFORD_CAP {
        return resource(format!("{n} qubits exceeds the Clifford-shadow cap of {CLIFFORD_CAP}"));
    }
    let snaps: Vec<CliffordSnapshot> = (0..m as u64)
        .into_par_iter()
        .map(|shot| {
            let mut rng = stream_rng(seed, shot);
            let tableau = Tableau::random(n, &mut rng);
            let rotated = tableau.apply_to(state.amplitudes());
            let bits = born_sample(&rotated, rng.random::<f64>());
            CliffordSnapshot { tableau, bits }
        })
        .collect();
    ShadowSet::new(n, Snapshots::Clifford(snaps), unattributed(seed))
}

/// Lookup of `Tr[⊗_j σ_{c_j} O]` over all `6^k` snapshot patterns on the
/// support, where `c_j = 2·basis + bit` indexes the six factors. Entry index
/// is `Σ_j c_j 6^j`.
fn pattern_table(obs: &SupportOperator) -> Vec<f64> {
    let factors: Vec<[C64; 4]> = PauliBasis::ALL
        .iter()
        .flat_map(|&b| [snapshot_factor(b, false), snapshot_factor(b, true)])
        .collect();
    let k = obs.size();
    let d0 = 1usize << k;
    // Row-major copy of the matrix as the single level-0 block.
    let m = obs.matrix();
    let mut blocks: Vec<C64> = (0..d0 * d0).map(|i| m[(i / d0, i % d0)]).collect();
    let mut count = 1usize;
    let mut d = d0;
    for _ in 0..k {
        let h = d / 2;
        let mut next = vec![C64::new(0.0, 0.0); count * 6 * h * h];
        for s in 0..6 {
            let f = &factors[s];
            for b in 0..count {
                let src = &blocks[b * d * d..(b + 1) * d * d];
                let dst_block = b + count * s;
                let dst = &mut next[dst_block * h * h..(dst_block + 1) * h * h];
                for r in 0..h {
                    for c in 0..h {
                        let mut acc = C64::new(0.0, 0.0);
                        for r0 in 0..2 {
                            for c0 in 0..2 {
                                acc += f[c0 * 2 + r0] * src[(2 * r + r0) * d + 2 * c + c0];
                            }
                        }
                        dst[r * h + c] = acc;
                    }
                }
            }
        }
        blocks = next;
        count *= 6;
        d = h;
    }
    blocks.iter().map(|z| z.re).collect()
}

/// Direct contraction for a single snapshot, used beyond the table size.
fn contract_snapshot(obs: &SupportOperator, snap: &PauliSnapshot) -> f64 {
    let k = obs.size();
    let mut d = 1usize << k;
    let m = obs.matrix();
    let mut cur: Vec<C64> = (0..d * d).map(|i| m[(i / d, i % d)]).collect();
    for &q in obs.support() {
        let f = snap.factor(q);
        let h = d / 2;
        let mut next = vec![C64::new(0.0, 0.0); h * h];
        for r in 0..h {
            for c in 0..h {
                let mut acc = C64::new(0.0, 0.0);
                for r0 in 0..2 {
                    for c0 in 0..2 {
                        acc += f[c0 * 2 + r0] * cur[(2 * r + r0) * d + 2 * c + c0];
                    }
                }
                next[r * h + c] = acc;
            }
        }
        cur = next;
        d = h;
    }
    cur[0].re
}

const TABLE_MAX_SUPPORT: usize = 8;

fn pattern_index(obs: &SupportOperator, snap: &PauliSnapshot) -> usize {
    obs.support().iter().rev().fold(0usize, |acc, &q| {
        let code = snap.bases[q] as usize * 2 + usize::from(snap.bit(q));
        acc * 6 + code
    })
}

/// Per-snapshot values `Tr[⊗_{i∈S}(3|s_i><s_i| - I) · O]`, in snapshot order.
pub fn pauli_snapshot_values(shadow: &ShadowSet, obs: &SupportOperator) -> Result<Vec<f64>> {
    let snaps = shadow.pauli()?;
    if obs.size() > K_MAX {
        return resource(format!("observable support {} exceeds k_max = {K_MAX}", obs.size()));
    }
    if let Some(&q) = obs.support().iter().find(|&&q| q >= shadow.num_qubits()) {
        return validation(format!("observable acts on qubit {q} outside the shadow"));
    }
    if obs.size() <= TABLE_MAX_SUPPORT {
        let table = pattern_table(obs);
        Ok(snaps.par_iter().map(|s| table[pattern_index(obs, s)]).collect())
    } else {
        Ok(snaps.par_iter().map(|s| contract_snapshot(obs, s)).collect())
    }
}

/// Median-of-means estimate of `Tr[ρ O]` from a Pauli shadow of `ρ`.
pub fn estimate_support_expectation(shadow: &ShadowSet, obs: &SupportOperator, batches: usize) -> Result<Estimate> {
    if batches > shadow.len() {
        return validation(format!("batch count {batches} exceeds the {} snapshots", shadow.len()));
    }
    median_of_means(&pauli_snapshot_values(shadow, obs)?, batches)
}

/// Back-rotated outcomes `W†|b>` for every snapshot; reusable across targets.
#[derive(Clone, Debug)]
pub struct CliffordVectors {
    n: usize,
    vectors: Vec<Vec<C64>>,
}

impl CliffordVectors {
    pub fn new(shadow: &ShadowSet) -> Result<Self> {
        let snaps = shadow.clifford()?;
        Ok(Self { n: shadow.num_qubits(), vectors: snaps.par_iter().map(|s| s.back_rotated_outcome()).collect() })
    }

    /// Per-snapshot values `(2^n + 1)|<t|W†|b>|^2 - 1`.
    pub fn fidelity_values(&self, target: &StateVector) -> Result<Vec<f64>> {
        if target.num_qubits() != self.n {
            return validation(format!("target has {} qubits, shadow has {}", target.num_qubits(), self.n));
        }
        let scale = ((1u64 << self.n) + 1) as f64;
        let t = target.amplitudes();
        Ok(self
            .vectors
            .par_iter()
            .map(|v| {
                let ov: C64 = t.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                scale * ov.norm_sqr() - 1.0
            })
            .collect())
    }
}

pub fn clifford_fidelity_values(shadow: &ShadowSet, target: &StateVector) -> Result<Vec<f64>> {
    CliffordVectors::new(shadow)?.fidelity_values(target)
}

/// Median-of-means estimate of `<t|ρ|t>` from a Clifford shadow of `ρ`.
pub fn estimate_fidelity_clifford(shadow: &ShadowSet, target: &StateVector, batches: usize) -> Result<Estimate> {
    if batches > shadow.len() {
        return validation(format!("batch count {batches} exceeds the {} snapshots", shadow.len()));
    }
    median_of_means(&clifford_fidelity_values(shadow, target)?, batches)
}

/// The only route to the target unitary during an experiment. It counts one
/// invocation per measured copy so a training run can be audited for
/// additional target access.
#[derive(Debug)]
pub struct TargetHandle {
    unitary: Unitary,
    invocations: AtomicU64,
}

impl TargetHandle {
    pub fn new(unitary: Unitary) -> Self {
        Self { unitary, invocations: AtomicU64::new(0) }
    }

    pub fn num_qubits(&self) -> usize {
        self.unitary.num_qubits()
    }

    pub fn invocations(&self) -> u64 {
        self.invocations.load(Ordering::SeqCst)
    }

    pub fn description_hash(&self) -> String {
        self.unitary.description_hash()
    }

    fn output(&self, input: &ProductState, m: usize) -> Result<StateVector> {
        check_shots(m)?;
        if input.num_qubits() != self.num_qubits() {
            return validation(format!(
                "input has {} qubits, target acts on {}",
                input.num_qubits(),
                self.num_qubits()
            ));
        }
        let out = self.unitary.apply(&input.to_statevector()?)?;
        self.invocations.fetch_add(m as u64, Ordering::SeqCst);
        Ok(out)
    }

    fn attribute(&self, mut s: ShadowSet, input: &ProductState) -> ShadowSet {
        s.meta.input_state = Some(InputDescription::of(input));
        s.meta.target = self.description_hash();
        s
    }

    /// `m` random-Pauli measurements of `U|input>`.
    pub fn collect_pauli(&self, input: &ProductState, m: usize, seed: u64) -> Result<ShadowSet> {
        let out = self.output(input, m)?;
        Ok(self.attribute(sample_pauli_shadow(&out, m, seed)?, input))
    }

    /// `m` random-Clifford measurements of `U|input>`.
    pub fn collect_clifford(&self, input: &ProductState, m: usize, seed: u64) -> Result<ShadowSet> {
        if self.num_qubits() > CLIFFORD_CAP {
            return resource(format!("{} qubits exceeds the Clifford-shadow cap of {CLIFFORD_CAP}", self.num_qubits()));
        }
        let out = self.output(input, m)?;
        Ok(self.attribute(sample_clifford_shadow(&out, m, seed)?, input))
    }

    pub fn collect(&self, kind: ShadowKind, input: &ProductState, m: usize, seed: u64) -> Result<ShadowSet> {
        match kind {
            ShadowKind::Pauli => self.collect_pauli(input, m, seed),
            ShadowKind::Clifford => self.collect_clifford(input, m, seed),
        }
    }
}
