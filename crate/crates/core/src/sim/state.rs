use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{resource, validation, Error, Result};
use crate::rng::seeded_rng;

/// Largest register the statevector simulator accepts.
pub const MAX_QUBITS: usize = 14;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Dense pure state over `2^n` computational basis states.
///
/// Qubit `q` is bit `q` of the amplitude index (qubit 0 is least significant).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        if index >= 1 << n {
            return validation(format!("basis index {index} out of range for {n} qubits"));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps an amplitude vector; its length must be a power of two and its
    /// norm must be one within `1e-9`.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return validation(format!("amplitude count {len} is not a power of two >= 2"));
        }
        let n = len.trailing_zeros() as usize;
        check_qubits(n)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return validation(format!("state is not normalized (norm^2 = {norm})"));
        }
        Ok(Self { n, amps })
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }

    /// Haar-random `n`-qubit state (normalized complex Gaussian vector).
    pub fn haar_random(n: usize, seed: u64) -> Result<Self> {
        check_qubits(n)?;
        let mut rng = seeded_rng(seed);
        let mut amps: Vec<C64> = (0..1usize << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        overlap(self, other)
    }

    /// True when the states agree up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let ov: C64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        if ov.norm() < 1e-300 {
            return false;
        }
        let phase = ov / ov.norm();
        self.amps
            .iter()
            .zip(&other.amps)
            .all(|(a, b)| (a * phase - b).norm() <= tol)
    }
}

/// `<a|b>`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.n != b.n {
        return validation(format!("overlap of {}-qubit and {}-qubit states", a.n, b.n));
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return validation("qubit count must be at least 1");
    }
    if n > MAX_QUBITS {
        return resource(format!("{n} qubits exceeds the statevector cap of {MAX_QUBITS}"));
    }
    Ok(())
}

/// The six single-qubit stabilizer states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabilizerLabel {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl StabilizerLabel {
    pub const ALL: [StabilizerLabel; 6] = [
        StabilizerLabel::Zero,
        StabilizerLabel::One,
        StabilizerLabel::Plus,
        StabilizerLabel::Minus,
        StabilizerLabel::PlusI,
        StabilizerLabel::MinusI,
    ];

    pub fn amplitudes(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            StabilizerLabel::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            StabilizerLabel::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            StabilizerLabel::Plus => [C64::new(h, 0.0), C64::new(h, 0.0)],
            StabilizerLabel::Minus => [C64::new(h, 0.0), C64::new(-h, 0.0)],
            StabilizerLabel::PlusI => [C64::new(h, 0.0), C64::new(0.0, h)],
            StabilizerLabel::MinusI => [C64::new(h, 0.0), C64::new(0.0, -h)],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StabilizerLabel::Zero => "0",
            StabilizerLabel::One => "1",
            StabilizerLabel::Plus => "+",
            StabilizerLabel::Minus => "-",
            StabilizerLabel::PlusI => "i",
            StabilizerLabel::MinusI => "-i",
        }
    }
}

impl fmt::Display for StabilizerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StabilizerLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "0" => StabilizerLabel::Zero,
            "1" => StabilizerLabel::One,
            "+" => StabilizerLabel::Plus,
            "-" | "−" => StabilizerLabel::Minus,
            "i" | "+i" => StabilizerLabel::PlusI,
            "-i" | "−i" => StabilizerLabel::MinusI,
            other => return validation(format!("unknown stabilizer label {other:?}")),
        })
    }
}

impl Serialize for StabilizerLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StabilizerLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One tensor factor of a product state: a stabilizer label or an explicit
/// amplitude pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorSpec {
    Label(StabilizerLabel),
    Amplitudes([C64; 2]),
}

impl From<StabilizerLabel> for FactorSpec {
    fn from(l: StabilizerLabel) -> Self {
        FactorSpec::Label(l)
    }
}

/// Tensor product of single-qubit pure states; factor `i` lives on qubit `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    factors: Vec<[C64; 2]>,
    labels: Option<Vec<StabilizerLabel>>,
}

impl ProductState {
    pub fn from_labels(labels: &[StabilizerLabel]) -> Result<Self> {
        if labels.is_empty() {
            return validation("product state needs at least one factor");
        }
        Ok(Self {
            factors: labels.iter().map(|l| l.amplitudes()).collect(),
            labels: Some(labels.to_vec()),
        })
    }

    pub fn from_factors(factors: Vec<[C64; 2]>) -> Result<Self> {
        if factors.is_empty() {
            return validation("product state needs at least one factor");
        }
        for (i, f) in factors.iter().enumerate() {
            let norm = f[0].norm_sqr() + f[1].norm_sqr();
            if (norm - 1.0).abs() > 1e-9 {
                return validation(format!("factor {i} is not normalized (norm^2 = {norm})"));
            }
        }
        Ok(Self { factors, labels: None })
    }

    pub fn from_specs(specs: &[FactorSpec]) -> Result<Self> {
        if specs.iter().all(|s| matches!(s, FactorSpec::Label(_))) {
            let labels: Vec<_> = specs
                .iter()
                .map(|s| match s {
                    FactorSpec::Label(l) => *l,
                    FactorSpec::Amplitudes(_) => unreachable!(),
                })
                .collect();
            return Self::from_labels(&labels);
        }
        Self::from_factors(
            specs
                .iter()
                .map(|s| match s {
                    FactorSpec::Label(l) => l.amplitudes(),
                    FactorSpec::Amplitudes(a) => *a,
                })
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[[C64; 2]] {
        &self.factors
    }

    pub fn factor(&self, qubit: usize) -> [C64; 2] {
        self.factors[qubit]
    }

    pub fn labels(&self) -> Option<&[StabilizerLabel]> {
        self.labels.as_deref()
    }

    pub fn to_statevector(&self) -> Result<StateVector> {
        let n = self.factors.len();
        check_qubits(n)?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        // Kronecker product with qubit 0 as the fastest-varying index.
        for f in &self.factors {
            let mut next = Vec::with_capacity(amps.len() * 2);
            next.extend(amps.iter().map(|a| a * f[0]));
            next.extend(amps.iter().map(|a| a * f[1]));
            amps = next;
        }
        Ok(StateVector::from_raw(n, amps))
    }
}

pub fn make_product_state(factors: &[FactorSpec]) -> Result<StateVector> {
    ProductState::from_specs(factors)?.to_statevector()
}

/// Uniform draw from `{|0>,|1>,|+>,|->,|i>,|-i>}^n`.
pub fn sample_stabilizer_product(n: usize, seed: u64) -> ProductState {
    let mut rng = seeded_rng(seed);
    let labels: Vec<_> = (0..n)
        .map(|_| StabilizerLabel::ALL[rng.random_range(0..6)])
        .collect();
    ProductState {
        factors: labels.iter().map(|l| l.amplitudes()).collect(),
        labels: Some(labels),
    }
}

/// Product of independent single-qubit Haar states.
pub fn sample_haar_product(n: usize, seed: u64) -> ProductState {
    let mut rng = seeded_rng(seed);
    let factors = (0..n).map(|_| haar_qubit(&mut rng)).collect();
    ProductState { factors, labels: None }
}

pub(crate) fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> [C64; 2] {
    let a = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let b = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    [a / norm, b / norm]
}
