//! Pauli decomposition of support operators and (α, k)-locality profiles.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{resource, validation, Result};
use crate::operator::{Direction, SupportOperator, K_MAX};
use crate::sim::Circuit;

/// Largest support for dense eigendecomposition of tails.
pub const EIGEN_CAP: usize = 10;

const PAULI_CHARS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Real Pauli coefficients `c_P = Tr[P O] / 2^k` of an operator on
/// `support`. Index `Σ_j p_j 4^j` with `p_j ∈ {I, X, Y, Z} = {0, 1, 2, 3}`
/// on `support[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliDecomposition {
    support: Vec<usize>,
    coeffs: Vec<f64>,
}

fn weight(mut code: usize) -> usize {
    let mut w = 0;
    while code > 0 {
        w += usize::from(code % 4 != 0);
        code /= 4;
    }
    w
}

/// Interleaves row and column bits into pair codes `2 r_j + c_j`.
fn to_pair_tensor(m: &DMatrix<C64>, k: usize) -> Vec<C64> {
    let dim = 1usize << k;
    let mut t = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let idx = (0..k).fold(0usize, |acc, j| acc + (((r >> j) & 1) * 2 + ((c >> j) & 1)) * (1 << (2 * j)));
            t[idx] = m[(r, c)];
        }
    }
    t
}

fn from_pair_tensor(t: &[C64], k: usize) -> DMatrix<C64> {
    let dim = 1usize << k;
    DMatrix::from_fn(dim, dim, |r, c| {
        let idx = (0..k).fold(0usize, |acc, j| acc + (((r >> j) & 1) * 2 + ((c >> j) & 1)) * (1 << (2 * j)));
        t[idx]
    })
}

/// Applies a 4x4 map to base-4 digit `j` of every index.
fn transform_digit(t: &mut [C64], j: usize, f: impl Fn([C64; 4]) -> [C64; 4]) {
    let stride = 1usize << (2 * j);
    for base in 0..t.len() {
        if (base / stride) % 4 != 0 {
            continue;
        }
        let v = [t[base], t[base + stride], t[base + 2 * stride], t[base + 3 * stride]];
        let w = f(v);
        for (s, x) in w.into_iter().enumerate() {
            t[base + s * stride] = x;
        }
    }
}

impl PauliDecomposition {
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of a Pauli string over the support (character `j` acts
    /// on `support[j]`).
    pub fn get(&self, pauli: &str) -> Result<f64> {
        if pauli.chars().count() != self.support.len() {
            return validation(format!("Pauli string {pauli:?} does not match a support of {}", self.support.len()));
        }
        let mut idx = 0;
        for (j, ch) in pauli.chars().enumerate() {
            let p = PAULI_CHARS
                .iter()
                .position(|&c| c == ch)
                .ok_or_else(|| crate::Error::Validation(format!("bad Pauli character {ch:?}")))?;
            idx += p << (2 * j);
        }
        Ok(self.coeffs[idx])
    }

    /// Nonzero terms as `(string, coefficient)`.
    pub fn terms(&self, tol: f64) -> Vec<(String, f64)> {
        let k = self.support.len();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(i, &c)| ((0..k).map(|j| PAULI_CHARS[(i >> (2 * j)) & 3]).collect(), c))
            .collect()
    }

    /// Operator made of the terms whose weight satisfies `keep`.
    fn rebuild(&self, keep: impl Fn(usize) -> bool) -> DMatrix<C64> {
        let k = self.support.len();
        let mut t: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if keep(weight(i)) { C64::new(c, 0.0) } else { C64::new(0.0, 0.0) })
            .collect();
        let i = C64::new(0.0, 1.0);
        for j in 0..k {
            transform_digit(&mut t, j, |[ci, cx, cy, cz]| [ci + cz, cx - i * cy, cx + i * cy, ci - cz]);
        }
        from_pair_tensor(&t, k)
    }

    pub fn reconstruct(&self) -> SupportOperator {
        SupportOperator::from_parts(self.support.clone(), self.rebuild(|_| true))
    }

    /// `Õ(k)`: the terms of weight at most `k`.
    pub fn truncated(&self, k: usize) -> SupportOperator {
        SupportOperator::from_parts(self.support.clone(), self.rebuild(|w| w <= k))
    }

    /// `χ(k)`: the terms of weight above `k`.
    pub fn tail(&self, k: usize) -> SupportOperator {
        SupportOperator::from_parts(self.support.clone(), self.rebuild(|w| w > k))
    }

    /// Largest weight with a coefficient above `tol`.
    pub fn max_weight(&self, tol: f64) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(i, _)| weight(i))
            .max()
            .unwrap_or(0)
    }
}

pub fn pauli_decompose(op: &SupportOperator) -> Result<PauliDecomposition> {
    let k = op.size();
    if k > K_MAX {
        return resource(format!("support of {k} qubits exceeds the decomposition cap of {K_MAX}"));
    }
    let mut t = to_pair_tensor(op.matrix(), k);
    let i = C64::new(0.0, 1.0);
    for j in 0..k {
        // Pair codes 00, 01, 10, 11 -> I, X, Y, Z.
        transform_digit(&mut t, j, |[m00, m01, m10, m11]| {
            [(m00 + m11) * 0.5, (m01 + m10) * 0.5, i * (m01 - m10) * 0.5, (m00 - m11) * 0.5]
        });
    }
    Ok(PauliDecomposition { support: op.support().to_vec(), coeffs: t.iter().map(|z| z.re).collect() })
}

/// Spectral norm of a Hermitian matrix.
pub(crate) fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
}

/// `α = ‖χ(k)‖∞`, the spectral norm of all terms with weight above `k`.
pub fn tail_norm(decomp: &PauliDecomposition, k: usize) -> Result<f64> {
    let size = decomp.support.len();
    if k > size {
        return validation(format!("cutoff {k} exceeds the support size {size}"));
    }
    if size > EIGEN_CAP {
        return resource(format!("support of {size} qubits exceeds the eigendecomposition cap of {EIGEN_CAP}"));
    }
    if k == size {
        return Ok(0.0);
    }
    Ok(spectral_norm(decomp.tail(k).matrix()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub k: usize,
    pub alpha: f64,
}

/// `α(k)` over a list of cutoffs for one back-propagated site projector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityProfile {
    pub n: usize,
    pub site: usize,
    pub support: Vec<usize>,
    pub dt: Option<f64>,
    pub layers: Option<usize>,
    pub entries: Vec<ProfileEntry>,
}

impl LocalityProfile {
    /// Smallest profiled cutoff whose tail vanishes within `tol`.
    pub fn standard_locality(&self, tol: f64) -> Option<usize> {
        self.entries.iter().filter(|e| e.alpha <= tol).map(|e| e.k).min()
    }

    pub fn is_non_increasing(&self) -> bool {
        let mut sorted = self.entries.clone();
        sorted.sort_by_key(|e| e.k);
        sorted.windows(2).all(|w| w[1].alpha <= w[0].alpha + 1e-12)
    }
}

/// Profiles the back-propagated projector `|ψ><ψ|` on `site`. Cutoffs above
/// the support size report `α = 0`.
pub fn locality_profile(
    circuit: &Circuit,
    params: &[f64],
    site: usize,
    factor: [C64; 2],
    cutoffs: &[usize],
    direction: Direction,
) -> Result<LocalityProfile> {
    let op = crate::operator::backpropagate_site_observable(circuit, params, site, factor, direction, EIGEN_CAP)?;
    let decomp = pauli_decompose(&op)?;
    let size = decomp.support.len();
    let entries = cutoffs
        .par_iter()
        .map(|&k| Ok(ProfileEntry { k, alpha: tail_norm(&decomp, k.min(size))? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalityProfile {
        n: circuit.num_qubits(),
        site,
        support: op.support().to_vec(),
        dt: None,
        layers: None,
        entries,
    })
}

/// Truncates an observable to weight `k`, returning the truncated operator
/// and its tail norm.
pub fn truncate_observable(op: &SupportOperator, k: usize) -> Result<(SupportOperator, f64)> {
    let d = pauli_decompose(op)?;
    let k = k.min(op.size());
    Ok((d.truncated(k), tail_norm(&d, k)?))
}
