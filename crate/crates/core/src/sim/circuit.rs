use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{resource, validation, Error, Result};
use crate::sim::state::StateVector;

/// Largest register for which full unitaries are materialized.
pub const DENSE_CAP: usize = 10;

const C0: C64 = C64::new(0.0, 0.0);
const C1: C64 = C64::new(1.0, 0.0);

/// How a gate obtains its matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// A fixed unitary, row-major.
    Fixed { matrix: Vec<C64> },
    /// `exp(-i θ_param G / 2)` for an involutory Hermitian generator `G`
    /// (row-major), so the matrix is `cos(θ/2) I - i sin(θ/2) G`.
    Rotation { param: usize, generator: Vec<C64> },
}

/// One- or two-qubit gate. For two targets `[a, b]` the local basis index is
/// `bit_a + 2 * bit_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub targets: Vec<usize>,
    #[serde(flatten)]
    pub kind: GateKind,
}

impl Gate {
    pub fn fixed(targets: Vec<usize>, matrix: Vec<C64>) -> Result<Self> {
        let g = Gate { targets, kind: GateKind::Fixed { matrix } };
        g.validate_shape()?;
        Ok(g)
    }

    pub fn rotation(targets: Vec<usize>, param: usize, generator: Vec<C64>) -> Result<Self> {
        let g = Gate { targets, kind: GateKind::Rotation { param, generator } };
        g.validate_shape()?;
        Ok(g)
    }

    pub fn x(q: usize) -> Self {
        Gate { targets: vec![q], kind: GateKind::Fixed { matrix: pauli::X.to_vec() } }
    }

    pub fn h(q: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = vec![C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)];
        Gate { targets: vec![q], kind: GateKind::Fixed { matrix: m } }
    }

    pub fn rx(q: usize, param: usize) -> Self {
        Gate { targets: vec![q], kind: GateKind::Rotation { param, generator: pauli::X.to_vec() } }
    }

    pub fn ry(q: usize, param: usize) -> Self {
        Gate { targets: vec![q], kind: GateKind::Rotation { param, generator: pauli::Y.to_vec() } }
    }

    pub fn rz(q: usize, param: usize) -> Self {
        Gate { targets: vec![q], kind: GateKind::Rotation { param, generator: pauli::Z.to_vec() } }
    }

    /// `exp(-i θ P⊗P / 2)` on `(a, b)` for a single-qubit Pauli `p`.
    pub fn two_qubit_rotation(a: usize, b: usize, param: usize, p: &[C64; 4]) -> Self {
        Gate { targets: vec![a, b], kind: GateKind::Rotation { param, generator: kron2(p, p) } }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        let mut m = vec![C0; 16];
        for i in 0..4 {
            m[i * 4 + i] = if i == 3 { -C1 } else { C1 };
        }
        Gate { targets: vec![a, b], kind: GateKind::Fixed { matrix: m } }
    }

    pub fn dim(&self) -> usize {
        1 << self.targets.len()
    }

    pub fn param(&self) -> Option<usize> {
        match self.kind {
            GateKind::Rotation { param, .. } => Some(param),
            GateKind::Fixed { .. } => None,
        }
    }

    fn validate_shape(&self) -> Result<()> {
        let k = self.targets.len();
        if k != 1 && k != 2 {
            return validation(format!("gate must act on 1 or 2 qubits, got {k}"));
        }
        if k == 2 && self.targets[0] == self.targets[1] {
            return validation("two-qubit gate targets must differ");
        }
        let d = 1 << k;
        match &self.kind {
            GateKind::Fixed { matrix } => {
                if matrix.len() != d * d {
                    return validation(format!("gate matrix has {} entries, expected {}", matrix.len(), d * d));
                }
                let prod = matmul(&adjoint(matrix, d), matrix, d);
                if max_dev_from_identity(&prod, d) > 1e-10 {
                    return validation("gate matrix is not unitary");
                }
            }
            GateKind::Rotation { generator, .. } => {
                if generator.len() != d * d {
                    return validation(format!("generator has {} entries, expected {}", generator.len(), d * d));
                }
                let herm = adjoint(generator, d);
                if generator.iter().zip(&herm).any(|(a, b)| (a - b).norm() > 1e-10) {
                    return validation("generator is not Hermitian");
                }
                if max_dev_from_identity(&matmul(generator, generator, d), d) > 1e-10 {
                    return validation("generator must square to the identity");
                }
            }
        }
        Ok(())
    }

    /// Row-major matrix at the given parameter vector.
    pub fn matrix(&self, params: &[f64]) -> Vec<C64> {
        match &self.kind {
            GateKind::Fixed { matrix } => matrix.clone(),
            GateKind::Rotation { param, generator } => {
                let d = self.dim();
                let half = params[*param] / 2.0;
                let (s, c) = half.sin_cos();
                let mut m: Vec<C64> = generator.iter().map(|g| g * C64::new(0.0, -s)).collect();
                for i in 0..d {
                    m[i * d + i] += c;
                }
                m
            }
        }
    }
}

pub mod pauli {
    use num_complex::Complex64 as C64;

    const O: C64 = C64::new(0.0, 0.0);
    const L: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub const ID: [C64; 4] = [L, O, O, L];
    pub const X: [C64; 4] = [O, L, L, O];
    pub const Y: [C64; 4] = [O, C64::new(0.0, -1.0), I, O];
    pub const Z: [C64; 4] = [L, O, O, C64::new(-1.0, 0.0)];
}

/// `a ⊗ b` in the gate-local convention: `a` on the first target (low bit).
pub fn kron2(a: &[C64; 4], b: &[C64; 4]) -> Vec<C64> {
    let mut m = vec![C0; 16];
    for r in 0..4 {
        for c in 0..4 {
            m[r * 4 + c] = a[(r & 1) * 2 + (c & 1)] * b[(r >> 1) * 2 + (c >> 1)];
        }
    }
    m
}

pub(crate) fn adjoint(m: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![C0; d * d];
    for r in 0..d {
        for c in 0..d {
            out[c * d + r] = m[r * d + c].conj();
        }
    }
    out
}

pub(crate) fn matmul(a: &[C64], b: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![C0; d * d];
    for r in 0..d {
        for k in 0..d {
            let x = a[r * d + k];
            if x == C0 {
                continue;
            }
            for c in 0..d {
                out[r * d + c] += x * b[k * d + c];
            }
        }
    }
    out
}

fn max_dev_from_identity(m: &[C64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            let e = if r == c { C1 } else { C0 };
            worst = worst.max((m[r * d + c] - e).norm());
        }
    }
    worst
}

/// Applies a 2x2 matrix to local qubit `q` of a `2^k` amplitude block.
pub(crate) fn apply_1q(amps: &mut [C64], q: usize, m: &[C64]) {
    let bit = 1usize << q;
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i0 in base..base + bit {
            let i1 = i0 | bit;
            let (a0, a1) = (amps[i0], amps[i1]);
            amps[i0] = m[0] * a0 + m[1] * a1;
            amps[i1] = m[2] * a0 + m[3] * a1;
        }
        base += bit << 1;
    }
}

/// Applies a 4x4 matrix to local qubits `(qa, qb)`; `qa` is the low local bit.
pub(crate) fn apply_2q(amps: &mut [C64], qa: usize, qb: usize, m: &[C64]) {
    let (ba, bb) = (1usize << qa, 1usize << qb);
    let mask = ba | bb;
    for i in 0..amps.len() {
        if i & mask != 0 {
            continue;
        }
        let idx = [i, i | ba, i | bb, i | ba | bb];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for r in 0..4 {
            amps[idx[r]] = m[r * 4] * v[0] + m[r * 4 + 1] * v[1] + m[r * 4 + 2] * v[2] + m[r * 4 + 3] * v[3];
        }
    }
}

pub(crate) fn apply_matrix(amps: &mut [C64], targets: &[usize], m: &[C64]) {
    match targets {
        [q] => apply_1q(amps, *q, m),
        [a, b] => apply_2q(amps, *a, *b, m),
        _ => unreachable!("gate arity validated at construction"),
    }
}

/// Ordered gate list on `n` qubits with parameters `0..num_params`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr", into = "CircuitRepr")]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitRepr {
    n: usize,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRepr> for Circuit {
    type Error = Error;

    fn try_from(r: CircuitRepr) -> Result<Self> {
        for g in &r.gates {
            g.validate_shape()?;
        }
        Circuit::new(r.n, r.gates)
    }
}

impl From<Circuit> for CircuitRepr {
    fn from(c: Circuit) -> Self {
        CircuitRepr { n: c.n, gates: c.gates }
    }
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return validation("circuit needs at least one qubit");
        }
        let mut seen = Vec::new();
        for (gi, g) in gates.iter().enumerate() {
            if let Some(&t) = g.targets.iter().find(|&&t| t >= n) {
                return validation(format!("gate {gi} targets qubit {t} but the circuit has {n}"));
            }
            if let Some(p) = g.param() {
                if p >= seen.len() {
                    seen.resize(p + 1, false);
                }
                seen[p] = true;
            }
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return validation(format!("parameter indices are not contiguous: {gap} is unused"));
        }
        Ok(Self { n, num_params: seen.len(), gates })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params {
            return validation(format!(
                "circuit takes {} parameters, got {}",
                self.num_params,
                params.len()
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return validation("parameters must be finite");
        }
        Ok(())
    }

    /// Gate matrices at `params`, in circuit order.
    pub fn bind(&self, params: &[f64]) -> Result<Vec<Vec<C64>>> {
        self.check_params(params)?;
        Ok(self.gates.iter().map(|g| g.matrix(params)).collect())
    }

    pub(crate) fn apply_in_place(&self, amps: &mut [C64], params: &[f64]) -> Result<()> {
        let mats = self.bind(params)?;
        for (g, m) in self.gates.iter().zip(&mats) {
            apply_matrix(amps, &g.targets, m);
        }
        Ok(())
    }

    pub(crate) fn apply_adjoint_in_place(&self, amps: &mut [C64], params: &[f64]) -> Result<()> {
        let mats = self.bind(params)?;
        for (g, m) in self.gates.iter().zip(&mats).rev() {
            apply_matrix(amps, &g.targets, &adjoint(m, g.dim()));
        }
        Ok(())
    }
}

fn check_dims(state: &StateVector, circuit: &Circuit) -> Result<()> {
    if state.num_qubits() != circuit.num_qubits() {
        return validation(format!(
            "state has {} qubits, circuit has {}",
            state.num_qubits(),
            circuit.num_qubits()
        ));
    }
    Ok(())
}

pub fn apply_circuit(state: &StateVector, circuit: &Circuit, params: &[f64]) -> Result<StateVector> {
    check_dims(state, circuit)?;
    let mut out = state.clone();
    circuit.apply_in_place(out.amplitudes_mut(), params)?;
    Ok(out)
}

pub fn apply_circuit_adjoint(state: &StateVector, circuit: &Circuit, params: &[f64]) -> Result<StateVector> {
    check_dims(state, circuit)?;
    let mut out = state.clone();
    circuit.apply_adjoint_in_place(out.amplitudes_mut(), params)?;
    Ok(out)
}

/// Full `2^n x 2^n` unitary; column `k` is the circuit applied to `|k>`.
pub fn dense_unitary(circuit: &Circuit, params: &[f64]) -> Result<DMatrix<C64>> {
    dense_unitary_capped(circuit, params, DENSE_CAP)
}

pub fn dense_unitary_capped(circuit: &Circuit, params: &[f64], cap: usize) -> Result<DMatrix<C64>> {
    let n = circuit.num_qubits();
    if n > cap {
        return resource(format!("{n} qubits exceeds the dense-matrix cap of {cap}"));
    }
    let mats = circuit.bind(params)?;
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    let mut col = vec![C0; dim];
    for k in 0..dim {
        col.iter_mut().for_each(|a| *a = C0);
        col[k] = C1;
        for (g, m) in circuit.gates.iter().zip(&mats) {
            apply_matrix(&mut col, &g.targets, m);
        }
        u.column_mut(k).copy_from_slice(&col);
    }
    Ok(u)
}

/// A circuit together with a fixed parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundRepr")]
pub struct BoundCircuit {
    pub circuit: Circuit,
    pub params: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundRepr {
    circuit: Circuit,
    params: Vec<f64>,
}

impl TryFrom<BoundRepr> for BoundCircuit {
    type Error = Error;

    fn try_from(r: BoundRepr) -> Result<Self> {
        BoundCircuit::new(r.circuit, r.params)
    }
}

impl BoundCircuit {
    pub fn new(circuit: Circuit, params: Vec<f64>) -> Result<Self> {
        circuit.check_params(&params)?;
        Ok(Self { circuit, params })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        apply_circuit(state, &self.circuit, &self.params)
    }

    pub fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        apply_circuit_adjoint(state, &self.circuit, &self.params)
    }

    pub fn dense(&self) -> Result<DMatrix<C64>> {
        dense_unitary(&self.circuit, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    pub(crate) fn random_circuit(n: usize, depth: usize, seed: u64) -> (Circuit, Vec<f64>) {
        let mut rng = seeded_rng(seed);
        let mut gates = Vec::new();
        let mut p = 0;
        for _ in 0..depth {
            for q in 0..n {
                gates.push(match rng.random_range(0..3) {
                    0 => Gate::rx(q, p),
                    1 => Gate::ry(q, p),
                    _ => Gate::rz(q, p),
                });
                p += 1;
            }
            for q in 0..n.saturating_sub(1) {
                gates.push(Gate::cz(q, q + 1));
            }
        }
        let params = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
        (Circuit::new(n, gates).unwrap(), params)
    }

    #[test]
    fn x_flips_zero() {
        let c = Circuit::new(1, vec![Gate::x(0)]).unwrap();
        let out = apply_circuit(&StateVector::zero(1).unwrap(), &c, &[]).unwrap();
        assert!(close(out.amplitudes()[1], C1));
    }

    #[test]
    fn rx_pi() {
        let c = Circuit::new(1, vec![Gate::rx(0, 0)]).unwrap();
        let out = apply_circuit(&StateVector::zero(1).unwrap(), &c, &[std::f64::consts::PI]).unwrap();
        assert!(close(out.amplitudes()[0], C0));
        assert!(close(out.amplitudes()[1], C64::new(0.0, -1.0)));
    }

    #[test]
    fn inverse_restores_state() {
        let (c, p) = random_circuit(3, 4, 11);
        let psi = StateVector::haar_random(3, 5).unwrap();
        let back = apply_circuit_adjoint(&apply_circuit(&psi, &c, &p).unwrap(), &c, &p).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(back.amplitudes()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn dimension_and_param_errors() {
        let c = Circuit::new(2, vec![Gate::rx(0, 0)]).unwrap();
        let psi = StateVector::zero(1).unwrap();
        assert!(apply_circuit(&psi, &c, &[0.1]).is_err());
        assert!(apply_circuit(&StateVector::zero(2).unwrap(), &c, &[]).is_err());
        assert!(Circuit::new(2, vec![Gate::rx(0, 1)]).is_err());
        assert!(Circuit::new(2, vec![Gate::x(2)]).is_err());
    }

    #[test]
    fn dense_examples() {
        let id = dense_unitary(&Circuit::identity(2).unwrap(), &[]).unwrap();
        assert_eq!(id, DMatrix::identity(4, 4));
        let x0 = dense_unitary(&Circuit::new(2, vec![Gate::x(0)]).unwrap(), &[]).unwrap();
        for (r, c) in [(1, 0), (0, 1), (3, 2), (2, 3)] {
            assert!(close(x0[(r, c)], C1));
        }
        let (c, p) = random_circuit(4, 3, 2);
        let u = dense_unitary(&c, &p).unwrap();
        let err = (u.adjoint() * &u - DMatrix::identity(16, 16)).camax();
        assert!(err < 1e-9);
        let big = Circuit::identity(11).unwrap();
        assert!(matches!(dense_unitary(&big, &[]), Err(Error::Resource(_))));
    }

    #[test]
    fn two_qubit_local_order() {
        // CNOT-like check: X on the first target only, via kron2(X, I).
        let m = kron2(&pauli::X, &pauli::ID);
        let g = Gate::fixed(vec![1, 0], m).unwrap();
        let c = Circuit::new(2, vec![g]).unwrap();
        let out = apply_circuit(&StateVector::zero(2).unwrap(), &c, &[]).unwrap();
        assert!(close(out.amplitudes()[2], C1));
    }

    #[test]
    fn rejects_bad_gates() {
        assert!(Gate::fixed(vec![0], vec![C1, C1, C0, C1]).is_err());
        let not_involution = vec![C64::new(2.0, 0.0), C0, C0, C1];
        assert!(Gate::rotation(vec![0], 0, not_involution).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let (c, _) = random_circuit(3, 2, 1);
        let s = serde_json::to_string(&c).unwrap();
        let back: Circuit = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        let bad = r#"{"n":1,"gates":[{"targets":[3],"fixed":{"matrix":[[1,0],[0,0],[0,0],[1,0]]}}]}"#;
        assert!(serde_json::from_str::<Circuit>(bad).is_err());
    }
}
