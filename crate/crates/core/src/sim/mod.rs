//! Statevector simulation, circuits and target unitaries.

pub mod builders;
pub mod circuit;
pub mod ghz;
pub mod state;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{resource, validation, Result};

pub use builders::{
    build_trotter_heisenberg, build_trotter_tfim, build_trotter_tfim_layers, random_brickwork,
    rx_circuit, sample_tfim_fields,
};
pub use circuit::{
    apply_circuit, apply_circuit_adjoint, dense_unitary, BoundCircuit, Circuit, Gate, GateKind,
    DENSE_CAP,
};
pub use ghz::{apply_ghz_like, apply_ghz_like_adjoint};
pub use state::{
    make_product_state, overlap, sample_haar_product, sample_stabilizer_product, FactorSpec,
    ProductState, StabilizerLabel, StateVector, MAX_QUBITS,
};

/// A fixed unitary acting on statevectors: either a bound circuit or one of
/// the GHZ-like pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unitary {
    Circuit(BoundCircuit),
    Ghz { n: usize, sign: i8 },
}

impl Unitary {
    pub fn num_qubits(&self) -> usize {
        match self {
            Unitary::Circuit(c) => c.circuit.num_qubits(),
            Unitary::Ghz { n, .. } => *n,
        }
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        if state.num_qubits() != self.num_qubits() {
            return validation(format!(
                "state has {} qubits, unitary acts on {}",
                state.num_qubits(),
                self.num_qubits()
            ));
        }
        Ok(())
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check(state)?;
        match self {
            Unitary::Circuit(c) => c.apply(state),
            Unitary::Ghz { sign, .. } => apply_ghz_like(state, *sign),
        }
    }

    pub fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        self.check(state)?;
        match self {
            Unitary::Circuit(c) => c.apply_adjoint(state),
            Unitary::Ghz { sign, .. } => apply_ghz_like_adjoint(state, *sign),
        }
    }

    pub fn dense(&self) -> Result<DMatrix<C64>> {
        let n = self.num_qubits();
        if n > DENSE_CAP {
            return resource(format!("{n} qubits exceeds the dense-matrix cap of {DENSE_CAP}"));
        }
        match self {
            Unitary::Circuit(c) => c.dense(),
            Unitary::Ghz { sign, .. } => {
                let dim = 1usize << n;
                let mut u = DMatrix::<C64>::zeros(dim, dim);
                for k in 0..dim {
                    let col = apply_ghz_like(&StateVector::basis(n, k)?, *sign)?;
                    u.column_mut(k).copy_from_slice(col.amplitudes());
                }
                Ok(u)
            }
        }
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn description_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("unitary serializes");
        hex::encode(Sha256::digest(json))
    }
}
