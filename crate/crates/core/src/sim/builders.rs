use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{validation, Result};
use crate::rng::seeded_rng;
use crate::sim::circuit::{pauli, BoundCircuit, Circuit, Gate};

fn bonds(n: usize) -> impl Iterator<Item = (usize, usize)> {
    let even = (0..n - 1).step_by(2);
    let odd = (1..n - 1).step_by(2);
    even.chain(odd).map(|a| (a, a + 1))
}

/// First-order Trotter circuit for the open-boundary Heisenberg chain
/// `Σ XX + YY + ZZ`, evolved for `dt` in `layers` equal steps.
///
/// Each layer applies even bonds then odd bonds; every bond carries three
/// rotations (XX, YY, ZZ) with their own parameter. The returned parameters
/// reproduce the target: `θ = 2 dt / layers`.
pub fn build_trotter_heisenberg(n: usize, dt: f64, layers: usize) -> Result<BoundCircuit> {
    if n < 2 {
        return validation(format!("Heisenberg chain needs at least 2 qubits, got {n}"));
    }
    if layers == 0 {
        return validation("Trotter layer count must be at least 1");
    }
    let theta = 2.0 * dt / layers as f64;
    let mut gates = Vec::new();
    for _ in 0..layers {
        for (a, b) in bonds(n) {
            for p in [&pauli::X, &pauli::Y, &pauli::Z] {
                gates.push(Gate::two_qubit_rotation(a, b, gates.len(), p));
            }
        }
    }
    let params = vec![theta; gates.len()];
    BoundCircuit::new(Circuit::new(n, gates)?, params)
}

/// Single-step Trotter circuit for `Σ Z_i Z_{i+1} + Σ α_i X_i`.
pub fn build_trotter_tfim(n: usize, dt: f64, alphas: &[f64]) -> Result<BoundCircuit> {
    build_trotter_tfim_layers(n, dt, alphas, 1)
}

/// Transverse-field Ising Trotter circuit: per layer, ZZ on even then odd
/// bonds, followed by the X fields. Parameters are `2 dt / layers` for bonds
/// and `2 α_i dt / layers` for fields.
pub fn build_trotter_tfim_layers(n: usize, dt: f64, alphas: &[f64], layers: usize) -> Result<BoundCircuit> {
    if alphas.len() != n {
        return validation(format!("expected {n} field coefficients, got {}", alphas.len()));
    }
    if n < 1 {
        return validation("TFIM chain needs at least 1 qubit");
    }
    if layers == 0 {
        return validation("Trotter layer count must be at least 1");
    }
    let step = dt / layers as f64;
    let mut gates = Vec::new();
    let mut params = Vec::new();
    for _ in 0..layers {
        if n >= 2 {
            for (a, b) in bonds(n) {
                gates.push(Gate::two_qubit_rotation(a, b, params.len(), &pauli::Z));
                params.push(2.0 * step);
            }
        }
        for (q, alpha) in alphas.iter().enumerate() {
            gates.push(Gate::rx(q, params.len()));
            params.push(2.0 * alpha * step);
        }
    }
    BoundCircuit::new(Circuit::new(n, gates)?, params)
}

/// Field coefficients drawn from `N(0, sigma^2)`.
pub fn sample_tfim_fields(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// Brickwork of random single-qubit rotations and ZZ rotations.
///
/// Layer `l` entangles even bonds when `l` is even and odd bonds otherwise,
/// so a site's light cone grows by at most one qubit per side per layer.
pub fn random_brickwork(n: usize, depth: usize, seed: u64) -> Result<BoundCircuit> {
    let mut rng = seeded_rng(seed);
    let mut gates = Vec::new();
    for layer in 0..depth {
        for q in 0..n {
            let p = gates.len();
            gates.push(match rng.random_range(0..3) {
                0 => Gate::rx(q, p),
                1 => Gate::ry(q, p),
                _ => Gate::rz(q, p),
            });
        }
        let mut a = layer % 2;
        while a + 1 < n {
            gates.push(Gate::two_qubit_rotation(a, a + 1, gates.len(), &pauli::Z));
            a += 2;
        }
    }
    let params = (0..gates.len()).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    BoundCircuit::new(Circuit::new(n, gates)?, params)
}

/// One-qubit `RX(θ)` ansatz and its target at `angle`.
pub fn rx_circuit(angle: f64) -> BoundCircuit {
    let c = Circuit::new(1, vec![Gate::rx(0, 0)]).expect("valid circuit");
    BoundCircuit { circuit: c, params: vec![angle] }
}
