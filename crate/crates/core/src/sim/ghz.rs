use num_complex::Complex64 as C64;

use crate::error::{validation, Result};
use crate::sim::state::StateVector;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn check_sign(sign: i8) -> Result<()> {
    if sign != 1 && sign != -1 {
        return validation(format!("sign must be +1 or -1, got {sign}"));
    }
    Ok(())
}

/// Coefficient of the `Z^{⊗n}` term: `s` for odd `n`, `i s` for even `n`.
fn z_coefficient(n: usize, sign: i8) -> C64 {
    let s = f64::from(sign);
    if n % 2 == 1 {
        C64::new(s, 0.0)
    } else {
        C64::new(0.0, s)
    }
}

fn ghz_map(state: &StateVector, zc: C64) -> StateVector {
    let n = state.num_qubits();
    let full = (1usize << n) - 1;
    let amps = state.amplitudes();
    let out = (0..amps.len())
        .map(|x| {
            let parity = if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            (amps[x ^ full] + zc * parity * amps[x]) * FRAC_1_SQRT_2
        })
        .collect();
    StateVector::from_raw(n, out)
}

/// Applies `(X^{⊗n} + c Z^{⊗n}) / √2` with `c = sign` for odd `n` and
/// `c = i·sign` for even `n`.
pub fn apply_ghz_like(state: &StateVector, sign: i8) -> Result<StateVector> {
    check_sign(sign)?;
    Ok(ghz_map(state, z_coefficient(state.num_qubits(), sign)))
}

/// Adjoint of [`apply_ghz_like`]. `X` and `Z` strings are Hermitian, so only
/// the coefficient is conjugated.
pub fn apply_ghz_like_adjoint(state: &StateVector, sign: i8) -> Result<StateVector> {
    check_sign(sign)?;
    Ok(ghz_map(state, z_coefficient(state.num_qubits(), sign).conj()))
}
