//! Stabilizer tableaus and uniform sampling of the Clifford group.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{validation, Result};

/// `i^phase X^x Z^z`, with qubit `j` on bit `j` of both masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliOp {
    pub x: u64,
    pub z: u64,
    pub phase: u8,
}

impl PauliOp {
    pub const IDENTITY: PauliOp = PauliOp { x: 0, z: 0, phase: 0 };

    /// The Hermitian Pauli with the given masks, times `(-1)^sign`.
    pub fn hermitian(x: u64, z: u64, sign: bool) -> Self {
        let phase = ((x & z).count_ones() + 2 * u32::from(sign)) % 4;
        PauliOp { x, z, phase: phase as u8 }
    }

    pub fn mul(self, rhs: PauliOp) -> PauliOp {
        // Z^c X^a = (-1)^{|c & a|} X^a Z^c.
        let swap = 2 * (self.z & rhs.x).count_ones();
        PauliOp {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: ((u32::from(self.phase) + u32::from(rhs.phase) + swap) % 4) as u8,
        }
    }

    /// Sign bit if this operator is Hermitian (`±` a Hermitian Pauli).
    pub fn hermitian_sign(self) -> Option<bool> {
        let rel = (4 + u32::from(self.phase) - (self.x & self.z).count_ones() % 4) % 4;
        match rel {
            0 => Some(false),
            2 => Some(true),
            _ => None,
        }
    }

    /// `out = P v`.
    pub fn apply(self, v: &[C64], out: &mut [C64]) {
        let ph = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)]
            [usize::from(self.phase)];
        let (a, c) = (self.x as usize, self.z as usize);
        for (y, o) in out.iter_mut().enumerate() {
            let src = y ^ a;
            let amp = v[src];
            *o = if (c & src).count_ones() % 2 == 0 { ph * amp } else { -ph * amp };
        }
    }
}

fn symplectic(x1: u64, z1: u64, x2: u64, z2: u64) -> bool {
    ((x1 & z2) ^ (z1 & x2)).count_ones() % 2 == 1
}

/// Conjugation action of an `n`-qubit Clifford `W`: row `j < n` is
/// `W X_j W†`, row `n + j` is `W Z_j W†`, each a signed Hermitian Pauli.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tableau {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl Tableau {
    pub fn identity(n: usize) -> Self {
        let mut t = Tableau { n, x: vec![0; 2 * n], z: vec![0; 2 * n], r: vec![false; 2 * n] };
        for j in 0..n {
            t.x[j] = 1 << j;
            t.z[n + j] = 1 << j;
        }
        t
    }

    pub fn from_rows(n: usize, x: Vec<u64>, z: Vec<u64>, r: Vec<bool>) -> Result<Self> {
        if n == 0 || n > 32 || x.len() != 2 * n || z.len() != 2 * n || r.len() != 2 * n {
            return validation("tableau dimensions do not match the qubit count");
        }
        let t = Tableau { n, x, z, r };
        t.check_symplectic()?;
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> PauliOp {
        PauliOp::hermitian(self.x[i], self.z[i], self.r[i])
    }

    pub fn rows(&self) -> impl Iterator<Item = (u64, u64, bool)> + '_ {
        (0..2 * self.n).map(|i| (self.x[i], self.z[i], self.r[i]))
    }

    /// Rows must pairwise commute except `(j, n + j)`, which anticommute.
    pub fn check_symplectic(&self) -> Result<()> {
        let n = self.n;
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if self.x.iter().chain(&self.z).any(|m| m & !mask != 0) {
            return validation("tableau row acts outside the register");
        }
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                let expect = b == a + n;
                if symplectic(self.x[a], self.z[a], self.x[b], self.z[b]) != expect {
                    return validation(format!("tableau rows {a} and {b} violate the symplectic form"));
                }
            }
        }
        Ok(())
    }

    /// Uniformly random Clifford (modulo global phase).
    ///
    /// Builds a symplectic basis pair by pair: `v` uniform over the nonzero
    /// vectors of the current symplectic complement, `w` uniform over the
    /// complement vectors with `<v, w> = 1`. Projection onto the complement is
    /// a linear surjection, so it maps uniform draws to uniform draws. Signs
    /// are independent fair bits.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1 && n <= 32);
        let mask = (1u64 << n) - 1;
        let mut pairs: Vec<((u64, u64), (u64, u64))> = Vec::with_capacity(n);
        let project = |pairs: &[((u64, u64), (u64, u64))], (mut ux, mut uz): (u64, u64)| {
            let (ox, oz) = (ux, uz);
            for &((vx, vz), (wx, wz)) in pairs {
                if symplectic(ox, oz, wx, wz) {
                    ux ^= vx;
                    uz ^= vz;
                }
                if symplectic(ox, oz, vx, vz) {
                    ux ^= wx;
                    uz ^= wz;
                }
            }
            (ux, uz)
        };
        for _ in 0..n {
            let v = loop {
                let u = project(&pairs, (rng.random::<u64>() & mask, rng.random::<u64>() & mask));
                if u != (0, 0) {
                    break u;
                }
            };
            let w = loop {
                let u = project(&pairs, (rng.random::<u64>() & mask, rng.random::<u64>() & mask));
                if symplectic(v.0, v.1, u.0, u.1) {
                    break u;
                }
            };
            pairs.push((v, w));
        }
        let mut t = Tableau { n, x: vec![0; 2 * n], z: vec![0; 2 * n], r: vec![false; 2 * n] };
        for (j, ((vx, vz), (wx, wz))) in pairs.into_iter().enumerate() {
            t.x[j] = vx;
            t.z[j] = vz;
            t.x[n + j] = wx;
            t.z[n + j] = wz;
        }
        for s in t.r.iter_mut() {
            *s = rng.random();
        }
        t
    }

    /// Tableau of `W†`.
    pub fn inverse(&self) -> Self {
        let n = self.n;
        let mut inv = Tableau { n, x: vec![0; 2 * n], z: vec![0; 2 * n], r: vec![false; 2 * n] };
        for g in 0..2 * n {
            let (gx, gz) = if g < n { (1u64 << g, 0) } else { (0, 1u64 << (g - n)) };
            // Expand the generator in the basis {W X_j W†, W Z_j W†}:
            // coefficient of the X-image is <g, Z-image>, and vice versa.
            let mut prod = PauliOp::IDENTITY;
            let mut pre = PauliOp::IDENTITY;
            for j in 0..n {
                let a = symplectic(gx, gz, self.x[n + j], self.z[n + j]);
                let c = symplectic(gx, gz, self.x[j], self.z[j]);
                if a {
                    prod = prod.mul(self.row(j));
                    pre = pre.mul(PauliOp::hermitian(1 << j, 0, false));
                }
                if c {
                    prod = prod.mul(self.row(n + j));
                    pre = pre.mul(PauliOp::hermitian(0, 1 << j, false));
                }
            }
            debug_assert_eq!((prod.x, prod.z), (gx, gz));
            // g = i^{phase(g) - phase(prod)} prod, and W† prod W = pre.
            let target = PauliOp::hermitian(gx, gz, false);
            let rel = (4 + u32::from(target.phase) - u32::from(prod.phase)) % 4;
            let img = PauliOp { phase: ((u32::from(pre.phase) + rel) % 4) as u8, ..pre };
            inv.x[g] = img.x;
            inv.z[g] = img.z;
            inv.r[g] = img.hermitian_sign().expect("conjugate of a Hermitian Pauli is Hermitian");
        }
        inv
    }

    /// Some state with stabilizers `rows n..2n` (that is, `W|0>` up to phase).
    pub fn stabilizer_state(&self) -> Vec<C64> {
        let n = self.n;
        let dim = 1usize << n;
        let mut salt = 0u64;
        loop {
            let mut v: Vec<C64> = (0..dim as u64)
                .map(|y| {
                    let h = crate::rng::splitmix64(y ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
                    C64::from_polar(1.0 + (h >> 40) as f64 / (1u64 << 24) as f64, (h & 0xffff) as f64)
                })
                .collect();
            let mut tmp = vec![C64::new(0.0, 0.0); dim];
            for j in n..2 * n {
                self.row(j).apply(&v, &mut tmp);
                for (a, b) in v.iter_mut().zip(&tmp) {
                    *a = (*a + b) * 0.5;
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-3 {
                v.iter_mut().for_each(|a| *a /= norm);
                return v;
            }
            salt += 1;
        }
    }

    /// `W ψ` up to a global phase, via `W|x> = Π_{j∈x} (W X_j W†) W|0>`
    /// enumerated in Gray-code order.
    pub fn apply_to(&self, psi: &[C64]) -> Vec<C64> {
        let dim = psi.len();
        let mut cur = self.stabilizer_state();
        let mut next = vec![C64::new(0.0, 0.0); dim];
        let mut out: Vec<C64> = cur.iter().map(|a| a * psi[0]).collect();
        for k in 1..dim {
            let j = k.trailing_zeros() as usize;
            self.row(j).apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            let amp = psi[k ^ (k >> 1)];
            if amp != C64::new(0.0, 0.0) {
                out.iter_mut().zip(&cur).for_each(|(o, c)| *o += amp * c);
            }
        }
        out
    }

    /// Row-major bit packing of the `2n x (2n+1)` binary matrix with columns
    /// `x_0..x_{n-1}, z_0..z_{n-1}, r`, most significant bit first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.n;
        let mut bits = Vec::with_capacity(2 * n * (2 * n + 1));
        for i in 0..2 * n {
            bits.extend((0..n).map(|j| (self.x[i] >> j) & 1 == 1));
            bits.extend((0..n).map(|j| (self.z[i] >> j) & 1 == 1));
            bits.push(self.r[i]);
        }
        bits.chunks(8)
            .map(|c| c.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | (u8::from(b) << (7 - k))))
            .collect()
    }

    pub fn from_bytes(n: usize, bytes: &[u8]) -> Result<Self> {
        let nbits = 2 * n * (2 * n + 1);
        if n == 0 || n > 32 || bytes.len() != nbits.div_ceil(8) {
            return validation(format!("tableau byte length {} does not fit {n} qubits", bytes.len()));
        }
        let bit = |k: usize| (bytes[k / 8] >> (7 - k % 8)) & 1 == 1;
        let (mut x, mut z, mut r) = (vec![0u64; 2 * n], vec![0u64; 2 * n], vec![false; 2 * n]);
        let width = 2 * n + 1;
        for i in 0..2 * n {
            for j in 0..n {
                x[i] |= u64::from(bit(i * width + j)) << j;
                z[i] |= u64::from(bit(i * width + n + j)) << j;
            }
            r[i] = bit(i * width + 2 * n);
        }
        Tableau::from_rows(n, x, z, r)
    }
}
