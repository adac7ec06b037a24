//! Dense Hermitian operators on an explicit subset of qubits.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{resource, validation, Result};
use crate::sim::circuit::{adjoint, apply_matrix};
use crate::sim::{Circuit, StateVector};

/// Default cap on the support size of back-propagated observables.
pub const K_MAX: usize = 12;

/// Operator on `support` (sorted, distinct); local bit `j` of a matrix index
/// is qubit `support[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportOperator {
    support: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl SupportOperator {
    pub fn new(support: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return validation("support must be sorted and distinct");
        }
        if support.len() > K_MAX {
            return resource(format!("support of {} qubits exceeds k_max = {K_MAX}", support.len()));
        }
        let dim = 1usize << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return validation(format!("matrix must be {dim}x{dim} for a support of {}", support.len()));
        }
        let dev = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return validation(format!("operator is not Hermitian (deviation {dev:e})"));
        }
        Ok(Self { support, matrix })
    }

    pub(crate) fn from_parts(support: Vec<usize>, matrix: DMatrix<C64>) -> Self {
        Self { support, matrix }
    }

    pub fn identity(support: Vec<usize>) -> Result<Self> {
        let dim = 1usize << support.len();
        Self::new(support, DMatrix::identity(dim, dim))
    }

    /// `|ψ><ψ|` on a single qubit.
    pub fn projector(site: usize, factor: [C64; 2]) -> Self {
        let m = DMatrix::from_fn(2, 2, |r, c| factor[r] * factor[c].conj());
        Self { support: vec![site], matrix: m }
    }

    /// Tensor product of single-qubit operators, one per support qubit.
    pub fn product(support: Vec<usize>, factors: &[[C64; 4]]) -> Result<Self> {
        if support.len() != factors.len() {
            return validation("one factor per support qubit is required");
        }
        let k = support.len();
        let dim = 1usize << k;
        let m = DMatrix::from_fn(dim, dim, |r, c| {
            (0..k).fold(C64::new(1.0, 0.0), |acc, j| {
                acc * factors[j][((r >> j) & 1) * 2 + ((c >> j) & 1)]
            })
        });
        Self::new(support, m)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Re-expresses the operator on a sorted superset of its support,
    /// padding with identities.
    pub fn extend_to(&self, support: &[usize]) -> Result<Self> {
        let pos: Vec<usize> = self
            .support
            .iter()
            .map(|q| support.iter().position(|s| s == q))
            .collect::<Option<_>>()
            .ok_or_else(|| crate::Error::Validation("target support is not a superset".into()))?;
        let added: usize = (0..support.len())
            .filter(|j| !pos.contains(j))
            .map(|j| 1usize << j)
            .sum();
        let gather = |idx: usize| pos.iter().enumerate().map(|(o, &p)| ((idx >> p) & 1) << o).sum::<usize>();
        let dim = 1usize << support.len();
        let m = DMatrix::from_fn(dim, dim, |r, c| {
            if (r ^ c) & added != 0 {
                C64::new(0.0, 0.0)
            } else {
                self.matrix[(gather(r), gather(c))]
            }
        });
        Ok(Self { support: support.to_vec(), matrix: m })
    }

    /// Full `2^n x 2^n` embedding.
    pub fn embed(&self, n: usize) -> Result<DMatrix<C64>> {
        let all: Vec<usize> = (0..n).collect();
        Ok(self.extend_to(&all)?.matrix)
    }

    /// `<ψ|O|ψ>`, contracting only the support.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let n = state.num_qubits();
        if let Some(&q) = self.support.iter().find(|&&q| q >= n) {
            return validation(format!("support qubit {q} outside a {n}-qubit state"));
        }
        let amps = state.amplitudes();
        let k = self.support.len();
        let mask: usize = self.support.iter().map(|q| 1usize << q).sum();
        let scatter = |local: usize| -> usize {
            self.support.iter().enumerate().map(|(j, &q)| ((local >> j) & 1) << q).sum()
        };
        let offsets: Vec<usize> = (0..1usize << k).map(scatter).collect();
        let mut local = vec![C64::new(0.0, 0.0); 1 << k];
        let mut total = 0.0;
        for base in 0..amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                local[l] = amps[base | off];
            }
            let mv = &self.matrix * nalgebra::DVector::from_column_slice(&local);
            total += local.iter().zip(mv.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        }
        Ok(total)
    }

    /// `G O G†` for a gate matrix on qubits inside the support.
    fn conjugate(&mut self, targets: &[usize], gate: &[C64]) {
        let local: Vec<usize> = targets
            .iter()
            .map(|t| self.support.iter().position(|s| s == t).expect("target in support"))
            .collect();
        let dim = self.matrix.nrows();
        // Columns are contiguous (column-major): G·O acts column by column,
        // then (G·(G·O)†)† = G·O·G†.
        for c in 0..dim {
            apply_matrix(self.matrix.column_mut(c).as_mut_slice(), &local, gate);
        }
        self.matrix.adjoint_mut();
        for c in 0..dim {
            apply_matrix(self.matrix.column_mut(c).as_mut_slice(), &local, gate);
        }
        self.matrix.adjoint_mut();
    }
}

/// Which conjugation to apply when propagating through a circuit `V`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `V O V†`.
    Forward,
    /// `V† O V`.
    Adjoint,
}

/// Conjugates `op` through `circuit`, growing the support along the static
/// light cone of the gates it meets.
pub fn propagate(
    op: &SupportOperator,
    circuit: &Circuit,
    params: &[f64],
    direction: Direction,
    k_max: usize,
) -> Result<SupportOperator> {
    let n = circuit.num_qubits();
    if let Some(&q) = op.support.iter().find(|&&q| q >= n) {
        return validation(format!("support qubit {q} outside a {n}-qubit circuit"));
    }
    let mats = circuit.bind(params)?;
    let mut order: Vec<usize> = (0..mats.len()).collect();
    if direction == Direction::Adjoint {
        order.reverse();
    }
    let mut cur = op.clone();
    for gi in order {
        let gate = &circuit.gates()[gi];
        if gate.targets.iter().all(|t| !cur.support.contains(t)) {
            continue;
        }
        if gate.targets.iter().any(|t| !cur.support.contains(t)) {
            let mut grown = cur.support.clone();
            grown.extend(gate.targets.iter().filter(|t| !cur.support.contains(t)));
            grown.sort_unstable();
            if grown.len() > k_max {
                return resource(format!(
                    "light cone grew to {} qubits, above k_max = {k_max}; use the Clifford-shadow global cost instead",
                    grown.len()
                ));
            }
            cur = cur.extend_to(&grown)?;
        }
        let m = match direction {
            Direction::Forward => mats[gi].clone(),
            Direction::Adjoint => adjoint(&mats[gi], gate.dim()),
        };
        cur.conjugate(&gate.targets, &m);
    }
    Ok(cur)
}

/// `V (|ψ><ψ|_site ⊗ I) V†` (or the adjoint conjugation) restricted to its
/// light cone.
pub fn backpropagate_site_observable(
    circuit: &Circuit,
    params: &[f64],
    site: usize,
    factor: [C64; 2],
    direction: Direction,
    k_max: usize,
) -> Result<SupportOperator> {
    if site >= circuit.num_qubits() {
        return validation(format!("site {site} outside a {}-qubit circuit", circuit.num_qubits()));
    }
    propagate(&SupportOperator::projector(site, factor), circuit, params, direction, k_max)
}
