//! Gradient-based training against exact or shadow-estimated costs, and
//! exhaustive search over explicit parameter grids.

use std::collections::VecDeque;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{test_loss, LocalCostOptions, LocalShadowCost, DEFAULT_TEST_STATES};
use crate::error::{validation, Error, Result};
use crate::rng::{derive_seed, seeded_rng};
use crate::shadows::ShadowSet;
use crate::sim::{Circuit, ProductState, Unitary};

const INIT_TAG: u64 = 0x1417;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Each parameter uniform in `(-1, 1)`, drawn from the config seed.
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub grad_step: f64,
    /// Stop once the cost fell by less than this over `tol_window` iterations.
    pub tol: f64,
    pub tol_window: usize,
    pub grad_tol: f64,
    pub memory: usize,
    pub armijo_c: f64,
    pub max_backtracks: usize,
    pub init: Init,
    pub seed: u64,
    /// Record per-iteration wall time (makes traces run-dependent).
    pub timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_step: 1e-5,
            tol: 1e-9,
            tol_window: 5,
            grad_tol: 1e-8,
            memory: 10,
            armijo_c: 1e-4,
            max_backtracks: 30,
            init: Init::Uniform,
            seed: 0,
            timing: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.grad_step > 0.0) {
            return validation("grad_step must be positive");
        }
        if self.max_iters == 0 {
            return validation("max_iters must be at least 1");
        }
        if self.tol_window == 0 || self.memory == 0 {
            return validation("tol_window and memory must be at least 1");
        }
        Ok(())
    }

    pub fn initial_params(&self, num_params: usize) -> Result<Vec<f64>> {
        match &self.init {
            Init::Uniform => {
                let mut rng = seeded_rng(derive_seed(self.seed, INIT_TAG, 0));
                Ok((0..num_params).map(|_| rng.random_range(-1.0..1.0)).collect())
            }
            Init::Explicit(v) if v.len() == num_params => Ok(v.clone()),
            Init::Explicit(v) => validation(format!("explicit init has {} values, ansatz takes {num_params}", v.len())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub train_cost: f64,
    pub test_cost: Option<f64>,
    pub grad_norm: f64,
    pub wall_time_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CostTolerance,
    GradientTolerance,
    /// No step satisfied the Armijo condition, even along `-g`.
    LineSearch,
    MaxIters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub initial_cost: f64,
    pub iterations: Vec<IterRecord>,
    pub final_params: Vec<f64>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl TrainTrace {
    pub fn final_cost(&self) -> f64 {
        self.iterations.last().map_or(self.initial_cost, |r| r.train_cost)
    }

    pub fn final_test_cost(&self) -> Option<f64> {
        self.iterations.iter().rev().find_map(|r| r.test_cost)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{what} is not finite ({v})")))
    }
}

/// Central finite differences, one coordinate per task.
pub fn gradient<F>(cost: &F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if !(h > 0.0) {
        return validation("finite-difference step must be positive");
    }
    (0..params.len())
        .into_par_iter()
        .map(|i| {
            let mut x = params.to_vec();
            x[i] = params[i] + h;
            let up = finite(cost(&x)?, "cost")?;
            x[i] = params[i] - h;
            let down = finite(cost(&x)?, "cost")?;
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-H g` from the L-BFGS two-loop recursion.
fn direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Limited-memory quasi-Newton descent with Armijo backtracking.
///
/// `observe(iter, params)` runs after every accepted step and may return a
/// diagnostic test cost; it never influences the optimizer.
pub fn minimize_observed<F, O>(cost: &F, config: &TrainConfig, num_params: usize, mut observe: O) -> Result<TrainTrace>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    O: FnMut(usize, &[f64]) -> Result<Option<f64>>,
{
    config.validate()?;
    let start = Instant::now();
    let mut x = config.initial_params(num_params)?;
    let mut f = finite(cost(&x)?, "initial cost")?;
    let initial_cost = f;
    let mut g = gradient(cost, &x, config.grad_step)?;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut history = vec![f];
    let mut records = Vec::new();
    let mut stop = StopReason::MaxIters;
    for iter in 1..=config.max_iters {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= config.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        let mut step = None;
        for attempt in 0..2 {
            let d = if attempt == 0 && !memory.is_empty() { direction(&g, &memory) } else { g.iter().map(|v| -v).collect() };
            let slope = dot(&g, &d);
            if slope >= 0.0 {
                memory.clear();
                continue;
            }
            let mut t = if memory.is_empty() { (1.0 / dot(&d, &d).sqrt()).min(1.0) } else { 1.0 };
            for _ in 0..=config.max_backtracks {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
                let ft = cost(&trial)?;
                if ft.is_finite() && ft <= f + config.armijo_c * t * slope {
                    step = Some((trial, ft));
                    break;
                }
                t *= 0.5;
            }
            if step.is_some() {
                break;
            }
            memory.clear();
        }
        let Some((x_new, f_new)) = step else {
            stop = StopReason::LineSearch;
            break;
        };
        let g_new = gradient(cost, &x_new, config.grad_step)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if memory.len() == config.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        let test_cost = observe(iter, &x)?;
        records.push(IterRecord {
            iter,
            train_cost: f,
            test_cost,
            grad_norm: dot(&g, &g).sqrt(),
            wall_time_ms: config.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
        });
        let w = config.tol_window;
        if history.len() > w && history[history.len() - 1 - w] - f < config.tol {
            stop = StopReason::CostTolerance;
            break;
        }
    }
    let converged = matches!(stop, StopReason::CostTolerance | StopReason::GradientTolerance);
    Ok(TrainTrace { initial_cost, iterations: records, final_params: x, converged, stop_reason: stop })
}

pub fn minimize<F>(cost: &F, config: &TrainConfig, num_params: usize) -> Result<(Vec<f64>, TrainTrace)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let trace = minimize_observed(cost, config, num_params, |_, _| Ok(None))?;
    Ok((trace.final_params.clone(), trace))
}

/// Out-of-protocol diagnostic: the true target, used only to report test
/// loss. It is never passed to the cost being optimized.
pub struct TestOracle<'a> {
    pub target: &'a Unitary,
    pub n_test: usize,
    pub seed: u64,
}

impl<'a> TestOracle<'a> {
    pub fn new(target: &'a Unitary, seed: u64) -> Self {
        Self { target, n_test: DEFAULT_TEST_STATES, seed }
    }
}

/// Trains `ansatz` on the shadow-estimated local cost. The test loss is
/// evaluated every iteration for `n <= 8` and every tenth otherwise.
pub fn train_incoherent(
    shadows: &[ShadowSet],
    ansatz: &Circuit,
    inputs: &[ProductState],
    opts: LocalCostOptions,
    config: &TrainConfig,
    oracle: Option<&TestOracle<'_>>,
) -> Result<TrainTrace> {
    let cost = LocalShadowCost::new(shadows, ansatz, inputs, opts)?;
    let f = |p: &[f64]| cost.evaluate(p).map(|r| r.value);
    let n = ansatz.num_qubits();
    let cadence = if n <= 8 { 1 } else { 10 };
    let mut trace = minimize_observed(&f, config, ansatz.num_params(), |iter, p| match oracle {
        Some(o) if iter % cadence == 0 => test_loss(o.target, ansatz, p, o.n_test, o.seed).map(Some),
        _ => Ok(None),
    })?;
    if let (Some(o), Some(last)) = (oracle, trace.iterations.last_mut()) {
        if last.test_cost.is_none() {
            last.test_cost = Some(test_loss(o.target, ansatz, &trace.final_params, o.n_test, o.seed)?);
        }
    }
    Ok(trace)
}

/// Evaluates every candidate and returns the lowest-cost index (ties go to
/// the lowest index) with its cost.
pub fn covering_search<F>(cost: &F, candidates: &[Vec<f64>]) -> Result<(usize, f64)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    covering_search_all(cost, candidates).map(|(i, v, _)| (i, v))
}

/// [`covering_search`] that also returns the cost of every candidate.
pub fn covering_search_all<F>(cost: &F, candidates: &[Vec<f64>]) -> Result<(usize, f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if candidates.is_empty() {
        return validation("candidate list is empty");
    }
    let values: Vec<f64> = candidates.par_iter().map(|c| cost(c)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    let value = values[best];
    Ok((best, value, values))
}

/// `count` equally spaced angles over `[0, 2π)`, each a one-parameter vector.
pub fn angle_grid(count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|i| vec![2.0 * std::f64::consts::PI * i as f64 / count as f64]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{hst_cost, local_cost_exact};
    use crate::sim::{build_trotter_heisenberg, rx_circuit, sample_haar_product};

    #[test]
    fn gradient_of_square() {
        let g = gradient(&|p: &[f64]| Ok(p[0] * p[0]), &[0.3], 1e-5).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-6);
        assert!(gradient(&|_: &[f64]| Ok(f64::NAN), &[0.3], 1e-5).is_err());
        assert!(gradient(&|p: &[f64]| Ok(p[0]), &[0.3], 0.0).is_err());
    }

    #[test]
    fn gradient_vanishes_at_rx_target() {
        let f = |p: &[f64]| Ok(1.0 - ((p[0] - 0.7) / 2.0).cos().powi(2));
        assert!(gradient(&f, &[0.7], 1e-5).unwrap()[0].abs() < 1e-6);
        let u = Unitary::Circuit(rx_circuit(0.7));
        let c = rx_circuit(0.0).circuit;
        let h = |p: &[f64]| hst_cost(&u, &c, p);
        assert!(gradient(&h, &[0.7], 1e-5).unwrap()[0].abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_independent_differences() {
        let target = build_trotter_heisenberg(4, 0.1, 1).unwrap();
        let u = Unitary::Circuit(target.clone());
        let inputs: Vec<ProductState> = (0..2).map(|s| sample_haar_product(4, s)).collect();
        let f = |p: &[f64]| local_cost_exact(&u, &target.circuit, p, &inputs);
        let x: Vec<f64> = (0..target.params.len()).map(|i| 0.1 * i as f64).collect();
        let g = gradient(&f, &x, 1e-5).unwrap();
        for i in 0..x.len() {
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += 1e-5;
            down[i] -= 1e-5;
            let fd = (f(&up).unwrap() - f(&down).unwrap()) / 2e-5;
            assert_eq!(g[i], fd);
        }
    }

    #[test]
    fn convex_quadratic() {
        let centre = [1.0, -2.0, 0.5, 3.0, -0.25];
        let scale = [1.0, 4.0, 0.5, 2.0, 8.0];
        let f = |p: &[f64]| Ok(p.iter().zip(&centre).zip(&scale).map(|((x, c), s)| s * (x - c).powi(2)).sum());
        let cfg = TrainConfig { max_iters: 50, init: Init::Explicit(vec![0.0; 5]), tol: 0.0, ..TrainConfig::default() };
        let (x, trace) = minimize(&f, &cfg, 5).unwrap();
        assert!(trace.iterations.len() <= 50);
        for (a, b) in x.iter().zip(&centre) {
            assert!((a - b).abs() < 1e-8, "{x:?}");
        }
    }

    #[test]
    fn rx_target_compiles() {
        let u = Unitary::Circuit(rx_circuit(0.7));
        let c = rx_circuit(0.0).circuit;
        let f = |p: &[f64]| hst_cost(&u, &c, p);
        let cfg = TrainConfig { seed: 3, ..TrainConfig::default() };
        let (_, trace) = minimize(&f, &cfg, 1).unwrap();
        assert!(trace.final_cost() <= 1e-8, "{}", trace.final_cost());
    }

    #[test]
    fn accepted_costs_non_increasing_and_deterministic() {
        let f = |p: &[f64]| Ok((p[0] - 1.0).powi(4) + (p[1] * p[0]).sin().powi(2) + 0.1 * p[1] * p[1]);
        let cfg = TrainConfig { seed: 11, ..TrainConfig::default() };
        let (_, a) = minimize(&f, &cfg, 2).unwrap();
        let (_, b) = minimize(&f, &cfg, 2).unwrap();
        assert_eq!(a, b);
        let mut prev = a.initial_cost;
        for r in &a.iterations {
            assert!(r.train_cost <= prev);
            prev = r.train_cost;
        }
    }

    #[test]
    fn max_iters_respected() {
        let f = |p: &[f64]| Ok(p.iter().map(|x| (x - 5.0).powi(2) * (1.0 + x.cos().powi(2))).sum());
        let cfg = TrainConfig { max_iters: 3, ..TrainConfig::default() };
        let (_, trace) = minimize(&f, &cfg, 4).unwrap();
        assert!(trace.iterations.len() <= 3);
        assert!(!trace.converged);
        assert_eq!(trace.stop_reason, StopReason::MaxIters);
    }

    #[test]
    fn covering_examples() {
        let f = |p: &[f64]| Ok((p[0] - 2.0).abs());
        assert_eq!(covering_search(&f, &[vec![7.0]]).unwrap().0, 0);
        let c = vec![vec![1.0], vec![3.0], vec![2.0], vec![2.0]];
        assert_eq!(covering_search(&f, &c).unwrap(), (2, 0.0));
        assert!(covering_search(&f, &[]).is_err());
        let ties = vec![vec![1.0], vec![3.0]];
        assert_eq!(covering_search(&f, &ties).unwrap().0, 0);
    }

    #[test]
    fn config_validation() {
        let f = |p: &[f64]| Ok(p[0]);
        let bad = TrainConfig { grad_step: 0.0, ..TrainConfig::default() };
        assert!(minimize(&f, &bad, 1).is_err());
        let bad = TrainConfig { init: Init::Explicit(vec![0.0; 2]), ..TrainConfig::default() };
        assert!(minimize(&f, &bad, 1).is_err());
    }
}
