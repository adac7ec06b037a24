//! Statistical trends that need more samples than a unit test should carry.

use incoherent::costs::{hst_cost, local_cost_exact, local_cost_from_shadows, test_loss, LocalCostOptions};
use incoherent::hardness::{run_distinguishing_experiment, RandomPauliMl, TwirlMode};
use incoherent::operator::SupportOperator;
use incoherent::rng::{derive_seed, seeded_rng};
use incoherent::shadows::{mean_var, pauli_snapshot_values, sample_pauli_shadow, ShadowSet, TargetHandle};
use incoherent::sim::{build_trotter_heisenberg, circuit::pauli, sample_haar_product, ProductState, Unitary};
use rand::Rng;

fn perturb(params: &[f64], scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    params.iter().map(|p| p + scale * rng.random_range(-1.0..1.0)).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for k in i..=j {
            r[idx[k]] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

#[test]
fn spearman_helper_sanity() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
}

#[test]
fn test_loss_tracks_hst() {
    // Perturbations of growing size give a spread of cost levels.
    let n = 5;
    let target = build_trotter_heisenberg(n, 0.1, 1).unwrap();
    let u = Unitary::Circuit(target.clone());
    let mut hst = Vec::new();
    let mut test = Vec::new();
    for i in 0..20u64 {
        let theta = perturb(&target.params, 0.05 + 0.05 * i as f64, i);
        hst.push(hst_cost(&u, &target.circuit, &theta).unwrap());
        test.push(test_loss(&u, &target.circuit, &theta, 100, 11).unwrap());
    }
    let rho = spearman(&hst, &test);
    assert!(rho >= 0.9, "spearman {rho}");
}

fn shadows_for(target: &Unitary, inputs: &[ProductState], m: usize, seed: u64) -> Vec<ShadowSet> {
    let h = TargetHandle::new(target.clone());
    inputs.iter().enumerate().map(|(j, p)| h.collect_pauli(p, m, derive_seed(seed, 2, j as u64)).unwrap()).collect()
}

#[test]
fn shadow_cost_error_shrinks_with_m() {
    let n = 4;
    let target = build_trotter_heisenberg(n, 0.1, 1).unwrap();
    let u = Unitary::Circuit(target.clone());
    let theta = perturb(&target.params, 0.5, 99);
    let mut medians = Vec::new();
    for m in [100, 1000, 10_000] {
        let errs: Vec<f64> = (0..10u64)
            .map(|seed| {
                let inputs: Vec<ProductState> = (0..2).map(|j| sample_haar_product(n, derive_seed(seed, 1, j))).collect();
                let shadows = shadows_for(&u, &inputs, m, seed);
                let exact = local_cost_exact(&u, &target.circuit, &theta, &inputs).unwrap();
                let est = local_cost_from_shadows(&shadows, &target.circuit, &theta, &inputs, LocalCostOptions::default())
                    .unwrap();
                (est.value - exact).abs()
            })
            .collect();
        medians.push(median(errs));
    }
    assert!(medians[0] >= medians[1] && medians[1] >= medians[2], "{medians:?}");
}

#[test]
fn pauli_variance_within_four_to_the_k() {
    let n = 4;
    let state = sample_haar_product(n, 3).to_statevector().unwrap();
    let shadow = sample_pauli_shadow(&state, 100_000, 8).unwrap();
    let letters = [pauli::X, pauli::Y, pauli::Z, pauli::X];
    for k in 1..=n {
        let obs = SupportOperator::product((0..k).collect(), &letters[..k]).unwrap();
        let (_, var) = mean_var(&pauli_snapshot_values(&shadow, &obs).unwrap());
        // Single-copy variance of a weight-k Pauli string is at most 3^k.
        assert!(var <= 1.1 * 4f64.powi(k as i32), "k={k}: {var}");
        assert!(var <= 1.05 * 3f64.powi(k as i32), "k={k}: {var}");
    }
}

#[test]
fn random_pauli_success_decays_with_n() {
    let rates: Vec<(f64, f64)> = [5usize, 9, 13]
        .iter()
        .map(|&n| {
            let r = run_distinguishing_experiment(n, &RandomPauliMl, 4, 4000, TwirlMode::None, 21).unwrap();
            (r.success_rate, r.stderr())
        })
        .collect();
    for w in rates.windows(2) {
        let slack = 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
        assert!(w[1].0 <= w[0].0 + slack, "{rates:?}");
    }
    assert!(rates[0].0 > rates[2].0, "{rates:?}");
}

#[test]
fn identity_string_is_exact() {
    let state = sample_haar_product(3, 1).to_statevector().unwrap();
    let shadow = sample_pauli_shadow(&state, 500, 2).unwrap();
    let id = SupportOperator::product(vec![0, 2], &[pauli::ID, pauli::ID]).unwrap();
    let values = pauli_snapshot_values(&shadow, &id).unwrap();
    assert!(values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}
