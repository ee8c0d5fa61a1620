//! The transport solver against independent optima: brute-force
//! permutations, the Hungarian algorithm, and spanning-basis enumeration.

mod common;

use common::*;
use ndarray::Array2;
use rand::Rng;
use wordrotor::geometry::{CostMatrix, Metric};
use wordrotor::transport::{emd, validate_distribution};

fn raw_cost(values: Array2<f64>) -> CostMatrix {
    CostMatrix {
        values,
        metric: Metric::Euclidean,
    }
}

#[test]
fn hungarian_oracle_matches_brute_force() {
    let mut rng = seeded(101);
    for _ in 0..80 {
        let n = rng.random_range(1..=6);
        let cost = Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..1.0));
        let fast = hungarian(&cost);
        let slow = brute_force_assignment(&cost);
        assert!(
            (fast - slow).abs() < 1e-9,
            "hungarian {fast} vs brute force {slow} on n={n}"
        );
    }
}

#[test]
fn uniform_masses_reduce_to_an_assignment_problem() {
    let mut rng = seeded(103);
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let cost = Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..1.0));
        let masses = vec![1.0 / n as f64; n];
        let solved = emd(&masses, &masses, &raw_cost(cost.clone())).unwrap();
        let oracle = brute_force_assignment(&cost) / n as f64;
        assert!(
            (solved.cost - oracle).abs() < 1e-9,
            "solver {} vs permutation oracle {oracle}",
            solved.cost
        );
    }
}

#[test]
fn continuous_masses_match_basis_enumeration() {
    let mut rng = seeded(107);
    for _ in 0..150 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let a = validate_distribution(
            &(0..n)
                .map(|_| rng.random_range(0.01..1.0))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let b = validate_distribution(
            &(0..m)
                .map(|_| rng.random_range(0.01..1.0))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let cost = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..1.0));
        let solved = emd(&a, &b, &raw_cost(cost.clone())).unwrap();
        let oracle = basis_enumeration_emd(&a, &b, &cost);
        assert!(
            (solved.cost - oracle).abs() < 1e-8,
            "solver {} vs basis enumeration {oracle}",
            solved.cost
        );
        for (i, &mass) in a.iter().enumerate() {
            assert!((solved.plan.row(i).sum() - mass).abs() < 1e-8);
        }
        for (j, &mass) in b.iter().enumerate() {
            assert!((solved.plan.column(j).sum() - mass).abs() < 1e-8);
        }
    }
}

#[test]
fn twelfth_masses_match_the_expanded_assignment_oracle() {
    let mut rng = seeded(109);
    for _ in 0..300 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=5);
        let a_units = random_twelfths(&mut rng, n);
        let b_units = random_twelfths(&mut rng, m);
        let cost = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..1.0));
        let solved = emd(
            &units_to_masses(&a_units),
            &units_to_masses(&b_units),
            &raw_cost(cost.clone()),
        )
        .unwrap();
        let oracle = twelfths_emd_oracle(&a_units, &b_units, &cost);
        assert!(
            (solved.cost - oracle).abs() < 1e-6,
            "solver {} vs assignment oracle {oracle}",
            solved.cost
        );
    }
}

#[test]
fn plans_stay_vertex_sparse() {
    let mut rng = seeded(113);
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let a = validate_distribution(
            &(0..n)
                .map(|_| rng.random_range(0.01..1.0))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let b = validate_distribution(
            &(0..m)
                .map(|_| rng.random_range(0.01..1.0))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let cost = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..1.0));
        let solved = emd(&a, &b, &raw_cost(cost)).unwrap();
        let support = solved.plan.iter().filter(|&&t| t > 0.0).count();
        let basis_size = n + m - 1;
        assert!(support <= basis_size, "support {support} on {n} x {m}");
        let total: f64 = solved.plan.sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
