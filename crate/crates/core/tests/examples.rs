//! Worked examples for each module, through the public API.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hdtest::collections::{assign_weights, build_collection, CollectionKind, CollectionParams, Setting, WeightScheme};
use hdtest::covmodels::{
    augment_mean_covariate, build_covariance, center_unknown_mean, snr, theta_norm_sq, CovarianceKind, CovarianceSpec,
    Dataset, DatasetSampler, SignalSpec,
};
use hdtest::ggm::{graph_test, node_test, Graph};
use hdtest::numerics::{cholesky, fisher_isf, fisher_sf, orthonormalize, sample_mvn, FisherParams, Matrix};
use hdtest::simharness::estimate_rejection_rate;
use hdtest::testcore::{estimate_q_seeded, fisher_stat, single_test, ProjectionPlan, Procedure};
use hdtest::theory::{check_hypothesis_hm, d_star, minimax_rate, RateParams, RateQuery, RateVariant};

fn three_sigma(p: f64, reps: usize) -> f64 {
    3.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

#[test]
fn orthonormal_basis_of_random_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = sample_mvn(&mut rng, &Matrix::identity(4), 8).unwrap();
    let basis = orthonormalize(&m.columns().collect::<Vec<_>>(), None).unwrap();
    assert_eq!(basis.rank(), 4);
    let b = basis.vectors();
    for i in 0..4 {
        for j in 0..4 {
            let g: f64 = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum();
            assert!((g - f64::from(u8::from(i == j))).abs() <= 1e-10);
        }
    }
}

#[test]
fn fisher_two_two_closed_form() {
    let f = FisherParams::new(2, 2).unwrap();
    assert!((fisher_sf(f, 1.0) - 0.5).abs() <= 1e-15);
    assert!((fisher_sf(f, 3.0) - 0.25).abs() <= 1e-15);
    assert!((fisher_isf(f, 0.25).unwrap() - 3.0).abs() <= 1e-12);
    let g = FisherParams::new(5, 10).unwrap();
    assert!((fisher_sf(g, fisher_isf(g, 0.05).unwrap()) - 0.05).abs() <= 1e-10);
}

#[test]
fn cholesky_by_hand() {
    let l = cholesky(&Matrix::from_rows(&[vec![1.0, 0.8], vec![0.8, 1.0]]).unwrap()).unwrap();
    let expect = [[1.0, 0.0], [0.8, 0.6]];
    for (i, row) in expect.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((l.get(i, j) - v).abs() <= 1e-15);
        }
    }
}

#[test]
fn toroidal_entries() {
    let w = 0.7;
    let s = build_covariance(&CovarianceSpec::new(CovarianceKind::ToroidalExp { w }, 4)).unwrap();
    assert!((s.get(0, 2) - (-2.0 * w).exp()).abs() <= 1e-15);
    let s = build_covariance(&CovarianceSpec::new(CovarianceKind::ToroidalPoly { t: 1.0 }, 5)).unwrap();
    assert!((s.get(0, 3) - 1.0 / 3.0).abs() <= 1e-15);
}

#[test]
fn quadratic_form_and_snr() {
    let (c, a) = (0.3, 0.4);
    let sigma = build_covariance(&CovarianceSpec::new(CovarianceKind::ConstantCorr { c }, 5)).unwrap();
    let theta = [a, a, 0.0, 0.0, 0.0];
    assert!((theta_norm_sq(&theta, &sigma).unwrap() - 2.0 * a * a * (1.0 + c)).abs() <= 1e-15);
    let id = Matrix::identity(30);
    let mut t = vec![0.0; 30];
    t[0] = 0.8;
    assert_eq!(format!("{:.2}", snr(&t, &id, 1.0).unwrap()), "1.78");
    t[0] = 0.9;
    assert_eq!(format!("{:.2}", snr(&t, &id, 1.0).unwrap()), "4.26");
    let sampler = DatasetSampler::new(&CovarianceSpec::identity(30), &SignalSpec { theta: {
        let mut v = vec![0.0; 30];
        v[0] = 0.8;
        v
    }, var_y: 1.0 })
    .unwrap();
    assert!((sampler.noise_variance() - 0.36).abs() <= 1e-15);
}

#[test]
fn mean_covariate_variance() {
    let (c, p, n) = (0.8, 20, 40_000);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = sample_mvn(&mut rng, &build_covariance(&CovarianceSpec::new(CovarianceKind::ConstantCorr { c }, p)).unwrap(), n)
        .unwrap();
    // Standardizing by sqrt(var X_i) = 1 leaves the plain average.
    let z = augment_mean_covariate(&x, &vec![1.0; p]).unwrap();
    let mean = z.iter().sum::<f64>() / n as f64;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let expect = c + (1.0 - c) / p as f64;
    assert!((var - expect).abs() <= 0.03, "{var} vs {expect}");
}

#[test]
fn centering_zeroes_column_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = sample_mvn(&mut rng, &Matrix::identity(3), 10).unwrap();
    let y: Vec<f64> = (0..10).map(|i| i as f64 + 3.0).collect();
    let (c, extra) = center_unknown_mean(&Dataset::new(y, x).unwrap()).unwrap();
    assert_eq!(extra, 1);
    for col in c.x.columns() {
        assert!((col.iter().sum::<f64>() / 10.0).abs() <= 1e-14);
    }
}

#[test]
fn collection_sizes() {
    let s = Setting::new(500, 50);
    let nested = build_collection(&CollectionKind::Nested, &s, &CollectionParams::default()).unwrap();
    assert_eq!(nested.len(), 25);
    assert_eq!(nested.last().unwrap(), &(1..=25).collect::<Vec<_>>());
    let dyadic = build_collection(&CollectionKind::Dyadic, &s, &CollectionParams::default()).unwrap();
    assert_eq!(dyadic.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 2, 4, 8, 16]);
}

#[test]
fn ellipsoid_split_weights() {
    let s = Setting::new(10, 40);
    let kind = CollectionKind::EllipsoidNested;
    let models = build_collection(&kind, &s, &CollectionParams::default()).unwrap();
    assert_eq!(models.len(), 10);
    assert_eq!(WeightScheme::default_for(&kind, &s), WeightScheme::EllipsoidSplit);
    let c = assign_weights(models, &s, &WeightScheme::EllipsoidSplit, 0.05).unwrap();
    assert!((c.weights[9] - 0.025).abs() <= 1e-15);
    for w in &c.weights[..9] {
        assert!((w - 0.025 / 9.0).abs() <= 1e-15);
    }
}

#[test]
fn fisher_statistic_by_hand() {
    let x = Matrix::from_columns(vec![vec![1.0, 0.0, 0.0]]).unwrap();
    let data = Dataset::new(vec![2.0, 1.0, 1.0], x).unwrap();
    assert_eq!(fisher_stat(&data, &[], &[1]).unwrap(), (4.0, 1, 2));
    let s = single_test(&data, &[], &[1], 0.05).unwrap();
    assert!((s.threshold - 18.513).abs() < 1e-3);
    assert!(!s.rejected);
}

#[test]
fn single_test_null_size() {
    let p = 6;
    let mut theta = vec![0.0; p];
    theta[0] = 0.7;
    let sampler = DatasetSampler::new(&CovarianceSpec::new(CovarianceKind::ConstantCorr { c: 0.3 }, p), &SignalSpec { theta, var_y: 1.0 })
        .unwrap();
    let reps = 10_000;
    let est = estimate_rejection_rate(11, reps, |rng| Ok(sampler.sample(rng, 12)), |_, d| {
        Ok(single_test(d, &[1], &[2, 3], 0.05)?.rejected)
    })
    .unwrap();
    assert!((est.frequency - 0.05).abs() <= three_sigma(0.05, reps), "{}", est.frequency);
}

#[test]
fn duplicate_models_leave_q_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = sample_mvn(&mut rng, &Matrix::identity(8), 14).unwrap();
    let models: Vec<Vec<usize>> = (1..=6).map(|j| vec![j]).collect();
    let mut dup = models.clone();
    dup.push(vec![3]);
    dup.push(vec![5]);
    let a = estimate_q_seeded(&ProjectionPlan::new(&x, &[], &models, false).unwrap(), 0.05, 500, 99).unwrap();
    let b = estimate_q_seeded(&ProjectionPlan::new(&x, &[], &dup, false).unwrap(), 0.05, 500, 99).unwrap();
    assert_eq!(a, b);
    assert!(a >= 0.05 / 6.0);
}

#[test]
fn hypothesis_hm_fails_for_small_tables() {
    let s = Setting::new(30, 15);
    let models = build_collection(&CollectionKind::Singletons, &s, &CollectionParams::default()).unwrap();
    let c = assign_weights(models, &s, &WeightScheme::Uniform, 0.05).unwrap();
    let report = check_hypothesis_hm(&c, 0.05);
    assert!(!report.holds);
    assert!(report.per_model.iter().all(|m| !m.level_ok));
    assert!((c.weights[0] - 1.0 / 600.0).abs() < 1e-15);
}

fn rate(variant: RateVariant, params: RateParams) -> f64 {
    minimax_rate(&RateQuery { variant, params }).unwrap().value
}

#[test]
fn rate_formulas() {
    let base = RateParams { k: Some(1), p: Some(30), n: Some(15), ..Default::default() };
    assert!((rate(RateVariant::SparseClaim53, base.clone()) - 31f64.ln() / 30.0).abs() <= 1e-15);

    let (k, p, n): (f64, f64, f64) = (3.0, 1000.0, 100.0);
    let params = RateParams { k: Some(3), p: Some(1000), n: Some(100), alpha: Some(0.235), delta: Some(0.235), ..Default::default() };
    let r = p / (k * k);
    let expect = (k / n) * 0.588_896_543_271_275_5 * (1.0 + r + (2.0 * r).sqrt()).ln();
    assert!((rate(RateVariant::SparseLower, params) - expect).abs() <= 1e-12);

    let params = RateParams { p: Some(40), n: Some(20), t: Some(1.0), alpha: Some(0.1), delta: Some(0.1), ..Default::default() };
    let eta: f64 = 2.0 * 0.8;
    let l = 2.0 * eta * eta;
    let expect = (1.0 + l * 40.0 / (1.0 + 2.0 * 39f64.ln())).ln() / 20.0;
    assert!((rate(RateVariant::ToroidalPolyLower, params) - expect).abs() <= 1e-14);
}

#[test]
fn d_star_example() {
    let p = 20;
    let mut a: Vec<f64> = (1..=p).map(|i| (i as f64).powf(-0.5)).collect();
    a.push(0.0);
    assert_eq!(d_star(&a, 1.0, 10).unwrap(), 5);
}

fn chain_covariance(a: f64) -> Vec<Vec<f64>> {
    // inverse of the tridiagonal precision [[1,a,0],[a,1,a],[0,a,1]]
    let det = 1.0 - 2.0 * a * a;
    let k = [[1.0 - a * a, -a, a * a], [-a, 1.0, -a], [a * a, -a, 1.0 - a * a]];
    k.iter().map(|r| r.iter().map(|v| v / det).collect()).collect()
}

#[test]
fn ggm_empty_graph_size() {
    let (k, n, reps) = (4, 30, 1000);
    let graph = Graph::empty(k);
    let node = estimate_rejection_rate(21, reps, |rng| sample_mvn(rng, &Matrix::identity(k), n), |rng, z| {
        Ok(node_test(rng, z, &graph, 1, 0.05, &CollectionKind::Singletons, Procedure::P1)?.rejected())
    })
    .unwrap();
    assert!(node.frequency <= 0.05 + three_sigma(0.05, reps), "{}", node.frequency);
    let fwer = estimate_rejection_rate(22, reps, |rng| sample_mvn(rng, &Matrix::identity(k), n), |rng, z| {
        Ok(graph_test(rng, z, &graph, 0.05, &CollectionKind::Singletons, Procedure::P1)?.rejected)
    })
    .unwrap();
    assert!(fwer.frequency <= 0.05 + three_sigma(0.05, reps), "{}", fwer.frequency);
}

#[test]
fn ggm_missing_edge_power_grows_with_n() {
    let sigma = Matrix::from_rows(&chain_covariance(0.4)).unwrap();
    let mut graph = Graph::empty(3);
    graph.add_edge(2, 3).unwrap();
    let powers: Vec<f64> = [20, 50, 100]
        .iter()
        .map(|&n| {
            estimate_rejection_rate(31, 400, |rng| sample_mvn(rng, &sigma, n), |rng, z| {
                Ok(node_test(rng, z, &graph, 1, 0.05, &CollectionKind::Singletons, Procedure::P1)?.rejected())
            })
            .unwrap()
            .frequency
        })
        .collect();
    assert!(powers[0] < powers[1] && powers[1] <= powers[2], "{powers:?}");
    assert!(powers[2] >= 0.95, "{powers:?}");
}
