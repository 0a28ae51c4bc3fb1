use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use wcs_core::seeding::stream;
use wcs_core::sensing::{
    acquire_measurements, generate_sensing_matrix, EpsilonRule, NoiseTarget, SensingSystem,
};
use wcs_core::solvers::{
    compute_weights, cosamp, omp, solve_l1, solve_weighted_l1, CosampOptions, L1Options,
    OmpOptions, WeightVector,
};
use wcs_core::spectrum::{sample_occupancy, AmplitudeLaw, BlockSpec};

fn sparse<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in sample(rng, n, k) {
        let mag: f64 = rng.random_range(0.5..1.5);
        x[i] = if rng.random::<bool>() { mag } else { -mag };
    }
    x
}

fn support(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] != 0.0).collect()
}

#[test]
fn square_system_is_inverted() {
    let mut rng = stream(1, &[]);
    let sys = generate_sensing_matrix(16, 16, &mut rng).unwrap();
    let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = sys.apply(&x);
    let r = solve_l1(&sys, &y, 0.0, &L1Options::default()).unwrap();
    assert!(r.error_norm(&x) < 1e-6, "{}", r.error_norm(&x));
}

#[test]
fn weighted_exact_recovery() {
    let spec = BlockSpec::from_pairs(&[(64, 0.06), (64, 0.01)]).unwrap();
    let w = compute_weights(&spec).unwrap();
    let mut exact = 0;
    for t in 0..50 {
        let mut rng = stream(2, &[t]);
        // Support shaped like the layout: four in the dense block, one in the sparse one.
        let mut x = sparse(64, 4, &mut rng);
        x.extend(sparse(64, 1, &mut rng));
        let sys = generate_sensing_matrix(60, 128, &mut rng).unwrap();
        let y = sys.apply(&x);
        let r = solve_weighted_l1(&sys, &y, 0.0, &w, &L1Options::default()).unwrap();
        exact += (r.error_norm(&x) < 1e-4) as usize;
    }
    assert!(exact >= 47, "{exact}/50");
}

#[test]
fn omp_support_recovery() {
    let mut hits = 0;
    for t in 0..100 {
        let mut rng = stream(3, &[t]);
        let x = sparse(64, 3, &mut rng);
        let sys = generate_sensing_matrix(32, 64, &mut rng).unwrap();
        let y = sys.apply(&x);
        let r = omp(
            &sys,
            &y,
            &OmpOptions {
                k_max: 3,
                residual_tol: 1e-10,
            },
        )
        .unwrap();
        hits += (r.support() == support(&x)) as usize;
    }
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn omp_single_column() {
    let sys = generate_sensing_matrix(10, 30, &mut stream(4, &[])).unwrap();
    let y: Vec<f64> = sys.matrix().column(17).iter().copied().collect();
    let r = omp(
        &sys,
        &y,
        &OmpOptions {
            k_max: 5,
            residual_tol: 1e-10,
        },
    )
    .unwrap();
    assert_eq!(r.support(), vec![17]);
    assert_eq!(r.iterations, 1);
    assert!((r.x_hat[17] - 1.0).abs() < 1e-12);
}

#[test]
fn cosamp_exact_recovery() {
    let mut hits = 0;
    for t in 0..100 {
        let mut rng = stream(5, &[t]);
        let x = sparse(128, 4, &mut rng);
        let sys = generate_sensing_matrix(60, 128, &mut rng).unwrap();
        let y = sys.apply(&x);
        let r = cosamp(&sys, &y, &CosampOptions::new(4, 1e-10)).unwrap();
        assert!(r.support().len() <= 4);
        hits += (r.error_norm(&x) < 1e-6) as usize;
    }
    assert!(hits >= 90, "{hits}/100");
}

struct Case {
    sys: SensingSystem,
    x: Vec<f64>,
    y: Vec<f64>,
    eps: f64,
    noise: f64,
}

fn noisy_case(t: u64, snr_db: f64) -> Case {
    let spec = BlockSpec::reference();
    let mut rng = stream(6, &[t]);
    let inst = sample_occupancy(&spec, &AmplitudeLaw::default(), &mut rng);
    let sys = generate_sensing_matrix(40, 256, &mut rng).unwrap();
    let meas = acquire_measurements(
        &sys,
        &inst,
        NoiseTarget::SensingSnrDb(snr_db),
        EpsilonRule::default(),
        &mut rng,
    )
    .unwrap();
    Case {
        noise: meas.noise_norm(),
        eps: meas.epsilon,
        y: meas.y,
        x: inst.x,
        sys,
    }
}

#[test]
fn scale_equivariance() {
    let w = compute_weights(&BlockSpec::reference()).unwrap();
    let opts = L1Options::default();
    for t in 0..5 {
        let c = noisy_case(t, 20.0);
        let base = solve_weighted_l1(&c.sys, &c.y, c.eps, &w, &opts).unwrap();
        let s = 7.5;
        let ys: Vec<f64> = c.y.iter().map(|v| v * s).collect();
        let scaled = solve_weighted_l1(&c.sys, &ys, c.eps * s, &w, &opts).unwrap();
        for (a, b) in base.x_hat.iter().zip(&scaled.x_hat) {
            assert!((a * s - b).abs() < 1e-6 * s, "{a} {b}");
        }
    }
}

#[test]
fn weight_rescaling_invariance() {
    let spec = BlockSpec::reference();
    let w = compute_weights(&spec).unwrap();
    let w10 =
        WeightVector::from_blocks(&spec, w.block().iter().map(|v| v * 10.0).collect()).unwrap();
    let opts = L1Options::default();
    for t in 0..5 {
        let c = noisy_case(t, 20.0);
        let a = solve_weighted_l1(&c.sys, &c.y, c.eps, &w, &opts).unwrap();
        let b = solve_weighted_l1(&c.sys, &c.y, c.eps, &w10, &opts).unwrap();
        for (u, v) in a.x_hat.iter().zip(&b.x_hat) {
            assert!((u - v).abs() < 1e-6);
        }
    }
}

#[test]
fn objective_dominates_truth_when_feasible() {
    let w = compute_weights(&BlockSpec::reference()).unwrap();
    let opts = L1Options::default();
    let mut checked = 0;
    for t in 0..30 {
        let c = noisy_case(t, 15.0);
        if c.noise > c.eps {
            continue;
        }
        let r = solve_weighted_l1(&c.sys, &c.y, c.eps, &w, &opts).unwrap();
        assert!(r.residual_norm <= c.eps + 1e-6);
        assert!(w.weighted_norm(&r.x_hat) <= w.weighted_norm(&c.x) + 1e-6);
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn rejects_bad_shapes() {
    let sys = SensingSystem::from_matrix(DMatrix::identity(3, 5)).unwrap();
    let opts = L1Options::default();
    assert!(solve_l1(&sys, &[1.0, 2.0], 0.1, &opts).is_err());
    assert!(omp(
        &sys,
        &[1.0; 3],
        &OmpOptions {
            k_max: 4,
            residual_tol: 0.0
        }
    )
    .is_err());
    assert!(cosamp(&sys, &[1.0; 3], &CosampOptions::new(0, 0.0)).is_err());
    assert!(SensingSystem::from_matrix(DMatrix::zeros(2, 4)).is_err());
    assert!(SensingSystem::from_matrix(DMatrix::identity(4, 3)).is_err());
}
