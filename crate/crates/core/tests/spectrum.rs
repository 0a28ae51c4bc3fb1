use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use wcs_core::seeding::{from_seed, stream};
use wcs_core::spectrum::{
    chernoff_tail_bound, occupancy_pmf, poisson_binomial, sample_occupancy, select_sparsity_level,
    AmplitudeLaw, BlockSpec,
};

fn enumerate(ps: &[f64]) -> Vec<f64> {
    let mut pmf = vec![0.0; ps.len() + 1];
    for mask in 0u32..(1 << ps.len()) {
        let p: f64 = ps
            .iter()
            .enumerate()
            .map(|(i, q)| if mask >> i & 1 == 1 { *q } else { 1.0 - q })
            .product();
        pmf[mask.count_ones() as usize] += p;
    }
    pmf
}

#[test]
fn pmf_matches_enumeration() {
    let mut rng = from_seed(11);
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let ps: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..6) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random(),
            })
            .collect();
        let dp = poisson_binomial(&ps);
        for (a, b) in dp.probabilities.iter().zip(enumerate(&ps)) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn reference_layout_moments() {
    let spec = BlockSpec::reference();
    let pmf = occupancy_pmf(&spec);
    assert_eq!(pmf.probabilities.len(), 257);
    assert!((pmf.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((pmf.mean() - 14.08).abs() < 1e-10);
    assert!((spec.expected_occupancy() - 14.08).abs() < 1e-12);
}

#[test]
fn sampling_matches_exact_distribution() {
    let spec = BlockSpec::reference();
    let law = AmplitudeLaw::default();
    let draws = 10_000;
    let mut hist = vec![0usize; spec.n() + 1];
    let mut total = 0usize;
    for t in 0..draws {
        let inst = sample_occupancy(&spec, &law, &mut stream(3, &[t]));
        hist[inst.sparsity()] += 1;
        total += inst.sparsity();
    }
    let mean = total as f64 / draws as f64;
    assert!((mean - 14.08).abs() < 0.5, "mean {mean}");

    // Chi-square goodness of fit, pooling bins until the expected count reaches 5.
    let pmf = occupancy_pmf(&spec);
    let (mut stat, mut bins) = (0.0, 0);
    let (mut obs, mut exp) = (0.0, 0.0);
    for k in 0..=spec.n() {
        obs += hist[k] as f64;
        exp += pmf.probabilities[k] * draws as f64;
        let rest: f64 = pmf.probabilities[k + 1..].iter().sum::<f64>() * draws as f64;
        if exp >= 5.0 && rest >= 5.0 || k == spec.n() {
            stat += (obs - exp) * (obs - exp) / exp;
            bins += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    let critical = ChiSquared::new((bins - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(
        stat < critical,
        "chi-square {stat} over {bins} bins exceeds {critical}"
    );
}

#[test]
fn chernoff_never_exceeds_exact_cdf() {
    let specs = [
        BlockSpec::reference(),
        BlockSpec::from_pairs(&[(100, 0.3)]).unwrap(),
        BlockSpec::from_pairs(&[(10, 0.9), (200, 0.02), (40, 0.5)]).unwrap(),
    ];
    for spec in &specs {
        let pmf = occupancy_pmf(spec);
        for k0 in 0..=spec.n() {
            let b = chernoff_tail_bound(k0 as f64, spec);
            assert!(
                b.value <= pmf.cdf(k0) + 1e-12,
                "k0={k0}: {} > {}",
                b.value,
                pmf.cdf(k0)
            );
            assert!((0.0..=1.0).contains(&b.value));
        }
    }
}

#[test]
fn selected_level_covers_the_exact_tail() {
    let spec = BlockSpec::reference();
    for alpha in [0.2, 0.04, 0.01, 0.001] {
        let level = select_sparsity_level(&spec, alpha).unwrap();
        assert!(!level.saturated);
        let b = chernoff_tail_bound(level.k0 as f64, &spec);
        assert!(b.value >= 1.0 - alpha);
        assert!(chernoff_tail_bound(level.k0 as f64 - 1.0, &spec).value < 1.0 - alpha);
        assert!(occupancy_pmf(&spec).exceedance(level.k0) <= alpha);
    }
    assert_eq!(select_sparsity_level(&spec, 0.04).unwrap().k0, 25);
}

#[test]
fn block_counts_partition_support() {
    let spec = BlockSpec::reference();
    let inst = sample_occupancy(&spec, &AmplitudeLaw::default(), &mut from_seed(5));
    assert_eq!(inst.block_counts().iter().sum::<usize>(), inst.sparsity());
    for &i in &inst.support {
        let mag = inst.x[i].abs();
        assert!((0.5..1.5).contains(&mag));
    }
}
