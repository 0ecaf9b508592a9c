mod common;

use adamhash::lsh::{collision_probability, sample_function};
use adamhash::{
    kernel_eval, pse_bruteforce, AdamHash, AdamParams, Dataset, HashFamily, HbeParams, KernelSpec, MultiHbe,
    SingleHbe, VarianceProfile,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, d)
}

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.1..5.0f64).prop_map(|s| KernelSpec::gaussian(s).unwrap()),
        (0.1..5.0f64).prop_map(|s| KernelSpec::exponential(s).unwrap()),
        (1.0..4.0f64, 0.2..3.0f64).prop_map(|(p, q)| KernelSpec::t_student(p, q).unwrap()),
    ]
}

proptest! {
    #[test]
    fn pse_ignores_point_order(
        rows in prop::collection::vec(coords(3), 1..20),
        q in coords(3),
        seed in any::<u64>(),
    ) {
        let kernel = KernelSpec::gaussian(0.7).unwrap();
        let mut shuffled = rows.clone();
        let mut g = rng(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, g.random_range(0..=i));
        }
        let a = pse_bruteforce(&Dataset::from_rows(3, &rows).unwrap(), &kernel, &q).unwrap();
        let b = pse_bruteforce(&Dataset::from_rows(3, &shuffled).unwrap(), &kernel, &q).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        prop_assert!((a - gaussian_mean(&rows, 0.7, &q)).abs() <= 1e-12);
    }

    #[test]
    fn kernel_values_lie_in_unit_interval(kernel in kernel_strategy(), x in coords(4), y in coords(4)) {
        let w = kernel_eval(&kernel, &x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&w));
        prop_assert_eq!(w, kernel_eval(&kernel, &y, &x).unwrap());
    }

    #[test]
    fn kernel_respects_lipschitz_constant(
        kernel in kernel_strategy(),
        x in coords(4),
        q1 in coords(4),
        q2 in coords(4),
    ) {
        let gap = (kernel_eval(&kernel, &x, &q1).unwrap() - kernel_eval(&kernel, &x, &q2).unwrap()).abs();
        prop_assert!(gap <= kernel.lipschitz_k * dist(&q1, &q2) * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn collision_probability_is_symmetric_and_bounded(
        bits in 1usize..6,
        width in 0.2..4.0f64,
        x in coords(3),
        y in coords(3),
    ) {
        for family in [HashFamily::srp(bits, 3).unwrap(), HashFamily::discretized_gaussian(bits, width, 3).unwrap()] {
            let p = collision_probability(&family, &x, &y).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert_eq!(p, collision_probability(&family, &y, &x).unwrap());
            prop_assert_eq!(collision_probability(&family, &x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn interleaved_updates_restore_tables(
        ops in prop::collection::vec((any::<bool>(), any::<u16>()), 1..40),
        seed in 0u64..1000,
    ) {
        let d = 3;
        let mut s = SingleHbe::initialize(
            sphere_data(10, d, seed),
            KernelSpec::gaussian(1.0).unwrap(),
            VarianceProfile::Reciprocal,
            HashFamily::srp(2, d).unwrap(),
            HbeParams::new(0.05, 0.1, 0.25).with_repetitions(6),
            seed,
        ).unwrap();
        let initial = s.tables().to_vec();
        let mut g = rng(seed);
        let mut live = Vec::new();
        for (insert, pick) in ops {
            if insert || live.is_empty() {
                live.push(s.insert(&sphere_point(d, &mut g)).unwrap());
            } else {
                let id = live.swap_remove(pick as usize % live.len());
                s.delete(id).unwrap();
            }
        }
        for id in live {
            s.delete(id).unwrap();
        }
        prop_assert!(s.tables() == &initial[..]);
        prop_assert_eq!(s.dataset().len(), 10);
    }
}

/// Empirical collision frequency over sampled functions against the
/// closed-form probability.
#[test]
fn collision_probability_matches_sampling() {
    let d = 3;
    let x = unit(vec![1.0, 0.2, -0.3]);
    let y = unit(vec![0.4, 0.9, 0.1]);
    let trials = 40_000;
    for family in [
        HashFamily::srp(1, d).unwrap(),
        HashFamily::srp(3, d).unwrap(),
        HashFamily::discretized_gaussian(1, 1.0, d).unwrap(),
        HashFamily::discretized_gaussian(2, 2.5, d).unwrap(),
    ] {
        let p = collision_probability(&family, &x, &y).unwrap();
        let mut g = rng(5);
        let hits = (0..trials)
            .filter(|_| {
                let h = sample_function(&family, &mut g);
                h.hash(&x).unwrap() == h.hash(&y).unwrap()
            })
            .count();
        let freq = hits as f64 / trials as f64;
        let tol = 4.0 * binomial_sigma(p, trials);
        assert!((freq - p).abs() <= tol, "{family:?}: freq {freq} vs p {p}");
    }
}

#[test]
fn multi_draws_are_unbiased() {
    let (n, d, scale) = (48, 4, 1.0);
    let rows = sphere_rows(n, d, 7);
    let q = ball_point(d, &mut rng(8));
    let mu = gaussian_mean(&rows, scale, &q);
    let all = [
        HashFamily::srp(1, d).unwrap(),
        HashFamily::srp(2, d).unwrap(),
        HashFamily::discretized_gaussian(1, 2.0, d).unwrap(),
    ];
    let reps = 20_000;
    for g_count in 1..=3 {
        let m = MultiHbe::initialize(
            Dataset::from_rows(d, &rows).unwrap(),
            KernelSpec::gaussian(scale).unwrap(),
            VarianceProfile::Reciprocal,
            all[..g_count].to_vec(),
            HbeParams::new(0.05, 0.1, 0.25).with_repetitions(reps),
            9,
        )
        .unwrap();
        let mut g = rng(10);
        let draws: Vec<f64> = (0..reps).map(|r| m.estimate_once(&q, r, &mut g).unwrap()).collect();
        let k = reps as f64;
        let mean = draws.iter().sum::<f64>() / k;
        let sd = (draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        assert!(
            (mean - mu).abs() <= 4.0 * sd / k.sqrt(),
            "G={g_count}: mean {mean} vs μ {mu} (sd {sd})"
        );
        assert_eq!(m.samples_drawn(), (reps * g_count) as u64);
    }
}

#[test]
fn low_density_queries_are_zero_flagged() {
    // μ = τ/10 or less at the antipode of a tight cluster.
    let d = 4;
    let rows = cluster_rows(32, d, 0.15, 11);
    let (alpha, tau, delta) = (0.9, 0.3, 0.1);
    let far = [-1.0, 0.0, 0.0, 0.0];
    assert!(gaussian_mean(&rows, 1.0, &far) <= tau / 10.0);
    let s = SingleHbe::initialize(
        Dataset::from_rows(d, &rows).unwrap(),
        KernelSpec::gaussian(1.0).unwrap(),
        VarianceProfile::Reciprocal,
        HashFamily::srp(2, d).unwrap(),
        HbeParams::new(0.05, delta, tau).with_repetitions(4000),
        12,
    )
    .unwrap();
    let mut g = rng(13);
    let trials = 200;
    let zeros = (0..trials)
        .filter(|_| {
            let est = s.query(&far, alpha, tau, delta, &mut g).unwrap();
            assert!(!est.zero_flag || est.value == 0.0);
            est.zero_flag
        })
        .count();
    assert!(zeros as f64 / trials as f64 >= 1.0 - delta, "{zeros}/{trials}");
}

fn small_adam(seed: u64) -> AdamHash {
    AdamHash::initialize(
        Dataset::from_rows(3, cluster_rows(24, 3, 0.2, 14)).unwrap(),
        KernelSpec::gaussian(0.05).unwrap(),
        VarianceProfile::Constant { v: 1e-4 },
        vec![HashFamily::srp(1, 3).unwrap(), HashFamily::srp(2, 3).unwrap()],
        AdamParams::new(0.25, 0.1, 0.4).with_repetitions(6),
        seed,
    )
    .unwrap()
}

#[test]
fn adam_queries_are_deterministic_through_quantization() {
    let a = small_adam(15);
    let nq = a.quantizer();
    let q = [0.31, -0.22, 0.4];
    let p = nq.quantize(&q).unwrap();
    // A second query inside the same lattice cell.
    let q2: Vec<f64> = q.iter().map(|v| v + 1e-4 * nq.cell()).collect();
    assert_eq!(nq.quantize(&q2).unwrap(), p);
    let x = a.query(&q, &mut rng(16)).unwrap();
    let y = a.query(&q2, &mut rng(16)).unwrap();
    assert_eq!(x, y);
    let b = small_adam(15);
    assert_eq!(b.query(&q, &mut rng(16)).unwrap(), x);
}

#[test]
fn adam_tracks_n_across_mutations() {
    let mut a = small_adam(17);
    let per_op = (a.len() * 6 * 2) as u64;
    let mut g = rng(18);
    let mut live: Vec<u64> = Vec::new();
    let mut n = a.n();
    for _ in 0..100 {
        let before = a.hash_evals();
        if live.is_empty() || g.random_bool(0.5) {
            live.push(a.insert(&sphere_point(3, &mut g)).unwrap());
            n += 1;
        } else {
            let id = live.swap_remove(g.random_range(0..live.len()));
            a.delete(id).unwrap();
            n -= 1;
        }
        assert_eq!(a.n(), n);
        assert_eq!(a.hash_evals() - before, per_op);
        assert!(a.estimators().iter().all(|e| e.dataset().len() == n));
    }
}
