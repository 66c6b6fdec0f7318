use adrcm::gof::{chi_square_gof, chi_square_homogeneity, ks_one_sample, ks_two_sample, poisson_pmf, total_variation};
use adrcm::numerics::Quadrature;
use adrcm::palm::{self, pair_connect_probability};
use adrcm::{LimitLaws, MarkedPoint, ModelParams, PalmSampler, Profile, RootAge, SamplerKind, Space};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(beta: f64, gamma: f64, profile: Profile) -> ModelParams {
    ModelParams::new(beta, gamma, profile, Space::unit_torus(1).unwrap()).unwrap()
}

fn inverse(p: &ModelParams, q: f64) -> PalmSampler {
    PalmSampler::new(p, q, SamplerKind::InverseTransform).unwrap()
}

#[test]
fn root_of_age_one_has_poisson_outdegree() {
    let p = params(1.0, 0.5, Profile::indicator(0.5).unwrap());
    let q = 0.99;
    let s = inverse(&p, q);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut counts = vec![0u64; 40];
    for _ in 0..20_000 {
        let n = s.sample_neighborhood(RootAge::Fixed(1.0), &mut rng).unwrap();
        assert!(n.younger.is_empty());
        counts[n.degree()] += 1;
    }
    let mean = q * 2.0;
    let probs: Vec<f64> = (0..40).map(|k| poisson_pmf(k, mean)).collect();
    assert!(chi_square_gof(&counts, &probs, 5.0).p_value > 1e-3);
}

#[test]
fn mean_degree_at_fixed_age_is_lambda_u() {
    let p = params(0.8, 0.4, Profile::polynomial(2.5).unwrap());
    let laws = LimitLaws::new(&p).unwrap();
    let q = 0.99;
    let s = inverse(&p, q);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for u in [0.05, 0.3, 0.9] {
        let n = 20_000;
        let total: usize = (0..n)
            .map(|_| s.sample_neighborhood(RootAge::Fixed(u), &mut rng).unwrap().degree())
            .sum();
        let expected = q * laws.lambda_u(u);
        let mean = total as f64 / n as f64;
        let se = (expected / n as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "u={u}: {mean} vs {expected}");
    }
}

#[test]
fn lambda_at_half_gamma_is_pinned() {
    let p = params(1.0, 0.5, Profile::indicator(0.5).unwrap());
    let laws = LimitLaws::new(&p).unwrap();
    assert!((laws.lambda_u(1.0) - 2.0).abs() < 1e-15);
}

#[test]
fn ages_follow_power_marginals() {
    let g = 0.35;
    let p = params(1.2, g, Profile::polynomial(3.0).unwrap());
    let s = inverse(&p, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let u = 0.4;
    let mut older = Vec::new();
    let mut younger = Vec::new();
    while older.len() < 5000 || younger.len() < 5000 {
        older.extend(s.sample_older(u, &mut rng).unwrap().into_iter().map(|y| y.age));
        younger.extend(s.sample_younger(u, 1.0, &mut rng).unwrap().into_iter().map(|y| y.age));
    }
    let r = ks_one_sample(&older, |x| (x / u).clamp(0.0, 1.0).powf(1.0 - g));
    assert!(r.p_value > 0.01, "{r:?}");
    let r = ks_one_sample(&younger, |x| (x.clamp(u, 1.0).powf(g) - u.powf(g)) / (1.0 - u.powf(g)));
    assert!(r.p_value > 0.01, "{r:?}");
}

#[test]
fn older_and_younger_counts_are_uncorrelated() {
    let p = params(1.0, 0.5, Profile::indicator(0.5).unwrap());
    let s = inverse(&p, 0.99);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let u = 0.3;
    let n = 100_000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let o = s.sample_older(u, &mut rng).unwrap().len() as f64;
            let y = s.sample_younger(u, 1.0, &mut rng).unwrap().len() as f64;
            (o, y)
        })
        .collect();
    let mo = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let prods: Vec<f64> = pairs.iter().map(|(o, y)| (o - mo) * (y - my)).collect();
    let cov = prods.iter().sum::<f64>() / n as f64;
    let var = prods.iter().map(|x| (x - cov) * (x - cov)).sum::<f64>() / (n - 1) as f64;
    assert!(cov.abs() < 3.0 * (var / n as f64).sqrt(), "cov {cov}");
}

#[test]
fn outdegree_does_not_depend_on_root_age() {
    let p = params(0.7, 0.3, Profile::polynomial(2.0).unwrap());
    let s = inverse(&p, 0.99);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut table = vec![vec![0u64; 8]; 10];
    for _ in 0..30_000 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let k = s.sample_older(u, &mut rng).unwrap().len().min(7);
        let decile = ((u * 10.0) as usize).min(9);
        table[decile][k] += 1;
    }
    assert!(chi_square_homogeneity(&table).p_value > 1e-3);
}

#[test]
fn younger_counts_mix_to_indegree_law() {
    let p = params(1.0, 0.5, Profile::indicator(0.5).unwrap());
    let laws = LimitLaws::new(&p).unwrap();
    let s = inverse(&p, 0.999);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 100_000;
    let mut hist = vec![0.0; 31];
    for _ in 0..n {
        let u = 1.0 - rng.random::<f64>();
        let k = s.sample_younger(u, 1.0, &mut rng).unwrap().len();
        if k <= 30 {
            hist[k] += 1.0 / n as f64;
        }
    }
    let mu = laws.indegree_table(30).unwrap();
    assert!(total_variation(&hist, &mu) < 0.02);
}

#[test]
fn stratified_and_rejection_agree() {
    let p = params(1.0, 0.4, Profile::indicator(1.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let draws = |kind, rng: &mut ChaCha8Rng| {
        let s = PalmSampler::new(&p, 0.99, kind).unwrap();
        let mut radii = Vec::new();
        let mut ages = Vec::new();
        while radii.len() < 4000 {
            for y in s.sample_older(0.5, rng).unwrap().into_iter().chain(s.sample_younger(0.5, 1.0, rng).unwrap()) {
                radii.push(y.norm());
                ages.push(y.age);
            }
        }
        (radii, ages)
    };
    let (r1, a1) = draws(SamplerKind::Rejection, &mut rng);
    let (r2, a2) = draws(SamplerKind::Stratified { strata: 32 }, &mut rng);
    assert!(ks_two_sample(&r1, &r2).p_value > 0.01);
    assert!(ks_two_sample(&a1, &a2).p_value > 0.01);
    let (r3, a3) = draws(SamplerKind::InverseTransform, &mut rng);
    assert!(ks_two_sample(&r1, &r3).p_value > 0.01);
    assert!(ks_two_sample(&a1, &a3).p_value > 0.01);
}

/// `P(|X1 - X2| <= c)` for independent uniforms on `[-r1, r1]` and `[-r2, r2]`.
fn uniform_gap_probability(r1: f64, r2: f64, c: f64) -> f64 {
    let (a, b) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    let c = c.min(a + b);
    let half = if c <= b - a {
        2.0 * a * c
    } else {
        2.0 * a * (b - a) + ((2.0 * a).powi(2) - (a + b - c).powi(2)) / 2.0
    };
    2.0 * half / (4.0 * a * b)
}

/// Local clustering of the root at age `u` for d = 1 and an indicator
/// profile, from the neighbour density `h 1{|x| <= ρ(s)}` and the pair
/// connection probability `h P(|X1 - X2| <= ρ(s1, s2))`.
fn indicator_clustering(beta: f64, gamma: f64, a: f64, u: f64) -> f64 {
    let h = 0.5 / a;
    let reach = |s1: f64, s2: f64| {
        let (young, old) = if s1 > s2 { (s1, s2) } else { (s2, s1) };
        a * beta / (young.powf(1.0 - gamma) * old.powf(gamma))
    };
    let weight = |s: f64| 2.0 * h * reach(s, u);
    let quad = Quadrature::with_rel_tol(1e-9);
    let total = quad.integrate_breaks(weight, &[0.0, u, 1.0]).unwrap().value;
    let inner = |s1: f64| {
        let r1 = reach(s1, u);
        quad.integrate_breaks(
            |s2| weight(s2) * uniform_gap_probability(r1, reach(s2, u), reach(s1, s2)),
            &[0.0, u.min(s1), u.max(s1), 1.0],
        )
        .unwrap()
        .value
    };
    let outer = quad.integrate_breaks(|s1| weight(s1) * inner(s1), &[0.0, u, 1.0]).unwrap().value;
    h * outer / (total * total)
}

#[test]
fn uniform_gap_probability_by_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (r1, r2, c) = (0.7, 2.0, 1.1);
    let n = 200_000;
    let hits = (0..n)
        .filter(|_| {
            let x = r1 * (2.0 * rng.random::<f64>() - 1.0);
            let y = r2 * (2.0 * rng.random::<f64>() - 1.0);
            (x - y).abs() <= c
        })
        .count();
    let p = uniform_gap_probability(r1, r2, c);
    assert!((hits as f64 / n as f64 - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    assert!((uniform_gap_probability(1.0, 1.0, 2.0) - 1.0).abs() < 1e-15);
}

#[test]
fn local_clustering_matches_quadrature() {
    let (beta, gamma, a) = (0.7, 0.3, 1.0);
    let p = params(beta, gamma, Profile::indicator(a).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for u in [0.1, 0.5, 0.9] {
        let est = palm::estimate_local_clustering(u, &p, 200_000, 1.0, &mut rng).unwrap();
        let exact = indicator_clustering(beta, gamma, a, u);
        assert!(est.covers(exact, 3.0), "u={u}: {est:?} vs {exact}");
    }
}

#[test]
fn local_clustering_decreases_with_width() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let gamma = 0.3;
    let values: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&a| {
            let p = ModelParams::with_edge_density(1.0, gamma, Profile::indicator(a).unwrap(), Space::unit_torus(1).unwrap())
                .unwrap();
            palm::estimate_local_clustering(0.5, &p, 50_000, 0.99, &mut rng).unwrap().mean
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn pi_sampler_matches_cdf() {
    let p = params(0.7, 0.3, Profile::indicator(1.0).unwrap());
    let laws = LimitLaws::new(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let ages: Vec<f64> = (0..5000).map(|_| PalmSampler::sample_pi_age(&laws, &mut rng)).collect();
    let r = ks_one_sample(&ages, |u| laws.pi_cdf(u).unwrap());
    assert!(r.p_value > 0.01, "{r:?}");
}

#[test]
fn pair_probability_is_the_limit_kernel() {
    let p = params(1.3, 0.45, Profile::polynomial(2.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10_000 {
        let a = MarkedPoint {
            position: vec![rng.random::<f64>() * 4.0 - 2.0],
            age: 1.0 - rng.random::<f64>(),
        };
        let b = MarkedPoint {
            position: vec![rng.random::<f64>() * 4.0 - 2.0],
            age: 1.0 - rng.random::<f64>(),
        };
        let r = (a.position[0] - b.position[0]).abs();
        let expected = p.profile().value(p.limit_argument(a.age, b.age, r));
        assert_eq!(pair_connect_probability(&a, &b, &p).unwrap(), expected);
    }
    // hand evaluation: arg = 1^0.55 * 0.5^0.45 * 2 / 1.3
    let a = MarkedPoint { position: vec![0.0], age: 0.5 };
    let b = MarkedPoint { position: vec![2.0], age: 1.0 };
    let arg: f64 = 0.5f64.powf(0.45) * 2.0 / 1.3;
    assert!((pair_connect_probability(&a, &b, &p).unwrap() - arg.powi(-2)).abs() < 1e-15);
}

#[test]
fn max_outedge_monte_carlo_matches_quadrature() {
    let p = params(1.0, 1.0 / 3.0, Profile::polynomial(2.0).unwrap());
    let laws = LimitLaws::new(&p).unwrap();
    let s = inverse(&p, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let ks = [0.5, 2.0, 8.0];
    let est = s.max_outedge_tail(&ks, 1.0, 20_000, &mut rng).unwrap();
    for (e, &k) in est.iter().zip(&ks) {
        let exact = laws.max_outedge_tail(k, 1.0).unwrap();
        assert!(e.covers(exact, 3.0), "K={k}: {e:?} vs {exact}");
    }
}
