use adrcm::stats::{
    clustering_average, clustering_global, clustering_local, clustering_local_all, degree_distribution, edge_length_moment,
    edge_lengths, histogram, triangles, Bins,
};
use adrcm::{torus_distance, EdgeCoinSource, Graph, ModelParams, Profile, Space};
use proptest::prelude::*;

/// A graph on `n` vertices of the unit torus with arbitrary edges.
fn random_graph(d: usize, n: usize, raw: &[(usize, usize)], coords: &[f64]) -> Graph {
    let space = Space::unit_torus(d).unwrap();
    let params = ModelParams::new(1.0, 0.5, Profile::indicator(0.5).unwrap(), space).unwrap();
    let births: Vec<f64> = (1..=n).map(|i| i as f64 * 0.01).collect();
    let positions: Vec<f64> = coords.iter().take(n * d).map(|x| x - 0.5).collect();
    let mut edges: Vec<(usize, usize)> = raw
        .iter()
        .map(|&(a, b)| (a % n, b % n))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.max(b), a.min(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    Graph::from_edges(params, births.len() as f64 * 0.01, 0, births, positions, &edges).unwrap()
}

fn adjacency(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.len();
    let mut m = vec![vec![false; n]; n];
    for (y, o) in g.edges() {
        m[y][o] = true;
        m[o][y] = true;
    }
    m
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (1usize..=3, 3usize..=200).prop_flat_map(|(d, n)| {
        let max_edges = (n * 4).min(1500);
        (
            Just(d),
            Just(n),
            prop::collection::vec((0..n, 0..n), 0..max_edges),
            prop::collection::vec(0.0f64..1.0, n * d),
        )
            .prop_map(|(d, n, raw, coords)| random_graph(d, n, &raw, &coords))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn clustering_matches_enumeration(g in graph_strategy()) {
        let m = adjacency(&g);
        let n = g.len();
        let mut per_vertex = vec![0u64; n];
        let mut total = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if m[i][j] && m[j][k] && m[i][k] {
                        total += 1;
                        per_vertex[i] += 1;
                        per_vertex[j] += 1;
                        per_vertex[k] += 1;
                    }
                }
            }
        }
        let t = triangles(&g);
        prop_assert_eq!(t.total, total);
        prop_assert_eq!(&t.per_vertex, &per_vertex);

        let deg: Vec<u64> = (0..n).map(|v| m[v].iter().filter(|&&b| b).count() as u64).collect();
        let wedges: u64 = deg.iter().map(|&k| k * k.saturating_sub(1) / 2).sum();
        let global = if wedges == 0 { 0.0 } else { 3.0 * total as f64 / wedges as f64 };
        prop_assert_eq!(clustering_global(&g), global);

        let mut sum = 0.0;
        let mut count = 0usize;
        for v in 0..n {
            let expected = if deg[v] < 2 {
                None
            } else {
                let nbrs: Vec<usize> = (0..n).filter(|&w| m[v][w]).collect();
                let mut links = 0u64;
                for (x, &a) in nbrs.iter().enumerate() {
                    for &b in &nbrs[x + 1..] {
                        if m[a][b] {
                            links += 1;
                        }
                    }
                }
                Some(links as f64 / (deg[v] * (deg[v] - 1) / 2) as f64)
            };
            prop_assert_eq!(clustering_local(&g, v).unwrap(), expected);
            prop_assert_eq!(clustering_local_all(&g)[v], expected);
            if let Some(c) = expected {
                sum += c;
                count += 1;
            }
        }
        let average = if count == 0 { 0.0 } else { sum / count as f64 };
        prop_assert_eq!(clustering_average(&g), average);
    }

    #[test]
    fn moments_match_edge_list(g in graph_strategy(), a in 0.2f64..3.0, b in 0.0f64..2.0) {
        prop_assume!(g.edge_count() > 0);
        let scale = g.length_scale();
        let n = g.len();
        let mut nbrs = vec![Vec::new(); n];
        let mut raw = Vec::new();
        for (y, o) in g.edges() {
            nbrs[y].push(o);
            nbrs[o].push(y);
            raw.push(scale * torus_distance(g.position(y), g.position(o), g.space()).unwrap());
        }
        let mut total = 0.0;
        for (x, list) in nbrs.iter_mut().enumerate() {
            list.sort_unstable();
            let mut inner = 0.0;
            for &y in list.iter() {
                let (hi, lo) = (x.max(y), x.min(y));
                inner += (scale * torus_distance(g.position(hi), g.position(lo), g.space()).unwrap()).powf(a);
            }
            total += f64::powf(inner, b);
        }
        prop_assert_eq!(edge_length_moment(&g, a, b).unwrap(), total / g.edge_count() as f64);
        prop_assert_eq!(edge_lengths(&g), raw);
    }

    #[test]
    fn degree_distribution_counts_every_vertex(g in graph_strategy()) {
        let dist = degree_distribution(&g);
        prop_assert_eq!(dist.total(), g.len() as u64);
        prop_assert_eq!(dist.degree_sum(), 2 * g.edge_count() as u64);
    }

    #[test]
    fn torus_triangle_inequality(
        d in 1usize..=3,
        pts in prop::collection::vec(-1.5f64..1.5, 9),
        vol in 0.5f64..20.0,
    ) {
        let space = Space::torus(d, vol).unwrap();
        let mut p: Vec<Vec<f64>> = pts.chunks(3).map(|c| c[..d].to_vec()).collect();
        for x in &mut p {
            space.canonicalize(x);
        }
        let ab = torus_distance(&p[0], &p[1], &space).unwrap();
        let bc = torus_distance(&p[1], &p[2], &space).unwrap();
        let ac = torus_distance(&p[0], &p[2], &space).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn torus_distance_ignores_lattice_shifts(
        d in 1usize..=3,
        pts in prop::collection::vec(-0.49f64..0.49, 6),
        shift in prop::collection::vec(-3i32..=3, 3),
        vol in 0.5f64..20.0,
    ) {
        let space = Space::torus(d, vol).unwrap();
        let side = vol.powf(1.0 / d as f64);
        let p: Vec<f64> = pts[..d].iter().map(|x| x * side).collect();
        let q: Vec<f64> = pts[3..3 + d].iter().map(|x| x * side).collect();
        let shifted: Vec<f64> = q.iter().zip(&shift).map(|(x, &k)| x + k as f64 * side).collect();
        let base = torus_distance(&p, &q, &space).unwrap();
        let moved = torus_distance(&p, &shifted, &space).unwrap();
        prop_assert!((base - moved).abs() <= 1e-12 * side.max(1.0));
    }
}

#[test]
fn histogram_masses_sum_to_one() {
    let lengths: Vec<f64> = (1..=1000).map(|i| (i as f64).sqrt()).collect();
    let h = histogram(&lengths, &Bins::default()).unwrap();
    assert_eq!(h.masses.len(), 20);
    assert!((h.masses.iter().sum::<f64>() + h.outside - 1.0).abs() < 1e-12);
    assert_eq!(h.outside, 0.0);
}

#[test]
fn edge_coins_are_uniform() {
    let coins = EdgeCoinSource::new(2024);
    let mut values = Vec::with_capacity(1_000_000);
    for young in 1..=1000usize {
        for old in 0..1000usize {
            values.push(coins.coin_unchecked(old, young + 1000));
        }
    }
    let r = adrcm::gof::ks_one_sample(&values, |x| x.clamp(0.0, 1.0));
    assert!(r.p_value > 0.01, "{r:?}");
    assert!(values.iter().all(|&x| x > 0.0 && x < 1.0));
}
