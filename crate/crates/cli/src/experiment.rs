//! Experiment kinds. Each one turns a validated [`Config`] into tables and a
//! JSON summary; replicates run in parallel and are collected in index
//! order, so results depend only on the configuration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use adrcm::gof::{total_variation, RunningStats};
use adrcm::stats::{
    clustering_average, clustering_global, degree_distribution, edge_length_moment, edge_lengths, histogram,
    indegree_distribution, outdegree_distribution, Bins, DegreeDistribution,
};
use adrcm::{graph_io, simulate, LimitLaws, Mode, ModelParams, PalmSampler, Profile, RootAge};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{Config, ConfigError, Kind};
use crate::heatmap::{region_extent, GridSpec, HeatmapError, HeatmapGrid};
use crate::output::{write_all, Table, VERSION};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] adrcm::Error),

    #[error(transparent)]
    Heatmap(#[from] HeatmapError),

    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RunError>;

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Additional files (name, contents), such as graph dumps.
    pub extra: Vec<(String, String)>,
    pub seeds: Vec<u64>,
    pub summary: Value,
}

/// Seed of task `index` under `base`. The splitmix finalizer is a bijection
/// of `u64`, so distinct indices never share a stream.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn run(config: &Config) -> Result<Outcome> {
    config.validate()?;
    match config.experiment.kind {
        Kind::Grow => grow(config),
        Kind::Degree => degree(config),
        Kind::EdgeLength => edge_length(config),
        Kind::Palm => palm(config),
        Kind::ClusteringSweep => clustering_sweep(config),
        Kind::Heatmap => heatmap(config),
        Kind::Oracle => oracle(config),
    }
}

/// Runs the experiment and writes its tables and `manifest.json` into `dir`.
pub fn run_to_dir(config: &Config, dir: &Path) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let outcome = run(config)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut files = write_all(dir, config, &outcome.tables, &outcome.extra)?;
    let manifest = json!({
        "version": VERSION,
        "kind": config.experiment.kind.name(),
        "config": serde_json::to_value(config).expect("configuration is JSON-compatible"),
        "seeds": outcome.seeds,
        "runtime_seconds": seconds,
        "summary": outcome.summary,
        "files": files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
    files.push(path);
    Ok(files)
}

#[derive(Clone, Copy, Debug)]
struct Replicate {
    horizon: f64,
    horizon_index: usize,
    replicate: usize,
    seed: u64,
}

fn replicates(config: &Config) -> Vec<Replicate> {
    let n = config.run.replicates;
    config
        .run
        .horizons
        .iter()
        .enumerate()
        .flat_map(|(h, &horizon)| {
            (0..n).map(move |r| Replicate {
                horizon,
                horizon_index: h,
                replicate: r,
                seed: 0,
            })
        })
        .enumerate()
        .map(|(i, mut task)| {
            task.seed = derive_seed(config.run.seed, i as u64);
            task
        })
        .collect()
}

fn graph_name(task: &Replicate) -> String {
    format!("graph_t{}_r{}.txt", task.horizon, task.replicate)
}

fn grow(config: &Config) -> Result<Outcome> {
    let params = config.params()?;
    let tasks = replicates(config);
    let rows: Vec<_> = tasks
        .par_iter()
        .map(|task| -> Result<_> {
            let g = simulate(&params, task.horizon, task.seed, Mode::CellIndex)?;
            let dump = config.run.write_graphs.then(|| graph_io::graph_to_string(&g));
            Ok((
                g.len(),
                g.edge_count(),
                clustering_global(&g),
                clustering_average(&g),
                dump,
            ))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "grow",
        &["horizon", "replicate", "seed", "vertices", "edges", "mean_degree", "global_clustering", "average_clustering"],
    );
    let mut extra = Vec::new();
    for (task, (n, e, glob, avg, dump)) in tasks.iter().zip(rows) {
        let mean = if n == 0 { 0.0 } else { 2.0 * e as f64 / n as f64 };
        table.push(&[&task.horizon, &task.replicate, &task.seed, &n, &e, &mean, &glob, &avg]);
        if let Some(text) = dump {
            extra.push((graph_name(task), text));
        }
    }
    Ok(Outcome {
        tables: vec![table],
        extra,
        seeds: tasks.iter().map(|t| t.seed).collect(),
        summary: json!({ "out_mean_limit": params.out_mean() }),
    })
}

fn pool(items: impl Iterator<Item = DegreeDistribution>) -> Option<DegreeDistribution> {
    items.fold(None, |acc, d| match acc {
        None => Some(d),
        Some(mut a) => {
            a.merge(&d);
            Some(a)
        }
    })
}

fn degree(config: &Config) -> Result<Outcome> {
    let params = config.params()?;
    let laws = LimitLaws::new(&params)?;
    let k_max = config.degree.k_max;
    let out_oracle: Vec<f64> = (0..=k_max).map(|k| laws.outdegree_pmf(k)).collect();
    let in_oracle = laws.indegree_table(k_max)?;
    let total_oracle = laws.total_degree_table(k_max)?;
    let tasks = replicates(config);
    let dists: Vec<_> = tasks
        .par_iter()
        .map(|task| -> Result<_> {
            let g = simulate(&params, task.horizon, task.seed, Mode::CellIndex)?;
            Ok((outdegree_distribution(&g), indegree_distribution(&g), degree_distribution(&g)))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "degree",
        &[
            "horizon",
            "k",
            "out_empirical",
            "in_empirical",
            "total_empirical",
            "out_oracle",
            "in_oracle",
            "total_oracle",
        ],
    );
    let mut per_horizon = Vec::new();
    for (h, &horizon) in config.run.horizons.iter().enumerate() {
        let pick = |which: usize| {
            pool(
                tasks
                    .iter()
                    .zip(&dists)
                    .filter(|(t, _)| t.horizon_index == h)
                    .map(|(_, d)| [&d.0, &d.1, &d.2][which].clone()),
            )
            .expect("at least one replicate")
        };
        let (out, inn, tot) = (pick(0), pick(1), pick(2));
        let (po, pi, pt) = (out.probabilities(), inn.probabilities(), tot.probabilities());
        let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        for k in 0..=k_max {
            table.push(&[
                &horizon,
                &k,
                &at(&po, k),
                &at(&pi, k),
                &at(&pt, k),
                &out_oracle[k],
                &in_oracle[k],
                &total_oracle[k],
            ]);
        }
        let cut = |v: &[f64]| v.iter().take(k_max + 1).copied().collect::<Vec<_>>();
        per_horizon.push(json!({
            "horizon": horizon,
            "vertices": out.total(),
            "mean_outdegree": out.mean(),
            "tv_outdegree": total_variation(&cut(&po), &out_oracle),
            "tv_indegree": total_variation(&cut(&pi), &in_oracle),
            "tv_total_degree": total_variation(&cut(&pt), &total_oracle),
        }));
    }
    Ok(Outcome {
        tables: vec![table],
        extra: Vec::new(),
        seeds: tasks.iter().map(|t| t.seed).collect(),
        summary: json!({
            "k_max": k_max,
            "out_mean_limit": laws.out_mean(),
            "tau": laws.tau(),
            "horizons": per_horizon,
        }),
    })
}

fn tail_grid(config: &Config) -> Vec<f64> {
    let e = &config.edge_length;
    let n = e.tail_points;
    (0..n)
        .map(|i| e.tail_min * (e.tail_max / e.tail_min).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn edge_length(config: &Config) -> Result<Outcome> {
    let params = config.params()?;
    let laws = LimitLaws::new(&params)?;
    let (a, b) = (config.edge_length.moment_a, config.edge_length.moment_b);
    let tasks = replicates(config);
    let results: Vec<_> = tasks
        .par_iter()
        .map(|task| -> Result<_> {
            let g = simulate(&params, task.horizon, task.seed, Mode::CellIndex)?;
            Ok((edge_lengths(&g), edge_length_moment(&g, a, b)?))
        })
        .collect::<Result<_>>()?;
    let mut hist = Table::new("edge_length", &["horizon", "bin_lo", "bin_hi", "empirical", "oracle"]);
    let mut tail = Table::new("edge_length_tail", &["horizon", "k", "empirical", "oracle"]);
    let mut moments = Table::new("edge_length_moment", &["horizon", "replicate", "seed", "a", "b", "moment"]);
    let ks = tail_grid(config);
    let oracle_tail: Vec<f64> = ks.iter().map(|&k| laws.edge_length_tail(k)).collect::<adrcm::Result<_>>()?;
    let mut per_horizon = Vec::new();
    for (h, &horizon) in config.run.horizons.iter().enumerate() {
        let mut lengths: Vec<f64> = tasks
            .iter()
            .zip(&results)
            .filter(|(t, _)| t.horizon_index == h)
            .flat_map(|(_, r)| r.0.iter().copied())
            .collect();
        let hg = histogram(&lengths, &Bins::Geometric(config.edge_length.bins))?;
        let mut worst: f64 = 0.0;
        for (i, m) in hg.masses.iter().enumerate() {
            let (lo, hi) = (hg.boundaries[i], hg.boundaries[i + 1]);
            let want = laws.edge_length_measure(lo, hi)?;
            worst = worst.max((m - want).abs());
            hist.push(&[&horizon, &lo, &hi, m, &want]);
        }
        lengths.sort_by(f64::total_cmp);
        let n = lengths.len() as f64;
        for (&k, o) in ks.iter().zip(&oracle_tail) {
            let beyond = lengths.len() - lengths.partition_point(|&x| x < k);
            tail.push(&[&horizon, &k, &(beyond as f64 / n), o]);
        }
        let mut stats = RunningStats::new();
        for (task, r) in tasks.iter().zip(&results).filter(|(t, _)| t.horizon_index == h) {
            moments.push(&[&horizon, &task.replicate, &task.seed, &a, &b, &r.1]);
            stats.push(r.1);
        }
        let est = stats.estimate();
        per_horizon.push(json!({
            "horizon": horizon,
            "edges": lengths.len(),
            "max_bin_deviation": worst,
            "moment_mean": est.mean,
            "moment_std_error": if est.std_error.is_finite() { json!(est.std_error) } else { Value::Null },
        }));
    }
    Ok(Outcome {
        tables: vec![hist, tail, moments],
        extra: Vec::new(),
        seeds: tasks.iter().map(|t| t.seed).collect(),
        summary: json!({ "eta": laws.eta(), "horizons": per_horizon }),
    })
}

fn palm(config: &Config) -> Result<Outcome> {
    let params = config.params()?;
    let sampler = PalmSampler::new(&params, config.palm.q, config.sampler_kind())?;
    let root = config.palm.root_age.map_or(RootAge::Uniform, RootAge::Fixed);
    let seeds: Vec<u64> = (0..config.run.replicates)
        .map(|r| derive_seed(config.run.seed, r as u64))
        .collect();
    let batches: Vec<_> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<_>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..config.palm.samples)
                .map(|_| Ok(sampler.sample_neighborhood(root, &mut rng)?))
                .collect()
        })
        .collect::<Result<_>>()?;
    let d = params.dimension();
    let mut columns = vec!["root_age".to_string(), "side".into(), "age".into()];
    columns.extend((1..=d).map(|i| format!("x{i}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut points = Table::new("palm_samples", &cols);
    let mut degrees = Table::new("palm_degrees", &["replicate", "sample", "root_age", "older", "younger"]);
    let (mut older, mut younger) = (RunningStats::new(), RunningStats::new());
    for (r, batch) in batches.iter().enumerate() {
        for (i, s) in batch.iter().enumerate() {
            degrees.push(&[&r, &i, &s.root_age, &s.older.len(), &s.younger.len()]);
            older.push(s.older.len() as f64);
            younger.push(s.younger.len() as f64);
            for (side, list) in [("older", &s.older), ("younger", &s.younger)] {
                for p in list {
                    let mut fields: Vec<&dyn std::fmt::Display> = vec![&s.root_age, &side, &p.age];
                    fields.extend(p.position.iter().map(|x| x as &dyn std::fmt::Display));
                    points.push(&fields);
                }
            }
        }
    }
    let laws = LimitLaws::new(&params)?;
    let q = config.palm.q;
    let younger_limit = match root {
        RootAge::Uniform => params.out_mean(),
        RootAge::Fixed(u) => laws.younger_mean(u, 1.0),
    };
    Ok(Outcome {
        tables: vec![points, degrees],
        extra: Vec::new(),
        seeds,
        summary: json!({
            "q": q,
            "mean_older": older.mean(),
            "mean_younger": younger.mean(),
            "expected_older": q * params.out_mean(),
            "expected_younger": q * younger_limit,
        }),
    })
}

#[derive(Clone, Copy, Debug)]
struct SweepPoint {
    gamma: f64,
    edge_density: f64,
    width: f64,
    q: f64,
    seed: u64,
}

fn clustering_sweep(config: &Config) -> Result<Outcome> {
    let s = &config.sweep;
    let mut points = Vec::new();
    for &gamma in &s.gammas {
        for &edge_density in &s.edge_densities {
            for &width in &s.widths {
                for &q in &s.q_values {
                    points.push(SweepPoint {
                        gamma,
                        edge_density,
                        width,
                        q,
                        seed: derive_seed(config.run.seed, points.len() as u64),
                    });
                }
            }
        }
    }
    let results: Vec<_> = points
        .par_iter()
        .map(|pt| -> Result<_> {
            let profile = Profile::indicator(pt.width)?;
            let params = config.params_with(pt.gamma, Some(pt.edge_density), profile)?;
            let sampler = PalmSampler::new(&params, pt.q, config.sampler_kind())?;
            let mut rng = ChaCha8Rng::seed_from_u64(pt.seed);
            let local = s
                .root_ages
                .iter()
                .map(|&u| sampler.local_clustering(u, config.palm.pairs, &mut rng))
                .collect::<adrcm::Result<Vec<_>>>()?;
            let average = sampler.average_clustering(config.palm.roots, config.palm.pairs, &mut rng)?;
            Ok((params.beta(), local, average))
        })
        .collect::<Result<_>>()?;
    let mut local_table = Table::new(
        "clustering_local",
        &["gamma", "edge_density", "a", "beta", "q", "u", "mean", "std_error"],
    );
    let mut avg_table = Table::new(
        "clustering_average",
        &["gamma", "edge_density", "a", "beta", "q", "mean", "std_error", "roots", "pairs"],
    );
    for (pt, (beta, local, average)) in points.iter().zip(&results) {
        for (&u, e) in s.root_ages.iter().zip(local) {
            local_table.push(&[&pt.gamma, &pt.edge_density, &pt.width, beta, &pt.q, &u, &e.mean, &e.std_error]);
        }
        avg_table.push(&[
            &pt.gamma,
            &pt.edge_density,
            &pt.width,
            beta,
            &pt.q,
            &average.mean,
            &average.std_error,
            &config.palm.roots,
            &config.palm.pairs,
        ]);
    }
    Ok(Outcome {
        tables: vec![local_table, avg_table],
        extra: Vec::new(),
        seeds: points.iter().map(|p| p.seed).collect(),
        summary: json!({ "points": points.len() }),
    })
}

fn heatmap(config: &Config) -> Result<Outcome> {
    let params = config.params()?;
    let sampler = PalmSampler::new(&params, config.palm.q, config.sampler_kind())?;
    let ages = &config.heatmap.root_ages;
    let seeds: Vec<u64> = (0..ages.len()).map(|i| derive_seed(config.run.seed, i as u64)).collect();
    let grids: Vec<(HeatmapGrid, RunningStats)> = ages
        .par_iter()
        .zip(&seeds)
        .map(|(&u, &seed)| -> Result<_> {
            let extent = match config.heatmap.extent {
                Some(e) => e,
                None => region_extent(&sampler, u)?,
            };
            if !extent.is_finite() {
                return Err(ConfigError::Field {
                    path: "heatmap.extent".into(),
                    message: "the truncation region is unbounded; set heatmap.extent or palm.q < 1".into(),
                }
                .into());
            }
            let mut grid = HeatmapGrid::new(GridSpec {
                extent,
                position_bins: config.heatmap.position_bins,
                age_bins: config.heatmap.age_bins,
            });
            let mut spread = RunningStats::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..config.palm.samples {
                let s = sampler.sample_neighborhood(RootAge::Fixed(u), &mut rng)?;
                for p in &s.younger {
                    spread.push(p.position[0].abs());
                }
                grid.add(&s)?;
            }
            Ok((grid, spread))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("heatmap", &["root_age", "x_lo", "x_hi", "s_lo", "s_hi", "count"]);
    let mut summary = Vec::new();
    for (&u, (grid, spread)) in ages.iter().zip(&grids) {
        let xs = grid.position_edges();
        let ss = grid.age_edges();
        for j in 0..grid.spec.age_bins {
            for i in 0..grid.spec.position_bins {
                table.push(&[&u, &xs[i], &xs[i + 1], &ss[j], &ss[j + 1], &grid.count(i, j)]);
            }
        }
        summary.push(json!({
            "root_age": u,
            "extent": grid.spec.extent,
            "neighborhoods": grid.neighborhoods,
            "points": grid.points,
            "outside": grid.outside,
            "mean_abs_younger_position": spread.mean(),
        }));
    }
    Ok(Outcome {
        tables: vec![table],
        extra: Vec::new(),
        seeds,
        summary: json!({ "q": config.palm.q, "roots": summary }),
    })
}

fn oracle(config: &Config) -> Result<Outcome> {
    let params: ModelParams = config.params()?;
    let laws = LimitLaws::new(&params)?;
    let k_max = config.degree.k_max;
    let inn = laws.indegree_table(k_max)?;
    let tot = laws.total_degree_table(k_max)?;
    let mut degree = Table::new("oracle_degree", &["k", "outdegree", "indegree", "total"]);
    for k in 0..=k_max {
        degree.push(&[&k, &laws.outdegree_pmf(k), &inn[k], &tot[k]]);
    }
    let a = config.edge_length.moment_a;
    let mut lengths = Table::new("oracle_edge_length", &["k", "edge_length_tail", "max_outedge_tail"]);
    for k in tail_grid(config) {
        lengths.push(&[&k, &laws.edge_length_tail(k)?, &laws.max_outedge_tail(k, a)?]);
    }
    let mut pi = Table::new("oracle_pi", &["u", "lambda_u", "pi_density"]);
    for i in 1..=200 {
        let u = i as f64 / 200.0;
        pi.push(&[&u, &laws.lambda_u(u), &laws.pi_density(u)]);
    }
    Ok(Outcome {
        tables: vec![degree, lengths, pi],
        extra: Vec::new(),
        seeds: Vec::new(),
        summary: json!({
            "normalization": params.normalization(),
            "out_mean": laws.out_mean(),
            "tau": laws.tau(),
            "eta": laws.eta(),
            "pi_normalizer": laws.pi_normalizer(),
            "max_outedge_exponent": a,
        }),
    })
}
