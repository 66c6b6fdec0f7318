//! Statistics of finite graphs: degree distributions, triangles and the
//! clustering coefficients, and rescaled edge lengths.

use crate::error::{invalid, Error, Result};
use crate::growth::Graph;
use crate::oracle::eta;

/// Degree counts with the `1/t` normalization: `mass(k)` is the number of
/// vertices of degree `k` divided by the horizon, so masses sum to `|V|/t`.
/// Pooled distributions add counts and horizons.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DegreeDistribution {
    counts: Vec<u64>,
    horizon: f64,
}

impl DegreeDistribution {
    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>, horizon: f64) -> Self {
        let mut counts = Vec::new();
        for k in degrees {
            if k >= counts.len() {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
        Self { counts, horizon }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of vertices counted.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ_k k · count(k)`, an integer.
    pub fn degree_sum(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| k as u64 * c)
            .sum()
    }

    /// Largest degree with nonzero count plus one.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `count(k) / t`.
    pub fn mass(&self, k: usize) -> f64 {
        if self.horizon > 0.0 {
            self.count(k) as f64 / self.horizon
        } else {
            0.0
        }
    }

    pub fn masses(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.mass(k)).collect()
    }

    /// `count(k) / total`, renormalized to a probability.
    pub fn probability(&self, k: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.count(k) as f64 / total as f64
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.probability(k)).collect()
    }

    pub fn mean(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.degree_sum() as f64 / total as f64
        }
    }

    pub fn merge(&mut self, other: &DegreeDistribution) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.horizon += other.horizon;
    }
}

/// `ν_t`: counts of older neighbours.
pub fn outdegree_distribution(g: &Graph) -> DegreeDistribution {
    DegreeDistribution::from_degrees((0..g.len()).map(|i| g.outdegree(i)), g.horizon())
}

/// `μ_t`: counts of younger neighbours.
pub fn indegree_distribution(g: &Graph) -> DegreeDistribution {
    DegreeDistribution::from_degrees((0..g.len()).map(|i| g.indegree(i)), g.horizon())
}

pub fn degree_distribution(g: &Graph) -> DegreeDistribution {
    DegreeDistribution::from_degrees((0..g.len()).map(|i| g.degree(i)), g.horizon())
}

/// Triangle counts, in total and per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangles {
    pub total: u64,
    pub per_vertex: Vec<u64>,
}

/// Counts triangles with the forward algorithm: vertices are ranked by
/// `(degree, id)` and each triangle is found once, from its two lowest-ranked
/// corners, by intersecting sorted higher-rank neighbour lists.
pub fn triangles(g: &Graph) -> Triangles {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&v| (g.degree(v), v));
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let forward: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut up: Vec<usize> = g.neighbors(v).filter(|&w| rank[w] > rank[v]).collect();
            up.sort_unstable_by_key(|&w| rank[w]);
            up
        })
        .collect();
    let mut per_vertex = vec![0u64; n];
    let mut total = 0u64;
    for v in 0..n {
        for &w in &forward[v] {
            let (a, b) = (&forward[v], &forward[w]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                let (ra, rb) = (rank[a[i]], rank[b[j]]);
                if ra < rb {
                    i += 1;
                } else if rb < ra {
                    j += 1;
                } else {
                    let x = a[i];
                    total += 1;
                    per_vertex[v] += 1;
                    per_vertex[w] += 1;
                    per_vertex[x] += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    Triangles { total, per_vertex }
}

fn wedges_at(degree: usize) -> u64 {
    let k = degree as u64;
    k * k.saturating_sub(1) / 2
}

/// `3 · triangles / wedges`; zero when there is no wedge.
pub fn clustering_global(g: &Graph) -> f64 {
    let wedges: u64 = (0..g.len()).map(|v| wedges_at(g.degree(v))).sum();
    if wedges == 0 {
        return 0.0;
    }
    3.0 * triangles(g).total as f64 / wedges as f64
}

/// Local clustering of one vertex; `None` when its degree is below two.
pub fn clustering_local(g: &Graph, v: usize) -> Result<Option<f64>> {
    if v >= g.len() {
        return Err(Error::UnknownVertex(v));
    }
    let deg = g.degree(v);
    if deg < 2 {
        return Ok(None);
    }
    let nv: Vec<usize> = g.neighbors(v).collect();
    let mut links = 0u64;
    for &w in &nv {
        links += sorted_intersection(&nv, g.neighbors(w)) as u64;
    }
    Ok(Some((links / 2) as f64 / wedges_at(deg) as f64))
}

fn sorted_intersection(a: &[usize], b: impl Iterator<Item = usize>) -> usize {
    let mut i = 0;
    let mut count = 0;
    for x in b {
        while i < a.len() && a[i] < x {
            i += 1;
        }
        if i == a.len() {
            break;
        }
        if a[i] == x {
            count += 1;
        }
    }
    count
}

/// Local clustering of every vertex (`None` below degree two).
pub fn clustering_local_all(g: &Graph) -> Vec<Option<f64>> {
    let t = triangles(g);
    (0..g.len())
        .map(|v| {
            let deg = g.degree(v);
            (deg >= 2).then(|| t.per_vertex[v] as f64 / wedges_at(deg) as f64)
        })
        .collect()
}

/// Mean local clustering over vertices of degree at least two; zero if
/// there are none.
pub fn clustering_average(g: &Graph) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in clustering_local_all(g).into_iter().flatten() {
        sum += c;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Rescaled edge lengths `t^(1/d) d(x, y)` in edge order.
pub fn edge_lengths(g: &Graph) -> Vec<f64> {
    let scale = g.length_scale();
    g.edges().map(|(y, o)| scale * g.distance(y, o)).collect()
}

/// Bin layout for [`edge_length_distribution`].
#[derive(Clone, Debug, PartialEq)]
pub enum Bins {
    /// Geometric bins spanning the observed `[min, max]`.
    Geometric(usize),
    /// Explicit increasing boundaries; each bin is `[lo, hi)`.
    Explicit(Vec<f64>),
}

impl Default for Bins {
    fn default() -> Self {
        Bins::Geometric(20)
    }
}

/// Binned edge lengths. Masses are fractions of all edges; `outside` is the
/// fraction that fell outside explicit boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLengthHistogram {
    pub boundaries: Vec<f64>,
    pub masses: Vec<f64>,
    pub outside: f64,
    pub edges: usize,
}

pub fn edge_length_distribution(g: &Graph, bins: &Bins) -> Result<EdgeLengthHistogram> {
    histogram(&edge_lengths(g), bins)
}

pub fn histogram(lengths: &[f64], bins: &Bins) -> Result<EdgeLengthHistogram> {
    if lengths.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let (boundaries, close_last) = match bins {
        Bins::Geometric(count) => {
            if *count == 0 {
                return Err(invalid("bins", "need at least one bin"));
            }
            let max = lengths.iter().copied().fold(0.0, f64::max);
            let min = lengths
                .iter()
                .copied()
                .filter(|&x| x > 0.0)
                .fold(f64::INFINITY, f64::min);
            let min = if min.is_finite() { min } else { max };
            let mut b = Vec::with_capacity(count + 1);
            if min <= 0.0 || min == max {
                b.push(min.min(max));
                b.push(max.max(min) + f64::EPSILON);
            } else {
                let ratio = (max / min).ln();
                for i in 0..=*count {
                    b.push(min * (ratio * i as f64 / *count as f64).exp());
                }
                b[0] = min;
                b[*count] = max;
            }
            (b, true)
        }
        Bins::Explicit(b) => {
            if b.len() < 2 || b.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid("bins", "boundaries must be increasing, at least two"));
            }
            (b.clone(), false)
        }
    };
    let k = boundaries.len() - 1;
    let mut counts = vec![0usize; k];
    let mut outside = 0usize;
    let last = boundaries[k];
    for &x in lengths {
        let x = if close_last && x < boundaries[0] { boundaries[0] } else { x };
        if x < boundaries[0] || x > last || (x == last && !close_last) {
            outside += 1;
            continue;
        }
        let idx = boundaries.partition_point(|&b| b <= x).saturating_sub(1).min(k - 1);
        counts[idx] += 1;
    }
    let n = lengths.len() as f64;
    Ok(EdgeLengthHistogram {
        boundaries,
        masses: counts.iter().map(|&c| c as f64 / n).collect(),
        outside: outside as f64 / n,
        edges: lengths.len(),
    })
}

/// `(1/|E|) Σ_x (Σ_{y ~ x} L_{xy}^a)^b` with rescaled lengths `L`. Logs a
/// warning when `b >= η/a`, where the limit may not exist.
pub fn edge_length_moment(g: &Graph, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b >= 0.0) {
        return Err(invalid("moment", format!("need a > 0 and b >= 0, got a={a}, b={b}")));
    }
    if g.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let e = eta(g.params());
    if b >= e / a {
        log::warn!("edge-length moment with b={b} >= eta/a={}; the limit may be infinite", e / a);
    }
    let scale = g.length_scale();
    let mut total = 0.0;
    for x in 0..g.len() {
        let mut inner = 0.0;
        for y in g.neighbors(x) {
            inner += (scale * g.distance(y.max(x), y.min(x))).powf(a);
        }
        total += inner.powf(b);
    }
    Ok(total / g.edge_count() as f64)
}
