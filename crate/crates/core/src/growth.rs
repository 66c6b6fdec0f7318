//! The growing network `G_t`: Poisson arrivals on a torus, each newcomer
//! linking to every existing vertex independently with the age-dependent
//! connection probability.
//!
//! Two construction paths share one kernel evaluation, so for bounded
//! profiles they agree bit for bit. The reference path checks every pair.
//! The cell-index path buckets vertices into a grid with per-cell lists in
//! birth order; a cell's list is scanned only as far as the births that can
//! still reach the newcomer from the cell's nearest face.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Error, Result};
use crate::geometry::{euclidean_norm, side_length, torus_norm, Space, Vertex, Volume};
use crate::kernel::{pow_d, EdgeCoinSource, ModelParams};

/// Residual connection probability, summed over all skipped pairs of one
/// newcomer, that the cell-index path may ignore for unbounded profiles.
pub const PRUNE_MASS: f64 = 1e-12;

const POINT_STREAM: u64 = 0x5eed_0f_a11_1e55;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Reference,
    CellIndex,
}

/// Vertices in birth order (id = index) with split older/younger adjacency.
#[derive(Clone, Debug)]
pub struct Graph {
    params: ModelParams,
    horizon: f64,
    seed: u64,
    births: Vec<f64>,
    positions: Vec<f64>,
    older_offsets: Vec<usize>,
    older: Vec<usize>,
    younger_offsets: Vec<usize>,
    younger: Vec<usize>,
}

impl Graph {
    /// Builds a graph from explicit parts. `edges` holds `(younger, older)`
    /// id pairs; births must be strictly increasing and positions inside
    /// `params.space()`.
    pub fn from_edges(
        params: ModelParams,
        horizon: f64,
        seed: u64,
        births: Vec<f64>,
        positions: Vec<f64>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = births.len();
        let d = params.dimension();
        validate_points(&params, horizon, &births, &positions)?;
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(y, o) in edges {
            if y >= n {
                return Err(Error::UnknownVertex(y));
            }
            if o >= n {
                return Err(Error::UnknownVertex(o));
            }
            if o >= y {
                return Err(invalid("edges", format!("({y}, {o}) is not a (younger, older) pair")));
            }
            lists[y].push(o);
        }
        let mut older_offsets = Vec::with_capacity(n + 1);
        let mut older = Vec::with_capacity(edges.len());
        older_offsets.push(0);
        for (y, mut list) in lists.into_iter().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid("edges", format!("repeated edge at vertex {y}")));
            }
            older.extend(list);
            older_offsets.push(older.len());
        }
        debug_assert_eq!(positions.len(), n * d);
        Ok(Self::assemble(params, horizon, seed, births, positions, older_offsets, older))
    }

    fn assemble(
        params: ModelParams,
        horizon: f64,
        seed: u64,
        births: Vec<f64>,
        positions: Vec<f64>,
        older_offsets: Vec<usize>,
        older: Vec<usize>,
    ) -> Self {
        let n = births.len();
        let mut counts = vec![0usize; n + 1];
        for &o in &older {
            counts[o + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let younger_offsets = counts.clone();
        let mut fill = counts;
        let mut younger = vec![0usize; older.len()];
        for y in 0..n {
            for &o in &older[older_offsets[y]..older_offsets[y + 1]] {
                younger[fill[o]] = y;
                fill[o] += 1;
            }
        }
        Self {
            params,
            horizon,
            seed,
            births,
            positions,
            older_offsets,
            older,
            younger_offsets,
            younger,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn space(&self) -> &Space {
        self.params.space()
    }

    pub fn dimension(&self) -> usize {
        self.params.dimension()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.births.len()
    }

    pub fn is_empty(&self) -> bool {
        self.births.is_empty()
    }

    pub fn births(&self) -> &[f64] {
        &self.births
    }

    pub fn birth(&self, id: usize) -> f64 {
        self.births[id]
    }

    pub fn position(&self, id: usize) -> &[f64] {
        let d = self.dimension();
        &self.positions[id * d..(id + 1) * d]
    }

    pub fn vertex(&self, id: usize) -> Result<Vertex> {
        if id >= self.len() {
            return Err(Error::UnknownVertex(id));
        }
        Ok(Vertex {
            id,
            birth: self.births[id],
            position: self.position(id).to_vec(),
        })
    }

    /// Older neighbours (out-edges), ascending.
    pub fn older_neighbors(&self, id: usize) -> &[usize] {
        &self.older[self.older_offsets[id]..self.older_offsets[id + 1]]
    }

    /// Younger neighbours (in-edges), ascending.
    pub fn younger_neighbors(&self, id: usize) -> &[usize] {
        &self.younger[self.younger_offsets[id]..self.younger_offsets[id + 1]]
    }

    /// All neighbours in ascending order.
    pub fn neighbors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.older_neighbors(id)
            .iter()
            .chain(self.younger_neighbors(id))
            .copied()
    }

    pub fn outdegree(&self, id: usize) -> usize {
        self.older_offsets[id + 1] - self.older_offsets[id]
    }

    pub fn indegree(&self, id: usize) -> usize {
        self.younger_offsets[id + 1] - self.younger_offsets[id]
    }

    pub fn degree(&self, id: usize) -> usize {
        self.outdegree(id) + self.indegree(id)
    }

    pub fn edge_count(&self) -> usize {
        self.older.len()
    }

    /// Edges as `(younger, older)` pairs, sorted by younger then older id.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |y| self.older_neighbors(y).iter().map(move |&o| (y, o)))
    }

    /// Distance between two vertices in the graph's space.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        match self.space().side() {
            Some(side) => torus_norm(self.position(a), self.position(b), side),
            None => euclidean_norm(self.position(a), self.position(b)),
        }
    }

    /// Length factor turning distances into rescaled edge lengths:
    /// `horizon^(1/d)`.
    pub fn length_scale(&self) -> f64 {
        side_length(self.horizon, self.dimension())
    }

    /// Applies `h_t` with `t = horizon`: the torus grows to volume `t` times
    /// its current one, births shrink into `(0, 1]`, and edges are kept.
    pub fn rescale_graph(&self) -> Result<Graph> {
        let t = self.horizon;
        if let Some(&last) = self.births.last() {
            if last > t {
                return Err(Error::BirthAfterHorizon { birth: last, horizon: t });
            }
        }
        let space = self.space().scaled(t)?;
        let params = self.params.in_space(space)?;
        let factor = self.length_scale();
        let mut positions: Vec<f64> = self.positions.iter().map(|x| x * factor).collect();
        for p in positions.chunks_mut(self.dimension().max(1)) {
            space.canonicalize(p);
        }
        Ok(Graph {
            params,
            horizon: 1.0,
            seed: self.seed,
            births: self.births.iter().map(|s| s / t).collect(),
            positions,
            older_offsets: self.older_offsets.clone(),
            older: self.older.clone(),
            younger_offsets: self.younger_offsets.clone(),
            younger: self.younger.clone(),
        })
    }

    /// `h_t(θ_x G_t)`: shifts `root` to the origin, then rescales.
    pub fn palm_recenter(&self, root: usize) -> Result<RootedGraph> {
        if root >= self.len() {
            return Err(Error::UnknownVertex(root));
        }
        let d = self.dimension();
        let origin = self.position(root).to_vec();
        let mut shifted = self.clone();
        for p in shifted.positions.chunks_mut(d) {
            for (x, o) in p.iter_mut().zip(&origin) {
                *x -= o;
            }
            self.space().canonicalize(p);
        }
        for x in &mut shifted.positions[root * d..(root + 1) * d] {
            *x = 0.0;
        }
        Ok(RootedGraph {
            graph: shifted.rescale_graph()?,
            root,
        })
    }
}

/// A rescaled graph with a distinguished root at the origin.
#[derive(Clone, Debug)]
pub struct RootedGraph {
    pub graph: Graph,
    pub root: usize,
}

fn validate_points(params: &ModelParams, horizon: f64, births: &[f64], positions: &[f64]) -> Result<()> {
    let d = params.dimension();
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid("t", format!("must be positive, got {horizon}")));
    }
    if positions.len() != births.len() * d {
        return Err(Error::DimensionMismatch {
            expected: births.len() * d,
            found: positions.len(),
        });
    }
    let mut previous = 0.0;
    for &b in births {
        if !(b > previous) {
            return Err(invalid("births", "must be positive and strictly increasing"));
        }
        previous = b;
    }
    if previous > horizon {
        return Err(Error::BirthAfterHorizon {
            birth: previous,
            horizon,
        });
    }
    for p in positions.chunks(d) {
        if !params.space().contains(p) {
            return Err(invalid("positions", format!("{p:?} lies outside the space")));
        }
    }
    Ok(())
}

/// Arrival times over `(0, t]` as cumulative Exp(1) gaps and uniform
/// positions on the torus of `space`, flattened `n × d`.
pub fn sample_arrivals(space: &Space, t: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let side = space
        .side()
        .ok_or_else(|| invalid("space", "arrivals need a finite torus"))?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ POINT_STREAM);
    let d = space.dimension();
    let mut births = Vec::new();
    let mut positions = Vec::new();
    let mut clock = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        clock += gap;
        if clock > t {
            break;
        }
        births.push(clock);
        for _ in 0..d {
            positions.push(side * (0.5 - rng.random::<f64>()));
        }
    }
    Ok((births, positions))
}

/// Simulates `G_t` on the torus of `params.space()`.
pub fn simulate(params: &ModelParams, t: f64, seed: u64, mode: Mode) -> Result<Graph> {
    let (births, positions) = sample_arrivals(params.space(), t, seed)?;
    construct(params, t, seed, births, positions, mode)
}

/// Connects a given point configuration with coins keyed by `seed`. Births
/// must be strictly increasing; `params.space()` must be a finite torus.
pub fn construct(
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    births: Vec<f64>,
    positions: Vec<f64>,
    mode: Mode,
) -> Result<Graph> {
    validate_points(params, horizon, &births, &positions)?;
    let side = match params.space().volume() {
        Volume::Finite(v) => side_length(v, params.dimension()),
        Volume::Infinite => return Err(invalid("space", "construction needs a finite torus")),
    };
    let kernel = PairKernel::new(params, side, &births, &positions);
    let coins = EdgeCoinSource::new(seed);
    let (older_offsets, older) = match mode {
        Mode::Reference => connect_reference(&kernel, &coins),
        Mode::CellIndex => connect_cells(&kernel, &coins),
    };
    Ok(Graph::assemble(
        params.clone(),
        horizon,
        seed,
        births,
        positions,
        older_offsets,
        older,
    ))
}

struct PairKernel<'a> {
    params: &'a ModelParams,
    side: f64,
    d: usize,
    positions: &'a [f64],
    /// `s^γ` for each vertex.
    old_factor: Vec<f64>,
    /// `u^(1-γ) / β` for each vertex.
    young_factor: Vec<f64>,
}

impl<'a> PairKernel<'a> {
    fn new(params: &'a ModelParams, side: f64, births: &[f64], positions: &'a [f64]) -> Self {
        let g = params.gamma();
        let beta = params.beta();
        Self {
            params,
            side,
            d: params.dimension(),
            positions,
            old_factor: births.iter().map(|s| s.powf(g)).collect(),
            young_factor: births.iter().map(|u| u.powf(1.0 - g) / beta).collect(),
        }
    }

    fn len(&self) -> usize {
        self.old_factor.len()
    }

    fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    fn probability(&self, young: usize, old: usize) -> f64 {
        let r = torus_norm(self.position(young), self.position(old), self.side);
        let arg = self.young_factor[young] * self.old_factor[old] * pow_d(r, self.d);
        self.params.profile().value(arg)
    }
}

#[inline]
fn decide(kernel: &PairKernel, coins: &EdgeCoinSource, young: usize, old: usize) -> bool {
    let p = kernel.probability(young, old);
    p > 0.0 && coins.coin_unchecked(old, young) < p
}

fn connect_reference(kernel: &PairKernel, coins: &EdgeCoinSource) -> (Vec<usize>, Vec<usize>) {
    let n = kernel.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut older = Vec::new();
    offsets.push(0);
    for j in 0..n {
        for i in 0..j {
            if decide(kernel, coins, j, i) {
                older.push(i);
            }
        }
        offsets.push(older.len());
    }
    (offsets, older)
}

fn connect_cells(kernel: &PairKernel, coins: &EdgeCoinSource) -> (Vec<usize>, Vec<usize>) {
    let n = kernel.len();
    let d = kernel.d;
    let side = kernel.side;
    let mut offsets = Vec::with_capacity(n + 1);
    let mut older = Vec::new();
    offsets.push(0);
    if n == 0 {
        return (offsets, older);
    }
    let profile = kernel.params.profile();
    // largest kernel argument worth examining
    let reach = profile.support().unwrap_or_else(|| profile.threshold(PRUNE_MASS / n as f64));
    let max_per_dim = ((1u64 << 24) as f64).powf(1.0 / d as f64).floor() as usize;
    let per_dim = ((n as f64 / 2.0).powf(1.0 / d as f64).floor() as usize).clamp(1, max_per_dim);
    let width = side / per_dim as f64;
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); per_dim.pow(d as u32)];
    let cell_coord = |x: f64| (((x + 0.5 * side) / width).floor() as usize).min(per_dim - 1);

    let oldest_factor = kernel.old_factor[0];
    let mut home = vec![0usize; d];
    let mut offset = vec![0isize; d];
    let mut found = Vec::new();
    for j in 0..n {
        let pos = kernel.position(j);
        for (h, &x) in home.iter_mut().zip(pos) {
            *h = cell_coord(x);
        }
        let a_j = kernel.young_factor[j];
        // r^d bound against the oldest vertex
        let max_rd = reach / (a_j * oldest_factor);
        let max_r = max_rd.powf(1.0 / d as f64);
        let reach_cells = if max_r.is_finite() {
            ((max_r / width).floor() as usize).saturating_add(1)
        } else {
            usize::MAX
        };
        let (lo, hi) = if reach_cells.saturating_mul(2).saturating_add(1) >= per_dim {
            let lo = -(((per_dim - 1) / 2) as isize);
            (lo, lo + per_dim as isize - 1)
        } else {
            (-(reach_cells as isize), reach_cells as isize)
        };
        found.clear();
        offset.iter_mut().for_each(|o| *o = lo);
        'cells: loop {
            let mut index = 0;
            let mut gap2 = 0.0;
            for k in 0..d {
                let o = offset[k];
                let c = (home[k] as isize + o).rem_euclid(per_dim as isize) as usize;
                index = index * per_dim + c;
                let steps = (o.unsigned_abs()).min(per_dim - o.unsigned_abs());
                let g = steps.saturating_sub(1) as f64 * width;
                gap2 += g * g;
            }
            let list = &cells[index];
            if let Some(&first) = list.first() {
                let gap_d = pow_d(gap2.sqrt(), d) * (1.0 - 1e-12);
                let bound = if gap_d > 0.0 {
                    reach / (a_j * gap_d) * (1.0 + 1e-9)
                } else {
                    f64::INFINITY
                };
                if kernel.old_factor[first] <= bound {
                    for &i in list {
                        if kernel.old_factor[i] > bound {
                            break;
                        }
                        if decide(kernel, coins, j, i) {
                            found.push(i);
                        }
                    }
                }
            }
            for k in (0..d).rev() {
                if offset[k] < hi {
                    offset[k] += 1;
                    continue 'cells;
                }
                offset[k] = lo;
            }
            break;
        }
        found.sort_unstable();
        older.extend_from_slice(&found);
        offsets.push(older.len());
        let mut index = 0;
        for &h in &home {
            index = index * per_dim + h;
        }
        cells[index].push(j);
    }
    (offsets, older)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Profile;

    fn params(profile: Profile, d: usize) -> ModelParams {
        ModelParams::new(1.0, 0.5, profile, Space::unit_torus(d).unwrap()).unwrap()
    }

    fn edge_list(g: &Graph) -> Vec<(usize, usize)> {
        g.edges().collect()
    }

    #[test]
    fn tiny_horizon_is_usually_empty() {
        let p = params(Profile::indicator(0.5).unwrap(), 1);
        let empty = (0..200)
            .filter(|&s| simulate(&p, 1e-4, s, Mode::Reference).unwrap().is_empty())
            .count();
        assert!(empty >= 195);
    }

    #[test]
    fn reference_and_cells_agree_indicator() {
        for d in 1..=3 {
            let p = params(Profile::indicator(1.5).unwrap(), d);
            for seed in 0..3 {
                let a = simulate(&p, 600.0, seed, Mode::Reference).unwrap();
                let b = simulate(&p, 600.0, seed, Mode::CellIndex).unwrap();
                assert_eq!(edge_list(&a), edge_list(&b), "d={d} seed={seed}");
                assert!(a.edge_count() > 0);
            }
        }
    }

    #[test]
    fn reference_and_cells_agree_polynomial() {
        let p = params(Profile::polynomial(2.0).unwrap(), 1);
        let a = simulate(&p, 800.0, 5, Mode::Reference).unwrap();
        let b = simulate(&p, 800.0, 5, Mode::CellIndex).unwrap();
        assert_eq!(edge_list(&a), edge_list(&b));
    }

    #[test]
    fn adjacency_is_symmetric_and_ordered() {
        let p = params(Profile::indicator(1.0).unwrap(), 2);
        let g = simulate(&p, 500.0, 1, Mode::CellIndex).unwrap();
        for y in 0..g.len() {
            for &o in g.older_neighbors(y) {
                assert!(g.birth(o) < g.birth(y));
                assert!(g.younger_neighbors(o).contains(&y));
            }
            let all: Vec<usize> = g.neighbors(y).collect();
            assert!(all.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn rescaling_keeps_edges_and_maps_births() {
        let p = params(Profile::indicator(0.5).unwrap(), 1);
        let g = simulate(&p, 300.0, 2, Mode::CellIndex).unwrap();
        let h = g.rescale_graph().unwrap();
        assert_eq!(edge_list(&g), edge_list(&h));
        assert!(h.births().iter().all(|&b| b > 0.0 && b <= 1.0));
        assert_eq!(h.space().volume(), Volume::Finite(300.0));
    }

    #[test]
    fn recentering_puts_root_at_origin() {
        let p = params(Profile::indicator(0.5).unwrap(), 2);
        let g = simulate(&p, 200.0, 3, Mode::CellIndex).unwrap();
        let root = g.len() / 2;
        let r = g.palm_recenter(root).unwrap();
        assert_eq!(r.graph.position(root), &[0.0, 0.0]);
        assert_eq!(r.graph.degree(root), g.degree(root));
        assert!(g.palm_recenter(g.len()).is_err());
    }

    #[test]
    fn explicit_edges_are_validated() {
        let p = params(Profile::indicator(0.5).unwrap(), 1);
        let births = vec![1.0, 2.0, 3.0];
        let positions = vec![0.0, 0.1, 0.2];
        assert!(Graph::from_edges(p.clone(), 3.0, 0, births.clone(), positions.clone(), &[(1, 2)]).is_err());
        assert!(Graph::from_edges(p.clone(), 3.0, 0, births.clone(), positions.clone(), &[(2, 1), (2, 1)]).is_err());
        assert!(Graph::from_edges(p.clone(), 3.0, 0, births.clone(), positions.clone(), &[(5, 1)]).is_err());
        let g = Graph::from_edges(p, 3.0, 0, births, positions, &[(2, 1), (1, 0), (2, 0)]).unwrap();
        assert_eq!(g.older_neighbors(2), &[0, 1]);
        assert_eq!(g.younger_neighbors(0), &[1, 2]);
    }
}
