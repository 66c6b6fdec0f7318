//! Neighbourhood of the root `(0, u)` in the Palm version of the
//! age-dependent random connection model.
//!
//! Older neighbours form a Poisson process with intensity
//! `φ(β^{-1} u^{1-γ} s^γ |y|^d) dy ds` on `R^d × (0, u)`, younger ones with
//! `φ(β^{-1} s^{1-γ} u^γ |y|^d) dy ds` on `R^d × (u, s0]`. Both have the form
//! `φ(k s^p |y|^d)`, which is all the samplers below use.
//!
//! Sampling happens inside a product region (ages × ball) holding a
//! fraction `q` of the side's mass; `q = 1` keeps the full space.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::gof::{Estimate, RunningStats};
use crate::kernel::{pow_d, ModelParams, Shape};
use crate::numerics::{bisect, power_integral, unit_ball_volume, Quadrature};
use crate::oracle::LimitLaws;

/// Truncation mass used when none is given.
pub const DEFAULT_Q: f64 = 0.99;

/// Number of equal-mass age strata used by [`SamplerKind::Stratified`] by default.
pub const DEFAULT_STRATA: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Older,
    Younger,
}

/// How points are drawn inside a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    /// Age by inverse CDF of the untruncated age marginal, kernel argument
    /// from `φ / Φ`, rejection only at the region's radius. Handles `q = 1`.
    InverseTransform,
    /// Uniform proposals on the region, accepted with probability `φ / φ(0)`.
    Rejection,
    /// Equal-mass age strata; a stratum is chosen uniformly and sampled by
    /// rejection within the ball reaching that stratum's support.
    Stratified { strata: usize },
}

/// A neighbour of the root: position relative to the root and age.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedPoint {
    pub position: Vec<f64>,
    pub age: f64,
}

impl MarkedPoint {
    pub fn norm(&self) -> f64 {
        self.position.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodSample {
    pub root_age: f64,
    pub older: Vec<MarkedPoint>,
    pub younger: Vec<MarkedPoint>,
    pub truncation_mass: f64,
}

impl NeighborhoodSample {
    pub fn degree(&self) -> usize {
        self.older.len() + self.younger.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootAge {
    Uniform,
    Fixed(f64),
}

/// `φ(k s^p ρ)` with `ρ = |y|^d`, for one side of one root.
#[derive(Clone, Copy, Debug, PartialEq)]
struct SideKernel {
    k: f64,
    p: f64,
}

impl SideKernel {
    fn new(params: &ModelParams, side: Side, u: f64) -> Self {
        let g = params.gamma();
        let beta = params.beta();
        match side {
            Side::Older => Self {
                k: u.powf(1.0 - g) / beta,
                p: g,
            },
            Side::Younger => Self {
                k: u.powf(g) / beta,
                p: 1.0 - g,
            },
        }
    }

    #[inline]
    fn at(&self, s: f64) -> f64 {
        self.k * s.powf(self.p)
    }
}

/// The sampling region of one side: ages in `[age_lo, age_hi]` and
/// `|y| <= radius` (possibly infinite).
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub side: Side,
    pub root_age: f64,
    pub age_lo: f64,
    pub age_hi: f64,
    pub radius: f64,
    /// Intensity mass inside the region.
    pub mass: f64,
    /// Mass of the whole side.
    pub full_mass: f64,
    kernel: SideKernel,
    strata: Vec<Stratum>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Stratum {
    lo: f64,
    hi: f64,
    radius: f64,
}

/// Mass of the side intensity over ages `[s1, s2]` and `|y|^d <= rho`:
/// `V_d ∫ ψ(k s^p ρ) / (k s^p) ds`.
fn region_mass(params: &ModelParams, kern: SideKernel, s1: f64, s2: f64, rho: f64) -> f64 {
    if s2 <= s1 || rho <= 0.0 {
        return 0.0;
    }
    let profile = params.profile();
    let v_d = unit_ball_volume(params.dimension());
    let SideKernel { k, p } = kern;
    if rho.is_infinite() {
        return v_d * profile.integral() / k * power_integral(s1, s2, p);
    }
    match profile.shape() {
        Shape::Indicator { a } => {
            let h = 0.5 / a;
            let cross = (a / (k * rho)).powf(1.0 / p);
            let flat = (s2.min(cross) - s1).max(0.0);
            let lo = s1.max(cross);
            v_d * (h * rho * flat + h * a / k * power_integral(lo, s2, p))
        }
        Shape::Polynomial { delta } => {
            let cross = (1.0 / (k * rho)).powf(1.0 / p);
            let flat = (s2.min(cross) - s1).max(0.0);
            let lo = s1.max(cross);
            let tail = if lo < s2 {
                profile.integral() / k * power_integral(lo, s2, p)
                    - rho.powf(1.0 - delta) * k.powf(-delta) / (delta - 1.0) * power_integral(lo, s2, p * delta)
            } else {
                0.0
            };
            v_d * (rho * flat + tail)
        }
        Shape::Custom(_) => {
            let mut points = vec![s1, s2];
            let cross = (profile.breakpoints()[0] / (k * rho)).powf(1.0 / p);
            if cross > s1 && cross < s2 {
                points.insert(1, cross);
            }
            let r = Quadrature::with_rel_tol(1e-10).integrate_breaks(
                |s| {
                    let c = k * s.powf(p);
                    profile.primitive(c * rho) / c
                },
                &points,
            );
            let value = match r {
                Ok(i) => i.value,
                Err(Error::Quadrature { estimate, .. }) => estimate,
                Err(_) => f64::NAN,
            };
            v_d * value
        }
    }
}

/// `|y|^d` beyond which `φ(k s^p |y|^d) = 0`, if the profile is bounded.
fn support_rho(params: &ModelParams, kern: SideKernel, s: f64) -> Option<f64> {
    params.profile().support().map(|a| a / kern.at(s))
}

fn solve_rho(params: &ModelParams, kern: SideKernel, s1: f64, s2: f64, target: f64, hint: Option<f64>) -> Result<f64> {
    let f = |rho: f64| region_mass(params, kern, s1, s2, rho) - target;
    let mut hi = hint.unwrap_or(1.0);
    let mut guard = 0;
    while f(hi) < 0.0 {
        hi *= 4.0;
        guard += 1;
        if guard > 600 {
            return Err(invalid("q", "could not bracket the truncation radius"));
        }
    }
    bisect(f, 0.0, hi, 1e-13)
}

/// Uniform point in the ball of radius `r` in `R^d`.
fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, r: f64) -> Vec<f64> {
    if d == 1 {
        return vec![r * (2.0 * rng.random::<f64>() - 1.0)];
    }
    let radius = r * rng.random::<f64>().powf(1.0 / d as f64);
    direction(rng, d).into_iter().map(|x| x * radius).collect()
}

fn direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
}

/// Sampler for root neighbourhoods with a fixed truncation mass and method.
#[derive(Clone, Debug)]
pub struct PalmSampler {
    params: ModelParams,
    q: f64,
    kind: SamplerKind,
}

impl PalmSampler {
    pub fn new(params: &ModelParams, q: f64, kind: SamplerKind) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(invalid("palm.q", format!("must lie in (0, 1], got {q}")));
        }
        if let SamplerKind::Stratified { strata } = kind {
            if strata == 0 {
                return Err(invalid("palm.strata", "need at least one stratum"));
            }
        }
        Ok(Self {
            params: params.clone(),
            q,
            kind,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    fn check_age(u: f64) -> Result<()> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(invalid("root_age", format!("must lie in (0, 1], got {u}")));
        }
        Ok(())
    }

    /// Region of mass `q` (times the side's mass) for a root at age `u`;
    /// `s0` bounds younger ages and is ignored for the older side.
    pub fn region(&self, side: Side, u: f64, s0: f64) -> Result<Region> {
        Self::check_age(u)?;
        let params = &self.params;
        let kern = SideKernel::new(params, side, u);
        let q = self.q;
        let (full_lo, full_hi) = match side {
            Side::Older => (0.0, u),
            Side::Younger => {
                if s0 < u || s0 > 1.0 {
                    return Err(invalid("s0", format!("must lie in [{u}, 1], got {s0}")));
                }
                (u, s0)
            }
        };
        let full_mass = region_mass(params, kern, full_lo, full_hi, f64::INFINITY);
        let bounded = params.profile().support().is_some();
        let (age_lo, rho) = if full_mass == 0.0 {
            (full_lo, 0.0)
        } else if q == 1.0 {
            let rho = match side {
                Side::Younger => support_rho(params, kern, u).unwrap_or(f64::INFINITY),
                Side::Older => f64::INFINITY,
            };
            (full_lo, rho)
        } else {
            match side {
                Side::Older if bounded => {
                    let s_lo = u * (1.0 - q).powf(1.0 / (1.0 - params.gamma()));
                    (s_lo, support_rho(params, kern, s_lo).unwrap())
                }
                Side::Older => {
                    let s_lo = u * (1.0 - q.sqrt()).powf(1.0 / (1.0 - params.gamma()));
                    let rho = solve_rho(params, kern, s_lo, u, q * full_mass, None)?;
                    (s_lo, rho)
                }
                Side::Younger => {
                    let cap = support_rho(params, kern, u);
                    let rho = solve_rho(params, kern, u, s0, q * full_mass, cap)?;
                    (u, rho)
                }
            }
        };
        let mass = region_mass(params, kern, age_lo, full_hi, rho);
        let radius = if rho.is_infinite() {
            f64::INFINITY
        } else {
            rho.powf(1.0 / params.dimension() as f64)
        };
        let mut region = Region {
            side,
            root_age: u,
            age_lo,
            age_hi: full_hi,
            radius,
            mass,
            full_mass,
            kernel: kern,
            strata: Vec::new(),
        };
        match self.kind {
            SamplerKind::InverseTransform => {}
            SamplerKind::Rejection | SamplerKind::Stratified { .. } if mass > 0.0 && radius.is_infinite() => {
                return Err(invalid(
                    "palm.sampler",
                    "the region is unbounded; use q < 1 or the inverse-transform sampler",
                ));
            }
            SamplerKind::Rejection => {}
            SamplerKind::Stratified { strata } => {
                if mass > 0.0 {
                    region.strata = self.strata(&region, strata)?;
                }
            }
        }
        Ok(region)
    }

    fn strata(&self, region: &Region, count: usize) -> Result<Vec<Stratum>> {
        let params = &self.params;
        let kern = region.kernel;
        let rho = pow_d(region.radius, params.dimension());
        let mut bounds = Vec::with_capacity(count + 1);
        bounds.push(region.age_lo);
        for j in 1..count {
            let target = region.mass * j as f64 / count as f64;
            let lo = *bounds.last().unwrap();
            let s = bisect(
                |s| region_mass(params, kern, region.age_lo, s, rho) - target,
                lo,
                region.age_hi,
                1e-10,
            )?;
            bounds.push(s);
        }
        bounds.push(region.age_hi);
        Ok(bounds
            .windows(2)
            .map(|w| {
                let reach = support_rho(params, kern, w[0])
                    .map(|r| r.powf(1.0 / params.dimension() as f64))
                    .unwrap_or(f64::INFINITY);
                Stratum {
                    lo: w[0],
                    hi: w[1],
                    radius: reach.min(region.radius),
                }
            })
            .collect())
    }

    fn age_ok(region: &Region, s: f64) -> bool {
        match region.side {
            Side::Older => s > 0.0 && s < region.root_age,
            Side::Younger => s > region.root_age && s <= region.age_hi,
        }
    }

    /// One point from the side intensity restricted to `region`.
    pub fn sample_point<R: Rng + ?Sized>(&self, region: &Region, rng: &mut R) -> MarkedPoint {
        let d = self.params.dimension();
        let profile = self.params.profile();
        let kern = region.kernel;
        let rho_max = pow_d(region.radius, d);
        let top = profile.at_zero();
        match self.kind {
            SamplerKind::InverseTransform => {
                let e = 1.0 - kern.p;
                let lo = region.age_lo.powf(e);
                let span = region.age_hi.powf(e) - lo;
                loop {
                    let s = (lo + span * rng.random::<f64>()).powf(1.0 / e);
                    if !Self::age_ok(region, s) {
                        continue;
                    }
                    let w = profile.sample_argument(rng);
                    let rho = w / kern.at(s);
                    if rho > rho_max {
                        continue;
                    }
                    let r = rho.powf(1.0 / d as f64);
                    let position = direction(rng, d).into_iter().map(|x| x * r).collect();
                    return MarkedPoint { position, age: s };
                }
            }
            SamplerKind::Rejection => loop {
                let s = region.age_lo + (region.age_hi - region.age_lo) * rng.random::<f64>();
                if !Self::age_ok(region, s) {
                    continue;
                }
                let position = uniform_in_ball(rng, d, region.radius);
                if let Some(p) = self.accept(kern, s, position, top, rng) {
                    return p;
                }
            },
            SamplerKind::Stratified { .. } => loop {
                let j = rng.random_range(0..region.strata.len());
                let st = region.strata[j];
                let s = st.lo + (st.hi - st.lo) * rng.random::<f64>();
                if !Self::age_ok(region, s) {
                    continue;
                }
                let position = uniform_in_ball(rng, d, st.radius);
                if let Some(p) = self.accept(kern, s, position, top, rng) {
                    return p;
                }
            },
        }
    }

    fn accept<R: Rng + ?Sized>(
        &self,
        kern: SideKernel,
        s: f64,
        position: Vec<f64>,
        top: f64,
        rng: &mut R,
    ) -> Option<MarkedPoint> {
        let d = self.params.dimension();
        let r = position.iter().map(|x| x * x).sum::<f64>().sqrt();
        let phi = self.params.profile().value(kern.at(s) * pow_d(r, d));
        (rng.random::<f64>() * top < phi).then_some(MarkedPoint { position, age: s })
    }

    /// A Poisson number of points from `region`.
    pub fn sample_region<R: Rng + ?Sized>(&self, region: &Region, rng: &mut R) -> Vec<MarkedPoint> {
        let n = poisson_count(rng, region.mass);
        (0..n).map(|_| self.sample_point(region, rng)).collect()
    }

    /// Older neighbours of the root `(0, u)`.
    pub fn sample_older<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<Vec<MarkedPoint>> {
        let region = self.region(Side::Older, u, u)?;
        Ok(self.sample_region(&region, rng))
    }

    /// Younger neighbours of the root `(0, u)` with ages in `(u, s0]`.
    pub fn sample_younger<R: Rng + ?Sized>(&self, u: f64, s0: f64, rng: &mut R) -> Result<Vec<MarkedPoint>> {
        let region = self.region(Side::Younger, u, s0)?;
        Ok(self.sample_region(&region, rng))
    }

    pub fn sample_root_age<R: Rng + ?Sized>(root: RootAge, rng: &mut R) -> Result<f64> {
        match root {
            RootAge::Uniform => Ok(1.0 - rng.random::<f64>()),
            RootAge::Fixed(u) => {
                Self::check_age(u)?;
                Ok(u)
            }
        }
    }

    pub fn sample_neighborhood<R: Rng + ?Sized>(&self, root: RootAge, rng: &mut R) -> Result<NeighborhoodSample> {
        let u = Self::sample_root_age(root, rng)?;
        let older = self.sample_older(u, rng)?;
        let younger = self.sample_younger(u, 1.0, rng)?;
        Ok(NeighborhoodSample {
            root_age: u,
            older,
            younger,
            truncation_mass: self.q,
        })
    }

    /// Estimates the local clustering of a root at age `u` by averaging the
    /// connection probability of `n_pairs` independent neighbour pairs.
    pub fn local_clustering<R: Rng + ?Sized>(&self, u: f64, n_pairs: usize, rng: &mut R) -> Result<Estimate> {
        if n_pairs == 0 {
            return Err(invalid("n_pairs", "must be at least 1"));
        }
        let older = self.region(Side::Older, u, u)?;
        let younger = self.region(Side::Younger, u, 1.0)?;
        let total = older.mass + younger.mass;
        let mut stats = RunningStats::new();
        if total == 0.0 {
            stats.push(0.0);
            return Ok(stats.estimate());
        }
        let draw = |rng: &mut R| {
            if rng.random::<f64>() * total < older.mass {
                self.sample_point(&older, rng)
            } else {
                self.sample_point(&younger, rng)
            }
        };
        for _ in 0..n_pairs {
            let a = draw(rng);
            let b = draw(rng);
            stats.push(pair_probability_unchecked(&a, &b, &self.params));
        }
        Ok(stats.estimate())
    }

    /// Draws a root age from `π`, the age law of vertices with at least two
    /// neighbours, by rejection against the uniform law.
    pub fn sample_pi_age<R: Rng + ?Sized>(laws: &LimitLaws, rng: &mut R) -> f64 {
        loop {
            let u = 1.0 - rng.random::<f64>();
            if rng.random::<f64>() < laws.pi_weight(u) {
                return u;
            }
        }
    }

    /// Average clustering: local estimates at `n_roots` ages drawn from `π`.
    /// The standard error is taken across roots.
    pub fn average_clustering<R: Rng + ?Sized>(
        &self,
        n_roots: usize,
        n_pairs: usize,
        rng: &mut R,
    ) -> Result<Estimate> {
        if n_roots == 0 {
            return Err(invalid("n_roots", "must be at least 1"));
        }
        let laws = LimitLaws::new(&self.params)?;
        let mut stats = RunningStats::new();
        for _ in 0..n_roots {
            let u = Self::sample_pi_age(&laws, rng);
            stats.push(self.local_clustering(u, n_pairs, rng)?.mean);
        }
        Ok(stats.estimate())
    }

    /// Fraction of roots (uniform age) whose longest out-edge is at least
    /// `K^{1/a}`, for each `K`.
    pub fn max_outedge_tail<R: Rng + ?Sized>(
        &self,
        ks: &[f64],
        a: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Estimate>> {
        let mut stats = vec![RunningStats::new(); ks.len()];
        for _ in 0..n {
            let u = Self::sample_root_age(RootAge::Uniform, rng)?;
            let longest = self
                .sample_older(u, rng)?
                .iter()
                .map(MarkedPoint::norm)
                .fold(0.0, f64::max);
            for (s, &k) in stats.iter_mut().zip(ks) {
                s.push(if longest > 0.0 && longest.powf(a) >= k { 1.0 } else { 0.0 });
            }
        }
        Ok(stats.iter().map(RunningStats::estimate).collect())
    }

    /// Monte-Carlo limit of the edge-length moment
    /// `(1/|E|) Σ_x (Σ_{y~x} L^a)^b`, namely `(1-γ)/(β I_φ) E[(Σ_y |y|^a)^b]`
    /// over the root's neighbours.
    pub fn edge_length_moment<R: Rng + ?Sized>(&self, a: f64, b: f64, n: usize, rng: &mut R) -> Result<Estimate> {
        let scale = 1.0 / self.params.out_mean();
        let mut stats = RunningStats::new();
        for _ in 0..n {
            let sample = self.sample_neighborhood(RootAge::Uniform, rng)?;
            let inner: f64 = sample
                .older
                .iter()
                .chain(&sample.younger)
                .map(|p| p.norm().powf(a))
                .sum();
            stats.push(scale * inner.powf(b));
        }
        Ok(stats.estimate())
    }
}

fn pair_probability_unchecked(a: &MarkedPoint, b: &MarkedPoint, params: &ModelParams) -> f64 {
    let r = a
        .position
        .iter()
        .zip(&b.position)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    params.profile().value(params.limit_argument(a.age, b.age, r))
}

/// `φ(β^{-1} (s1∨s2)^{1-γ} (s1∧s2)^γ |x1 - x2|^d)` for two marked points.
pub fn pair_connect_probability(a: &MarkedPoint, b: &MarkedPoint, params: &ModelParams) -> Result<f64> {
    if a.age == b.age {
        return Err(Error::EqualAges(a.age));
    }
    let d = params.dimension();
    if a.position.len() != d || b.position.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if a.position.len() != d { a.position.len() } else { b.position.len() },
        });
    }
    Ok(pair_probability_unchecked(a, b, params))
}

/// Older neighbours of `(0, u)` with truncation mass `q`, inverse-transform sampler.
pub fn sample_older<R: Rng + ?Sized>(u: f64, params: &ModelParams, q: f64, rng: &mut R) -> Result<Vec<MarkedPoint>> {
    PalmSampler::new(params, q, SamplerKind::InverseTransform)?.sample_older(u, rng)
}

/// Younger neighbours of `(0, u)` with ages in `(u, s0]`.
pub fn sample_younger<R: Rng + ?Sized>(
    u: f64,
    params: &ModelParams,
    s0: f64,
    q: f64,
    rng: &mut R,
) -> Result<Vec<MarkedPoint>> {
    PalmSampler::new(params, q, SamplerKind::InverseTransform)?.sample_younger(u, s0, rng)
}

pub fn sample_neighborhood<R: Rng + ?Sized>(
    params: &ModelParams,
    q: f64,
    rng: &mut R,
    root: RootAge,
) -> Result<NeighborhoodSample> {
    PalmSampler::new(params, q, SamplerKind::InverseTransform)?.sample_neighborhood(root, rng)
}

pub fn estimate_local_clustering<R: Rng + ?Sized>(
    u: f64,
    params: &ModelParams,
    n_pairs: usize,
    q: f64,
    rng: &mut R,
) -> Result<Estimate> {
    PalmSampler::new(params, q, SamplerKind::InverseTransform)?.local_clustering(u, n_pairs, rng)
}

pub fn estimate_average_clustering<R: Rng + ?Sized>(
    params: &ModelParams,
    n_roots: usize,
    n_pairs: usize,
    q: f64,
    rng: &mut R,
) -> Result<Estimate> {
    PalmSampler::new(params, q, SamplerKind::InverseTransform)?.average_clustering(n_roots, n_pairs, rng)
}
