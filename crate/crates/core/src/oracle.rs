//! Limit laws of the local limit, evaluated in closed form or by quadrature
//! and independent of every sampler.
//!
//! Profiles need not be normalized: wherever the normalized theory uses
//! `∫ φ(|y|^d) dy = 1`, the constant `I_φ` appears instead, which is the
//! same as replacing `β` by `β I_φ`.

use crate::error::Result;
use crate::gof::poisson_pmf;
use crate::kernel::{ModelParams, Shape};
use crate::numerics::{power_integral, unit_ball_volume, Quadrature};

/// `η = min{d, d(1/γ - 1), d(δ - 1)}`, the third term dropping for
/// bounded profiles.
pub fn eta(params: &ModelParams) -> f64 {
    let d = params.dimension() as f64;
    let g = params.gamma();
    let mut e = d.min(d * (1.0 / g - 1.0));
    if let Some(delta) = params.profile().tail_exponent() {
        e = e.min(d * (delta - 1.0));
    }
    e
}

/// `P(N >= 2)` for `N ~ Poisson(m)`, accurate for small `m`.
pub fn prob_at_least_two(m: f64) -> f64 {
    if m < 1.0 {
        let mut term = m * m / 2.0;
        let mut sum: f64 = 0.0;
        let mut k = 2.0;
        while term > 1e-18 * sum.max(f64::MIN_POSITIVE) {
            sum += term;
            k += 1.0;
            term *= m / k;
        }
        (-m).exp() * sum
    } else {
        -(-m).exp_m1() - m * (-m).exp()
    }
}

/// Adds points `4^j` times the smallest positive point, up to 1, so that no
/// panel in `[0, 1]` is much wider than its distance from the origin; then
/// sorts and deduplicates.
fn refine_geometric(points: &mut Vec<f64>) {
    let mut u = points.iter().copied().filter(|&x| x > 0.0).fold(1.0, f64::min);
    while u < 0.25 {
        u *= 4.0;
        points.push(u);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
}

/// Limit laws for one parameter set.
#[derive(Clone, Debug)]
pub struct LimitLaws {
    params: ModelParams,
    quad: Quadrature,
    pi_normalizer: f64,
}

impl LimitLaws {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let mut laws = Self {
            params: params.clone(),
            quad: Quadrature {
                rel_tol: 1e-12,
                abs_tol: 1e-300,
                max_intervals: 20_000,
            },
            pi_normalizer: 1.0,
        };
        laws.pi_normalizer = laws.quad.integrate(|u| laws.pi_weight(u), 0.0, 1.0)?.value;
        Ok(laws)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn beta_i(&self) -> f64 {
        self.params.beta() * self.params.normalization()
    }

    fn gamma(&self) -> f64 {
        self.params.gamma()
    }

    /// Mean outdegree `β I_φ / (1 - γ)`.
    pub fn out_mean(&self) -> f64 {
        self.params.out_mean()
    }

    pub fn outdegree_pmf(&self, k: usize) -> f64 {
        poisson_pmf(k, self.out_mean())
    }

    /// Mean number of younger neighbours with ages in `(u, s0]`:
    /// `β I_φ (s0^γ u^{-γ} - 1) / γ`.
    pub fn younger_mean(&self, u: f64, s0: f64) -> f64 {
        if s0 <= u {
            return 0.0;
        }
        let g = self.gamma();
        self.beta_i() * ((s0 / u).powf(g) - 1.0) / g
    }

    /// Mixing density `f(λ) = (βI)^{1/γ} (γλ + βI)^{-(1+1/γ)}` of the
    /// indegree law.
    pub fn mixing_density(&self, lambda: f64) -> f64 {
        if lambda < 0.0 {
            return 0.0;
        }
        let b = self.beta_i();
        let g = self.gamma();
        (1.0 + g * lambda / b).powf(-(1.0 + 1.0 / g)) / b
    }

    /// `u` at which the younger-side mean equals `m`.
    fn age_for_mean(&self, m: f64) -> f64 {
        let g = self.gamma();
        (1.0 + g * m / self.beta_i()).powf(-1.0 / g)
    }

    fn mean_breaks(k: usize) -> Vec<f64> {
        let kf = k as f64;
        let sd = kf.sqrt().max(1.0);
        let mut m: Vec<f64> = [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|c| kf + c * sd)
            .filter(|&x| x > 0.0)
            .collect();
        m.dedup();
        m
    }

    /// Indegree law `μ(k) = ∫_0^1 Pois(k; βI(u^{-γ} - 1)/γ) du`.
    pub fn indegree_pmf(&self, k: usize) -> Result<f64> {
        let g = self.gamma();
        let b = self.beta_i();
        let mut points: Vec<f64> = Self::mean_breaks(k)
            .into_iter()
            .map(|m| self.age_for_mean(m))
            .collect();
        points.push(0.0);
        points.push(1.0);
        refine_geometric(&mut points);
        let r = self.quad.integrate_breaks(
            |u| {
                if u <= 0.0 {
                    return 0.0;
                }
                poisson_pmf(k, b * (u.powf(-g) - 1.0) / g)
            },
            &points,
        )?;
        Ok(r.value)
    }

    /// The same law written as a mixture, `∫_0^∞ Pois(k; λ) f(λ) dλ`.
    pub fn indegree_pmf_mixed(&self, k: usize) -> Result<f64> {
        let breaks = Self::mean_breaks(k);
        let r = self
            .quad
            .integrate_to_infinity(|l| poisson_pmf(k, l) * self.mixing_density(l), 0.0, &breaks)?;
        Ok(r.value)
    }

    /// `μ(0), ..., μ(k_max)`.
    pub fn indegree_table(&self, k_max: usize) -> Result<Vec<f64>> {
        (0..=k_max).map(|k| self.indegree_pmf(k)).collect()
    }

    /// Law of the total degree of a typical vertex: the convolution of the
    /// outdegree and indegree laws, up to `k_max`.
    pub fn total_degree_table(&self, k_max: usize) -> Result<Vec<f64>> {
        let inn = self.indegree_table(k_max)?;
        Ok((0..=k_max)
            .map(|k| (0..=k).map(|j| self.outdegree_pmf(j) * inn[k - j]).sum())
            .collect())
    }

    /// Power-law exponent `τ = 1 + 1/γ` of the indegree.
    pub fn tau(&self) -> f64 {
        1.0 + 1.0 / self.gamma()
    }

    pub fn eta(&self) -> f64 {
        eta(&self.params)
    }

    /// Expected degree of the root at age `u`: `I_φ λ_u` with
    /// `λ_u = β/γ ((2γ - 1)/(1 - γ) + u^{-γ})`.
    pub fn lambda_u(&self, u: f64) -> f64 {
        let g = self.gamma();
        self.beta_i() / g * ((2.0 * g - 1.0) / (1.0 - g) + u.powf(-g))
    }

    /// Unnormalized weight `1 - e^{-λ} - λ e^{-λ}` of root ages with at
    /// least two neighbours.
    pub fn pi_weight(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        prob_at_least_two(self.lambda_u(u))
    }

    pub fn pi_normalizer(&self) -> f64 {
        self.pi_normalizer
    }

    /// Density of `π` on `(0, 1]`.
    pub fn pi_density(&self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        self.pi_weight(u) / self.pi_normalizer
    }

    pub fn pi_cdf(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(0.0);
        }
        if u >= 1.0 {
            return Ok(1.0);
        }
        Ok(self.quad.integrate(|x| self.pi_weight(x), 0.0, u)?.value / self.pi_normalizer)
    }

    fn kink(&self) -> f64 {
        self.params.profile().breakpoints()[0]
    }

    /// `∫_0^1 ∫_w^∞ φ` evaluated at `w = k v^{γ/(1-γ)}`, integrated over `v`.
    fn inner_upper(&self, k: f64) -> Result<f64> {
        let profile = self.params.profile();
        let g = self.gamma();
        let p = g / (1.0 - g);
        if k <= 0.0 {
            return Ok(profile.integral());
        }
        match profile.shape() {
            Shape::Indicator { a } => {
                let h = 0.5 / a;
                Ok(if k <= *a {
                    h * (a - k / (p + 1.0))
                } else {
                    let m = (a / k).powf(1.0 / p);
                    h * a * m * p / (p + 1.0)
                })
            }
            Shape::Polynomial { delta } => {
                let big = profile.integral();
                Ok(if k <= 1.0 {
                    big - k / (p + 1.0)
                } else {
                    let m = k.powf(-1.0 / p);
                    m * (big - 1.0 / (p + 1.0))
                        + k.powf(1.0 - delta) / (delta - 1.0) * power_integral(m, 1.0, p * (delta - 1.0))
                })
            }
            Shape::Custom(_) => {
                let v_kink = (self.kink() / k).powf(1.0 / p);
                let mut points = vec![0.0, 1.0];
                if v_kink < 1.0 {
                    points.insert(1, v_kink);
                }
                Ok(Quadrature::with_rel_tol(1e-10)
                    .integrate_breaks(|v| profile.upper_primitive(k * v.powf(p)), &points)?
                    .value)
            }
        }
    }

    /// Outer `u`-integral of `inner_upper(u R^d / β)` over `(0, 1)`.
    fn tail_integral(&self, r: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let rd = crate::kernel::pow_d(r, self.params.dimension());
        let beta = self.params.beta();
        let mut points = vec![0.0, 1.0];
        let u_kink = self.kink() * beta / rd;
        if u_kink > 0.0 && u_kink < 1.0 {
            points.push(u_kink);
        }
        refine_geometric(&mut points);
        let quad = self.quad;
        let value = quad.integrate_breaks(
            |u| match self.inner_upper(u * rd / beta) {
                Ok(x) => f(x),
                Err(_) => f64::NAN,
            },
            &points,
        )?;
        Ok(value.value)
    }

    /// `λ([r, ∞))` of the limiting rescaled edge-length law.
    pub fn edge_length_tail(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(1.0);
        }
        if r.is_infinite() {
            return Ok(0.0);
        }
        let big = self.params.profile().integral();
        self.tail_integral(r, |x| x / big)
    }

    /// `λ([a, b))` of the limiting rescaled edge-length law.
    pub fn edge_length_measure(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        Ok(self.edge_length_tail(a)? - self.edge_length_tail(b)?)
    }

    /// Mean number of older neighbours of a root at age `u` lying at
    /// distance at least `r`.
    pub fn older_mass_beyond(&self, r: f64, u: f64) -> Result<f64> {
        let g = self.gamma();
        let v_d = unit_ball_volume(self.params.dimension());
        let beta = self.params.beta();
        let rd = crate::kernel::pow_d(r, self.params.dimension());
        Ok(v_d * beta / (1.0 - g) * self.inner_upper(u * rd / beta)?)
    }

    /// `P{M^a >= K}` for the longest out-edge `M` of the root:
    /// `∫_0^1 1 - exp(-λ_{K^{1/a}, u}) du`.
    pub fn max_outedge_tail(&self, k: f64, a: f64) -> Result<f64> {
        if k <= 0.0 {
            return Ok(1.0 - (-self.out_mean()).exp());
        }
        let r = k.powf(1.0 / a);
        let g = self.gamma();
        let scale = unit_ball_volume(self.params.dimension()) * self.params.beta() / (1.0 - g);
        self.tail_integral(r, |x| -(-scale * x).exp_m1())
    }
}
