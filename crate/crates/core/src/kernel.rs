//! Profile functions, the age-dependent connection probability, and the
//! counter-based edge coins.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Space, Vertex};
use crate::numerics::{bisect, unit_ball_volume, Quadrature};

/// Tail information a custom profile must declare.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// `φ(x) = 0` for `x > bound`.
    Support(f64),
    /// `φ(x)` decays like `x^(-δ)`, `δ > 1`.
    Exponent(f64),
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Custom {
    name: String,
    f: ProfileFn,
    tail: Tail,
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Custom")
            .field("name", &self.name)
            .field("tail", &self.tail)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Shape {
    /// `φ = 1/(2a) · 1[0, a]`, `a >= 1/2`.
    Indicator { a: f64 },
    /// `φ(x) = 1 ∧ x^(-δ)`, `δ > 1`.
    Polynomial { delta: f64 },
    Custom(Custom),
}

/// A nonincreasing profile `φ: [0, ∞) → [0, 1]` together with its integral
/// `Φ = ∫_0^∞ φ`.
#[derive(Clone, Debug)]
pub struct Profile {
    shape: Shape,
    integral: f64,
}

const CUSTOM_TOL: f64 = 1e-8;

impl Profile {
    pub fn indicator(a: f64) -> Result<Self> {
        if !(a >= 0.5) || !a.is_finite() {
            return Err(invalid("profile.a", format!("indicator width must be >= 1/2, got {a}")));
        }
        Ok(Self {
            shape: Shape::Indicator { a },
            integral: 0.5,
        })
    }

    pub fn polynomial(delta: f64) -> Result<Self> {
        if !(delta > 1.0) || !delta.is_finite() {
            return Err(invalid("profile.delta", format!("exponent must exceed 1, got {delta}")));
        }
        Ok(Self {
            shape: Shape::Polynomial { delta },
            integral: delta / (delta - 1.0),
        })
    }

    /// Registers a user-supplied profile. The function is spot-checked for
    /// range and monotonicity on a grid, and `Φ` is computed by quadrature.
    pub fn custom<F>(name: impl Into<String>, f: F, tail: Tail) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let grid_end = match tail {
            Tail::Support(bound) => {
                if !(bound > 0.0) || !bound.is_finite() {
                    return Err(invalid("profile.support", format!("must be positive, got {bound}")));
                }
                bound
            }
            Tail::Exponent(delta) => {
                if !(delta > 1.0) || !delta.is_finite() {
                    return Err(invalid("profile.delta", format!("exponent must exceed 1, got {delta}")));
                }
                1e3
            }
        };
        let mut previous = f64::INFINITY;
        for i in 0..=1000 {
            let x = grid_end * i as f64 / 1000.0;
            let y = f(x);
            if !(0.0..=1.0).contains(&y) {
                return Err(invalid("profile", format!("{name}: value {y} at {x} outside [0, 1]")));
            }
            if y > previous {
                return Err(invalid("profile", format!("{name}: increases near {x}")));
            }
            previous = y;
        }
        let f: ProfileFn = Arc::new(f);
        let quad = Quadrature::with_rel_tol(CUSTOM_TOL);
        let integral = match tail {
            Tail::Support(bound) => quad.integrate(|x| f(x), 0.0, bound)?.value,
            Tail::Exponent(_) => quad.integrate_to_infinity(|x| f(x), 0.0, &[1.0])?.value,
        };
        if !(integral > 0.0) {
            return Err(invalid("profile", format!("{name}: integral is zero")));
        }
        Ok(Self {
            shape: Shape::Custom(Custom { name, f, tail }),
            integral,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `φ(x)`; errors for negative `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeArgument(x));
        }
        Ok(self.value(x))
    }

    /// `φ(x)` for `x >= 0`, unchecked.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Indicator { a } => {
                if x <= *a {
                    0.5 / a
                } else {
                    0.0
                }
            }
            Shape::Polynomial { delta } => {
                if x <= 1.0 {
                    1.0
                } else if *delta == 2.0 {
                    1.0 / (x * x)
                } else {
                    x.powf(-delta)
                }
            }
            Shape::Custom(c) => match c.tail {
                Tail::Support(bound) if x > bound => 0.0,
                _ => (c.f)(x),
            },
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.value(0.0)
    }

    /// Largest argument with `φ > 0`, if bounded.
    pub fn support(&self) -> Option<f64> {
        match &self.shape {
            Shape::Indicator { a } => Some(*a),
            Shape::Polynomial { .. } => None,
            Shape::Custom(c) => match c.tail {
                Tail::Support(bound) => Some(bound),
                Tail::Exponent(_) => None,
            },
        }
    }

    /// Tail exponent `δ`; `None` stands for `δ = ∞`.
    pub fn tail_exponent(&self) -> Option<f64> {
        match &self.shape {
            Shape::Indicator { .. } => None,
            Shape::Polynomial { delta } => Some(*delta),
            Shape::Custom(c) => match c.tail {
                Tail::Support(_) => None,
                Tail::Exponent(delta) => Some(delta),
            },
        }
    }

    /// Arguments where `φ` has a kink or jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Indicator { a } => vec![*a],
            Shape::Polynomial { .. } => vec![1.0],
            Shape::Custom(c) => match c.tail {
                Tail::Support(bound) => vec![bound],
                Tail::Exponent(_) => vec![1.0],
            },
        }
    }

    /// `Φ = ∫_0^∞ φ(w) dw`.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// `ψ(w) = ∫_0^w φ`.
    pub fn primitive(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Indicator { a } => 0.5 * w.min(*a) / a,
            Shape::Polynomial { .. } => {
                if w <= 1.0 {
                    w
                } else {
                    self.integral - self.upper_primitive(w)
                }
            }
            Shape::Custom(c) => {
                let end = match c.tail {
                    Tail::Support(bound) => w.min(bound),
                    Tail::Exponent(_) => w,
                };
                let breaks: Vec<f64> = [0.0, 1.0, end]
                    .into_iter()
                    .filter(|&b| b <= end)
                    .collect();
                quadrature_value(Quadrature::with_rel_tol(1e-10).integrate_breaks(|x| (c.f)(x), &breaks))
            }
        }
    }

    /// `∫_w^∞ φ`, accurate when it is small.
    pub fn upper_primitive(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return self.integral;
        }
        match &self.shape {
            Shape::Indicator { a } => 0.5 * (a - w).max(0.0) / a,
            Shape::Polynomial { delta } => {
                if w <= 1.0 {
                    self.integral - w
                } else {
                    w.powf(1.0 - delta) / (delta - 1.0)
                }
            }
            Shape::Custom(c) => match c.tail {
                Tail::Support(bound) => {
                    if w >= bound {
                        0.0
                    } else {
                        quadrature_value(Quadrature::with_rel_tol(1e-10).integrate(|x| (c.f)(x), w, bound))
                    }
                }
                Tail::Exponent(_) => quadrature_value(
                    Quadrature::with_rel_tol(1e-10).integrate_to_infinity(|x| (c.f)(x), w, &[1.0]),
                ),
            },
        }
    }

    /// `∫_{R^d} φ(|x|^d) dx = V_d Φ`.
    pub fn normalization_constant(&self, d: usize) -> f64 {
        unit_ball_volume(d) * self.integral
    }

    /// Smallest argument beyond which `φ <= eps`. Bounded profiles return
    /// their support bound.
    pub fn threshold(&self, eps: f64) -> f64 {
        match &self.shape {
            Shape::Indicator { a } => *a,
            Shape::Polynomial { delta } => eps.powf(-1.0 / delta).max(1.0),
            Shape::Custom(c) => match c.tail {
                Tail::Support(bound) => bound,
                Tail::Exponent(_) => {
                    let mut hi = 1.0;
                    while self.value(hi) > eps && hi < 1e300 {
                        hi *= 2.0;
                    }
                    bisect(|x| self.value(x) - eps, 0.0, hi, 1e-12).unwrap_or(hi)
                }
            },
        }
    }

    /// Draws `W` with density `φ / Φ` on `[0, ∞)`.
    pub fn sample_argument<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.shape {
            Shape::Indicator { a } => a * rng.random::<f64>(),
            Shape::Polynomial { delta } => {
                let core = (delta - 1.0) / delta;
                let v: f64 = rng.random();
                if v < core {
                    v / core
                } else {
                    let tail_u = 1.0 - rng.random::<f64>();
                    tail_u.powf(-1.0 / (delta - 1.0))
                }
            }
            Shape::Custom(_) => {
                let target = (1.0 - rng.random::<f64>()) * self.integral;
                let mut hi = self.support().unwrap_or(1.0);
                while self.primitive(hi) < target && hi < 1e300 {
                    hi *= 2.0;
                }
                bisect(|w| self.primitive(w) - target, 0.0, hi, 1e-12).unwrap_or(hi)
            }
        }
    }
}

fn quadrature_value(r: Result<crate::numerics::Integral>) -> f64 {
    match r {
        Ok(i) => i.value,
        Err(Error::Quadrature { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Indicator { a } => write!(f, "indicator(a={a})"),
            Shape::Polynomial { delta } => write!(f, "polynomial(delta={delta})"),
            Shape::Custom(c) => write!(f, "custom({})", c.name),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Parses `indicator(a=..)` or `polynomial(delta=..)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || invalid("profile", format!("cannot parse `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let kind = s[..open].trim();
        let (key, value) = s[open + 1..s.len() - 1].split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        match (kind, key.trim()) {
            ("indicator", "a") => Self::indicator(value),
            ("polynomial", "delta") => Self::polynomial(value),
            _ => Err(bad()),
        }
    }
}

/// Model parameters `β, γ`, the profile, and the space. `I_φ` is cached.
#[derive(Clone, Debug)]
pub struct ModelParams {
    beta: f64,
    gamma: f64,
    profile: Profile,
    space: Space,
    normalization: f64,
}

impl ModelParams {
    pub fn new(beta: f64, gamma: f64, profile: Profile, space: Space) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(invalid("model.beta", format!("must be positive, got {beta}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid("model.gamma", format!("must lie in (0, 1), got {gamma}")));
        }
        let normalization = profile.normalization_constant(space.dimension());
        Ok(Self {
            beta,
            gamma,
            profile,
            space,
            normalization,
        })
    }

    /// `β = c_ed (1 - γ)`, the fixed-edge-density convention.
    pub fn with_edge_density(edge_density: f64, gamma: f64, profile: Profile, space: Space) -> Result<Self> {
        if !(edge_density > 0.0) || !edge_density.is_finite() {
            return Err(invalid("model.edge_density", format!("must be positive, got {edge_density}")));
        }
        Self::new(edge_density * (1.0 - gamma), gamma, profile, space)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    /// `I_φ`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `β I_φ / (1 - γ)`: expected outdegree, also the asymptotic edge count per unit time.
    pub fn out_mean(&self) -> f64 {
        self.beta * self.normalization / (1.0 - self.gamma)
    }

    /// Copy with a different space (same dimension required by callers).
    pub fn in_space(&self, space: Space) -> Result<Self> {
        if space.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: space.dimension(),
            });
        }
        Ok(Self {
            space,
            ..self.clone()
        })
    }

    /// Limit-form kernel argument `β^{-1} (s∨u)^{1-γ} (s∧u)^γ r^d`.
    #[inline]
    pub fn limit_argument(&self, s1: f64, s2: f64, r: f64) -> f64 {
        let (young, old) = if s1 > s2 { (s1, s2) } else { (s2, s1) };
        young.powf(1.0 - self.gamma) * old.powf(self.gamma) * pow_d(r, self.dimension()) / self.beta
    }
}

#[inline]
pub(crate) fn pow_d(r: f64, d: usize) -> f64 {
    match d {
        1 => r,
        2 => r * r,
        3 => r * r * r,
        _ => r.powi(d as i32),
    }
}

/// Which form of the connection rule to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// `φ(u d^d / (β (u/s)^γ))` with `u` the younger birth time.
    Growth,
    /// `φ(β^{-1} (s∨u)^{1-γ} (s∧u)^γ |x-y|^d)`.
    Limit,
}

/// Connection probability between two vertices in `params.space()`.
pub fn connection_probability(
    younger: &Vertex,
    older: &Vertex,
    params: &ModelParams,
    scale: Scale,
) -> Result<f64> {
    let r = params.space().distance(&younger.position, &older.position)?;
    let (u, s) = (younger.birth, older.birth);
    if u == s {
        return Err(Error::EqualAges(u));
    }
    let arg = match scale {
        Scale::Growth => {
            if s > u {
                return Err(invalid(
                    "older",
                    format!("birth {s} is not before the younger birth {u}"),
                ));
            }
            u * pow_d(r, params.dimension()) / (params.beta() * (u / s).powf(params.gamma()))
        }
        Scale::Limit => params.limit_argument(u, s, r),
    };
    Ok(params.profile().value(arg))
}

/// Deterministic uniform coins `V_{x,y}` keyed by `(seed, older id, younger id)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeCoinSource {
    seed: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl EdgeCoinSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed: mix64(seed.wrapping_add(GOLDEN)),
        }
    }

    pub fn coin(&self, older: usize, younger: usize) -> Result<f64> {
        if older == younger {
            return Err(Error::EqualIds(older));
        }
        Ok(self.coin_unchecked(older, younger))
    }

    /// Coin for distinct ids, unchecked. Value lies strictly inside `(0, 1)`.
    #[inline]
    pub fn coin_unchecked(&self, older: usize, younger: usize) -> f64 {
        let h = mix64(self.seed ^ (older as u64).wrapping_mul(GOLDEN));
        let h = mix64(h.wrapping_add(younger as u64) ^ GOLDEN.rotate_left(17));
        ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Space {
        Space::unit_torus(1).unwrap()
    }

    #[test]
    fn indicator_values() {
        let p = Profile::indicator(0.5).unwrap();
        assert_eq!(p.eval(0.3).unwrap(), 1.0);
        let p = Profile::indicator(1.0).unwrap();
        assert_eq!(p.eval(1.5).unwrap(), 0.0);
        assert_eq!(p.eval(1.0).unwrap(), 0.5);
    }

    #[test]
    fn polynomial_values() {
        let p = Profile::polynomial(2.0).unwrap();
        assert_eq!(p.eval(4.0).unwrap(), 1.0 / 16.0);
        assert_eq!(p.eval(0.5).unwrap(), 1.0);
        let p = Profile::polynomial(2.5).unwrap();
        assert!((p.eval(4.0).unwrap() - 4f64.powf(-2.5)).abs() < 1e-16);
    }

    #[test]
    fn negative_argument_is_rejected() {
        let p = Profile::polynomial(2.0).unwrap();
        assert!(matches!(p.eval(-0.1), Err(Error::NegativeArgument(_))));
    }

    #[test]
    fn shape_parameters_are_validated() {
        assert!(Profile::indicator(0.49).is_err());
        assert!(Profile::polynomial(1.0).is_err());
        assert!(Profile::polynomial(0.5).is_err());
    }

    #[test]
    fn normalization_constants() {
        let p = Profile::indicator(3.0).unwrap();
        assert_eq!(p.normalization_constant(1), 1.0);
        assert!((p.normalization_constant(2) - std::f64::consts::PI / 2.0).abs() < 1e-15);
        let p = Profile::polynomial(2.0).unwrap();
        assert_eq!(p.normalization_constant(1), 4.0);
    }

    #[test]
    fn normalization_matches_radial_quadrature() {
        let q = Quadrature::with_rel_tol(1e-12);
        let p = Profile::polynomial(2.0).unwrap();
        let direct = q
            .integrate_to_infinity(|x| 2.0 * p.value(x.abs()), 0.0, &[1.0])
            .unwrap()
            .value;
        assert!((direct - 4.0).abs() < 1e-9);
        let p = Profile::polynomial(3.0).unwrap();
        let disc = q
            .integrate_to_infinity(|r| 2.0 * std::f64::consts::PI * r * p.value(r * r), 0.0, &[1.0])
            .unwrap()
            .value;
        assert!((disc - p.normalization_constant(2)).abs() < 1e-9);
    }

    #[test]
    fn custom_indicator_matches_builtin() {
        let c = Profile::custom("box", |x| if x <= 1.0 { 0.5 } else { 0.0 }, Tail::Support(1.0)).unwrap();
        assert!((c.normalization_constant(1) - 1.0).abs() < 1e-6);
        assert!((c.primitive(0.4) - 0.2).abs() < 1e-9);
    }

    #[test]
    fn custom_rejects_increasing_function() {
        assert!(Profile::custom("up", |x| (x / 10.0).min(1.0), Tail::Support(10.0)).is_err());
    }

    #[test]
    fn primitive_is_consistent_with_integral() {
        for p in [
            Profile::indicator(2.0).unwrap(),
            Profile::polynomial(1.5).unwrap(),
            Profile::polynomial(3.0).unwrap(),
        ] {
            for w in [0.0, 0.3, 1.0, 1.7, 40.0] {
                let total = p.primitive(w) + p.upper_primitive(w);
                assert!((total - p.integral()).abs() < 1e-13, "{p} {w}");
            }
        }
    }

    #[test]
    fn profile_strings_round_trip() {
        for s in ["indicator(a=1)", "indicator(a=0.5)", "polynomial(delta=2)", "polynomial(delta=2.5)"] {
            let p: Profile = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("indicator(a=0.1)".parse::<Profile>().is_err());
        assert!("gaussian(s=1)".parse::<Profile>().is_err());
        assert!("polynomial(a=2)".parse::<Profile>().is_err());
    }

    #[test]
    fn hand_evaluated_connection() {
        let params = ModelParams::new(1.0, 0.5, Profile::indicator(0.5).unwrap(), line()).unwrap();
        let young = Vertex::new(1, 1.0, vec![0.1]).unwrap();
        let old = Vertex::new(0, 0.25, vec![0.0]).unwrap();
        let arg = params.limit_argument(1.0, 0.25, 0.1);
        assert!((arg - 0.05).abs() < 1e-15);
        for scale in [Scale::Growth, Scale::Limit] {
            assert_eq!(connection_probability(&young, &old, &params, scale).unwrap(), 1.0);
        }
    }

    #[test]
    fn equal_ages_are_rejected() {
        let params = ModelParams::new(1.0, 0.5, Profile::polynomial(2.0).unwrap(), line()).unwrap();
        let a = Vertex::new(0, 0.5, vec![0.1]).unwrap();
        let b = Vertex::new(1, 0.5, vec![0.2]).unwrap();
        assert!(matches!(
            connection_probability(&a, &b, &params, Scale::Limit),
            Err(Error::EqualAges(_))
        ));
    }

    #[test]
    fn zero_distance_gives_profile_at_zero() {
        let params = ModelParams::new(0.3, 0.7, Profile::indicator(2.0).unwrap(), line()).unwrap();
        let a = Vertex::new(1, 0.9, vec![0.2]).unwrap();
        let b = Vertex::new(0, 0.1, vec![0.2]).unwrap();
        assert_eq!(connection_probability(&a, &b, &params, Scale::Growth).unwrap(), 0.25);
    }

    #[test]
    fn coins_are_deterministic_and_seeded() {
        let c = EdgeCoinSource::new(42);
        assert_eq!(c.coin(3, 9).unwrap(), c.coin(3, 9).unwrap());
        assert_ne!(c.coin(3, 9).unwrap(), EdgeCoinSource::new(43).coin(3, 9).unwrap());
        assert_ne!(c.coin(3, 9).unwrap(), c.coin(9, 3).unwrap());
        assert!(matches!(c.coin(4, 4), Err(Error::EqualIds(4))));
    }

    #[test]
    fn gamma_and_beta_are_validated() {
        let p = Profile::indicator(1.0).unwrap();
        assert!(ModelParams::new(0.0, 0.5, p.clone(), line()).is_err());
        assert!(ModelParams::new(1.0, 1.0, p.clone(), line()).is_err());
        assert!(ModelParams::new(1.0, 0.0, p.clone(), line()).is_err());
        let m = ModelParams::with_edge_density(1.0, 0.3, p, line()).unwrap();
        assert!((m.beta() - 0.7).abs() < 1e-15);
        assert!((m.out_mean() - 1.0).abs() < 1e-15);
    }
}
