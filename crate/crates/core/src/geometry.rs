//! Cubic tori, free space, and the space-time rescaling `h_t`.

use crate::error::{invalid, Error, Result};

/// Volume of a [`Space`]. `Infinite` stands for free space `R^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Volume {
    Finite(f64),
    Infinite,
}

/// A cubic torus of side `volume^(1/d)` with coordinates in the half-open
/// box `(-side/2, side/2]^d`, or Euclidean space when the volume is infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Space {
    dimension: usize,
    volume: Volume,
}

impl Space {
    pub fn torus(dimension: usize, volume: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(invalid("volume", format!("must be positive and finite, got {volume}")));
        }
        Ok(Self {
            dimension,
            volume: Volume::Finite(volume),
        })
    }

    pub fn unit_torus(dimension: usize) -> Result<Self> {
        Self::torus(dimension, 1.0)
    }

    pub fn euclidean(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        Ok(Self {
            dimension,
            volume: Volume::Infinite,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn volume(&self) -> Volume {
        self.volume
    }

    /// Side length, `None` for free space.
    pub fn side(&self) -> Option<f64> {
        match self.volume {
            Volume::Finite(v) => Some(side_length(v, self.dimension)),
            Volume::Infinite => None,
        }
    }

    /// The same kind of space with its volume multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self.volume {
            Volume::Finite(v) => Self::torus(self.dimension, v * factor),
            Volume::Infinite => Ok(*self),
        }
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: p.len(),
            });
        }
        Ok(())
    }

    /// Whether `p` lies in the fundamental domain.
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dimension || p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self.side() {
            Some(side) => p.iter().all(|&x| x > -0.5 * side && x <= 0.5 * side),
            None => true,
        }
    }

    /// Maps every coordinate into the fundamental domain in place.
    pub fn canonicalize(&self, p: &mut [f64]) {
        if let Some(side) = self.side() {
            for x in p.iter_mut() {
                *x = wrap(*x, side);
            }
        }
    }

    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(match self.side() {
            Some(side) => torus_norm(p, q, side),
            None => euclidean_norm(p, q),
        })
    }
}

pub(crate) fn side_length(volume: f64, dimension: usize) -> f64 {
    match dimension {
        1 => volume,
        2 => volume.sqrt(),
        3 => volume.cbrt(),
        _ => volume.powf(1.0 / dimension as f64),
    }
}

/// Wraps `x` into `(-side/2, side/2]`.
pub(crate) fn wrap(x: f64, side: f64) -> f64 {
    let half = 0.5 * side;
    if x > -half && x <= half {
        return x;
    }
    let y = x - side * (x / side - 0.5).ceil();
    // guard the boundary against rounding in the product above
    if y <= -half {
        y + side
    } else if y > half {
        y - side
    } else {
        y
    }
}

#[inline]
pub(crate) fn periodic_gap(dx: f64, side: f64) -> f64 {
    let r = dx.abs() % side;
    r.min(side - r)
}

#[inline]
pub(crate) fn torus_norm(p: &[f64], q: &[f64], side: f64) -> f64 {
    if p.len() == 1 {
        return periodic_gap(p[0] - q[0], side);
    }
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let g = periodic_gap(a - b, side);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn euclidean_norm(p: &[f64], q: &[f64]) -> f64 {
    if p.len() == 1 {
        return (p[0] - q[0]).abs();
    }
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Minimum-image distance on the torus, or Euclidean distance in free space.
pub fn torus_distance(p: &[f64], q: &[f64], space: &Space) -> Result<f64> {
    space.distance(p, q)
}

/// A vertex `(x, s)`: position, birth time, and an id unique within its graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub birth: f64,
    pub position: Vec<f64>,
}

impl Vertex {
    pub fn new(id: usize, birth: f64, position: Vec<f64>) -> Result<Self> {
        if !(birth > 0.0) || !birth.is_finite() {
            return Err(invalid("birth", format!("must be positive, got {birth}")));
        }
        Ok(Self {
            id,
            birth,
            position,
        })
    }
}

/// `h_t(x, s) = (t^(1/d) x, s / t)`. Returns the vertex in a space whose
/// volume is `t` times that of `space_in`.
pub fn rescale(v: &Vertex, t: f64, space_in: &Space) -> Result<(Vertex, Space)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    if v.birth > t {
        return Err(Error::BirthAfterHorizon {
            birth: v.birth,
            horizon: t,
        });
    }
    space_in.check(&v.position)?;
    let space_out = space_in.scaled(t)?;
    let factor = side_length(t, space_in.dimension());
    let mut position: Vec<f64> = v.position.iter().map(|x| x * factor).collect();
    space_out.canonicalize(&mut position);
    Ok((
        Vertex {
            id: v.id,
            birth: v.birth / t,
            position,
        },
        space_out,
    ))
}
