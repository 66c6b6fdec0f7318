//! Raw 2D histograms of Palm neighbourhoods over (position, age). Smoothing
//! is left to the plotting scripts.

use adrcm::{NeighborhoodSample, PalmSampler, Side};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Positions are binned over `[-extent, extent]`.
    pub extent: f64,
    pub position_bins: usize,
    pub age_bins: usize,
}

/// Counts in row-major order: `counts[age_bin * position_bins + position_bin]`.
/// Ages run over `(0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapGrid {
    pub spec: GridSpec,
    pub counts: Vec<u64>,
    /// Neighbourhoods accumulated.
    pub neighborhoods: usize,
    /// Points accumulated, inside or outside the extents.
    pub points: u64,
    /// Points beyond the position extent.
    pub outside: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum HeatmapError {
    #[error("heatmaps need one-dimensional positions, got dimension {0}")]
    Dimension(usize),
}

impl HeatmapGrid {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            counts: vec![0; spec.position_bins * spec.age_bins],
            neighborhoods: 0,
            points: 0,
            outside: 0,
        }
    }

    pub fn count(&self, position_bin: usize, age_bin: usize) -> u64 {
        self.counts[age_bin * self.spec.position_bins + position_bin]
    }

    /// Bin edges of the position axis.
    pub fn position_edges(&self) -> Vec<f64> {
        let n = self.spec.position_bins;
        (0..=n)
            .map(|i| -self.spec.extent + 2.0 * self.spec.extent * i as f64 / n as f64)
            .collect()
    }

    pub fn age_edges(&self) -> Vec<f64> {
        let n = self.spec.age_bins;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    pub fn add(&mut self, sample: &NeighborhoodSample) -> Result<(), HeatmapError> {
        self.neighborhoods += 1;
        let GridSpec {
            extent,
            position_bins: nx,
            age_bins: ns,
        } = self.spec;
        for p in sample.older.iter().chain(&sample.younger) {
            if p.position.len() != 1 {
                return Err(HeatmapError::Dimension(p.position.len()));
            }
            self.points += 1;
            let x = p.position[0];
            if x.abs() > extent {
                self.outside += 1;
                continue;
            }
            let i = (((x + extent) / (2.0 * extent)) * nx as f64) as usize;
            // ages lie in (0, 1]; bin j covers ((j)/ns, (j+1)/ns]
            let j = ((p.age * ns as f64).ceil() as usize).clamp(1, ns) - 1;
            self.counts[j * nx + i.min(nx - 1)] += 1;
        }
        Ok(())
    }
}

pub fn accumulate<'a>(
    samples: impl IntoIterator<Item = &'a NeighborhoodSample>,
    spec: GridSpec,
) -> Result<HeatmapGrid, HeatmapError> {
    let mut grid = HeatmapGrid::new(spec);
    for s in samples {
        grid.add(s)?;
    }
    Ok(grid)
}

/// Position extent holding both truncation regions of a root at age `u`.
pub fn region_extent(sampler: &PalmSampler, u: f64) -> adrcm::Result<f64> {
    let older = sampler.region(Side::Older, u, u)?;
    let younger = sampler.region(Side::Younger, u, 1.0)?;
    let mut r: f64 = 0.0;
    if older.mass > 0.0 {
        r = r.max(older.radius);
    }
    if younger.mass > 0.0 {
        r = r.max(younger.radius);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use adrcm::gof::chi_square_gof;
    use adrcm::{ModelParams, Profile, RootAge, SamplerKind, Space};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(extent: f64) -> GridSpec {
        GridSpec {
            extent,
            position_bins: 40,
            age_bins: 50,
        }
    }

    #[test]
    fn zero_samples_give_an_empty_grid() {
        let g = accumulate(std::iter::empty(), spec(1.0)).unwrap();
        assert!(g.counts.iter().all(|&c| c == 0));
        assert_eq!(g.points, 0);
    }

    #[test]
    fn counts_sum_to_points_within_region() {
        let p = ModelParams::new(5.0, 1.0 / 3.0, Profile::polynomial(2.0).unwrap(), Space::unit_torus(1).unwrap()).unwrap();
        let sampler = PalmSampler::new(&p, 0.99, SamplerKind::InverseTransform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let extent = region_extent(&sampler, 0.2).unwrap();
        let samples: Vec<_> = (0..500)
            .map(|_| sampler.sample_neighborhood(RootAge::Fixed(0.2), &mut rng).unwrap())
            .collect();
        let g = accumulate(&samples, spec(extent)).unwrap();
        assert_eq!(g.outside, 0);
        assert_eq!(g.counts.iter().sum::<u64>(), g.points);
        assert_eq!(g.points as usize, samples.iter().map(|s| s.degree()).sum::<usize>());
    }

    #[test]
    fn older_age_marginal_follows_power_law() {
        let gamma = 0.4;
        let u = 0.8;
        let p = ModelParams::new(1.0, gamma, Profile::indicator(1.0).unwrap(), Space::unit_torus(1).unwrap()).unwrap();
        let sampler = PalmSampler::new(&p, 0.99, SamplerKind::Rejection).unwrap();
        let region = sampler.region(Side::Older, u, u).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let older: Vec<NeighborhoodSample> = (0..20_000)
            .map(|_| NeighborhoodSample {
                root_age: u,
                older: sampler.sample_region(&region, &mut rng),
                younger: Vec::new(),
                truncation_mass: 0.99,
            })
            .collect();
        let g = accumulate(&older, spec(region.radius)).unwrap();
        let ns = g.spec.age_bins;
        let observed: Vec<u64> = (0..ns).map(|j| (0..g.spec.position_bins).map(|i| g.count(i, j)).sum()).collect();
        // density ∝ s^{-γ} on [age_lo, u]
        let cdf = |s: f64| {
            let s = s.clamp(region.age_lo, u);
            (s.powf(1.0 - gamma) - region.age_lo.powf(1.0 - gamma)) / (u.powf(1.0 - gamma) - region.age_lo.powf(1.0 - gamma))
        };
        let edges = g.age_edges();
        let probs: Vec<f64> = (0..ns).map(|j| cdf(edges[j + 1]) - cdf(edges[j])).collect();
        let r = chi_square_gof(&observed, &probs, 5.0);
        assert!(r.p_value > 1e-3, "{r:?}");
    }

    #[test]
    fn rejects_higher_dimensions() {
        let s = NeighborhoodSample {
            root_age: 0.5,
            older: vec![adrcm::MarkedPoint {
                position: vec![0.0, 0.1],
                age: 0.2,
            }],
            younger: Vec::new(),
            truncation_mass: 1.0,
        };
        assert!(accumulate([&s], spec(1.0)).is_err());
    }
}
