//! Simulation and limit laws for the age-based spatial preferential
//! attachment network and its local limit, the age-dependent random
//! connection model.

pub mod error;
pub mod geometry;
pub mod gof;
pub mod graph_io;
pub mod growth;
pub mod kernel;
pub mod numerics;
pub mod oracle;
pub mod palm;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{rescale, torus_distance, Space, Vertex, Volume};
pub use growth::{construct, sample_arrivals, simulate, Graph, Mode, RootedGraph};
pub use kernel::{connection_probability, EdgeCoinSource, ModelParams, Profile, Scale, Shape, Tail};
pub use oracle::{eta, LimitLaws};
pub use palm::{MarkedPoint, NeighborhoodSample, PalmSampler, RootAge, SamplerKind, Side};
