//! Lazy random walk steps and reproducible random streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

/// Step-law parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Holding probability.
    pub laziness: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { laziness: 0.5 }
    }
}

impl WalkConfig {
    pub fn lazy(laziness: f64) -> Result<Self> {
        if !(laziness > 0.0 && laziness < 1.0) {
            return Err(Error::param(format!("laziness must lie in (0, 1), got {laziness}")));
        }
        Ok(WalkConfig { laziness })
    }

    /// The non-lazy simple walk. Diagnostic only; periodic on bipartite graphs.
    pub fn simple() -> Self {
        WalkConfig { laziness: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.laziness) {
            return Err(Error::param(format!("laziness must lie in [0, 1), got {}", self.laziness)));
        }
        Ok(())
    }

    #[inline]
    fn is_half(&self) -> bool {
        self.laziness == 0.5
    }
}

/// A random stream determined by `(master_seed, stream_id)`.
///
/// Backed by ChaCha8 with the master seed as key and the stream id as the
/// ChaCha stream number, so every run of a batch owns its own stream no
/// matter which worker executes it.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn derive(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        RngStream { inner }
    }
}

/// Free-function form of [`RngStream::derive`].
pub fn derive_stream(master_seed: u64, stream_id: u64) -> RngStream {
    RngStream::derive(master_seed, stream_id)
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// One step of the walk from `v`.
///
/// With laziness exactly 1/2 a single draw over `2 deg(v)` outcomes picks
/// either a neighbor or a hold; otherwise a Bernoulli hold is drawn first.
#[inline]
pub fn step<R: Rng + ?Sized>(g: &Graph, v: Vertex, cfg: &WalkConfig, rng: &mut R) -> Vertex {
    let deg = g.degree_of(v) as u32;
    if deg == 0 {
        return v;
    }
    if cfg.is_half() {
        let r = rng.random_range(0..2 * deg);
        if r < deg {
            g.neighbor(v, r as usize)
        } else {
            v
        }
    } else {
        if cfg.laziness > 0.0 && rng.random::<f64>() < cfg.laziness {
            return v;
        }
        g.neighbor(v, rng.random_range(0..deg) as usize)
    }
}

const UNVISITED: u64 = u64::MAX;

/// First-visit times of a single walk up to a horizon.
#[derive(Debug, Clone)]
pub struct VisitSummary {
    first_visit: Vec<u64>,
    pub visited: usize,
    pub end: Vertex,
    pub steps: u64,
}

impl VisitSummary {
    pub fn first_visit(&self, v: Vertex) -> Option<u64> {
        match self.first_visit[v.index()] {
            UNVISITED => None,
            t => Some(t),
        }
    }

    /// `(vertex, first-visit time)` pairs for every visited vertex.
    pub fn visits(&self) -> impl Iterator<Item = (Vertex, u64)> + '_ {
        self.first_visit
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != UNVISITED)
            .map(|(v, &t)| (Vertex(v as u32), t))
    }

    pub fn visited_fraction(&self) -> f64 {
        self.visited as f64 / self.first_visit.len() as f64
    }
}

/// Runs a single walk for `steps` steps from `start`. Time 0 counts as a
/// visit to `start`.
pub fn run_walk<R: Rng + ?Sized>(g: &Graph, start: Vertex, steps: u64, cfg: &WalkConfig, rng: &mut R) -> Result<VisitSummary> {
    g.check_vertex(start)?;
    cfg.validate()?;
    let mut first_visit = vec![UNVISITED; g.vertex_count()];
    first_visit[start.index()] = 0;
    let mut visited = 1;
    let mut v = start;
    for t in 1..=steps {
        v = step(g, v, cfg, rng);
        let slot = &mut first_visit[v.index()];
        if *slot == UNVISITED {
            *slot = t;
            visited += 1;
        }
    }
    Ok(VisitSummary {
        first_visit,
        visited,
        end: v,
        steps,
    })
}
