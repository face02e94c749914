//! Graph families with implicit adjacency.
//!
//! Vertices are integers in `[0, |V|)`. Tori use mixed-radix base-`n` digits
//! (coordinate `j` is digit `j`), hypercubes use the bit pattern, and the
//! transposition Cayley graph of `S_n` uses the Lehmer-code rank of the
//! permutation in one-line notation. Vertex 0 is always the origin: the zero
//! vector, the zero bit pattern, or the identity permutation.
//!
//! Neighbors of the built-in families are computed on demand from the
//! encoding; only explicit graphs store an adjacency list.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the vertex count of a simulation handle.
pub const DEFAULT_VERTEX_CAP: u64 = 1 << 26;

/// Largest symbol count for which `n!` fits under [`DEFAULT_VERTEX_CAP`].
const MAX_SYM_SYMBOLS: usize = 12;

/// A vertex, identified by its integer encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex(pub u32);

impl Vertex {
    pub const ORIGIN: Vertex = Vertex(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Description of a graph family instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    /// The discrete torus `Z_n^d`.
    Torus { dim: usize, side: usize },
    /// The hypercube `Z_2^n`.
    Hypercube { dim: usize },
    /// The Cayley graph of `S_n` generated by all transpositions.
    CayleySym { symbols: usize },
    /// An arbitrary undirected simple graph.
    Explicit(ExplicitGraph),
}

/// An explicit adjacency list together with a label used for provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitGraph {
    pub label: String,
    pub vertex_count: usize,
    pub edges: Vec<(u32, u32)>,
}

impl GraphSpec {
    pub fn torus(dim: usize, side: usize) -> Self {
        GraphSpec::Torus { dim, side }
    }

    pub fn hypercube(dim: usize) -> Self {
        GraphSpec::Hypercube { dim }
    }

    pub fn cayley_sym(symbols: usize) -> Self {
        GraphSpec::CayleySym { symbols }
    }

    pub fn explicit(label: impl Into<String>, vertex_count: usize, edges: Vec<(u32, u32)>) -> Self {
        GraphSpec::Explicit(ExplicitGraph {
            label: label.into(),
            vertex_count,
            edges,
        })
    }

    /// The complete graph on `n` vertices as an explicit graph.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                edges.push((u, v));
            }
        }
        Self::explicit(format!("K{n}"), n, edges)
    }

    /// Parses `torus:d=3,n=8`, `hypercube:n=12`, `sym:n=5` or
    /// `explicit:path=FILE`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidSpec(s.to_string(), msg.to_string());
        let (family, rest) = s.split_once(':').ok_or_else(|| bad("expected FAMILY:KEY=VALUE,..."))?;
        let mut params: Vec<(&str, &str)> = Vec::new();
        for item in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| bad("expected KEY=VALUE"))?;
            params.push((k.trim(), v.trim()));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let int = |key: &str| -> Result<usize> {
            get(key)
                .ok_or_else(|| bad(&format!("missing `{key}`")))?
                .parse::<usize>()
                .map_err(|_| bad(&format!("`{key}` is not a non-negative integer")))
        };
        let check_keys = |allowed: &[&str]| -> Result<()> {
            match params.iter().find(|(k, _)| !allowed.contains(k)) {
                Some((k, _)) => Err(bad(&format!("unknown key `{k}`"))),
                None => Ok(()),
            }
        };
        match family.trim() {
            "torus" => {
                check_keys(&["d", "n"])?;
                Ok(GraphSpec::torus(int("d")?, int("n")?))
            }
            "hypercube" => {
                check_keys(&["n"])?;
                Ok(GraphSpec::hypercube(int("n")?))
            }
            "sym" => {
                check_keys(&["n"])?;
                Ok(GraphSpec::cayley_sym(int("n")?))
            }
            "explicit" => {
                check_keys(&["path"])?;
                let path = get("path").ok_or_else(|| bad("missing `path`"))?;
                read_edge_list(Path::new(path))
            }
            other => Err(bad(&format!("unknown family `{other}`"))),
        }
    }

    /// Vertex count without building the graph (may exceed `usize`).
    pub fn vertex_count_hint(&self) -> u128 {
        match self {
            GraphSpec::Torus { dim, side } => (*side as u128).checked_pow(*dim as u32).unwrap_or(u128::MAX),
            GraphSpec::Hypercube { dim } => {
                if *dim >= 127 {
                    u128::MAX
                } else {
                    1u128 << dim
                }
            }
            GraphSpec::CayleySym { symbols } => (1..=*symbols as u128).try_fold(1u128, |acc, k| acc.checked_mul(k)).unwrap_or(u128::MAX),
            GraphSpec::Explicit(e) => e.vertex_count as u128,
        }
    }

    /// True for the built-in vertex-transitive families.
    pub fn is_transitive_family(&self) -> bool {
        !matches!(self, GraphSpec::Explicit(_))
    }

    /// Family tag used in cache keys and file names.
    pub fn slug(&self) -> String {
        match self {
            GraphSpec::Torus { dim, side } => format!("torus_d{dim}_n{side}"),
            GraphSpec::Hypercube { dim } => format!("hypercube_n{dim}"),
            GraphSpec::CayleySym { symbols } => format!("sym_n{symbols}"),
            GraphSpec::Explicit(e) => {
                let clean: String = e
                    .label
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                    .collect();
                format!("explicit_{clean}")
            }
        }
    }

    /// The `h_d(n)` normalization for tori: `n^4`, `n^4 log n`, `n^d`.
    pub fn torus_normalization(&self) -> Option<f64> {
        match self {
            GraphSpec::Torus { dim, side } if *dim >= 3 => {
                let n = *side as f64;
                Some(match dim {
                    3 => n.powi(4),
                    4 => n.powi(4) * n.ln(),
                    d => n.powi(*d as i32),
                })
            }
            _ => None,
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Torus { dim, side } => write!(f, "torus:d={dim},n={side}"),
            GraphSpec::Hypercube { dim } => write!(f, "hypercube:n={dim}"),
            GraphSpec::CayleySym { symbols } => write!(f, "sym:n={symbols}"),
            GraphSpec::Explicit(e) => write!(f, "explicit:path={}", e.label),
        }
    }
}

impl std::str::FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GraphSpec::parse(s)
    }
}

/// Reads an edge list: one `u v` pair per line, 0-based. Blank lines and
/// lines starting with `#` are skipped, except `# vertices N`, which fixes
/// the vertex count (needed for the single-vertex graph).
pub fn read_edge_list(path: &Path) -> Result<GraphSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    let mut declared: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("vertices") {
                declared = words.next().and_then(|w| w.parse().ok());
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |p: Option<&str>| -> Result<u32> {
            p.and_then(|w| w.parse::<u32>().ok())
                .ok_or_else(|| Error::InvalidGraph(format!("line {}: expected `u v`", lineno + 1)))
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::InvalidGraph(format!("line {}: trailing tokens", lineno + 1)));
        }
        edges.push((u, v));
    }
    let max_index = edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    let vertex_count = declared.unwrap_or(max_index).max(max_index);
    Ok(GraphSpec::explicit(path.display().to_string(), vertex_count, edges))
}

#[derive(Debug, Clone)]
enum Family {
    Torus {
        dim: usize,
        side: u32,
        powers: Vec<u32>,
    },
    Hypercube,
    CayleySym {
        symbols: usize,
        factorials: Vec<u32>,
        transpositions: Vec<(u8, u8)>,
    },
    Explicit {
        offsets: Vec<u32>,
        targets: Vec<u32>,
    },
}

/// An immutable graph instance exposing neighbor iteration.
///
/// Shareable across threads; all methods take `&self`.
#[derive(Debug, Clone)]
pub struct Graph {
    spec: GraphSpec,
    vertex_count: usize,
    max_degree: usize,
    regular: bool,
    family: Family,
}

impl Graph {
    /// Builds a handle with the default vertex cap.
    pub fn build(spec: GraphSpec) -> Result<Self> {
        Self::build_with_cap(spec, DEFAULT_VERTEX_CAP)
    }

    pub fn build_with_cap(spec: GraphSpec, cap: u64) -> Result<Self> {
        let bad = |msg: String| Error::InvalidSpec(spec.to_string(), msg);
        let count = spec.vertex_count_hint();
        let cap = cap.min(u32::MAX as u64);
        match &spec {
            GraphSpec::Torus { dim, side } => {
                if *dim < 1 {
                    return Err(bad("torus dimension must be at least 1".into()));
                }
                if *side < 2 {
                    return Err(bad("torus side length must be at least 2".into()));
                }
            }
            GraphSpec::Hypercube { dim } => {
                if *dim < 1 {
                    return Err(bad("hypercube dimension must be at least 1".into()));
                }
            }
            GraphSpec::CayleySym { symbols } => {
                if *symbols < 2 {
                    return Err(bad("symmetric group needs at least 2 symbols".into()));
                }
            }
            GraphSpec::Explicit(_) => {}
        }
        if count > cap as u128 {
            return Err(Error::SizeCap {
                what: spec.to_string(),
                actual: count,
                cap: cap as u128,
            });
        }
        let vertex_count = count as usize;
        let (family, max_degree, regular) = match &spec {
            GraphSpec::Torus { dim, side } => {
                let mut powers = Vec::with_capacity(*dim);
                let mut p = 1u32;
                for _ in 0..*dim {
                    powers.push(p);
                    p = p.wrapping_mul(*side as u32);
                }
                let degree = if *side == 2 { *dim } else { 2 * dim };
                (
                    Family::Torus {
                        dim: *dim,
                        side: *side as u32,
                        powers,
                    },
                    degree,
                    true,
                )
            }
            GraphSpec::Hypercube { dim } => (Family::Hypercube, *dim, true),
            GraphSpec::CayleySym { symbols } => {
                if *symbols > MAX_SYM_SYMBOLS {
                    return Err(bad(format!("at most {MAX_SYM_SYMBOLS} symbols are supported")));
                }
                let mut factorials = vec![1u32; *symbols + 1];
                for k in 1..=*symbols {
                    factorials[k] = factorials[k - 1] * k as u32;
                }
                let mut transpositions = Vec::new();
                for i in 0..*symbols {
                    for j in i + 1..*symbols {
                        transpositions.push((i as u8, j as u8));
                    }
                }
                let degree = transpositions.len();
                (
                    Family::CayleySym {
                        symbols: *symbols,
                        factorials,
                        transpositions,
                    },
                    degree,
                    true,
                )
            }
            GraphSpec::Explicit(e) => {
                let (offsets, targets) = explicit_csr(e)?;
                let degrees: Vec<usize> = offsets.windows(2).map(|w| (w[1] - w[0]) as usize).collect();
                let max = degrees.iter().copied().max().unwrap_or(0);
                let regular = degrees.iter().all(|&d| d == max);
                (Family::Explicit { offsets, targets }, max, regular)
            }
        };
        Ok(Graph {
            spec,
            vertex_count,
            max_degree,
            regular,
            family,
        })
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Common degree of a regular graph; the maximum degree otherwise.
    pub fn degree(&self) -> usize {
        self.max_degree
    }

    pub fn is_regular(&self) -> bool {
        self.regular
    }

    /// Whether the graph belongs to a built-in vertex-transitive family.
    pub fn is_transitive_family(&self) -> bool {
        !matches!(self.family, Family::Explicit { .. })
    }

    pub fn edge_count(&self) -> usize {
        match &self.family {
            Family::Explicit { targets, .. } => targets.len() / 2,
            _ => self.vertex_count * self.max_degree / 2,
        }
    }

    #[inline]
    pub fn degree_of(&self, v: Vertex) -> usize {
        match &self.family {
            Family::Explicit { offsets, .. } => (offsets[v.index() + 1] - offsets[v.index()]) as usize,
            _ => self.max_degree,
        }
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v.index() < self.vertex_count {
            Ok(())
        } else {
            Err(Error::InvalidVertex {
                vertex: v.0 as u64,
                count: self.vertex_count,
            })
        }
    }

    /// The `k`-th neighbor of `v`, for `k < degree_of(v)`. No bounds checks
    /// beyond debug assertions: this sits in the simulation hot loop.
    #[inline]
    pub fn neighbor(&self, v: Vertex, k: usize) -> Vertex {
        debug_assert!(k < self.degree_of(v));
        match &self.family {
            Family::Torus { side, powers, .. } => {
                let side = *side;
                if side == 2 {
                    return Vertex(v.0 ^ powers[k]);
                }
                let p = powers[k >> 1];
                let digit = (v.0 / p) % side;
                if k & 1 == 0 {
                    if digit + 1 == side {
                        Vertex(v.0 - digit * p)
                    } else {
                        Vertex(v.0 + p)
                    }
                } else if digit == 0 {
                    Vertex(v.0 + (side - 1) * p)
                } else {
                    Vertex(v.0 - p)
                }
            }
            Family::Hypercube => Vertex(v.0 ^ (1u32 << k)),
            Family::CayleySym {
                symbols,
                factorials,
                transpositions,
            } => {
                let mut perm = [0u8; MAX_SYM_SYMBOLS];
                lehmer_unrank(v.0, *symbols, factorials, &mut perm);
                let (i, j) = transpositions[k];
                perm.swap(i as usize, j as usize);
                Vertex(lehmer_rank(&perm[..*symbols], factorials))
            }
            Family::Explicit { offsets, targets } => Vertex(targets[offsets[v.index()] as usize + k]),
        }
    }

    /// All neighbors of `v`, in neighbor-index order.
    pub fn neighbors(&self, v: Vertex) -> Result<Vec<Vertex>> {
        self.check_vertex(v)?;
        Ok((0..self.degree_of(v)).map(|k| self.neighbor(v, k)).collect())
    }

    /// Calls `f` on every neighbor of `v`. Avoids repeated unranking for
    /// the Cayley family.
    #[inline]
    pub fn for_each_neighbor(&self, v: Vertex, mut f: impl FnMut(Vertex)) {
        match &self.family {
            Family::CayleySym {
                symbols,
                factorials,
                transpositions,
            } => {
                let mut perm = [0u8; MAX_SYM_SYMBOLS];
                lehmer_unrank(v.0, *symbols, factorials, &mut perm);
                for &(i, j) in transpositions {
                    perm.swap(i as usize, j as usize);
                    f(Vertex(lehmer_rank(&perm[..*symbols], factorials)));
                    perm.swap(i as usize, j as usize);
                }
            }
            Family::Explicit { offsets, targets } => {
                for &t in &targets[offsets[v.index()] as usize..offsets[v.index() + 1] as usize] {
                    f(Vertex(t));
                }
            }
            _ => {
                for k in 0..self.max_degree {
                    f(self.neighbor(v, k));
                }
            }
        }
    }

    /// The image of `y` under the automorphism that maps `x` to the origin.
    pub fn canonical_difference(&self, x: Vertex, y: Vertex) -> Result<Vertex> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        match &self.family {
            Family::Torus { dim, side, powers } => {
                let mut out = 0u32;
                for &p in powers.iter().take(*dim) {
                    let dx = (x.0 / p) % side;
                    let dy = (y.0 / p) % side;
                    out += ((dy + side - dx) % side) * p;
                }
                Ok(Vertex(out))
            }
            Family::Hypercube => Ok(Vertex(x.0 ^ y.0)),
            Family::CayleySym { symbols, factorials, .. } => {
                let n = *symbols;
                let mut px = [0u8; MAX_SYM_SYMBOLS];
                let mut py = [0u8; MAX_SYM_SYMBOLS];
                lehmer_unrank(x.0, n, factorials, &mut px);
                lehmer_unrank(y.0, n, factorials, &mut py);
                let mut inv = [0u8; MAX_SYM_SYMBOLS];
                for (i, &v) in px[..n].iter().enumerate() {
                    inv[v as usize] = i as u8;
                }
                // (x^{-1} ∘ y)(i) = x^{-1}(y(i))
                let mut out = [0u8; MAX_SYM_SYMBOLS];
                for i in 0..n {
                    out[i] = inv[py[i] as usize];
                }
                Ok(Vertex(lehmer_rank(&out[..n], factorials)))
            }
            Family::Explicit { .. } => Err(Error::UnsupportedFamily("canonical_difference")),
        }
    }

    /// Inverse of the canonical difference: the vertex `y` with
    /// `canonical_difference(x, y) == w`.
    pub fn translate(&self, x: Vertex, w: Vertex) -> Result<Vertex> {
        self.check_vertex(x)?;
        self.check_vertex(w)?;
        match &self.family {
            Family::Torus { dim, side, powers } => {
                let mut out = 0u32;
                for &p in powers.iter().take(*dim) {
                    let dx = (x.0 / p) % side;
                    let dw = (w.0 / p) % side;
                    out += ((dx + dw) % side) * p;
                }
                Ok(Vertex(out))
            }
            Family::Hypercube => Ok(Vertex(x.0 ^ w.0)),
            Family::CayleySym { symbols, factorials, .. } => {
                let n = *symbols;
                let mut px = [0u8; MAX_SYM_SYMBOLS];
                let mut pw = [0u8; MAX_SYM_SYMBOLS];
                lehmer_unrank(x.0, n, factorials, &mut px);
                lehmer_unrank(w.0, n, factorials, &mut pw);
                let mut out = [0u8; MAX_SYM_SYMBOLS];
                for i in 0..n {
                    out[i] = px[pw[i] as usize];
                }
                Ok(Vertex(lehmer_rank(&out[..n], factorials)))
            }
            Family::Explicit { .. } => Err(Error::UnsupportedFamily("translate")),
        }
    }

    /// The automorphism-image `-w`: for tori the coordinatewise negation,
    /// for hypercubes the identity, for permutations the inverse.
    pub fn reflect(&self, w: Vertex) -> Result<Vertex> {
        self.check_vertex(w)?;
        match &self.family {
            Family::Torus { .. } | Family::Hypercube | Family::CayleySym { .. } => {
                self.canonical_difference(w, Vertex::ORIGIN)
            }
            Family::Explicit { .. } => Err(Error::UnsupportedFamily("reflect")),
        }
    }

    #[inline]
    pub fn sample_uniform_vertex<R: Rng + ?Sized>(&self, rng: &mut R) -> Vertex {
        Vertex(rng.random_range(0..self.vertex_count as u32))
    }

    /// Torus coordinates of `v` (digit `j` is coordinate `j`).
    pub fn torus_coords(&self, v: Vertex) -> Option<Vec<u32>> {
        match &self.family {
            Family::Torus { side, powers, .. } => Some(powers.iter().map(|&p| (v.0 / p) % side).collect()),
            _ => None,
        }
    }

    pub fn torus_vertex(&self, coords: &[u32]) -> Option<Vertex> {
        match &self.family {
            Family::Torus { dim, side, powers } if coords.len() == *dim => {
                if coords.iter().any(|c| c >= side) {
                    return None;
                }
                Some(Vertex(coords.iter().zip(powers).map(|(c, p)| c * p).sum()))
            }
            _ => None,
        }
    }

    /// Permutation in one-line notation for a Cayley-graph vertex.
    pub fn permutation(&self, v: Vertex) -> Option<Vec<u8>> {
        match &self.family {
            Family::CayleySym { symbols, factorials, .. } => {
                let mut perm = [0u8; MAX_SYM_SYMBOLS];
                lehmer_unrank(v.0, *symbols, factorials, &mut perm);
                Some(perm[..*symbols].to_vec())
            }
            _ => None,
        }
    }

    pub fn permutation_vertex(&self, perm: &[u8]) -> Option<Vertex> {
        match &self.family {
            Family::CayleySym { symbols, factorials, .. } if perm.len() == *symbols => {
                let mut seen = [false; MAX_SYM_SYMBOLS];
                for &p in perm {
                    if p as usize >= *symbols || seen[p as usize] {
                        return None;
                    }
                    seen[p as usize] = true;
                }
                Some(Vertex(lehmer_rank(perm, factorials)))
            }
            _ => None,
        }
    }

    /// Graph distance from the origin for every vertex (breadth-first).
    pub fn distances_from(&self, source: Vertex) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count];
        let mut queue = std::collections::VecDeque::new();
        dist[source.index()] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let d = dist[v.index()];
            self.for_each_neighbor(v, |u| {
                if dist[u.index()] == u32::MAX {
                    dist[u.index()] = d + 1;
                    queue.push_back(u);
                }
            });
        }
        dist
    }
}

/// Lehmer-code rank of a permutation of `0..n`.
pub(crate) fn lehmer_rank(perm: &[u8], factorials: &[u32]) -> u32 {
    let n = perm.len();
    let mut rank = 0u32;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count() as u32;
        rank += smaller * factorials[n - 1 - i];
    }
    rank
}

pub(crate) fn lehmer_unrank(mut rank: u32, n: usize, factorials: &[u32], out: &mut [u8]) {
    let mut remaining = [0u8; MAX_SYM_SYMBOLS];
    for (i, r) in remaining.iter_mut().enumerate().take(n) {
        *r = i as u8;
    }
    let mut len = n;
    for i in 0..n {
        let f = factorials[n - 1 - i];
        let digit = (rank / f) as usize;
        rank %= f;
        out[i] = remaining[digit];
        remaining.copy_within(digit + 1..len, digit);
        len -= 1;
    }
}

fn explicit_csr(e: &ExplicitGraph) -> Result<(Vec<u32>, Vec<u32>)> {
    let n = e.vertex_count;
    if n == 0 {
        return Err(Error::InvalidGraph("graph has no vertices".into()));
    }
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(u, v) in &e.edges {
        if u as usize >= n || v as usize >= n {
            return Err(Error::InvalidGraph(format!("edge ({u}, {v}) references a missing vertex")));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
        }
        adjacency[u as usize].push(v);
        adjacency[v as usize].push(u);
    }
    for (v, list) in adjacency.iter_mut().enumerate() {
        list.sort_unstable();
        if list.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("repeated edge at vertex {v}")));
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for &u in &adjacency[v] {
            if !seen[u as usize] {
                seen[u as usize] = true;
                reached += 1;
                stack.push(u as usize);
            }
        }
    }
    if reached != n {
        return Err(Error::InvalidGraph(format!("graph is disconnected ({reached} of {n} vertices reachable from 0)")));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    offsets.push(0u32);
    for list in &adjacency {
        targets.extend_from_slice(list);
        offsets.push(targets.len() as u32);
    }
    Ok((offsets, targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted(mut v: Vec<Vertex>) -> Vec<Vertex> {
        v.sort();
        v
    }

    #[test]
    fn family_sizes() {
        let t = Graph::build(GraphSpec::torus(3, 4)).unwrap();
        assert_eq!((t.vertex_count(), t.degree()), (64, 6));
        let h = Graph::build(GraphSpec::hypercube(3)).unwrap();
        assert_eq!((h.vertex_count(), h.degree()), (8, 3));
        let s = Graph::build(GraphSpec::cayley_sym(3)).unwrap();
        assert_eq!((s.vertex_count(), s.degree()), (6, 3));
        let t2 = Graph::build(GraphSpec::torus(3, 2)).unwrap();
        assert_eq!((t2.vertex_count(), t2.degree()), (8, 3));
    }

    #[test]
    fn hypercube_neighbors_are_bit_flips() {
        let h = Graph::build(GraphSpec::hypercube(3)).unwrap();
        let nb = sorted(h.neighbors(Vertex(0)).unwrap());
        assert_eq!(nb, vec![Vertex(0b001), Vertex(0b010), Vertex(0b100)]);
    }

    #[test]
    fn torus_origin_neighbors() {
        let t = Graph::build(GraphSpec::torus(3, 4)).unwrap();
        let nb: Vec<Vec<u32>> = t
            .neighbors(Vertex(0))
            .unwrap()
            .into_iter()
            .map(|v| t.torus_coords(v).unwrap())
            .collect();
        let mut expect = vec![
            vec![1, 0, 0],
            vec![3, 0, 0],
            vec![0, 1, 0],
            vec![0, 3, 0],
            vec![0, 0, 1],
            vec![0, 0, 3],
        ];
        let mut got = nb.clone();
        got.sort();
        expect.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn sym_identity_neighbors_are_transpositions() {
        let s = Graph::build(GraphSpec::cayley_sym(3)).unwrap();
        assert_eq!(s.permutation(Vertex(0)).unwrap(), vec![0, 1, 2]);
        let mut perms: Vec<Vec<u8>> = s
            .neighbors(Vertex(0))
            .unwrap()
            .into_iter()
            .map(|v| s.permutation(v).unwrap())
            .collect();
        perms.sort();
        assert_eq!(perms, vec![vec![0, 2, 1], vec![1, 0, 2], vec![2, 1, 0]]);
    }

    #[test]
    fn canonical_difference_examples() {
        let t = Graph::build(GraphSpec::torus(3, 4)).unwrap();
        let x = t.torus_vertex(&[1, 2, 3]).unwrap();
        let y = t.torus_vertex(&[3, 3, 3]).unwrap();
        let w = t.canonical_difference(x, y).unwrap();
        assert_eq!(t.torus_coords(w).unwrap(), vec![2, 1, 0]);

        let h = Graph::build(GraphSpec::hypercube(4)).unwrap();
        assert_eq!(h.canonical_difference(Vertex(0b1010), Vertex(0b0110)).unwrap(), Vertex(0b1100));

        let s = Graph::build(GraphSpec::cayley_sym(3)).unwrap();
        let t12 = s.permutation_vertex(&[1, 0, 2]).unwrap();
        assert_eq!(s.canonical_difference(t12, t12).unwrap(), Vertex::ORIGIN);
    }

    #[test]
    fn explicit_graph_validation() {
        let k3 = Graph::build(GraphSpec::complete(3)).unwrap();
        assert_eq!((k3.vertex_count(), k3.degree(), k3.edge_count()), (3, 2, 3));
        assert!(matches!(
            Graph::build(GraphSpec::explicit("loop", 2, vec![(0, 0), (0, 1)])),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::build(GraphSpec::explicit("dup", 2, vec![(0, 1), (1, 0)])),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::build(GraphSpec::explicit("split", 4, vec![(0, 1), (2, 3)])),
            Err(Error::InvalidGraph(_))
        ));
        let single = Graph::build(GraphSpec::explicit("one", 1, vec![])).unwrap();
        assert_eq!(single.vertex_count(), 1);
        let mut rng = rand::rng();
        assert_eq!(single.sample_uniform_vertex(&mut rng), Vertex(0));
        assert!(matches!(
            single.canonical_difference(Vertex(0), Vertex(0)),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn size_cap_and_bad_parameters() {
        assert!(matches!(
            Graph::build_with_cap(GraphSpec::hypercube(20), 1 << 16),
            Err(Error::SizeCap { .. })
        ));
        assert!(matches!(Graph::build(GraphSpec::torus(3, 1)), Err(Error::InvalidSpec(..))));
        assert!(matches!(Graph::build(GraphSpec::hypercube(0)), Err(Error::InvalidSpec(..))));
        assert!(matches!(Graph::build(GraphSpec::cayley_sym(1)), Err(Error::InvalidSpec(..))));
        assert!(matches!(Graph::build(GraphSpec::torus(40, 8)), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn invalid_vertex_is_rejected() {
        let h = Graph::build(GraphSpec::hypercube(3)).unwrap();
        assert!(matches!(h.neighbors(Vertex(8)), Err(Error::InvalidVertex { .. })));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(GraphSpec::parse("torus:d=3,n=8").unwrap(), GraphSpec::torus(3, 8));
        assert_eq!(GraphSpec::parse("hypercube:n=12").unwrap(), GraphSpec::hypercube(12));
        assert_eq!(GraphSpec::parse("sym:n=5").unwrap(), GraphSpec::cayley_sym(5));
        for bad in ["torus", "torus:d=3", "cube:n=3", "torus:d=3,n=x", "hypercube:n=3,q=1"] {
            assert!(GraphSpec::parse(bad).is_err(), "{bad}");
        }
        for s in ["torus:d=3,n=8", "hypercube:n=12", "sym:n=5"] {
            assert_eq!(GraphSpec::parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn edge_list_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.txt");
        std::fs::write(&path, "# triangle\n0 1\n1 2\n\n2 0\n").unwrap();
        let spec = GraphSpec::parse(&format!("explicit:path={}", path.display())).unwrap();
        let g = Graph::build(spec).unwrap();
        assert_eq!((g.vertex_count(), g.degree(), g.edge_count()), (3, 2, 3));

        let single = dir.path().join("one.txt");
        std::fs::write(&single, "# vertices 1\n").unwrap();
        let g = Graph::build(read_edge_list(&single).unwrap()).unwrap();
        assert_eq!(g.vertex_count(), 1);
    }

    fn small_instances() -> Vec<Graph> {
        [
            GraphSpec::torus(3, 4),
            GraphSpec::torus(2, 5),
            GraphSpec::torus(3, 2),
            GraphSpec::torus(1, 7),
            GraphSpec::hypercube(6),
            GraphSpec::cayley_sym(4),
            GraphSpec::cayley_sym(5),
        ]
        .into_iter()
        .map(|s| Graph::build(s).unwrap())
        .collect()
    }

    #[test]
    fn exhaustive_degree_and_symmetry() {
        for g in small_instances() {
            for v in 0..g.vertex_count() as u32 {
                let nb = g.neighbors(Vertex(v)).unwrap();
                assert_eq!(nb.len(), g.degree(), "{}", g.spec());
                let mut uniq = nb.clone();
                uniq.sort();
                uniq.dedup();
                assert_eq!(uniq.len(), nb.len(), "{} has a multi-edge at {v}", g.spec());
                for u in nb {
                    assert_ne!(u, Vertex(v));
                    assert!(g.neighbors(u).unwrap().contains(&Vertex(v)));
                }
            }
        }
    }

    #[test]
    fn exhaustive_relabeling_is_automorphism() {
        for g in small_instances() {
            let n = g.vertex_count() as u32;
            for x in (0..n).step_by(3) {
                for y in 0..n {
                    let w = g.canonical_difference(Vertex(x), Vertex(y)).unwrap();
                    let mapped = sorted(
                        g.neighbors(Vertex(y))
                            .unwrap()
                            .into_iter()
                            .map(|u| g.canonical_difference(Vertex(x), u).unwrap())
                            .collect(),
                    );
                    assert_eq!(mapped, sorted(g.neighbors(w).unwrap()), "{}", g.spec());
                    assert_eq!(g.translate(Vertex(x), w).unwrap(), Vertex(y));
                }
                assert_eq!(g.canonical_difference(Vertex(x), Vertex(x)).unwrap(), Vertex::ORIGIN);
            }
        }
    }

    #[test]
    fn lehmer_round_trip_exhaustive() {
        let g = Graph::build(GraphSpec::cayley_sym(6)).unwrap();
        for v in 0..g.vertex_count() as u32 {
            let p = g.permutation(Vertex(v)).unwrap();
            assert_eq!(g.permutation_vertex(&p), Some(Vertex(v)));
        }
        let t = Graph::build(GraphSpec::torus(4, 5)).unwrap();
        for v in 0..t.vertex_count() as u32 {
            let c = t.torus_coords(Vertex(v)).unwrap();
            assert_eq!(t.torus_vertex(&c), Some(Vertex(v)));
        }
    }

    proptest! {
        #[test]
        fn large_graph_sampled_symmetry(seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for spec in [GraphSpec::hypercube(20), GraphSpec::torus(3, 60), GraphSpec::cayley_sym(9)] {
                let g = Graph::build(spec).unwrap();
                let v = g.sample_uniform_vertex(&mut rng);
                let nb = g.neighbors(v).unwrap();
                prop_assert_eq!(nb.len(), g.degree());
                for u in nb {
                    prop_assert!(g.neighbors(u).unwrap().contains(&v));
                }
                let x = g.sample_uniform_vertex(&mut rng);
                let w = g.canonical_difference(x, v).unwrap();
                prop_assert_eq!(g.translate(x, w).unwrap(), v);
            }
        }

        #[test]
        fn sym_rank_round_trip(seed in any::<u64>()) {
            use rand::{SeedableRng, seq::SliceRandom};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Graph::build(GraphSpec::cayley_sym(11)).unwrap();
            let mut p: Vec<u8> = (0..11).collect();
            p.shuffle(&mut rng);
            let v = g.permutation_vertex(&p).unwrap();
            prop_assert_eq!(g.permutation(v).unwrap(), p);
        }
    }

    #[test]
    fn uniform_vertex_frequencies() {
        use rand::SeedableRng;
        let g = Graph::build(GraphSpec::hypercube(3)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut counts = [0u32; 8];
        for _ in 0..draws {
            counts[g.sample_uniform_vertex(&mut rng).index()] += 1;
        }
        let p = 1.0 / 8.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 4.0 * sd);
        }
        let t = Graph::build(GraphSpec::torus(3, 4)).unwrap();
        for _ in 0..1000 {
            assert!(t.sample_uniform_vertex(&mut rng).index() < 64);
        }
    }
}
