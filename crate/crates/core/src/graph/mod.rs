//! Attributed graphs: vertices coloured green/red, edges absent/green/red.
//!
//! Only a subset of the red vertices is observed. Everything downstream works
//! from the per-vertex context statistic `r` (number of observed red
//! neighbours) and content statistic `s` (number of incident red edges).

pub mod io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge attribute between an unordered vertex pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum EdgeAttr {
    #[default]
    Absent = 0,
    Green = 1,
    Red = 2,
}

impl EdgeAttr {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EdgeAttr::Absent),
            1 => Some(EdgeAttr::Green),
            2 => Some(EdgeAttr::Red),
            _ => None,
        }
    }

    pub fn is_edge(self) -> bool {
        self != EdgeAttr::Absent
    }
}

/// Vertex colour. Encoded as 1 (green) and 2 (red) in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Green,
    Red,
}

impl Color {
    pub fn is_red(self) -> bool {
        self == Color::Red
    }

    pub fn code(self) -> u8 {
        match self {
            Color::Green => 1,
            Color::Red => 2,
        }
    }
}

/// Edge-colour probabilities `(p1, p2, q2)`.
///
/// `p1`/`p2` are the green/red edge probabilities for any pair that is not
/// red-red; `q2` is the red edge probability between two red vertices. The
/// green edge probability between red vertices is tied to `p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    p1: f64,
    p2: f64,
    q2: f64,
}

impl ModelParams {
    /// Parameters strictly inside the prior support:
    /// `0 < p1 < 1`, `0 < p2 < 1 - p1`, `p2 < q2 < 1 - p1`.
    pub fn new(p1: f64, p2: f64, q2: f64) -> Result<Self> {
        let params = Self::closure(p1, p2, q2)?;
        if !params.is_interior() {
            return Err(Error::InvalidParams(format!(
                "(p1, p2, q2) = ({p1}, {p2}, {q2}) must satisfy 0 < p1 < 1, 0 < p2 < 1 - p1 \
                 and p2 < q2 < 1 - p1"
            )));
        }
        Ok(params)
    }

    /// Parameters on the closure of the support. Accepted for graph
    /// generation only; the sampler requires [`ModelParams::is_interior`].
    pub fn closure(p1: f64, p2: f64, q2: f64) -> Result<Self> {
        let unit = |name: &str, x: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidParams(format!("{name} = {x} is not in [0, 1]")));
            }
            Ok(())
        };
        unit("p1", p1)?;
        unit("p2", p2)?;
        unit("q2", q2)?;
        if p1 + p2 > 1.0 {
            return Err(Error::InvalidParams(format!(
                "p1 + p2 = {} exceeds 1 (p0 would be negative)",
                p1 + p2
            )));
        }
        if p2 > q2 {
            return Err(Error::InvalidParams(format!(
                "constraint p2 < q2 violated: p2 = {p2}, q2 = {q2}"
            )));
        }
        if p1 + q2 > 1.0 {
            return Err(Error::InvalidParams(format!(
                "constraint q2 < 1 - p1 violated: p1 = {p1}, q2 = {q2}"
            )));
        }
        Ok(Self { p1, p2, q2 })
    }

    pub fn is_interior(&self) -> bool {
        let Self { p1, p2, q2 } = *self;
        p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0 - p1 && q2 > p2 && q2 < 1.0 - p1
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    pub fn p0(&self) -> f64 {
        1.0 - self.p1 - self.p2
    }

    pub fn q1(&self) -> f64 {
        self.p1
    }

    pub fn q0(&self) -> f64 {
        1.0 - self.p1 - self.q2
    }

    pub(crate) fn with_p1(self, p1: f64) -> Self {
        Self { p1, ..self }
    }

    pub(crate) fn with_p2(self, p2: f64) -> Self {
        Self { p2, ..self }
    }

    pub(crate) fn with_q2(self, q2: f64) -> Self {
        Self { q2, ..self }
    }
}

/// Context/content statistics of one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VertexStats {
    /// Number of observed red neighbours.
    pub r: usize,
    /// Number of incident red edges.
    pub s: usize,
}

impl VertexStats {
    pub fn new(r: usize, s: usize) -> Self {
        Self { r, s }
    }
}

/// Statistics of all vertices, partitioned into observed red and latent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsBundle {
    pub n: usize,
    pub observed_ids: Vec<usize>,
    pub observed: Vec<VertexStats>,
    pub latent_ids: Vec<usize>,
    pub latent: Vec<VertexStats>,
}

impl StatsBundle {
    /// Number of observed red vertices, `m'`.
    pub fn m_observed(&self) -> usize {
        self.observed.len()
    }

    pub fn n_latent(&self) -> usize {
        self.latent.len()
    }

    /// Position of vertex `id` in the latent list.
    pub fn latent_index(&self, id: usize) -> Option<usize> {
        self.latent_ids.binary_search(&id).ok()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let m_obs = self.m_observed();
        if m_obs < 2 {
            return Err(Error::InvalidGraph(format!(
                "at least 2 observed red vertices are required, found {m_obs}"
            )));
        }
        if m_obs + self.n_latent() != self.n {
            return Err(Error::InvalidGraph(
                "observed and latent vertex counts do not add up to n".into(),
            ));
        }
        for t in &self.observed {
            if t.r + 1 > m_obs || t.s + 1 > self.n {
                return Err(Error::InvalidGraph(format!(
                    "observed red vertex statistics {t:?} out of range"
                )));
            }
        }
        for t in &self.latent {
            if t.r > m_obs || t.s + 1 > self.n {
                return Err(Error::InvalidGraph(format!(
                    "latent vertex statistics {t:?} out of range"
                )));
            }
        }
        Ok(())
    }
}

/// A colour for every vertex, consistent with the observed red set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullColoring {
    y: Vec<Color>,
}

impl FullColoring {
    pub fn new(y: Vec<Color>) -> Self {
        Self { y }
    }

    /// Colouring with exactly the listed vertices red.
    pub fn from_red(n: usize, red: &[usize]) -> Result<Self> {
        let mut y = vec![Color::Green; n];
        for &v in red {
            if v >= n {
                return Err(Error::InvalidGraph(format!("red vertex {v} out of range (n = {n})")));
            }
            y[v] = Color::Red;
        }
        Ok(Self { y })
    }

    /// Colouring of a whole graph from the latent colours of a stats bundle.
    pub fn from_latent(stats: &StatsBundle, latent: &[Color]) -> Self {
        let mut y = vec![Color::Green; stats.n];
        for &v in &stats.observed_ids {
            y[v] = Color::Red;
        }
        for (&v, &c) in stats.latent_ids.iter().zip(latent) {
            y[v] = c;
        }
        Self { y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn color(&self, v: usize) -> Color {
        self.y[v]
    }

    pub fn colors(&self) -> &[Color] {
        &self.y
    }

    pub fn red_count(&self) -> usize {
        self.y.iter().filter(|c| c.is_red()).count()
    }

    pub fn red_vertices(&self) -> Vec<usize> {
        (0..self.y.len()).filter(|&v| self.y[v].is_red()).collect()
    }

    /// Latent colours in the order of `stats.latent_ids`.
    pub fn latent_colors(&self, stats: &StatsBundle) -> Result<Vec<Color>> {
        if self.y.len() != stats.n {
            return Err(Error::InvalidGraph(format!(
                "colouring has length {}, graph has {} vertices",
                self.y.len(),
                stats.n
            )));
        }
        if let Some(&v) = stats.observed_ids.iter().find(|&&v| !self.y[v].is_red()) {
            return Err(Error::InvalidGraph(format!(
                "observed red vertex {v} is coloured green"
            )));
        }
        Ok(stats.latent_ids.iter().map(|&v| self.y[v]).collect())
    }
}

/// Undirected simple graph with edge attributes and an observed red set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributedGraph {
    n: usize,
    edges: Vec<EdgeAttr>,
    observed_red: Vec<usize>,
}

impl AttributedGraph {
    /// Edgeless graph. `observed_red` is sorted and must hold at least two
    /// distinct ids below `n`.
    pub fn new(n: usize, observed_red: &[usize]) -> Result<Self> {
        let mut observed: Vec<usize> = observed_red.to_vec();
        observed.sort_unstable();
        if let Some(&v) = observed.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidGraph(format!(
                "observed red vertex {v} out of range (n = {n})"
            )));
        }
        if observed.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("duplicate observed red vertex".into()));
        }
        if observed.len() < 2 {
            return Err(Error::InvalidGraph(format!(
                "at least 2 observed red vertices are required (m' >= 2), found {}",
                observed.len()
            )));
        }
        Ok(Self { n, edges: vec![EdgeAttr::Absent; n * n], observed_red: observed })
    }

    pub fn from_edges(
        n: usize,
        observed_red: &[usize],
        edges: impl IntoIterator<Item = (usize, usize, EdgeAttr)>,
    ) -> Result<Self> {
        let mut graph = Self::new(n, observed_red)?;
        for (u, v, attr) in edges {
            graph.set_edge(u, v, attr)?;
        }
        Ok(graph)
    }

    pub fn set_edge(&mut self, u: usize, v: usize, attr: EdgeAttr) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) out of range (n = {})",
                self.n
            )));
        }
        if u == v {
            if attr.is_edge() {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            return Ok(());
        }
        self.edges[u * self.n + v] = attr;
        self.edges[v * self.n + u] = attr;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge(&self, u: usize, v: usize) -> EdgeAttr {
        self.edges[u * self.n + v]
    }

    pub fn observed_red(&self) -> &[usize] {
        &self.observed_red
    }

    pub fn m_observed(&self) -> usize {
        self.observed_red.len()
    }

    pub fn is_observed(&self, v: usize) -> bool {
        self.observed_red.binary_search(&v).is_ok()
    }

    pub fn latent_vertices(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| !self.is_observed(v)).collect()
    }

    /// Edges `(u, v, attr)` with `u < v`, in row-major order.
    pub fn edge_list(&self) -> Vec<(usize, usize, EdgeAttr)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                let attr = self.edge(u, v);
                if attr.is_edge() {
                    out.push((u, v, attr));
                }
            }
        }
        out
    }

    pub fn red_edge_count(&self) -> usize {
        self.edge_list().iter().filter(|e| e.2 == EdgeAttr::Red).count()
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidGraph("permutation length differs from n".into()));
        }
        let observed: Vec<usize> = self.observed_red.iter().map(|&v| perm[v]).collect();
        let edges = self.edge_list().into_iter().map(|(u, v, a)| (perm[u], perm[v], a));
        Self::from_edges(self.n, &observed, edges)
    }
}

/// Context and content statistics for every vertex.
pub fn compute_stats(graph: &AttributedGraph) -> StatsBundle {
    let n = graph.n();
    let stats_of = |v: usize| {
        let mut t = VertexStats::default();
        for u in 0..n {
            let attr = graph.edge(u, v);
            if attr == EdgeAttr::Red {
                t.s += 1;
            }
            if attr.is_edge() && graph.is_observed(u) {
                t.r += 1;
            }
        }
        t
    };
    let observed_ids = graph.observed_red().to_vec();
    let latent_ids = graph.latent_vertices();
    StatsBundle {
        n,
        observed: observed_ids.iter().map(|&v| stats_of(v)).collect(),
        latent: latent_ids.iter().map(|&v| stats_of(v)).collect(),
        observed_ids,
        latent_ids,
    }
}

/// Draw a graph from the generative model. Each unordered pair gets its
/// attribute independently: with probabilities `(q0, q1, q2)` when both ends
/// are red and `(p0, p1, p2)` otherwise. Pairs are visited in row-major
/// order `(0,1), (0,2), ..., (n-2,n-1)`, one uniform deviate each.
pub fn generate_graph<R: Rng + ?Sized>(
    n: usize,
    coloring: &FullColoring,
    observed_red: &[usize],
    params: &ModelParams,
    rng: &mut R,
) -> Result<AttributedGraph> {
    if coloring.len() != n {
        return Err(Error::InvalidGraph(format!(
            "colouring has length {}, expected {n}",
            coloring.len()
        )));
    }
    if let Some(&v) = observed_red.iter().find(|&&v| v < n && !coloring.color(v).is_red()) {
        return Err(Error::InvalidGraph(format!("observed vertex {v} is not red")));
    }
    let mut graph = AttributedGraph::new(n, observed_red)?;
    let (p1, p2, q2) = (params.p1(), params.p2(), params.q2());
    for u in 0..n {
        for v in u + 1..n {
            let (green, red) = if coloring.color(u).is_red() && coloring.color(v).is_red() {
                (p1, q2)
            } else {
                (p1, p2)
            };
            let x: f64 = rng.random();
            // Red first, then green; the remainder is no edge.
            let attr = if x < red {
                EdgeAttr::Red
            } else if x < red + green {
                EdgeAttr::Green
            } else {
                EdgeAttr::Absent
            };
            if attr.is_edge() {
                graph.edges[u * n + v] = attr;
                graph.edges[v * n + u] = attr;
            }
        }
    }
    Ok(graph)
}
