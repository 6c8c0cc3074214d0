//! Structural similarity: exact computation and the sampling estimator.
//!
//! All three measures are functions of the intersection size
//! `I(u, v) = |N[u] ∩ N[v]|` and the inclusive sizes `n_u`, `n_v`.
//! The estimator draws `L` uniform members of the multiset `N[x] ⊎ N[y]`
//! and counts hits in the intersection; the hit rate has expectation
//! `2I / (n_x + n_y)`, from which each measure is recovered.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::dyngraph::{DynamicGraph, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SimilarityMeasure {
    Jaccard,
    Cosine,
    Dice,
}

impl SimilarityMeasure {
    pub const ALL: [SimilarityMeasure; 3] = [Self::Jaccard, Self::Cosine, Self::Dice];

    /// Similarity from the intersection size and the inclusive sizes.
    pub fn from_counts(self, inter: usize, n_u: usize, n_v: usize) -> f64 {
        let i = inter as f64;
        let (a, b) = (n_u as f64, n_v as f64);
        let s = match self {
            Self::Jaccard => i / (a + b - i),
            Self::Cosine => i / (a * b).sqrt(),
            Self::Dice => 2.0 * i / (a + b),
        };
        s.clamp(0.0, 1.0)
    }

    /// Half-error `r` the hit rate must meet for a `ρ/2` similarity error.
    pub fn sample_radius(self, rho: f64) -> f64 {
        match self {
            Self::Jaccard => rho / 4.0,
            Self::Cosine => rho * rho / 4.0,
            Self::Dice => rho / 2.0,
        }
    }

    /// Maps the sample hit rate back to the measure.
    pub fn from_hit_rate(self, xbar: f64, n_x: usize, n_y: usize) -> f64 {
        let s = match self {
            Self::Jaccard => xbar / (2.0 - xbar),
            Self::Cosine => {
                let (a, b) = (n_x as f64, n_y as f64);
                (a + b) / (2.0 * (a * b).sqrt()) * xbar
            }
            Self::Dice => xbar,
        };
        s.clamp(0.0, 1.0)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Jaccard => "jaccard",
            Self::Cosine => "cosine",
            Self::Dice => "dice",
        }
    }
}

impl fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jaccard" => Ok(Self::Jaccard),
            "cosine" => Ok(Self::Cosine),
            "dice" => Ok(Self::Dice),
            other => Err(format!("unknown similarity measure `{other}`")),
        }
    }
}

/// Error budgets: `rho` per edge, `delta` for the Δ-Table, `rho_star` overall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxParams {
    pub rho: f64,
    pub delta: Option<f64>,
    pub rho_star: f64,
}

impl ApproxParams {
    /// Budget for engines without a Δ-Table: `ρ = ρ*`.
    pub fn exact_core(rho_star: f64) -> Self {
        Self {
            rho: rho_star,
            delta: None,
            rho_star,
        }
    }

    /// Budget split `ρ = ρ* − Δ` for engines with a Δ-Table.
    pub fn with_delta(rho_star: f64, delta: f64) -> Self {
        Self {
            rho: rho_star - delta,
            delta: Some(delta),
            rho_star,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBudget {
    pub samples: u64,
    pub radius: f64,
}

/// Number of samples `L = ⌈ln(4n⁴) / (2r²)⌉` for the measure's radius.
pub fn sample_count(n: usize, rho: f64, measure: SimilarityMeasure) -> SampleBudget {
    let n = n.max(2) as f64;
    let r = measure.sample_radius(rho);
    let log_term = 4.0f64.ln() + 4.0 * n.ln();
    let samples = (log_term / (2.0 * r * r)).ceil() as u64;
    SampleBudget { samples, radius: r }
}

/// `|N[u] ∩ N[v]|`, probing the larger adjacency set from the smaller one.
pub fn intersection_size(graph: &DynamicGraph, u: VertexId, v: VertexId) -> usize {
    let (small, large) = if graph.degree(u) <= graph.degree(v) {
        (u, v)
    } else {
        (v, u)
    };
    let mut count = usize::from(graph.in_closed_neighborhood(large, small));
    if graph.has_edge(small, large) {
        // `large` is in both closed neighborhoods.
        count += 1;
    }
    let large_set = graph.adjacency(large);
    count += graph
        .adjacency(small)
        .iter()
        .filter(|w| **w != large && large_set.contains(*w))
        .count();
    count
}

/// Exact similarity of an edge; 0 for non-adjacent pairs.
pub fn exact_sim(graph: &DynamicGraph, u: VertexId, v: VertexId, measure: SimilarityMeasure) -> f64 {
    if u == v || !graph.has_edge(u, v) {
        return 0.0;
    }
    let inter = intersection_size(graph, u, v);
    measure.from_counts(inter, graph.inclusive_size(u), graph.inclusive_size(v))
}

pub fn is_valid_approx(sigma_tilde: f64, sigma_exact: f64, rho: f64) -> bool {
    (sigma_tilde - sigma_exact).abs() <= rho
}

/// Hit rate over `samples` uniform draws from `N[x] ⊎ N[y]`.
///
/// A draw picks `N[x]` with probability `n_x / (n_x + n_y)` and then a
/// uniform member of it, which is the same as one uniform index into the
/// concatenation of both inclusive neighborhoods.
pub fn sample_hit_rate<R: Rng + ?Sized>(
    graph: &DynamicGraph,
    x: VertexId,
    y: VertexId,
    samples: u64,
    rng: &mut R,
) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    let adj_x = graph.adjacency(x);
    let adj_y = graph.adjacency(y);
    let dx = adj_x.len();
    let nx = dx + 1;
    let total = (nx + adj_y.len() + 1) as u32;
    let hit = |t: usize| {
        if t < nx {
            let w = if t == dx { x } else { adj_x[t] };
            w == y || adj_y.contains(&w)
        } else {
            let t = t - nx;
            let w = if t == adj_y.len() { y } else { adj_y[t] };
            w == x || adj_x.contains(&w)
        }
    };
    let mut hits = 0u64;
    if samples >= 2 * u64::from(total) {
        // Same draws, with membership looked up once per position.
        let table: Vec<u8> = (0..total as usize).map(|t| u8::from(hit(t))).collect();
        for _ in 0..samples {
            hits += u64::from(table[rng.random_range(0..total) as usize]);
        }
    } else {
        for _ in 0..samples {
            hits += u64::from(hit(rng.random_range(0..total) as usize));
        }
    }
    hits as f64 / samples as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SampleMode {
    /// Sample unless an exact intersection is cheaper than `L` draws.
    #[default]
    Auto,
    /// Always run the sampler, regardless of degrees.
    Always,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub samples: u64,
    pub exact: bool,
    /// The sample count was truncated by `max_samples`.
    pub capped: bool,
}

/// The `ρ/2`-accurate similarity routine.
#[derive(Clone, Copy, Debug)]
pub struct SimilarityEstimator {
    pub measure: SimilarityMeasure,
    pub rho: f64,
    pub mode: SampleMode,
    pub max_samples: Option<u64>,
}

impl SimilarityEstimator {
    pub fn new(measure: SimilarityMeasure, rho: f64) -> Self {
        Self {
            measure,
            rho,
            mode: SampleMode::Auto,
            max_samples: None,
        }
    }

    pub fn with_mode(mut self, mode: SampleMode) -> Self {
        self.mode = mode;
        self
    }

    /// Estimates `σ(x, y)` for an existing edge.
    pub fn cal_sim<R: Rng + ?Sized>(
        &self,
        graph: &DynamicGraph,
        x: VertexId,
        y: VertexId,
        rng: &mut R,
    ) -> Estimate {
        let nx = graph.inclusive_size(x);
        let ny = graph.inclusive_size(y);
        let beta = self.rho * self.rho / 4.0;
        if nx as f64 <= beta * ny as f64 || ny as f64 <= beta * nx as f64 {
            return Estimate {
                value: 0.0,
                samples: 0,
                exact: false,
                capped: false,
            };
        }
        let budget = sample_count(graph.n(), self.rho, self.measure);
        if self.mode == SampleMode::Auto && nx.min(ny) as u64 <= budget.samples {
            let inter = intersection_size(graph, x, y);
            return Estimate {
                value: self.measure.from_counts(inter, nx, ny),
                samples: 0,
                exact: true,
                capped: false,
            };
        }
        let (samples, capped) = match self.max_samples {
            Some(cap) if cap < budget.samples => (cap, true),
            _ => (budget.samples, false),
        };
        let xbar = sample_hit_rate(graph, x, y, samples, rng);
        Estimate {
            value: self.measure.from_hit_rate(xbar, nx, ny),
            samples,
            exact: false,
            capped,
        }
    }
}
