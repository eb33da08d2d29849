//! The JSON run configuration.

use serde::{Deserialize, Serialize};

use pinch_core::combiner::PinchPlan;
use pinch_core::jet::FdConfig;
use pinch_core::optimize::OptimizerConfig;
use pinch_core::zoo::{self, QuadConfig, ZooEntry};
use pinch_core::{DomainSpec, Point, Result, SampleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Curvature,
    Compare,
    Pinch,
    Verify,
    Squeeze,
}

/// A metric from the zoo, by name and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean { n: usize },
    BallBergman { radius: f64, n: usize },
    PolydiscBergman { radii: Vec<f64> },
    /// Truncated Bergman kernel of the configured Reinhardt domain.
    ReinhardtBergman {
        degree: usize,
        #[serde(default)]
        quad: Option<QuadConfig>,
        #[serde(default)]
        fd: Option<FdConfig>,
    },
    Scaled { factor: f64, metric: Box<MetricSpec> },
    Sum { h: Box<MetricSpec>, g: Box<MetricSpec> },
    Bump { base: Box<MetricSpec>, epsilon: f64, center: Point, radius: f64 },
}

impl MetricSpec {
    pub fn build(&self, domain: &DomainSpec) -> Result<ZooEntry> {
        match self {
            MetricSpec::Euclidean { n } => Ok(zoo::euclidean(*n)),
            MetricSpec::BallBergman { radius, n } => zoo::ball_bergman(*radius, *n),
            MetricSpec::PolydiscBergman { radii } => zoo::polydisc_bergman(radii.clone()),
            MetricSpec::ReinhardtBergman { degree, quad, fd } => {
                zoo::reinhardt_bergman(domain, *degree, quad.unwrap_or_default(), fd.unwrap_or_default())
            }
            MetricSpec::Scaled { factor, metric } => zoo::scale(*factor, &metric.build(domain)?),
            MetricSpec::Sum { h, g } => zoo::sum(&h.build(domain)?, &g.build(domain)?),
            MetricSpec::Bump { base, epsilon, center, radius } => {
                zoo::bump_perturbation(&base.build(domain)?, *epsilon, center.clone(), *radius, domain)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    Compact { delta: f64 },
    Collar { delta_out: f64, delta_in: f64 },
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    #[serde(flatten)]
    pub kind: RegionKind,
    #[serde(default = "default_density")]
    pub density: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_density() -> usize {
    200
}

impl RegionConfig {
    pub fn sample(&self, domain: &DomainSpec) -> Result<SampleSet> {
        match self.kind {
            RegionKind::Compact { delta } => domain.sample_compact(delta, self.density, self.seed),
            RegionKind::Collar { delta_out, delta_in } => domain.sample_collar(delta_out, delta_in, self.density, self.seed),
            RegionKind::Global => domain.sample_global(self.density, self.seed),
        }
    }
}

fn default_tol() -> f64 {
    1e-6
}

/// Everything a run needs. Unused sections are ignored by the other commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub domain: DomainSpec,
    /// The metric for `curvature` and `pinch`.
    #[serde(default)]
    pub metric: Option<MetricSpec>,
    /// The pair for `compare`.
    #[serde(default)]
    pub h: Option<MetricSpec>,
    #[serde(default)]
    pub g: Option<MetricSpec>,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub pinch: Option<PinchPlan>,
    /// Extra radii `R` at which `pinch` reruns the pipeline to show how the
    /// constants depend on the choice of ball.
    #[serde(default)]
    pub radius_sweep: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol_curv: f64,
    /// Suite for `verify`; `--suite` takes precedence.
    #[serde(default)]
    pub suite: Option<String>,
    /// Explicit points for `squeeze`; otherwise `region` is sampled.
    #[serde(default)]
    pub points: Option<Vec<Point>>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl RunConfig {
    /// Applies `--seed` everywhere a seed is read.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(r) = &mut self.region {
            r.seed = seed;
        }
        if let Some(p) = &mut self.pinch {
            p.seed = seed;
        }
        self.optimizer.seed = seed;
    }
}
