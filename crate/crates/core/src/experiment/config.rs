//! Experiment configuration files.
//!
//! A config is a TOML document. Every table rejects unknown keys, and
//! [`ExperimentConfig::validate`] checks every referenced parameter before
//! any compute starts. A minimal disk solve:
//!
//! ```toml
//! experiment = "solve-disk"
//!
//! [grid]
//! domain = "disk"
//! radius = 10.0
//! n = 256
//!
//! [[divisor]]
//! x = 0.0
//! y = 0.0
//! multiplicity = 1
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{EvolutionParams, CFL_LIMIT};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::moduli::{Coordinates, DEFAULT_FD_STEP};
use crate::solver::{check_clearance, SolverParams, ZeroDivisor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SolveDisk,
    SolveTorus,
    BradlowSweep,
    Metric,
    Geodesic,
    Scatter,
    Evolve,
    AdiabaticCompare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::SolveDisk,
        Self::SolveTorus,
        Self::BradlowSweep,
        Self::Metric,
        Self::Geodesic,
        Self::Scatter,
        Self::Evolve,
        Self::AdiabaticCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SolveDisk => "solve-disk",
            Self::SolveTorus => "solve-torus",
            Self::BradlowSweep => "bradlow-sweep",
            Self::Metric => "metric",
            Self::Geodesic => "geodesic",
            Self::Scatter => "scatter",
            Self::Evolve => "evolve",
            Self::AdiabaticCompare => "adiabatic-compare",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Disk,
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub domain: Domain,
    /// Half-width of the disk box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Torus side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    pub n: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid2D> {
        match (self.domain, self.radius, self.side) {
            (Domain::Disk, Some(r), None) => Grid2D::disk(r, self.n),
            (Domain::Torus, None, Some(l)) => Grid2D::torus(l, self.n),
            (Domain::Disk, _, _) => Err(Error::Config("a disk grid takes `radius` and no `side`".into())),
            (Domain::Torus, _, _) => Err(Error::Config("a torus grid takes `side` and no `radius`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default = "one")]
    pub multiplicity: u32,
}

fn one() -> u32 {
    1
}

/// Simple zeros drawn uniformly from `[-spread, spread]^2` with the
/// config's seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDivisor {
    pub degree: u32,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub sample_every: usize,
    pub check_every: usize,
    /// Rigid translation velocity of the initial data.
    pub boost: [f64; 2],
    /// Amplitude of the constraint-preserving perturbation
    /// `phi' = amplitude * exp(-|x - c|^2 / width^2) phi`, `c` the mean zero.
    pub perturbation: f64,
    pub perturbation_width: f64,
    /// Write a GLD1 snapshot every this many steps (0 = none).
    pub snapshot_every: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let p = EvolutionParams::default();
        Self {
            dt: p.dt,
            n_steps: p.n_steps,
            sample_every: p.sample_every,
            check_every: p.check_every,
            boost: [0.0, 0.0],
            perturbation: 0.0,
            perturbation_width: 2.0,
            snapshot_every: 0,
        }
    }
}

impl DynamicsConfig {
    pub fn params(&self, tau: f64) -> EvolutionParams {
        EvolutionParams { dt: self.dt, n_steps: self.n_steps, sample_every: self.sample_every, check_every: self.check_every, tau }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BradlowConfig {
    /// Ascending list of couplings.
    pub taus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub fd_step: f64,
    pub coordinates: Coordinates,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { fd_step: DEFAULT_FD_STEP, coordinates: Coordinates::Chart }
    }
}

/// Radial table of the centred two-vortex metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableConfig {
    /// Largest `|z_1 z_2|` sampled.
    pub rho_max: f64,
    pub points: usize,
    pub fd_step: f64,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self { rho_max: 36.0, points: 25, fd_step: DEFAULT_FD_STEP }
    }
}

/// Two vortices at `+-(-half_separation + i impact_parameter / 2)`, each
/// moving with speed `speed` towards the other along `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicConfig {
    pub half_separation: f64,
    pub impact_parameter: f64,
    pub speed: f64,
    pub t_end: f64,
    pub h_step: f64,
    /// Radius of the ball around coincidence that a scattering trajectory
    /// must enter and leave.
    pub ball_radius: f64,
    pub table: TableConfig,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        Self { half_separation: 4.0, impact_parameter: 0.0, speed: 1.0, t_end: 8.0, h_step: 1e-2, ball_radius: 1.0, table: TableConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterConfig {
    pub impact_parameters: Vec<f64>,
    pub half_separation: f64,
    pub speed: f64,
    pub t_end: f64,
    pub h_step: f64,
    pub table: TableConfig,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self { impact_parameters: vec![0.0], half_separation: 8.0, speed: 1.0, t_end: 16.0, h_step: 1e-2, table: TableConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticConfig {
    /// 1 (a single vortex, flat metric) or 2 (centred pair).
    pub degree: u32,
    pub epsilons: Vec<f64>,
    pub slow_time_end: f64,
    /// For `degree = 2`; for `degree = 1` the vortex starts at `-half_separation`.
    pub half_separation: f64,
    pub impact_parameter: f64,
    /// Zero speed in slow time.
    pub speed: f64,
    pub cfl: f64,
    pub samples: usize,
    pub substeps: usize,
    pub fd_step: f64,
    pub table: TableConfig,
}

impl Default for AdiabaticConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            epsilons: vec![0.2, 0.1, 0.05],
            slow_time_end: 8.0,
            half_separation: 2.0,
            impact_parameter: 0.0,
            speed: 0.25,
            cfl: 0.5,
            samples: 40,
            substeps: 10,
            fd_step: DEFAULT_FD_STEP,
            table: TableConfig { rho_max: 25.0, points: 21, fd_step: DEFAULT_FD_STEP },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be omitted when the command line names the experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub divisor: Vec<ZeroSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_divisor: Option<RandomDivisor>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bradlow: Option<BradlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter: Option<ScatterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adiabatic: Option<AdiabaticConfig>,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be non-negative, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The experiment to run: `requested` if given, which must then agree
    /// with the config's own `experiment` key when both are present.
    pub fn kind(&self, requested: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (requested, self.experiment) {
            (Some(r), Some(c)) if r != c => {
                Err(Error::Config(format!("command asks for `{}` but the config says `{}`", r.name(), c.name())))
            }
            (Some(r), _) => Ok(r),
            (None, Some(c)) => Ok(c),
            (None, None) => Err(Error::Config("no experiment given".into())),
        }
    }

    /// The divisor: explicit zeros, or random ones drawn from the seed.
    pub fn divisor(&self) -> Result<ZeroDivisor> {
        match (&self.random_divisor, self.divisor.is_empty()) {
            (Some(_), false) => Err(Error::Config("give either [[divisor]] or [random_divisor], not both".into())),
            (Some(r), true) => {
                if r.degree == 0 {
                    return Err(Error::InvalidParameter("random divisor degree must be at least 1".into()));
                }
                positive("random_divisor.spread", r.spread)?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let zeros: Vec<Complex64> =
                    (0..r.degree).map(|_| Complex64::new(rng.gen_range(-r.spread..=r.spread), rng.gen_range(-r.spread..=r.spread))).collect();
                ZeroDivisor::simple(&zeros)
            }
            (None, false) => ZeroDivisor::new(self.divisor.iter().map(|z| (Complex64::new(z.x, z.y), z.multiplicity)).collect()),
            (None, true) => Err(Error::Config("this experiment needs [[divisor]] or [random_divisor]".into())),
        }
    }

    /// Checks everything the experiment will use. Nothing is computed or
    /// written before this succeeds.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let grid = self.grid.build()?;
        self.solver.validate()?;
        let need_disk = |what: &str| {
            if grid.is_torus() {
                Err(Error::Config(format!("{what} runs on a disk grid")))
            } else {
                Ok(())
            }
        };
        let divisor = || -> Result<ZeroDivisor> {
            let d = self.divisor()?;
            if !grid.is_torus() {
                check_clearance(&d.expanded(), &grid)?;
            }
            Ok(d)
        };
        match kind {
            ExperimentKind::SolveDisk => {
                need_disk("solve-disk")?;
                divisor()?;
            }
            ExperimentKind::SolveTorus => {
                if !grid.is_torus() {
                    return Err(Error::Config("solve-torus runs on a torus grid".into()));
                }
                let d = divisor()?;
                let margin = crate::solver::bradlow_margin(d.degree(), self.solver.tau, grid.area());
                if margin <= 0.0 {
                    return Err(Error::BradlowViolation { margin });
                }
            }
            ExperimentKind::BradlowSweep => {
                if !grid.is_torus() {
                    return Err(Error::Config("bradlow-sweep runs on a torus grid".into()));
                }
                divisor()?;
                let b = self.bradlow.as_ref().ok_or_else(|| Error::Config("bradlow-sweep needs [bradlow]".into()))?;
                if b.taus.is_empty() {
                    return Err(Error::InvalidParameter("bradlow.taus is empty".into()));
                }
                for &t in &b.taus {
                    positive("bradlow.taus entry", t)?;
                }
                if b.taus.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter("bradlow.taus must be strictly ascending".into()));
                }
            }
            ExperimentKind::Metric => {
                divisor()?;
                let m = self.metric.clone().unwrap_or_default();
                positive("metric.fd_step", m.fd_step)?;
                if grid.is_torus() && m.coordinates == Coordinates::Chart {
                    return Err(Error::Config("torus metrics use coordinates = \"zeros\"".into()));
                }
            }
            ExperimentKind::Geodesic => {
                need_disk("geodesic")?;
                let g = self.geodesic.clone().unwrap_or_default();
                positive("geodesic.half_separation", g.half_separation)?;
                non_negative("geodesic.impact_parameter", g.impact_parameter)?;
                positive("geodesic.speed", g.speed)?;
                positive("geodesic.t_end", g.t_end)?;
                positive("geodesic.h_step", g.h_step)?;
                positive("geodesic.ball_radius", g.ball_radius)?;
                validate_table(&g.table, &grid)?;
            }
            ExperimentKind::Scatter => {
                need_disk("scatter")?;
                let s = self.scatter.clone().unwrap_or_default();
                if s.impact_parameters.is_empty() {
                    return Err(Error::InvalidParameter("scatter.impact_parameters is empty".into()));
                }
                for &b in &s.impact_parameters {
                    non_negative("scatter.impact_parameters entry", b)?;
                }
                positive("scatter.half_separation", s.half_separation)?;
                positive("scatter.speed", s.speed)?;
                positive("scatter.t_end", s.t_end)?;
                positive("scatter.h_step", s.h_step)?;
                validate_table(&s.table, &grid)?;
            }
            ExperimentKind::Evolve => {
                divisor()?;
                let d = self.dynamics.clone().unwrap_or_default();
                d.params(self.solver.tau).validate(&grid)?;
                if !(d.boost[0].is_finite() && d.boost[1].is_finite() && d.perturbation.is_finite()) {
                    return Err(Error::InvalidParameter("boost and perturbation must be finite".into()));
                }
                positive("dynamics.perturbation_width", d.perturbation_width)?;
            }
            ExperimentKind::AdiabaticCompare => {
                need_disk("adiabatic-compare")?;
                let a = self.adiabatic.clone().unwrap_or_default();
                if !(a.degree == 1 || a.degree == 2) {
                    return Err(Error::InvalidParameter(format!("adiabatic.degree must be 1 or 2, got {}", a.degree)));
                }
                if a.epsilons.is_empty() {
                    return Err(Error::InvalidParameter("adiabatic.epsilons is empty".into()));
                }
                for &e in &a.epsilons {
                    positive("adiabatic.epsilons entry", e)?;
                }
                positive("adiabatic.slow_time_end", a.slow_time_end)?;
                positive("adiabatic.half_separation", a.half_separation)?;
                non_negative("adiabatic.impact_parameter", a.impact_parameter)?;
                non_negative("adiabatic.speed", a.speed)?;
                positive("adiabatic.fd_step", a.fd_step)?;
                if !(a.cfl > 0.0 && a.cfl <= CFL_LIMIT) {
                    return Err(Error::CflViolation { ratio: a.cfl, limit: CFL_LIMIT });
                }
                if a.samples == 0 || a.substeps == 0 {
                    return Err(Error::InvalidParameter("adiabatic.samples and substeps must be >= 1".into()));
                }
                if a.degree == 2 {
                    validate_table(&a.table, &grid)?;
                }
                let start = Complex64::new(-a.half_separation, 0.5 * a.impact_parameter);
                check_clearance(&[start, -start], &grid)?;
            }
        }
        Ok(())
    }
}

/// The table solves pairs at `+-sqrt(rho)` for `rho` up to `rho_max` plus the
/// finite-difference step, and all of them must clear the box edge.
fn validate_table(t: &TableConfig, grid: &Grid2D) -> Result<()> {
    positive("table.rho_max", t.rho_max)?;
    positive("table.fd_step", t.fd_step)?;
    if t.points < 4 {
        return Err(Error::InvalidParameter("table.points must be at least 4".into()));
    }
    let reach = (t.rho_max + 2.0 * t.fd_step).sqrt();
    check_clearance(&[Complex64::new(reach, 0.0)], grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = \"solve-disk\"\n[grid]\ndomain = \"disk\"\nradius = 10.0\nn = 64\n[[divisor]]\nx = 0.0\ny = 0.0\n";

    #[test]
    fn minimal_config_parses_and_validates() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.kind(None).unwrap(), ExperimentKind::SolveDisk);
        assert_eq!(c.divisor().unwrap().degree(), 1);
        c.validate(ExperimentKind::SolveDisk).unwrap();
        assert!(c.kind(Some(ExperimentKind::Evolve)).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}colour = 3\n")).is_err());
        let bad = MINIMAL.replace("n = 64", "n = 64\nrdius = 2.0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = format!("{MINIMAL}[solver]\ntolerance = 1e-9\n");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn negative_tau_fails_validation() {
        let c = ExperimentConfig::from_toml(&format!("{MINIMAL}[solver]\ntau = -1.0\n")).unwrap();
        assert!(matches!(c.validate(ExperimentKind::SolveDisk), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn random_divisor_is_seeded() {
        let text = "[grid]\ndomain = \"disk\"\nradius = 10.0\nn = 64\n[random_divisor]\ndegree = 3\nspread = 4.0\n";
        let mut c = ExperimentConfig::from_toml(text).unwrap();
        let a = c.divisor().unwrap();
        assert_eq!(a, c.divisor().unwrap());
        c.seed = 7;
        let b = c.divisor().unwrap();
        assert_ne!(a, b);
        assert!(b.expanded().iter().all(|z| z.re.abs() <= 4.0 && z.im.abs() <= 4.0));
    }

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
            let c: ExperimentConfig =
                toml::from_str(&format!("experiment = \"{}\"\n[grid]\ndomain = \"torus\"\nside = 8.0\nn = 32\n", k.name())).unwrap();
            assert_eq!(c.experiment, Some(k));
        }
    }
}
