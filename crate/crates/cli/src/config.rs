//! TOML run configuration.
//!
//! ```toml
//! alpha = [[0.5, 0.5]]
//!
//! [[roads]]
//! orientation = "incoming"
//! flux = { kind = "quadratic", v = 1.0 }
//! diff = { kind = "constant", delta = 1.0 }
//!
//! [ends]
//! incoming = [[0.1, 0.6]]
//! ```
//!
//! Top-level keys (`alpha`) must precede the first table. See the README for
//! the full schema.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use netwave::coupling::TOptions;
use netwave::graph_model::{Diffusivity, Flux, Orientation, Road, StarNetwork, Tabulated};
use netwave::pde_verify::{NodeClosure, PdeOptions};
use netwave::scalar_wave::{EndStates, ProfileMethod};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Rows are incoming roads, columns outgoing roads.
    pub alpha: Vec<Vec<f64>>,
    pub roads: Vec<RoadConfig>,
    pub ends: Option<EndsConfig>,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadConfig {
    pub orientation: OrientationName,
    pub flux: FluxConfig,
    #[serde(alias = "diffusivity")]
    pub diff: DiffusivityConfig,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationName {
    Incoming,
    Outgoing,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FluxConfig {
    Quadratic { v: f64 },
    Logarithmic { v: f64 },
    Tabulated(TableConfig),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DiffusivityConfig {
    Constant { delta: f64 },
    Linear { delta: f64 },
    Tabulated(TableConfig),
}

/// Hermite data on nodes running from 0 to 1.
#[derive(Debug, Deserialize)]
pub struct TableConfig {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndsConfig {
    /// `[l-, l+]` for each incoming road.
    pub incoming: Vec<[f64; 2]>,
    /// Which accepted combination of outgoing end states to assemble.
    #[serde(default)]
    pub witness: usize,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub points: usize,
    pub half_width: f64,
    pub tol: f64,
    pub method: ProfileMethod,
    /// Grid size for the junction and continuity checks.
    pub node_points: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        let t = TOptions::default();
        Self {
            points: t.points,
            half_width: t.half_width,
            tol: t.tol,
            method: t.method,
            node_points: 201,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
    pub points: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            xi_min: None,
            xi_max: None,
            points: 401,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosureName {
    #[default]
    ExactIncomingTrace,
    Extrapolated,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub length: f64,
    pub dx: f64,
    pub t_final: f64,
    pub cfl: f64,
    pub closure: ClosureName,
    /// Largest accepted sup-norm drift at the fine spacing.
    pub drift_tol: f64,
    /// Smallest accepted coarse/fine drift ratio on non-degenerate waves.
    pub min_ratio: f64,
    /// Largest accepted discrete junction flux residual.
    pub node_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let p = PdeOptions::default();
        Self {
            length: p.length,
            dx: p.dx,
            t_final: p.t_final,
            cfl: p.cfl,
            closure: ClosureName::default(),
            drift_tol: 5e-3,
            min_ratio: 1.7,
            node_tol: 1e-12,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.check;
        ensure!(c.tol > 0.0, "check.tol must be positive");
        ensure!(c.half_width > 0.0, "check.half_width must be positive");
        ensure!(c.points >= 2 && c.node_points >= 2, "check grids need at least 2 points");
        let p = &self.profile;
        ensure!(p.points >= 2, "profile.points must be at least 2");
        if let (Some(a), Some(b)) = (p.xi_min, p.xi_max) {
            ensure!(a < b, "profile.xi_min must be below profile.xi_max");
        }
        let v = &self.verify;
        ensure!(v.dx > 0.0 && v.length > v.dx, "verify needs 0 < dx < length");
        ensure!(v.t_final >= 0.0, "verify.t_final must be non-negative");
        ensure!(v.cfl > 0.0 && v.cfl <= 1.0, "verify.cfl must lie in (0, 1]");
        ensure!(
            v.drift_tol > 0.0 && v.node_tol > 0.0 && v.min_ratio > 0.0,
            "verify tolerances must be positive"
        );
        if let Some(e) = &self.ends {
            for [a, b] in &e.incoming {
                ensure!(
                    (0.0..=1.0).contains(a) && (0.0..=1.0).contains(b),
                    "end states must lie in [0, 1], got [{a}, {b}]"
                );
            }
        }
        Ok(())
    }

    pub fn network(&self) -> Result<StarNetwork> {
        let (mut inc, mut out) = (vec![], vec![]);
        for (h, r) in self.roads.iter().enumerate() {
            let road = r.build().with_context(|| format!("road {h}"))?;
            match r.orientation {
                OrientationName::Incoming => inc.push(road),
                OrientationName::Outgoing => out.push(road),
            }
        }
        Ok(StarNetwork::new(inc, out, self.alpha.clone())?)
    }

    pub fn incoming_ends(&self) -> Result<Option<Vec<EndStates>>> {
        let Some(e) = &self.ends else {
            return Ok(None);
        };
        let m = self.roads.iter().filter(|r| matches!(r.orientation, OrientationName::Incoming)).count();
        if e.incoming.len() != m {
            bail!("ends.incoming has {} entries for {m} incoming roads", e.incoming.len());
        }
        let ends = e
            .incoming
            .iter()
            .map(|[a, b]| EndStates::new(*a, *b))
            .collect::<netwave::Result<_>>()?;
        Ok(Some(ends))
    }

    pub fn t_options(&self) -> TOptions {
        TOptions {
            points: self.check.points,
            half_width: self.check.half_width,
            tol: self.check.tol,
            method: self.check.method,
        }
    }

    pub fn pde_options(&self) -> PdeOptions {
        let v = &self.verify;
        PdeOptions {
            length: v.length,
            dx: v.dx,
            t_final: v.t_final,
            cfl: v.cfl,
            closure: match v.closure {
                ClosureName::ExactIncomingTrace => NodeClosure::ExactIncomingTrace,
                ClosureName::Extrapolated => NodeClosure::Extrapolated,
            },
        }
    }
}

impl RoadConfig {
    fn build(&self) -> Result<Road> {
        let flux = match &self.flux {
            FluxConfig::Quadratic { v } => Flux::quadratic(*v),
            FluxConfig::Logarithmic { v } => Flux::logarithmic(*v),
            FluxConfig::Tabulated(t) => Flux::Tabulated(Tabulated::from_samples(&t.nodes, &t.values, &t.slopes)?),
        };
        let diffusivity = match &self.diff {
            DiffusivityConfig::Constant { delta } => Diffusivity::constant(*delta),
            DiffusivityConfig::Linear { delta } => Diffusivity::linear(*delta),
            DiffusivityConfig::Tabulated(t) => {
                Diffusivity::Tabulated(Tabulated::from_samples(&t.nodes, &t.values, &t.slopes)?)
            }
        };
        let orientation = match self.orientation {
            OrientationName::Incoming => Orientation::Incoming,
            OrientationName::Outgoing => Orientation::Outgoing,
        };
        let road = Road::new(orientation, flux, diffusivity);
        road.validate()?;
        Ok(road)
    }
}
