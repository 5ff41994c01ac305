//! JSON reports and their one-line-per-verdict text form.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use netwave::coupling::{ContinuityReport, Degeneracy, Motion, NodeCheck, TReport};
use netwave::pde_verify::VerifyReport;
use netwave::scalar_wave::BoundarySlopes;
use netwave::special_cases::{FamilyKind, FamilyParams, IntervalTables};

/// A float that serializes `inf`, `-inf` and `nan` as strings instead of `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    /// `None` when the question could not be decided from the inputs.
    pub exists: Option<bool>,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &'static str, exists: Option<bool>, detail: impl Into<String>) -> Self {
        Self {
            name,
            exists,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoadSummary {
    pub index: usize,
    pub orientation: &'static str,
    pub flux: String,
    pub diffusivity: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NetworkSummary {
    pub incoming: usize,
    pub outgoing: usize,
    pub roads: Vec<RoadSummary>,
    pub alpha: Vec<Vec<f64>>,
    pub family: Option<FamilyKind>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecialCaseReport {
    pub kind: FamilyKind,
    pub params: FamilyParams,
    pub tables: IntervalTables,
    /// The closed-form analysis of this family.
    pub analysis: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoadWave {
    pub index: usize,
    pub ends: [f64; 2],
    pub speed: f64,
    pub shift: f64,
    pub nu_minus: Real,
    pub nu_plus: Real,
    pub omega: Option<Real>,
    pub method: &'static str,
    pub first_integral_residual: f64,
    pub boundary_slopes: Option<BoundarySlopes>,
    /// CSV written by `netwave profile`, relative to its output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveSummary {
    /// Where the end states came from.
    pub source: &'static str,
    pub motion: Motion,
    pub degeneracy: Degeneracy,
    pub roads: Vec<RoadWave>,
    pub node: NodeCheck,
    pub continuity: ContinuityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveReport {
    pub network: NetworkSummary,
    /// Whether the requested wave exists; decides the exit status.
    pub exists: bool,
    pub requested: &'static str,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_t: Option<TReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub special_case: Option<SpecialCaseReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<VerifyReport>,
}

impl WaveReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let n = &self.network;
        let family = n.family.map_or(String::new(), |k| format!(" ({} family)", kebab(&k)));
        let _ = writeln!(s, "network: {} incoming, {} outgoing{family}", n.incoming, n.outgoing);
        for v in &self.verdicts {
            let _ = match v.exists {
                Some(true) if v.detail.is_empty() => writeln!(s, "{}: EXISTS", v.name),
                Some(true) => writeln!(s, "{}: EXISTS ({})", v.name, v.detail),
                Some(false) => writeln!(s, "{}: EXISTS: no ({})", v.name, v.detail),
                None => writeln!(s, "{}: undecided ({})", v.name, v.detail),
            };
        }
        if let Some(w) = &self.wave {
            let _ = writeln!(
                s,
                "wave: {}, {} (end states from {})",
                kebab(&w.motion),
                kebab(&w.degeneracy),
                w.source
            );
            for r in &w.roads {
                let _ = writeln!(
                    s,
                    "  road {}: ends ({:.4}, {:.4}), speed {:.6}",
                    r.index, r.ends[0], r.ends[1], r.speed
                );
            }
            let _ = writeln!(
                s,
                "node residual {:.2e}, continuous at junction: {}",
                w.node.max(),
                if w.continuity.continuous { "yes" } else { "no" }
            );
        }
        if let Some(d) = &self.drift {
            let _ = writeln!(
                s,
                "drift {:.3e} at dx {}, {:.3e} at dx {}, ratio {:.3}, node residual {:.1e}",
                d.fine.linf, d.fine_dx, d.coarse.linf, d.coarse_dx, d.refinement_ratio, d.run.max_node_residual
            );
        }
        s
    }
}

/// The serde name of a unit enum variant.
pub fn kebab<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::from("?"),
    }
}
