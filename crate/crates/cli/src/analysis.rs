//! Decide which wave a configuration asks for and build it.

use anyhow::{anyhow, bail, Result};

use netwave::coupling::{
    assemble_nonstationary, assemble_stationary, check_condition_t, check_continuity, check_node, NetworkWave,
};
use netwave::graph_model::{Orientation, StarNetwork};
use netwave::scalar_wave::{boundary_slopes, first_integral_residual, wave_speed, EndStates};
use netwave::special_cases::{
    interval_tables, log_analyze, quad_const_criterion, quad_linear_analyze, FamilyKind, FamilyParams,
    ZeroLeftAnalysis, ZeroLeftOutcome,
};

use crate::config::RunConfig;
use crate::report::{
    NetworkSummary, Real, RoadSummary, RoadWave, SpecialCaseReport, Verdict, WaveReport, WaveSummary,
};

pub struct Analysis {
    pub net: StarNetwork,
    pub wave: Option<NetworkWave>,
    pub report: WaveReport,
}

struct ClosedForm {
    moving: Verdict,
    continuity: Verdict,
    stationary: Verdict,
    ends: Option<Vec<EndStates>>,
    report: SpecialCaseReport,
}

pub fn analyze(cfg: &RunConfig) -> Result<Analysis> {
    let net = cfg.network()?;
    let family = FamilyParams::detect(&net);
    let closed = family.as_ref().map(|(k, p)| closed_form(*k, p)).transpose()?;
    let mut verdicts = vec![];
    if let Some(c) = &closed {
        verdicts.extend([c.stationary.clone(), c.moving.clone(), c.continuity.clone()]);
    }

    let mut condition_t = None;
    let (exists, requested, wave, source) = if let Some(ends_in) = cfg.incoming_ends()? {
        let speeds = ends_in
            .iter()
            .zip(net.incoming())
            .map(|(e, r)| wave_speed(&r.flux, e))
            .collect::<netwave::Result<Vec<_>>>()?;
        if speeds.iter().all(|&c| c == 0.0) {
            match assemble_stationary(&net, &ends_in, cfg.check.method) {
                Ok(w) => {
                    verdicts.push(Verdict::new("stationary wave (given end states)", Some(true), ""));
                    (true, "stationary", Some(w), "the given incoming end states")
                }
                Err(netwave::Error::Precondition(why)) => {
                    verdicts.push(Verdict::new("stationary wave (given end states)", Some(false), why));
                    (false, "stationary", None, "")
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            let t = check_condition_t(&net, &ends_in, &cfg.t_options())?;
            verdicts.push(Verdict::new("condition (T)", Some(t.exists), t.reason.clone()));
            let wave = if t.exists {
                let choice = cfg.ends.as_ref().map_or(0, |e| e.witness);
                let witnesses = t.witnesses();
                let ends_out = witnesses
                    .get(choice)
                    .ok_or_else(|| anyhow!("ends.witness = {choice} but only {} combinations", witnesses.len()))?;
                Some(assemble_nonstationary(&net, &ends_in, ends_out, &[], cfg.check.method)?)
            } else {
                None
            };
            let exists = t.exists;
            condition_t = Some(t);
            (exists, "non-stationary", wave, "the given incoming end states")
        }
    } else if let Some(c) = &closed {
        let wave = match &c.ends {
            Some(ends) => {
                let m = net.m();
                Some(assemble_nonstationary(&net, &ends[..m], &ends[m..], &[], cfg.check.method)?)
            }
            None => None,
        };
        (c.moving.exists == Some(true), "non-stationary", wave, "the closed-form criterion")
    } else {
        bail!("no [ends] given and the network is not one of the closed-form families");
    };

    let wave_summary = wave.as_ref().map(|w| summarize(cfg, &net, w, source)).transpose()?;
    let report = WaveReport {
        network: network_summary(&net, family.as_ref().map(|f| f.0)),
        exists,
        requested,
        verdicts,
        condition_t,
        special_case: closed.map(|c| c.report),
        wave: wave_summary,
        drift: None,
    };
    Ok(Analysis { net, wave, report })
}

fn closed_form(kind: FamilyKind, p: &FamilyParams) -> Result<ClosedForm> {
    let tables = interval_tables(kind, p)?;
    let b = tables.stationary_bound();
    let stationary = Verdict::new(
        "stationary wave",
        Some(b > 0.0),
        format!("incoming left state in [0, {b:.6})"),
    );
    let continuous = p.continuity_relations();
    let continuity = Verdict::new(
        "continuous non-stationary wave",
        Some(continuous),
        if continuous {
            ""
        } else {
            "v^2 = delta and alpha v = 1 do not hold on every outgoing road"
        },
    );
    let (moving, ends, analysis) = match kind {
        FamilyKind::QuadraticConstant => {
            let c = quad_const_criterion(p);
            let failing: Vec<String> = c
                .per_road
                .iter()
                .enumerate()
                .filter(|(_, ok)| !**ok)
                .map(|(j, _)| (j + 1).to_string())
                .collect();
            let detail = if c.exists {
                String::new()
            } else {
                format!("criterion αδ=v fails on outgoing road(s) {}", failing.join(", "))
            };
            (Verdict::new("non-stationary wave", Some(c.exists), detail), None, serde_json::to_value(&c)?)
        }
        FamilyKind::QuadraticLinear => {
            let a = quad_linear_analyze(p)?;
            let (mut v, ends) = zero_left_verdict(&a.degenerate);
            if a.nondegenerate_family {
                v = Verdict::new("non-stationary wave", Some(true), "a family of non-degenerate waves");
            }
            (v, ends, serde_json::to_value(&a)?)
        }
        FamilyKind::LogarithmicConstant => {
            let a = log_analyze(p)?;
            let (v, ends) = zero_left_verdict(&a);
            (v, ends, serde_json::to_value(&a)?)
        }
    };
    Ok(ClosedForm {
        moving,
        continuity,
        stationary,
        ends,
        report: SpecialCaseReport {
            kind,
            params: p.clone(),
            tables,
            analysis,
        },
    })
}

fn zero_left_verdict(a: &ZeroLeftAnalysis) -> (Verdict, Option<Vec<EndStates>>) {
    let name = "non-stationary wave with zero left state";
    match &a.outcome {
        ZeroLeftOutcome::Family => (
            Verdict::new(name, Some(true), "a family, one per incoming right state"),
            None,
        ),
        ZeroLeftOutcome::Unique { ends } => (
            Verdict::new(name, Some(true), "unique up to shifts"),
            Some(ends.clone()),
        ),
        ZeroLeftOutcome::None => {
            let why = if a.window.iter().any(|w| !w) {
                "window condition fails"
            } else {
                "outgoing roads demand different incoming right states"
            };
            (Verdict::new(name, Some(false), why), None)
        }
    }
}

fn summarize(cfg: &RunConfig, net: &StarNetwork, wave: &NetworkWave, source: &'static str) -> Result<WaveSummary> {
    let points = cfg.check.node_points;
    let roads = wave
        .profiles
        .iter()
        .enumerate()
        .map(|(h, p)| {
            let road = net.road(h);
            let e = p.ends();
            let half = if p.speed() == 0.0 { 20.0 } else { 20.0 / p.speed().abs().max(1e-3) };
            let half = half.min(200.0);
            let xi0 = p.position_of(e.mid());
            RoadWave {
                index: h,
                ends: [e.minus, e.plus],
                speed: p.speed(),
                shift: p.shift(),
                nu_minus: Real(p.nu_minus()),
                nu_plus: Real(p.nu_plus()),
                omega: p.omega().map(Real),
                method: p.method(),
                first_integral_residual: first_integral_residual(road, p, xi0 - half, xi0 + half, 1000),
                boundary_slopes: boundary_slopes(road, &e).ok(),
                profile_file: None,
            }
        })
        .collect();
    Ok(WaveSummary {
        source,
        motion: wave.motion(),
        degeneracy: wave.degeneracy(),
        roads,
        node: check_node(net, wave, points),
        continuity: check_continuity(net, wave, points)?,
    })
}

fn network_summary(net: &StarNetwork, family: Option<FamilyKind>) -> NetworkSummary {
    let roads = net
        .roads()
        .iter()
        .enumerate()
        .map(|(h, r)| RoadSummary {
            index: h,
            orientation: match r.orientation {
                Orientation::Incoming => "incoming",
                Orientation::Outgoing => "outgoing",
            },
            flux: law(r.flux.kind(), r.flux.scale(), "v"),
            diffusivity: law(r.diffusivity.kind(), r.diffusivity.scale(), "delta"),
        })
        .collect();
    NetworkSummary {
        incoming: net.m(),
        outgoing: net.n(),
        roads,
        alpha: net.alpha_matrix().to_vec(),
        family,
    }
}

fn law(kind: &str, scale: Option<f64>, name: &str) -> String {
    match scale {
        Some(x) => format!("{kind}({name}={x})"),
        None => kind.to_string(),
    }
}
