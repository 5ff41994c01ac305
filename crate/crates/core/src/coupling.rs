//! Traveling waves on the whole network.
//!
//! Given the incoming waves, every outgoing road `j` must carry a wave whose
//! end fluxes satisfy
//!
//! ```text
//! max f_j(l_j^±) = sum_i alpha_ij max f_i(l_i^±)
//! min f_j(l_j^±) = sum_i alpha_ij min f_i(l_i^±)
//! ```
//!
//! which leaves at most four candidate end-state pairs per outgoing road
//! (exactly one when all incoming waves are stationary). A moving network
//! wave exists iff, for some candidate, the profile
//!
//! ```text
//! phi_j(xi) = sum_i A_ij phi_i(c_ij xi) - k_j,   c_ij = c_i / c_j,  A_ij = alpha_ij c_ij
//! ```
//!
//! solves the wave equation of road `j`. In terms of
//! `gamma_h = (g_h - g_h(l_h^-)) / D_h` that is the pointwise identity
//!
//! ```text
//! gamma_j(phi_j(c_j xi)) = sum_i A_ij c_ij gamma_i(phi_i(c_i xi)),
//! ```
//!
//! which [`check_condition_t`] tests on a grid. Sums over `i` skip incoming
//! roads whose wave is stationary.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_model::StarNetwork;
use crate::numerics::roots::bisect;
use crate::scalar_wave::{gamma, wave_speed, EndStates, Profile, ProfileMethod, ReducedFlux};

/// Identity residual accepted by the grid check.
pub const T_TOL: f64 = 1e-7;
/// Trace agreement required for a continuous wave.
pub const CONTINUITY_TOL: f64 = 1e-8;
const LEVEL_TOL: f64 = 1e-13;
const WITNESS_CAP: usize = 64;

fn check_incoming(net: &StarNetwork, ends_in: &[EndStates]) -> Result<Vec<f64>> {
    if ends_in.len() != net.m() {
        return Err(Error::Precondition(format!(
            "expected {} incoming end-state pairs, got {}",
            net.m(),
            ends_in.len()
        )));
    }
    net.incoming()
        .iter()
        .zip(ends_in)
        .map(|(r, e)| wave_speed(&r.flux, e))
        .collect()
}

/// Outcome of the max/min flux matching.
#[derive(Clone, Debug, Serialize)]
pub struct Matching {
    pub incoming_speeds: Vec<f64>,
    /// All incoming waves are stationary.
    pub stationary: bool,
    /// `sum_i alpha_ij max f_i(l_i^±)` for each outgoing `j`.
    pub upper: Vec<f64>,
    /// `sum_i alpha_ij min f_i(l_i^±)` for each outgoing `j`.
    pub lower: Vec<f64>,
    /// Admissible end states for each outgoing road.
    pub candidates: Vec<Vec<EndStates>>,
}

impl Matching {
    pub fn all_solvable(&self) -> bool {
        self.candidates.iter().all(|c| !c.is_empty())
    }
}

pub fn match_end_states(net: &StarNetwork, ends_in: &[EndStates]) -> Result<Matching> {
    let speeds = check_incoming(net, ends_in)?;
    let stationary = speeds.iter().all(|&c| c == 0.0);
    let mut upper = vec![0.0; net.n()];
    let mut lower = vec![0.0; net.n()];
    for (i, (road, e)) in net.incoming().iter().zip(ends_in).enumerate() {
        let (a, b) = (road.flux.value(e.minus), road.flux.value(e.plus));
        for j in 0..net.n() {
            upper[j] += net.alpha(i, j) * a.max(b);
            lower[j] += net.alpha(i, j) * a.min(b);
        }
    }
    let mut candidates = Vec::with_capacity(net.n());
    for (j, road) in net.outgoing().iter().enumerate() {
        let f = &road.flux;
        let fmax = f.max_value();
        let slack = LEVEL_TOL * fmax.max(1.0);
        let mut list: Vec<EndStates> = Vec::new();
        let mut push = |lo: f64, hi: f64, want: f64| {
            if let Ok(e) = EndStates::new(lo, hi) {
                let c = wave_speed(f, &e).unwrap_or(0.0);
                let sign_ok = if want == 0.0 { c == 0.0 } else { c * want > 0.0 };
                let fresh = !list
                    .iter()
                    .any(|o| (o.minus - lo).abs() <= 1e-15 && (o.plus - hi).abs() <= 1e-15);
                if sign_ok && fresh {
                    list.push(e);
                }
            }
        };
        if stationary {
            if fmax > upper[j] {
                push(f.inverse_left(upper[j])?, f.inverse_right(upper[j])?, 0.0);
            }
        } else if fmax >= upper[j] - slack {
            let (ul, ur) = (f.inverse_left(upper[j])?, f.inverse_right(upper[j])?);
            let (ll, lr) = (f.inverse_left(lower[j])?, f.inverse_right(lower[j])?);
            push(ll, ul, 1.0);
            push(ll, ur, 1.0);
            push(ul, lr, -1.0);
            push(ur, lr, -1.0);
        }
        candidates.push(list);
    }
    Ok(Matching {
        incoming_speeds: speeds,
        stationary,
        upper,
        lower,
        candidates,
    })
}

/// Constants tying outgoing profiles to incoming ones.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingConstants {
    /// Speeds of all roads, incoming first.
    pub speeds: Vec<f64>,
    /// Incoming roads whose wave is stationary.
    pub stationary_incoming: Vec<usize>,
    /// `c_ij = c_i / c_j`, zero for stationary incoming roads.
    pub ratio: Vec<Vec<f64>>,
    /// `A_ij = alpha_ij c_ij`.
    pub weight: Vec<Vec<f64>>,
    /// `(L_ij^-, L_ij^+)`: the end states of road `i` in the order seen by `j`.
    pub matched: Vec<Vec<(f64, f64)>>,
    pub k: Vec<f64>,
    /// `kappa_j = c_j k_j`.
    pub kappa: Vec<f64>,
    /// `|sum_i A_ij (L_ij^+ - L_ij^-) - (l_j^+ - l_j^-)|`; zero iff `k_j`
    /// does not depend on which end it is computed from.
    pub end_identity: Vec<f64>,
}

pub fn coupling_constants(
    net: &StarNetwork,
    ends_in: &[EndStates],
    ends_out: &[EndStates],
) -> Result<CouplingConstants> {
    let mut speeds = check_incoming(net, ends_in)?;
    if ends_out.len() != net.n() {
        return Err(Error::Precondition(format!(
            "expected {} outgoing end-state pairs, got {}",
            net.n(),
            ends_out.len()
        )));
    }
    for (road, e) in net.outgoing().iter().zip(ends_out) {
        speeds.push(wave_speed(&road.flux, e)?);
    }
    let m = net.m();
    if let Some(j) = (0..net.n()).find(|&j| speeds[m + j] == 0.0) {
        return Err(Error::ZeroSpeed { road: m + j });
    }
    let stationary_incoming: Vec<usize> = (0..m).filter(|&i| speeds[i] == 0.0).collect();
    let n = net.n();
    let mut ratio = vec![vec![0.0; n]; m];
    let mut weight = vec![vec![0.0; n]; m];
    let mut matched = vec![vec![(0.0, 0.0); n]; m];
    let mut k = vec![0.0; n];
    let mut kappa = vec![0.0; n];
    let mut end_identity = vec![0.0; n];
    for j in 0..n {
        let cj = speeds[m + j];
        let ej = ends_out[j];
        let mut sum_minus = 0.0;
        let mut sum_width = 0.0;
        for i in 0..m {
            let ci = speeds[i];
            matched[i][j] = ends_in[i].swapped_if(ci * cj < 0.0);
            if ci == 0.0 {
                continue;
            }
            ratio[i][j] = ci / cj;
            weight[i][j] = net.alpha(i, j) * ratio[i][j];
            let (lm, lp) = matched[i][j];
            sum_minus += weight[i][j] * lm;
            sum_width += weight[i][j] * (lp - lm);
        }
        k[j] = sum_minus - ej.minus;
        kappa[j] = cj * k[j];
        end_identity[j] = (sum_width - ej.width()).abs();
    }
    Ok(CouplingConstants {
        speeds,
        stationary_incoming,
        ratio,
        weight,
        matched,
        k,
        kappa,
        end_identity,
    })
}

/// Grid and tolerance for [`check_condition_t`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TOptions {
    pub points: usize,
    /// The grid is `[-half_width, half_width] / min |c|`.
    pub half_width: f64,
    pub tol: f64,
    pub method: ProfileMethod,
}

impl Default for TOptions {
    fn default() -> Self {
        Self {
            points: 401,
            half_width: 20.0,
            tol: T_TOL,
            method: ProfileMethod::Auto,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateVerdict {
    pub ends: EndStates,
    pub speed: f64,
    pub k: f64,
    /// Sup of the identity residual over the grid.
    pub residual: f64,
    /// Sup of the right-hand side over the grid; the size of the identity.
    pub scale: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TReport {
    /// A moving network wave exists with the given incoming end states.
    pub exists: bool,
    /// First failing part of the condition: `"i"`, `"ii"` or `"iii"`.
    pub failed: Option<&'static str>,
    pub reason: String,
    pub incoming_speeds: Vec<f64>,
    pub per_outgoing: Vec<Vec<CandidateVerdict>>,
}

impl TReport {
    /// Accepted outgoing end states, one choice per outgoing road. Capped at
    /// 64 combinations.
    pub fn witnesses(&self) -> Vec<Vec<EndStates>> {
        let mut out: Vec<Vec<EndStates>> = vec![vec![]];
        for verdicts in &self.per_outgoing {
            let ok: Vec<EndStates> = verdicts.iter().filter(|v| v.accepted).map(|v| v.ends).collect();
            let mut next = Vec::new();
            for prefix in &out {
                for e in &ok {
                    if next.len() < WITNESS_CAP {
                        let mut p = prefix.clone();
                        p.push(*e);
                        next.push(p);
                    }
                }
            }
            out = next;
        }
        out
    }
}

fn grid(half: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |k| -half + 2.0 * half * k as f64 / (points - 1).max(1) as f64)
}

/// Decide whether a moving network wave exists for the given incoming end
/// states, by testing every candidate of [`match_end_states`].
pub fn check_condition_t(
    net: &StarNetwork,
    ends_in: &[EndStates],
    opts: &TOptions,
) -> Result<TReport> {
    let matching = match_end_states(net, ends_in)?;
    let speeds = matching.incoming_speeds.clone();
    let moving: Vec<usize> = (0..net.m()).filter(|&i| speeds[i] != 0.0).collect();
    let mut report = TReport {
        exists: false,
        failed: None,
        reason: String::new(),
        incoming_speeds: speeds.clone(),
        per_outgoing: vec![],
    };
    if moving.is_empty() {
        report.failed = Some("i");
        report.reason = "every incoming wave is stationary".into();
        return Ok(report);
    }
    if let Some(j) = matching.candidates.iter().position(Vec::is_empty) {
        report.failed = Some("ii");
        report.reason = format!(
            "outgoing road {j}: flux maximum below the required level {}",
            matching.upper[j]
        );
        return Ok(report);
    }
    let profiles: Vec<Option<Profile>> = net
        .incoming()
        .iter()
        .zip(ends_in)
        .zip(&speeds)
        .map(|((r, e), &c)| {
            if c == 0.0 {
                Ok(None)
            } else {
                Profile::build(r, e, opts.method).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let c_in_min = moving.iter().map(|&i| speeds[i].abs()).fold(f64::INFINITY, f64::min);

    for (j, cands) in matching.candidates.iter().enumerate() {
        let road_j = &net.outgoing()[j];
        let mut verdicts = Vec::new();
        for e in cands {
            let rf = ReducedFlux::new(&road_j.flux, e)?;
            let cj = rf.speed();
            let mut k = 0.0;
            let mut terms = Vec::new();
            for &i in &moving {
                let cij = speeds[i] / cj;
                let a = net.alpha(i, j) * cij;
                let (lm, _) = ends_in[i].swapped_if(speeds[i] * cj < 0.0);
                k += a * lm;
                terms.push((i, a, cij));
            }
            k -= e.minus;
            let half = opts.half_width / c_in_min.min(cj.abs());
            let mut residual: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for xi in grid(half, opts.points) {
                let mut level = -k;
                let mut rhs = 0.0;
                for &(i, a, cij) in &terms {
                    let p = profiles[i].as_ref().unwrap();
                    level += a * p.evaluate(speeds[i] * xi);
                    rhs += a * cij * p.slope(speeds[i] * xi);
                }
                let lhs = gamma(road_j, &rf, level.clamp(e.minus, e.plus));
                residual = residual.max((lhs - rhs).abs());
                scale = scale.max(rhs.abs());
                if residual.is_nan() {
                    residual = f64::INFINITY;
                    break;
                }
            }
            verdicts.push(CandidateVerdict {
                ends: *e,
                speed: cj,
                k,
                residual,
                scale,
                accepted: residual <= opts.tol,
            });
        }
        report.per_outgoing.push(verdicts);
    }
    match report
        .per_outgoing
        .iter()
        .position(|v| !v.iter().any(|c| c.accepted))
    {
        Some(j) => {
            let best = report.per_outgoing[j]
                .iter()
                .map(|c| c.residual)
                .fold(f64::INFINITY, f64::min);
            report.failed = Some("iii");
            report.reason = format!(
                "outgoing road {j}: no candidate solves its wave equation (best residual {best:.3e})"
            );
        }
        None => {
            report.exists = true;
            report.reason = "every outgoing road has an admissible candidate".into();
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Motion {
    Stationary,
    CompletelyNonStationary,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degeneracy {
    NonDegenerate,
    Degenerate,
    CompletelyDegenerate,
}

/// One traveling wave per road, incoming roads first.
#[derive(Clone, Debug)]
pub struct NetworkWave {
    pub m: usize,
    pub profiles: Vec<Profile>,
}

impl NetworkWave {
    pub fn ends(&self) -> Vec<EndStates> {
        self.profiles.iter().map(Profile::ends).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.profiles.iter().map(Profile::speed).collect()
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.profiles.iter().map(Profile::shift).collect()
    }

    pub fn incoming(&self) -> &[Profile] {
        &self.profiles[..self.m]
    }

    pub fn outgoing(&self) -> &[Profile] {
        &self.profiles[self.m..]
    }

    pub fn motion(&self) -> Motion {
        let zero = self.speeds().iter().filter(|&&c| c == 0.0).count();
        match zero {
            0 => Motion::CompletelyNonStationary,
            z if z == self.profiles.len() => Motion::Stationary,
            _ => Motion::Mixed,
        }
    }

    pub fn degeneracy(&self) -> Degeneracy {
        let deg = self
            .profiles
            .iter()
            .filter(|p| p.nu_minus().is_finite() || p.nu_plus().is_finite())
            .count();
        match deg {
            0 => Degeneracy::NonDegenerate,
            d if d == self.profiles.len() => Degeneracy::CompletelyDegenerate,
            _ => Degeneracy::Degenerate,
        }
    }

    /// Common `omega_h` of the roads that have a sharp front, or `None` if
    /// no moving road has one.
    pub fn omegas(&self) -> Vec<Option<f64>> {
        self.profiles
            .iter()
            .map(|p| p.omega().filter(|w| w.is_finite()))
            .collect()
    }
}

/// Build a moving network wave from chosen incoming and outgoing end states.
///
/// Incoming profiles are translated by `incoming_shifts` (zero if empty);
/// moving incoming roads should share the ratio `shift / speed`. Each
/// outgoing profile is placed so it coincides with
/// `sum_i A_ij phi_i(c_ij xi) - k_j`.
pub fn assemble_nonstationary(
    net: &StarNetwork,
    ends_in: &[EndStates],
    ends_out: &[EndStates],
    incoming_shifts: &[f64],
    method: ProfileMethod,
) -> Result<NetworkWave> {
    let cc = coupling_constants(net, ends_in, ends_out)?;
    let m = net.m();
    if cc.stationary_incoming.len() == m {
        return Err(Error::Precondition("every incoming wave is stationary".into()));
    }
    let mut profiles = Vec::with_capacity(m + net.n());
    for (i, (road, e)) in net.incoming().iter().zip(ends_in).enumerate() {
        let s = incoming_shifts.get(i).copied().unwrap_or(0.0);
        profiles.push(Profile::build(road, e, method)?.shifted(s));
    }
    for (j, (road, e)) in net.outgoing().iter().zip(ends_out).enumerate() {
        let base = Profile::build(road, e, method)?;
        let formula = |xi: f64| {
            (0..m)
                .filter(|&i| cc.speeds[i] != 0.0)
                .map(|i| cc.weight[i][j] * profiles[i].evaluate(cc.ratio[i][j] * xi))
                .sum::<f64>()
                - cc.k[j]
                - e.mid()
        };
        let mut w = 1.0;
        while (formula(-w) >= 0.0 || formula(w) <= 0.0) && w < 1e12 {
            w *= 2.0;
        }
        let xi0 = bisect(formula, -w, w, 0.0)?;
        profiles.push(base.anchored_at(xi0));
    }
    Ok(NetworkWave { m, profiles })
}

/// Build the stationary network wave for stationary incoming waves.
///
/// When the open intervals `(l_h^-, l_h^+)` of all roads overlap, every
/// profile is translated to take the midpoint of the overlap at `xi = 0`, so
/// the wave is continuous at the junction.
pub fn assemble_stationary(
    net: &StarNetwork,
    ends_in: &[EndStates],
    method: ProfileMethod,
) -> Result<NetworkWave> {
    let matching = match_end_states(net, ends_in)?;
    if !matching.stationary {
        return Err(Error::Precondition("an incoming wave is moving".into()));
    }
    if let Some(j) = matching.candidates.iter().position(Vec::is_empty) {
        return Err(Error::Precondition(format!(
            "outgoing road {j}: flux maximum does not exceed the required level {}",
            matching.upper[j]
        )));
    }
    let ends: Vec<EndStates> = ends_in
        .iter()
        .copied()
        .chain(matching.candidates.iter().map(|c| c[0]))
        .collect();
    let lo = ends.iter().map(|e| e.minus).fold(f64::NEG_INFINITY, f64::max);
    let hi = ends.iter().map(|e| e.plus).fold(f64::INFINITY, f64::min);
    let common = (lo < hi).then_some(0.5 * (lo + hi));
    let profiles = net
        .roads()
        .iter()
        .zip(&ends)
        .map(|(road, e)| {
            let p = Profile::build(road, e, method)?;
            Ok(match common {
                Some(l0) => {
                    let at = p.position_of(l0);
                    p.shifted(at)
                }
                None => p,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NetworkWave {
        m: net.m(),
        profiles,
    })
}

fn trace_window(wave: &NetworkWave) -> f64 {
    let cmin = wave
        .speeds()
        .iter()
        .filter(|c| **c != 0.0)
        .map(|c| c.abs())
        .fold(f64::INFINITY, f64::min);
    if cmin.is_finite() {
        20.0 / cmin
    } else {
        20.0
    }
}

/// Residuals of the junction conditions for an assembled wave.
#[derive(Clone, Debug, Serialize)]
pub struct NodeCheck {
    /// `sup_t max_j |F_j(t, 0+) - sum_i alpha_ij F_i(t, 0-)|`.
    pub coupling: f64,
    /// `sup_t |sum_j F_j - sum_i F_i|`.
    pub conservation: f64,
    /// Same as `coupling` for the limits `t -> +inf` and `t -> -inf`.
    pub limits: f64,
    /// `max_j |max f_j(l_j^±) - sum_i alpha_ij max f_i(l_i^±)|`.
    pub upper: f64,
    /// `max_j |min f_j(l_j^±) - sum_i alpha_ij min f_i(l_i^±)|`.
    pub lower: f64,
}

impl NodeCheck {
    pub fn max(&self) -> f64 {
        self.coupling.max(self.conservation).max(self.limits).max(self.upper).max(self.lower)
    }
}

pub fn check_node(net: &StarNetwork, wave: &NetworkWave, points: usize) -> NodeCheck {
    let m = net.m();
    let half = trace_window(wave);
    let fluxes_at = |t: f64| -> Vec<f64> {
        wave.profiles
            .iter()
            .map(|p| p.parabolic_flux(-p.speed() * t))
            .collect()
    };
    let limit = |sign: f64| -> Vec<f64> {
        wave.profiles
            .iter()
            .map(|p| {
                let e = p.ends();
                let f = &p.road().flux;
                let c = p.speed();
                if c * sign > 0.0 {
                    f.value(e.minus)
                } else if c * sign < 0.0 {
                    f.value(e.plus)
                } else {
                    p.reduced_flux().end_value()
                }
            })
            .collect()
    };
    let mismatch = |fl: &[f64]| -> (f64, f64) {
        let mut worst: f64 = 0.0;
        for j in 0..net.n() {
            let mix: f64 = (0..m).map(|i| net.alpha(i, j) * fl[i]).sum();
            worst = worst.max((fl[m + j] - mix).abs());
        }
        let sum_in: f64 = fl[..m].iter().sum();
        let sum_out: f64 = fl[m..].iter().sum();
        (worst, (sum_out - sum_in).abs())
    };
    let mut coupling: f64 = 0.0;
    let mut conservation: f64 = 0.0;
    for t in grid(half, points) {
        let (a, b) = mismatch(&fluxes_at(t));
        coupling = coupling.max(a);
        conservation = conservation.max(b);
    }
    let limits = mismatch(&limit(1.0)).0.max(mismatch(&limit(-1.0)).0);
    let ext = |p: &Profile| {
        let e = p.ends();
        let f = &p.road().flux;
        let (a, b) = (f.value(e.minus), f.value(e.plus));
        (a.max(b), a.min(b))
    };
    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    for j in 0..net.n() {
        let (mut u, mut l) = (0.0, 0.0);
        for i in 0..m {
            let (a, b) = ext(&wave.profiles[i]);
            u += net.alpha(i, j) * a;
            l += net.alpha(i, j) * b;
        }
        let (a, b) = ext(&wave.profiles[m + j]);
        upper = upper.max((a - u).abs());
        lower = lower.max((b - l).abs());
    }
    NodeCheck {
        coupling,
        conservation,
        limits,
        upper,
        lower,
    }
}

/// Largest `|c_j sigma_i - c_i sigma_j|` over moving incoming `i` and
/// outgoing `j`.
pub fn shift_residual(wave: &NetworkWave) -> f64 {
    let c = wave.speeds();
    let s = wave.shifts();
    let m = wave.m;
    let mut worst: f64 = 0.0;
    for i in (0..m).filter(|&i| c[i] != 0.0) {
        for j in m..c.len() {
            worst = worst.max((c[j] * s[i] - c[i] * s[j]).abs());
        }
    }
    worst
}

/// Relations every continuous moving wave satisfies.
#[derive(Clone, Debug, Serialize)]
pub struct ContinuityRelations {
    /// `max_j |c_j - sum_i alpha_ij c_i|`.
    pub speed_average: f64,
    /// `|sum_j c_j - sum_i c_i|`.
    pub speed_sum: f64,
    /// `max_j |kappa_j|`.
    pub kappa: f64,
    /// `max_j |sum_i A_ij - 1|`.
    pub weight_sum: f64,
    /// Largest difference of end states between roads.
    pub ends: f64,
}

impl ContinuityRelations {
    pub fn max(&self) -> f64 {
        self.speed_average
            .max(self.speed_sum)
            .max(self.kappa)
            .max(self.weight_sum)
            .max(self.ends)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuityReport {
    pub continuous: bool,
    /// `sup_t max_h |phi_h(c_h t) - phi_1(c_1 t)|`.
    pub trace_gap: f64,
    pub relations: Option<ContinuityRelations>,
    /// `phi_1`, so that the common trace is `phi_1(c_1 t)`.
    #[serde(skip_serializing)]
    pub common: Option<Profile>,
}

/// Whether all roads show the same density at the junction at all times.
pub fn check_continuity(net: &StarNetwork, wave: &NetworkWave, points: usize) -> Result<ContinuityReport> {
    let half = trace_window(wave);
    let first = &wave.profiles[0];
    let mut gap: f64 = 0.0;
    for t in grid(half, points) {
        let base = first.evaluate(first.speed() * t);
        for p in &wave.profiles[1..] {
            gap = gap.max((p.evaluate(p.speed() * t) - base).abs());
        }
    }
    let relations = if wave.motion() == Motion::Stationary {
        None
    } else {
        let ends = wave.ends();
        let m = net.m();
        let c = wave.speeds();
        let cc = coupling_constants(net, &ends[..m], &ends[m..])?;
        let mut r = ContinuityRelations {
            speed_average: 0.0,
            speed_sum: (c[m..].iter().sum::<f64>() - c[..m].iter().sum::<f64>()).abs(),
            kappa: cc.kappa.iter().fold(0.0, |a, k| a.max(k.abs())),
            weight_sum: 0.0,
            ends: 0.0,
        };
        for j in 0..net.n() {
            let avg: f64 = (0..m).map(|i| net.alpha(i, j) * c[i]).sum();
            r.speed_average = r.speed_average.max((c[m + j] - avg).abs());
            let ws: f64 = (0..m).map(|i| cc.weight[i][j]).sum();
            r.weight_sum = r.weight_sum.max((ws - 1.0).abs());
        }
        for e in &ends[1..] {
            r.ends = r.ends.max((e.minus - ends[0].minus).abs()).max((e.plus - ends[0].plus).abs());
        }
        Some(r)
    };
    let continuous =
        gap <= CONTINUITY_TOL && relations.as_ref().is_none_or(|r| r.max() <= CONTINUITY_TOL);
    Ok(ContinuityReport {
        continuous,
        trace_gap: gap,
        relations,
        common: continuous.then(|| first.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{Diffusivity, Flux, Road};

    fn quad_net(v_in: f64, d_in: Diffusivity, outs: &[(f64, Diffusivity)], alpha: Vec<f64>) -> StarNetwork {
        StarNetwork::new(
            vec![Road::incoming(Flux::quadratic(v_in), d_in)],
            outs.iter()
                .map(|(v, d)| Road::outgoing(Flux::quadratic(*v), d.clone()))
                .collect(),
            vec![alpha],
        )
        .unwrap()
    }

    fn e(a: f64, b: f64) -> EndStates {
        EndStates::new(a, b).unwrap()
    }

    #[test]
    fn double_root_candidate() {
        let net = quad_net(1.0, Diffusivity::constant(1.0), &[(1.0, Diffusivity::constant(1.0))], vec![1.0]);
        let mt = match_end_states(&net, &[e(0.0, 0.5)]).unwrap();
        assert!(!mt.stationary);
        let c = &mt.candidates[0];
        assert!(c.iter().any(|x| x.minus == 0.0 && (x.plus - 0.5).abs() < 1e-15));
        assert!(c.len() <= 4);
    }

    #[test]
    fn stationary_matching_is_unique() {
        let net = quad_net(1.0, Diffusivity::constant(1.0), &[(2.0, Diffusivity::constant(1.0))], vec![1.0]);
        let mt = match_end_states(&net, &[e(0.2, 0.8)]).unwrap();
        assert!(mt.stationary);
        assert_eq!(mt.candidates[0].len(), 1);
        let c = mt.candidates[0][0];
        // 2 l (1 - l) = 0.16
        assert!((2.0 * c.minus * (1.0 - c.minus) - 0.16).abs() < 1e-15);
        assert!((c.minus + c.plus - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_matching_needs_strict_room() {
        // outgoing maximum 0.25 equals the incoming level: no stationary wave
        let net = quad_net(1.0, Diffusivity::constant(1.0), &[(1.0, Diffusivity::constant(1.0))], vec![1.0]);
        let mt = match_end_states(&net, &[e(0.0, 1.0)]).unwrap();
        assert_eq!(mt.candidates[0].len(), 1);
        let net = quad_net(4.0, Diffusivity::constant(1.0), &[(1.0, Diffusivity::constant(1.0))], vec![1.0]);
        let mt = match_end_states(&net, &[e(0.5 - 0.5f64.sqrt() / 2.0 + 0.1, 0.5 + 0.5f64.sqrt() / 2.0 - 0.1)])
            .unwrap();
        assert!(mt.stationary);
        assert!(mt.candidates[0].is_empty());
    }

    #[test]
    fn degenerate_example_accepts_one_candidate() {
        let net = quad_net(1.0, Diffusivity::linear(4.0), &[(1.0, Diffusivity::linear(1.0))], vec![1.0]);
        let rep = check_condition_t(&net, &[e(0.0, 0.2)], &TOptions::default()).unwrap();
        assert!(rep.exists, "{}", rep.reason);
        let ok: Vec<_> = rep.per_outgoing[0].iter().filter(|c| c.accepted).collect();
        assert_eq!(ok.len(), 1);
        assert_eq!(ok[0].ends.minus, 0.0);
        assert!((ok[0].ends.plus - 0.8).abs() < 1e-12);
    }

    #[test]
    fn all_stationary_fails_first_part() {
        let net = quad_net(1.0, Diffusivity::constant(1.0), &[(1.0, Diffusivity::constant(1.0))], vec![1.0]);
        let rep = check_condition_t(&net, &[e(0.3, 0.7)], &TOptions::default()).unwrap();
        assert_eq!(rep.failed, Some("i"));
    }

    #[test]
    fn unreachable_level_fails_second_part() {
        let net = quad_net(4.0, Diffusivity::constant(1.0), &[(1.0, Diffusivity::constant(1.0))], vec![1.0]);
        let rep = check_condition_t(&net, &[e(0.1, 0.5)], &TOptions::default()).unwrap();
        assert_eq!(rep.failed, Some("ii"));
    }

    #[test]
    fn zero_outgoing_speed_is_an_error() {
        let net = quad_net(1.0, Diffusivity::constant(1.0), &[(1.0, Diffusivity::constant(1.0))], vec![1.0]);
        let err = coupling_constants(&net, &[e(0.1, 0.5)], &[e(0.3, 0.7)]).unwrap_err();
        assert_eq!(err, Error::ZeroSpeed { road: 1 });
    }

    #[test]
    fn constants_for_identical_roads() {
        let net = quad_net(1.0, Diffusivity::constant(1.0), &[(1.0, Diffusivity::constant(1.0))], vec![1.0]);
        let cc = coupling_constants(&net, &[e(0.1, 0.5)], &[e(0.1, 0.5)]).unwrap();
        assert!((cc.weight[0][0] - 1.0).abs() < 1e-15);
        assert!(cc.k[0].abs() < 1e-15 && cc.end_identity[0] < 1e-15);
    }

    #[test]
    fn assembled_wave_satisfies_node_conditions() {
        let net = quad_net(
            1.0,
            Diffusivity::constant(1.0),
            &[(2.0, Diffusivity::constant(1.0)), (2.0, Diffusivity::constant(1.0))],
            vec![0.5, 0.5],
        );
        let ein = e(0.1, 0.6);
        let rep = check_condition_t(&net, &[ein], &TOptions::default()).unwrap();
        assert!(rep.exists);
        for w in rep.witnesses() {
            let wave = assemble_nonstationary(&net, &[ein], &w, &[], ProfileMethod::Auto).unwrap();
            let nc = check_node(&net, &wave, 401);
            assert!(nc.coupling < 1e-7 && nc.limits < 1e-10, "{nc:?}");
        }
    }

    #[test]
    fn stationary_wave_is_continuous_when_intervals_overlap() {
        let net = quad_net(1.0, Diffusivity::constant(1.0), &[(2.0, Diffusivity::constant(3.0))], vec![1.0]);
        let wave = assemble_stationary(&net, &[e(0.2, 0.8)], ProfileMethod::Auto).unwrap();
        assert_eq!(wave.motion(), Motion::Stationary);
        let cont = check_continuity(&net, &wave, 401).unwrap();
        assert!(cont.continuous, "{}", cont.trace_gap);
        let nc = check_node(&net, &wave, 401);
        assert!(nc.max() < 1e-12);
    }
}
