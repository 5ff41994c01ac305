//! Time stepping of the network problem, used to check that an assembled
//! wave really translates under the parabolic dynamics.
//!
//! Each road is truncated to length `L` and split into cells of width `dx`.
//! The update is conservative in the parabolic flux `F = f - D rho_x`:
//! centred advection where the cell Peclet number is at most 2, Godunov
//! otherwise, and harmonic-mean face diffusivity. Far ends use ghost cells
//! filled from the exact translated profile. At the junction every outgoing
//! road receives `sum_i alpha_ij F_i` through its first face.

use std::sync::Arc;

use serde::Serialize;

use crate::coupling::NetworkWave;
use crate::error::{Error, Result};
use crate::graph_model::{Flux, Orientation, Road, StarNetwork};
use crate::numerics::roots::golden_min;

/// Exact density on a road as a function of `(x, t)`.
pub type Reference = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

const CLIP_TOL: f64 = 1e-12;

/// How the incoming faces at the junction are closed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeClosure {
    /// A ghost cell past the junction on each incoming road, filled from the
    /// reference solution of that road.
    #[default]
    ExactIncomingTrace,
    /// The ghost cell is the linear extrapolation of the last two cells.
    /// Leaves the junction under-determined; kept for comparison.
    Extrapolated,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PdeOptions {
    pub length: f64,
    pub dx: f64,
    pub t_final: f64,
    /// Fraction of the stability bound used as time step.
    pub cfl: f64,
    pub closure: NodeClosure,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self {
            length: 40.0,
            dx: 1e-2,
            t_final: 5.0,
            cfl: 0.9,
            closure: NodeClosure::ExactIncomingTrace,
        }
    }
}

/// Cell densities of one road. Cell `k` is centred at `x[k]`; incoming
/// roads run from `-L` to the junction, outgoing ones from the junction to `L`.
#[derive(Clone, Debug, Serialize)]
pub struct RoadGrid {
    pub road: usize,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscreteNetworkState {
    pub dx: f64,
    pub length: f64,
    pub t: f64,
    pub roads: Vec<RoadGrid>,
}

impl DiscreteNetworkState {
    pub fn mass(&self) -> f64 {
        self.roads
            .iter()
            .map(|r| r.rho.iter().sum::<f64>() * self.dx)
            .sum()
    }
}

/// Bookkeeping of one step.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StepInfo {
    /// `|sum_j F_j - sum_i F_i|` over the junction faces.
    pub node_residual: f64,
    /// `|mass change - dt * (inflow - outflow)|` at the far ends.
    pub mass_residual: f64,
    /// Largest clipping applied to bring densities into `[0, 1]`.
    pub clipped: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub steps: usize,
    pub dt: f64,
    pub max_node_residual: f64,
    pub max_mass_residual: f64,
    pub max_clipped: f64,
}

struct Law {
    flux: Flux,
    diff: crate::graph_model::Diffusivity,
    top: f64,
    fmax: f64,
}

impl Law {
    fn new(road: &Road) -> Self {
        Self {
            flux: road.flux.clone(),
            diff: road.diffusivity.clone(),
            top: road.flux.argmax(),
            fmax: road.flux.max_value(),
        }
    }

    fn godunov(&self, a: f64, b: f64) -> f64 {
        let (fa, fb) = (self.flux.value(a), self.flux.value(b));
        if a <= b {
            fa.min(fb)
        } else if b <= self.top && self.top <= a {
            self.fmax
        } else {
            fa.max(fb)
        }
    }

    /// Flux through the face between cells `a` (left) and `b` (right).
    fn face(&self, a: f64, b: f64, dx: f64) -> f64 {
        let (da, db) = (self.diff.value(a), self.diff.value(b));
        let d = if da > 0.0 && db > 0.0 { 2.0 * da * db / (da + db) } else { 0.0 };
        let speed = self.flux.deriv(0.5 * (a + b)).abs();
        let adv = if speed * dx <= 2.0 * d {
            0.5 * (self.flux.value(a) + self.flux.value(b))
        } else {
            self.godunov(a, b)
        };
        adv - d * (b - a) / dx
    }
}

/// Largest `|f'|` used in the time-step bound. The logarithmic flux has an
/// unbounded slope at 0, so the maximum is taken on `[1e-3, 1]`.
fn max_speed(flux: &Flux) -> f64 {
    (0..=1000)
        .map(|k| flux.deriv((k as f64 / 1000.0).max(1e-3)).abs())
        .fold(0.0, f64::max)
}

/// Largest stable step for these roads and spacing, before the safety factor.
pub fn stability_bound(net: &StarNetwork, dx: f64) -> f64 {
    net.roads()
        .iter()
        .map(|r| {
            let d = r.diffusivity.max_on_grid(1001);
            let s = max_speed(&r.flux);
            let a = if d > 0.0 { dx * dx / (2.0 * d) } else { f64::INFINITY };
            let b = if s > 0.0 { dx / s } else { f64::INFINITY };
            a.min(b)
        })
        .fold(f64::INFINITY, f64::min)
}

pub struct Simulation {
    net: StarNetwork,
    laws: Vec<Law>,
    refs: Vec<Reference>,
    closure: NodeClosure,
    bound: f64,
    pub state: DiscreteNetworkState,
    fluxes: Vec<Vec<f64>>,
}

impl Simulation {
    /// Start from arbitrary reference solutions, one per road; they supply
    /// the initial data and all ghost values.
    pub fn from_reference(net: &StarNetwork, refs: Vec<Reference>, opts: &PdeOptions) -> Result<Self> {
        if refs.len() != net.roads().len() {
            return Err(Error::Precondition("one reference per road required".into()));
        }
        if !(opts.dx > 0.0 && opts.length > opts.dx && opts.cfl > 0.0 && opts.cfl <= 1.0) {
            return Err(Error::Precondition("need 0 < dx < length and 0 < cfl <= 1".into()));
        }
        let cells = (opts.length / opts.dx).round() as usize;
        let dx = opts.dx;
        let roads = net
            .roads()
            .iter()
            .zip(&refs)
            .enumerate()
            .map(|(h, (road, r))| {
                let x: Vec<f64> = (0..cells)
                    .map(|k| match road.orientation {
                        Orientation::Incoming => -opts.length + dx * (k as f64 + 0.5),
                        Orientation::Outgoing => dx * (k as f64 + 0.5),
                    })
                    .collect();
                let rho = x.iter().map(|&x| r(x, 0.0)).collect();
                RoadGrid { road: h, x, rho }
            })
            .collect();
        Ok(Self {
            net: net.clone(),
            laws: net.roads().iter().map(Law::new).collect(),
            refs,
            closure: opts.closure,
            bound: stability_bound(net, dx),
            state: DiscreteNetworkState {
                dx,
                length: cells as f64 * dx,
                t: 0.0,
                roads,
            },
            fluxes: vec![vec![0.0; cells + 1]; net.roads().len()],
        })
    }

    /// Start from an assembled network wave.
    pub fn from_wave(net: &StarNetwork, wave: &NetworkWave, opts: &PdeOptions) -> Result<Self> {
        let refs = wave
            .profiles
            .iter()
            .map(|p| {
                let p = p.clone();
                let c = p.speed();
                Arc::new(move |x: f64, t: f64| p.evaluate(x - c * t)) as Reference
            })
            .collect();
        Self::from_reference(net, refs, opts)
    }

    /// Largest stable time step, before any safety factor.
    pub fn stability_bound(&self) -> f64 {
        self.bound
    }

    pub fn step(&mut self, dt: f64) -> Result<StepInfo> {
        if dt > self.bound {
            return Err(Error::Instability(format!(
                "time step {dt:.3e} exceeds the stability bound; use dt <= {:.3e}",
                self.bound
            )));
        }
        let dx = self.state.dx;
        let len = self.state.length;
        let t = self.state.t;
        let m = self.net.m();
        let mass_before = self.state.mass();
        let mut node_in = vec![0.0; m];
        let (mut inflow, mut outflow) = (0.0, 0.0);

        for (h, grid) in self.state.roads.iter().enumerate() {
            let law = &self.laws[h];
            let rho = &grid.rho;
            let fx = &mut self.fluxes[h];
            let n = rho.len();
            for k in 1..n {
                fx[k] = law.face(rho[k - 1], rho[k], dx);
            }
            let r = &self.refs[h];
            if h < m {
                let far = r(-len - 0.5 * dx, t);
                fx[0] = law.face(far, rho[0], dx);
                let ghost = match self.closure {
                    NodeClosure::ExactIncomingTrace => r(0.5 * dx, t),
                    NodeClosure::Extrapolated => (2.0 * rho[n - 1] - rho[n - 2]).clamp(0.0, 1.0),
                };
                fx[n] = law.face(rho[n - 1], ghost, dx);
                node_in[h] = fx[n];
                inflow += fx[0];
            } else {
                let far = r(len + 0.5 * dx, t);
                fx[n] = law.face(rho[n - 1], far, dx);
                outflow += fx[n];
            }
        }
        let mut node_out_sum = 0.0;
        for j in 0..self.net.n() {
            let fj: f64 = (0..m).map(|i| self.net.alpha(i, j) * node_in[i]).sum();
            self.fluxes[m + j][0] = fj;
            node_out_sum += fj;
        }
        let node_residual = (node_out_sum - node_in.iter().sum::<f64>()).abs();

        let ratio = dt / dx;
        let mut clipped: f64 = 0.0;
        for (grid, fx) in self.state.roads.iter_mut().zip(&self.fluxes) {
            for (k, r) in grid.rho.iter_mut().enumerate() {
                let v = *r - ratio * (fx[k + 1] - fx[k]);
                let c = v.clamp(0.0, 1.0);
                clipped = clipped.max((v - c).abs());
                *r = c;
            }
        }
        if clipped > CLIP_TOL {
            return Err(Error::Instability(format!(
                "density left [0, 1] by {clipped:.3e} at t = {t:.4}; reduce dt below {:.3e}",
                0.5 * dt
            )));
        }
        self.state.t += dt;
        let mass_residual = (self.state.mass() - mass_before - dt * (inflow - outflow)).abs();
        Ok(StepInfo {
            node_residual,
            mass_residual,
            clipped,
        })
    }

    /// Advance to `t_final` with equal steps of at most `cfl` times the bound.
    pub fn run(&mut self, t_final: f64, cfl: f64) -> Result<RunReport> {
        let span = t_final - self.state.t;
        let steps = if span > 0.0 {
            (span / (cfl * self.bound)).ceil() as usize
        } else {
            0
        };
        let dt = if steps > 0 { span / steps as f64 } else { 0.0 };
        let mut rep = RunReport {
            steps,
            dt,
            max_node_residual: 0.0,
            max_mass_residual: 0.0,
            max_clipped: 0.0,
        };
        for _ in 0..steps {
            let s = self.step(dt)?;
            rep.max_node_residual = rep.max_node_residual.max(s.node_residual);
            rep.max_mass_residual = rep.max_mass_residual.max(s.mass_residual);
            rep.max_clipped = rep.max_clipped.max(s.clipped);
        }
        Ok(rep)
    }
}

/// Distance between the computed state and the translated wave.
#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub t: f64,
    /// Sup-norm error after the best per-road shift.
    pub linf: f64,
    pub l2: f64,
    /// Best shift per road.
    pub best_shift: Vec<f64>,
    /// Sup-norm error against the unshifted wave.
    pub linf_unshifted: f64,
}

/// Compare with `phi_h(x - c_h t + sigma)`, minimizing over `sigma` per road.
/// Cells within distance 1 of a sharp front are left out.
pub fn drift(state: &DiscreteNetworkState, wave: &NetworkWave) -> DriftReport {
    let t = state.t;
    let mut rep = DriftReport {
        t,
        linf: 0.0,
        l2: 0.0,
        best_shift: vec![],
        linf_unshifted: 0.0,
    };
    let mut sq = 0.0;
    for (grid, p) in state.roads.iter().zip(&wave.profiles) {
        let c = p.speed();
        let fronts: Vec<f64> = [p.nu_minus(), p.nu_plus()]
            .into_iter()
            .filter(|nu| nu.is_finite())
            .map(|nu| nu + c * t)
            .collect();
        let cells: Vec<(f64, f64)> = grid
            .x
            .iter()
            .zip(&grid.rho)
            .filter(|(x, _)| fronts.iter().all(|f| (**x - f).abs() >= 1.0))
            .map(|(x, r)| (*x, *r))
            .collect();
        let err = |s: f64| {
            cells
                .iter()
                .map(|(x, r)| (r - p.evaluate(x - c * t + s)).abs())
                .fold(0.0, f64::max)
        };
        let s = golden_min(err, -0.5, 0.5, 1e-9);
        let (e0, es) = (err(0.0), err(s));
        let (best, e) = if es <= e0 { (s, es) } else { (0.0, e0) };
        rep.linf = rep.linf.max(e);
        rep.linf_unshifted = rep.linf_unshifted.max(e0);
        rep.best_shift.push(best);
        sq += cells
            .iter()
            .map(|(x, r)| (r - p.evaluate(x - c * t + best)).powi(2))
            .sum::<f64>()
            * state.dx;
    }
    rep.l2 = sq.sqrt();
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub closure: NodeClosure,
    pub coarse_dx: f64,
    pub fine_dx: f64,
    pub coarse: DriftReport,
    pub fine: DriftReport,
    /// `coarse.linf / fine.linf`.
    pub refinement_ratio: f64,
    pub run: RunReport,
}

/// Run at `opts.dx` and at twice that spacing and compare the drifts.
pub fn verify(net: &StarNetwork, wave: &NetworkWave, opts: &PdeOptions) -> Result<VerifyReport> {
    let coarse_opts = PdeOptions {
        dx: 2.0 * opts.dx,
        ..*opts
    };
    let mut coarse = Simulation::from_wave(net, wave, &coarse_opts)?;
    coarse.run(opts.t_final, opts.cfl)?;
    let coarse_drift = drift(&coarse.state, wave);
    let mut fine = Simulation::from_wave(net, wave, opts)?;
    let run = fine.run(opts.t_final, opts.cfl)?;
    let fine_drift = drift(&fine.state, wave);
    Ok(VerifyReport {
        closure: opts.closure,
        coarse_dx: coarse_opts.dx,
        fine_dx: opts.dx,
        refinement_ratio: coarse_drift.linf / fine_drift.linf,
        coarse: coarse_drift,
        fine: fine_drift,
        run,
    })
}
