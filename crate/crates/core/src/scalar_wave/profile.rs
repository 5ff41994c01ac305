//! Wave profiles.
//!
//! The quadratic flux has closed forms with constant or linear diffusivity.
//! Everything else goes through the quadrature
//!
//! ```text
//! xi(phi) = int_{mid}^{phi} D(s) / (g(s) - g(l-)) ds,   mid = (l- + l+) / 2
//! ```
//!
//! evaluated in the log-offset variable `tau = ln(phi - l-)` on the left half
//! and `tau = ln(l+ - phi)` on the right half. In that variable the
//! logarithmic endpoint singularity becomes a bounded integrand, so a panel
//! table down to offsets of `1e-304` captures the whole approach to the end
//! state, and a front at finite `xi` shows up as a convergent tail.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{classify, EndStates, ReducedFlux};
use crate::error::{Error, Result};
use crate::graph_model::{Diffusivity, Flux, Road};
use crate::numerics::quad::{gk15, integrate};
use crate::numerics::roots::bisect;

const TAU_FLOOR: f64 = -700.0;
const QUAD_REL_TOL: f64 = 1e-14;
const QUAD_PIECES: usize = 200;
const FRONT_TOL: f64 = 1e-6;

/// How [`Profile::build`] obtains the profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMethod {
    /// Closed form when one is known, quadrature otherwise.
    #[default]
    Auto,
    /// Always the quadrature, even when a closed form exists.
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// A point of the profile: which half it lies on and its distance to that
/// half's end state.
#[derive(Clone, Copy, Debug)]
struct Point {
    side: Side,
    offset: f64,
}

#[derive(Clone, Debug)]
enum Repr {
    /// Quadratic flux, constant diffusivity.
    Logistic { rate: f64 },
    /// Quadratic flux, linear diffusivity, `l- = 0`.
    LinearFront { k: f64 },
    /// Quadratic flux, linear diffusivity, `l- > 0`; `psi` is implicit.
    LinearImplicit { k: f64 },
    Quadrature(Arc<QuadTable>),
}

/// A traveling-wave profile `phi(xi)`, normalised so that
/// `phi(-shift) = (l- + l+) / 2`.
#[derive(Clone, Debug)]
pub struct Profile {
    road: Road,
    rf: ReducedFlux,
    shift: f64,
    repr: Repr,
}

impl Profile {
    pub fn build(road: &Road, ends: &EndStates, method: ProfileMethod) -> Result<Self> {
        let rf = ReducedFlux::new(&road.flux, ends)?;
        let closed = match (method, &road.flux, &road.diffusivity) {
            (ProfileMethod::Auto, Flux::Quadratic { v }, Diffusivity::Constant { delta }) => {
                Some(Repr::Logistic {
                    rate: v / delta * ends.width(),
                })
            }
            (ProfileMethod::Auto, Flux::Quadratic { v }, Diffusivity::Linear { delta }) => {
                let k = v / delta;
                Some(if ends.minus == 0.0 {
                    Repr::LinearFront { k }
                } else {
                    Repr::LinearImplicit { k }
                })
            }
            _ => None,
        };
        let repr = match closed {
            Some(r) => r,
            None => Repr::Quadrature(Arc::new(QuadTable::build(road, &rf)?)),
        };
        Ok(Self {
            road: road.clone(),
            rf,
            shift: 0.0,
            repr,
        })
    }

    /// The same wave translated: `new.evaluate(xi) == self.evaluate(xi + sigma)`.
    pub fn shifted(&self, sigma: f64) -> Self {
        let mut p = self.clone();
        p.shift += sigma;
        p
    }

    /// The same wave translated so that it takes its mid value at `xi0`.
    pub fn anchored_at(&self, xi0: f64) -> Self {
        let mut p = self.clone();
        p.shift = -xi0;
        p
    }

    pub fn method(&self) -> &'static str {
        match self.repr {
            Repr::Logistic { .. } => "logistic",
            Repr::LinearFront { .. } => "linear-front",
            Repr::LinearImplicit { .. } => "linear-implicit",
            Repr::Quadrature(_) => "quadrature",
        }
    }

    pub fn road(&self) -> &Road {
        &self.road
    }

    pub fn reduced_flux(&self) -> &ReducedFlux {
        &self.rf
    }

    pub fn ends(&self) -> EndStates {
        self.rf.ends()
    }

    pub fn speed(&self) -> f64 {
        self.rf.speed()
    }

    /// `sigma` in `phi(xi) = psi(xi + sigma)`, `psi` the mid-normalised profile.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Where the profile reaches `l-`; `-inf` when it only does so
    /// asymptotically.
    pub fn nu_minus(&self) -> f64 {
        self.base_nu(Side::Left) - self.shift
    }

    /// Where the profile reaches `l+`; `+inf` when it only does so
    /// asymptotically.
    pub fn nu_plus(&self) -> f64 {
        self.base_nu(Side::Right) - self.shift
    }

    /// `min(nu-/c, nu+/c)` for a moving wave; `None` for a stationary one.
    pub fn omega(&self) -> Option<f64> {
        let c = self.speed();
        (c != 0.0).then(|| (self.nu_minus() / c).min(self.nu_plus() / c))
    }

    pub fn evaluate(&self, xi: f64) -> f64 {
        self.phi_of(self.base_point(xi + self.shift))
    }

    /// `phi'(xi)`, from the first integral at the evaluated height.
    pub fn slope(&self, xi: f64) -> f64 {
        let p = self.base_point(xi + self.shift);
        if p.offset <= 0.0 {
            return 0.0;
        }
        let (rho, gap) = match p.side {
            Side::Left => (self.ends().minus + p.offset, self.rf.gap_left(p.offset)),
            Side::Right => (self.ends().plus - p.offset, self.rf.gap_right(p.offset)),
        };
        let d = self.road.diffusivity.value(rho);
        if d == 0.0 {
            0.0
        } else {
            gap / d
        }
    }

    /// Parabolic flux `f(phi) - D(phi) phi'` at `xi`.
    pub fn parabolic_flux(&self, xi: f64) -> f64 {
        let phi = self.evaluate(xi);
        self.road.flux.value(phi) - self.road.diffusivity.value(phi) * self.slope(xi)
    }

    /// The `xi` at which the profile takes the value `phi`.
    pub fn position_of(&self, phi: f64) -> f64 {
        let e = self.ends();
        let point = if phi <= e.mid() {
            Point {
                side: Side::Left,
                offset: phi - e.minus,
            }
        } else {
            Point {
                side: Side::Right,
                offset: e.plus - phi,
            }
        };
        self.base_position(point) - self.shift
    }

    /// `(xi, phi, phi')` on a uniform grid.
    pub fn sample(&self, xi_min: f64, xi_max: f64, points: usize) -> Vec<[f64; 3]> {
        (0..points)
            .map(|k| {
                let xi = xi_min + (xi_max - xi_min) * k as f64 / (points - 1).max(1) as f64;
                [xi, self.evaluate(xi), self.slope(xi)]
            })
            .collect()
    }

    fn phi_of(&self, p: Point) -> f64 {
        let e = self.ends();
        match p.side {
            Side::Left => (e.minus + p.offset).min(e.plus),
            Side::Right => (e.plus - p.offset).max(e.minus),
        }
    }

    fn base_nu(&self, side: Side) -> f64 {
        let inf = match side {
            Side::Left => f64::NEG_INFINITY,
            Side::Right => f64::INFINITY,
        };
        match &self.repr {
            Repr::LinearFront { k } if side == Side::Left => -std::f64::consts::LN_2 / k,
            Repr::Quadrature(t) => t.nu(side),
            _ => inf,
        }
    }

    fn base_point(&self, eta: f64) -> Point {
        let e = self.ends();
        let side = if eta <= 0.0 { Side::Left } else { Side::Right };
        let offset = match &self.repr {
            Repr::Logistic { rate } => {
                let t = rate * eta.abs();
                e.width() / (1.0 + t.exp())
            }
            Repr::LinearFront { k } => {
                if eta <= 0.0 {
                    let s = -k * eta - std::f64::consts::LN_2;
                    if s >= 0.0 {
                        0.0
                    } else {
                        -e.plus * s.exp_m1()
                    }
                } else {
                    0.5 * e.plus * (-k * eta).exp()
                }
            }
            Repr::LinearImplicit { k } => implicit_offset(&e, *k, side, eta),
            Repr::Quadrature(t) => t.offset(side, eta),
        };
        Point { side, offset }
    }

    fn base_position(&self, p: Point) -> f64 {
        let e = self.ends();
        if p.offset <= 0.0 {
            return self.base_nu(p.side);
        }
        match &self.repr {
            Repr::Logistic { rate } => {
                let other = e.width() - p.offset;
                let r = (p.offset / other).ln() / rate;
                match p.side {
                    Side::Left => r,
                    Side::Right => -r,
                }
            }
            Repr::LinearFront { k } => {
                let w = match p.side {
                    Side::Left => e.plus - p.offset,
                    Side::Right => p.offset,
                };
                -(2.0 * w / e.plus).ln() / k
            }
            Repr::LinearImplicit { k } => implicit_position(&e, *k, p.side, p.offset.ln()),
            Repr::Quadrature(t) => t.position(p.side, p.offset.ln()),
        }
    }
}

/// `xi` as a function of `tau = ln(offset)` for the implicit linear-diffusion
/// profile,
/// `[2 e^{k xi} (psi - l-) / dl]^{l-} = [2 e^{k xi} (l+ - psi) / dl]^{l+}`.
fn implicit_position(e: &EndStates, k: f64, side: Side, tau: f64) -> f64 {
    let dl = e.width();
    let (lm, lp) = (e.minus, e.plus);
    let rel = (tau.exp() / dl).min(1.0);
    let log_rel = tau - dl.ln();
    let num = match side {
        Side::Left => lm * log_rel - lp * (-rel).ln_1p(),
        Side::Right => lm * (-rel).ln_1p() - lp * log_rel,
    };
    (num - dl * std::f64::consts::LN_2) / (dl * k)
}

fn implicit_offset(e: &EndStates, k: f64, side: Side, eta: f64) -> f64 {
    let top = (0.5 * e.width()).ln();
    // |xi| grows as the offset shrinks on either side
    let h = |tau: f64| eta.abs() - implicit_position(e, k, side, tau).abs();
    if h(TAU_FLOOR) > 0.0 {
        return 0.0;
    }
    match bisect(h, TAU_FLOOR, top, 0.0) {
        Ok(tau) => tau.exp(),
        Err(_) => 0.5 * e.width(),
    }
}

/// Panel table of `xi(tau)` for one half of a quadrature profile.
#[derive(Debug)]
struct HalfTable {
    /// Panel edges, descending from the mid value's `tau`.
    taus: Vec<f64>,
    /// `|xi|` at the panel edges, ascending from 0.
    xis: Vec<f64>,
    front: bool,
}

#[derive(Debug)]
struct QuadTable {
    road: Road,
    rf: ReducedFlux,
    left: HalfTable,
    right: HalfTable,
}

impl QuadTable {
    fn build(road: &Road, rf: &ReducedFlux) -> Result<Self> {
        let class = classify(road, &rf.ends())?;
        let mut t = QuadTable {
            road: road.clone(),
            rf: rf.clone(),
            left: HalfTable {
                taus: vec![],
                xis: vec![],
                front: class.finite_left,
            },
            right: HalfTable {
                taus: vec![],
                xis: vec![],
                front: class.finite_right,
            },
        };
        t.left = t.build_half(Side::Left, class.finite_left)?;
        t.right = t.build_half(Side::Right, class.finite_right)?;
        for side in [Side::Left, Side::Right] {
            let half = t.half(side);
            if half.front {
                // The tail beyond tau = -40 must be negligible for a true front.
                let probe = (-40.0f64).min(half.taus[0] - 1.0);
                let gap = (t.abs_xi(side, probe) - half.xis.last().unwrap()).abs();
                if gap > FRONT_TOL {
                    return Err(Error::Convergence(format!(
                        "front integral not converged on the {side:?} side (tail {gap:e})"
                    )));
                }
            }
        }
        Ok(t)
    }

    fn half(&self, side: Side) -> &HalfTable {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Integrand in `tau`: `D(rho) u / (g(rho) - g(l-))` with `u = e^tau`.
    fn kernel(&self, side: Side, tau: f64) -> f64 {
        let u = tau.exp();
        let e = self.rf.ends();
        let (rho, gap) = match side {
            Side::Left => (e.minus + u, self.rf.gap_left(u)),
            Side::Right => (e.plus - u, self.rf.gap_right(u)),
        };
        let d = self.road.diffusivity.value(rho);
        if d == 0.0 {
            0.0
        } else {
            d * u / gap
        }
    }

    fn integral(&self, side: Side, a: f64, b: f64) -> f64 {
        let k = |t: f64| self.kernel(side, t);
        let (est, _) = gk15(&k, a, b);
        integrate(&k, a, b, (QUAD_REL_TOL * est.abs()).max(1e-300), QUAD_PIECES)
    }

    fn build_half(&self, side: Side, front: bool) -> Result<HalfTable> {
        let top = (0.5 * self.rf.ends().width()).ln();
        let mut taus = vec![top];
        let mut xis = vec![0.0];
        let mut t = top;
        while t > TAU_FLOOR {
            let a = (t - (0.5 + 0.25 * (top - t))).max(TAU_FLOOR);
            let piece = self.integral(side, a, t);
            if !piece.is_finite() || piece < 0.0 {
                return Err(Error::Convergence(format!(
                    "profile integrand not finite on [{a}, {t}] ({side:?} half)"
                )));
            }
            xis.push(xis.last().unwrap() + piece);
            taus.push(a);
            t = a;
        }
        Ok(HalfTable { taus, xis, front })
    }

    fn nu(&self, side: Side) -> f64 {
        let half = self.half(side);
        let mag = if half.front {
            *half.xis.last().unwrap()
        } else {
            f64::INFINITY
        };
        match side {
            Side::Left => -mag,
            Side::Right => mag,
        }
    }

    fn panel_of_tau(&self, side: Side, tau: f64) -> usize {
        let taus = &self.half(side).taus;
        // number of edges strictly above tau, minus one
        taus.partition_point(|&t| t > tau).clamp(1, taus.len() - 1) - 1
    }

    fn abs_xi(&self, side: Side, tau: f64) -> f64 {
        let half = self.half(side);
        let tau = tau.clamp(TAU_FLOOR, half.taus[0]);
        let k = self.panel_of_tau(side, tau);
        half.xis[k] + self.integral(side, tau, half.taus[k])
    }

    fn position(&self, side: Side, tau: f64) -> f64 {
        if tau < TAU_FLOOR {
            return self.nu(side);
        }
        let x = self.abs_xi(side, tau);
        match side {
            Side::Left => -x,
            Side::Right => x,
        }
    }

    /// Offset from the end state at signed position `eta`.
    fn offset(&self, side: Side, eta: f64) -> f64 {
        let half = self.half(side);
        let target = eta.abs();
        let last = half.xis.len() - 1;
        if target >= half.xis[last] {
            return 0.0;
        }
        let k = half.xis.partition_point(|&x| x <= target).clamp(1, last) - 1;
        let (hi, lo) = (half.taus[k], half.taus[k + 1]);
        let (x_hi, x_lo) = (half.xis[k], half.xis[k + 1]);
        // target - |xi(tau)|, increasing in tau, with derivative kernel(tau)
        let h = |tau: f64| {
            let x = x_hi + self.integral(side, tau, hi);
            (target - x, self.kernel(side, tau))
        };
        let guess = if x_lo > x_hi {
            hi + (lo - hi) * (target - x_hi) / (x_lo - x_hi)
        } else {
            0.5 * (lo + hi)
        };
        newton_bracketed(h, lo, hi, guess).exp()
    }
}

/// Root of an increasing function on `[lo, hi]` by Newton steps, falling
/// back to bisection whenever a step would leave the bracket.
fn newton_bracketed<F: Fn(f64) -> (f64, f64)>(h: F, mut lo: f64, mut hi: f64, guess: f64) -> f64 {
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let (hx, dh) = h(x);
        if hx == 0.0 {
            return x;
        }
        if hx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - hx / dh;
        let next = if dh > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = 1e-15 * x.abs().max(1.0);
        if (next - x).abs() <= scale || hi - lo <= scale {
            return next;
        }
        x = next;
    }
    x
}
