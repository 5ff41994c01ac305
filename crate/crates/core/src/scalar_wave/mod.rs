//! Traveling waves on a single road.
//!
//! A traveling wave `rho(t, x) = phi(x - c t)` joins `l-` at `-inf` to `l+`
//! at `+inf`, with `l- < l+` and speed
//! `c = (f(l+) - f(l-)) / (l+ - l-)`. With the reduced flux `g = f - c rho`,
//! integrating the wave equation once gives
//!
//! ```text
//! D(phi) phi' = g(phi) - g(l-)
//! ```
//!
//! so the profile is the inverse of `xi(phi) = int D / (g - g(l-))`. The wave
//! reaches `l-` (resp. `l+`) at a finite point, a sharp front, exactly when
//! `l- = 0` and `D(0) = 0` (resp. `l+ = 1` and `D(1) = 0`).

mod profile;

pub use profile::{Profile, ProfileMethod};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_model::{Flux, Road};

/// Speeds below this (relative to the flux scale) are treated as zero.
pub const SPEED_TOL: f64 = 1e-12;

/// The pair `(l-, l+)` of far-field states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EndStates {
    pub minus: f64,
    pub plus: f64,
}

impl EndStates {
    pub fn new(minus: f64, plus: f64) -> Result<Self> {
        let e = Self { minus, plus };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.minus, self.plus);
        let reason = if !(lo.is_finite() && hi.is_finite()) {
            "not finite"
        } else if lo < 0.0 || hi > 1.0 {
            "outside [0, 1]"
        } else if lo >= hi {
            "need l- < l+"
        } else {
            return Ok(());
        };
        Err(Error::InvalidEndStates {
            lo,
            hi,
            reason: reason.into(),
        })
    }

    pub fn width(&self) -> f64 {
        self.plus - self.minus
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.minus + self.plus)
    }

    pub fn swapped_if(&self, swap: bool) -> (f64, f64) {
        if swap {
            (self.plus, self.minus)
        } else {
            (self.minus, self.plus)
        }
    }
}

fn speed_floor(flux: &Flux) -> f64 {
    SPEED_TOL * (4.0 * flux.max_value()).max(1.0)
}

/// Whether a computed speed counts as zero for this flux.
pub fn is_stationary_speed(flux: &Flux, c: f64) -> bool {
    c.abs() <= speed_floor(flux)
}

/// Rankine–Hugoniot speed of the end states; tiny speeds are snapped to zero.
pub fn wave_speed(flux: &Flux, ends: &EndStates) -> Result<f64> {
    ends.validate()?;
    let c = flux.increment(ends.minus, ends.width()) / ends.width();
    Ok(if is_stationary_speed(flux, c) { 0.0 } else { c })
}

/// The reduced flux `g = f - c rho` of a wave, with its common end value.
#[derive(Clone, Debug)]
pub struct ReducedFlux {
    flux: Flux,
    ends: EndStates,
    speed: f64,
    g_end: f64,
}

impl ReducedFlux {
    pub fn new(flux: &Flux, ends: &EndStates) -> Result<Self> {
        let speed = wave_speed(flux, ends)?;
        Ok(Self {
            flux: flux.clone(),
            ends: *ends,
            speed,
            g_end: flux.value(ends.minus) - speed * ends.minus,
        })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn ends(&self) -> EndStates {
        self.ends
    }

    /// `g(l-) = g(l+)`.
    pub fn end_value(&self) -> f64 {
        self.g_end
    }

    pub fn g(&self, rho: f64) -> f64 {
        self.flux.value(rho) - self.speed * rho
    }

    /// `g(l- + u) - g(l-)`.
    pub fn gap_left(&self, u: f64) -> f64 {
        self.flux.increment(self.ends.minus, u) - self.speed * u
    }

    /// `g(l+ - w) - g(l+)`.
    pub fn gap_right(&self, w: f64) -> f64 {
        self.flux.increment(self.ends.plus, -w) + self.speed * w
    }

    /// `g(rho) - g(l-)`, measured from the nearer end state.
    pub fn gap(&self, rho: f64) -> f64 {
        let u = rho - self.ends.minus;
        let w = self.ends.plus - rho;
        if u <= w {
            self.gap_left(u)
        } else {
            self.gap_right(w)
        }
    }
}

/// `(g(rho) - g(l-)) / D(rho)`, the slope a profile must have at height
/// `rho`; zero where `D` vanishes.
pub fn gamma(road: &Road, rf: &ReducedFlux, rho: f64) -> f64 {
    let d = road.diffusivity.value(rho);
    if d == 0.0 {
        0.0
    } else {
        rf.gap(rho) / d
    }
}

/// Qualitative type of a single-road wave.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WaveClass {
    pub speed: f64,
    pub stationary: bool,
    pub degenerate: bool,
    /// The wave reaches `l-` at a finite point.
    pub finite_left: bool,
    /// The wave reaches `l+` at a finite point.
    pub finite_right: bool,
}

pub fn classify(road: &Road, ends: &EndStates) -> Result<WaveClass> {
    let speed = wave_speed(&road.flux, ends)?;
    let d = &road.diffusivity;
    let finite_left = ends.minus == 0.0 && d.vanishes_at(0.0);
    let finite_right = ends.plus == 1.0 && d.vanishes_at(1.0);
    Ok(WaveClass {
        speed,
        stationary: speed == 0.0,
        degenerate: finite_left || finite_right,
        finite_left,
        finite_right,
    })
}

/// Whether a stationary wave with a sharp front exists on this road at all.
/// That needs `D(0) D(1) = 0`, and the wave then joins 0 to 1.
pub fn admits_stationary_degenerate(road: &Road) -> bool {
    let d = &road.diffusivity;
    d.vanishes_at(0.0) || d.vanishes_at(1.0)
}

/// One-sided slopes of the profile where it reaches a sharp front.
///
/// `None` marks a side with no front; `Some(inf)` a vertical contact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundarySlopes {
    pub left: Option<f64>,
    pub right: Option<f64>,
}

pub fn boundary_slopes(road: &Road, ends: &EndStates) -> Result<BoundarySlopes> {
    let class = classify(road, ends)?;
    if !class.degenerate {
        return Err(Error::NonDegenerate);
    }
    let f = &road.flux;
    let d = &road.diffusivity;
    let left = class.finite_left.then(|| {
        let dd = d.deriv(0.0);
        let lp = ends.plus;
        let num = lp * f.deriv(0.0) - f.value(lp);
        if dd > 0.0 && num.is_finite() {
            num / (lp * dd)
        } else {
            f64::INFINITY
        }
    });
    let right = class.finite_right.then(|| {
        let dd = d.deriv(1.0);
        let lm = ends.minus;
        let num = (1.0 - lm) * f.deriv(1.0) + f.value(lm);
        if dd < 0.0 && num.is_finite() {
            num / ((1.0 - lm) * dd)
        } else {
            f64::INFINITY
        }
    });
    Ok(BoundarySlopes { left, right })
}

/// Largest `|D(phi) phi' - (g(phi) - g(l-))|` over a uniform grid, with
/// `phi'` from a five-point difference of [`Profile::evaluate`].
///
/// Grid points within two difference steps of a sharp front are skipped,
/// since the stencil would straddle the kink.
pub fn first_integral_residual(
    road: &Road,
    profile: &Profile,
    xi_min: f64,
    xi_max: f64,
    points: usize,
) -> f64 {
    let rf = profile.reduced_flux();
    let h = 1e-3;
    let fronts = [profile.nu_minus(), profile.nu_plus()];
    let mut worst: f64 = 0.0;
    for k in 0..points {
        let xi = xi_min + (xi_max - xi_min) * k as f64 / (points - 1).max(1) as f64;
        if fronts.iter().any(|nu| nu.is_finite() && (xi - nu).abs() <= 2.0 * h) {
            continue;
        }
        let p = |s: f64| profile.evaluate(xi + s * h);
        let dphi = (-p(2.0) + 8.0 * p(1.0) - 8.0 * p(-1.0) + p(-2.0)) / (12.0 * h);
        let phi = p(0.0);
        let r = road.diffusivity.value(phi) * dphi - rf.gap(phi);
        worst = worst.max(r.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{Diffusivity, Flux, Road};

    fn quad_linear(v: f64, delta: f64) -> Road {
        Road::incoming(Flux::quadratic(v), Diffusivity::linear(delta))
    }

    #[test]
    fn end_states_rejected_when_unordered() {
        assert!(EndStates::new(0.5, 0.5).is_err());
        assert!(EndStates::new(0.6, 0.2).is_err());
        assert!(EndStates::new(-0.1, 0.2).is_err());
    }

    #[test]
    fn quadratic_speed() {
        let e = EndStates::new(0.0, 0.2).unwrap();
        assert!((wave_speed(&Flux::quadratic(1.0), &e).unwrap() - 0.8).abs() < 1e-15);
        let s = EndStates::new(0.3, 0.7).unwrap();
        assert_eq!(wave_speed(&Flux::quadratic(1.0), &s).unwrap(), 0.0);
    }

    #[test]
    fn reduced_flux_ends_agree() {
        let f = Flux::logarithmic(1.3);
        let e = EndStates::new(0.1, 0.8).unwrap();
        let rf = ReducedFlux::new(&f, &e).unwrap();
        assert!((rf.g(0.1) - rf.g(0.8)).abs() < 1e-15);
        let expected = -(f.value(0.8) * 0.1 - f.value(0.1) * 0.8) / 0.7;
        assert!((rf.end_value() - expected).abs() < 1e-15);
        assert!(rf.gap(0.4) > 0.0);
    }

    #[test]
    fn classification_flags() {
        let r = quad_linear(1.0, 1.0);
        let c = classify(&r, &EndStates::new(0.0, 0.6).unwrap()).unwrap();
        assert!(c.degenerate && c.finite_left && !c.finite_right && !c.stationary);
        let c = classify(&r, &EndStates::new(0.1, 0.6).unwrap()).unwrap();
        assert!(!c.degenerate);
        let r = Road::incoming(Flux::quadratic(1.0), Diffusivity::constant(1.0));
        let c = classify(&r, &EndStates::new(0.0, 1.0).unwrap()).unwrap();
        assert!(c.stationary && !c.degenerate);
        assert!(!admits_stationary_degenerate(&r));
    }

    #[test]
    fn linear_diffusion_left_slope() {
        let r = quad_linear(1.0, 1.0);
        let s = boundary_slopes(&r, &EndStates::new(0.0, 0.6).unwrap()).unwrap();
        assert!((s.left.unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(s.right, None);
    }

    #[test]
    fn constant_diffusion_has_no_front() {
        let r = Road::incoming(Flux::quadratic(1.0), Diffusivity::constant(2.0));
        assert_eq!(
            boundary_slopes(&r, &EndStates::new(0.0, 0.6).unwrap()),
            Err(Error::NonDegenerate)
        );
    }

    #[test]
    fn logarithmic_front_is_vertical() {
        let r = Road::incoming(Flux::logarithmic(1.0), Diffusivity::linear(1.0));
        let s = boundary_slopes(&r, &EndStates::new(0.0, 0.5).unwrap()).unwrap();
        assert_eq!(s.left, Some(f64::INFINITY));
    }
}
