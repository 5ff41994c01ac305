//! Closed-form results for one incoming road with proportional laws.
//!
//! Every road carries `f_h = v_h f` and `D_h = delta_h D` for a common `f`
//! (quadratic `rho (1 - rho)` or logarithmic `-rho ln rho`) and a common `D`
//! (constant or linear). Ratios are taken against the incoming road:
//! `v_1j = v_1 / v_j`, `delta_1j = delta_1 / delta_j`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_model::{Diffusivity, Flux, Road, StarNetwork};
use crate::scalar_wave::{EndStates, Profile, ProfileMethod};

/// Relative tolerance for the algebraic equalities of the criteria.
pub const REL_TOL: f64 = 1e-10;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    QuadraticConstant,
    QuadraticLinear,
    LogarithmicConstant,
}

/// Coefficients of a proportional star with one incoming road. Index 0 is
/// the incoming road, index `j >= 1` the outgoing roads.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyParams {
    pub v: Vec<f64>,
    pub delta: Vec<f64>,
    /// `alpha_1j` for `j = 1..=n`.
    pub alpha: Vec<f64>,
}

impl FamilyParams {
    pub fn new(v: Vec<f64>, delta: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        let p = Self { v, delta, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alpha.len();
        if n == 0 || self.v.len() != n + 1 || self.delta.len() != n + 1 {
            return Err(Error::InvalidNetwork(
                "need one incoming road and matching coefficient lengths".into(),
            ));
        }
        if self
            .v
            .iter()
            .chain(&self.delta)
            .any(|x| !(x.is_finite() && *x > 0.0))
        {
            return Err(Error::InvalidNetwork("coefficients must be positive".into()));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::InvalidNetwork("alpha entries must lie in (0, 1]".into()));
        }
        let s: f64 = self.alpha.iter().sum();
        if (s - 1.0).abs() > crate::graph_model::ROW_SUM_TOL {
            return Err(Error::InvalidNetwork(format!("alpha row sums to {s}")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// `v_1 / v_j` for outgoing `j` in `1..=n`.
    pub fn v_ratio(&self, j: usize) -> f64 {
        self.v[0] / self.v[j]
    }

    pub fn delta_ratio(&self, j: usize) -> f64 {
        self.delta[0] / self.delta[j]
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.alpha[j - 1]
    }

    pub fn road(&self, kind: FamilyKind, h: usize) -> Road {
        let (flux, diff) = match kind {
            FamilyKind::QuadraticConstant => {
                (Flux::quadratic(self.v[h]), Diffusivity::constant(self.delta[h]))
            }
            FamilyKind::QuadraticLinear => {
                (Flux::quadratic(self.v[h]), Diffusivity::linear(self.delta[h]))
            }
            FamilyKind::LogarithmicConstant => {
                (Flux::logarithmic(self.v[h]), Diffusivity::constant(self.delta[h]))
            }
        };
        if h == 0 {
            Road::incoming(flux, diff)
        } else {
            Road::outgoing(flux, diff)
        }
    }

    pub fn network(&self, kind: FamilyKind) -> Result<StarNetwork> {
        StarNetwork::new(
            vec![self.road(kind, 0)],
            (1..=self.n()).map(|j| self.road(kind, j)).collect(),
            vec![self.alpha.clone()],
        )
    }

    /// Recognize a network belonging to one of the closed-form families.
    pub fn detect(net: &StarNetwork) -> Option<(FamilyKind, Self)> {
        if net.m() != 1 {
            return None;
        }
        let mut kind = None;
        let (mut v, mut delta) = (vec![], vec![]);
        for r in net.roads() {
            let k = match (&r.flux, &r.diffusivity) {
                (Flux::Quadratic { .. }, Diffusivity::Constant { .. }) => FamilyKind::QuadraticConstant,
                (Flux::Quadratic { .. }, Diffusivity::Linear { .. }) => FamilyKind::QuadraticLinear,
                (Flux::Logarithmic { .. }, Diffusivity::Constant { .. }) => {
                    FamilyKind::LogarithmicConstant
                }
                _ => return None,
            };
            if kind.is_some_and(|x| x != k) {
                return None;
            }
            kind = Some(k);
            v.push(r.flux.scale()?);
            delta.push(r.diffusivity.scale()?);
        }
        let p = Self::new(v, delta, net.alpha_matrix()[0].clone()).ok()?;
        Some((kind?, p))
    }

    /// `alpha_1j delta_1j = v_1j` and `v_1j^2 = delta_1j` for this `j`.
    fn proportional(&self, j: usize) -> bool {
        let (a, v, d) = (self.alpha(j), self.v_ratio(j), self.delta_ratio(j));
        close(a * d, v) && close(v * v, d)
    }

    /// Continuity relations `v_1j^2 = delta_1j` and `alpha_1j v_1j = 1` for all `j`.
    pub fn continuity_relations(&self) -> bool {
        (1..=self.n()).all(|j| {
            let v = self.v_ratio(j);
            close(v * v, self.delta_ratio(j)) && close(self.alpha(j) * v, 1.0)
        })
    }
}

/// Admissible incoming end states and thresholds for each outgoing road.
#[derive(Clone, Debug, Serialize)]
pub struct IntervalTables {
    /// `L_j^0 = [0, b_j)`: admissible `l_1^-` of stationary waves; stores `b_j`.
    pub stationary: Vec<f64>,
    /// `L_j^c = [0, 1]` minus this open interval, if any.
    pub moving_gap: Vec<Option<(f64, f64)>>,
    /// `Delta_j`, the thresholds of the window conditions.
    pub thresholds: Vec<Vec<f64>>,
}

impl IntervalTables {
    /// Upper bound of `L^0 = cap_j L_j^0`.
    pub fn stationary_bound(&self) -> f64 {
        self.stationary.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn moving_admissible(&self, l: f64) -> bool {
        (0.0..=1.0).contains(&l)
            && self
                .moving_gap
                .iter()
                .all(|g| g.is_none_or(|(a, b)| !(a < l && l < b)))
    }
}

fn base_flux(kind: FamilyKind) -> Flux {
    match kind {
        FamilyKind::LogarithmicConstant => Flux::logarithmic(1.0),
        _ => Flux::quadratic(1.0),
    }
}

pub fn interval_tables(kind: FamilyKind, p: &FamilyParams) -> Result<IntervalTables> {
    let f = base_flux(kind);
    let top = f.argmax();
    let mut t = IntervalTables {
        stationary: vec![],
        moving_gap: vec![],
        thresholds: vec![],
    };
    for j in 1..=p.n() {
        let (a, v, d) = (p.alpha(j), p.v_ratio(j), p.delta_ratio(j));
        if a * v <= 1.0 {
            t.stationary.push(top);
            t.moving_gap.push(None);
        } else {
            let y = f.max_value() / (a * v);
            let (lo, hi) = (f.inverse_left(y)?, f.inverse_right(y)?);
            t.stationary.push(lo);
            t.moving_gap.push(Some((lo, hi)));
        }
        let mut th = vec![a * d, d.sqrt()];
        if kind == FamilyKind::QuadraticLinear {
            th.push((a * d * d).cbrt());
        }
        t.thresholds.push(th);
    }
    Ok(t)
}

/// `0 < v < min Delta` or `v > max Delta`.
fn in_window(v: f64, th: &[f64]) -> bool {
    let lo = th.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = th.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0.0 < v && v < lo) || v > hi
}

fn stationary_check(t: &IntervalTables, l1_minus: f64) -> Result<()> {
    let b = t.stationary_bound();
    if (0.0..b).contains(&l1_minus) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "l1- = {l1_minus} outside the stationary range [0, {b})"
        )))
    }
}

/// End states of the stationary wave with incoming `l_1^-`: incoming first,
/// then `l_j^± = (1 ± sqrt(1 - 4 alpha v l_1^+ l_1^-)) / 2`.
pub fn quad_stationary_ends(p: &FamilyParams, l1_minus: f64) -> Result<Vec<EndStates>> {
    stationary_check(&interval_tables(FamilyKind::QuadraticConstant, p)?, l1_minus)?;
    let l1_plus = 1.0 - l1_minus;
    let mut out = vec![EndStates::new(l1_minus, l1_plus)?];
    for j in 1..=p.n() {
        let z = 4.0 * p.alpha(j) * p.v_ratio(j) * l1_plus * l1_minus;
        let s = (1.0 - z).sqrt();
        // stable small root
        let lo = 0.5 * z / (1.0 + s);
        out.push(EndStates::new(lo, 0.5 * (1.0 + s))?);
    }
    Ok(out)
}

/// Stationary end states for the logarithmic family; same layout as
/// [`quad_stationary_ends`].
pub fn log_stationary_ends(p: &FamilyParams, l1_minus: f64) -> Result<Vec<EndStates>> {
    stationary_check(&interval_tables(FamilyKind::LogarithmicConstant, p)?, l1_minus)?;
    let f = Flux::logarithmic(1.0);
    let y = f.value(l1_minus);
    let mut out = vec![EndStates::new(l1_minus, f.inverse_right(y)?)?];
    for j in 1..=p.n() {
        let yj = p.alpha(j) * p.v_ratio(j) * y;
        out.push(EndStates::new(f.inverse_left(yj)?, f.inverse_right(yj)?)?);
    }
    Ok(out)
}

/// Verdicts for quadratic flux with constant diffusivities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstCriterion {
    /// `alpha_1j delta_1j = v_1j` for each outgoing road.
    pub per_road: Vec<bool>,
    /// A moving network wave exists.
    pub exists: bool,
    /// A moving network wave with equal densities at the junction exists.
    pub continuity_exists: bool,
}

pub fn quad_const_criterion(p: &FamilyParams) -> ConstCriterion {
    let per_road: Vec<bool> = (1..=p.n())
        .map(|j| close(p.alpha(j) * p.delta_ratio(j), p.v_ratio(j)))
        .collect();
    let exists = per_road.iter().all(|&b| b);
    ConstCriterion {
        per_road,
        exists,
        continuity_exists: p.continuity_relations(),
    }
}

/// `l+ / (1 + e^{-r xi}) + l- / (1 + e^{r xi})` with `r = (v / delta) (l+ - l-)`.
pub fn logistic(v: f64, delta: f64, ends: &EndStates, xi: f64) -> f64 {
    let r = v / delta * ends.width();
    ends.plus / (1.0 + (-r * xi).exp()) + ends.minus / (1.0 + (r * xi).exp())
}

/// Logistic wave of a road with flux `v rho (1 - rho)` and diffusivity
/// `delta`, translated by `sigma`.
pub fn quad_const_profile(v: f64, delta: f64, ends: &EndStates, sigma: f64) -> Result<Profile> {
    let road = Road::incoming(Flux::quadratic(v), Diffusivity::constant(delta));
    Ok(Profile::build(&road, ends, ProfileMethod::Auto)?.shifted(sigma))
}

/// Wave of a road with flux `v rho (1 - rho)` and diffusivity `delta rho`,
/// translated by `sigma`. Sharp front at `-(delta / v) ln 2` when `l- = 0`.
pub fn quad_linear_profile(v: f64, delta: f64, ends: &EndStates, sigma: f64) -> Result<Profile> {
    let road = Road::incoming(Flux::quadratic(v), Diffusivity::linear(delta));
    Ok(Profile::build(&road, ends, ProfileMethod::Auto)?.shifted(sigma))
}

/// Implicit relation of the linear-diffusivity wave with `l- > 0`,
/// `(phi - l-)^{l-} (l+ - phi)^{-l+} = C e^{v (l+ - l-) xi / delta}`, with
/// `C` fixed by the mid value at `xi = 0`. Returns `lhs - rhs` in logs.
pub fn quad_linear_implicit_residual(v: f64, delta: f64, ends: &EndStates, xi: f64, phi: f64) -> f64 {
    let (a, b) = (ends.minus, ends.plus);
    let h = 0.5 * ends.width();
    let lhs = a * (phi - a).ln() - b * (b - phi).ln();
    let c = a * h.ln() - b * h.ln();
    lhs - (c + v * (b - a) * xi / delta)
}

/// Degenerate moving waves (`l^- = 0`) for one of the two families where
/// they are characterized by a window and a chain of equalities.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZeroLeftOutcome {
    /// `alpha delta = v` and `v^2 = delta` on every road: one wave for each
    /// `l_1^+ = l_j^+` in `(0, 1)`, all continuous at the junction.
    Family,
    /// A single wave up to shifts; incoming end states first.
    Unique { ends: Vec<EndStates> },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroLeftAnalysis {
    pub outcome: ZeroLeftOutcome,
    /// Window membership per outgoing road.
    pub window: Vec<bool>,
    /// `l_1^+` demanded by each outgoing road; `None` where it is free.
    pub chain: Vec<Option<f64>>,
    /// Both the ratio and the square relation hold for this road.
    pub free: Vec<bool>,
}

impl ZeroLeftAnalysis {
    /// Whether the input `(0, l1_plus)` is the incoming state of some wave
    /// of this kind.
    pub fn admits(&self, l1_plus: f64) -> bool {
        match &self.outcome {
            ZeroLeftOutcome::Family => 0.0 < l1_plus && l1_plus < 1.0,
            ZeroLeftOutcome::Unique { ends } => close(ends[0].plus, l1_plus),
            ZeroLeftOutcome::None => false,
        }
    }
}

/// `(l_1^+, l_j^+)` demanded by one outgoing road, or `None` if that road
/// admits no degenerate wave.
type ChainFn = fn(a: f64, v: f64, d: f64) -> Option<(f64, f64)>;

fn zero_left(kind: FamilyKind, p: &FamilyParams, chain: ChainFn) -> Result<ZeroLeftAnalysis> {
    let tables = interval_tables(kind, p)?;
    let n = p.n();
    let mut window = Vec::with_capacity(n);
    let mut free = Vec::with_capacity(n);
    let mut demanded = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n);
    for j in 1..=n {
        let (a, v, d) = (p.alpha(j), p.v_ratio(j), p.delta_ratio(j));
        window.push(in_window(v, &tables.thresholds[j - 1]));
        let is_free = p.proportional(j);
        free.push(is_free);
        let pair = if is_free { None } else { chain(a, v, d) };
        demanded.push(pair.map(|x| x.0));
        pairs.push(pair);
    }
    let fixed: Vec<usize> = (0..n).filter(|&j| !free[j]).collect();
    let outcome = if fixed.is_empty() {
        ZeroLeftOutcome::Family
    } else if fixed.iter().all(|&j| window[j] && pairs[j].is_some()) {
        let l1 = pairs[fixed[0]].unwrap().0;
        if fixed.iter().all(|&j| close(pairs[j].unwrap().0, l1)) && 0.0 < l1 && l1 < 1.0 {
            let mut ends = vec![EndStates::new(0.0, l1)?];
            for j in 0..n {
                let lj = pairs[j].map_or(l1, |x| x.1);
                ends.push(EndStates::new(0.0, lj)?);
            }
            ZeroLeftOutcome::Unique { ends }
        } else {
            ZeroLeftOutcome::None
        }
    } else {
        ZeroLeftOutcome::None
    };
    Ok(ZeroLeftAnalysis {
        outcome,
        window,
        chain: demanded,
        free,
    })
}

fn linear_chain(a: f64, v: f64, d: f64) -> Option<(f64, f64)> {
    let den = a * d * d - v * v * v;
    if den == 0.0 {
        return None;
    }
    let num = d - v * v;
    Some((v * num / den, a * d * num / den))
}

fn log_chain(a: f64, v: f64, d: f64) -> Option<(f64, f64)> {
    let e = v * v - d;
    if e == 0.0 {
        return None;
    }
    let r = a * d / v;
    Some((r.powf(d / e), r.powf(v * v / e)))
}

/// Result for quadratic flux with linear diffusivities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearAnalysis {
    /// Degenerate moving waves, all with `l^- = 0`.
    pub degenerate: ZeroLeftAnalysis,
    /// Non-degenerate moving waves exist (they form a family).
    pub nondegenerate_family: bool,
}

/// Moving waves for quadratic flux and linear diffusivities.
///
/// A road whose coefficients satisfy both `alpha delta = v` and
/// `v^2 = delta` places no constraint on `l_1^+` and takes `l_j^+ = l_1^+`;
/// the remaining roads must each pass the window test and agree on `l_1^+`.
pub fn quad_linear_analyze(p: &FamilyParams) -> Result<LinearAnalysis> {
    let degenerate = zero_left(FamilyKind::QuadraticLinear, p, linear_chain)?;
    let nondegenerate_family = degenerate.free.iter().all(|&b| b);
    Ok(LinearAnalysis {
        degenerate,
        nondegenerate_family,
    })
}

/// Moving waves with `l^- = 0` for logarithmic flux and constant
/// diffusivities. The profiles have no sharp front here, since `D(0) > 0`,
/// but the end-state algebra mirrors the linear-diffusivity case.
pub fn log_analyze(p: &FamilyParams) -> Result<ZeroLeftAnalysis> {
    zero_left(FamilyKind::LogarithmicConstant, p, log_chain)
}

/// A zero left state on one road of a logarithmic wave forces it on all:
/// `l_1^- = 0` iff every `l_j^- = 0`.
pub fn zero_left_consistent(ends: &[EndStates]) -> bool {
    let first = ends[0].minus == 0.0;
    ends[1..].iter().all(|e| (e.minus == 0.0) == first)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_out(v: (f64, f64), d: (f64, f64)) -> FamilyParams {
        FamilyParams::new(vec![v.0, v.1], vec![d.0, d.1], vec![1.0]).unwrap()
    }

    #[test]
    fn const_criterion_examples() {
        let p = one_out((2.0, 1.0), (2.0, 1.0));
        assert!(quad_const_criterion(&p).exists);
        let p = one_out((1.0, 1.0), (1.0, 1.0));
        let c = quad_const_criterion(&p);
        assert!(c.exists && c.continuity_exists);
        let p = FamilyParams::new(vec![2.0, 1.0, 1.0], vec![4.0, 1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let c = quad_const_criterion(&p);
        assert!(c.exists);
        // alpha_1j v_1j = 0.5 * 2 = 1 on each road
        assert!(c.continuity_exists);
        let p = one_out((1.0, 1.0), (2.0, 1.0));
        assert!(!quad_const_criterion(&p).exists);
    }

    #[test]
    fn logistic_profile_properties() {
        let e = EndStates::new(0.0, 1.0).unwrap();
        let prof = quad_const_profile(1.0, 1.0, &e, 0.0).unwrap();
        assert_eq!(prof.method(), "logistic");
        assert!((prof.evaluate(0.0) - 0.5).abs() < 1e-15);
        for xi in [-3.0, -0.5, 1.7] {
            assert!((prof.evaluate(xi) - logistic(1.0, 1.0, &e, xi)).abs() < 1e-14);
        }
        assert!((prof.evaluate(60.0) - 1.0).abs() < 1e-15);
        assert!(prof.evaluate(-60.0).abs() < 1e-15);
    }

    #[test]
    fn linear_unique_example() {
        let p = one_out((1.0, 1.0), (4.0, 1.0));
        let a = quad_linear_analyze(&p).unwrap();
        assert!(!a.nondegenerate_family);
        let ZeroLeftOutcome::Unique { ends } = a.degenerate.outcome else {
            panic!("{:?}", a.degenerate.outcome)
        };
        assert!((ends[0].plus - 0.2).abs() < 1e-15);
        assert!((ends[1].plus - 0.8).abs() < 1e-15);
        let t = interval_tables(FamilyKind::QuadraticLinear, &p).unwrap();
        assert!((t.thresholds[0][2] - 4f64.powf(2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn linear_family_and_none() {
        let p = one_out((1.0, 1.0), (1.0, 1.0));
        let a = quad_linear_analyze(&p).unwrap();
        assert_eq!(a.degenerate.outcome, ZeroLeftOutcome::Family);
        assert!(a.nondegenerate_family && a.degenerate.admits(0.37));
        let p = one_out((3.0, 1.0), (4.0, 1.0));
        let a = quad_linear_analyze(&p).unwrap();
        assert_eq!(a.degenerate.outcome, ZeroLeftOutcome::None);
        assert_eq!(a.degenerate.window, vec![false]);
    }

    #[test]
    fn linear_mixed_roads() {
        // road 1 is free, road 2 pins l1+ = 3/7
        let p = FamilyParams::new(vec![1.0, 0.5, 1.0], vec![2.0, 0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert!(p.proportional(1) && !p.proportional(2));
        let a = quad_linear_analyze(&p).unwrap();
        let ZeroLeftOutcome::Unique { ends } = a.degenerate.outcome else {
            panic!("{:?}", a.degenerate.outcome)
        };
        assert!((ends[0].plus - 3.0 / 7.0).abs() < 1e-15);
        assert!((ends[1].plus - ends[0].plus).abs() < 1e-15);
        assert!((ends[2].plus - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn log_unique_example() {
        let p = one_out((1.0, 1.0), (4.0, 1.0));
        let a = log_analyze(&p).unwrap();
        let ZeroLeftOutcome::Unique { ends } = a.outcome else {
            panic!()
        };
        assert!((ends[0].plus - 0.157_490_131_236_859_1).abs() < 1e-15);
        assert!((ends[1].plus - 0.629_960_524_947_436_6).abs() < 1e-15);
        let (l1, l2) = (ends[0].plus, ends[1].plus);
        assert!((l2 * l2.ln() - l1 * l1.ln()).abs() < 1e-15);
        assert!(zero_left_consistent(&ends));
    }

    #[test]
    fn log_inverse_fixed_point() {
        let f = Flux::logarithmic(1.0);
        let e = (-1f64).exp();
        assert!((f.inverse_left(e).unwrap() - e).abs() < 1e-7);
        assert!((f.inverse_right(e).unwrap() - e).abs() < 1e-7);
    }

    #[test]
    fn log_stationary_example() {
        let p = one_out((1.0, 1.0), (1.0, 1.0));
        let ends = log_stationary_ends(&p, 0.1).unwrap();
        let l = ends[0].plus;
        assert!((-l * l.ln() - 0.1 * 10f64.ln()).abs() < 1e-13);
        assert!(l > (-1f64).exp());
    }

    #[test]
    fn quad_stationary_formula() {
        let p = FamilyParams::new(vec![1.0, 0.5], vec![1.0, 1.0], vec![1.0]).unwrap();
        let t = interval_tables(FamilyKind::QuadraticConstant, &p).unwrap();
        let b = (1.0 - (0.5f64).sqrt()) / 2.0;
        assert!((t.stationary[0] - b).abs() < 1e-15);
        let ends = quad_stationary_ends(&p, 0.1).unwrap();
        let e = ends[1];
        assert!((e.minus * (1.0 - e.minus) - 2.0 * 0.09).abs() < 1e-15);
        assert!(quad_stationary_ends(&p, 0.2).is_err());
    }

    #[test]
    fn detect_family() {
        let p = one_out((1.0, 1.0), (4.0, 1.0));
        let net = p.network(FamilyKind::LogarithmicConstant).unwrap();
        let (k, q) = FamilyParams::detect(&net).unwrap();
        assert_eq!(k, FamilyKind::LogarithmicConstant);
        assert_eq!(q, p);
    }
}
