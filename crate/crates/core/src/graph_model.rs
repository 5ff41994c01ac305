//! Roads, flux and diffusivity laws, and the distribution matrix of a star
//! junction.
//!
//! Densities are normalised to `[0, 1]`. A flux must vanish at both ends and
//! be strictly concave; a diffusivity must be positive inside `(0, 1)` and may
//! vanish at either end (degenerate diffusion).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::roots::{bisect, golden_max};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Rows of the distribution matrix must sum to one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;

const ENDPOINT_TOL: f64 = 1e-12;
const SHAPE_GRID: usize = 1000;
// Below this offset a tabulated flux increment is taken from its Taylor
// polynomial; the plain difference has lost too many digits by then.
const TAYLOR_OFFSET: f64 = 1e-6;

/// A law given by two closures, the function and its derivative.
#[derive(Clone)]
pub struct Tabulated {
    label: String,
    value: ScalarFn,
    deriv: ScalarFn,
}

impl Tabulated {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
            deriv: Arc::new(deriv),
        }
    }

    /// Piecewise cubic Hermite interpolant through `(nodes, values)` with the
    /// given nodal slopes. Nodes must increase strictly from 0 to 1.
    pub fn from_samples(nodes: &[f64], values: &[f64], slopes: &[f64]) -> Result<Self> {
        let k = nodes.len();
        if k < 2 || values.len() != k || slopes.len() != k {
            return Err(Error::InvalidNetwork(
                "tabulated law needs >= 2 nodes with one value and one slope each".into(),
            ));
        }
        if nodes[0] != 0.0 || nodes[k - 1] != 1.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidNetwork(
                "tabulated nodes must increase strictly from 0 to 1".into(),
            ));
        }
        let table = Arc::new(HermiteTable {
            x: nodes.to_vec(),
            y: values.to_vec(),
            m: slopes.to_vec(),
        });
        let t2 = Arc::clone(&table);
        Ok(Self {
            label: format!("hermite[{k}]"),
            value: Arc::new(move |r| table.value(r)),
            deriv: Arc::new(move |r| t2.deriv(r)),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, rho: f64) -> f64 {
        (self.value)(rho)
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        (self.deriv)(rho)
    }
}

impl fmt::Debug for Tabulated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tabulated({})", self.label)
    }
}

struct HermiteTable {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl HermiteTable {
    fn locate(&self, r: f64) -> (usize, f64, f64) {
        let r = r.clamp(0.0, 1.0);
        let i = self.x.partition_point(|&xi| xi <= r).clamp(1, self.x.len() - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        (i, (r - self.x[i]) / h, h)
    }

    fn value(&self, r: f64) -> f64 {
        let (i, t, h) = self.locate(r);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
            + (t3 - 2.0 * t2 + t) * h * self.m[i]
            + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
            + (t3 - t2) * h * self.m[i + 1]
    }

    fn deriv(&self, r: f64) -> f64 {
        let (i, t, h) = self.locate(r);
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) / h * self.y[i]
            + (3.0 * t2 - 4.0 * t + 1.0) * self.m[i]
            + (-6.0 * t2 + 6.0 * t) / h * self.y[i + 1]
            + (3.0 * t2 - 2.0 * t) * self.m[i + 1]
    }
}

fn check_range(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::OutOfRange(rho))
    }
}

/// Hyperbolic flux `f(rho)`.
#[derive(Clone, Debug)]
pub enum Flux {
    /// `v rho (1 - rho)`
    Quadratic { v: f64 },
    /// `-v rho ln(rho)`, extended by `f(0) = 0`
    Logarithmic { v: f64 },
    Tabulated(Tabulated),
}

impl Flux {
    pub fn quadratic(v: f64) -> Self {
        Flux::Quadratic { v }
    }

    pub fn logarithmic(v: f64) -> Self {
        Flux::Logarithmic { v }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Flux::Quadratic { .. } => "quadratic",
            Flux::Logarithmic { .. } => "logarithmic",
            Flux::Tabulated(_) => "tabulated",
        }
    }

    /// The scale `v` of the built-in laws.
    pub fn scale(&self) -> Option<f64> {
        match self {
            Flux::Quadratic { v } | Flux::Logarithmic { v } => Some(*v),
            Flux::Tabulated(_) => None,
        }
    }

    /// `f(rho)` without range checking.
    pub fn value(&self, rho: f64) -> f64 {
        match self {
            Flux::Quadratic { v } => v * rho * (1.0 - rho),
            Flux::Logarithmic { v } => {
                if rho <= 0.0 {
                    0.0
                } else {
                    -v * rho * rho.ln()
                }
            }
            Flux::Tabulated(t) => t.value(rho),
        }
    }

    /// `f'(rho)` without range checking. The logarithmic flux has
    /// `f'(0) = +inf`.
    pub fn deriv(&self, rho: f64) -> f64 {
        match self {
            Flux::Quadratic { v } => v * (1.0 - 2.0 * rho),
            Flux::Logarithmic { v } => {
                if rho <= 0.0 {
                    f64::INFINITY
                } else {
                    -v * (rho.ln() + 1.0)
                }
            }
            Flux::Tabulated(t) => t.deriv(rho),
        }
    }

    pub fn eval(&self, rho: f64) -> Result<f64> {
        check_range(rho)?;
        Ok(self.value(rho))
    }

    pub fn eval_deriv(&self, rho: f64) -> Result<f64> {
        check_range(rho)?;
        Ok(self.deriv(rho))
    }

    /// `f(x + t) - f(x)`, evaluated so that it keeps its relative accuracy
    /// as `t -> 0`.
    pub fn increment(&self, x: f64, t: f64) -> f64 {
        match self {
            Flux::Quadratic { v } => v * t * (1.0 - 2.0 * x - t),
            Flux::Logarithmic { v } => {
                let y = x + t;
                if x <= 0.0 {
                    self.value(y)
                } else if y <= 0.0 {
                    -self.value(x)
                } else {
                    -v * (t * y.ln() + x * (t / x).ln_1p())
                }
            }
            Flux::Tabulated(tab) => {
                let d1 = tab.deriv(x);
                if t.abs() >= TAYLOR_OFFSET || !d1.is_finite() {
                    return tab.value(x + t) - tab.value(x);
                }
                let h = 1e-4;
                let (a, b) = ((x - h).max(0.0), (x + h).min(1.0));
                let d2 = (tab.deriv(b) - tab.deriv(a)) / (b - a);
                d1 * t + 0.5 * d2 * t * t
            }
        }
    }

    /// Location of the maximum of `f` on `[0, 1]`.
    pub fn argmax(&self) -> f64 {
        match self {
            Flux::Quadratic { .. } => 0.5,
            Flux::Logarithmic { .. } => (-1.0f64).exp(),
            Flux::Tabulated(t) => golden_max(|r| t.value(r), 0.0, 1.0, 1e-12),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Flux::Quadratic { v } => 0.25 * v,
            Flux::Logarithmic { v } => v * (-1.0f64).exp(),
            Flux::Tabulated(t) => t.value(self.argmax()),
        }
    }

    fn inverse_arg(&self, y: f64) -> Result<f64> {
        let fmax = self.max_value();
        let slack = 1e-13 * fmax.max(1.0);
        if !(y >= -slack && y <= fmax + slack) {
            return Err(Error::NoRoot(format!(
                "flux level {y} outside [0, {fmax}]"
            )));
        }
        Ok(y.clamp(0.0, fmax))
    }

    /// The root of `f(rho) = y` on the increasing branch `[0, argmax]`.
    pub fn inverse_left(&self, y: f64) -> Result<f64> {
        let y = self.inverse_arg(y)?;
        match self {
            Flux::Quadratic { v } => {
                let z = (4.0 * y / v).min(1.0);
                Ok(z / (2.0 * (1.0 + (1.0 - z).sqrt())))
            }
            _ => {
                let top = self.argmax();
                if y >= self.max_value() {
                    return Ok(top);
                }
                bisect(|r| self.value(r) - y, 0.0, top, 0.0)
            }
        }
    }

    /// The root of `f(rho) = y` on the decreasing branch `[argmax, 1]`.
    pub fn inverse_right(&self, y: f64) -> Result<f64> {
        let y = self.inverse_arg(y)?;
        match self {
            Flux::Quadratic { v } => {
                let z = (4.0 * y / v).min(1.0);
                Ok(0.5 * (1.0 + (1.0 - z).sqrt()))
            }
            _ => {
                let top = self.argmax();
                if y >= self.max_value() {
                    return Ok(top);
                }
                bisect(|r| self.value(r) - y, top, 1.0, 0.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(v) = self.scale() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidNetwork(format!("flux scale v = {v} must be positive")));
            }
        }
        let f0 = self.value(0.0);
        let f1 = self.value(1.0);
        if f0.abs() > ENDPOINT_TOL || f1.abs() > ENDPOINT_TOL {
            return Err(Error::InvalidNetwork(format!(
                "flux must vanish at 0 and 1, got f(0) = {f0}, f(1) = {f1}"
            )));
        }
        let h = 1.0 / SHAPE_GRID as f64;
        let vals: Vec<f64> = (0..=SHAPE_GRID).map(|k| self.value(k as f64 * h)).collect();
        if let Some(k) = (1..SHAPE_GRID).find(|&k| !(vals[k] > 0.0)) {
            return Err(Error::InvalidNetwork(format!(
                "flux not positive at rho = {}",
                k as f64 * h
            )));
        }
        for k in 1..SHAPE_GRID {
            let defect = vals[k] - 0.5 * (vals[k - 1] + vals[k + 1]);
            if !(defect > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "flux not concave near rho = {}",
                    k as f64 * h
                )));
            }
        }
        Ok(())
    }
}

/// Diffusivity `D(rho)`.
#[derive(Clone, Debug)]
pub enum Diffusivity {
    /// `delta`
    Constant { delta: f64 },
    /// `delta rho`, degenerate at 0
    Linear { delta: f64 },
    Tabulated(Tabulated),
}

impl Diffusivity {
    pub fn constant(delta: f64) -> Self {
        Diffusivity::Constant { delta }
    }

    pub fn linear(delta: f64) -> Self {
        Diffusivity::Linear { delta }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Diffusivity::Constant { .. } => "constant",
            Diffusivity::Linear { .. } => "linear",
            Diffusivity::Tabulated(_) => "tabulated",
        }
    }

    pub fn scale(&self) -> Option<f64> {
        match self {
            Diffusivity::Constant { delta } | Diffusivity::Linear { delta } => Some(*delta),
            Diffusivity::Tabulated(_) => None,
        }
    }

    pub fn value(&self, rho: f64) -> f64 {
        match self {
            Diffusivity::Constant { delta } => *delta,
            Diffusivity::Linear { delta } => delta * rho,
            Diffusivity::Tabulated(t) => t.value(rho),
        }
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        match self {
            Diffusivity::Constant { .. } => 0.0,
            Diffusivity::Linear { delta } => *delta,
            Diffusivity::Tabulated(t) => t.deriv(rho),
        }
    }

    pub fn eval(&self, rho: f64) -> Result<f64> {
        check_range(rho)?;
        Ok(self.value(rho))
    }

    pub fn eval_deriv(&self, rho: f64) -> Result<f64> {
        check_range(rho)?;
        Ok(self.deriv(rho))
    }

    pub fn vanishes_at(&self, rho: f64) -> bool {
        self.value(rho) == 0.0
    }

    /// Largest value on a uniform grid of `[0, 1]`.
    pub fn max_on_grid(&self, points: usize) -> f64 {
        match self {
            Diffusivity::Constant { delta } | Diffusivity::Linear { delta } => *delta,
            Diffusivity::Tabulated(t) => (0..=points)
                .map(|k| t.value(k as f64 / points as f64))
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(d) = self.scale() {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "diffusivity scale delta = {d} must be positive"
                )));
            }
        }
        let (d0, d1) = (self.value(0.0), self.value(1.0));
        if d0 < 0.0 || d1 < 0.0 {
            return Err(Error::InvalidNetwork(format!(
                "diffusivity negative at an endpoint: D(0) = {d0}, D(1) = {d1}"
            )));
        }
        let h = 1.0 / SHAPE_GRID as f64;
        if let Some(k) = (1..SHAPE_GRID).find(|&k| !(self.value(k as f64 * h) > 0.0)) {
            return Err(Error::InvalidNetwork(format!(
                "diffusivity not positive at rho = {}",
                k as f64 * h
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Incoming,
    Outgoing,
}

#[derive(Clone, Debug)]
pub struct Road {
    pub id: usize,
    pub orientation: Orientation,
    pub flux: Flux,
    pub diffusivity: Diffusivity,
}

impl Road {
    pub fn new(orientation: Orientation, flux: Flux, diffusivity: Diffusivity) -> Self {
        Self {
            id: 0,
            orientation,
            flux,
            diffusivity,
        }
    }

    pub fn incoming(flux: Flux, diffusivity: Diffusivity) -> Self {
        Self::new(Orientation::Incoming, flux, diffusivity)
    }

    pub fn outgoing(flux: Flux, diffusivity: Diffusivity) -> Self {
        Self::new(Orientation::Outgoing, flux, diffusivity)
    }

    pub fn validate(&self) -> Result<()> {
        self.flux
            .validate()
            .and_then(|_| self.diffusivity.validate())
            .map_err(|e| match e {
                Error::InvalidNetwork(msg) => Error::InvalidNetwork(format!("road {}: {msg}", self.id)),
                other => other,
            })
    }
}

/// `m` incoming and `n` outgoing roads meeting at one node, with the
/// distribution matrix `alpha[i][j]`: the share of incoming road `i` sent to
/// outgoing road `j`.
///
/// Roads are numbered globally, incoming first: road `h` is incoming iff
/// `h < m`.
#[derive(Clone, Debug)]
pub struct StarNetwork {
    roads: Vec<Road>,
    m: usize,
    alpha: Vec<Vec<f64>>,
}

impl StarNetwork {
    pub fn new(incoming: Vec<Road>, outgoing: Vec<Road>, alpha: Vec<Vec<f64>>) -> Result<Self> {
        let m = incoming.len();
        if incoming.iter().any(|r| r.orientation != Orientation::Incoming)
            || outgoing.iter().any(|r| r.orientation != Orientation::Outgoing)
        {
            return Err(Error::InvalidNetwork("road orientation does not match its list".into()));
        }
        let mut roads: Vec<Road> = incoming.into_iter().chain(outgoing).collect();
        for (h, r) in roads.iter_mut().enumerate() {
            r.id = h;
        }
        let net = Self { roads, m, alpha };
        net.validate()?;
        Ok(net)
    }

    /// Checks every structural requirement; [`StarNetwork::new`] already
    /// calls this.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m(), self.n());
        if m == 0 || n == 0 {
            return Err(Error::InvalidNetwork(format!(
                "need at least one incoming and one outgoing road, got m = {m}, n = {n}"
            )));
        }
        if self.alpha.len() != m || self.alpha.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidNetwork(format!("alpha must be {m} x {n}")));
        }
        for (i, row) in self.alpha.iter().enumerate() {
            if let Some(a) = row.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
                return Err(Error::InvalidNetwork(format!(
                    "alpha entry {a} in row {i} not in (0, 1]"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidNetwork(format!(
                    "alpha row {i} sums to {s}, not 1"
                )));
            }
        }
        self.roads.iter().try_for_each(Road::validate)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.roads.len() - self.m
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn road(&self, h: usize) -> &Road {
        &self.roads[h]
    }

    pub fn incoming(&self) -> &[Road] {
        &self.roads[..self.m]
    }

    pub fn outgoing(&self) -> &[Road] {
        &self.roads[self.m..]
    }

    /// `alpha[i][j]` for incoming `i` and outgoing `j`, both zero-based
    /// within their own lists.
    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[i][j]
    }

    pub fn alpha_matrix(&self) -> &[Vec<f64>] {
        &self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_to_one(flux: Flux) -> Result<StarNetwork> {
        StarNetwork::new(
            vec![Road::incoming(flux.clone(), Diffusivity::constant(1.0))],
            vec![Road::outgoing(flux, Diffusivity::constant(1.0))],
            vec![vec![1.0]],
        )
    }

    #[test]
    fn quadratic_values() {
        let f = Flux::quadratic(2.0);
        assert_eq!(f.eval(0.5).unwrap(), 0.5);
        assert_eq!(f.argmax(), 0.5);
        assert!(matches!(f.eval(1.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn logarithmic_values() {
        let f = Flux::logarithmic(1.0);
        let e1 = (-1.0f64).exp();
        assert!((f.argmax() - e1).abs() < 1e-15);
        assert!((f.eval(e1).unwrap() - e1).abs() < 1e-15);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        assert_eq!(f.deriv(0.0), f64::INFINITY);
    }

    #[test]
    fn tabulated_argmax_found_by_search() {
        let t = Tabulated::new("cubic", |r| r * (1.0 - r) * (2.0 - r), |r| 2.0 - 6.0 * r + 3.0 * r * r);
        let f = Flux::Tabulated(t);
        // f' = 0 at 1 - 1/sqrt(3)
        assert!((f.argmax() - (1.0 - 1.0 / 3f64.sqrt())).abs() < 1e-8);
    }

    #[test]
    fn non_concave_flux_rejected() {
        let t = Tabulated::new(
            "bump",
            |r| r * (1.0 - r) * (1.0 + 10.0 * r),
            |r| 1.0 + 18.0 * r - 30.0 * r * r,
        );
        let err = one_to_one(Flux::Tabulated(t)).unwrap_err();
        assert!(err.to_string().contains("not concave"), "{err}");
    }

    #[test]
    fn bad_row_sum_rejected() {
        let err = StarNetwork::new(
            vec![Road::incoming(Flux::quadratic(1.0), Diffusivity::constant(1.0))],
            vec![
                Road::outgoing(Flux::quadratic(1.0), Diffusivity::constant(1.0)),
                Road::outgoing(Flux::quadratic(1.0), Diffusivity::constant(1.0)),
            ],
            vec![vec![0.6, 0.5]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("sums to"));
    }

    #[test]
    fn zero_alpha_rejected() {
        let err = StarNetwork::new(
            vec![Road::incoming(Flux::quadratic(1.0), Diffusivity::constant(1.0))],
            vec![
                Road::outgoing(Flux::quadratic(1.0), Diffusivity::constant(1.0)),
                Road::outgoing(Flux::quadratic(1.0), Diffusivity::constant(1.0)),
            ],
            vec![vec![1.0, 0.0]],
        );
        assert!(err.is_err());
    }

    #[test]
    fn diffusivity_negative_rejected() {
        let t = Tabulated::new("neg", |r| r - 0.5, |_| 1.0);
        let net = StarNetwork::new(
            vec![Road::incoming(Flux::quadratic(1.0), Diffusivity::Tabulated(t))],
            vec![Road::outgoing(Flux::quadratic(1.0), Diffusivity::constant(1.0))],
            vec![vec![1.0]],
        );
        assert!(net.is_err());
    }

    #[test]
    fn inverse_branches() {
        for f in [Flux::quadratic(1.3), Flux::logarithmic(0.7)] {
            for y in [0.0, 0.05, 0.2] {
                let l = f.inverse_left(y).unwrap();
                let r = f.inverse_right(y).unwrap();
                assert!(l <= f.argmax() && r >= f.argmax());
                assert!((f.value(l) - y).abs() < 1e-14);
                assert!((f.value(r) - y).abs() < 1e-14);
            }
            assert!(f.inverse_left(f.max_value() * 1.01).is_err());
        }
    }

    #[test]
    fn increments_agree_with_differences() {
        let cases = [Flux::quadratic(1.0), Flux::logarithmic(2.0)];
        for f in &cases {
            for &(x, t) in &[(0.2, 0.3), (0.0, 0.4), (0.9, -0.5), (0.6, -0.6), (0.3, 1e-3)] {
                let d = f.value(x + t) - f.value(x);
                assert!((f.increment(x, t) - d).abs() < 1e-14, "{f:?} {x} {t}");
            }
        }
    }

    #[test]
    fn tabulated_increment_keeps_relative_accuracy() {
        let t = Tabulated::new("quad", |r| r * (1.0 - r), |r| 1.0 - 2.0 * r);
        let f = Flux::Tabulated(t);
        let exact = Flux::quadratic(1.0).increment(0.3, 1e-9);
        assert!(((f.increment(0.3, 1e-9) - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn hermite_samples_reproduce_cubic() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|r| r * (1.0 - r)).collect();
        let ms: Vec<f64> = xs.iter().map(|r| 1.0 - 2.0 * r).collect();
        let t = Tabulated::from_samples(&xs, &ys, &ms).unwrap();
        for k in 0..=37 {
            let r = k as f64 / 37.0;
            assert!((t.value(r) - r * (1.0 - r)).abs() < 1e-15);
            assert!((t.deriv(r) - (1.0 - 2.0 * r)).abs() < 1e-13);
        }
    }
}
