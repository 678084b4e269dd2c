//! Representable subharmonic functions and their integral averages.
//!
//! The class is `u(z) = log|c| + Σ m_j log|z − a_j| + coeff·|z|^rho + k`.
//! Every term has closed-form circle and disk means about the points where
//! it matters, which is what makes the averaging identities exactly
//! testable:
//!
//! * `C` of `log|· − a|` over `∂D̄(z, r)` is `log max(|z − a|, r)`;
//! * `B` of the same term is `log s` for `s = |z − a| ≥ r`, otherwise
//!   `log r − 1/2 + s²/(2r²)`;
//! * about the origin, `C` and `B` of `|·|^rho` are `r^rho` and
//!   `2 r^rho / (rho + 2)`.
//!
//! Off-centre radial terms fall back to quadrature in both backends.

use std::f64::consts::{E, TAU};

use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::measures::{Atom, PointMassMeasure};
use crate::quad::{gauss_legendre, gl_integrate, periodic_mean};
use crate::{Error, Result};

/// A function that can be evaluated pointwise and maximised on circles.
pub trait Subharmonic: Sync {
    fn value(&self, z: Point) -> f64;

    /// `M(z, r)`, the supremum over `∂D̄(z, r)`.
    fn sup_on_circle(&self, z: Point, r: f64) -> f64 {
        if r == 0.0 {
            return self.value(z);
        }
        sampled_sup(|w| self.value(w), z, r, None).value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub location: Point,
    pub multiplicity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPower {
    pub coeff: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionSpec", into = "FunctionSpec")]
pub struct LogModulusFunction {
    zeros: Vec<Zero>,
    log_lead_coeff: f64,
    radial: Option<RadialPower>,
    constant: f64,
}

/// Wire form: `{"poly_zeros": [[re, im, mult], …], "log_lead_coeff": c,
/// "radial": [coeff, rho], "constant": k}`; every key is optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default)]
    pub poly_zeros: Vec<[f64; 3]>,
    #[serde(default)]
    pub log_lead_coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<[f64; 2]>,
    #[serde(default)]
    pub constant: f64,
}

impl TryFrom<FunctionSpec> for LogModulusFunction {
    type Error = Error;

    fn try_from(spec: FunctionSpec) -> Result<Self> {
        let zeros =
            spec.poly_zeros.iter().map(|z| Zero { location: Point::new(z[0], z[1]), multiplicity: z[2] }).collect();
        let radial = spec.radial.map(|[coeff, rho]| RadialPower { coeff, rho });
        LogModulusFunction::new(zeros, spec.log_lead_coeff, radial, spec.constant)
    }
}

impl From<LogModulusFunction> for FunctionSpec {
    fn from(u: LogModulusFunction) -> Self {
        FunctionSpec {
            poly_zeros: u.zeros.iter().map(|z| [z.location.re, z.location.im, z.multiplicity]).collect(),
            log_lead_coeff: u.log_lead_coeff,
            radial: u.radial.map(|r| [r.coeff, r.rho]),
            constant: u.constant,
        }
    }
}

impl LogModulusFunction {
    pub fn new(zeros: Vec<Zero>, log_lead_coeff: f64, radial: Option<RadialPower>, constant: f64) -> Result<Self> {
        for z in &zeros {
            if !(z.multiplicity > 0.0 && z.multiplicity.is_finite()) || !z.location.is_finite() {
                return Err(Error::pre("zero multiplicities must be positive and locations finite"));
            }
        }
        if let Some(r) = radial {
            if !(r.coeff > 0.0 && r.coeff.is_finite() && r.rho >= 0.0 && r.rho.is_finite()) {
                return Err(Error::pre("radial term needs coeff > 0 and rho >= 0"));
            }
        }
        if !constant.is_finite() {
            return Err(Error::pre("additive constant must be finite"));
        }
        if log_lead_coeff.is_nan() || log_lead_coeff == f64::INFINITY {
            return Err(Error::pre("log_lead_coeff must be finite or -inf"));
        }
        Ok(LogModulusFunction { zeros, log_lead_coeff, radial, constant })
    }

    /// `log|c · Π (z − a_j)^{m_j}|`.
    pub fn polynomial(zeros: Vec<Zero>, log_lead_coeff: f64) -> Result<Self> {
        Self::new(zeros, log_lead_coeff, None, 0.0)
    }

    /// `log|Π (z − a_j)|` with unit multiplicities.
    pub fn from_roots(roots: &[Point]) -> Self {
        let zeros = roots.iter().map(|&location| Zero { location, multiplicity: 1.0 }).collect();
        LogModulusFunction { zeros, log_lead_coeff: 0.0, radial: None, constant: 0.0 }
    }

    pub fn radial_power(coeff: f64, rho: f64) -> Result<Self> {
        Self::new(Vec::new(), 0.0, Some(RadialPower { coeff, rho }), 0.0)
    }

    pub fn constant_fn(k: f64) -> Result<Self> {
        Self::new(Vec::new(), 0.0, None, k)
    }

    pub fn zeros(&self) -> &[Zero] {
        &self.zeros
    }

    pub fn log_lead_coeff(&self) -> f64 {
        self.log_lead_coeff
    }

    pub fn radial(&self) -> Option<RadialPower> {
        self.radial
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn is_polynomial(&self) -> bool {
        self.radial.is_none()
    }

    /// `log|f| ≡ −∞`, i.e. `f ≡ 0`.
    pub fn is_identically_neg_infinite(&self) -> bool {
        self.log_lead_coeff == f64::NEG_INFINITY
    }

    pub fn with_radial(mut self, radial: RadialPower) -> Result<Self> {
        self.radial = Some(radial);
        Self::new(self.zeros, self.log_lead_coeff, self.radial, self.constant)
    }

    /// The same function shifted by an additive constant (`log|e^k f|`).
    pub fn shifted(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.constant += k;
        out
    }

    fn offset(&self) -> f64 {
        self.log_lead_coeff + self.constant
    }

    pub fn evaluate(&self, z: Point) -> f64 {
        let mut v = self.offset();
        for zero in &self.zeros {
            let s = z.dist(zero.location);
            if s == 0.0 {
                return f64::NEG_INFINITY;
            }
            v += zero.multiplicity * s.ln();
        }
        if let Some(r) = self.radial {
            v += radial_value(r, z);
        }
        v
    }

    /// `Δ_u` as atoms at the zeros with their multiplicities.
    pub fn riesz_measure(&self) -> Result<PointMassMeasure> {
        if self.radial.is_some() {
            return Err(Error::Unsupported("the Riesz measure of a radial power term is not atomic".into()));
        }
        PointMassMeasure::new(self.zeros.iter().map(|z| Atom { location: z.location, mass: z.multiplicity }).collect())
    }

    /// Whether some zero lies within `rel·r` of the circle `∂D̄(z, r)`.
    pub fn zero_near_circle(&self, z: Point, r: f64, rel: f64) -> bool {
        self.zeros.iter().any(|a| (a.location.dist(z) - r).abs() <= rel * r)
    }

    fn poly_circle_mean(&self, z: Point, r: f64) -> f64 {
        self.offset() + self.zeros.iter().map(|a| a.multiplicity * a.location.dist(z).max(r).ln()).sum::<f64>()
    }

    fn poly_disk_mean(&self, z: Point, r: f64) -> f64 {
        self.offset() + self.zeros.iter().map(|a| a.multiplicity * zero_disk_mean(a.location.dist(z), r)).sum::<f64>()
    }
}

fn radial_value(r: RadialPower, z: Point) -> f64 {
    if r.rho == 0.0 {
        r.coeff
    } else {
        r.coeff * z.norm().powf(r.rho)
    }
}

/// `B` of `log|· − a|` over `D(z, r)` with `s = |z − a|`.
pub fn zero_disk_mean(s: f64, r: f64) -> f64 {
    if s >= r {
        s.ln()
    } else {
        r.ln() - 0.5 + s * s / (2.0 * r * r)
    }
}

impl Subharmonic for LogModulusFunction {
    fn value(&self, z: Point) -> f64 {
        self.evaluate(z)
    }

    fn sup_on_circle(&self, z: Point, r: f64) -> f64 {
        sup_on_circle(self, z, r).value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageBackend {
    pub kind: BackendKind,
    /// Starting node count of the adaptive circle rule.
    pub quadrature_nodes: usize,
    /// Gauss–Legendre nodes per radial piece of the disk rule.
    pub radial_nodes: usize,
}

impl AverageBackend {
    pub const MIN_NODES: usize = 16;
    pub const NODE_CAP: usize = 1 << 16;
    pub const CONVERGENCE_TOL: f64 = 1e-9;

    pub fn closed_form() -> Self {
        AverageBackend { kind: BackendKind::ClosedForm, quadrature_nodes: 64, radial_nodes: 24 }
    }

    pub fn quadrature() -> Self {
        AverageBackend { kind: BackendKind::Quadrature, quadrature_nodes: 64, radial_nodes: 24 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quadrature_nodes < Self::MIN_NODES || self.radial_nodes < Self::MIN_NODES {
            return Err(Error::pre(format!("backend node counts must be >= {}", Self::MIN_NODES)));
        }
        Ok(())
    }

    /// Error bound used by the sandwich checks.
    pub fn tolerance(&self) -> f64 {
        match self.kind {
            BackendKind::ClosedForm => 1e-10,
            BackendKind::Quadrature => 1e-6,
        }
    }
}

impl Default for AverageBackend {
    fn default() -> Self {
        Self::closed_form()
    }
}

/// A computed average. `near_singular` is set when quadrature ran with a
/// zero within `1e-3·r` of an integration circle, where the trapezoidal
/// rule loses its spectral accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mean {
    pub value: f64,
    pub near_singular: bool,
}

const NEAR_SINGULAR_REL: f64 = 1e-3;

fn quad_circle(f: impl Fn(Point) -> f64, z: Point, r: f64, n0: usize) -> f64 {
    periodic_mean(|theta| f(z + Point::polar(r, theta)), n0, AverageBackend::CONVERGENCE_TOL, AverageBackend::NODE_CAP)
        .value
}

/// `C_u(z, r)`, the mean of `u` over `∂D̄(z, r)`.
pub fn circle_mean(u: &LogModulusFunction, z: Point, r: f64, backend: &AverageBackend) -> Mean {
    debug_assert!(r >= 0.0);
    if r == 0.0 {
        return Mean { value: u.evaluate(z), near_singular: false };
    }
    match backend.kind {
        BackendKind::ClosedForm => {
            let mut value = u.poly_circle_mean(z, r);
            if let Some(rad) = u.radial {
                value += radial_circle_mean(rad, z, r, backend.quadrature_nodes);
            }
            Mean { value, near_singular: false }
        }
        BackendKind::Quadrature => Mean {
            value: quad_circle(|w| u.evaluate(w), z, r, backend.quadrature_nodes),
            near_singular: u.zero_near_circle(z, r, NEAR_SINGULAR_REL),
        },
    }
}

fn radial_circle_mean(rad: RadialPower, z: Point, r: f64, n0: usize) -> f64 {
    if z == Point::ORIGIN || rad.rho == 0.0 {
        return radial_value(rad, Point::new(r, 0.0));
    }
    quad_circle(|w| radial_value(rad, w), z, r, n0)
}

/// `B_u(z, r) = (2/r²) ∫₀^r C_u(z, t) t dt`.
pub fn disk_mean(u: &LogModulusFunction, z: Point, r: f64, backend: &AverageBackend) -> Mean {
    debug_assert!(r > 0.0);
    match backend.kind {
        BackendKind::ClosedForm => {
            let mut value = u.poly_disk_mean(z, r);
            if let Some(rad) = u.radial {
                value += if z == Point::ORIGIN || rad.rho == 0.0 {
                    radial_value(rad, Point::new(r, 0.0)) * 2.0 / (rad.rho + 2.0)
                } else {
                    let breaks = [z.norm()];
                    2.0 / (r * r)
                        * radial_integral(
                            |t| radial_circle_mean(rad, z, t, backend.quadrature_nodes),
                            r,
                            &breaks,
                            false,
                            backend.radial_nodes,
                        )
                };
            }
            Mean { value, near_singular: false }
        }
        BackendKind::Quadrature => {
            let mut breaks: Vec<f64> = u.zeros.iter().map(|a| a.location.dist(z)).collect();
            let mut singular = breaks.iter().any(|&s| s <= 1e-12 * r);
            if u.radial.is_some() {
                breaks.push(z.norm());
                singular |= z.norm() <= 1e-12 * r;
            }
            let value = 2.0 / (r * r)
                * radial_integral(
                    |t| quad_circle(|w| u.evaluate(w), z, t, backend.quadrature_nodes),
                    r,
                    &breaks,
                    singular,
                    backend.radial_nodes,
                );
            let near_singular = u.zeros.iter().any(|a| {
                let s = a.location.dist(z);
                s < r * (1.0 + NEAR_SINGULAR_REL) && s > 1e-12 * r
            });
            Mean { value, near_singular }
        }
    }
}

/// `∫₀^r f(t) t dt` by Gauss–Legendre on pieces split at `breaks`, with a
/// geometric grading towards zero when the integrand is singular there.
fn radial_integral(f: impl Fn(f64) -> f64, r: f64, breaks: &[f64], singular_at_zero: bool, nodes: usize) -> f64 {
    let rule = gauss_legendre(nodes);
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > 1e-12 * r && b < r).collect();
    cuts.push(0.0);
    cuts.push(r);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * r);
    let g = |t: f64| if t == 0.0 { 0.0 } else { f(t) * t };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == 0.0 && singular_at_zero {
            // [b/4^{k+1}, b/4^k] for k < 24; the remainder is O(b² 4^{-48} log).
            let mut hi = b;
            for _ in 0..24 {
                let lo = hi / 4.0;
                total += gl_integrate(g, lo, hi, &rule);
                hi = lo;
            }
        } else {
            total += gl_integrate(g, a, b, &rule);
        }
    }
    total
}

/// `M_u(z, r)` as a sampled lower bound with an optional Lipschitz-based
/// upper certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub value: f64,
    pub upper_bound: Option<f64>,
}

pub const SUP_SAMPLES: usize = 1 << 10;

pub fn sup_on_circle(u: &LogModulusFunction, z: Point, r: f64) -> SupEstimate {
    if r == 0.0 {
        let v = u.evaluate(z);
        return SupEstimate { value: v, upper_bound: Some(v) };
    }
    if u.zeros.is_empty() && (z == Point::ORIGIN || u.radial.is_none()) {
        // Constant on the circle.
        let v = u.evaluate(z + Point::new(r, 0.0));
        return SupEstimate { value: v, upper_bound: Some(v) };
    }
    sampled_sup(|w| u.evaluate(w), z, r, lipschitz_in_angle(u, z, r))
}

/// Bound on `|d/dθ u(z + r e^{iθ})|`, when finite.
fn lipschitz_in_angle(u: &LogModulusFunction, z: Point, r: f64) -> Option<f64> {
    let mut l = 0.0;
    for a in &u.zeros {
        let gap = (a.location.dist(z) - r).abs();
        if gap == 0.0 {
            return None;
        }
        l += a.multiplicity * r / gap;
    }
    if let Some(rad) = u.radial {
        if rad.rho > 0.0 {
            let m = z.norm();
            let extreme = if rad.rho >= 1.0 { m + r } else { (m - r).abs() };
            if extreme == 0.0 {
                return None;
            }
            l += rad.coeff * rad.rho * r * extreme.powf(rad.rho - 1.0);
        }
    }
    Some(l)
}

/// Dense angular sampling followed by golden-section refinement of the best
/// bracket.
pub(crate) fn sampled_sup(f: impl Fn(Point) -> f64, z: Point, r: f64, lipschitz: Option<f64>) -> SupEstimate {
    let n = SUP_SAMPLES;
    let h = TAU / n as f64;
    let g = |theta: f64| f(z + Point::polar(r, theta));
    let (mut best_j, mut best) = (0, f64::NEG_INFINITY);
    for j in 0..n {
        let v = g(j as f64 * h);
        if v > best {
            best = v;
            best_j = j;
        }
    }
    let sampled = best;
    // Golden-section on [θ_{j-1}, θ_{j+1}].
    let (mut a, mut b) = ((best_j as f64 - 1.0) * h, (best_j as f64 + 1.0) * h);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
        best = best.max(fc).max(fd);
    }
    SupEstimate { value: best, upper_bound: lipschitz.map(|l| sampled + l * h / 2.0) }
}

/// `u(z) − [C_u(z,r) − ∫₀^r Δ_u(z,t)/t dt]`, both sides in closed form.
/// `None` when `z` is a zero of `u` (both sides are `−∞`).
pub fn poisson_jensen_residual(u: &LogModulusFunction, z: Point, r: f64) -> Result<Option<f64>> {
    let mu = u.riesz_measure()?;
    let value = u.evaluate(z);
    if value == f64::NEG_INFINITY {
        return Ok(None);
    }
    let c = circle_mean(u, z, r, &AverageBackend::closed_form()).value;
    Ok(Some(value - (c - mu.log_potential_integral(z, r))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbSandwich {
    pub b: f64,
    pub c: f64,
    pub b_stretched: f64,
    pub ok: bool,
}

/// `B(z,t) ≤ C(z,t) ≤ B(z, √e·t)`.
pub fn cb_sandwich_check(u: &LogModulusFunction, z: Point, t: f64, backend: &AverageBackend) -> CbSandwich {
    let tol = backend.tolerance();
    let b = disk_mean(u, z, t, backend).value;
    let c = circle_mean(u, z, t, backend).value;
    let b_stretched = disk_mean(u, z, E.sqrt() * t, backend).value;
    let scale = 1.0f64.max(c.abs());
    CbSandwich { b, c, b_stretched, ok: b <= c + tol * scale && c <= b_stretched + tol * scale }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Holds,
    Fails,
    /// Precondition `C_u(1) ≥ 0` not met; the link is not asserted.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs` for inequalities, `|rhs − lhs|` for the identity.
    pub slack: f64,
    pub status: LinkStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub r: f64,
    pub links: Vec<ChainLink>,
    pub ok: bool,
}

const CHAIN_TOL: f64 = 1e-10;

/// The radial chain `B(r) − C(1) ≤ C(r) − C(1) = ∫₁^r Δ^rad(t)/t dt` and,
/// when `C(1) ≥ 0`, `∫₁^r … ≤ C(r) ≤ B(√e·r)`.
pub fn dc_chain_check(u: &LogModulusFunction, r: f64) -> Result<ChainReport> {
    if !(r >= 1.0) {
        return Err(Error::pre(format!("chain radius must be >= 1, got {r}")));
    }
    let mu = u.riesz_measure()?;
    let cf = AverageBackend::closed_form();
    let o = Point::ORIGIN;
    let c1 = circle_mean(u, o, 1.0, &cf).value;
    let cr = circle_mean(u, o, r, &cf).value;
    let br = disk_mean(u, o, r, &cf).value;
    let bs = disk_mean(u, o, E.sqrt() * r, &cf).value;
    let integral: f64 = mu
        .atoms()
        .iter()
        .filter(|a| a.location.norm() <= r)
        .map(|a| a.mass * (r / a.location.norm().max(1.0)).ln())
        .sum();
    let scale = 1.0f64.max(cr.abs()).max(c1.abs());
    let tol = CHAIN_TOL * scale;
    let ineq = |name: &str, lhs: f64, rhs: f64, active: bool| {
        let slack = rhs - lhs;
        let status = if !active {
            LinkStatus::Skipped
        } else if slack >= -tol {
            LinkStatus::Holds
        } else {
            LinkStatus::Fails
        };
        ChainLink { name: name.into(), lhs, rhs, slack, status }
    };
    let identity_resid = ((cr - c1) - integral).abs();
    let normalized = c1 >= 0.0;
    let links = vec![
        ineq("B(r)-C(1) <= C(r)-C(1)", br - c1, cr - c1, true),
        ChainLink {
            name: "C(r)-C(1) = int_1^r mu_rad(t)/t dt".into(),
            lhs: cr - c1,
            rhs: integral,
            slack: identity_resid,
            status: if identity_resid <= tol { LinkStatus::Holds } else { LinkStatus::Fails },
        },
        ineq("int_1^r mu_rad(t)/t dt <= C(r)", integral, cr, normalized),
        ineq("C(r) <= B(sqrt(e) r)", cr, bs, normalized),
    ];
    let ok = links.iter().all(|l| l.status != LinkStatus::Fails);
    Ok(ChainReport { r, links, ok })
}
