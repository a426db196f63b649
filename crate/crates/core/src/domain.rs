//! Nozzle geometry, the truncated computational grid and Dirichlet data.
//!
//! The nozzle wall is `x₁ = Θ(x₂)` for `x₂ ∈ (1, H̄)`, ending at the mouth
//! `A = (0, 1)`. The fluid region lies below the wall and below the segment
//! `[0, ∞) × {1}`; the axis `x₂ = 0` closes it from below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Pchip;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NozzleShape {
    /// `Θ(x₂) = ln((H̄ - x₂)/(H̄ - 1))`.
    Log,
    /// `Θ(x₂) = -L(x₂ - 1)²/(H̄ - x₂)`, tangent to the vertical at the mouth.
    QuadraticPole { length: f64 },
    /// Sampled `(x₂, Θ)` pairs.
    Table { curve: Pchip },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nozzle {
    bar_h: f64,
    shape: NozzleShape,
}

impl Nozzle {
    pub fn log(bar_h: f64) -> Result<Self> {
        check_bar_h(bar_h)?;
        Ok(Self { bar_h, shape: NozzleShape::Log })
    }

    pub fn quadratic_pole(bar_h: f64, length: f64) -> Result<Self> {
        check_bar_h(bar_h)?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Geometry(format!("nozzle length scale must be positive, got {length}")));
        }
        Ok(Self {
            bar_h,
            shape: NozzleShape::QuadraticPole { length },
        })
    }

    /// Samples must start at the mouth `(x₂, Θ) = (1, 0)` and stay below `H̄`.
    pub fn from_table(bar_h: f64, x2: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        check_bar_h(bar_h)?;
        let curve = Pchip::new(x2, theta)
            .ok_or_else(|| Error::Geometry("nozzle table needs ≥ 2 strictly increasing finite heights".into()))?;
        if (curve.x_min() - 1.0).abs() > 1e-12 || curve.values()[0].abs() > 1e-12 {
            return Err(Error::Geometry("nozzle table must start at the mouth (1, 0)".into()));
        }
        if curve.x_max() >= bar_h {
            return Err(Error::Geometry(format!(
                "nozzle table reaches x2={} but must stay below H={bar_h}",
                curve.x_max()
            )));
        }
        Ok(Self {
            bar_h,
            shape: NozzleShape::Table { curve },
        })
    }

    pub fn bar_h(&self) -> f64 {
        self.bar_h
    }

    pub fn shape(&self) -> &NozzleShape {
        &self.shape
    }

    /// `Θ(x₂)` for `x₂ ∈ [1, H̄)`; `-∞` at and above `H̄`.
    pub fn theta(&self, x2: f64) -> f64 {
        self.theta2(x2).0
    }

    pub fn theta_deriv(&self, x2: f64) -> f64 {
        self.theta2(x2).1
    }

    fn theta2(&self, x2: f64) -> (f64, f64) {
        let hb = self.bar_h;
        if x2 >= hb {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        match &self.shape {
            NozzleShape::Log => (((hb - x2) / (hb - 1.0)).ln(), -1.0 / (hb - x2)),
            NozzleShape::QuadraticPole { length } => {
                let d = x2 - 1.0;
                let r = hb - x2;
                (-length * d * d / r, -length * (2.0 * d * r + d * d) / (r * r))
            }
            NozzleShape::Table { curve } => curve.eval2(x2),
        }
    }

    /// Closure of the fluid region.
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        if x2 < 0.0 {
            return false;
        }
        if x2 <= 1.0 {
            return x2 < 1.0 || x1 <= 0.0;
        }
        x2 < self.bar_h && x1 <= self.theta(x2)
    }

    /// Open fluid region.
    pub fn contains_open(&self, x1: f64, x2: f64) -> bool {
        if x2 <= 0.0 {
            return false;
        }
        if x2 < 1.0 {
            return true;
        }
        x2 < self.bar_h && x1 < self.theta(x2)
    }

    /// `b_μ = Θ⁻¹(-μ)`: the wall height at the inlet section.
    pub fn inlet_height(&self, mu: f64) -> Result<f64> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Geometry(format!("upstream truncation must be positive, got {mu}")));
        }
        let hb = self.bar_h;
        match &self.shape {
            NozzleShape::Log => Ok(hb - (hb - 1.0) * (-mu).exp()),
            NozzleShape::QuadraticPole { .. } => Ok(self.bisect_theta(-mu, 1.0, hb)),
            NozzleShape::Table { curve } => {
                let top = curve.x_max();
                let xs = curve.knots();
                let ys = curve.values();
                // last crossing of Θ = -μ among the samples
                let k = (0..xs.len() - 1)
                    .rev()
                    .find(|&k| ys[k] >= -mu && ys[k + 1] <= -mu)
                    .ok_or_else(|| {
                        Error::Geometry(format!(
                            "Θ⁻¹(-{mu}) is not bracketed by the nozzle samples on [1, {top}]"
                        ))
                    })?;
                Ok(self.bisect_theta(-mu, xs[k], xs[k + 1]))
            }
        }
    }

    fn bisect_theta(&self, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        // Θ(lo) ≥ target > Θ(hi)
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.theta(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn check_bar_h(bar_h: f64) -> Result<()> {
    if bar_h > 1.0 && bar_h.is_finite() {
        Ok(())
    } else {
        Err(Error::Geometry(format!("nozzle height must exceed 1, got {bar_h}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Axis,
    Inlet,
    Outlet,
    Wall,
    Top,
    /// Outside the fluid region; held at `Q`.
    Exterior,
}

impl NodeKind {
    pub fn is_free(self) -> bool {
        self == NodeKind::Interior
    }

    pub fn code(self) -> u8 {
        match self {
            NodeKind::Interior => 0,
            NodeKind::Axis => 1,
            NodeKind::Inlet => 2,
            NodeKind::Outlet => 3,
            NodeKind::Wall => 4,
            NodeKind::Top => 5,
            NodeKind::Exterior => 6,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => NodeKind::Interior,
            1 => NodeKind::Axis,
            2 => NodeKind::Inlet,
            3 => NodeKind::Outlet,
            4 => NodeKind::Wall,
            5 => NodeKind::Top,
            6 => NodeKind::Exterior,
            _ => return None,
        })
    }
}

/// Requested resolution: cell counts along `x₁` over `[-μ, R]` and along
/// `x₂` over `[0, b_μ]`. Spacings are adjusted so that `x₁ = 0` and `x₂ = 1`
/// fall on grid lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
}

/// Structured grid over the bounding box `[x₁_min, x₁_min + n1·h₁] × [0, n2·h₂]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDomain {
    n1: usize,
    n2: usize,
    h1: f64,
    h2: f64,
    x1_min: f64,
    mu: f64,
    r: f64,
    b_mu: f64,
    mouth_col: Option<usize>,
    mouth_row: Option<usize>,
    kinds: Vec<NodeKind>,
    nozzle: Option<Nozzle>,
}

pub fn build_domain(nozzle: &Nozzle, mu: f64, r: f64, spec: GridSpec) -> Result<TruncatedDomain> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Geometry(format!("downstream truncation must be positive, got {r}")));
    }
    let b_mu = nozzle.inlet_height(mu)?;
    if spec.n1 < 4 || spec.n2 < 4 {
        return Err(Error::Geometry("grid needs at least 4 cells per direction".into()));
    }
    let m = ((spec.n2 as f64) / b_mu).round().max(1.0) as usize;
    if m < 8 {
        return Err(Error::Geometry(format!(
            "only {m} cells span the nozzle mouth; at least 8 are required"
        )));
    }
    let h2 = 1.0 / m as f64;
    let n2 = ((b_mu / h2) - 1e-9).ceil() as usize;
    let k = ((mu * spec.n1 as f64 / (mu + r)).round() as usize).clamp(1, spec.n1 - 1);
    let h1 = mu / k as f64;
    let n1 = spec.n1;
    let r_eff = n1 as f64 * h1 - mu;

    let tol = 1e-9 * h2;
    let mut kinds = Vec::with_capacity((n1 + 1) * (n2 + 1));
    for j in 0..=n2 {
        let x2 = j as f64 * h2;
        for i in 0..=n1 {
            let x1 = -mu + i as f64 * h1;
            let kind = if j == 0 {
                NodeKind::Axis
            } else if i == 0 {
                if x2 <= b_mu + tol {
                    NodeKind::Inlet
                } else {
                    NodeKind::Exterior
                }
            } else if i == n1 {
                if x2 < 1.0 - tol {
                    NodeKind::Outlet
                } else if j == m {
                    NodeKind::Top
                } else {
                    NodeKind::Exterior
                }
            } else if i >= k && x2 >= 1.0 - tol {
                if j == m {
                    NodeKind::Top
                } else {
                    NodeKind::Exterior
                }
            } else if nozzle.contains_open(x1 + 0.5 * h1, x2) && nozzle.contains_open(x1, x2 + 0.5 * h2) {
                NodeKind::Interior
            } else if nozzle.contains(x1, x2) {
                NodeKind::Wall
            } else {
                NodeKind::Exterior
            };
            kinds.push(kind);
        }
    }
    Ok(TruncatedDomain {
        n1,
        n2,
        h1,
        h2,
        x1_min: -mu,
        mu,
        r: r_eff,
        b_mu,
        mouth_col: Some(k),
        mouth_row: Some(m),
        kinds,
        nozzle: Some(nozzle.clone()),
    })
}

impl TruncatedDomain {
    /// Rectangle `[x1_min, x1_max] × [0, height]` with Dirichlet data on all four
    /// sides.
    pub fn rectangle(x1_min: f64, x1_max: f64, height: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(x1_max > x1_min && height > 0.0) || n1 < 2 || n2 < 2 {
            return Err(Error::Geometry("degenerate rectangle".into()));
        }
        let mut kinds = Vec::with_capacity((n1 + 1) * (n2 + 1));
        for j in 0..=n2 {
            for i in 0..=n1 {
                kinds.push(if j == 0 {
                    NodeKind::Axis
                } else if j == n2 {
                    NodeKind::Top
                } else if i == 0 {
                    NodeKind::Inlet
                } else if i == n1 {
                    NodeKind::Outlet
                } else {
                    NodeKind::Interior
                });
            }
        }
        Ok(Self {
            n1,
            n2,
            h1: (x1_max - x1_min) / n1 as f64,
            h2: height / n2 as f64,
            x1_min,
            mu: -x1_min,
            r: x1_max,
            b_mu: height,
            mouth_col: None,
            mouth_row: None,
            kinds,
            nozzle: None,
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Downstream truncation after grid alignment.
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn b_mu(&self) -> f64 {
        self.b_mu
    }

    /// Column index of `x₁ = 0`.
    pub fn mouth_col(&self) -> Option<usize> {
        self.mouth_col
    }

    /// Row index of `x₂ = 1`.
    pub fn mouth_row(&self) -> Option<usize> {
        self.mouth_row
    }

    pub fn nozzle(&self) -> Option<&Nozzle> {
        self.nozzle.as_ref()
    }

    pub fn nodes(&self) -> usize {
        self.kinds.len()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n1 + 1) + i
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        self.x1_min + i as f64 * self.h1
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.h2
    }

    #[inline]
    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.kinds[self.idx(i, j)]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    pub fn cell_area(&self) -> f64 {
        self.h1 * self.h2
    }
}

/// Parameters of the jet boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetBoundaryParams {
    pub lambda: f64,
    pub s: f64,
    pub b_mu: f64,
    pub b_prime: f64,
    pub k_mu: f64,
    /// Height where the outlet profile reaches `Q`.
    pub h_tilde: f64,
}

/// Nodal Dirichlet values. Entries at interior nodes are unused and hold 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    q: f64,
    params: Option<JetBoundaryParams>,
    values: Vec<f64>,
}

/// Default `b'_μ = b_μ - min(0.1, √Q/2)`.
pub fn default_b_prime(b_mu: f64, q: f64) -> f64 {
    b_mu - 0.1f64.min(0.5 * q.sqrt())
}

pub fn boundary_data(
    dom: &TruncatedDomain,
    q: f64,
    lambda: f64,
    s: f64,
    b_prime: Option<f64>,
) -> Result<BoundaryData> {
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::Parameter(format!("exponent s must lie in (1/2, 1), got {s}")));
    }
    if !(lambda > 0.0 && q > 0.0 && lambda.is_finite() && q.is_finite()) {
        return Err(Error::Parameter(format!("Λ and Q must be positive, got Λ={lambda}, Q={q}")));
    }
    let b_mu = dom.b_mu();
    let b_prime = b_prime.unwrap_or_else(|| default_b_prime(b_mu, q));
    let k_mu = b_mu - b_prime;
    if !(k_mu > 0.0 && b_prime > 0.0) {
        return Err(Error::Parameter(format!("b'_μ={b_prime} must lie in (0, b_μ={b_mu})")));
    }
    if k_mu * k_mu >= q {
        return Err(Error::Parameter(format!(
            "k_μ² = {} must be below Q = {q}; increase μ or decrease k_μ",
            k_mu * k_mu
        )));
    }
    let params = JetBoundaryParams {
        lambda,
        s,
        b_mu,
        b_prime,
        k_mu,
        h_tilde: ((1.0 - s) * q / lambda).powf(1.0 / (1.0 - s)),
    };
    let mut values = vec![0.0; dom.nodes()];
    for j in 0..=dom.n2() {
        for i in 0..=dom.n1() {
            let x2 = dom.x2(j);
            values[dom.idx(i, j)] = match dom.kind(i, j) {
                NodeKind::Interior | NodeKind::Axis => 0.0,
                NodeKind::Inlet => inlet_profile(&params, q, x2),
                NodeKind::Outlet => outlet_profile(&params, q, x2),
                NodeKind::Wall | NodeKind::Top | NodeKind::Exterior => q,
            };
        }
    }
    Ok(BoundaryData {
        q,
        params: Some(params),
        values,
    })
}

/// `0` below `b'_μ`, then `Q((x₂ - b'_μ)/k_μ)^{1+s}`, capped at `Q`.
pub fn inlet_profile(p: &JetBoundaryParams, q: f64, x2: f64) -> f64 {
    if x2 <= p.b_prime {
        0.0
    } else if x2 >= p.b_mu {
        q
    } else {
        q * ((x2 - p.b_prime) / p.k_mu).powf(1.0 + p.s)
    }
}

/// `ψ†(x₂)`.
pub fn outlet_profile(p: &JetBoundaryParams, q: f64, x2: f64) -> f64 {
    let x = x2.max(0.0);
    if p.h_tilde < 1.0 {
        (p.lambda / (1.0 - p.s) * x.powf(1.0 - p.s)).min(q)
    } else {
        (q * x.powf(1.0 - p.s)).min(q)
    }
}

impl BoundaryData {
    /// Data from a function of position, for test geometries.
    pub fn from_fn(dom: &TruncatedDomain, q: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; dom.nodes()];
        for j in 0..=dom.n2() {
            for i in 0..=dom.n1() {
                if !dom.kind(i, j).is_free() {
                    values[dom.idx(i, j)] = f(dom.x1(i), dom.x2(j)).clamp(0.0, q);
                }
            }
        }
        Self { q, params: None, values }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn params(&self) -> Option<&JetBoundaryParams> {
        self.params.as_ref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Inlet and outlet profiles extended horizontally: the lower and upper
    /// comparison functions. Above `x₂ = 1` both are `Q` for the outlet.
    pub fn side_profiles(&self, dom: &TruncatedDomain, j: usize) -> (f64, f64) {
        match &self.params {
            Some(p) => {
                let x2 = dom.x2(j);
                let lower = inlet_profile(p, self.q, x2);
                let upper = if x2 < 1.0 { outlet_profile(p, self.q, x2) } else { self.q };
                (lower, upper)
            }
            None => (
                self.values[dom.idx(0, j)],
                self.values[dom.idx(dom.n1(), j)],
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_nozzle_inlet_height() {
        let nz = Nozzle::log(2.0).unwrap();
        for mu in [0.5, 1.0, 2.0, 4.0] {
            let b = nz.inlet_height(mu).unwrap();
            assert!((b - (2.0 - (-mu as f64).exp())).abs() < 1e-14);
            assert!((nz.theta(b) + mu).abs() < 1e-12);
        }
        assert_eq!(nz.theta(1.0), 0.0);
        assert!(nz.theta(2.0).is_infinite());
    }

    #[test]
    fn table_and_pole_inversion() {
        let nz = Nozzle::quadratic_pole(2.0, 1.0).unwrap();
        let b = nz.inlet_height(1.5).unwrap();
        assert!((nz.theta(b) + 1.5).abs() < 1e-10);
        assert_eq!(nz.theta_deriv(1.0), 0.0);
        let xs: Vec<f64> = (0..40).map(|k| 1.0 + 0.95 * k as f64 / 39.0).collect();
        let th: Vec<f64> = xs.iter().map(|&x| ((2.0 - x) / 1.0f64).ln()).collect();
        let tb = Nozzle::from_table(2.0, xs, th).unwrap();
        let b = tb.inlet_height(1.0).unwrap();
        assert!((b - (2.0 - (-1.0f64).exp())).abs() < 1e-4);
        assert!(matches!(tb.inlet_height(10.0), Err(Error::Geometry(_))));
    }

    #[test]
    fn grid_alignment_and_mask() {
        let nz = Nozzle::log(2.0).unwrap();
        let dom = build_domain(&nz, 1.0, 2.0, GridSpec { n1: 48, n2: 32 }).unwrap();
        let k = dom.mouth_col().unwrap();
        let m = dom.mouth_row().unwrap();
        assert!(dom.x1(k).abs() < 1e-12);
        assert!((dom.x2(m) - 1.0).abs() < 1e-12);
        assert!(dom.x2(dom.n2()) >= dom.b_mu() - 1e-12);
        let total: usize = [
            NodeKind::Interior,
            NodeKind::Axis,
            NodeKind::Inlet,
            NodeKind::Outlet,
            NodeKind::Wall,
            NodeKind::Top,
            NodeKind::Exterior,
        ]
        .iter()
        .map(|&kd| dom.count(kd))
        .sum();
        assert_eq!(total, dom.nodes());
        for j in 0..=dom.n2() {
            for i in 0..=dom.n1() {
                if dom.kind(i, j).is_free() {
                    assert!(nz.contains_open(dom.x1(i), dom.x2(j)));
                }
            }
        }
        assert!(build_domain(&nz, 1.0, 2.0, GridSpec { n1: 48, n2: 8 }).is_err());
    }

    #[test]
    fn boundary_values() {
        let nz = Nozzle::log(2.0).unwrap();
        let dom = build_domain(&nz, 1.0, 2.0, GridSpec { n1: 48, n2: 32 }).unwrap();
        let q = 0.4;
        let bd = boundary_data(&dom, q, 0.9, 0.75, None).unwrap();
        let p = *bd.params().unwrap();
        assert_eq!(inlet_profile(&p, q, p.b_prime), 0.0);
        assert!((inlet_profile(&p, q, p.b_mu) - q).abs() < 1e-15);
        assert!(p.h_tilde < 1.0);
        assert!((outlet_profile(&p, q, p.h_tilde) - q).abs() < 1e-12);
        assert!(p.k_mu * p.k_mu < q);
        for &v in bd.values() {
            assert!((0.0..=q).contains(&v));
        }
        let mut last = (0.0, 0.0);
        for j in 0..=dom.n2() {
            let (a, b) = bd.side_profiles(&dom, j);
            assert!(a >= last.0 && b >= last.1);
            assert!(a <= b);
            last = (a, b);
        }
        assert!(boundary_data(&dom, q, 0.9, 0.75, Some(dom.b_mu() - 0.9)).is_err());
        assert!(boundary_data(&dom, q, 0.9, 0.4, None).is_err());
    }
}
