//! One-dimensional strip solutions `ψ(x₂)` of
//! `(g_ε(ψ'², ψ)ψ')' = ∂_zG_ε(ψ'², ψ)`, used as oracles for the 2D solver.
//!
//! Both problems are integrated with `ψ` as the independent variable, so the
//! unknown height becomes an output: with `m = g_ε ψ'`,
//! `dx₂/dψ = 1/ψ'` and `dm/dψ = ∂_zG_ε/ψ'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::truncation::TruncatedEnergy;

/// Monotone profile tabulated at uniform `ψ` levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripProfile {
    pub q: f64,
    /// Heights `x₂(ψ_k)`, strictly increasing from `x2[0]`.
    pub x2: Vec<f64>,
    /// Slopes `ψ'(x₂(ψ_k))`.
    pub slope: Vec<f64>,
}

impl StripProfile {
    pub fn height(&self) -> f64 {
        self.x2[self.x2.len() - 1] - self.x2[0]
    }

    fn level(&self, k: usize) -> f64 {
        self.q * k as f64 / (self.x2.len() - 1) as f64
    }

    /// `ψ(x₂)`, clamped to `0` below and `Q` above the table.
    pub fn value(&self, x: f64) -> f64 {
        let n = self.x2.len() - 1;
        if x <= self.x2[0] {
            return 0.0;
        }
        if x >= self.x2[n] {
            return self.q;
        }
        let k = self.x2.partition_point(|&v| v <= x).clamp(1, n) - 1;
        let (xa, xb) = (self.x2[k], self.x2[k + 1]);
        let h = xb - xa;
        let s = (x - xa) / h;
        let (ya, yb) = (self.level(k), self.level(k + 1));
        let (da, db) = (self.slope[k] * h, self.slope[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * ya + (s3 - 2.0 * s2 + s) * da + (-2.0 * s3 + 3.0 * s2) * yb + (s3 - s2) * db
    }
}

/// Inverts `m = g_ε(p², z)·p` for `p ≥ 0`.
fn slope_of_flux(energy: &TruncatedEnergy, m: f64, z: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (m / energy.g_upper(), m / energy.g_lower());
    let mut p = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, gt) = energy.g_pair(p * p, z);
        let f = g * p - m;
        if f > 0.0 {
            hi = p;
        } else {
            lo = p;
        }
        let df = g + 2.0 * p * p * gt;
        let next = p - f / df;
        p = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if (hi - lo) <= 1e-15 * hi || f.abs() <= 1e-16 * m {
            break;
        }
    }
    p
}

/// Integrates from `ψ = 0` with flux `m0` up to `ψ = Q` in `steps` RK4 steps.
/// Returns `None` when the slope vanishes on the way.
fn integrate_up(energy: &TruncatedEnergy, m0: f64, steps: usize) -> Option<StripProfile> {
    let q = energy.q();
    let dz = q / steps as f64;
    let rhs = |z: f64, m: f64| -> Option<(f64, f64)> {
        let p = slope_of_flux(energy, m, z);
        if !(p > 0.0) {
            return None;
        }
        Some((1.0 / p, energy.eval_grad(p * p, z).big_g_z / p))
    };
    let mut x2 = Vec::with_capacity(steps + 1);
    let mut slope = Vec::with_capacity(steps + 1);
    let (mut x, mut m) = (0.0, m0);
    for k in 0..=steps {
        let z = k as f64 * dz;
        slope.push(slope_of_flux(energy, m, z));
        x2.push(x);
        if k == steps {
            break;
        }
        let k1 = rhs(z, m)?;
        let k2 = rhs(z + 0.5 * dz, m + 0.5 * dz * k1.1)?;
        let k3 = rhs(z + 0.5 * dz, m + 0.5 * dz * k2.1)?;
        let k4 = rhs(z + dz, m + dz * k3.1)?;
        x += dz / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        m += dz / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    Some(StripProfile { q, x2, slope })
}

/// Dirichlet problem `ψ(0) = 0`, `ψ(height) = Q`, by bisection on the flux at
/// the axis.
pub fn dirichlet_strip(energy: &TruncatedEnergy, height: f64, steps: usize) -> Result<StripProfile> {
    if !(height > 0.0 && height.is_finite()) || steps < 2 {
        return Err(Error::Parameter(format!("strip height must be positive, got {height}")));
    }
    let top = |m0: f64| integrate_up(energy, m0, steps).map_or(f64::INFINITY, |p| p.height());
    let p_lin = energy.q() / height;
    let mut hi = energy.g_pair(p_lin * p_lin, 0.0).0 * p_lin;
    let mut lo = hi;
    for _ in 0..60 {
        if top(hi) < height {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..60 {
        if top(lo) > height {
            break;
        }
        lo *= 0.5;
    }
    if !(top(hi) <= height && top(lo) >= height) {
        return Err(Error::Shooting(format!("no axis flux reaches Q at height {height}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if top(mid) > height {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    integrate_up(energy, 0.5 * (lo + hi), steps).ok_or_else(|| Error::Shooting("strip profile lost monotonicity".into()))
}

/// Cauchy problem from the plateau edge: `ψ = Q` and `Φ_ε(ψ'², Q) = λ_ε²`
/// there, integrated down to `ψ = 0`. The returned profile starts at the axis;
/// its height is the plateau edge `l`.
pub fn cauchy_strip(energy: &TruncatedEnergy, steps: usize) -> Result<StripProfile> {
    if steps < 2 {
        return Err(Error::Parameter("at least two steps are needed".into()));
    }
    let q = energy.q();
    let target = energy.lambda_eps().powi(2);
    let phi = |p: f64| energy.Phi(p * p, q).unwrap_or(f64::NAN);
    let (mut lo, mut hi) = (0.0, energy.lambda_cap().max(1e-12));
    for _ in 0..200 {
        if phi(hi) >= target {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p_top = 0.5 * (lo + hi);
    let m_top = energy.g_pair(p_top * p_top, q).0 * p_top;

    // integrate downwards in ψ, then shift so that x₂(0) = 0
    let dz = q / steps as f64;
    let rhs = |z: f64, m: f64| -> Option<(f64, f64)> {
        let p = slope_of_flux(energy, m, z);
        if !(p > 0.0) {
            return None;
        }
        Some((1.0 / p, energy.eval_grad(p * p, z).big_g_z / p))
    };
    let mut x2 = vec![0.0; steps + 1];
    let mut slope = vec![0.0; steps + 1];
    let (mut x, mut m) = (0.0, m_top);
    for k in (0..=steps).rev() {
        let z = k as f64 * dz;
        x2[k] = x;
        slope[k] = slope_of_flux(energy, m, z);
        if k == 0 {
            break;
        }
        let h = -dz;
        let fail = || Error::Shooting("plateau-edge profile lost monotonicity".into());
        let k1 = rhs(z, m).ok_or_else(fail)?;
        let k2 = rhs(z + 0.5 * h, m + 0.5 * h * k1.1).ok_or_else(fail)?;
        let k3 = rhs(z + 0.5 * h, m + 0.5 * h * k2.1).ok_or_else(fail)?;
        let k4 = rhs(z + h, m + h * k3.1).ok_or_else(fail)?;
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        m += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    let base = x2[0];
    for v in &mut x2 {
        *v -= base;
    }
    Ok(StripProfile { q, x2, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::GasModel;
    use crate::truncation::Cutoff;
    use crate::upstream::{solve_upstream, BernoulliProfile};

    fn energy(profile: BernoulliProfile, q: f64, lambda: f64) -> (TruncatedEnergy, crate::upstream::UpstreamState) {
        let gas = GasModel::new(2.0).unwrap();
        let up = solve_upstream(&gas, &profile, q).unwrap();
        let e = TruncatedEnergy::new(gas, up.bernoulli_of_stream(), Cutoff::new(0.05).unwrap(), lambda).unwrap();
        (e, up)
    }

    #[test]
    fn flat_strips_are_linear() {
        let (e, _) = energy(BernoulliProfile::constant(2.0, 1.5, 16).unwrap(), 0.8, 0.5);
        let d = dirichlet_strip(&e, 2.0, 256).unwrap();
        assert!((d.value(0.5) - 0.2).abs() < 1e-12);
        let c = cauchy_strip(&e, 256).unwrap();
        assert!((c.height() - 0.8 / 0.5).abs() < 1e-10);
    }

    #[test]
    fn vortical_dirichlet_strip_is_the_upstream_profile() {
        let (e, up) = energy(BernoulliProfile::cosine(2.0, 1.5, 0.1, 32).unwrap(), 1.2, 0.5);
        let d = dirichlet_strip(&e, 2.0, 2048).unwrap();
        for k in 0..=20 {
            let x = 0.1 * k as f64;
            assert!((d.value(x) - up.psi_bar(x)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn matching_momentum_puts_the_edge_at_the_wall_height() {
        let (e0, up) = energy(BernoulliProfile::cosine(2.0, 1.5, 0.1, 32).unwrap(), 1.2, 0.5);
        let lam = up.rho_bar() * up.u_bar(2.0);
        let e = e0.with_lambda(lam).unwrap();
        let c = cauchy_strip(&e, 2048).unwrap();
        assert!((c.height() - 2.0).abs() < 1e-8);
        assert!((c.value(1.3) - up.psi_bar(1.3)).abs() < 1e-8);
    }
}
