//! Downstream state, far-field comparison, subsonic margin and the critical
//! mass flux scan.

use serde::{Deserialize, Serialize};

use crate::domain::{NodeKind, TruncatedDomain};
use crate::error::{Error, Result};
use crate::gas::GasModel;
use crate::interp::UniformHermite;
use crate::minimizer::DiscreteField;
use crate::quad::gauss8_composite;
use crate::truncation::TruncatedEnergy;
use crate::upstream::{BernoulliProfile, UpstreamState};

/// RK4 steps on `[0, H̄]` for the streamline map.
pub const THETA_STEPS: usize = 4096;

/// Uniform state far downstream together with the streamline map
/// `θ: [0, H̄] → [0, H̲]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DownstreamState {
    pub lambda: f64,
    pub q: f64,
    pub rho_down: f64,
    pub h_down: f64,
    /// Exit pressure `ρ̲^γ/γ`.
    pub p_e: f64,
    pub bar_h: f64,
    gas: GasModel,
    profile: BernoulliProfile,
    rho_bar: f64,
    enthalpy_down: f64,
    theta: UniformHermite,
}

pub fn downstream_state(up: &UpstreamState, lambda: f64) -> Result<DownstreamState> {
    downstream_state_with_steps(up, lambda, THETA_STEPS)
}

pub fn downstream_state_with_steps(up: &UpstreamState, lambda: f64, steps: usize) -> Result<DownstreamState> {
    let gas = *up.gas();
    let profile = up.profile();
    let bar_h = up.bar_h();
    if !(lambda > 0.0 && lambda.is_finite()) || steps < 2 {
        return Err(Error::Domain(format!("invalid momentum {lambda} or step count {steps}")));
    }
    let b_wall = profile.value(bar_h);
    let t_c = gas.critical_momentum_sq(b_wall)?;
    if lambda * lambda >= t_c {
        return Err(Error::Domain(format!(
            "Λ² = {} is not below the critical momentum {t_c} on the free streamline",
            lambda * lambda
        )));
    }
    let rho_down = subsonic_root(&gas, lambda, b_wall)?;
    let enthalpy_down = gas.enthalpy(rho_down)?;
    let u_down = |x2: f64| -> Result<f64> {
        let arg = 2.0 * (profile.value(x2) - enthalpy_down);
        if arg <= 0.0 {
            return Err(Error::Domain(format!(
                "Bernoulli deficit: B({x2}) = {} does not exceed h(ρ̲) = {enthalpy_down}",
                profile.value(x2)
            )));
        }
        Ok(arg.sqrt())
    };
    let rho_bar = up.rho_bar();
    // θ' depends on x₂ only, so RK4 reduces to Simpson's rule per step
    let rhs = |x2: f64| -> Result<f64> { Ok(rho_bar * up.u_bar(x2) / (rho_down * u_down(x2)?)) };
    let dx = bar_h / steps as f64;
    let mut values = Vec::with_capacity(steps + 1);
    let mut slopes = Vec::with_capacity(steps + 1);
    let mut theta = 0.0;
    let mut k_prev = rhs(0.0)?;
    values.push(0.0);
    slopes.push(k_prev);
    for n in 0..steps {
        let x = n as f64 * dx;
        let k1 = k_prev;
        let k2 = rhs(x + 0.5 * dx)?;
        let k3 = k2;
        let k4 = rhs(x + dx)?;
        theta += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        values.push(theta);
        slopes.push(k4);
        k_prev = k4;
    }
    let h_down = theta;
    Ok(DownstreamState {
        lambda,
        q: up.q(),
        rho_down,
        h_down,
        p_e: gas.pressure(rho_down)?,
        bar_h,
        gas,
        profile: profile.clone(),
        rho_bar,
        enthalpy_down,
        theta: UniformHermite::new(0.0, dx, values, slopes),
    })
}

/// Density on the subsonic branch of `Λ = ρ√(2B - 2h(ρ))`.
fn subsonic_root(gas: &GasModel, lambda: f64, b: f64) -> Result<f64> {
    let mut lo = gas.critical_density(b)? * (1.0 + 1e-12);
    let mut hi = gas.max_density(b)?;
    let f = |rho: f64| gas.momentum_density_f(rho, b).map(|t| t - lambda * lambda);
    if f(lo)? < 0.0 {
        return Err(Error::Domain(format!("no subsonic density carries Λ = {lambda} at B = {b}")));
    }
    // F decreases on the branch
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl DownstreamState {
    pub fn gas(&self) -> &GasModel {
        &self.gas
    }

    /// `θ(x₂)` for `x₂ ∈ [0, H̄]`.
    pub fn theta(&self, x2: f64) -> f64 {
        self.theta.eval(x2.clamp(0.0, self.bar_h))
    }

    /// `θ'(x₂)`.
    pub fn theta_deriv(&self, x2: f64) -> f64 {
        self.theta.deriv(x2.clamp(0.0, self.bar_h))
    }

    /// Upstream height of the streamline found at downstream height `y`.
    pub fn theta_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= self.h_down {
            return self.bar_h;
        }
        let (mut lo, mut hi) = (0.0, self.bar_h);
        while hi - lo > 1e-15 * self.bar_h {
            let mid = 0.5 * (lo + hi);
            if self.theta(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `u̲` on the streamline that starts at upstream height `x₂`.
    pub fn u_on_streamline(&self, x2: f64) -> f64 {
        (2.0 * (self.profile.value(x2.clamp(0.0, self.bar_h)) - self.enthalpy_down))
            .max(0.0)
            .sqrt()
    }

    /// `u̲(y)` for `y ∈ [0, H̲]`.
    pub fn u_down(&self, y: f64) -> f64 {
        self.u_on_streamline(self.theta_inverse(y))
    }

    /// `ψ̲(y) = ρ̲ ∫₀^y u̲`, equal to `Q` above the jet.
    pub fn psi_down(&self, y: f64) -> f64 {
        if y >= self.h_down {
            return self.q;
        }
        if y <= 0.0 {
            return 0.0;
        }
        self.rho_down * gauss8_composite(0.0, y, 16, |s| self.u_down(s))
    }

    /// `ρ̲ ∫₀^{H̲} u̲ dy`, integrated in the downstream variable.
    pub fn mass_flux(&self) -> f64 {
        self.rho_down * gauss8_composite(0.0, self.h_down, 64, |s| self.u_down(s))
    }

    /// Residual of `B(H̄) = h(ρ̲) + Λ²/(2ρ̲²)`.
    pub fn bernoulli_residual(&self) -> f64 {
        let b = self.profile.value(self.bar_h);
        b - self.enthalpy_down - self.lambda * self.lambda / (2.0 * self.rho_down * self.rho_down)
    }

    pub fn upstream_density(&self) -> f64 {
        self.rho_bar
    }

    /// Exit density `ρ_e = (γ p_e)^{1/γ}`.
    pub fn exit_density(&self) -> f64 {
        (self.gas.gamma() * self.p_e).powf(1.0 / self.gas.gamma())
    }
}

/// Density of the subsonic root of `Λ = ρ√(2B - 2h(ρ))` at `B = b_wall`.
pub fn exit_density_of_lambda(gas: &GasModel, lambda: f64, b_wall: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("momentum must be positive, got {lambda}")));
    }
    if lambda * lambda >= gas.critical_momentum_sq(b_wall)? {
        return Err(Error::Domain(format!("no subsonic root for Λ = {lambda} at B = {b_wall}")));
    }
    subsonic_root(gas, lambda, b_wall)
}

/// `p_e = ρ_e^γ/γ`.
pub fn exit_pressure_of_lambda(gas: &GasModel, lambda: f64, b_wall: f64) -> Result<f64> {
    gas.pressure(exit_density_of_lambda(gas, lambda, b_wall)?)
}

/// `Λ = ρ_e √(2B - 2h(ρ_e))`.
pub fn lambda_of_exit_density(gas: &GasModel, rho_e: f64, b_wall: f64) -> Result<f64> {
    let t = gas.momentum_density_f(rho_e, b_wall)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("density {rho_e} exceeds the stagnation density")));
    }
    Ok(t.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnDeviation {
    pub x1: f64,
    /// Distance from the truncation boundary the band is attached to.
    pub distance: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarfieldReport {
    pub inlet: Vec<ColumnDeviation>,
    pub outlet: Vec<ColumnDeviation>,
}

/// Column-wise `sup|ψ - ψ̄|` over the first `band` columns and `sup|ψ - ψ̲|`
/// over the last `band` columns.
pub fn farfield_compare(
    field: &DiscreteField,
    up: &UpstreamState,
    down: &DownstreamState,
    dom: &TruncatedDomain,
    band: usize,
) -> FarfieldReport {
    let band = band.min(dom.n1() + 1);
    let column = |i: usize, f: &dyn Fn(f64) -> f64| -> f64 {
        (0..=dom.n2())
            .filter(|&j| dom.kind(i, j) != NodeKind::Exterior)
            .map(|j| (field.at(dom, i, j) - f(dom.x2(j))).abs())
            .fold(0.0, f64::max)
    };
    let x_in = dom.x1(0);
    let x_out = dom.x1(dom.n1());
    let inlet = (0..band)
        .map(|i| ColumnDeviation {
            x1: dom.x1(i),
            distance: dom.x1(i) - x_in,
            sup: column(i, &|x2| up.psi_bar(x2)),
        })
        .collect();
    let outlet = (dom.n1() + 1 - band..=dom.n1())
        .rev()
        .map(|i| ColumnDeviation {
            x1: dom.x1(i),
            distance: x_out - dom.x1(i),
            sup: column(i, &|x2| down.psi_down(x2)),
        })
        .collect();
    FarfieldReport { inlet, outlet }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// `max (|∇ψ|² - 𝔱_c(𝓑(ψ)))` over the fluid cells inspected.
    pub margin: f64,
    pub epsilon: f64,
    /// `margin ≤ -ε`: the truncation is inactive.
    pub subsonic: bool,
    /// Cell centre where the maximum is attained.
    pub at: (f64, f64),
    pub cells: usize,
}

/// Subsonic margin over cells with at least one corner in `{ψ < Q}`, skipping
/// cells whose centre lies within `band` of the inlet or the outlet.
pub fn subsonic_margin(field: &DiscreteField, dom: &TruncatedDomain, energy: &TruncatedEnergy, band: f64) -> MarginReport {
    let q = energy.q();
    let cut = q - 1e-12 * q;
    let gas = energy.gas();
    let bern = energy.bern();
    let (x_in, x_out) = (dom.x1(0), dom.x1(dom.n1()));
    let mut best = (f64::NEG_INFINITY, (f64::NAN, f64::NAN));
    let mut cells = 0;
    for cj in 0..dom.n2() {
        for ci in 0..dom.n1() {
            let xc = 0.5 * (dom.x1(ci) + dom.x1(ci + 1));
            if xc - x_in < band || x_out - xc < band {
                continue;
            }
            let corners = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)];
            if corners.iter().any(|&(i, j)| dom.kind(i, j) == NodeKind::Exterior) {
                continue;
            }
            if corners.iter().all(|&(i, j)| field.at(dom, i, j) >= cut) {
                continue;
            }
            let t = field.cell_t(dom, ci, cj);
            let z = field.cell_z(dom, ci, cj);
            let tc = gas.t_crit(bern.value(z));
            cells += 1;
            if t - tc > best.0 {
                best = (t - tc, (xc, 0.5 * (dom.x2(cj) + dom.x2(cj + 1))));
            }
        }
    }
    let epsilon = energy.epsilon();
    MarginReport {
        margin: best.0,
        epsilon,
        subsonic: best.0 <= -epsilon,
        at: best.1,
        cells,
    }
}

/// `sup_{x₂} (|ρ̄ū|² - 𝔱_c(B))` for the upstream state of density `rho_bar`.
pub fn upstream_margin(gas: &GasModel, profile: &BernoulliProfile, rho_bar: f64) -> f64 {
    let n = 64 * profile.intervals();
    let h = gas.h(rho_bar);
    let mut best = f64::NEG_INFINITY;
    for k in 0..=n {
        let x = profile.bar_h() * k as f64 / n as f64;
        let b = profile.value(x);
        let m2 = 2.0 * rho_bar * rho_bar * (b - h).max(0.0);
        best = best.max(m2 - gas.t_crit(b));
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePoint {
    pub q: f64,
    pub rho_bar: f64,
    pub margin: f64,
}

/// Quasi-one-dimensional margin at `n` fluxes evenly spaced on
/// `(lower, Q^*]`; the last point sits at `Q^*` with `ρ̄ = ϱ_c(B^*)`.
pub fn quasi1d_scan(gas: &GasModel, profile: &BernoulliProfile, n: usize) -> Result<Vec<SurrogatePoint>> {
    let window = crate::upstream::flux_window(gas, profile)?;
    let (lo, hi) = (window.lower(), window.q_upper);
    (1..=n)
        .map(|k| {
            let q = lo + (hi - lo) * k as f64 / n as f64;
            let rho_bar = if k == n {
                gas.critical_density(profile.b_max())?
            } else {
                crate::upstream::solve_upstream(gas, profile, q)?.rho_bar()
            };
            Ok(SurrogatePoint {
                q,
                rho_bar,
                margin: upstream_margin(gas, profile, rho_bar),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Solved,
    FitFailed,
    Sonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanItem {
    pub q: f64,
    pub status: ScanStatus,
    pub lambda_fit: Option<f64>,
    pub margin: Option<f64>,
    pub h_down: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalFluxReport {
    pub epsilon: f64,
    pub items: Vec<ScanItem>,
    /// Largest flux whose fitted solve has margin `≤ -ε`.
    pub q_c_estimate: Option<f64>,
    pub q_upper: f64,
}

/// Runs `solve` at every flux, classifies each result and refines `Q_c` by one
/// bisection between the last passing and the first failing flux.
pub fn critical_flux_scan(
    qs: &[f64],
    epsilon: f64,
    q_upper: f64,
    mut solve: impl FnMut(f64) -> Result<(f64, f64, f64)>,
) -> CriticalFluxReport {
    let mut run = |q: f64| -> ScanItem {
        match solve(q) {
            Ok((lambda, margin, h_down)) => ScanItem {
                q,
                status: if margin <= -epsilon { ScanStatus::Solved } else { ScanStatus::Sonic },
                lambda_fit: Some(lambda),
                margin: Some(margin),
                h_down: Some(h_down),
                note: None,
            },
            Err(e) => ScanItem {
                q,
                status: ScanStatus::FitFailed,
                lambda_fit: None,
                margin: None,
                h_down: None,
                note: Some(e.to_string()),
            },
        }
    };
    let mut items: Vec<ScanItem> = qs.iter().map(|&q| run(q)).collect();
    let passing = |it: &ScanItem| it.status == ScanStatus::Solved;
    let last_pass = items.iter().rposition(passing);
    let mut q_c = last_pass.map(|k| items[k].q);
    if let Some(k) = last_pass {
        if let Some(next) = items.get(k + 1).map(|it| it.q) {
            let mid = 0.5 * (items[k].q + next);
            let extra = run(mid);
            if passing(&extra) {
                q_c = Some(mid);
            }
            items.push(extra);
        }
    }
    items.sort_by(|a, b| a.q.partial_cmp(&b.q).unwrap());
    CriticalFluxReport {
        epsilon,
        items,
        q_c_estimate: q_c,
        q_upper,
    }
}
