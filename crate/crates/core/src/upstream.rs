//! Upstream asymptotic state and the Bernoulli function of the stream value.
//!
//! Far upstream the flow is horizontal with constant density `ρ̄` and speed
//! `ū(x₂) = √(2(B(x₂) - h(ρ̄)))`. The flux `Q = ρ̄ ∫₀^H̄ ū` is strictly
//! decreasing in `ρ̄` on `(ρ_c(B^*), ρ*(B_*))`, which fixes `ρ̄` from `(B, Q)`.
//! Following streamlines back upstream turns `B(x₂)` into `𝓑(ψ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::GasModel;
use crate::interp::UniformHermite;
use crate::quad::gauss8;

const SLOPE_END_TOL: f64 = 1e-9;
const BISECT_WIDTH: f64 = 1e-13;

/// Incoming Bernoulli profile `B(x₂)` on `[0, H̄]`, sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliProfile {
    bar_h: f64,
    interp: UniformHermite,
    b_min: f64,
    b_max: f64,
    kappa: f64,
}

impl BernoulliProfile {
    /// Uniform samples `B(k·H̄/n)`, `k = 0..=n`, interpolated by monotone
    /// cubics with zero end slopes.
    pub fn from_samples(bar_h: f64, values: Vec<f64>) -> Result<Self> {
        Self::check_grid(bar_h, values.len())?;
        let dx = bar_h / (values.len() - 1) as f64;
        Self::build(bar_h, UniformHermite::monotone(0.0, dx, values, true))
    }

    /// Samples together with exact derivative samples.
    pub fn with_slopes(bar_h: f64, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        Self::check_grid(bar_h, values.len())?;
        if slopes.len() != values.len() {
            return Err(Error::Parameter("slope and value sample counts differ".into()));
        }
        let scale = 1.0 + slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let (s0, s1) = (slopes[0], slopes[slopes.len() - 1]);
        if s0.abs() > SLOPE_END_TOL * scale || s1.abs() > SLOPE_END_TOL * scale {
            return Err(Error::Parameter(format!(
                "Bernoulli profile must be flat at both walls, got B'(0)={s0}, B'(H)={s1}"
            )));
        }
        let dx = bar_h / (values.len() - 1) as f64;
        Self::build(bar_h, UniformHermite::new(0.0, dx, values, slopes))
    }

    pub fn constant(bar_h: f64, value: f64, intervals: usize) -> Result<Self> {
        Self::from_samples(bar_h, vec![value; intervals.max(2) + 1])
    }

    /// `B(x₂) = base + amplitude·(1 - cos(πx₂/H̄))/2`, flat at both walls.
    pub fn cosine(bar_h: f64, base: f64, amplitude: f64, intervals: usize) -> Result<Self> {
        let n = intervals.max(2);
        let w = std::f64::consts::PI / bar_h;
        let xs = (0..=n).map(|k| bar_h * k as f64 / n as f64);
        let values = xs.clone().map(|x| base + 0.5 * amplitude * (1.0 - (w * x).cos())).collect();
        let mut slopes: Vec<f64> = xs.map(|x| 0.5 * amplitude * w * (w * x).sin()).collect();
        slopes[0] = 0.0;
        slopes[n] = 0.0;
        Self::with_slopes(bar_h, values, slopes)
    }

    fn check_grid(bar_h: f64, n: usize) -> Result<()> {
        if !(bar_h.is_finite() && bar_h > 1.0) {
            return Err(Error::Parameter(format!("upstream height must exceed 1, got {bar_h}")));
        }
        if n < 3 {
            return Err(Error::Parameter("Bernoulli profile needs at least 3 samples".into()));
        }
        Ok(())
    }

    fn build(bar_h: f64, interp: UniformHermite) -> Result<Self> {
        let n = interp.knots() - 1;
        let fine = 8 * n;
        let mut b_min = f64::INFINITY;
        let mut b_max = f64::NEG_INFINITY;
        let mut d_max = 0.0f64;
        let mut lip = 0.0f64;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=fine {
            let x = bar_h * k as f64 / fine as f64;
            let (v, d, _) = interp.eval3(x);
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::Parameter("Bernoulli profile has non-finite samples".into()));
            }
            b_min = b_min.min(v);
            b_max = b_max.max(v);
            d_max = d_max.max(d.abs());
            if let Some((xp, dp)) = prev {
                lip = lip.max((d - dp).abs() / (x - xp));
            }
            prev = Some((x, d));
        }
        if !(b_min > 0.0) {
            return Err(Error::Parameter(format!("Bernoulli profile must be positive, min is {b_min}")));
        }
        Ok(Self {
            bar_h,
            interp,
            b_min,
            b_max,
            kappa: d_max + lip,
        })
    }

    pub fn bar_h(&self) -> f64 {
        self.bar_h
    }

    /// `B_* = min B`.
    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    /// `B^* = max B`.
    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// Discrete `C^{0,1}` norm of `B'`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn intervals(&self) -> usize {
        self.interp.knots() - 1
    }

    pub fn samples(&self) -> &[f64] {
        self.interp.values()
    }

    #[inline]
    pub fn value(&self, x2: f64) -> f64 {
        self.interp.eval(x2)
    }

    #[inline]
    pub fn deriv(&self, x2: f64) -> f64 {
        self.interp.deriv(x2)
    }

    #[inline]
    pub fn eval3(&self, x2: f64) -> (f64, f64, f64) {
        self.interp.eval3(x2)
    }

    fn knot(&self, k: usize) -> f64 {
        self.interp.knot(k)
    }

    fn is_flat(&self) -> bool {
        self.kappa == 0.0
    }
}

/// `√(2(b - h))`, with differences at roundoff level treated as stagnation.
#[inline]
fn speed(b: f64, h: f64) -> f64 {
    let d = b - h;
    if d <= 4.0 * f64::EPSILON * b {
        0.0
    } else {
        (2.0 * d).sqrt()
    }
}

/// `ρ̄ ∫₀^H̄ √(2(B - h(ρ̄)))` by composite Gauss–Legendre over the sample panels.
pub fn flux_of_density(gas: &GasModel, rho_bar: f64, profile: &BernoulliProfile) -> Result<f64> {
    let h = gas.enthalpy(rho_bar)?;
    for (k, &b) in profile.samples().iter().enumerate() {
        if b - h < -1e-14 * b {
            return Err(Error::Domain(format!(
                "density {rho_bar} exceeds the maximum density at sample {k} (B={b}, h={h})"
            )));
        }
    }
    let integrand = |x: f64| speed(profile.value(x), h);
    let total: f64 = (0..profile.intervals())
        .map(|k| gauss8(profile.knot(k), profile.knot(k + 1), integrand))
        .sum();
    Ok(rho_bar * total)
}

fn flux_derivative(gas: &GasModel, rho_bar: f64, profile: &BernoulliProfile) -> f64 {
    let h = gas.h(rho_bar);
    let dh = rho_bar.powf(gas.gamma() - 2.0);
    let integrand = |x: f64| {
        let u = speed(profile.value(x), h);
        u - rho_bar * dh / u
    };
    (0..profile.intervals())
        .map(|k| gauss8(profile.knot(k), profile.knot(k + 1), integrand))
        .sum()
}

/// Admissible flux window for a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxWindow {
    /// `Q_* = κ^{1/4}`.
    pub q_star: f64,
    /// Flux at the maximum density `ρ*(B_*)`; no upstream state exists below it.
    pub q_at_max_density: f64,
    /// `Q^* = Q(ρ_c(B^*))`.
    pub q_upper: f64,
}

impl FluxWindow {
    pub fn lower(&self) -> f64 {
        self.q_star.max(self.q_at_max_density)
    }

    pub fn contains(&self, q: f64) -> bool {
        q > self.lower() && q < self.q_upper
    }
}

pub fn flux_window(gas: &GasModel, profile: &BernoulliProfile) -> Result<FluxWindow> {
    let rc = gas.critical_density(profile.b_max())?;
    let rmax = gas.max_density(profile.b_min())?;
    Ok(FluxWindow {
        q_star: profile.kappa().powf(0.25),
        q_at_max_density: flux_of_density(gas, rmax, profile)?,
        q_upper: flux_of_density(gas, rc, profile)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpstreamState {
    gas: GasModel,
    profile: BernoulliProfile,
    rho_bar: f64,
    q: f64,
    window: FluxWindow,
    /// `ψ̄` at the profile knots.
    psi_knots: Vec<f64>,
}

pub fn solve_upstream(gas: &GasModel, profile: &BernoulliProfile, q: f64) -> Result<UpstreamState> {
    let window = flux_window(gas, profile)?;
    if !window.contains(q) {
        return Err(Error::FluxWindow {
            q,
            lower: window.lower(),
            upper: window.q_upper,
        });
    }
    let mut lo = gas.rho_c(profile.b_max());
    let mut hi = gas.rho_max(profile.b_min());
    // flux is decreasing in ρ̄: flux(lo) = Q^* > q > flux(hi)
    while hi - lo > BISECT_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if flux_of_density(gas, mid, profile)? > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut rho = 0.5 * (lo + hi);
    for _ in 0..3 {
        let f = flux_of_density(gas, rho, profile)? - q;
        let df = flux_derivative(gas, rho, profile);
        if !(df.is_finite() && df < 0.0) {
            break;
        }
        let next = rho - f / df;
        if next > lo - BISECT_WIDTH && next < hi + BISECT_WIDTH {
            rho = next;
        }
    }
    Ok(UpstreamState::with_density(gas, profile, rho, q, window))
}

impl UpstreamState {
    fn with_density(gas: &GasModel, profile: &BernoulliProfile, rho_bar: f64, q: f64, window: FluxWindow) -> Self {
        let h = gas.h(rho_bar);
        let mut psi_knots = Vec::with_capacity(profile.intervals() + 1);
        let mut acc = 0.0;
        psi_knots.push(0.0);
        for k in 0..profile.intervals() {
            acc += rho_bar
                * gauss8(profile.knot(k), profile.knot(k + 1), |x| {
                    speed(profile.value(x), h)
                });
            psi_knots.push(acc);
        }
        Self {
            gas: *gas,
            profile: profile.clone(),
            rho_bar,
            q,
            window,
            psi_knots,
        }
    }

    pub fn gas(&self) -> &GasModel {
        &self.gas
    }

    pub fn profile(&self) -> &BernoulliProfile {
        &self.profile
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn window(&self) -> FluxWindow {
        self.window
    }

    pub fn bar_h(&self) -> f64 {
        self.profile.bar_h()
    }

    /// Flux recomputed from `ρ̄`; equals `Q` up to the root-finder tolerance.
    pub fn flux(&self) -> f64 {
        *self.psi_knots.last().unwrap()
    }

    /// `ū(x₂)`, clamped to `[0, H̄]`.
    pub fn u_bar(&self, x2: f64) -> f64 {
        let x = x2.clamp(0.0, self.bar_h());
        speed(self.profile.value(x), self.gas.h(self.rho_bar))
    }

    /// `(ū, ū', ū'')` from `ū' = B'/ū` and `ū'' = B''/ū - B'^2/ū^3`.
    pub fn u_bar3(&self, x2: f64) -> (f64, f64, f64) {
        let x = x2.clamp(0.0, self.bar_h());
        let (b, db, ddb) = self.profile.eval3(x);
        let u = speed(b, self.gas.h(self.rho_bar));
        (u, db / u, ddb / u - db * db / (u * u * u))
    }

    pub fn u_min(&self) -> f64 {
        let n = 8 * self.profile.intervals();
        (0..=n)
            .map(|k| self.u_bar(self.bar_h() * k as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// `ψ̄(x₂) = ρ̄ ∫₀^{x₂} ū`.
    pub fn psi_bar(&self, x2: f64) -> f64 {
        let x = x2.clamp(0.0, self.bar_h());
        let dx = self.profile.interp.dx();
        let k = ((x / dx).floor() as usize).min(self.profile.intervals() - 1);
        let x0 = self.profile.knot(k);
        self.psi_knots[k] + self.partial(x0, x)
    }

    fn partial(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let h = self.gas.h(self.rho_bar);
        self.rho_bar * gauss8(a, b, |x| speed(self.profile.value(x), h))
    }

    /// Height `𝔥(z)` of the upstream streamline carrying stream value `z`.
    /// Values outside `[0, Q]` are clamped and flagged.
    pub fn height_of_stream(&self, z: f64) -> (f64, bool) {
        let total = self.flux();
        let slack = 1e-12 * total;
        if z <= 0.0 {
            return (0.0, z < -slack);
        }
        if z >= total {
            return (self.bar_h(), z > total + slack);
        }
        let k = match self.psi_knots.binary_search_by(|p| p.partial_cmp(&z).unwrap()) {
            Ok(k) => return (self.profile.knot(k), false),
            Err(k) => k - 1,
        };
        let (mut lo, mut hi) = (self.profile.knot(k), self.profile.knot(k + 1));
        let base = self.psi_knots[k];
        let (p_lo, p_hi) = (base, self.psi_knots[k + 1]);
        let mut x = lo + (hi - lo) * (z - p_lo) / (p_hi - p_lo);
        for _ in 0..100 {
            let f = base + self.partial(self.profile.knot(k), x) - z;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let df = self.rho_bar * self.u_bar(x);
            let mut next = x - f / df;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * self.bar_h() || hi - lo <= 1e-15 * self.bar_h() {
                return (next, false);
            }
            x = next;
        }
        (x, false)
    }

    /// Empirical margins against the non-explicit bounds on `ρ̄` and `ū`.
    pub fn margins(&self) -> UpstreamMargins {
        let kappa = self.profile.kappa();
        let rho_gap = self.gas.rho_max(self.profile.b_min()) - self.rho_bar;
        let u_min = self.u_min();
        UpstreamMargins {
            rho_gap,
            rho_gap_over_sqrt_kappa: if kappa > 0.0 { rho_gap / kappa.sqrt() } else { f64::INFINITY },
            u_min,
            u_min_over_kappa_quarter: if kappa > 0.0 { u_min / kappa.powf(0.25) } else { f64::INFINITY },
        }
    }

    pub fn bernoulli_of_stream(&self) -> BernoulliOfStream {
        BernoulliOfStream::build(self, BernoulliOfStream::DEFAULT_NODES.max(8 * self.profile.intervals()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpstreamMargins {
    /// `ρ*(B_*) - ρ̄`.
    pub rho_gap: f64,
    pub rho_gap_over_sqrt_kappa: f64,
    pub u_min: f64,
    pub u_min_over_kappa_quarter: f64,
}

/// `𝓑(z) = B(𝔥(z))` tabulated on a uniform grid in `z ∈ [0, Q]` and extended
/// by constants outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliOfStream {
    q: f64,
    table: UniformHermite,
    b_min: f64,
    b_max: f64,
    kappa0: f64,
    flat: bool,
}

impl BernoulliOfStream {
    pub const DEFAULT_NODES: usize = 2048;

    pub fn build(state: &UpstreamState, nodes: usize) -> Self {
        let q = state.flux();
        let n = nodes.max(4);
        let dz = q / n as f64;
        let profile = state.profile();
        let rho = state.rho_bar();
        if profile.is_flat() {
            let b = profile.value(0.0);
            return Self {
                q,
                table: UniformHermite::new(0.0, dz, vec![b; n + 1], vec![0.0; n + 1]),
                b_min: b,
                b_max: b,
                kappa0: 0.0,
                flat: true,
            };
        }
        let mut values = Vec::with_capacity(n + 1);
        let mut slopes = Vec::with_capacity(n + 1);
        let mut d1_max = 0.0f64;
        let mut d2_max = 0.0f64;
        for k in 0..=n {
            let z = dz * k as f64;
            let (x, _) = state.height_of_stream(z);
            let (u, du, ddu) = state.u_bar3(x);
            values.push(profile.value(x));
            let d1 = du / rho;
            let d2 = ddu / (u * rho * rho);
            slopes.push(d1);
            d1_max = d1_max.max(d1.abs());
            d2_max = d2_max.max(d2.abs());
        }
        slopes[0] = 0.0;
        slopes[n] = 0.0;
        let (b_min, b_max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self {
            q,
            table: UniformHermite::new(0.0, dz, values, slopes),
            b_min: b_min.min(profile.b_min()),
            b_max: b_max.max(profile.b_max()),
            kappa0: d1_max + d2_max,
            flat: false,
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// `κ₀ = ‖𝓑'‖_∞ + ‖𝓑''‖_∞` over `[0, Q]`.
    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        self.eval2(z).0
    }

    #[inline]
    pub fn deriv(&self, z: f64) -> f64 {
        self.eval2(z).1
    }

    pub fn second(&self, z: f64) -> f64 {
        if self.flat || z <= 0.0 || z >= self.q {
            return 0.0;
        }
        self.table.eval3(z).2
    }

    /// `(𝓑(z), 𝓑'(z))`.
    #[inline]
    pub fn eval2(&self, z: f64) -> (f64, f64) {
        if self.flat {
            return (self.table.values()[0], 0.0);
        }
        if z <= 0.0 {
            return (self.table.values()[0], 0.0);
        }
        if z >= self.q {
            return (*self.table.values().last().unwrap(), 0.0);
        }
        let (v, d, _) = self.table.eval3(z);
        (v, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gas2() -> GasModel {
        GasModel::new(2.0).unwrap()
    }

    fn const_profile() -> BernoulliProfile {
        BernoulliProfile::constant(2.0, 1.5, 32).unwrap()
    }

    #[test]
    fn constant_flux_closed_form() {
        let g = gas2();
        let p = const_profile();
        assert_relative_eq!(flux_of_density(&g, 1.0, &p).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(flux_of_density(&g, 1.2, &p).unwrap(), 2.4 * 0.6f64.sqrt(), epsilon = 1e-12);
        assert!(flux_of_density(&g, 1.6, &p).is_err());
    }

    #[test]
    fn solve_constant_profile() {
        let g = gas2();
        let p = const_profile();
        let q = 2.4 * 0.6f64.sqrt();
        let st = solve_upstream(&g, &p, q).unwrap();
        assert_relative_eq!(st.rho_bar(), 1.2, epsilon = 1e-12);
        for x in [0.0, 0.3, 1.0, 2.0] {
            assert_relative_eq!(st.u_bar(x), 0.6f64.sqrt(), epsilon = 1e-12);
            assert_relative_eq!(st.psi_bar(x), q * x / 2.0, epsilon = 1e-12);
        }
        assert_eq!(st.height_of_stream(0.0), (0.0, false));
        assert_eq!(st.height_of_stream(st.flux()).0, 2.0);
        assert_relative_eq!(st.height_of_stream(q / 2.0).0, 1.0, epsilon = 1e-12);
        assert_eq!(st.height_of_stream(-1.0), (0.0, true));
        assert!(st.height_of_stream(10.0).1);
        let bern = st.bernoulli_of_stream();
        assert!(bern.is_flat());
        assert_eq!(bern.kappa0(), 0.0);
        assert_eq!(bern.deriv(0.3), 0.0);
        assert_eq!(bern.value(0.3), 1.5);
    }

    #[test]
    fn flux_window_errors() {
        let g = gas2();
        let p = const_profile();
        // Q^* = flux(ρ_c = 1) = 2
        let e = solve_upstream(&g, &p, 2.5).unwrap_err();
        match e {
            Error::FluxWindow { lower, upper, .. } => {
                assert_eq!(lower, 0.0);
                assert_relative_eq!(upper, 2.0, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(solve_upstream(&g, &p, 0.0).is_err());
    }

    #[test]
    fn near_upper_flux_approaches_critical_density() {
        let g = gas2();
        let p = BernoulliProfile::cosine(2.0, 1.5, 0.01, 64).unwrap();
        let w = flux_window(&g, &p).unwrap();
        let rc = g.critical_density(p.b_max()).unwrap();
        let mut last_gap = f64::INFINITY;
        for frac in [0.9, 0.99, 0.999, 0.99999] {
            let st = solve_upstream(&g, &p, frac * w.q_upper).unwrap();
            let gap = st.rho_bar() - rc;
            assert!(gap > 0.0 && gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 1e-2);
    }

    #[test]
    fn vortical_profile_invariants() {
        let g = GasModel::new(1.4).unwrap();
        let p = BernoulliProfile::cosine(1.8, 2.5, 0.02, 48).unwrap();
        let w = flux_window(&g, &p).unwrap();
        let q = 0.5 * (w.lower() + w.q_upper);
        let st = solve_upstream(&g, &p, q).unwrap();
        assert!((flux_of_density(&g, st.rho_bar(), &p).unwrap() - q).abs() <= 1e-10 * q);
        assert!(st.rho_bar() >= g.critical_density(p.b_max()).unwrap());
        assert!(st.rho_bar() < g.max_density(p.b_min()).unwrap());
        assert!(st.u_min() > 0.0);
        // ū' vanishes at the walls
        let d = 1e-6;
        assert!(((st.u_bar(d) - st.u_bar(0.0)) / d).abs() < 1e-4);
        assert!(((st.u_bar(1.8) - st.u_bar(1.8 - d)) / d).abs() < 1e-4);
        // ψ̄ increasing, 𝔥 inverts it
        let mut last = -1.0;
        for k in 0..=50 {
            let x = 1.8 * k as f64 / 50.0;
            let v = st.psi_bar(x);
            assert!(v > last);
            last = v;
            let (hx, clamped) = st.height_of_stream(v);
            assert!(!clamped);
            assert!((st.psi_bar(hx) - v).abs() <= 1e-10, "x={x}");
        }
        let bern = st.bernoulli_of_stream();
        assert_relative_eq!(bern.value(0.0), p.value(0.0), epsilon = 1e-12);
        assert_relative_eq!(bern.value(st.flux()), p.value(1.8), epsilon = 1e-12);
        assert!(bern.b_min() >= p.b_min() - 1e-12 && bern.b_max() <= p.b_max() + 1e-12);
        assert_eq!(bern.deriv(-0.1), 0.0);
        assert_eq!(bern.deriv(q + 0.1), 0.0);
        assert!(bern.kappa0() > 0.0);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(BernoulliProfile::constant(0.9, 1.0, 8).is_err());
        assert!(BernoulliProfile::from_samples(2.0, vec![1.0, 1.0]).is_err());
        assert!(BernoulliProfile::from_samples(2.0, vec![1.0, -1.0, 1.0]).is_err());
        assert!(BernoulliProfile::with_slopes(2.0, vec![1.0, 1.1, 1.2], vec![0.1, 0.1, 0.0]).is_err());
    }
}
