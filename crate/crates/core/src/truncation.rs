//! Subsonic truncation of the inverted density and the resulting energy.
//!
//! Near the sonic momentum `T(z) = t_c(𝓑(z))` the specific volume `g(t, z)` is
//! blended into the constant `g*` over the window `[T - ε, T - ε/2]`. The
//! energy density is `G_ε(t, z) = ½∫₀ᵗ g_ε dτ + (1/γ)(ρ*(𝓑(z))^γ - ρ*(𝓑(Q))^γ)`
//! so that `∂_t G_ε = ½ g_ε` and `G_ε(0, Q) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::GasModel;
use crate::quad::gauss8;
use crate::upstream::BernoulliOfStream;

/// Cutoff profile `ϖ`: 1 on `(-∞, -1]`, 0 on `[-1/2, ∞)`, quintic smoothstep
/// in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    epsilon: f64,
}

impl Cutoff {
    /// `max |ϖ'|`.
    pub const SLOPE_MAX: f64 = 3.75;

    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.25) {
            return Err(Error::Parameter(format!("truncation width must lie in (0, 1/4), got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    /// Default width `0.05·t_c(B_*)`, clipped into `(0, 1/4)`.
    pub fn default_for(gas: &GasModel, b_min: f64) -> Result<Self> {
        let e = 0.05 * gas.critical_momentum_sq(b_min)?;
        Self::new(e.min(0.2))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn shape(s: f64) -> f64 {
        if s <= -1.0 {
            1.0
        } else if s >= -0.5 {
            0.0
        } else {
            let x = 2.0 * (s + 1.0);
            1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        }
    }

    #[inline]
    pub fn shape_deriv(s: f64) -> f64 {
        if s <= -1.0 || s >= -0.5 {
            0.0
        } else {
            let x = 2.0 * (s + 1.0);
            let y = 1.0 - x;
            -60.0 * x * x * y * y
        }
    }

    /// `ϖ_ε(s) = ϖ(s/ε)`.
    #[inline]
    pub fn scaled(&self, s: f64) -> f64 {
        Self::shape(s / self.epsilon)
    }

    #[inline]
    pub fn scaled_deriv(&self, s: f64) -> f64 {
        Self::shape_deriv(s / self.epsilon) / self.epsilon
    }
}

/// Pointwise values needed by the discrete energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPoint {
    /// `g_ε(t, z) = 2∂_t G_ε`.
    pub g: f64,
    /// `∂_t g_ε`.
    pub g_t: f64,
    /// `G_ε(t, z)`.
    pub big_g: f64,
    /// `∂_z G_ε`.
    pub big_g_z: f64,
}

#[derive(Debug, Clone)]
pub struct TruncatedEnergy {
    gas: GasModel,
    bern: BernoulliOfStream,
    cutoff: Cutoff,
    g_upper: f64,
    g_lower: f64,
    q: f64,
    lambda_cap: f64,
    lambda_eps: f64,
    offset_q: f64,
    flat: Option<Level>,
}

/// Quantities depending only on `z`.
#[derive(Debug, Clone, Copy)]
struct Level {
    b: f64,
    db: f64,
    t_c: f64,
    rho_star: f64,
}

impl TruncatedEnergy {
    pub fn new(gas: GasModel, bern: BernoulliOfStream, cutoff: Cutoff, lambda_cap: f64) -> Result<Self> {
        if !(lambda_cap > 0.0 && lambda_cap.is_finite()) {
            return Err(Error::Domain(format!("free-boundary momentum must be positive, got {lambda_cap}")));
        }
        let q = bern.q();
        let g_upper = 1.0 / gas.rho_c(bern.b_min());
        let g_lower = 1.0 / gas.rho_max(bern.b_max());
        let offset_q = gas.rho_max(bern.value(q)).powf(gas.gamma()) / gas.gamma();
        let mut out = Self {
            gas,
            bern,
            cutoff,
            g_upper,
            g_lower,
            q,
            lambda_cap,
            lambda_eps: 0.0,
            offset_q,
            flat: None,
        };
        if out.bern.is_flat() {
            out.flat = Some(out.level_of(out.bern.eval2(0.0)));
        }
        out.lambda_eps = out.phi_unchecked(lambda_cap * lambda_cap, q).max(0.0).sqrt();
        Ok(out)
    }

    /// Same energy with a different `Λ`.
    pub fn with_lambda(&self, lambda_cap: f64) -> Result<Self> {
        Self::new(self.gas, self.bern.clone(), self.cutoff, lambda_cap)
    }

    pub fn gas(&self) -> &GasModel {
        &self.gas
    }

    pub fn bern(&self) -> &BernoulliOfStream {
        &self.bern
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn epsilon(&self) -> f64 {
        self.cutoff.epsilon
    }

    /// `g* = 1/ρ_c(B_*)`.
    pub fn g_upper(&self) -> f64 {
        self.g_upper
    }

    /// `g_* = 1/ρ*(B^*)`.
    pub fn g_lower(&self) -> f64 {
        self.g_lower
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda_cap(&self) -> f64 {
        self.lambda_cap
    }

    /// `λ_ε = √Φ_ε(Λ², Q)`.
    pub fn lambda_eps(&self) -> f64 {
        self.lambda_eps
    }

    /// `sup_z t_c(𝓑(z))`.
    pub fn t_crit_sup(&self) -> f64 {
        self.gas.t_crit(self.bern.b_max())
    }

    #[inline]
    fn level(&self, z: f64) -> Level {
        match self.flat {
            Some(lv) => lv,
            None => self.level_of(self.bern.eval2(z)),
        }
    }

    #[inline]
    fn level_of(&self, (b, db): (f64, f64)) -> Level {
        Level {
            b,
            db,
            t_c: self.gas.t_crit(b),
            rho_star: self.gas.rho_max(b),
        }
    }

    /// `g_ε` and `∂_t g_ε` at a point of the blend window.
    #[inline]
    fn blend(&self, t: f64, lv: &Level) -> (f64, f64, f64) {
        let s = t - lv.t_c;
        let w = self.cutoff.scaled(s);
        let dw = self.cutoff.scaled_deriv(s);
        let rho = self.gas.branch_density(t, lv.b);
        let g = 1.0 / rho;
        let gt = self.gas.dg_dt_at(rho, lv.b);
        (g * w + (1.0 - w) * self.g_upper, gt * w + (g - self.g_upper) * dw, rho)
    }

    /// `∂_z g_ε` inside the blend window.
    #[inline]
    fn blend_dz(&self, t: f64, lv: &Level) -> f64 {
        let s = t - lv.t_c;
        let w = self.cutoff.scaled(s);
        let dw = self.cutoff.scaled_deriv(s);
        let rho = self.gas.branch_density(t, lv.b);
        let g = 1.0 / rho;
        let gz = 2.0 * lv.db / self.gas.df_drho(rho, lv.b);
        let dtc = self.gas.t_crit_ds(lv.b) * lv.db;
        gz * w - (g - self.g_upper) * dw * dtc
    }

    #[inline]
    fn offset(&self, lv: &Level) -> f64 {
        if self.flat.is_some() {
            return 0.0;
        }
        lv.rho_star.powf(self.gas.gamma()) / self.gas.gamma() - self.offset_q
    }

    /// Full evaluation at `t ≥ 0` (negative `t` is treated as 0).
    pub fn eval(&self, t: f64, z: f64) -> EnergyPoint {
        let t = t.max(0.0);
        let lv = self.level(z);
        let eps = self.cutoff.epsilon;
        let a = lv.t_c - eps;
        let c = lv.t_c - 0.5 * eps;
        let offset = self.offset(&lv);
        if t <= a {
            let rho = self.gas.branch_density(t, lv.b);
            return EnergyPoint {
                g: 1.0 / rho,
                g_t: self.gas.dg_dt_at(rho, lv.b),
                big_g: 0.5 * self.gas.branch_g_integral(rho, lv.b) + offset,
                big_g_z: lv.db * rho,
            };
        }
        let rho_a = self.gas.branch_density(a, lv.b);
        let base = 0.5 * self.gas.branch_g_integral(rho_a, lv.b) + offset;
        let base_z = lv.db * rho_a;
        let top = t.min(c);
        let win = 0.5 * gauss8(a, top, |tau| self.blend(tau, &lv).0);
        let win_z = if lv.db == 0.0 {
            0.0
        } else {
            0.5 * gauss8(a, top, |tau| self.blend_dz(tau, &lv))
        };
        if t < c {
            let (g, g_t, _) = self.blend(t, &lv);
            EnergyPoint {
                g,
                g_t,
                big_g: base + win,
                big_g_z: base_z + win_z,
            }
        } else {
            EnergyPoint {
                g: self.g_upper,
                g_t: 0.0,
                big_g: base + win + 0.5 * self.g_upper * (t - c),
                big_g_z: base_z + win_z,
            }
        }
    }

    /// Like [`Self::eval`] but `big_g` is left at 0 on the untruncated branch.
    #[inline]
    pub fn eval_grad(&self, t: f64, z: f64) -> EnergyPoint {
        let t = t.max(0.0);
        let lv = self.level(z);
        if t <= lv.t_c - self.cutoff.epsilon {
            let rho = self.gas.branch_density(t, lv.b);
            return EnergyPoint {
                g: 1.0 / rho,
                g_t: self.gas.dg_dt_at(rho, lv.b),
                big_g: 0.0,
                big_g_z: lv.db * rho,
            };
        }
        self.eval(t, z)
    }

    /// `g_ε(t, z)` without the energy integral.
    #[inline]
    pub fn g_eps(&self, t: f64, z: f64) -> f64 {
        self.g_pair(t, z).0
    }

    /// `(g_ε, ∂_t g_ε)`.
    #[inline]
    pub fn g_pair(&self, t: f64, z: f64) -> (f64, f64) {
        let t = t.max(0.0);
        let lv = self.level(z);
        let eps = self.cutoff.epsilon;
        if t <= lv.t_c - eps {
            let rho = self.gas.branch_density(t, lv.b);
            (1.0 / rho, self.gas.dg_dt_at(rho, lv.b))
        } else if t >= lv.t_c - 0.5 * eps {
            (self.g_upper, 0.0)
        } else {
            let (g, gt, _) = self.blend(t, &lv);
            (g, gt)
        }
    }

    /// `∂_z g_ε(t, z)`.
    pub fn g_dz(&self, t: f64, z: f64) -> f64 {
        let t = t.max(0.0);
        let lv = self.level(z);
        let eps = self.cutoff.epsilon;
        if lv.db == 0.0 || t >= lv.t_c - 0.5 * eps {
            0.0
        } else if t <= lv.t_c - eps {
            let rho = self.gas.branch_density(t, lv.b);
            2.0 * lv.db / self.gas.df_drho(rho, lv.b)
        } else {
            self.blend_dz(t, &lv)
        }
    }

    pub fn g_trunc(&self, t: f64, z: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.g_eps(t, z))
    }

    #[allow(non_snake_case)]
    pub fn G_energy(&self, t: f64, z: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.eval(t, z).big_g)
    }

    /// `Φ_ε = -G_ε + g_ε t`.
    #[allow(non_snake_case)]
    pub fn Phi(&self, t: f64, z: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.phi_unchecked(t, z))
    }

    fn phi_unchecked(&self, t: f64, z: f64) -> f64 {
        let p = self.eval(t, z);
        -p.big_g + p.g * t
    }

    /// `√Φ_ε(Λ², Q)` for an arbitrary `Λ`.
    #[allow(non_snake_case)]
    pub fn lambda_of_Lambda(&self, lambda_cap: f64) -> Result<f64> {
        if !(lambda_cap > 0.0 && lambda_cap.is_finite()) {
            return Err(Error::Domain(format!("free-boundary momentum must be positive, got {lambda_cap}")));
        }
        Ok(self.phi_unchecked(lambda_cap * lambda_cap, self.q).max(0.0).sqrt())
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("momentum-squared must be non-negative, got {t}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upstream::{solve_upstream, BernoulliProfile};

    fn flat_energy(lambda: f64) -> TruncatedEnergy {
        let gas = GasModel::new(2.0).unwrap();
        let p = BernoulliProfile::constant(2.0, 1.5, 16).unwrap();
        let st = solve_upstream(&gas, &p, 1.0).unwrap();
        TruncatedEnergy::new(gas, st.bernoulli_of_stream(), Cutoff::new(0.05).unwrap(), lambda).unwrap()
    }

    fn vortical_energy() -> TruncatedEnergy {
        let gas = GasModel::new(1.4).unwrap();
        let p = BernoulliProfile::cosine(2.0, 2.5, 0.05, 64).unwrap();
        let st = solve_upstream(&gas, &p, 0.9).unwrap();
        let e = 0.05 * gas.critical_momentum_sq(p.b_min()).unwrap();
        TruncatedEnergy::new(gas, st.bernoulli_of_stream(), Cutoff::new(e).unwrap(), 0.4).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(Cutoff::shape(-2.0), 1.0);
        assert_eq!(Cutoff::shape(-0.5), 0.0);
        assert!((Cutoff::shape(-0.75) - 0.5).abs() < 1e-15);
        let mut m = 0.0f64;
        for k in 0..=1000 {
            let s = -1.0 + 0.5 * k as f64 / 1000.0;
            m = m.max(Cutoff::shape_deriv(s).abs());
        }
        assert!((m - Cutoff::SLOPE_MAX).abs() < 1e-9);
        assert!(Cutoff::new(0.0).is_err());
        assert!(Cutoff::new(0.25).is_err());
    }

    #[test]
    fn flat_examples() {
        let e = flat_energy(0.8);
        assert!((e.g_trunc(0.0, 0.3).unwrap() - 1.0 / 1.5).abs() < 1e-15);
        assert!((e.g_trunc(0.864, 0.3).unwrap() - 1.0 / 1.2).abs() < 1e-12);
        assert_eq!(e.g_trunc(1.0, 0.3).unwrap(), 1.0);
        assert_eq!(e.g_trunc(3.0, 0.3).unwrap(), e.g_upper());
        assert_eq!(e.G_energy(0.0, e.q()).unwrap(), 0.0);
        assert_eq!(e.Phi(0.0, e.q()).unwrap(), 0.0);
        assert!(e.g_trunc(-1e-3, 0.0).is_err());
        assert!(e.lambda_of_Lambda(0.0).is_err());
        // offset vanishes, so G is independent of z
        assert_eq!(e.G_energy(0.4, 0.0).unwrap(), e.G_energy(0.4, 0.9).unwrap());
    }

    #[test]
    fn energy_derivatives_match_differences() {
        for e in [flat_energy(0.8), vortical_energy()] {
            let tc = e.t_crit_sup();
            for k in 0..40 {
                let t = 1.2 * tc * (k as f64 + 0.5) / 40.0;
                let z = e.q() * ((k * 7) % 19) as f64 / 19.0;
                let d = 1e-6;
                let p = e.eval(t, z);
                let fd = (e.eval(t + d, z).big_g - e.eval(t - d, z).big_g) / (2.0 * d);
                assert!((fd - 0.5 * p.g).abs() < 1e-6, "t={t} z={z}");
                let fdg = (e.g_eps(t + d, z) - e.g_eps(t - d, z)) / (2.0 * d);
                assert!((fdg - p.g_t).abs() < 1e-6 * (1.0 + p.g_t), "t={t} fdg={fdg} gt={}", p.g_t);
                if z > 1e-3 && z < e.q() - 1e-3 {
                    let dz = 1e-6;
                    let fz = (e.eval(t, z + dz).big_g - e.eval(t, z - dz).big_g) / (2.0 * dz);
                    assert!((fz - p.big_g_z).abs() < 1e-5, "t={t} z={z} fz={fz} an={}", p.big_g_z);
                    let fgz = (e.g_eps(t, z + dz) - e.g_eps(t, z - dz)) / (2.0 * dz);
                    assert!((fgz - e.g_dz(t, z)).abs() < 1e-5 * (1.0 + fgz.abs()));
                }
            }
        }
    }

    #[test]
    fn phi_is_increasing_and_positive() {
        let e = vortical_energy();
        let tc = e.t_crit_sup();
        let mut last = e.Phi(0.0, e.q()).unwrap();
        for k in 1..200 {
            let t = 1.5 * tc * k as f64 / 200.0;
            let v = e.Phi(t, e.q()).unwrap();
            assert!(v > last);
            last = v;
        }
    }
}
