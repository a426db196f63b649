//! Discrete truncated energy and its minimization by nodal coordinate descent.
//!
//! Each grid cell contributes `A·G_ε(t_c, z_c)` where `t_c` is the mean of the
//! squared edge differences (both horizontal edges and both vertical edges)
//! and `z_c` the mean of the four corner values. The jump term is lumped on
//! nodes: node `k` carries `λ_ε²·w_k·χ(ψ_k < Q - θ_Q)` with `w_k` a quarter of
//! the area of every incident cell.
//!
//! A sweep visits interior nodes lexicographically, alternating direction.
//! Nodes away from the plateau take one over-relaxed Newton step on the
//! smooth energy; nodes touching the plateau are minimized exactly and the
//! result is compared against the plateau value `Q`. A sweep that raises the
//! total energy is rolled back and repeated with exact minimization everywhere.
//!
//! Coordinate descent on the indicator alone stalls wherever the free
//! boundary gradient lies within a factor `√2` of `Λ`, so `solve` first
//! converges a regularized problem in which `χ(ψ < Q)` is replaced by
//! `B_δ(Q - ψ)`, `B_δ(s) = min(1, (s/δ)(2 - s/δ))`, and then polishes with the
//! exact indicator from that state. `δ` is chosen so the nodal problems stay
//! convex.

use serde::{Deserialize, Serialize};

use crate::domain::{BoundaryData, NodeKind, TruncatedDomain};
use crate::error::{Error, Result};
use crate::truncation::TruncatedEnergy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Transfinite blend of the boundary values.
    Blend,
    /// Outlet column extended horizontally.
    OutletExtension,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Absolute max-update tolerance; `None` means `1e-8·Q`.
    pub tol: Option<f64>,
    pub max_sweeps: usize,
    /// Over-relaxation factor; `None` picks one from the grid size.
    pub omega: Option<f64>,
    /// Plateau threshold relative to `Q`.
    pub theta_rel: f64,
    pub init: InitKind,
    /// Width of the regularized first stage in units of its convexity limit;
    /// `0` skips the stage.
    pub regularization: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: None,
            max_sweeps: 20_000,
            omega: None,
            theta_rel: 1e-12,
            init: InitKind::Blend,
            regularization: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    values: Vec<f64>,
    pub sweeps: usize,
    pub last_energy: f64,
    pub last_update: f64,
}

impl DiscreteField {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            sweeps: 0,
            last_energy: f64::NAN,
            last_update: f64::NAN,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, dom: &TruncatedDomain, i: usize, j: usize) -> f64 {
        self.values[dom.idx(i, j)]
    }

    /// Cell-centred gradient of cell `(ci, cj)`.
    pub fn cell_gradient(&self, dom: &TruncatedDomain, ci: usize, cj: usize) -> (f64, f64) {
        let a = self.at(dom, ci, cj);
        let b = self.at(dom, ci + 1, cj);
        let c = self.at(dom, ci, cj + 1);
        let d = self.at(dom, ci + 1, cj + 1);
        ((b - a + d - c) / (2.0 * dom.h1()), (c - a + d - b) / (2.0 * dom.h2()))
    }

    /// `|∇ψ|²` as used by the energy (mean of squared edge differences).
    pub fn cell_t(&self, dom: &TruncatedDomain, ci: usize, cj: usize) -> f64 {
        let a = self.at(dom, ci, cj);
        let b = self.at(dom, ci + 1, cj);
        let c = self.at(dom, ci, cj + 1);
        let d = self.at(dom, ci + 1, cj + 1);
        cell_t(a, b, c, d, 1.0 / (dom.h1() * dom.h1()), 1.0 / (dom.h2() * dom.h2()))
    }

    pub fn cell_z(&self, dom: &TruncatedDomain, ci: usize, cj: usize) -> f64 {
        0.25 * (self.at(dom, ci, cj) + self.at(dom, ci + 1, cj) + self.at(dom, ci, cj + 1) + self.at(dom, ci + 1, cj + 1))
    }

    pub fn max_abs_diff(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// The regularized stage only has to place the free boundary.
const REGULARIZED_TOL_FACTOR: f64 = 100.0;

/// `B_δ(s) = min(1, (s/δ)(2 - s/δ))` for `s ≥ 0` with its first two derivatives.
#[inline]
fn ramp(s: f64, delta: f64) -> (f64, f64, f64) {
    if s >= delta {
        (1.0, 0.0, 0.0)
    } else {
        let r = s.max(0.0) / delta;
        (r * (2.0 - r), 2.0 * (1.0 - r) / delta, -2.0 / (delta * delta))
    }
}

#[inline]
fn cell_t(a: f64, b: f64, c: f64, d: f64, k1: f64, k2: f64) -> f64 {
    let (e1, e2, e3, e4) = (b - a, d - c, c - a, d - b);
    0.5 * (e1 * e1 + e2 * e2) * k1 + 0.5 * (e3 * e3 + e4 * e4) * k2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub bulk: f64,
    pub jump: f64,
    /// Fluid area `Σ w_k χ(ψ_k < Q - θ_Q)`.
    pub fluid_area: f64,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxSweeps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub field: DiscreteField,
    pub report: EnergyReport,
    pub status: SolveStatus,
    /// Sweeps rolled back because the energy rose.
    pub rollbacks: usize,
    /// Node visits where the exact nodal search did not settle.
    pub unsettled: usize,
    /// Sweeps spent in the regularized first stage (included in `field.sweeps`).
    pub regularized_sweeps: usize,
}

#[derive(Debug, Default)]
struct Descent {
    sweeps: usize,
    rollbacks: usize,
    unsettled: usize,
    converged: bool,
    history: Vec<f64>,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Smooth local energy with first and (approximate) second derivative.
#[derive(Debug, Clone, Copy)]
struct Local {
    e: f64,
    d1: f64,
    d2: f64,
}

/// Minimization problem on a fixed grid with fixed data.
pub struct Problem<'a> {
    energy: &'a TruncatedEnergy,
    dom: &'a TruncatedDomain,
    bd: &'a BoundaryData,
    q: f64,
    theta: f64,
    k1: f64,
    k2: f64,
    area: f64,
    lam2: f64,
    /// Lower bound on the local smooth curvature, used to prune jump tests.
    h_min: f64,
    weights: Vec<f64>,
    free: Vec<usize>,
}

impl<'a> Problem<'a> {
    pub fn new(energy: &'a TruncatedEnergy, dom: &'a TruncatedDomain, bd: &'a BoundaryData, theta_rel: f64) -> Result<Self> {
        if bd.values().len() != dom.nodes() {
            return Err(Error::Parameter("boundary data does not match the grid".into()));
        }
        let q = bd.q();
        if (q - energy.q()).abs() > 1e-9 * q {
            return Err(Error::Parameter(format!(
                "boundary data flux {q} differs from the energy flux {}",
                energy.q()
            )));
        }
        let (h1, h2) = (dom.h1(), dom.h2());
        let area = h1 * h2;
        let k1 = 1.0 / (h1 * h1);
        let k2 = 1.0 / (h2 * h2);
        let mut weights = vec![0.0; dom.nodes()];
        for cj in 0..dom.n2() {
            for ci in 0..dom.n1() {
                for (i, j) in [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)] {
                    weights[dom.idx(i, j)] += 0.25 * area;
                }
            }
        }
        let free = (0..dom.nodes()).filter(|&k| dom.kinds()[k] == NodeKind::Interior).collect();
        let lam = energy.lambda_eps();
        Ok(Self {
            energy,
            dom,
            bd,
            q,
            theta: theta_rel * q,
            k1,
            k2,
            area,
            lam2: lam * lam,
            h_min: 0.5 * 4.0 * area * 0.5 * energy.g_lower() * (k1 + k2),
            weights,
            free,
        })
    }

    pub fn dom(&self) -> &TruncatedDomain {
        self.dom
    }

    pub fn energy(&self) -> &TruncatedEnergy {
        self.energy
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Quarter-area weights of the lumped indicator.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Admissible starting field.
    pub fn initial_field(&self, kind: InitKind) -> DiscreteField {
        let dom = self.dom;
        let bv = self.bd.values();
        let (n1, n2) = (dom.n1(), dom.n2());
        let mut v = bv.to_vec();
        for j in 1..n2 {
            let (_, right) = self.bd.side_profiles(dom, j);
            let sigma = j as f64 / n2 as f64;
            for i in 1..n1 {
                let k = dom.idx(i, j);
                if !dom.kinds()[k].is_free() {
                    continue;
                }
                let tau = i as f64 / n1 as f64;
                v[k] = match kind {
                    InitKind::OutletExtension => right,
                    InitKind::Blend => {
                        let l = bv[dom.idx(0, j)];
                        let r = bv[dom.idx(n1, j)];
                        let b = bv[dom.idx(i, 0)];
                        let t = bv[dom.idx(i, n2)];
                        let corners = (1.0 - tau) * (1.0 - sigma) * bv[dom.idx(0, 0)]
                            + tau * (1.0 - sigma) * bv[dom.idx(n1, 0)]
                            + (1.0 - tau) * sigma * bv[dom.idx(0, n2)]
                            + tau * sigma * bv[dom.idx(n1, n2)];
                        (1.0 - tau) * l + tau * r + (1.0 - sigma) * b + sigma * t - corners
                    }
                }
                .clamp(0.0, self.q);
            }
        }
        DiscreteField::new(v)
    }

    /// Total discrete energy.
    pub fn energy_of(&self, psi: &[f64]) -> EnergyReport {
        self.energy_reg(psi, 0.0)
    }

    /// Energy with the jump term regularized over width `delta` (`0` is exact).
    fn energy_reg(&self, psi: &[f64], delta: f64) -> EnergyReport {
        let dom = self.dom;
        let mut bulk = 0.0;
        for cj in 0..dom.n2() {
            let mut row = 0.0;
            for ci in 0..dom.n1() {
                let a = psi[dom.idx(ci, cj)];
                let b = psi[dom.idx(ci + 1, cj)];
                let c = psi[dom.idx(ci, cj + 1)];
                let d = psi[dom.idx(ci + 1, cj + 1)];
                if a >= self.q && b >= self.q && c >= self.q && d >= self.q {
                    continue;
                }
                let t = cell_t(a, b, c, d, self.k1, self.k2);
                let z = 0.25 * (a + b + c + d);
                row += self.energy.eval(t, z).big_g;
            }
            bulk += row;
        }
        bulk *= self.area;
        let fluid_area: f64 = psi
            .iter()
            .zip(&self.weights)
            .filter(|(&v, _)| v < self.q - self.theta)
            .map(|(_, &w)| w)
            .sum();
        let jump = if delta > 0.0 {
            self.lam2
                * psi
                    .iter()
                    .zip(&self.weights)
                    .zip(self.dom.kinds())
                    .map(|((&v, &w), kind)| {
                        let b = if *kind == NodeKind::Exterior { 0.0 } else { ramp(self.q - v, delta).0 };
                        w * b
                    })
                    .sum::<f64>()
        } else {
            self.lam2 * fluid_area
        };
        EnergyReport {
            total: bulk + jump,
            bulk,
            jump,
            fluid_area,
            history: Vec::new(),
        }
    }

    /// Smooth energy of the four cells around interior node `(i, j)` with the
    /// node set to `v`.
    #[inline]
    fn local(&self, psi: &[f64], i: usize, j: usize, v: f64) -> Local {
        self.local_impl(psi, i, j, v, true)
    }

    /// Derivatives only; `e` is not meaningful.
    #[inline]
    fn local_grad(&self, psi: &[f64], i: usize, j: usize, v: f64) -> Local {
        self.local_impl(psi, i, j, v, false)
    }

    #[inline]
    fn local_impl(&self, psi: &[f64], i: usize, j: usize, v: f64, with_energy: bool) -> Local {
        let dom = self.dom;
        let w = dom.n1() + 1;
        let k = dom.idx(i, j);
        // neighbours: left, right, down, up, and the four diagonals
        let l = psi[k - 1];
        let r = psi[k + 1];
        let dn = psi[k - w];
        let up = psi[k + w];
        let dl = psi[k - w - 1];
        let dr = psi[k - w + 1];
        let ul = psi[k + w - 1];
        let ur = psi[k + w + 1];
        let (k1, k2) = (self.k1, self.k2);
        let kk = k1 + k2;
        let mut out = Local { e: 0.0, d1: 0.0, d2: 0.0 };
        // (horizontal partner, vertical partner, opposite horizontal edge, opposite vertical edge, sum of others)
        let cells = [
            (l, dn, dn - dl, l - dl, l + dn + dl),
            (r, dn, dr - dn, r - dr, r + dn + dr),
            (l, up, ul - up, ul - l, l + up + ul),
            (r, up, ur - up, ur - r, r + up + ur),
        ];
        for &(hp, vp, oh, ov, others) in &cells {
            let eh = v - hp;
            let ev = v - vp;
            let t = 0.5 * (eh * eh + oh * oh) * k1 + 0.5 * (ev * ev + ov * ov) * k2;
            let z = 0.25 * (v + others);
            let p = if with_energy { self.energy.eval(t, z) } else { self.energy.eval_grad(t, z) };
            let dt = eh * k1 + ev * k2;
            out.e += p.big_g;
            out.d1 += 0.5 * p.g * dt + 0.25 * p.big_g_z;
            out.d2 += 0.5 * p.g * kk + 0.5 * p.g_t * dt * dt;
        }
        out.e *= self.area;
        out.d1 *= self.area;
        out.d2 *= self.area;
        out
    }

    /// `local` plus the regularized jump `λ²w·B_δ(Q - v)` for `pen = Some((δ, λ²w))`.
    fn local_pen(&self, psi: &[f64], i: usize, j: usize, v: f64, pen: Option<(f64, f64)>) -> Local {
        let mut loc = self.local(psi, i, j, v);
        if let Some((delta, lam_w)) = pen {
            let (b, db, d2b) = ramp(self.q - v, delta);
            loc.e += lam_w * b;
            loc.d1 -= lam_w * db;
            loc.d2 += lam_w * d2b;
        }
        loc
    }

    /// Exact minimization of the smooth local energy over `[0, Q]`.
    fn smooth_min(&self, psi: &[f64], i: usize, j: usize, v0: f64, loc0: Local, vtol: f64, pen: Option<(f64, f64)>) -> (f64, Local, bool) {
        let q = self.q;
        let (mut lo, mut hi) = (0.0, q);
        let (mut lo_seen, mut hi_seen) = (false, false);
        let (mut v, mut loc) = (v0, loc0);
        for _ in 0..60 {
            if loc.d1 > 0.0 {
                hi = v;
                hi_seen = true;
            } else if loc.d1 < 0.0 {
                lo = v;
                lo_seen = true;
            } else {
                return (v, loc, true);
            }
            if hi_seen && v <= 0.0 {
                return (0.0, loc, true);
            }
            if lo_seen && v >= q {
                return (q, loc, true);
            }
            let mut next = v - loc.d1 / loc.d2.max(1e-300);
            if !(next > lo && next < hi) {
                next = if next <= lo && !lo_seen {
                    0.0
                } else if next >= hi && !hi_seen {
                    q
                } else {
                    0.5 * (lo + hi)
                };
            }
            let done = (next - v).abs() <= vtol || (hi - lo) <= vtol;
            v = next;
            loc = self.local_pen(psi, i, j, v, pen);
            if done {
                return (v, loc, true);
            }
        }
        (v, loc, false)
    }

    /// Nodal update; returns the new value and whether the search settled.
    fn update_node(&self, psi: &[f64], k: usize, omega: f64, exact: bool, vtol: f64, delta: f64) -> (f64, bool) {
        let dom = self.dom;
        let w = dom.n1() + 1;
        let (i, j) = (k % w, k / w);
        let v0 = psi[k];
        let q = self.q;
        let cut = q - self.theta;
        let plateau_near = [k - 1, k + 1, k - w, k + w, k - w - 1, k - w + 1, k + w - 1, k + w + 1]
            .iter()
            .filter(|&&n| psi[n] >= cut)
            .count();
        if v0 >= cut && plateau_near == 8 {
            return (v0, true);
        }
        if delta > 0.0 {
            if !exact && v0 < q - delta {
                let lg = self.local_grad(psi, i, j, v0);
                let v1 = (v0 - omega * lg.d1 / lg.d2).clamp(0.0, q);
                if v1 < q - delta {
                    return (v1, true);
                }
            }
            let pen = Some((delta, self.lam2 * self.weights[k]));
            let loc0 = self.local_pen(psi, i, j, v0, pen);
            let (vs, _, ok) = self.smooth_min(psi, i, j, v0, loc0, vtol, pen);
            return (vs, ok);
        }
        if !exact && plateau_near == 0 && v0 < cut {
            let lg = self.local_grad(psi, i, j, v0);
            let v1 = (v0 - omega * lg.d1 / lg.d2).clamp(0.0, q);
            if v1 < cut {
                return (v1, true);
            }
        }
        let loc0 = self.local(psi, i, j, v0);
        let lam_w = self.lam2 * self.weights[k];
        if v0 >= cut {
            // leaving the plateau must pay λ²w
            if loc0.d1 <= 0.0 || loc0.d1 * loc0.d1 / (2.0 * self.h_min) < lam_w {
                return (v0, true);
            }
            let (vs, ls, ok) = self.smooth_min(psi, i, j, v0, loc0, vtol, None);
            if vs < cut && ls.e + lam_w < loc0.e {
                return (vs, ok);
            }
            return (v0, ok);
        }
        let (vs, ls, ok) = self.smooth_min(psi, i, j, v0, loc0, vtol, None);
        let e0 = loc0.e + lam_w;
        if vs >= cut {
            let lq = if vs >= q { ls } else { self.local(psi, i, j, q) };
            return if lq.e <= e0 { (q, ok) } else { (v0, ok) };
        }
        let es = ls.e + lam_w;
        let dq = q - vs;
        let bound = ls.d1 * dq + 0.5 * self.h_min * dq * dq;
        let mut best = if es <= e0 { (vs, es) } else { (v0, e0) };
        if bound < lam_w {
            let lq = self.local(psi, i, j, q);
            if lq.e < best.1 {
                best = (q, lq.e);
            }
        }
        (best.0, ok)
    }

    /// One lexicographic pass; returns the largest update.
    pub fn relax_sweep(&self, field: &mut DiscreteField, forward: bool, omega: f64, exact: bool, vtol: f64) -> (f64, usize) {
        self.sweep_reg(field, forward, omega, exact, vtol, 0.0)
    }

    fn sweep_reg(&self, field: &mut DiscreteField, forward: bool, omega: f64, exact: bool, vtol: f64, delta: f64) -> (f64, usize) {
        let mut max_up = 0.0f64;
        let mut unsettled = 0;
        let n = self.free.len();
        for s in 0..n {
            let k = if forward { self.free[s] } else { self.free[n - 1 - s] };
            let (v, ok) = self.update_node(&field.values, k, omega, exact, vtol, delta);
            if !ok {
                unsettled += 1;
            }
            max_up = max_up.max((v - field.values[k]).abs());
            field.values[k] = v;
        }
        (max_up, unsettled)
    }

    pub fn default_omega(&self) -> f64 {
        let n = self.dom.n1().max(self.dom.n2()) as f64;
        2.0 / (1.0 + std::f64::consts::PI / n)
    }

    /// Width of the regularized jump that keeps every nodal problem convex,
    /// scaled by `factor`.
    pub fn regularization_width(&self, factor: f64) -> f64 {
        let limit = (2.0 * self.lam2 / (self.energy.g_lower() * (self.k1 + self.k2))).sqrt();
        (factor * limit).min(0.5 * self.q)
    }

    pub fn solve(&self, opts: &SolveOptions, start: Option<&DiscreteField>) -> Result<SolveOutcome> {
        let tol = opts.tol.unwrap_or(1e-8 * self.q);
        let vtol = (1e-3 * tol).max(1e-14 * self.q);
        let omega = opts.omega.unwrap_or_else(|| self.default_omega()).clamp(1.0, 1.99);
        let mut field = match start {
            Some(f) => {
                if f.values.len() != self.dom.nodes() {
                    return Err(Error::Parameter("starting field does not match the grid".into()));
                }
                let mut v = f.values.clone();
                for (k, x) in v.iter_mut().enumerate() {
                    *x = if self.dom.kinds()[k].is_free() {
                        x.clamp(0.0, self.q)
                    } else {
                        self.bd.values()[k]
                    };
                }
                DiscreteField::new(v)
            }
            None => self.initial_field(opts.init),
        };
        let mut pre = Descent::default();
        if opts.regularization > 0.0 && self.lam2 > 0.0 {
            let delta = self.regularization_width(opts.regularization);
            pre = self.descend(&mut field, opts.max_sweeps, REGULARIZED_TOL_FACTOR * tol, vtol, omega, delta);
        }
        let budget = opts.max_sweeps.saturating_sub(pre.sweeps);
        let main = self.descend(&mut field, budget, tol, vtol, omega, 0.0);
        let mut report = self.energy_of(&field.values);
        field.sweeps = pre.sweeps + main.sweeps;
        field.last_energy = report.total;
        report.history = main.history;
        Ok(SolveOutcome {
            field,
            report,
            status: if main.converged { SolveStatus::Converged } else { SolveStatus::MaxSweeps },
            rollbacks: pre.rollbacks + main.rollbacks,
            unsettled: pre.unsettled + main.unsettled,
            regularized_sweeps: pre.sweeps,
        })
    }

    /// Sweeps until the max update drops below `tol`, rolling back any sweep
    /// that raises the energy of the stage.
    fn descend(&self, field: &mut DiscreteField, max_sweeps: usize, tol: f64, vtol: f64, omega0: f64, delta: f64) -> Descent {
        let mut omega = omega0;
        let mut report = self.energy_reg(&field.values, delta);
        let mut out = Descent {
            history: vec![report.total],
            ..Descent::default()
        };
        let mut forward = true;
        let mut exact_next = false;
        while out.sweeps < max_sweeps {
            let saved = if exact_next { None } else { Some(field.values.clone()) };
            let (up, uns) = self.sweep_reg(field, forward, omega, exact_next, vtol, delta);
            let rep = self.energy_reg(&field.values, delta);
            let slack = 1e-13 * (report.bulk.abs() + report.jump.abs()) + 1e-300;
            if rep.total > report.total + slack {
                if let Some(s) = saved {
                    field.values = s;
                    out.rollbacks += 1;
                    exact_next = true;
                    omega = 1.0 + 0.5 * (omega - 1.0);
                    continue;
                }
            }
            out.sweeps += 1;
            out.unsettled += uns;
            exact_next = false;
            forward = !forward;
            report = rep;
            out.history.push(report.total);
            field.last_update = up;
            if up < tol {
                out.converged = true;
                break;
            }
        }
        out
    }

    /// Nodal residual of the discrete Euler–Lagrange equation divided by the
    /// nodal area; `NaN` outside `{ψ < Q}` and at fixed nodes.
    pub fn euler_residual(&self, field: &DiscreteField) -> ResidualField {
        let dom = self.dom;
        let w = dom.n1() + 1;
        let mut values = vec![f64::NAN; dom.nodes()];
        let (mut max, mut sum2, mut count) = (0.0f64, 0.0, 0usize);
        for &k in &self.free {
            let v = field.values[k];
            if v >= self.q - self.theta {
                continue;
            }
            let r = self.local_grad(&field.values, k % w, k / w, v).d1 / self.weights[k];
            values[k] = r;
            max = max.max(r.abs());
            sum2 += r * r;
            count += 1;
        }
        ResidualField {
            values,
            max,
            rms: if count > 0 { (sum2 / count as f64).sqrt() } else { 0.0 },
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualField {
    pub values: Vec<f64>,
    pub max: f64,
    pub rms: f64,
    pub count: usize,
}

/// Convenience wrapper around [`Problem::energy_of`].
pub fn discrete_energy(field: &DiscreteField, energy: &TruncatedEnergy, dom: &TruncatedDomain, bd: &BoundaryData) -> Result<EnergyReport> {
    Ok(Problem::new(energy, dom, bd, SolveOptions::default().theta_rel)?.energy_of(field.values()))
}

pub fn solve(
    energy: &TruncatedEnergy,
    dom: &TruncatedDomain,
    bd: &BoundaryData,
    opts: &SolveOptions,
    start: Option<&DiscreteField>,
) -> Result<SolveOutcome> {
    Problem::new(energy, dom, bd, opts.theta_rel)?.solve(opts, start)
}

/// Pointwise checks on a converged field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldChecks {
    pub min_value: f64,
    pub max_value: f64,
    /// `min (ψ(i+1,j) - ψ(i,j))/h₁` over interior node pairs.
    pub min_dx1: f64,
    /// Largest violation of `inlet(x₂) ≤ ψ ≤ outlet(x₂)`.
    pub ordering_violation: f64,
}

pub fn field_checks(field: &DiscreteField, dom: &TruncatedDomain, bd: &BoundaryData) -> FieldChecks {
    let mut out = FieldChecks {
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        min_dx1: f64::INFINITY,
        ordering_violation: 0.0,
    };
    for j in 0..=dom.n2() {
        let (lo, hi) = bd.side_profiles(dom, j);
        for i in 0..=dom.n1() {
            let v = field.at(dom, i, j);
            out.min_value = out.min_value.min(v);
            out.max_value = out.max_value.max(v);
            if dom.kind(i, j).is_free() {
                out.ordering_violation = out.ordering_violation.max(lo - v).max(v - hi);
                if i < dom.n1() && dom.kind(i + 1, j) != NodeKind::Exterior {
                    out.min_dx1 = out.min_dx1.min((field.at(dom, i + 1, j) - v) / dom.h1());
                }
            }
        }
    }
    out
}
