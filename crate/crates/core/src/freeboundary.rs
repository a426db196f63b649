//! Free-boundary extraction, the jump condition and the continuous-fit
//! shooting on `Λ`.

use serde::{Deserialize, Serialize};

use crate::domain::{boundary_data, BoundaryData, NodeKind, Nozzle, TruncatedDomain};
use crate::error::{Error, Result};
use crate::minimizer::{DiscreteField, Problem, SolveOptions, SolveOutcome};
use crate::truncation::TruncatedEnergy;

/// `x₁ = Υ(x₂)` sampled on the grid rows below the mouth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundary {
    /// `(x₂, Υ)` per row `j = 1..m`; `Υ = +∞` where the row has no crossing.
    pub points: Vec<(f64, f64)>,
    /// Index of the last fluid node per row (`None` without a crossing).
    pub last_fluid: Vec<Option<usize>>,
    /// Lowest height with a finite `Υ`.
    pub l: Option<f64>,
    /// `Υ(1)` extrapolated from the top rows; `+∞` when the rows next to the
    /// mouth have no crossing.
    pub fitgap: f64,
}

impl FreeBoundary {
    pub fn is_empty(&self) -> bool {
        self.l.is_none()
    }

    pub fn finite(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().filter(|p| p.1.is_finite())
    }
}

/// Rows strictly between the axis and the mouth height.
fn jet_rows(dom: &TruncatedDomain) -> std::ops::Range<usize> {
    let m = dom.mouth_row().unwrap_or(dom.n2());
    1..m
}

pub fn extract(field: &DiscreteField, dom: &TruncatedDomain, q: f64, theta: f64) -> Result<FreeBoundary> {
    let cut = q - theta;
    let mut points = Vec::new();
    let mut last_fluid = Vec::new();
    for j in jet_rows(dom) {
        let x2 = dom.x2(j);
        let mut crossing: Option<usize> = None;
        for i in 0..=dom.n1() {
            let v = field.at(dom, i, j);
            match crossing {
                None if v >= cut && i > 0 => crossing = Some(i - 1),
                Some(_) if v < cut => {
                    return Err(Error::Consistency(format!(
                        "row x2={x2:.6} re-enters the fluid at x1={:.6}",
                        dom.x1(i)
                    )));
                }
                _ => {}
            }
        }
        match crossing {
            Some(k) => {
                let xk = dom.x1(k);
                let vk = field.at(dom, k, j);
                let slope = if k > 0 { (vk - field.at(dom, k - 1, j)) / dom.h1() } else { 0.0 };
                let x = if slope > 0.0 { xk + (q - vk) / slope } else { xk + dom.h1() };
                points.push((x2, x.clamp(xk, xk + dom.h1())));
                last_fluid.push(Some(k));
            }
            None => {
                points.push((x2, f64::INFINITY));
                last_fluid.push(None);
            }
        }
    }
    let l = points.iter().find(|p| p.1.is_finite()).map(|p| p.0);
    let fitgap = mouth_gap(&points);
    Ok(FreeBoundary {
        points,
        last_fluid,
        l,
        fitgap,
    })
}

/// Linear extrapolation to `x₂ = 1` through the three rows below the mouth.
fn mouth_gap(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    if n < 3 || !points[n - 1].1.is_finite() {
        return f64::INFINITY;
    }
    let top: Vec<(f64, f64)> = points[n - 3..].to_vec();
    if top.iter().any(|p| !p.1.is_finite()) {
        return f64::INFINITY;
    }
    let (a, b) = least_squares(&top);
    a + b
}

/// Fit `y = a + b x`.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpStats {
    pub samples: usize,
    /// Mean and max of `||∇ψ| - Λ| / Λ`.
    pub mean_rel: f64,
    pub max_rel: f64,
    /// Same statistics for `|Φ_ε(|∇ψ|², Q) - λ_ε²| / λ_ε²`.
    pub phi_mean_rel: f64,
    pub phi_max_rel: f64,
    /// `(x₂, |∇ψ|)` per sampled row.
    pub gradients: Vec<(f64, f64)>,
}

/// One-sided `|∇ψ|` on the fluid side of each boundary row.
///
/// Fluid nodes with a plateau node among their eight neighbours carry the
/// discrete transition of the indicator, so the gradient is taken at the first
/// node of the row (walking into the fluid) that has none, with stencils that
/// avoid such nodes. Rows whose stencil would touch fixed nodes are skipped.
pub fn jump_check(
    field: &DiscreteField,
    fb: &FreeBoundary,
    dom: &TruncatedDomain,
    energy: &TruncatedEnergy,
    lambda: f64,
) -> JumpStats {
    let q = energy.q();
    let lam2 = energy.lambda_eps().powi(2);
    let probe = Probe {
        field,
        dom,
        cut: q - 1e-12 * q,
    };
    let mut grads = Vec::new();
    let rows: Vec<usize> = jet_rows(dom).collect();
    for (r, lf) in fb.last_fluid.iter().enumerate() {
        let Some(k) = *lf else { continue };
        let j = rows[r];
        if k + 1 >= dom.n1() {
            continue;
        }
        let Some(p) = (1..=k).rev().take(4).find(|&i| probe.clean(i as i64, j as i64) && dom.kind(i, j) == NodeKind::Interior) else {
            continue;
        };
        let (pi, pj) = (p as i64, j as i64);
        if let (Some(d1), Some(d2)) = (probe.deriv(pi, pj, (1, 0), dom.h1()), probe.deriv(pi, pj, (0, 1), dom.h2())) {
            grads.push((dom.x2(j), (d1 * d1 + d2 * d2).sqrt()));
        }
    }
    let n = grads.len();
    let mut out = JumpStats {
        samples: n,
        mean_rel: f64::NAN,
        max_rel: f64::NAN,
        phi_mean_rel: f64::NAN,
        phi_max_rel: f64::NAN,
        gradients: grads.clone(),
    };
    if n == 0 {
        return out;
    }
    let rel: Vec<f64> = grads.iter().map(|g| (g.1 - lambda).abs() / lambda).collect();
    let phi: Vec<f64> = grads
        .iter()
        .map(|g| (energy.Phi(g.1 * g.1, q).unwrap_or(f64::NAN) - lam2).abs() / lam2)
        .collect();
    out.mean_rel = rel.iter().sum::<f64>() / n as f64;
    out.max_rel = rel.iter().cloned().fold(0.0, f64::max);
    out.phi_mean_rel = phi.iter().sum::<f64>() / n as f64;
    out.phi_max_rel = phi.iter().cloned().fold(0.0, f64::max);
    out
}

struct Probe<'a> {
    field: &'a DiscreteField,
    dom: &'a TruncatedDomain,
    cut: f64,
}

impl Probe<'_> {
    fn value(&self, i: i64, j: i64) -> Option<f64> {
        let (n1, n2) = (self.dom.n1() as i64, self.dom.n2() as i64);
        if i < 0 || j < 0 || i > n1 || j > n2 || self.dom.kind(i as usize, j as usize) == NodeKind::Exterior {
            return None;
        }
        Some(self.field.at(self.dom, i as usize, j as usize))
    }

    /// Fluid node with no plateau node among its neighbours.
    fn clean(&self, i: i64, j: i64) -> bool {
        if !self.value(i, j).is_some_and(|v| v < self.cut) {
            return false;
        }
        (-1..=1).all(|dj| (-1..=1).all(|di| self.value(i + di, j + dj).is_none_or(|v| v < self.cut)))
    }

    /// Derivative along `dir` at `(i, j)`: central when both sides are clean,
    /// otherwise second-order one-sided.
    fn deriv(&self, i: i64, j: i64, dir: (i64, i64), h: f64) -> Option<f64> {
        let at = |d: i64| (i + d * dir.0, j + d * dir.1);
        let ok = |d: i64| {
            let (a, b) = at(d);
            self.clean(a, b)
        };
        let val = |d: i64| {
            let (a, b) = at(d);
            self.value(a, b).unwrap_or(f64::NAN)
        };
        if ok(-1) && ok(1) {
            Some((val(1) - val(-1)) / (2.0 * h))
        } else if ok(-1) && ok(-2) {
            Some((3.0 * val(0) - 4.0 * val(-1) + val(-2)) / (2.0 * h))
        } else if ok(1) && ok(2) {
            Some((-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeGap {
    /// Fitted `Υ'(1)`.
    pub slope: f64,
    /// `Θ'(1)`.
    pub wall_slope: f64,
    pub gap: f64,
}

/// Least-squares slope of `Υ` over the `k` rows below the mouth compared with
/// the wall slope at the mouth.
pub fn smooth_fit_check(fb: &FreeBoundary, nozzle: &Nozzle, k: usize) -> Result<SlopeGap> {
    let n = fb.points.len();
    if k < 2 || n < k || fb.points[n - k..].iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Refused(format!(
            "insufficient resolution: fewer than {k} finite free-boundary rows below the mouth"
        )));
    }
    let (_, slope) = least_squares(&fb.points[n - k..]);
    let wall_slope = nozzle.theta_deriv(1.0);
    Ok(SlopeGap {
        slope,
        wall_slope,
        gap: (slope - wall_slope).abs(),
    })
}

/// Height of the plateau's lower edge along column `i`, extrapolated from the
/// two fluid nodes below it.
pub fn plateau_height(field: &DiscreteField, dom: &TruncatedDomain, q: f64, theta: f64, i: usize) -> Option<f64> {
    let cut = q - theta;
    let top = dom.mouth_row().unwrap_or(dom.n2());
    let j = (1..top).find(|&j| field.at(dom, i, j) >= cut)?;
    let (y0, v0) = (dom.x2(j - 1), field.at(dom, i, j - 1));
    if j < 2 {
        return Some(dom.x2(j));
    }
    let slope = (v0 - field.at(dom, i, j - 2)) / dom.h2();
    let h = if slope > 0.0 { y0 + (q - v0) / slope } else { dom.x2(j) };
    Some(h.clamp(y0, dom.x2(j)))
}

/// Fixed inputs of a jet solve; only `Λ` varies between trials.
#[derive(Debug, Clone)]
pub struct JetSetup {
    pub energy: TruncatedEnergy,
    pub dom: TruncatedDomain,
    pub s: f64,
    pub b_prime: Option<f64>,
    pub solve: SolveOptions,
}

#[derive(Debug, Clone)]
pub struct JetTrial {
    pub lambda: f64,
    pub energy: TruncatedEnergy,
    pub bd: BoundaryData,
    pub outcome: SolveOutcome,
    pub fb: FreeBoundary,
}

impl JetTrial {
    pub fn fitgap(&self) -> f64 {
        self.fb.fitgap
    }

    pub fn field(&self) -> &DiscreteField {
        &self.outcome.field
    }
}

impl JetSetup {
    pub fn q(&self) -> f64 {
        self.energy.q()
    }

    pub fn theta(&self) -> f64 {
        self.solve.theta_rel * self.q()
    }

    pub fn trial(&self, lambda: f64, start: Option<&DiscreteField>) -> Result<JetTrial> {
        let energy = self.energy.with_lambda(lambda)?;
        let bd = boundary_data(&self.dom, self.q(), lambda, self.s, self.b_prime)?;
        let problem = Problem::new(&energy, &self.dom, &bd, self.solve.theta_rel)?;
        let outcome = problem.solve(&self.solve, start)?;
        let fb = extract(&outcome.field, &self.dom, self.q(), problem.theta())?;
        Ok(JetTrial {
            lambda,
            energy,
            bd,
            outcome,
            fb,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// `|Υ(1)|` target; `None` means twice the larger grid spacing.
    pub fit_tol: Option<f64>,
    /// Starting `Λ`; `None` means `Q`.
    pub lambda0: Option<f64>,
    pub max_trials: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fit_tol: None,
            lambda0: None,
            max_trials: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub lambda: f64,
    pub fitgap: f64,
    pub energy: f64,
    pub sweeps: usize,
    pub converged: bool,
}

pub struct ShootingResult {
    pub lambda_fit: f64,
    pub history: Vec<TrialRecord>,
    pub best: JetTrial,
    pub fit_tol: f64,
    /// Sign changes seen among the trials, ordered by `Λ`.
    pub sign_changes: usize,
}

/// Bisection on `Λ` for `Υ_Λ(1) = 0`.
pub fn continuous_fit(setup: &JetSetup, opts: &FitOptions) -> Result<ShootingResult> {
    let q = setup.q();
    let fit_tol = opts.fit_tol.unwrap_or(2.0 * setup.dom.h1().max(setup.dom.h2()));
    let (lmin, lmax) = (q / 50.0, 50.0 * q);
    let mut history: Vec<TrialRecord> = Vec::new();
    let mut trials: Vec<JetTrial> = Vec::new();
    let record = |t: &JetTrial, h: &mut Vec<TrialRecord>| {
        h.push(TrialRecord {
            lambda: t.lambda,
            fitgap: t.fitgap(),
            energy: t.outcome.report.total,
            sweeps: t.outcome.field.sweeps,
            converged: t.outcome.converged(),
        })
    };
    let nearest = |trials: &[JetTrial], l: f64| -> Option<usize> {
        (0..trials.len()).min_by(|&a, &b| {
            let da = (trials[a].lambda / l).ln().abs();
            let db = (trials[b].lambda / l).ln().abs();
            da.partial_cmp(&db).unwrap()
        })
    };
    let run = |l: f64, trials: &mut Vec<JetTrial>, history: &mut Vec<TrialRecord>| -> Result<usize> {
        let start = nearest(trials, l).map(|k| trials[k].outcome.field.clone());
        let t = setup.trial(l, start.as_ref())?;
        record(&t, history);
        trials.push(t);
        Ok(trials.len() - 1)
    };

    let l0 = opts.lambda0.unwrap_or(q).clamp(lmin, lmax);
    let k0 = run(l0, &mut trials, &mut history)?;
    let g0 = trials[k0].fitgap();
    if g0.abs() <= fit_tol {
        return Ok(finish(trials, k0, history, fit_tol));
    }
    // grow towards the other sign
    let factor = if g0 > 0.0 { 2.0 } else { 0.5 };
    let (mut a, mut b) = (k0, k0);
    loop {
        if history.len() >= opts.max_trials {
            return Err(shoot_err("bracket not found within the trial budget", &history));
        }
        let l = trials[b].lambda * factor;
        if !(lmin..=lmax).contains(&l) {
            return Err(shoot_err("bracket not found within [Q/50, 50Q]", &history));
        }
        let k = run(l, &mut trials, &mut history)?;
        let g = trials[k].fitgap();
        if g.abs() <= fit_tol {
            return Ok(finish(trials, k, history, fit_tol));
        }
        if (g > 0.0) != (g0 > 0.0) {
            b = k;
            break;
        }
        a = k;
        b = k;
    }
    // (lo: fitgap > 0, hi: fitgap < 0)
    let (mut lo, mut hi) = if trials[a].fitgap() > 0.0 { (a, b) } else { (b, a) };
    loop {
        if history.len() >= opts.max_trials {
            let best = if trials[lo].fitgap().abs() < trials[hi].fitgap().abs() { lo } else { hi };
            let mut res = finish(trials, best, history, fit_tol);
            res.lambda_fit = f64::NAN;
            return Err(shoot_err(
                &format!("no Λ with |Υ(1)| ≤ {fit_tol} within the trial budget"),
                &res.history,
            ));
        }
        let l = (trials[lo].lambda * trials[hi].lambda).sqrt();
        let k = run(l, &mut trials, &mut history)?;
        let g = trials[k].fitgap();
        if g.abs() <= fit_tol {
            return Ok(finish(trials, k, history, fit_tol));
        }
        if g > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
    }
}

fn finish(mut trials: Vec<JetTrial>, k: usize, history: Vec<TrialRecord>, fit_tol: f64) -> ShootingResult {
    let mut sorted: Vec<&TrialRecord> = history.iter().collect();
    sorted.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    let sign_changes = sorted
        .windows(2)
        .filter(|w| (w[0].fitgap > 0.0) != (w[1].fitgap > 0.0))
        .count();
    let best = trials.swap_remove(k);
    ShootingResult {
        lambda_fit: best.lambda,
        history,
        best,
        fit_tol,
        sign_changes,
    }
}

fn shoot_err(msg: &str, history: &[TrialRecord]) -> Error {
    let trials: Vec<String> = history
        .iter()
        .map(|t| format!("(Λ={:.6}, Υ(1)={:.6})", t.lambda, t.fitgap))
        .collect();
    Error::Shooting(format!("{msg}; trials: {}", trials.join(", ")))
}
