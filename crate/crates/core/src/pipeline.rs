//! End-to-end runs: fit a jet for one flux, verify it and write the
//! artifacts; scan fluxes; regenerate oracle values; re-check stored fields.

use std::fs::File;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{
    critical_flux_scan, downstream_state, exit_density_of_lambda, exit_pressure_of_lambda, farfield_compare, quasi1d_scan,
    subsonic_margin, CriticalFluxReport, DownstreamState, FarfieldReport, MarginReport, SurrogatePoint,
};
use crate::config::{Resolved, RunConfig};
use crate::domain::{boundary_data, NodeKind, TruncatedDomain};
use crate::error::{Error, Result};
use crate::flow::{derive_flow, FlowChecks, FlowField};
use crate::freeboundary::{
    continuous_fit, extract, jump_check, plateau_height, smooth_fit_check, FreeBoundary, JetSetup, JumpStats, ShootingResult,
    SlopeGap,
};
use crate::io::{parse_field_csv, write_field_csv, write_table, StoredField, SCHEMA_VERSION};
use crate::minimizer::{field_checks, DiscreteField, FieldChecks, Problem};
use crate::truncation::TruncatedEnergy;
use crate::upstream::{solve_upstream, UpstreamState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// Fails the run.
    Error,
    /// Fails the run only in strict mode.
    Warning,
    /// Recorded, never fails.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub severity: Severity,
    pub passed: bool,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl CheckRecord {
    fn new(name: &str, severity: Severity, passed: bool, value: Option<f64>, limit: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            severity,
            passed,
            value: value.map(clamp_infinite),
            limit,
            detail: detail.into(),
        }
    }

    pub fn fails(&self, strict: bool) -> bool {
        !self.passed && (self.severity == Severity::Error || (strict && self.severity == Severity::Warning))
    }
}

/// Infinities become `±f64::MAX` so they survive JSON.
fn clamp_infinite(v: f64) -> f64 {
    if v.is_infinite() {
        v.signum() * f64::MAX
    } else {
        v
    }
}

pub fn all_pass(checks: &[CheckRecord], strict: bool) -> bool {
    !checks.iter().any(|c| c.fails(strict))
}

/// Upstream state and the fixed part of a jet solve for flux `q`.
pub fn prepare(cfg: &RunConfig, res: &Resolved, q: f64) -> Result<(UpstreamState, JetSetup)> {
    let up = solve_upstream(&res.gas, &res.profile, q)?;
    let energy = TruncatedEnergy::new(res.gas, up.bernoulli_of_stream(), res.cutoff, q)?;
    let setup = JetSetup {
        energy,
        dom: res.dom.clone(),
        s: cfg.flow.s,
        b_prime: cfg.flow.b_prime,
        solve: cfg.solver.options(),
    };
    Ok((up, setup))
}

/// Everything computed for one fitted jet.
pub struct JetRun {
    pub up: UpstreamState,
    pub setup: JetSetup,
    pub shooting: ShootingResult,
    pub down: Option<DownstreamState>,
    pub margin: MarginReport,
    pub flow: Option<(FlowField, FlowChecks)>,
    pub jump: JumpStats,
    pub smooth: Option<SlopeGap>,
    pub farfield: Option<FarfieldReport>,
    pub plateau: Option<f64>,
    pub field: FieldChecks,
    pub p_e: Option<f64>,
    pub checks: Vec<CheckRecord>,
}

impl JetRun {
    pub fn field_values(&self) -> &DiscreteField {
        self.shooting.best.field()
    }

    pub fn fb(&self) -> &FreeBoundary {
        &self.shooting.best.fb
    }

    pub fn lambda(&self) -> f64 {
        self.shooting.lambda_fit
    }
}

/// Column used for the asymptotic plateau height: halfway between the mouth
/// and the outlet.
pub fn plateau_column(dom: &TruncatedDomain) -> usize {
    let k = dom.mouth_col().unwrap_or(0);
    k + (dom.n1() - k) / 2
}

pub fn fit_and_verify(cfg: &RunConfig, res: &Resolved, q: f64) -> Result<JetRun> {
    let (up, setup) = prepare(cfg, res, q)?;
    let shooting = continuous_fit(&setup, &cfg.fit.options())?;
    Ok(verify(cfg, up, setup, shooting))
}

fn verify(cfg: &RunConfig, up: UpstreamState, setup: JetSetup, shooting: ShootingResult) -> JetRun {
    let c = &cfg.checks;
    let dom = &setup.dom;
    let best = &shooting.best;
    let q = setup.q();
    let lambda = shooting.lambda_fit;
    let field = best.field();
    let h = dom.h1().max(dom.h2());
    let mut checks = Vec::new();
    use Severity::*;

    checks.push(CheckRecord::new(
        "converged",
        Error,
        best.outcome.converged(),
        Some(field.last_update),
        setup.solve.tol,
        format!("{} sweeps, {} in the regularized stage", field.sweeps, best.outcome.regularized_sweeps),
    ));
    let fc = field_checks(field, dom, &best.bd);
    checks.extend(field_records(&fc, q, dom.h1()));
    let hist = &best.outcome.report.history;
    let worst_rise = hist
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1e-300))
        .fold(0.0, f64::max);
    checks.push(CheckRecord::new(
        "energy_monotone",
        Error,
        worst_rise <= 1e-12,
        Some(worst_rise),
        Some(1e-12),
        format!("{} recorded sweeps", hist.len()),
    ));

    checks.push(CheckRecord::new(
        "continuous_fit",
        Error,
        shooting.best.fitgap().abs() <= shooting.fit_tol,
        Some(shooting.best.fitgap()),
        Some(shooting.fit_tol),
        format!("Λ_fit = {lambda} after {} trials", shooting.history.len()),
    ));
    checks.push(CheckRecord::new(
        "lambda_range",
        Error,
        lambda >= q / 10.0 && lambda <= 10.0 * q,
        Some(lambda / q),
        Some(10.0),
        "Λ_fit/Q must lie in [0.1, 10]",
    ));
    checks.push(fb_record(&best.fb, dom, &best.bd));

    let jump = jump_check(field, &best.fb, dom, &best.energy, lambda);
    checks.push(CheckRecord::new(
        "jump_condition",
        Warning,
        jump.samples > 0 && jump.mean_rel <= 0.10,
        Some(jump.mean_rel),
        Some(0.10),
        format!("{} rows, max {:.4}", jump.samples, jump.max_rel),
    ));
    let smooth = smooth_fit_check(&best.fb, dom.nozzle().expect("jet domain"), c.slope_rows).ok();
    checks.push(CheckRecord::new(
        "smooth_fit",
        Info,
        true,
        smooth.map(|s| s.gap),
        None,
        match smooth {
            Some(s) => format!("Υ'(1) = {:.4}, Θ'(1) = {:.4}", s.slope, s.wall_slope),
            None => "insufficient resolution below the mouth".into(),
        },
    ));

    let down = downstream_state(&up, lambda);
    let plateau = plateau_height(field, dom, q, setup.theta(), plateau_column(dom));
    let (down, farfield) = match down {
        Ok(d) => {
            let mass = (d.mass_flux() - q).abs() / q;
            checks.push(CheckRecord::new(
                "downstream_mass_balance",
                Error,
                mass <= c.oracle_tol && d.bernoulli_residual().abs() <= 1e-10,
                Some(mass),
                Some(c.oracle_tol),
                format!("H̲ = {:.6}, ρ̲ = {:.6}", d.h_down, d.rho_down),
            ));
            let gap = plateau.map(|p| (p - d.h_down).abs());
            checks.push(CheckRecord::new(
                "plateau_height",
                Warning,
                gap.is_some_and(|g| g <= 2.0 * h),
                gap,
                Some(2.0 * h),
                format!("column x1 = {:.4}, H = {:?}", dom.x1(plateau_column(dom)), plateau),
            ));
            let ff = farfield_compare(field, &up, &d, dom, c.farfield_band);
            let innermost = |v: &[crate::asymptotics::ColumnDeviation]| v.last().map(|d| d.sup);
            checks.push(CheckRecord::new(
                "farfield",
                Info,
                true,
                innermost(&ff.outlet),
                None,
                format!("inlet {:?}, outlet {:?} at the innermost band column", innermost(&ff.inlet), innermost(&ff.outlet)),
            ));
            (Some(d), Some(ff))
        }
        Err(e) => {
            checks.push(CheckRecord::new("downstream_mass_balance", Error, false, None, None, e.to_string()));
            (None, None)
        }
    };

    let b_wall = up.profile().value(up.bar_h());
    let p_e = exit_pressure_of_lambda(up.gas(), lambda, b_wall).ok();
    let rho_e = exit_density_of_lambda(up.gas(), lambda, b_wall).ok();
    let consistent = match (&down, rho_e) {
        (Some(d), Some(r)) => ((r - d.rho_down) / d.rho_down).abs(),
        _ => f64::NAN,
    };
    checks.push(CheckRecord::new(
        "exit_pressure",
        Error,
        consistent <= 1e-10,
        Some(consistent),
        Some(1e-10),
        format!("p_e = {p_e:?}, ρ_e = {rho_e:?}"),
    ));

    let margin = subsonic_margin(field, dom, &best.energy, c.margin_band);
    checks.push(CheckRecord::new(
        "subsonic_margin",
        Error,
        margin.subsonic,
        Some(margin.margin),
        Some(-margin.epsilon),
        format!("{} cells, max at ({:.3}, {:.3})", margin.cells, margin.at.0, margin.at.1),
    ));
    let flow = match derive_flow(field, dom, &best.energy, &margin, c.margin_band) {
        Ok(f) => {
            let fcheck = f.checks(dom, &up, c.flux_sections);
            let rho_min = f.cells.iter().map(|c| c.rho).fold(f64::INFINITY, f64::min);
            let u2_tol = 1e-8 * q / (dom.h1() * rho_min);
            checks.push(CheckRecord::new("mach_below_one", Error, fcheck.max_mach < 1.0, Some(fcheck.max_mach), Some(1.0), ""));
            checks.push(CheckRecord::new(
                "u2_nonpositive",
                Error,
                fcheck.max_u2 <= u2_tol,
                Some(fcheck.max_u2),
                Some(u2_tol),
                "",
            ));
            checks.push(CheckRecord::new(
                "mass_flux_sections",
                Error,
                fcheck.flux_rel_dev <= 0.05,
                Some(fcheck.flux_rel_dev),
                Some(0.05),
                format!("{} sections", fcheck.sections.len()),
            ));
            checks.push(CheckRecord::new(
                "continuity_residual",
                Info,
                true,
                Some(fcheck.max_divergence),
                None,
                format!("inlet (ρ, u₁) relative deviation {:.3e}", fcheck.inlet_rel_dev),
            ));
            Some((f, fcheck))
        }
        Err(e) => {
            checks.push(CheckRecord::new("flow_fields", Error, false, None, None, e.to_string()));
            None
        }
    };

    if let Ok(problem) = Problem::new(&best.energy, dom, &best.bd, setup.solve.theta_rel) {
        let r = problem.euler_residual(field);
        checks.push(CheckRecord::new(
            "euler_residual",
            Info,
            true,
            Some(r.rms),
            None,
            format!("max {:.3e} over {} nodes", r.max, r.count),
        ));
    }
    let lip = lipschitz_ratio(field, &best.fb, dom, lambda);
    checks.push(CheckRecord::new(
        "lipschitz_near_boundary",
        Info,
        true,
        Some(lip),
        None,
        "max |∇ψ|/Λ over cells within 5h of the free boundary",
    ));

    JetRun {
        up,
        setup,
        shooting,
        down,
        margin,
        flow,
        jump,
        smooth,
        farfield,
        plateau,
        field: fc,
        p_e,
        checks,
    }
}

fn field_records(fc: &FieldChecks, q: f64, h1: f64) -> Vec<CheckRecord> {
    use Severity::*;
    let slack = 1e-12 * q;
    let dx_limit = -1e-8 * q / h1;
    vec![
        CheckRecord::new(
            "bounds",
            Error,
            fc.min_value >= -slack && fc.max_value <= q + slack,
            Some(fc.min_value.min(q - fc.max_value)),
            Some(-slack),
            format!("ψ ∈ [{:.3e}, {:.6}]", fc.min_value, fc.max_value),
        ),
        CheckRecord::new("monotone_x1", Error, fc.min_dx1 >= dx_limit, Some(fc.min_dx1), Some(dx_limit), ""),
        CheckRecord::new(
            "boundary_ordering",
            Error,
            fc.ordering_violation <= 1e-9 * q,
            Some(fc.ordering_violation),
            Some(1e-9 * q),
            "inlet data ≤ ψ ≤ outlet data along each row",
        ),
    ]
}

fn fb_record(fb: &FreeBoundary, dom: &TruncatedDomain, bd: &crate::domain::BoundaryData) -> CheckRecord {
    let h_tilde = bd.params().map_or(0.0, |p| p.h_tilde);
    let below = fb.finite().filter(|p| p.0 < h_tilde).count();
    let slack = 1e-9 * dom.h1();
    let outside = fb.finite().filter(|p| !(p.1 > -dom.mu() && p.1 <= dom.r() + slack)).count();
    CheckRecord::new(
        "free_boundary_graph",
        Severity::Error,
        !fb.is_empty() && below == 0 && outside == 0,
        fb.l,
        Some(h_tilde),
        format!("{} rows, {below} below H̃, {outside} outside (-μ, R]", fb.finite().count()),
    )
}

fn lipschitz_ratio(field: &DiscreteField, fb: &FreeBoundary, dom: &TruncatedDomain, lambda: f64) -> f64 {
    let reach = 5.0 * dom.h1().max(dom.h2());
    let pts: Vec<(f64, f64)> = fb.finite().collect();
    let mut best: f64 = 0.0;
    for cj in 0..dom.n2() {
        for ci in 0..dom.n1() {
            let corners = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)];
            if corners.iter().any(|&(i, j)| dom.kind(i, j) == NodeKind::Exterior) {
                continue;
            }
            let (xc, yc) = (0.5 * (dom.x1(ci) + dom.x1(ci + 1)), 0.5 * (dom.x2(cj) + dom.x2(cj + 1)));
            if pts.iter().any(|p| (p.1 - xc).hypot(p.0 - yc) <= reach) {
                best = best.max(field.cell_t(dom, ci, cj).sqrt());
            }
        }
    }
    best / lambda
}

fn create(dir: &Path, name: &str) -> Result<File> {
    let path = dir.join(name);
    File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let f = create(dir, name)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), value).map_err(|e| Error::Io(e.to_string()))
}

fn error_value(e: &Error) -> Value {
    json!({ "kind": e.kind(), "message": e.to_string() })
}

/// Summary common to every command.
fn summary(command: &str, cfg: Option<&RunConfig>, checks: &[CheckRecord], strict: bool, error: Option<&Error>, body: Value) -> Value {
    let ok = error.is_none() && all_pass(checks, strict);
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "status": if ok { "pass" } else { "fail" },
        "strict": strict,
        "error": error.map(error_value),
        "config": cfg,
        "checks": checks,
        "results": body,
    })
}

/// Writes the artifacts of a fitted jet into `dir`.
pub fn write_jet(dir: &Path, run: &JetRun) -> Result<Value> {
    let dom = &run.setup.dom;
    let q = run.setup.q();
    write_field_csv(create(dir, "field.csv")?, run.field_values(), dom, q, Some(run.lambda()))?;
    write_table(
        create(dir, "free_boundary.csv")?,
        &["x2", "upsilon"],
        run.fb().finite().map(|p| vec![p.0, p.1]),
    )?;
    write_json(
        dir,
        "shooting.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "lambda_fit": run.lambda(),
            "fit_tol": run.shooting.fit_tol,
            "sign_changes": run.shooting.sign_changes,
            "trials": run.shooting.history,
        }),
    )?;
    if let Some(d) = &run.down {
        let n = 64;
        write_table(
            create(dir, "downstream.csv")?,
            &["x2", "theta", "u_down", "psi_bar"],
            (0..=n).map(|k| {
                let x = d.bar_h * k as f64 / n as f64;
                vec![x, d.theta(x), d.u_on_streamline(x), run.up.psi_bar(x)]
            }),
        )?;
    }
    if let Some(ff) = &run.farfield {
        write_json(dir, "farfield.json", &json!({ "schema_version": SCHEMA_VERSION, "report": ff }))?;
    }
    if let Some((f, _)) = &run.flow {
        write_table(
            create(dir, "flow.csv")?,
            &["x1", "x2", "rho", "u1", "u2", "mach"],
            f.cells.iter().map(|c| vec![c.x1, c.x2, c.rho, c.u1, c.u2, c.mach]),
        )?;
    }
    let best = &run.shooting.best;
    Ok(json!({
        "q": q,
        "lambda_fit": run.lambda(),
        "fitgap": best.fitgap(),
        "grid": { "n1": dom.n1(), "n2": dom.n2(), "h1": dom.h1(), "h2": dom.h2(), "mu": dom.mu(), "r": dom.r() },
        "upstream": { "rho_bar": run.up.rho_bar(), "u_bar_wall": run.up.u_bar(run.up.bar_h()) },
        "energy": {
            "total": best.outcome.report.total,
            "bulk": best.outcome.report.bulk,
            "jump": best.outcome.report.jump,
            "fluid_area": best.outcome.report.fluid_area,
            "sweeps": best.outcome.field.sweeps,
            "regularized_sweeps": best.outcome.regularized_sweeps,
            "rollbacks": best.outcome.rollbacks,
        },
        "free_boundary": { "l": run.fb().l, "rows": run.fb().finite().count() },
        "downstream": run.down.as_ref().map(|d| json!({
            "rho_down": d.rho_down, "h_down": d.h_down, "p_e": d.p_e, "rho_e": d.exit_density(),
        })),
        "p_e": run.p_e,
        "plateau_height": run.plateau,
        "margin": run.margin,
        "jump": { "samples": run.jump.samples, "mean_rel": run.jump.mean_rel, "max_rel": run.jump.max_rel,
                  "phi_mean_rel": run.jump.phi_mean_rel, "phi_max_rel": run.jump.phi_max_rel },
        "smooth_fit": run.smooth,
        "flow": run.flow.as_ref().map(|f| &f.1),
    }))
}

/// Outcome of a command: the summary JSON (also written to `summary.json`)
/// and whether the run passes.
pub struct CommandOutcome {
    pub summary: Value,
    pub passed: bool,
}

fn finish(dir: &Path, summary: Value) -> Result<CommandOutcome> {
    let passed = summary["status"] == "pass";
    write_json(dir, "summary.json", &summary)?;
    Ok(CommandOutcome { summary, passed })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Summary for a command that failed before producing results, e.g. on an
/// unreadable configuration.
pub fn run_failed(command: &str, dir: &Path, error: &Error) -> Result<CommandOutcome> {
    ensure_dir(dir)?;
    finish(dir, summary(command, None, &[], false, Some(error), Value::Null))
}

/// `solve`: fit the jet for the configured flux, verify it and write the
/// artifacts. Module errors end up in the summary rather than propagating.
pub fn run_solve(cfg: &RunConfig, dir: &Path, strict: bool) -> Result<CommandOutcome> {
    ensure_dir(dir)?;
    let attempt = (|| -> Result<(Vec<CheckRecord>, Value)> {
        let res = cfg.validate()?;
        let q = match cfg.flow.q {
            Some(q) => q,
            None => cfg.fluxes().first().copied().ok_or_else(|| Error::Parameter("flow.q is required".into()))?,
        };
        let run = fit_and_verify(cfg, &res, q)?;
        let body = write_jet(dir, &run)?;
        Ok((run.checks, body))
    })();
    let s = match attempt {
        Ok((checks, body)) => summary("solve", Some(cfg), &checks, strict, None, body),
        Err(e) => summary("solve", Some(cfg), &[], strict, Some(&e), Value::Null),
    };
    finish(dir, s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub q: f64,
    pub lambda_fit: Option<f64>,
    pub margin: Option<f64>,
    pub h_down: Option<f64>,
    pub status: crate::asymptotics::ScanStatus,
    pub note: Option<String>,
}

/// Fitted `(Λ, 𝔐, H̲)` for one flux.
pub fn scan_item(cfg: &RunConfig, res: &Resolved, q: f64) -> Result<(f64, f64, f64)> {
    let (up, setup) = prepare(cfg, res, q)?;
    let shot = continuous_fit(&setup, &cfg.fit.options())?;
    let margin = subsonic_margin(shot.best.field(), &setup.dom, &shot.best.energy, cfg.checks.margin_band);
    let h_down = downstream_state(&up, shot.lambda_fit).map(|d| d.h_down).unwrap_or(f64::NAN);
    Ok((shot.lambda_fit, margin.margin, h_down))
}

/// Runs the flux list on up to `threads` workers, then the refinement point.
pub fn critical_scan(cfg: &RunConfig, res: &Resolved, threads: usize) -> CriticalFluxReport {
    let qs = cfg.fluxes();
    let threads = threads.max(1).min(qs.len().max(1));
    let mut cache: Vec<Option<Result<(f64, f64, f64)>>> = vec![None; qs.len()];
    std::thread::scope(|s| {
        let chunks: Vec<Vec<usize>> = (0..threads).map(|t| (t..qs.len()).step_by(threads).collect()).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|idx| {
                let qs = &qs;
                s.spawn(move || idx.into_iter().map(|k| (k, scan_item(cfg, res, qs[k]))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("scan worker panicked") {
                cache[k] = Some(r);
            }
        }
    });
    let q_upper = crate::upstream::flux_window(&res.gas, &res.profile).map_or(f64::NAN, |w| w.q_upper);
    critical_flux_scan(&qs, res.cutoff.epsilon(), q_upper, |q| {
        match qs.iter().position(|&v| v == q).and_then(|k| cache[k].take()) {
            Some(r) => r,
            None => scan_item(cfg, res, q),
        }
    })
}

/// `scan`: critical-flux scan plus the quasi-one-dimensional surrogate.
pub fn run_scan(cfg: &RunConfig, dir: &Path, threads: usize, strict: bool) -> Result<CommandOutcome> {
    ensure_dir(dir)?;
    let attempt = (|| -> Result<(Vec<CheckRecord>, Value)> {
        let res = cfg.validate()?;
        let report = critical_scan(cfg, &res, threads);
        let surrogate = quasi1d_scan(&res.gas, &res.profile, 6)?;
        let mut lines = String::new();
        for it in &report.items {
            let rec = ScanRecord {
                q: it.q,
                lambda_fit: it.lambda_fit,
                margin: it.margin,
                h_down: it.h_down,
                status: it.status,
                note: it.note.clone(),
            };
            let mut v = serde_json::to_value(&rec).map_err(|e| Error::Io(e.to_string()))?;
            v["schema_version"] = json!(SCHEMA_VERSION);
            lines.push_str(&v.to_string());
            lines.push('\n');
        }
        std::fs::write(dir.join("scan.jsonl"), lines)?;
        write_table(
            create(dir, "surrogate.csv")?,
            &["q", "rho_bar", "margin"],
            surrogate.iter().map(|p| vec![p.q, p.rho_bar, p.margin]),
        )?;
        let checks = scan_checks(&report, &surrogate);
        Ok((checks, json!({ "report": report, "surrogate": surrogate })))
    })();
    let s = match attempt {
        Ok((checks, body)) => summary("scan", Some(cfg), &checks, strict, None, body),
        Err(e) => summary("scan", Some(cfg), &[], strict, Some(&e), Value::Null),
    };
    finish(dir, s)
}

pub fn scan_checks(report: &CriticalFluxReport, surrogate: &[SurrogatePoint]) -> Vec<CheckRecord> {
    use Severity::*;
    let mono = surrogate.windows(2).all(|w| w[1].margin > w[0].margin);
    let last = surrogate.last().map(|p| p.margin);
    let margins: Vec<f64> = report.items.iter().filter_map(|i| i.margin).collect();
    let increasing = margins.windows(2).filter(|w| w[1] < w[0]).count();
    vec![
        CheckRecord::new(
            "surrogate_monotone",
            Error,
            mono,
            last,
            Some(0.0),
            "quasi-1D margin increases towards Q^* and vanishes there",
        ),
        CheckRecord::new(
            "surrogate_sonic_limit",
            Error,
            last.is_some_and(|m| m.abs() <= 1e-12),
            last.map(f64::abs),
            Some(1e-12),
            "",
        ),
        CheckRecord::new(
            "qc_below_upper_flux",
            Error,
            report.q_c_estimate.map_or(true, |q| q <= report.q_upper),
            report.q_c_estimate,
            Some(report.q_upper),
            "",
        ),
        CheckRecord::new(
            "scan_margin_trend",
            Warning,
            increasing == 0,
            Some(increasing as f64),
            Some(0.0),
            "decreases of 𝔐 along the solved fluxes",
        ),
    ]
}

/// Reference values recomputed from closed forms and the library's solvers.
pub fn oracle_values() -> Result<Value> {
    use crate::domain::Nozzle;
    use crate::gas::GasModel;
    use crate::strip::{cauchy_strip, dirichlet_strip};
    use crate::truncation::Cutoff;
    use crate::upstream::BernoulliProfile;

    let g14 = GasModel::new(1.4)?;
    let g2 = GasModel::new(2.0)?;
    let flat = BernoulliProfile::constant(2.0, 1.5, 16)?;
    let vort = BernoulliProfile::cosine(2.0, 1.5, 0.1, 32)?;
    let up_flat = solve_upstream(&g2, &flat, 2.4 * 0.6f64.sqrt())?;
    let up_vort = solve_upstream(&g2, &vort, 1.2)?;
    let flat_energy = TruncatedEnergy::new(g2, up_flat.bernoulli_of_stream(), Cutoff::new(0.05)?, 0.8)?;
    let vort_energy = TruncatedEnergy::new(g2, up_vort.bernoulli_of_stream(), Cutoff::new(0.05)?, 0.3)?;
    let strip = dirichlet_strip(&vort_energy, 2.0, 4096)?;
    let cauchy = cauchy_strip(&vort_energy.with_lambda(0.8)?, 4096)?;
    let down = downstream_state(&solve_upstream(&g2, &flat, 0.8)?, 0.9)?;
    let nozzle = Nozzle::log(2.0)?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "gas": {
            "enthalpy_g1.4_rho1.2": g14.enthalpy(1.2)?,
            "sound_speed_g1.4_rho2": g14.sound_speed(2.0)?,
            "max_density_g1.4_s2.5": g14.max_density(2.5)?,
            "critical_density_g2_s0.75": g2.critical_density(0.75)?,
            "momentum_f_g2_b1.5_rho1.2": g2.momentum_density_f(1.2, 1.5)?,
            "g_g2_b1.5_t0.864": g2.invert_density_g(0.864, 1.5)?,
        },
        "upstream": {
            "flux_g2_b1.5_rho1": crate::upstream::flux_of_density(&g2, 1.0, &flat)?,
            "flux_g2_b1.5_rho1.2": crate::upstream::flux_of_density(&g2, 1.2, &flat)?,
            "rho_bar_g2_b1.5_q1.85903": up_flat.rho_bar(),
            "height_of_half_flux": up_flat.height_of_stream(0.5 * up_flat.q()).0,
        },
        "truncation": {
            "phi_g2_b1.5_eps0.05_t0.5": flat_energy.Phi(0.5, up_flat.q())?,
            "lambda_eps_g2_b1.5_eps0.05_L0.8": flat_energy.lambda_eps(),
            "g_eps_g2_b1.5_t0.864": flat_energy.g_eps(0.864, 0.5),
        },
        "domain": { "log_nozzle_b_mu_mu1.5": nozzle.inlet_height(1.5)? },
        "strip": {
            "dirichlet_psi_at_0.5": strip.value(0.5),
            "dirichlet_psi_at_1.5": strip.value(1.5),
            "cauchy_edge_height_L0.8": cauchy.height(),
        },
        "asymptotics": {
            "rho_down_g2_b1.5_L0.9": down.rho_down,
            "h_down_g2_b1.5_q0.8_L0.9": down.h_down,
            "lambda_of_rho_e1.2": crate::asymptotics::lambda_of_exit_density(&g2, 1.2, 1.5)?,
        },
    }))
}

/// `oracle`: writes `oracle.json`.
pub fn run_oracle(dir: &Path) -> Result<CommandOutcome> {
    ensure_dir(dir)?;
    let values = oracle_values()?;
    write_json(dir, "oracle.json", &values)?;
    finish(dir, summary("oracle", None, &[], false, None, json!({ "file": "oracle.json" })))
}

/// Invariants of a stored field against the configuration it was solved with.
pub fn check_stored(cfg: &RunConfig, stored: &StoredField) -> Result<Vec<CheckRecord>> {
    let res = cfg.validate()?;
    stored.matches(&res.dom)?;
    let q = stored.q;
    let lambda = stored
        .lambda
        .ok_or_else(|| Error::Parameter("stored field has no lambda in its metadata".into()))?;
    let (_, setup) = prepare(cfg, &res, q)?;
    let energy = setup.energy.with_lambda(lambda)?;
    let bd = boundary_data(&res.dom, q, lambda, cfg.flow.s, cfg.flow.b_prime)?;
    let field = stored.to_discrete();
    let mut checks = field_records(&field_checks(&field, &res.dom, &bd), q, res.dom.h1());
    let dirichlet = (0..res.dom.nodes())
        .filter(|&k| !res.dom.kinds()[k].is_free() && res.dom.kinds()[k] != NodeKind::Exterior)
        .map(|k| (field.values()[k] - bd.values()[k]).abs())
        .fold(0.0, f64::max);
    checks.push(CheckRecord::new(
        "dirichlet_data",
        Severity::Error,
        dirichlet <= 1e-12 * q,
        Some(dirichlet),
        Some(1e-12 * q),
        "boundary nodes carry the data",
    ));
    match extract(&field, &res.dom, q, setup.solve.theta_rel * q) {
        Ok(fb) => checks.push(fb_record(&fb, &res.dom, &bd)),
        Err(e) => checks.push(CheckRecord::new("free_boundary_graph", Severity::Error, false, None, None, e.to_string())),
    }
    let margin = subsonic_margin(&field, &res.dom, &energy, cfg.checks.margin_band);
    checks.push(CheckRecord::new(
        "subsonic_margin",
        Severity::Error,
        margin.subsonic,
        Some(margin.margin),
        Some(-margin.epsilon),
        "",
    ));
    Ok(checks)
}

/// `check`: re-verifies `field_path` without solving.
pub fn run_check(cfg: &RunConfig, field_path: &Path, dir: &Path, strict: bool) -> Result<CommandOutcome> {
    ensure_dir(dir)?;
    let attempt = (|| -> Result<Vec<CheckRecord>> {
        let text = std::fs::read_to_string(field_path).map_err(|e| Error::Io(format!("{}: {e}", field_path.display())))?;
        check_stored(cfg, &parse_field_csv(&text)?)
    })();
    let s = match attempt {
        Ok(checks) => summary("check", Some(cfg), &checks, strict, None, json!({ "field": field_path })),
        Err(e) => summary("check", Some(cfg), &[], strict, Some(&e), Value::Null),
    };
    finish(dir, s)
}
