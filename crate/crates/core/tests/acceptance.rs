//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use subjet::asymptotics::{downstream_state, quasi1d_scan};
use subjet::config::{parse_config, RunConfig};
use subjet::domain::{BoundaryData, TruncatedDomain};
use subjet::freeboundary::TrialRecord;
use subjet::gas::GasModel;
use subjet::minimizer::{solve, InitKind, SolveOptions};
use subjet::pipeline::{critical_scan, fit_and_verify, prepare, CheckRecord, JetRun};
use subjet::strip::{cauchy_strip, dirichlet_strip};
use subjet::truncation::{Cutoff, TruncatedEnergy};
use subjet::upstream::{flux_of_density, flux_window, solve_upstream, BernoulliProfile};

const DEMO: &str = r#"
[gas]
gamma = 2.0

[bernoulli]
kind = "constant"
bar_h = 2.0
value = 1.5

[nozzle]
kind = "log"

[flow]
q = 0.4

[grid]
mu = 1.5
r = 3.0
n1 = 128
n2 = 96
"#;

fn demo(n1: usize, n2: usize) -> RunConfig {
    parse_config(&DEMO.replace("n1 = 128", &format!("n1 = {n1}")).replace("n2 = 96", &format!("n2 = {n2}"))).unwrap()
}

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(o: &Outcome) {
    println!(
        "{} criterion {:>2} {}: {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.detail
    );
}

fn check<'a>(run: &'a JetRun, name: &str) -> &'a CheckRecord {
    run.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("missing check {name}"))
}

fn gas_round_trip() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for gamma in [1.4, 2.0, 3.0] {
        let gas = GasModel::new(gamma).unwrap();
        for b in [1.0, 1.5, 2.5] {
            let (lo, hi) = (gas.critical_density(b).unwrap(), gas.max_density(b).unwrap());
            for k in 1..=100 {
                let rho = lo + (hi - lo) * (k as f64 - 0.5) / 100.0;
                let t = gas.momentum_density_f(rho, b).unwrap();
                let g = gas.invert_density_g(t, b).unwrap();
                worst = worst.max((g * rho - 1.0).abs());
            }
        }
    }
    let el = t0.elapsed();
    Outcome {
        id: 1,
        name: "gas round trip",
        pass: worst <= 1e-10 && el < Duration::from_secs(1),
        detail: format!("max |g·ρ - 1| = {worst:.2e} (limit 1e-10), {el:.2?} (limit 1 s)"),
    }
}

fn truncation_structure() -> Outcome {
    let t0 = Instant::now();
    let gas = GasModel::new(2.0).unwrap();
    let profile = BernoulliProfile::cosine(2.0, 1.5, 0.1, 32).unwrap();
    let up = solve_upstream(&gas, &profile, 1.2).unwrap();
    let bern = up.bernoulli_of_stream();
    let eps = 0.05 * gas.critical_momentum_sq(bern.b_min()).unwrap();
    let e = TruncatedEnergy::new(gas, bern.clone(), Cutoff::new(eps).unwrap(), 0.5).unwrap();
    let (c_lo, c_hi) = (e.g_lower(), e.g_upper());
    let t_star = e.t_crit_sup();
    let q = e.q();
    let mut rng = StdRng::seed_from_u64(7);
    let (mut bounds, mut deriv, mut ellip, mut dz_zero) = (true, true, true, true);
    let mut dz_ratio: f64 = 0.0;
    for _ in 0..10_000 {
        let t = rng.random_range(0.0..1.5 * t_star);
        let z = rng.random_range(0.0..q);
        let p = e.eval(t, z);
        bounds &= p.g >= c_lo * (1.0 - 1e-12) && p.g <= c_hi * (1.0 + 1e-12);
        deriv &= p.g_t >= 0.0 && p.g_t <= c_hi / eps * (1.0 + 1e-12);
        ellip &= p.g + 2.0 * p.g_t * t >= c_lo * (1.0 - 1e-12);
        let gz = e.g_dz(t, z);
        if t > t_star {
            dz_zero &= gz == 0.0;
        } else if p.g_t > 0.0 && bern.deriv(z) != 0.0 {
            dz_ratio = dz_ratio.max(gz.abs() / (p.g_t * bern.deriv(z).abs()));
        }
    }
    // ∂_t G_ε = g_ε/2 by central differences at 20 points
    let mut fd: f64 = 0.0;
    for k in 0..20 {
        let t = 0.05 + (t_star - 0.1) * k as f64 / 19.0;
        let z = q * (k as f64 + 0.5) / 20.0;
        let d = 1e-5;
        let num = (e.G_energy(t + d, z).unwrap() - e.G_energy(t - d, z).unwrap()) / (2.0 * d);
        fd = fd.max((num - 0.5 * e.g_eps(t, z)).abs());
    }
    let el = t0.elapsed();
    Outcome {
        id: 2,
        name: "truncation structure",
        pass: bounds && deriv && ellip && dz_zero && dz_ratio.is_finite() && fd <= 1e-6 && el < Duration::from_secs(10),
        detail: format!(
            "bounds {bounds}, 0 ≤ ∂_t g ≤ g*/ε {deriv}, ellipticity {ellip}, ∂_z g = 0 beyond 𝒯* {dz_zero}, \
             |∂_z g|/(∂_t g|𝓑'|) ≤ {dz_ratio:.3}, |∂_t G - g/2| = {fd:.1e} (limit 1e-6), {el:.2?}"
        ),
    }
}

fn upstream_inversion() -> Outcome {
    let t0 = Instant::now();
    let gas = GasModel::new(2.0).unwrap();
    let vort = BernoulliProfile::cosine(2.0, 1.5, 0.1, 32).unwrap();
    let w = flux_window(&gas, &vort).unwrap();
    let (lo, hi) = (gas.critical_density(vort.b_max()).unwrap(), gas.max_density(vort.b_min()).unwrap());
    let fluxes: Vec<f64> = (0..50)
        .map(|k| flux_of_density(&gas, lo + (hi - lo) * (k as f64 + 0.5) / 50.0, &vort).unwrap())
        .collect();
    let decreasing = fluxes.windows(2).all(|p| p[1] < p[0]);
    let mut round: f64 = 0.0;
    for k in 1..10 {
        let q = w.lower() + (w.q_upper - w.lower()) * k as f64 / 10.0;
        let st = solve_upstream(&gas, &vort, q).unwrap();
        round = round.max((flux_of_density(&gas, st.rho_bar(), &vort).unwrap() - q).abs() / q);
    }
    // constant B: Q = ρ̄ H̄ √(2(B - ρ̄)) for γ = 2
    let flat = BernoulliProfile::constant(2.0, 1.5, 16).unwrap();
    let mut closed: f64 = 0.0;
    for rho in [1.0, 1.1, 1.2, 1.3, 1.4] {
        closed = closed.max((flux_of_density(&gas, rho, &flat).unwrap() - rho * 2.0 * (2.0 * (1.5 - rho)).sqrt()).abs());
    }
    let el = t0.elapsed();
    Outcome {
        id: 3,
        name: "upstream inversion",
        pass: decreasing && round <= 1e-9 && closed <= 1e-12 && el < Duration::from_secs(1),
        detail: format!(
            "decreasing {decreasing}, round trip {round:.1e} (limit 1e-9), closed form {closed:.1e} (limit 1e-12), {el:.2?}"
        ),
    }
}

fn strip_oracle() -> Outcome {
    let t0 = Instant::now();
    let gas = GasModel::new(2.0).unwrap();
    let profile = BernoulliProfile::cosine(2.0, 1.5, 0.1, 32).unwrap();
    let q = 1.2;
    let up = solve_upstream(&gas, &profile, q).unwrap();
    let e = TruncatedEnergy::new(gas, up.bernoulli_of_stream(), Cutoff::new(0.05).unwrap(), 0.3).unwrap();
    let opts = SolveOptions {
        tol: Some(1e-13),
        max_sweeps: 100_000,
        ..Default::default()
    };
    let err = |prof: &subjet::strip::StripProfile, e: &TruncatedEnergy, n: usize| {
        let dom = TruncatedDomain::rectangle(0.0, 1.0, 2.0, n, n).unwrap();
        let bd = BoundaryData::from_fn(&dom, q, |_, x2| prof.value(x2));
        let out = solve(e, &dom, &bd, &opts, None).unwrap();
        let mut m: f64 = 0.0;
        for j in 0..=n {
            for i in 0..=n {
                m = m.max((out.field.at(&dom, i, j) - prof.value(dom.x2(j))).abs());
            }
        }
        (m, dom.h2())
    };
    let dir = dirichlet_strip(&e, 2.0, 4096).unwrap();
    let (e64, _) = err(&dir, &e, 64);
    let (e128, _) = err(&dir, &e, 128);
    let e_fb = e.with_lambda(0.8).unwrap();
    let cau = cauchy_strip(&e_fb, 4096).unwrap();
    let (c64, h) = err(&cau, &e_fb, 64);
    let el = t0.elapsed();
    Outcome {
        id: 4,
        name: "1D oracle equivalence",
        pass: e64 <= 1e-5 && e64 / e128 >= 3.0 && c64 <= 0.8 * h && el < Duration::from_secs(120),
        detail: format!(
            "Dirichlet strip sup error {e64:.2e} at 64x64 (limit 1e-5), ratio {:.2} under h/2 (limit 3); \
             plateau-edge strip {c64:.2e} ≤ Λh = {:.2e}; {el:.2?}",
            e64 / e128,
            0.8 * h
        ),
    }
}

fn invariants(run: &JetRun, elapsed: Duration) -> Outcome {
    let names = [
        "bounds",
        "energy_monotone",
        "monotone_x1",
        "free_boundary_graph",
        "boundary_ordering",
        "mass_flux_sections",
        "u2_nonpositive",
    ];
    let failed: Vec<&str> = names.iter().copied().filter(|n| !check(run, n).passed).collect();
    let flux = check(run, "mass_flux_sections").value.unwrap_or(f64::NAN);
    Outcome {
        id: 5,
        name: "invariant suite (128x96)",
        pass: failed.is_empty() && elapsed < Duration::from_secs(600),
        detail: format!(
            "failed {failed:?}; section flux deviation {:.2}% (limit 5%), min ∂₁ψ {:.1e}, max u₂ {:.1e}; fit {elapsed:.1?}",
            100.0 * flux,
            run.field.min_dx1,
            check(run, "u2_nonpositive").value.unwrap_or(f64::NAN)
        ),
    }
}

/// Connected interval of `{Λ : |Υ_Λ(1)| ≤ tol}` containing `lambda`, with
/// `Υ_Λ(1)` interpolated linearly between the recorded trials.
fn admissible_interval(history: &[TrialRecord], lambda: f64, tol: f64) -> (f64, f64) {
    let mut pts: Vec<(f64, f64)> = history.iter().filter(|t| t.fitgap.is_finite()).map(|t| (t.lambda, t.fitgap)).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.dedup_by(|a, b| a.0 == b.0);
    let k = pts.iter().position(|p| p.0 == lambda).expect("fitted trial in history");
    // crossing of |gap| = tol between an admissible and an inadmissible trial
    let edge = |a: (f64, f64), b: (f64, f64)| {
        let level = if b.1 > 0.0 { tol } else { -tol };
        a.0 + (b.0 - a.0) * (level - a.1) / (b.1 - a.1)
    };
    let mut lo = k;
    while lo > 0 && pts[lo - 1].1.abs() <= tol {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < pts.len() && pts[hi + 1].1.abs() <= tol {
        hi += 1;
    }
    let left = if lo > 0 { edge(pts[lo], pts[lo - 1]) } else { pts[lo].0 };
    let right = if hi + 1 < pts.len() { edge(pts[hi], pts[hi + 1]) } else { pts[hi].0 };
    (left, right)
}

fn continuous_fit(run: &JetRun, rerun: &JetRun, elapsed: Duration) -> Outcome {
    let h = run.setup.dom.h1().max(run.setup.dom.h2());
    let q = run.setup.q();
    let l = run.lambda();
    let gap = run.shooting.best.fitgap();
    let all: Vec<TrialRecord> = run.shooting.history.iter().chain(&rerun.shooting.history).cloned().collect();
    let (left, right) = admissible_interval(&all, l, run.shooting.fit_tol);
    let spread = right - left;
    let diff = (l - rerun.lambda()).abs();
    let agree = (left..=right).contains(&rerun.lambda());
    let trials: Vec<String> = {
        let mut v: Vec<&TrialRecord> = all.iter().collect();
        v.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        v.iter().map(|t| format!("{:.4}:{:+.4}", t.lambda, t.fitgap)).collect()
    };
    let solves = run.shooting.history.len().max(rerun.shooting.history.len());
    Outcome {
        id: 6,
        name: "continuous fit",
        pass: gap.abs() <= 2.0 * h && (q / 10.0..=10.0 * q).contains(&l) && agree && solves <= 20 && elapsed < Duration::from_secs(1800),
        detail: format!(
            "|Υ(1)| = {:.4} ≤ 2h = {:.4}, Λ_fit = {l:.5} (Q = {q}), perturbed start gives {:.5}: |ΔΛ| = {diff:.2e} within admissible [{left:.4}, {right:.4}] \
             (spread {spread:.2e}): {agree}; {} and {} solves; trials {trials:?}; {elapsed:.1?}",
            gap.abs(),
            2.0 * h,
            rerun.lambda(),
            run.shooting.history.len(),
            rerun.shooting.history.len()
        ),
    }
}

fn jump(coarse: &JetRun, fine: &JetRun) -> Outcome {
    let (a, b) = (coarse.jump.mean_rel, fine.jump.mean_rel);
    Outcome {
        id: 7,
        name: "jump condition",
        pass: a <= 0.10 && b < a,
        detail: format!(
            "mean ||∇ψ| - Λ|/Λ = {:.2}% at 64x48 ({} rows), {:.2}% at 128x96 ({} rows); limit 10% and decreasing",
            100.0 * a,
            coarse.jump.samples,
            100.0 * b,
            fine.jump.samples
        ),
    }
}

fn downstream(run: &JetRun) -> Outcome {
    let h = run.setup.dom.h1().max(run.setup.dom.h2());
    let d = run.down.as_ref().expect("downstream state");
    let gap = run.plateau.map_or(f64::INFINITY, |p| (p - d.h_down).abs());
    // trivial case: matching momenta
    let gas = GasModel::new(2.0).unwrap();
    let flat = BernoulliProfile::constant(2.0, 1.5, 16).unwrap();
    let up = solve_upstream(&gas, &flat, 0.8).unwrap();
    let trivial = downstream_state(&up, up.rho_bar() * up.u_bar(2.0)).unwrap();
    let t_err = (trivial.h_down - 2.0).abs();
    Outcome {
        id: 8,
        name: "downstream consistency",
        pass: gap <= 2.0 * h && t_err <= 1e-9,
        detail: format!(
            "plateau height {:.4} vs H̲ = {:.4}: gap {gap:.4} ≤ 2h = {:.4}; Λ = ρ̄ū gives |H̲ - H̄| = {t_err:.1e} (limit 1e-9)",
            run.plateau.unwrap_or(f64::NAN),
            d.h_down,
            2.0 * h
        ),
    }
}

fn uniqueness(lambda: f64) -> Outcome {
    let cfg = demo(64, 64);
    let res = cfg.validate().unwrap();
    let (_, setup) = prepare(&cfg, &res, 0.4).unwrap();
    let a = setup.trial(lambda, None).unwrap();
    let mut other = setup.clone();
    other.solve.init = InitKind::OutletExtension;
    let b = other.trial(lambda, None).unwrap();
    let diff = a.field().max_abs_diff(b.field());
    Outcome {
        id: 9,
        name: "uniqueness surrogate (64x64)",
        pass: diff <= 1e-6 && a.outcome.converged() && b.outcome.converged(),
        detail: format!("blend vs outlet-extension start at Λ = {lambda:.5}: sup difference {diff:.2e} (limit 1e-6)"),
    }
}

fn critical_flux() -> Outcome {
    let t0 = Instant::now();
    let gas = GasModel::new(2.0).unwrap();
    let vort = BernoulliProfile::cosine(2.0, 1.5, 0.1, 32).unwrap();
    let sur = quasi1d_scan(&gas, &vort, 6).unwrap();
    let t_sur = t0.elapsed();
    let mono = sur.windows(2).all(|w| w[1].margin > w[0].margin);
    let last = sur.last().unwrap().margin;

    let cfg = parse_config(
        &DEMO
            .replace("q = 0.4", "q_scan = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]")
            .replace("n1 = 128", "n1 = 32")
            .replace("n2 = 96", "n2 = 24"),
    )
    .unwrap();
    let res = cfg.validate().unwrap();
    let report = critical_scan(&cfg, &res, 1);
    let first = &report.items[0];
    let near_lower = first.margin.is_some_and(|m| m <= -report.epsilon);
    let margins: Vec<String> = report
        .items
        .iter()
        .map(|i| format!("{}:{}", i.q, i.margin.map_or("-".into(), |m| format!("{m:.3}"))))
        .collect();
    let trend = report
        .items
        .windows(2)
        .all(|w| matches!((w[0].margin, w[1].margin), (Some(a), Some(b)) if b > a));
    let qc_ok = report.q_c_estimate.map_or(true, |q| q <= report.q_upper);
    Outcome {
        id: 10,
        name: "critical-flux scan",
        pass: mono && last.abs() <= 1e-12 && t_sur < Duration::from_secs(1) && near_lower && qc_ok && t0.elapsed() < Duration::from_secs(7200),
        detail: format!(
            "surrogate increasing {mono} with margin {last:.1e} at Q^* ({t_sur:.2?}); 2D 𝔐 at Q = {} is ≤ -ε = {:.3}: {near_lower}; \
             2D margins {margins:?} increasing {trend}; Q_c estimate {:?} ≤ Q^* = {}",
            first.q, -report.epsilon, report.q_c_estimate, report.q_upper
        ),
    }
}

fn main() {
    let mut out = Vec::new();
    for f in [gas_round_trip, truncation_structure, upstream_inversion, strip_oracle] {
        let o = f();
        line(&o);
        out.push(o);
    }

    let coarse_cfg = demo(64, 48);
    let coarse = fit_and_verify(&coarse_cfg, &coarse_cfg.validate().unwrap(), 0.4).expect("64x48 fit");
    let fine_cfg = demo(128, 96);
    let fine_res = fine_cfg.validate().unwrap();
    let t0 = Instant::now();
    let fine = fit_and_verify(&fine_cfg, &fine_res, 0.4).expect("128x96 fit");
    let t_fine = t0.elapsed();
    let o = invariants(&fine, t_fine);
    line(&o);
    out.push(o);

    let mut perturbed_cfg = fine_cfg.clone();
    perturbed_cfg.fit.lambda0 = Some(0.3);
    let t1 = Instant::now();
    let perturbed = fit_and_verify(&perturbed_cfg, &fine_res, 0.4).expect("perturbed fit");
    let o = continuous_fit(&fine, &perturbed, t_fine + t1.elapsed());
    line(&o);
    out.push(o);

    for o in [jump(&coarse, &fine), downstream(&fine), uniqueness(coarse.lambda()), critical_flux()] {
        line(&o);
        out.push(o);
    }

    let failed: Vec<usize> = out.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("acceptance: {} of {} criteria pass", out.len() - failed.len(), out.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
