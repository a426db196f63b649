//! Physical flow fields recovered from a subsonic stream function.

use serde::{Deserialize, Serialize};

use crate::asymptotics::MarginReport;
use crate::domain::{NodeKind, TruncatedDomain};
use crate::error::{Error, Result};
use crate::minimizer::DiscreteField;
use crate::truncation::TruncatedEnergy;
use crate::upstream::UpstreamState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCell {
    pub ci: usize,
    pub cj: usize,
    pub x1: f64,
    pub x2: f64,
    pub rho: f64,
    pub u1: f64,
    pub u2: f64,
    pub mach: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    /// Fluid cells outside the inlet and outlet bands.
    pub cells: Vec<FlowCell>,
    pub band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionFlux {
    pub x1: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowChecks {
    pub max_mach: f64,
    pub max_u2: f64,
    pub sections: Vec<SectionFlux>,
    /// `max |∫ρu₁ - Q| / Q` over the sections.
    pub flux_rel_dev: f64,
    /// Largest nodal `|div(ρu)|` over nodes surrounded by fluid cells.
    pub max_divergence: f64,
    /// `max |(ρ, u₁) - (ρ̄, ū)|` relative, over fluid cells of the first column
    /// inside the band.
    pub inlet_rel_dev: f64,
}

fn fluid_cell(field: &DiscreteField, dom: &TruncatedDomain, ci: usize, cj: usize, cut: f64) -> bool {
    let corners = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)];
    corners.iter().all(|&(i, j)| dom.kind(i, j) != NodeKind::Exterior)
        && corners.iter().any(|&(i, j)| field.at(dom, i, j) < cut)
}

/// Cell-centred `(ρ, u)` from `∇ψ = (-ρu₂, ρu₁)` with the untruncated
/// density. Refuses unless the margin certifies the truncation is inactive.
pub fn derive_flow(
    field: &DiscreteField,
    dom: &TruncatedDomain,
    energy: &TruncatedEnergy,
    margin: &MarginReport,
    band: f64,
) -> Result<FlowField> {
    if !margin.subsonic {
        return Err(Error::Refused(format!(
            "subsonic margin {:.3e} is above -ε = {:.3e}; flow fields would reflect the truncation",
            margin.margin, -margin.epsilon
        )));
    }
    let gas = energy.gas();
    let bern = energy.bern();
    let q = energy.q();
    let cut = q - 1e-12 * q;
    let (x_in, x_out) = (dom.x1(0), dom.x1(dom.n1()));
    let mut cells = Vec::new();
    for cj in 0..dom.n2() {
        for ci in 0..dom.n1() {
            let xc = 0.5 * (dom.x1(ci) + dom.x1(ci + 1));
            if xc - x_in < band || x_out - xc < band || !fluid_cell(field, dom, ci, cj, cut) {
                continue;
            }
            let (d1, d2) = field.cell_gradient(dom, ci, cj);
            let b = bern.value(field.cell_z(dom, ci, cj));
            let rho = gas.invert_branch(field.cell_t(dom, ci, cj), b)?.rho;
            let (u1, u2) = (d2 / rho, -d1 / rho);
            let mach = gas.mach(rho, u1.hypot(u2))?;
            cells.push(FlowCell {
                ci,
                cj,
                x1: xc,
                x2: 0.5 * (dom.x2(cj) + dom.x2(cj + 1)),
                rho,
                u1,
                u2,
                mach,
            });
        }
    }
    Ok(FlowField { cells, band })
}

impl FlowField {
    /// Mach, sign, flux, divergence and upstream checks. Fluxes are taken on
    /// `sections` cell columns evenly spread over the banded region.
    pub fn checks(&self, dom: &TruncatedDomain, up: &UpstreamState, sections: usize) -> FlowChecks {
        let q = up.q();
        let mut grid = vec![None; dom.n1() * dom.n2()];
        for c in &self.cells {
            grid[c.cj * dom.n1() + c.ci] = Some(*c);
        }
        let at = |ci: usize, cj: usize| grid[cj * dom.n1() + ci];
        let cols: Vec<usize> = {
            let mut v: Vec<usize> = self.cells.iter().map(|c| c.ci).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let max_mach = self.cells.iter().map(|c| c.mach).fold(f64::NEG_INFINITY, f64::max);
        let max_u2 = self.cells.iter().map(|c| c.u2).fold(f64::NEG_INFINITY, f64::max);

        let mut out_sections = Vec::new();
        if let (Some(&first), Some(&last)) = (cols.first(), cols.last()) {
            let n = sections.max(1);
            for s in 0..n {
                let ci = if n == 1 { (first + last) / 2 } else { first + (last - first) * s / (n - 1) };
                let flux: f64 = (0..dom.n2())
                    .filter_map(|cj| at(ci, cj))
                    .map(|c| c.rho * c.u1 * dom.h2())
                    .sum();
                out_sections.push(SectionFlux {
                    x1: 0.5 * (dom.x1(ci) + dom.x1(ci + 1)),
                    flux,
                });
            }
        }
        let flux_rel_dev = out_sections
            .iter()
            .map(|s| (s.flux - q).abs() / q)
            .fold(0.0, f64::max);

        let mut max_divergence: f64 = 0.0;
        for j in 1..dom.n2() {
            for i in 1..dom.n1() {
                let (Some(a), Some(b), Some(c), Some(d)) = (at(i - 1, j - 1), at(i, j - 1), at(i - 1, j), at(i, j)) else {
                    continue;
                };
                let m1 = |c: FlowCell| c.rho * c.u1;
                let m2 = |c: FlowCell| c.rho * c.u2;
                let div = 0.5 * (m1(b) + m1(d) - m1(a) - m1(c)) / dom.h1() + 0.5 * (m2(c) + m2(d) - m2(a) - m2(b)) / dom.h2();
                max_divergence = max_divergence.max(div.abs());
            }
        }

        let mut inlet_rel_dev: f64 = 0.0;
        if let Some(&ci) = cols.first() {
            for c in (0..dom.n2()).filter_map(|cj| at(ci, cj)) {
                let ub = up.u_bar(c.x2);
                let dev = ((c.rho - up.rho_bar()) / up.rho_bar()).abs().max(((c.u1 - ub) / ub).abs());
                inlet_rel_dev = inlet_rel_dev.max(dev);
            }
        }
        FlowChecks {
            max_mach,
            max_u2,
            sections: out_sections,
            flux_rel_dev,
            max_divergence,
            inlet_rel_dev,
        }
    }
}
