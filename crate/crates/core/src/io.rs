//! Text formats: Bernoulli and nozzle tables, stored fields and small CSV
//! outputs. Every CSV carries a leading `# schema_version=N` comment.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{NodeKind, Nozzle, TruncatedDomain};
use crate::error::{Error, Result};
use crate::minimizer::DiscreteField;
use crate::upstream::BernoulliProfile;

pub const SCHEMA_VERSION: u32 = 1;

/// Relative tolerance on the uniform spacing of a Bernoulli table.
const SPACING_TOL: f64 = 1e-9;

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn line_of(pos: Option<&csv::Position>) -> usize {
    pos.map(|p| p.line() as usize).unwrap_or(0)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse {
        line: line_of(e.position()),
        msg: e.to_string(),
    }
}

/// Reads the header and numeric rows of a table whose columns must match
/// `columns` (optional trailing columns listed in `optional`).
fn numeric_table(text: &str, columns: &[&str], optional: &[&str]) -> Result<(Vec<String>, Vec<(usize, Vec<f64>)>)> {
    let mut rdr = reader(text);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|s| s.to_string()).collect();
    let n = header.len();
    let ok = n >= columns.len()
        && n <= columns.len() + optional.len()
        && header.iter().zip(columns.iter().chain(optional)).all(|(h, c)| h == c);
    if !ok {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header {:?} (optional {:?}), got {header:?}", columns, optional),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(rec.position());
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("not a finite number: {f:?}"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, row));
    }
    Ok((header, rows))
}

/// `x2,B[,dB]` samples on a uniform grid from `0` to `H̄`.
pub fn parse_bernoulli_table(text: &str) -> Result<BernoulliProfile> {
    let (header, rows) = numeric_table(text, &["x2", "B"], &["dB"])?;
    let lines: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
    if rows.len() < 3 {
        return Err(Error::Parse {
            line: 0,
            msg: "a Bernoulli table needs at least 3 rows".into(),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    if x[0] != 0.0 {
        return Err(Error::Parse {
            line: lines[0],
            msg: format!("the first height must be 0, got {}", x[0]),
        });
    }
    let bar_h = x[x.len() - 1];
    let dx = bar_h / (x.len() - 1) as f64;
    for (k, &xk) in x.iter().enumerate() {
        if !(dx > 0.0) || (xk - k as f64 * dx).abs() > SPACING_TOL * bar_h {
            return Err(Error::Parse {
                line: lines[k],
                msg: format!("heights must be uniformly spaced from 0 to {bar_h}; row {k} has {xk}"),
            });
        }
    }
    let values = rows.iter().map(|r| r[1]).collect();
    if header.len() == 3 {
        BernoulliProfile::with_slopes(bar_h, values, rows.iter().map(|r| r[2]).collect())
    } else {
        BernoulliProfile::from_samples(bar_h, values)
    }
}

pub fn write_bernoulli_table(profile: &BernoulliProfile) -> String {
    let n = profile.intervals();
    let mut out = format!("# schema_version={SCHEMA_VERSION}\nx2,B,dB\n");
    for k in 0..=n {
        let x = profile.bar_h() * k as f64 / n as f64;
        out.push_str(&format!("{x:e},{:e},{:e}\n", profile.value(x), profile.deriv(x)));
    }
    out
}

/// `x2,theta` samples of the wall `x₁ = Θ(x₂)` starting at the mouth `(1, 0)`.
pub fn parse_nozzle_table(text: &str, bar_h: f64) -> Result<Nozzle> {
    let (_, rows) = numeric_table(text, &["x2", "theta"], &[])?;
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
    Nozzle::from_table(bar_h, rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
}

/// Region flag of a stored node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Fluid,
    Plateau,
    Boundary,
    Exterior,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Fluid => "fluid",
            Region::Plateau => "plateau",
            Region::Boundary => "boundary",
            Region::Exterior => "exterior",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fluid" => Region::Fluid,
            "plateau" => Region::Plateau,
            "boundary" => Region::Boundary,
            "exterior" => Region::Exterior,
            _ => return None,
        })
    }

    pub fn of(kind: NodeKind, psi: f64, q: f64) -> Self {
        match kind {
            NodeKind::Exterior => Region::Exterior,
            NodeKind::Interior if psi >= q - 1e-12 * q => Region::Plateau,
            NodeKind::Interior => Region::Fluid,
            _ => Region::Boundary,
        }
    }
}

/// Field as read back from CSV, rows ordered with `x₁` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredField {
    pub n1: usize,
    pub n2: usize,
    pub q: f64,
    /// Free-boundary momentum the field was solved with, when recorded.
    pub lambda: Option<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub psi: Vec<f64>,
    pub grad_sq: Vec<f64>,
    pub region: Vec<Region>,
}

impl StoredField {
    pub fn to_discrete(&self) -> DiscreteField {
        DiscreteField::new(self.psi.clone())
    }

    /// Checks that the stored nodes sit on the grid of `dom`.
    pub fn matches(&self, dom: &TruncatedDomain) -> Result<()> {
        if self.n1 != dom.n1() || self.n2 != dom.n2() {
            return Err(Error::Parameter(format!(
                "stored field is {}x{}, grid is {}x{}",
                self.n1,
                self.n2,
                dom.n1(),
                dom.n2()
            )));
        }
        let tol = 1e-9 * (1.0 + dom.h1().max(dom.h2()));
        for j in 0..=dom.n2() {
            for i in 0..=dom.n1() {
                let k = dom.idx(i, j);
                if (self.x1[k] - dom.x1(i)).abs() > tol || (self.x2[k] - dom.x2(j)).abs() > tol {
                    return Err(Error::Parameter(format!("stored node ({i}, {j}) is off the grid")));
                }
            }
        }
        Ok(())
    }
}

/// Nodal `|∇ψ|²` as the mean over the incident cells.
pub fn nodal_grad_sq(field: &DiscreteField, dom: &TruncatedDomain) -> Vec<f64> {
    let mut sum = vec![0.0; dom.nodes()];
    let mut cnt = vec![0u8; dom.nodes()];
    for cj in 0..dom.n2() {
        for ci in 0..dom.n1() {
            let t = field.cell_t(dom, ci, cj);
            for (i, j) in [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)] {
                let k = dom.idx(i, j);
                sum[k] += t;
                cnt[k] += 1;
            }
        }
    }
    sum.iter().zip(&cnt).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
}

pub fn write_field_csv(w: impl Write, field: &DiscreteField, dom: &TruncatedDomain, q: f64, lambda: Option<f64>) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    write!(w, "# schema_version={SCHEMA_VERSION} n1={} n2={} q={q:e}", dom.n1(), dom.n2())?;
    if let Some(l) = lambda {
        write!(w, " lambda={l:e}")?;
    }
    writeln!(w)?;
    writeln!(w, "x1,x2,psi,grad_sq,region")?;
    let grad = nodal_grad_sq(field, dom);
    for j in 0..=dom.n2() {
        for i in 0..=dom.n1() {
            let k = dom.idx(i, j);
            let psi = field.values()[k];
            let region = Region::of(dom.kind(i, j), psi, q);
            writeln!(w, "{:e},{:e},{:e},{:e},{}", dom.x1(i), dom.x2(j), psi, grad[k], region.as_str())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Meta {
    n1: usize,
    n2: usize,
    q: f64,
    lambda: Option<f64>,
}

fn parse_meta(line: &str) -> Result<Meta> {
    let body = line.strip_prefix('#').ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing '# schema_version=...' metadata line".into(),
    })?;
    let (mut version, mut n1, mut n2, mut q, mut lambda) = (None, None, None, None, None);
    for item in body.split_whitespace() {
        let (key, value) = item.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("malformed metadata item {item:?}"),
        })?;
        let bad = || Error::Parse {
            line: 1,
            msg: format!("bad value for {key}: {value:?}"),
        };
        match key {
            "schema_version" => version = Some(value.parse::<u32>().map_err(|_| bad())?),
            "n1" => n1 = Some(value.parse::<usize>().map_err(|_| bad())?),
            "n2" => n2 = Some(value.parse::<usize>().map_err(|_| bad())?),
            "q" => q = Some(value.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0).ok_or_else(bad)?),
            "lambda" => lambda = Some(value.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0).ok_or_else(bad)?),
            _ => {}
        }
    }
    match (version, n1, n2, q) {
        (Some(SCHEMA_VERSION), Some(n1), Some(n2), Some(q)) if n1 > 0 && n2 > 0 => Ok(Meta { n1, n2, q, lambda }),
        (Some(v), ..) if v != SCHEMA_VERSION => Err(Error::Parse {
            line: 1,
            msg: format!("unsupported schema_version {v}"),
        }),
        _ => Err(Error::Parse {
            line: 1,
            msg: "metadata needs schema_version, n1 >= 1, n2 >= 1 and q > 0".into(),
        }),
    }
}

pub fn parse_field_csv(text: &str) -> Result<StoredField> {
    let first = text.lines().next().unwrap_or("");
    let Meta { n1, n2, q, lambda } = parse_meta(first.trim())?;
    let nodes = (n1 + 1)
        .checked_mul(n2 + 1)
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "grid too large".into(),
        })?;
    let mut rdr = reader(text);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|s| s.to_string()).collect();
    if header != ["x1", "x2", "psi", "grad_sq", "region"] {
        return Err(Error::Parse {
            line: 2,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut out = StoredField {
        n1,
        n2,
        q,
        lambda,
        x1: Vec::with_capacity(nodes),
        x2: Vec::with_capacity(nodes),
        psi: Vec::with_capacity(nodes),
        grad_sq: Vec::with_capacity(nodes),
        region: Vec::with_capacity(nodes),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(rec.position());
        if out.psi.len() == nodes {
            return Err(Error::Parse {
                line,
                msg: format!("more than {nodes} node rows"),
            });
        }
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                line,
                msg: format!("not a finite number: {:?}", &rec[k]),
            })
        };
        out.x1.push(num(0)?);
        out.x2.push(num(1)?);
        out.psi.push(num(2)?);
        out.grad_sq.push(num(3)?);
        out.region.push(Region::parse(&rec[4]).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown region {:?}", &rec[4]),
        })?);
    }
    if out.psi.len() != nodes {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {nodes} node rows, found {}", out.psi.len()),
        });
    }
    Ok(out)
}

/// CSV with a schema comment and numeric rows.
pub fn write_table(w: impl Write, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TruncatedDomain;

    #[test]
    fn bernoulli_table_round_trip() {
        let p = BernoulliProfile::cosine(2.0, 1.5, 0.02, 16).unwrap();
        let back = parse_bernoulli_table(&write_bernoulli_table(&p)).unwrap();
        for k in 0..=40 {
            let x = 2.0 * k as f64 / 40.0;
            assert!((back.value(x) - p.value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn bernoulli_table_rejects_bad_spacing() {
        let text = "x2,B\n0,1.5\n0.5,1.5\n2,1.5\n";
        assert!(matches!(parse_bernoulli_table(text), Err(Error::Parse { line: 3, .. })));
        assert!(parse_bernoulli_table("x2,Bx\n0,1\n1,1\n2,1\n").is_err());
        assert!(parse_bernoulli_table("x2,B\n0,1\n1,nan\n2,1\n").is_err());
    }

    #[test]
    fn nozzle_table_parses() {
        let text = "# wall\nx2,theta\n1,0\n1.5,-0.7\n1.9,-2.3\n";
        let nz = parse_nozzle_table(text, 2.0).unwrap();
        assert!((nz.theta(1.5) + 0.7).abs() < 1e-12);
        assert!(parse_nozzle_table("x2,theta\n1.1,0\n1.5,-1\n", 2.0).is_err());
    }

    #[test]
    fn field_csv_round_trip() {
        let dom = TruncatedDomain::rectangle(0.0, 1.0, 1.0, 4, 3).unwrap();
        let vals: Vec<f64> = (0..dom.nodes()).map(|k| 0.1 * (k % 7) as f64).collect();
        let f = DiscreteField::new(vals.clone());
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f, &dom, 0.6, Some(0.25)).unwrap();
        let s = parse_field_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(s.psi, vals);
        assert_eq!(s.lambda, Some(0.25));
        s.matches(&dom).unwrap();
        assert!(parse_field_csv("# schema_version=2 n1=1 n2=1 q=1\nx1,x2,psi,grad_sq,region\n").is_err());
    }
}
