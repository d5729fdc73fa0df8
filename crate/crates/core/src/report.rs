//! Tabular reports: sweep summaries, V(λ) listings, pooling contributions
//! and plot series. Every table renders both as aligned text and as
//! tab-separated values from the same cell strings.

use crate::dataio::ReferenceFrontier;
use crate::frontier::{MpeStats, ObjectivePoint, PoolResult, VLambdaSet};

const NA: &str = "NA";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| -> String {
            let s: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
            s.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        out.push_str(&line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

fn pe(v: f64) -> String {
    format!("{v:.4}")
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        "inf".into()
    }
}

/// One row per algorithm of a sweep on one dataset.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub dataset: String,
    pub algorithm: String,
    pub vlambda: VLambdaSet,
    pub mpe: Option<MpeStats>,
    pub igd: Option<f64>,
}

/// Coverage, percentage-deviation statistics and IGD per algorithm.
pub fn sweep_summary(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&["dataset", "algorithm", "solutions", "mean_pe", "median_pe", "min_pe", "max_pe", "igd"]);
    for r in rows {
        let steps = r.vlambda.grid.len();
        let found = steps - r.vlambda.missing();
        let stats = match &r.mpe {
            Some(m) => vec![pe(m.mean), pe(m.median), pe(m.min), pe(m.max)],
            None => vec![NA.into(); 4],
        };
        let mut row = vec![r.dataset.clone(), r.algorithm.clone(), format!("{found}/{steps}")];
        row.extend(stats);
        row.push(r.igd.map_or(NA.into(), sci));
        t.push(row);
    }
    t
}

/// The V(λ) entries of one algorithm, one row per grid step.
pub fn vlambda_table(algorithm: &str, v: &VLambdaSet) -> Table {
    let mut t = Table::new(&["lambda", "algorithm", "risk", "return"]);
    for (lambda, e) in v.iter() {
        let (risk, ret) = match e {
            Some(p) => (format!("{}", p.risk), format!("{}", p.ret)),
            None => (NA.into(), NA.into()),
        };
        let alg = e.map_or(algorithm.to_string(), |p| {
            if p.provenance.algorithm.is_empty() {
                algorithm.to_string()
            } else {
                p.provenance.algorithm.clone()
            }
        });
        t.push(vec![format!("{lambda}"), alg, risk, ret]);
    }
    t
}

/// Per-algorithm contributions to a pooled V(λ), with leave-one-out IGD
/// improvements when available.
pub fn pool_table(pool: &PoolResult, igd_improvement: Option<&[(String, f64)]>) -> Table {
    let mut t = Table::new(&["algorithm", "contributions", "ties", "igd_improvement_pct"]);
    for c in &pool.contributions {
        let pct = igd_improvement
            .and_then(|v| v.iter().find(|(a, _)| *a == c.algorithm))
            .map_or(NA.into(), |(_, p)| if p.is_finite() { format!("{p:.4}") } else { "inf".into() });
        t.push(vec![c.algorithm.clone(), pool.fraction(c), c.ties.to_string(), pct]);
    }
    t
}

/// Point series for frontier plots: one row per point, the reference
/// frontier under the series name `UEF`.
pub fn plot_data(series: &[(String, Vec<ObjectivePoint>)], uef: Option<&ReferenceFrontier>) -> Table {
    let mut t = Table::new(&["series", "risk", "return"]);
    if let Some(u) = uef {
        for &(ret, var) in u.sorted_by_variance() {
            t.push(vec!["UEF".into(), format!("{var}"), format!("{ret}")]);
        }
    }
    for (name, pts) in series {
        let mut pts = pts.clone();
        pts.sort_by(|a, b| a.risk.total_cmp(&b.risk).then(a.ret.total_cmp(&b.ret)));
        for p in pts {
            t.push(vec![name.clone(), format!("{}", p.risk), format!("{}", p.ret)]);
        }
    }
    t
}
