//! CSV and SVG emission.
//!
//! Floats are written as `{:.15e}` so identical inputs give identical bytes.
//! Column headers carry units in brackets: `[1]` dimensionless, `[rad]`,
//! `[len]` position units (the width `sigma` is in the same units) and
//! `[1/len]` momentum units.

use std::fmt::Write as _;
use std::io;

use crate::relative_residual;

use super::audit::AuditRecord;
use super::{Output, Row, SweepTable};

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Field {
    pub fn render(&self) -> String {
        match self {
            Field::Num(v) => format_float(*v),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => s.clone(),
            Field::Missing => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Num(v) => Some(*v),
            Field::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.15e}")
    } else {
        v.to_string()
    }
}

pub struct Column {
    pub header: &'static str,
    pub get: fn(&Row) -> Field,
}

fn num(v: Option<f64>) -> Field {
    v.map_or(Field::Missing, Field::Num)
}

macro_rules! col {
    ($header:literal, $get:expr) => {
        Column {
            header: $header,
            get: $get,
        }
    };
}

/// Columns for a table requesting `outputs`, in CSV order.
pub fn columns(outputs: &[Output]) -> Vec<Column> {
    let has = |o| outputs.contains(&o);
    let mut cols = vec![
        col!("series", |r| Field::Text(r.series.clone())),
        col!("index", |r| Field::Int(r.index as u64)),
        col!("phi[rad]", |r| num(r.point.map(|p| p.sel.phi()))),
        col!("delta[rad]", |r| num(r.point.map(|p| p.sel.delta()))),
        col!("r[1]", |r| num(r.point.map(|p| p.pointer.r()))),
        col!("theta[rad]", |r| num(r.point.map(|p| p.pointer.theta()))),
        col!("sigma[len]", |r| num(r.point.map(|p| p.pointer.sigma()))),
        col!("Gamma[1]", |r| num(r.point.map(|p| p.coupling.strength()))),
        col!("g[len]", |r| num(r.point.map(|p| p.coupling.g(&p.pointer)))),
        col!("N[1]", |r| r
            .point
            .map_or(Field::Missing, |p| Field::Int(p.n_trials))),
    ];
    if has(Output::Dx) {
        cols.extend([
            col!("dx[len]", |r| num(r.shifts.map(|s| s.analytic.dx))),
            col!("dx_over_g[1]", |r| {
                num(r.shifts.zip(r.point).and_then(|(s, p)| {
                    let g = p.coupling.g(&p.pointer);
                    (g > 0.0).then(|| s.analytic.dx / g)
                }))
            }),
            col!("dx_oracle[len]", |r| num(r.shifts.map(|s| s.oracle_dx))),
            col!("dx_residual[1]", |r| num(r
                .shifts
                .map(|s| relative_residual(s.analytic.dx, s.oracle_dx)))),
        ]);
    }
    if has(Output::Dp) {
        cols.extend([
            col!("dp[1/len]", |r| num(r.shifts.map(|s| s.analytic.dp))),
            col!("dp_oracle[1/len]", |r| num(r.shifts.map(|s| s.oracle_dp))),
            col!("dp_residual[1]", |r| num(r
                .shifts
                .map(|s| relative_residual(s.analytic.dp, s.oracle_dp)))),
        ]);
    }
    if has(Output::Transition) {
        cols.extend([
            col!("transition.re[1]", |r| num(r
                .shifts
                .map(|s| s.analytic.transition_value.re))),
            col!("transition.im[1]", |r| num(r
                .shifts
                .map(|s| s.analytic.transition_value.im))),
            col!("transition_oracle.re[1]", |r| num(r
                .shifts
                .map(|s| s.oracle_transition.re))),
            col!("transition_oracle.im[1]", |r| num(r
                .shifts
                .map(|s| s.oracle_transition.im))),
            col!("transition_residual[1]", |r| {
                num(r.shifts.map(|s| {
                    let (a, b) = (s.analytic.transition_value, s.oracle_transition);
                    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
                }))
            }),
            col!("beta_inv_sq[1]", |r| num(r
                .shifts
                .map(|s| s.analytic.beta_sq_inv))),
            col!("beta_inv_sq_oracle[1]", |r| num(r
                .shifts
                .map(|s| s.oracle_beta_inv_sq))),
            col!("beta_inv_sq_residual[1]", |r| {
                num(r
                    .shifts
                    .map(|s| relative_residual(s.analytic.beta_sq_inv, s.oracle_beta_inv_sq)))
            }),
        ]);
    }
    if has(Output::Chi) {
        cols.extend([
            col!("chi[1]", |r| num(r.snr.map(|s| s.chi))),
            col!("R_p[1]", |r| num(r.snr.map(|s| s.r_p))),
            col!("R_n[1]", |r| num(r.snr.map(|s| s.r_n))),
            col!("P_s[1]", |r| num(r.snr.map(|s| s.p_s))),
        ]);
    }
    if has(Output::Qfi) {
        cols.extend([
            col!("F[1]", |r| num(r.fisher.map(|f| f.f))),
            col!("F_fidelity[1]", |r| num(r.fisher.map(|f| f.f_fidelity))),
            col!("F_Q[1]", |r| num(r.fisher.map(|f| f.f_q))),
        ]);
    }
    if has(Output::Crb) {
        cols.push(col!("crb[1]", |r| num(r.fisher.map(|f| f.crb))));
    }
    cols.extend([
        col!("n_max[1]", |r| r
            .n_max
            .map_or(Field::Missing, |n| Field::Int(n as u64))),
        col!("tail_mass[1]", |r| num(r.tail_mass)),
        col!("status", |r| Field::Text(r.status())),
    ]);
    cols
}

pub fn write_csv<W: io::Write>(table: &SweepTable, out: W) -> csv::Result<()> {
    let cols = columns(&table.outputs);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(cols.iter().map(|c| c.header))?;
    for row in &table.rows {
        w.write_record(cols.iter().map(|c| (c.get)(row).render()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_audit_csv<W: io::Write>(records: &[AuditRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "quantity",
        "phi[rad]",
        "delta[rad]",
        "r[1]",
        "theta[rad]",
        "sigma[len]",
        "Gamma[1]",
        "printed",
        "first_principles",
        "oracle",
        "discrepancy",
        "engine_residual",
    ])?;
    for rec in records {
        let p = &rec.point;
        let mut fields = vec![rec.quantity.to_owned()];
        fields.extend(
            [
                p.sel.phi(),
                p.sel.delta(),
                p.pointer.r(),
                p.pointer.theta(),
                p.pointer.sigma(),
                p.coupling.strength(),
                rec.printed,
                rec.first_principles,
                rec.oracle,
                rec.discrepancy,
                rec.engine_residual,
            ]
            .map(format_float),
        );
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// One named curve of `(x, y)` points.
pub type Series = (String, Vec<(f64, f64)>);

/// `(series, points)` for plotting column `y` against the sweep axis; rows
/// without a value are skipped.
pub fn series_for(table: &SweepTable, y: &str) -> Option<Vec<Series>> {
    let col = columns(&table.outputs)
        .into_iter()
        .find(|c| c.header == y || c.header.starts_with(&format!("{y}[")))?;
    let mut out: Vec<Series> = Vec::new();
    for row in &table.rows {
        if out.last().map_or(true, |(s, _)| *s != row.series) {
            out.push((row.series.clone(), Vec::new()));
        }
        if let Some(v) = (col.get)(row).as_f64().filter(|v| v.is_finite()) {
            out.last_mut()
                .expect("pushed above")
                .1
                .push((row.axis_value, v));
        }
    }
    Some(out)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Minimal line plot: framed axes, min/max tick labels, one polyline per series.
pub fn svg_line_plot(series: &[Series], x_label: &str, y_label: &str) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(s, r#"<text x="{m}" y="{}">{x0:.3}</text>"#, h - m + 16.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{x1:.3}</text>"#,
        w - m,
        h - m + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#,
        m - 4.0,
        h - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#,
        m - 4.0,
        m + 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (k, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = m + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            w - m - 6.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
