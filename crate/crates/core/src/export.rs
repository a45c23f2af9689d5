//! Breakpoint tables for plotting. Exact values are kept as `p/q`; the
//! decimal columns are approximations to 12 significant digits.

use serde::Serialize;

use crate::decomposition::{subflow_functions, subflow_source_distribution, Decomposition};
use crate::engine::{
    inflow_functions, outflow_functions, source_distribution, NashFlowProfile, PiecewiseConstant,
    PiecewiseLinear,
};
use crate::rational::Rat;

pub const DECIMAL_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Particle,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Value of a piecewise-linear function at a breakpoint.
    Point,
    /// Slope of a piecewise-linear function after its last breakpoint.
    FinalSlope,
    /// Value of a piecewise-constant rate from this point on.
    Rate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExportRow {
    /// Set on subflow rows only.
    pub sink: Option<usize>,
    pub function: String,
    pub axis: Axis,
    pub kind: RowKind,
    pub x: Rat,
    pub value: Rat,
    pub x_approx: String,
    pub value_approx: String,
}

impl ExportRow {
    fn new(function: &str, axis: Axis, kind: RowKind, x: &Rat, value: &Rat) -> Self {
        ExportRow {
            sink: None,
            function: function.to_string(),
            axis,
            kind,
            x_approx: x.to_decimal(DECIMAL_DIGITS),
            value_approx: value.to_decimal(DECIMAL_DIGITS),
            x: x.clone(),
            value: value.clone(),
        }
    }
}

fn linear_rows(out: &mut Vec<ExportRow>, name: &str, axis: Axis, f: &PiecewiseLinear) {
    for (x, y) in &f.breakpoints {
        out.push(ExportRow::new(name, axis, RowKind::Point, x, y));
    }
    let (x, _) = f.breakpoints.last().expect("nonempty");
    out.push(ExportRow::new(
        name,
        axis,
        RowKind::FinalSlope,
        x,
        &f.final_slope,
    ));
}

fn rate_rows(out: &mut Vec<ExportRow>, name: &str, axis: Axis, f: &PiecewiseConstant) {
    for (x, v) in &f.pieces {
        out.push(ExportRow::new(name, axis, RowKind::Rate, x, v));
    }
}

/// Labels and cumulative flows over particles, arc rates over time. Super
/// sink nodes and arcs are included only when `keep_super_sink` is set.
pub fn profile_rows(p: &NashFlowProfile, keep_super_sink: bool) -> Vec<ExportRow> {
    let ext = &p.instance;
    let g = ext.graph();
    let mut out = Vec::new();
    let nodes = g
        .node_ids()
        .filter(|&v| keep_super_sink || ext.is_original_node(v));
    for v in nodes {
        linear_rows(
            &mut out,
            &format!("label[{}]", g.node_name(v)),
            Axis::Particle,
            &p.labels[v.0],
        );
    }
    let arcs: Vec<_> = g
        .arc_ids()
        .filter(|&e| keep_super_sink || ext.is_original_arc(e))
        .collect();
    for &e in &arcs {
        let name = &g.arc(e).name;
        linear_rows(
            &mut out,
            &format!("flow[{name}]"),
            Axis::Particle,
            &p.arc_flows[e.0],
        );
    }
    for (s, f) in g.sources.iter().zip(&source_distribution(p)) {
        rate_rows(
            &mut out,
            &format!("source_share[{}]", g.node_name(s.node)),
            Axis::Particle,
            f,
        );
    }
    let inflow = inflow_functions(p);
    let outflow = outflow_functions(p);
    for &e in &arcs {
        let name = &g.arc(e).name;
        rate_rows(
            &mut out,
            &format!("inflow[{name}]"),
            Axis::Time,
            &inflow[e.0],
        );
        rate_rows(
            &mut out,
            &format!("outflow[{name}]"),
            Axis::Time,
            &outflow[e.0],
        );
    }
    out
}

/// Per-sink subflow rates on original arcs and per-particle source shares.
pub fn decomposition_rows(p: &NashFlowProfile, dec: &Decomposition) -> Vec<ExportRow> {
    let base = p.instance.base();
    let mut out = Vec::new();
    let arcs = subflow_functions(p, dec);
    let sources = subflow_source_distribution(p, dec);
    for (j, (fs, ss)) in arcs.iter().zip(&sources).enumerate() {
        let start = out.len();
        for (e, f) in base.arcs.iter().zip(fs) {
            rate_rows(&mut out, &format!("inflow[{}]", e.name), Axis::Time, f);
        }
        for (s, f) in base.sources.iter().zip(ss) {
            rate_rows(
                &mut out,
                &format!("source_share[{}]", base.node_name(s.node)),
                Axis::Particle,
                f,
            );
        }
        for row in &mut out[start..] {
            row.sink = Some(j);
        }
    }
    out
}
