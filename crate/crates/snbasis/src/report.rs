//! Closed-form-vs-oracle verification report.

use std::io::Write;

use crate::graphs::{enumerate_graphs, Graph};
use crate::harmonic::{first_order_coefficients, ModelParams};
use crate::oracle::{extrapolate_coefficients, Ladder, OracleError};

/// One row per enumerated graph of each rank.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub rank: usize,
    pub graph: Graph,
    pub closed_form: f64,
    pub oracle: f64,
    /// (closed - oracle)/closed when closed != 0, closed - oracle otherwise.
    pub fractional_difference: f64,
    pub extrapolation_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub params: ModelParams,
    pub tolerance: f64,
    pub ladder: Vec<f64>,
    pub rows: Vec<ReportRow>,
    pub overall_pass: bool,
}

pub fn build_report(
    params: &ModelParams,
    tolerance: f64,
    ladder: &Ladder,
) -> Result<VerificationReport, OracleError> {
    let closed = first_order_coefficients(params);
    let oracle = extrapolate_coefficients(params, ladder)?;
    let mut rows = Vec::new();
    for rank in 1..=3usize {
        let closed_table = closed.rank_table(rank);
        let oracle_table = oracle.rank_table(rank);
        // row set = enumerate_graphs output for each signature of this rank
        let sigs: &[&str] = match rank {
            1 => &["r", "g"],
            2 => &["rr", "gr", "gg"],
            _ => &["rrr", "grr", "ggr", "ggg"],
        };
        for s in sigs {
            let sig = s.parse().expect("static signature");
            for g in enumerate_graphs(&sig, params.n_particles).expect("rank <= 3") {
                let c = closed_table.get(&g).copied().unwrap_or(0.0);
                let est = oracle_table
                    .get(&g)
                    .copied()
                    .expect("oracle covers every enumerated class");
                let fd = if c != 0.0 {
                    (c - est.value) / c
                } else {
                    c - est.value
                };
                rows.push(ReportRow {
                    rank,
                    graph: g,
                    closed_form: c,
                    oracle: est.value,
                    fractional_difference: fd,
                    extrapolation_error: est.error,
                    pass: fd.abs() <= tolerance,
                });
            }
        }
    }
    let overall_pass = rows.iter().all(|r| r.pass);
    Ok(VerificationReport {
        params: params.clone(),
        tolerance,
        ladder: ladder.rungs(),
        rows,
        overall_pass,
    })
}

impl VerificationReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "graph,closed_form,oracle,fractional_difference,extrapolation_error,pass"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.graph,
                r.closed_form,
                r.oracle,
                r.fractional_difference,
                r.extrapolation_error,
                if r.pass { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }

    /// Human table: one panel per rank, three columns of (graph, values)
    /// panels side by side like the published comparison tables.
    pub fn write_table<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "N={} lambda={:.12} gamma_inf={:.12} rbar_inf={:.12}",
            self.params.n_particles, self.params.lambda, self.params.gamma_inf,
            self.params.rbar_inf
        )?;
        writeln!(
            w,
            "ladder D = {:?}, tolerance = {:e}",
            self.ladder, self.tolerance
        )?;
        for rank in 1..=3usize {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.rank == rank).collect();
            if rows.is_empty() {
                continue;
            }
            writeln!(w, "\nrank {rank}")?;
            writeln!(
                w,
                "{:<24} {:>24} {:>24} {:>12} {:>10} {:>5}",
                "graph", "closed_form", "oracle", "frac_diff", "extrap_err", "ok"
            )?;
            for r in rows {
                writeln!(
                    w,
                    "{:<24} {:>24.16e} {:>24.16e} {:>12.3e} {:>10.2e} {:>5}",
                    r.graph.to_string(),
                    r.closed_form,
                    r.oracle,
                    r.fractional_difference,
                    r.extrapolation_error,
                    if r.pass { "pass" } else { "FAIL" }
                )?;
            }
        }
        writeln!(
            w,
            "\noverall: {}",
            if self.overall_pass { "PASS" } else { "FAIL" }
        )
    }
}
