//! Output formatting: human tables at reading precision, machine formats at
//! full round-trip precision, and the versioned CSV layout.

use nomo_core::sweep::SweepRow;
use nomo_core::variational::NomoResult;
use nomo_core::verify::CheckResult;

pub const CSV_COLUMNS: &str = "lambda,exact,tf,tc,ctc,rel_unc,tf_alpha,tf_beta,tc_alpha,\
                               tc_beta,exact_alpha,exact_beta,tf_tcm,converged";

/// Decimal rendering with a fixed number of significant digits, for human
/// reports.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Full-precision scientific rendering (17 significant digits) used in CSV
/// cells; parses back to exactly the same bits.
pub fn fmt_machine(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_cell(x: Option<f64>) -> String {
    x.map(fmt_machine).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# nomo-lab v1, columns: {CSV_COLUMNS}\n"));
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_machine(r.lambda),
            fmt_cell(r.exact),
            fmt_cell(r.tf),
            fmt_cell(r.tc),
            fmt_cell(r.ctc),
            fmt_cell(r.rel_unc),
            fmt_cell(r.tf_alpha),
            fmt_cell(r.tf_beta),
            fmt_cell(r.tc_alpha),
            fmt_cell(r.tc_beta),
            fmt_cell(r.exact_alpha),
            fmt_cell(r.exact_beta),
            fmt_cell(r.tf_tcm),
            r.converged,
        ));
    }
    out
}

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

pub fn results_table(description: &str, results: &[NomoResult]) -> String {
    let mut out = format!("{description}\n");
    out.push_str(&format!(
        "{} {} {} {} {} {} {}\n",
        pad("variant", 8),
        pad("energy", 14),
        pad("params", 28),
        pad("alpha", 14),
        pad("beta", 14),
        pad("cm_kinetic", 14),
        "converged",
    ));
    for r in results {
        let params = if r.params.is_empty() {
            "-".to_string()
        } else {
            r.params
                .iter()
                .map(|p| fmt_sig(*p, 9))
                .collect::<Vec<_>>()
                .join(",")
        };
        let (alpha, beta) = match &r.marginal {
            Some(m) => (fmt_sig(m.alpha, 9), fmt_sig(m.beta, 9)),
            None => ("-".to_string(), "-".to_string()),
        };
        out.push_str(&format!(
            "{} {} {} {} {} {} {}\n",
            pad(r.variant.name(), 8),
            pad(&fmt_sig(r.energy, 9), 14),
            pad(&params, 28),
            pad(&alpha, 14),
            pad(&beta, 14),
            pad(&fmt_sig(r.tcm_expectation, 9), 14),
            if r.converged { "yes" } else { "NO" },
        ));
    }
    out
}

pub fn matrix_block(m: &nalgebra::DMatrix<f64>, indent: &str) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_sig(m[(i, j)], 9)).collect();
        out.push_str(&format!("{indent}[ {} ]\n", row.join("  ")));
    }
    out
}

pub fn checks_table(checks: &[CheckResult]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(8).max(8);
    let mut out = format!(
        "{} {} {} {} {}\n",
        pad("check", width),
        pad("status", 6),
        pad("expected", 16),
        pad("got", 16),
        "tolerance",
    );
    let mut failed = 0usize;
    for c in checks {
        if !c.pass {
            failed += 1;
        }
        out.push_str(&format!(
            "{} {} {} {} {:.1e}\n",
            pad(&c.name, width),
            pad(if c.pass { "pass" } else { "FAIL" }, 6),
            pad(&fmt_sig(c.expected, 9), 16),
            pad(&fmt_sig(c.got, 9), 16),
            c.tolerance,
        ));
    }
    out.push_str(&format!(
        "{} checks: {} passed, {} failed\n",
        checks.len(),
        checks.len() - failed,
        failed
    ));
    out
}
