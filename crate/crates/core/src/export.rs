//! CSV export. Numbers are written with 17 significant digits so identical
//! runs give identical bytes (except for the measured timing row).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::HarnessConfig;
use crate::error::{Error, Result};
use crate::harness::{CaseResult, RunResult};
use crate::metrics::{Quantity, RmseFormula};
use crate::scenario::{Case, TruthRecord};

pub const TIMESERIES_HEADER: &str =
    "t,i_s,v_cb_true,v_cc_true,c_b_true,c_c_true,v_o,z1,z2,v_cb_est,v_cc_est,c_b_est,c_c_est,diverged";
pub const CONFIG_ECHO: &str = "config.toml";
pub const TIMING_ROW: &str = "simulation_time_s";

fn num(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("write to string");
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn case_key(case: Case) -> &'static str {
    match case {
        Case::NoiseOnly => "noise_only",
        Case::WithModelError => "with_model_error",
    }
}

/// Table of RMSE per quantity plus a timing row, one column per filter and case.
pub fn summary_csv(cases: &[CaseResult], formula: RmseFormula) -> String {
    let mut columns = Vec::new();
    for c in cases {
        for row in &c.table.rows {
            columns.push((c.case, row));
        }
    }
    columns.sort_by_key(|(case, row)| (row.variant, *case));

    let mut out = String::from("quantity");
    for (case, row) in &columns {
        write!(out, ",{}_{}", row.variant.key(), case_key(*case)).expect("write to string");
    }
    out.push('\n');
    if columns.is_empty() {
        return out;
    }
    for q in Quantity::ALL {
        out.push_str(q.label());
        for (_, row) in &columns {
            out.push(',');
            num(&mut out, row.get(q, formula));
        }
        out.push('\n');
    }
    out.push_str(TIMING_ROW);
    for (_, row) in &columns {
        out.push(',');
        num(&mut out, row.wall_time_s);
    }
    out.push('\n');
    out
}

/// Best-first filter order per case.
pub fn ranking_csv(cases: &[CaseResult]) -> String {
    let mut out = String::from("rank");
    for c in cases {
        write!(out, ",{}", case_key(c.case)).expect("write to string");
    }
    out.push('\n');
    let depth = cases.iter().map(|c| c.ranking.order.len()).max().unwrap_or(0);
    for rank in 0..depth {
        write!(out, "{}", rank + 1).expect("write to string");
        for c in cases {
            out.push(',');
            if let Some(v) = c.ranking.order.get(rank) {
                out.push_str(v.key());
            }
        }
        out.push('\n');
    }
    out
}

pub fn timeseries_csv(truth: &TruthRecord, case: &CaseResult, index: usize) -> String {
    let f = &case.filters[index];
    let mut out = String::with_capacity(truth.len() * 330);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for k in 0..truth.len() {
        let s = &f.estimates[k];
        for x in [
            truth.t[k],
            truth.i_s[k],
            truth.v_cb[k],
            truth.v_cc[k],
            truth.c_b[k],
            truth.c_c[k],
            truth.v_o[k],
            truth.z[k][0],
            truth.z[k][1],
            s.v_cb,
            s.v_cc,
            s.c_b(),
            s.c_c(),
        ] {
            num(&mut out, x);
            out.push(',');
        }
        out.push(if f.diverged[k] { '1' } else { '0' });
        out.push('\n');
    }
    out
}

/// Write one run's tables and time series into `dir`.
pub fn export_run(run: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("summary.csv"), &summary_csv(&run.cases, RmseFormula::Paper))?;
    write_file(
        &dir.join("summary_conventional.csv"),
        &summary_csv(&run.cases, RmseFormula::Conventional),
    )?;
    write_file(&dir.join("ranking.csv"), &ranking_csv(&run.cases))?;
    for case in &run.cases {
        for (i, f) in case.filters.iter().enumerate() {
            let name = format!("timeseries_{}_{}.csv", case_key(case.case), f.variant.key());
            write_file(&dir.join(name), &timeseries_csv(&run.truth, case, i))?;
        }
    }
    Ok(())
}

/// Directory of run `run` under `root`: `root` itself for a single run,
/// `root/run_XXX` otherwise.
pub fn run_dir(root: &Path, run: usize, total: usize) -> PathBuf {
    if total <= 1 {
        root.to_path_buf()
    } else {
        root.join(format!("run_{run:03}"))
    }
}

/// Write all runs plus the config echo.
pub fn export(results: &[RunResult], cfg: &HarnessConfig, root: &Path) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    write_file(&root.join(CONFIG_ECHO), &cfg.to_toml())?;
    for r in results {
        export_run(r, &run_dir(root, r.run, results.len()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Variant;
    use crate::metrics::{FilterRmse, RankKey, RankTable, RmseTable};

    #[test]
    fn empty_results_give_headers_only() {
        assert_eq!(summary_csv(&[], RmseFormula::Paper), "quantity\n");
        assert_eq!(ranking_csv(&[]), "rank\n");
    }

    #[test]
    fn summary_has_four_quantities_and_timing() {
        let row = FilterRmse {
            variant: Variant::Ekf,
            paper: [1.0, 2.0, 3.0, 4.0],
            conventional: [1.0; 4],
            wall_time_s: 0.5,
            diverged: false,
        };
        let case = CaseResult {
            case: Case::NoiseOnly,
            filters: vec![],
            table: RmseTable { rows: vec![row] },
            ranking: RankTable {
                key: RankKey::Voltage,
                order: vec![Variant::Ekf],
            },
        };
        let csv = summary_csv(std::slice::from_ref(&case), RmseFormula::Paper);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "quantity,ekf_noise_only");
        assert_eq!(lines[1], "V_Cb,1.0000000000000000e0");
        assert!(lines[5].starts_with(TIMING_ROW));
        assert_eq!(ranking_csv(&[case]), "rank,noise_only\n1,ekf\n");
    }
}
