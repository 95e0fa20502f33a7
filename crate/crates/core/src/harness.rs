//! Benchmark orchestration.

use std::thread;

use crate::config::HarnessConfig;
use crate::error::Result;
use crate::estimators::{build_battery_estimator, BatteryModel, EstimatorRunner, Variant};
use crate::metrics::{rank_filters, rmse, FilterRmse, Quantity, RankKey, RankTable, RmseFormula, RmseTable};
use crate::rng::derive_seed;
use crate::scenario::{filter_model_for, simulate_truth, Case, TruthRecord};
use crate::state::StateVector;

/// Key used for the ranking tables.
pub const RANK_KEY: RankKey = RankKey::Voltage;

/// One filter's trajectory over a case.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterRun {
    pub variant: Variant,
    /// One estimate per truth sample; index 0 is the initial guess.
    pub estimates: Vec<StateVector>,
    pub diverged: Vec<bool>,
    pub diverged_reason: Option<String>,
    /// Summed per-step filter time in seconds.
    pub wall_time_s: f64,
    pub weight_collapses: usize,
}

impl FilterRun {
    pub fn ever_diverged(&self) -> bool {
        self.diverged_reason.is_some()
    }

    /// Estimated series of one quantity.
    pub fn series(&self, q: Quantity) -> Vec<f64> {
        self.estimates
            .iter()
            .map(|s| match q {
                Quantity::VCb => s.v_cb,
                Quantity::VCc => s.v_cc,
                Quantity::Cb => s.c_b(),
                Quantity::Cc => s.c_c(),
            })
            .collect()
    }

    /// Estimate minus truth for one quantity.
    pub fn errors(&self, truth: &TruthRecord, q: Quantity) -> Vec<f64> {
        self.series(q)
            .iter()
            .zip(truth_series(truth, q))
            .map(|(e, t)| e - t)
            .collect()
    }
}

pub fn truth_series(truth: &TruthRecord, q: Quantity) -> &[f64] {
    match q {
        Quantity::VCb => &truth.v_cb,
        Quantity::VCc => &truth.v_cc,
        Quantity::Cb => &truth.c_b,
        Quantity::Cc => &truth.c_c,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseResult {
    pub case: Case,
    pub filters: Vec<FilterRun>,
    pub table: RmseTable,
    pub ranking: RankTable,
}

impl CaseResult {
    pub fn filter(&self, variant: Variant) -> Option<&FilterRun> {
        self.filters.iter().find(|f| f.variant == variant)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub truth_seed: u64,
    /// Shared by every case and filter of this run.
    pub truth: TruthRecord,
    pub cases: Vec<CaseResult>,
}

impl RunResult {
    pub fn case(&self, case: Case) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.case == case)
    }
}

/// Run every configured case and filter, `monte_carlo_runs` times.
///
/// Filter divergence is recorded in the results, never returned as an error.
pub fn run_benchmark(cfg: &HarnessConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    (0..cfg.monte_carlo_runs).map(|run| run_once(cfg, run)).collect()
}

/// One Monte Carlo run.
pub fn run_once(cfg: &HarnessConfig, run: usize) -> Result<RunResult> {
    let truth_seed = derive_seed(cfg.seed, run as u64, 0);
    let truth = simulate_truth(&cfg.scenario(truth_seed)?)?;
    let mut cases = Vec::with_capacity(cfg.cases.len());
    for (case_index, &case) in cfg.cases.iter().enumerate() {
        cases.push(run_case(cfg, run, case_index, case, &truth)?);
    }
    Ok(RunResult {
        run,
        truth_seed,
        truth,
        cases,
    })
}

fn run_case(cfg: &HarnessConfig, run: usize, case_index: usize, case: Case, truth: &TruthRecord) -> Result<CaseResult> {
    let scenario = cfg.scenario_for(case, 0)?;
    let fm = filter_model_for(&scenario);
    let model = BatteryModel::new(fm.resist, fm.t_s);
    let offset = cfg.estimators.initial_voltage_offset;
    let initial = StateVector::from_capacitances(
        scenario.initial_true_state.0 + offset[0],
        scenario.initial_true_state.1 + offset[1],
        fm.initial_c_b,
        fm.initial_c_c,
    );

    let mut runners = Vec::with_capacity(cfg.filters.len());
    for &variant in &cfg.filters {
        let stream = 1 + 4 * case_index as u64 + variant as u64;
        let est = cfg.estimator_config(variant, initial, derive_seed(cfg.seed, run as u64, stream))?;
        runners.push(EstimatorRunner::new(build_battery_estimator(&est, model)?));
    }

    let filters: Vec<FilterRun> = if cfg.parallel {
        thread::scope(|s| {
            let handles: Vec<_> = runners.into_iter().map(|r| s.spawn(move || drive(r, truth))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("filter thread panicked"))
                .collect()
        })
    } else {
        runners.into_iter().map(|r| drive(r, truth)).collect()
    };

    let table = rmse_table(&filters, truth)?;
    let ranking = rank_filters(&table, RANK_KEY);
    Ok(CaseResult {
        case,
        filters,
        table,
        ranking,
    })
}

/// Feed the whole record through one filter: estimate `k` uses the current
/// applied over the previous interval and measurement `k`.
fn drive(mut runner: EstimatorRunner<4, 2>, truth: &TruthRecord) -> FilterRun {
    let n = truth.len();
    let mut estimates = Vec::with_capacity(n);
    let mut diverged = Vec::with_capacity(n);
    let mut wall_ns: u64 = 0;
    let mut weight_collapses = 0;

    let first = runner.initial_estimate();
    estimates.push(StateVector::from_vector(&first.state));
    diverged.push(false);
    for k in 1..n {
        let e = runner.step(truth.i_s[k - 1], &truth.z[k]);
        wall_ns += e.wall_time_ns;
        weight_collapses += e.weight_collapse as usize;
        estimates.push(StateVector::from_vector(&e.state));
        diverged.push(e.diverged);
    }
    FilterRun {
        variant: runner.variant(),
        estimates,
        diverged,
        diverged_reason: runner.diverged_reason().map(str::to_owned),
        wall_time_s: wall_ns as f64 * 1e-9,
        weight_collapses,
    }
}

pub fn rmse_table(filters: &[FilterRun], truth: &TruthRecord) -> Result<RmseTable> {
    let mut rows = Vec::with_capacity(filters.len());
    for f in filters {
        let mut paper = [0.0; 4];
        let mut conventional = [0.0; 4];
        for q in Quantity::ALL {
            let est = f.series(q);
            paper[q.index()] = rmse(truth_series(truth, q), &est, RmseFormula::Paper)?;
            conventional[q.index()] = rmse(truth_series(truth, q), &est, RmseFormula::Conventional)?;
        }
        rows.push(FilterRmse {
            variant: f.variant,
            paper,
            conventional,
            wall_time_s: f.wall_time_s,
            diverged: f.ever_diverged(),
        });
    }
    Ok(RmseTable { rows })
}
