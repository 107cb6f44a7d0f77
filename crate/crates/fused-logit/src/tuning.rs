//! Hyperparameter grid search and the synthetic benchmark pipeline:
//! four model variants fitted over (λ₁, λ₂, ν) grids, selected on a
//! validation split, scored on a test split, plus plug-in Bayes risk
//! estimates and parameter-recovery distances against the generating
//! model.

use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{fit_continue, AdmmState, FitResult};
use crate::datagen::{make_instance, BenchmarkInstance, CaseLabel, CaseSpec, Scenario};
use crate::error::{Error, Result};
use crate::model::{classify, CoefficientMatrix, PenaltyConfig, TaskDataset};

/// The four benchmark model variants, from most to least general.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    FusedElasticNet,
    FusedL1,
    ElasticNet,
    Unpenalized,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::FusedElasticNet,
        ModelVariant::FusedL1,
        ModelVariant::ElasticNet,
        ModelVariant::Unpenalized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::FusedElasticNet => "fused_elastic_net",
            ModelVariant::FusedL1 => "fused_l1",
            ModelVariant::ElasticNet => "elastic_net",
            ModelVariant::Unpenalized => "unpenalized",
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fused_elastic_net" => Ok(ModelVariant::FusedElasticNet),
            "fused_l1" => Ok(ModelVariant::FusedL1),
            "elastic_net" => Ok(ModelVariant::ElasticNet),
            "unpenalized" => Ok(ModelVariant::Unpenalized),
            other => Err(Error::InvalidConfig(format!(
                "unknown model variant {other:?}"
            ))),
        }
    }
}

/// A hyperparameter grid for one model variant. Each axis is sorted
/// strictly ascending; the variant's structural zeros are enforced at
/// construction (fused_l1 pins λ₂ = 0, elastic_net pins ν = 0,
/// unpenalized pins everything).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub variant: ModelVariant,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub nu: Vec<f64>,
}

/// Full grids used for the headline benchmark numbers.
pub const FULL_LAMBDA1: [f64; 11] = [0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 4.0, 6.0, 8.0];
pub const FULL_LAMBDA2: [f64; 7] = [0.0, 0.05, 0.1, 0.2, 0.4, 1.0, 2.0];
pub const FULL_NU: [f64; 12] = [0.0, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 4.0, 6.0, 8.0];

/// Thinned grids that keep each axis's range but bound desk-scale runtime.
pub const DESK_LAMBDA1: [f64; 5] = [0.0, 0.2, 0.8, 2.0, 6.0];
pub const DESK_LAMBDA2: [f64; 3] = [0.0, 0.1, 0.4];
pub const DESK_NU: [f64; 5] = [0.0, 0.2, 0.8, 2.0, 6.0];

impl GridSpec {
    /// Builds a grid for `variant`, replacing axes the variant pins to
    /// zero and validating the rest.
    pub fn constrained(
        variant: ModelVariant,
        lambda1: Vec<f64>,
        lambda2: Vec<f64>,
        nu: Vec<f64>,
    ) -> Result<GridSpec> {
        let zero = vec![0.0];
        let (lambda1, lambda2, nu) = match variant {
            ModelVariant::FusedElasticNet => (lambda1, lambda2, nu),
            ModelVariant::FusedL1 => (lambda1, zero.clone(), nu),
            ModelVariant::ElasticNet => (lambda1, lambda2, zero.clone()),
            ModelVariant::Unpenalized => (zero.clone(), zero.clone(), zero),
        };
        let grid = GridSpec {
            variant,
            lambda1,
            lambda2,
            nu,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("nu", &self.nu),
        ] {
            if axis.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} grid is empty")));
            }
            if axis.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} grid must be nonnegative and finite"
                )));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(format!(
                    "{name} grid must be strictly ascending"
                )));
            }
        }
        let ok = match self.variant {
            ModelVariant::FusedElasticNet => true,
            ModelVariant::FusedL1 => self.lambda2 == [0.0],
            ModelVariant::ElasticNet => self.nu == [0.0],
            ModelVariant::Unpenalized => {
                self.lambda1 == [0.0] && self.lambda2 == [0.0] && self.nu == [0.0]
            }
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "grid axes violate the {} variant's structural zeros",
                self.variant
            )));
        }
        Ok(())
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.lambda1.len() * self.lambda2.len() * self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda1.is_empty() || self.lambda2.is_empty() || self.nu.is_empty()
    }
}

/// Grid size profile: thinned desk grids or the full grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridProfile {
    Desk,
    Full,
}

impl GridProfile {
    pub fn grid(self, variant: ModelVariant) -> GridSpec {
        let (l1, l2, nu) = match self {
            GridProfile::Desk => (
                DESK_LAMBDA1.to_vec(),
                DESK_LAMBDA2.to_vec(),
                DESK_NU.to_vec(),
            ),
            GridProfile::Full => (
                FULL_LAMBDA1.to_vec(),
                FULL_LAMBDA2.to_vec(),
                FULL_NU.to_vec(),
            ),
        };
        GridSpec::constrained(variant, l1, l2, nu).expect("profile grids are valid")
    }
}

/// Fraction of (observation, task) pairs misclassified by sign(XB).
pub fn l01_error(b: &Array2<f64>, data: &TaskDataset) -> Result<f64> {
    if b.nrows() != data.n_params() || b.ncols() != data.t() {
        return Err(Error::DimensionMismatch(format!(
            "model is {}x{} but data needs {}x{}",
            b.nrows(),
            b.ncols(),
            data.n_params(),
            data.t()
        )));
    }
    let predictions = classify(b, data.x());
    let wrong = predictions
        .iter()
        .zip(data.y().iter())
        .filter(|(p, y)| p != y)
        .count();
    Ok(wrong as f64 / (data.n() * data.t()) as f64)
}

/// Plug-in estimate of the lowest achievable error: the generating
/// model's own sign classifier scored on held-out data.
pub fn bayes_risk_estimate(b_true: &CoefficientMatrix, test: &TaskDataset) -> Result<f64> {
    l01_error(b_true.matrix(), test)
}

/// Normalized parameter-recovery errors, split by the true support.
/// `zero_part` is ‖B̂ restricted to true-zero positions‖₂ divided by the
/// number of such positions; `nonzero_part` the same for ‖B̂ − B*‖₂ over
/// the true support. The intercept row is excluded; a side with no
/// positions is reported as absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDistances {
    pub zero_part: Option<f64>,
    pub nonzero_part: Option<f64>,
}

pub fn recovery_distances(
    b_fit: &CoefficientMatrix,
    b_true: &CoefficientMatrix,
) -> Result<RecoveryDistances> {
    if b_fit.n_params() != b_true.n_params() || b_fit.t() != b_true.t() {
        return Err(Error::DimensionMismatch(
            "fitted and true coefficient matrices differ in shape".into(),
        ));
    }
    let fit = b_fit.matrix();
    let truth = b_true.matrix();
    let mut zero_sq = 0.0;
    let mut zero_count = 0usize;
    let mut nonzero_sq = 0.0;
    let mut nonzero_count = 0usize;
    for l in 1..b_true.n_params() {
        for j in 0..b_true.t() {
            if truth[[l, j]] == 0.0 {
                zero_sq += fit[[l, j]] * fit[[l, j]];
                zero_count += 1;
            } else {
                let dev = fit[[l, j]] - truth[[l, j]];
                nonzero_sq += dev * dev;
                nonzero_count += 1;
            }
        }
    }
    Ok(RecoveryDistances {
        zero_part: (zero_count > 0).then(|| zero_sq.sqrt() / zero_count as f64),
        nonzero_part: (nonzero_count > 0).then(|| nonzero_sq.sqrt() / nonzero_count as f64),
    })
}

/// One grid coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub nu: f64,
}

impl GridPoint {
    fn lex_key(&self) -> (f64, f64, f64) {
        (self.nu, self.lambda1, self.lambda2)
    }

    fn lex_larger_than(&self, other: &GridPoint) -> bool {
        self.lex_key() > other.lex_key()
    }
}

#[derive(Debug)]
pub struct GridSearchResult {
    pub best: GridPoint,
    pub best_validation_error: f64,
    pub best_fit: FitResult,
    /// Every evaluated point with its validation error, in execution
    /// order (ν outermost, then λ₁, then λ₂).
    pub evaluations: Vec<(GridPoint, f64)>,
    pub fits_evaluated: usize,
    pub nonconverged_fits: usize,
}

struct ChainOutcome {
    best: (GridPoint, f64, FitResult),
    evaluations: Vec<(GridPoint, f64)>,
    nonconverged: usize,
}

/// Replace-on-tie selection toward the lexicographically larger
/// (ν, λ₁, λ₂): equal validation errors prefer stronger regularization.
fn better(candidate: &(GridPoint, f64), incumbent: &(GridPoint, f64)) -> bool {
    candidate.1 < incumbent.1
        || (candidate.1 == incumbent.1 && candidate.0.lex_larger_than(&incumbent.0))
}

/// Fits every grid point on `train`, scores on `val`, and returns the
/// best point. Points sharing a (ν, λ₁) pair form a chain warm-started
/// along ascending λ₂; chains run in parallel and are reduced in a fixed
/// order, so the outcome does not depend on thread count.
pub fn grid_search(
    train: &TaskDataset,
    val: &TaskDataset,
    grid: &GridSpec,
    template: &PenaltyConfig,
) -> Result<GridSearchResult> {
    grid.validate()?;
    template.validate()?;
    if train.n_params() != val.n_params() || train.t() != val.t() {
        return Err(Error::DimensionMismatch(
            "train and validation splits differ in shape".into(),
        ));
    }

    let mut chain_heads = Vec::with_capacity(grid.nu.len() * grid.lambda1.len());
    for &nu in &grid.nu {
        for &lambda1 in &grid.lambda1 {
            chain_heads.push((nu, lambda1));
        }
    }

    let chains: Vec<Result<ChainOutcome>> = chain_heads
        .par_iter()
        .map(|&(nu, lambda1)| {
            let mut state = AdmmState::cold(train.n_params(), train.t());
            let mut best: Option<(GridPoint, f64, FitResult)> = None;
            let mut evaluations = Vec::with_capacity(grid.lambda2.len());
            let mut nonconverged = 0;
            for &lambda2 in &grid.lambda2 {
                let point = GridPoint {
                    lambda1,
                    lambda2,
                    nu,
                };
                let mut cfg = template.clone();
                cfg.lambda1 = lambda1;
                cfg.lambda2 = lambda2;
                cfg.nu = nu;
                let fit = fit_continue(train, &cfg, &mut state).map_err(|e| {
                    e.with_context(format!(
                        "grid point lambda1={lambda1} lambda2={lambda2} nu={nu}"
                    ))
                })?;
                if !fit.converged {
                    nonconverged += 1;
                }
                let error = l01_error(fit.b.matrix(), val)?;
                evaluations.push((point, error));
                let replace = match &best {
                    None => true,
                    Some((bp, be, _)) => better(&(point, error), &(*bp, *be)),
                };
                if replace {
                    best = Some((point, error, fit));
                }
            }
            Ok(ChainOutcome {
                best: best.expect("lambda2 axis is non-empty"),
                evaluations,
                nonconverged,
            })
        })
        .collect();

    let mut best: Option<(GridPoint, f64, FitResult)> = None;
    let mut evaluations = Vec::with_capacity(grid.len());
    let mut nonconverged = 0;
    for chain in chains {
        let chain = chain?;
        evaluations.extend(chain.evaluations);
        nonconverged += chain.nonconverged;
        let replace = match &best {
            None => true,
            Some((bp, be, _)) => better(&(chain.best.0, chain.best.1), &(*bp, *be)),
        };
        if replace {
            best = Some(chain.best);
        }
    }
    let (best, best_validation_error, best_fit) = best.expect("grid is non-empty");
    Ok(GridSearchResult {
        best,
        best_validation_error,
        best_fit,
        fits_evaluated: evaluations.len(),
        evaluations,
        nonconverged_fits: nonconverged,
    })
}

/// Grid search on an instance's own train/validation splits.
pub fn grid_search_instance(
    inst: &BenchmarkInstance,
    grid: &GridSpec,
    template: &PenaltyConfig,
) -> Result<GridSearchResult> {
    grid_search(&inst.train, &inst.val, grid, template)
}

/// Benchmark sweep description: which cases, training sizes, instance
/// counts, and model variants to run, under which grid profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub cases: Vec<CaseLabel>,
    pub train_sizes: Vec<usize>,
    pub instances_per_case: usize,
    pub variants: Vec<ModelVariant>,
    pub profile: GridProfile,
    pub n_val: usize,
    pub n_test: usize,
    pub base_seed: u64,
    pub penalty: PenaltyConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            cases: CaseLabel::ALL.to_vec(),
            train_sizes: vec![25, 50, 100, 200, 400],
            instances_per_case: 10,
            variants: ModelVariant::ALL.to_vec(),
            profile: GridProfile::Desk,
            n_val: 1400,
            n_test: 1400,
            base_seed: 0,
            penalty: PenaltyConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() || self.train_sizes.is_empty() || self.variants.is_empty() {
            return Err(Error::InvalidConfig(
                "benchmark needs at least one case, one training size, and one variant".into(),
            ));
        }
        if self.instances_per_case == 0 {
            return Err(Error::InvalidConfig("instances_per_case must be positive".into()));
        }
        if self.train_sizes.iter().any(|&n| n == 0) || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("split sizes must be positive".into()));
        }
        self.penalty.validate()
    }

    /// Seed for one instance: stable under reordering or filtering of the
    /// case list, since it keys on the case's own index.
    pub fn instance_seed(&self, case: CaseLabel, instance: usize) -> u64 {
        self.base_seed + 1000 * case.index() as u64 + instance as u64
    }
}

/// One benchmark cell: a (case, instance, training size, variant)
/// combination. Metric fields are absent when the cell failed; the
/// failure itself is recorded in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub case: CaseLabel,
    pub scenario: Scenario,
    pub n_train: usize,
    pub instance: usize,
    pub seed: u64,
    pub model: ModelVariant,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub nu: Option<f64>,
    pub validation_error: Option<f64>,
    pub test_error: Option<f64>,
    pub bayes_estimate: Option<f64>,
    pub zero_part: Option<f64>,
    pub nonzero_part: Option<f64>,
    pub fits: usize,
    pub converged: Option<bool>,
    pub error: Option<String>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub rows: Vec<BenchmarkRow>,
}

/// Runs the full sweep. Instances run as a parallel pool; each instance
/// is generated once at the largest training size and smaller sizes take
/// its leading rows. The row order is fixed by the configuration, never
/// by scheduling. Cell failures are recorded in their rows and the sweep
/// continues.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let max_train = *config.train_sizes.iter().max().expect("non-empty");

    let mut instance_keys = Vec::new();
    for &case in &config.cases {
        for idx in 0..config.instances_per_case {
            instance_keys.push((case, idx));
        }
    }

    let per_instance: Vec<Vec<BenchmarkRow>> = instance_keys
        .par_iter()
        .map(|&(case, idx)| {
            let spec = CaseSpec::for_label(case);
            let seed = config.instance_seed(case, idx);
            let blank = |n_train: usize, variant: ModelVariant| BenchmarkRow {
                case,
                scenario: spec.scenario,
                n_train,
                instance: idx,
                seed,
                model: variant,
                lambda1: None,
                lambda2: None,
                nu: None,
                validation_error: None,
                test_error: None,
                bayes_estimate: None,
                zero_part: None,
                nonzero_part: None,
                fits: 0,
                converged: None,
                error: None,
                wall_ms: 0,
            };

            let inst = match make_instance(&spec, max_train, config.n_val, config.n_test, seed)
            {
                Ok(inst) => inst,
                Err(e) => {
                    // The whole instance is unusable; record the failure
                    // on every cell that needed it.
                    let mut rows = Vec::new();
                    for &n in &config.train_sizes {
                        for &v in &config.variants {
                            let mut row = blank(n, v);
                            row.error = Some(e.to_string());
                            rows.push(row);
                        }
                    }
                    return rows;
                }
            };

            let mut rows = Vec::with_capacity(config.train_sizes.len() * config.variants.len());
            for &n_train in &config.train_sizes {
                let train = match inst.train.head(n_train) {
                    Ok(train) => train,
                    Err(e) => {
                        for &variant in &config.variants {
                            let mut row = blank(n_train, variant);
                            row.error = Some(e.to_string());
                            rows.push(row);
                        }
                        continue;
                    }
                };
                for &variant in &config.variants {
                    let started = Instant::now();
                    let mut row = blank(n_train, variant);
                    let grid = config.profile.grid(variant);
                    match grid_search(&train, &inst.val, &grid, &config.penalty) {
                        Ok(result) => {
                            row.lambda1 = Some(result.best.lambda1);
                            row.lambda2 = Some(result.best.lambda2);
                            row.nu = Some(result.best.nu);
                            row.validation_error = Some(result.best_validation_error);
                            row.fits = result.fits_evaluated;
                            row.converged = Some(result.best_fit.converged);
                            match cell_metrics(&result.best_fit, &inst) {
                                Ok((test_error, bayes, rec)) => {
                                    row.test_error = Some(test_error);
                                    row.bayes_estimate = Some(bayes);
                                    row.zero_part = rec.zero_part;
                                    row.nonzero_part = rec.nonzero_part;
                                }
                                Err(e) => row.error = Some(e.to_string()),
                            }
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    row.wall_ms = started.elapsed().as_millis() as u64;
                    log::info!(
                        "case {case} instance {idx} n={n_train} {variant}: {} fits in {} ms",
                        row.fits,
                        row.wall_ms
                    );
                    rows.push(row);
                }
            }
            rows
        })
        .collect();

    Ok(BenchmarkReport {
        config: config.clone(),
        rows: per_instance.into_iter().flatten().collect(),
    })
}

fn cell_metrics(
    fit: &FitResult,
    inst: &BenchmarkInstance,
) -> Result<(f64, f64, RecoveryDistances)> {
    let test_error = l01_error(fit.b.matrix(), &inst.test)?;
    let bayes = bayes_risk_estimate(&inst.b_true, &inst.test)?;
    let rec = recovery_distances(&fit.b, &inst.b_true)?;
    Ok((test_error, bayes, rec))
}

fn opt_field<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// One row per benchmark cell; `wall_ms` is the only timing column.
pub fn write_report_csv(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "case",
        "scenario",
        "n_train",
        "instance",
        "seed",
        "model",
        "lambda1",
        "lambda2",
        "nu",
        "validation_error",
        "test_error",
        "bayes_estimate",
        "zero_part",
        "nonzero_part",
        "fits",
        "converged",
        "error",
        "wall_ms",
    ])?;
    for row in &report.rows {
        let scenario = match row.scenario {
            Scenario::Independent => "independent",
            Scenario::Correlated => "correlated",
        };
        w.write_record([
            row.case.to_string(),
            scenario.to_string(),
            row.n_train.to_string(),
            row.instance.to_string(),
            row.seed.to_string(),
            row.model.to_string(),
            opt_field(&row.lambda1),
            opt_field(&row.lambda2),
            opt_field(&row.nu),
            opt_field(&row.validation_error),
            opt_field(&row.test_error),
            opt_field(&row.bayes_estimate),
            opt_field(&row.zero_part),
            opt_field(&row.nonzero_part),
            row.fits.to_string(),
            opt_field(&row.converged),
            row.error.clone().unwrap_or_default(),
            row.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Nested JSON: case → training size → model → per-instance rows.
pub fn write_report_json(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut cases = serde_json::Map::new();
    for row in &report.rows {
        let size_map = cases
            .entry(row.case.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()))
            .as_object_mut()
            .expect("case level is an object");
        let model_map = size_map
            .entry(row.n_train.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()))
            .as_object_mut()
            .expect("size level is an object");
        let list = model_map
            .entry(row.model.to_string())
            .or_insert_with(|| serde_json::Value::Array(Vec::new()))
            .as_array_mut()
            .expect("model level is an array");
        list.push(serde_json::to_value(row)?);
    }
    let doc = serde_json::json!({
        "config": report.config,
        "cases": serde_json::Value::Object(cases),
    });
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &doc)?;
    Ok(())
}

/// Long-format CSV with one row per cell and only the plotting axes:
/// error curves and recovery distances by case, size, and model.
pub fn write_plot_csv(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "case",
        "scenario",
        "n_train",
        "model",
        "instance",
        "test_error",
        "bayes_estimate",
        "zero_part",
        "nonzero_part",
    ])?;
    for row in &report.rows {
        let scenario = match row.scenario {
            Scenario::Independent => "independent",
            Scenario::Correlated => "correlated",
        };
        w.write_record([
            row.case.to_string(),
            scenario.to_string(),
            row.n_train.to_string(),
            row.model.to_string(),
            row.instance.to_string(),
            opt_field(&row.test_error),
            opt_field(&row.bayes_estimate),
            opt_field(&row.zero_part),
            opt_field(&row.nonzero_part),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Median of the finite values, averaging the middle pair for even
/// counts. None when nothing is finite.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}
