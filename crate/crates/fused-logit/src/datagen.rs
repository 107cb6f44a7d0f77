//! Synthetic benchmark instances: quartets of sparse logistic models over
//! a task chain, with controlled per-task sparsity, controlled overlap of
//! equal-valued coefficients between neighboring tasks, and feature sets
//! that are either independent standard normal or pairwise correlated
//! noisy copies.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{s, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{sigmoid, CoefficientMatrix, TaskDataset};

/// Non-zero coefficient values are drawn uniformly from this set.
pub const COEFFICIENT_VALUES: [f64; 4] = [-4.0, -2.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Independent,
    Correlated,
}

/// Benchmark case labels. a-d are the independent-feature cases, e-h the
/// correlated ones, each sweeping (non-zeros, matches) over (60,12),
/// (60,48), (10,2), (10,8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseLabel {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 8] = [
        CaseLabel::A,
        CaseLabel::B,
        CaseLabel::C,
        CaseLabel::D,
        CaseLabel::E,
        CaseLabel::F,
        CaseLabel::G,
        CaseLabel::H,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = (b'a' + *self as u8) as char;
        write!(f, "{c}")
    }
}

impl FromStr for CaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(CaseLabel::A),
            "b" => Ok(CaseLabel::B),
            "c" => Ok(CaseLabel::C),
            "d" => Ok(CaseLabel::D),
            "e" => Ok(CaseLabel::E),
            "f" => Ok(CaseLabel::F),
            "g" => Ok(CaseLabel::G),
            "h" => Ok(CaseLabel::H),
            other => Err(Error::InvalidConfig(format!(
                "unknown case label {other:?}; expected a through h"
            ))),
        }
    }
}

/// One benchmark case: scenario plus sparsity/similarity targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub label: CaseLabel,
    pub scenario: Scenario,
    /// Non-zero coefficients per task, intercept excluded.
    pub nonzero_per_task: usize,
    /// Equal-valued shared non-zeros between neighboring tasks.
    pub matching_nonzero: usize,
    pub d: usize,
    pub t: usize,
}

impl CaseSpec {
    /// The benchmark grid: (60,12), (60,48), (10,2), (10,8) per scenario,
    /// d=100, t=4.
    pub fn for_label(label: CaseLabel) -> CaseSpec {
        let scenario = if label.index() < 4 {
            Scenario::Independent
        } else {
            Scenario::Correlated
        };
        let (nonzero, matching) = match label.index() % 4 {
            0 => (60, 12),
            1 => (60, 48),
            2 => (10, 2),
            _ => (10, 8),
        };
        CaseSpec {
            label,
            scenario,
            nonzero_per_task: nonzero,
            matching_nonzero: matching,
            d: 100,
            t: 4,
        }
    }

    pub fn all_cases() -> Vec<CaseSpec> {
        CaseLabel::ALL.iter().map(|&l| CaseSpec::for_label(l)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.t == 0 {
            return Err(Error::InvalidConfig("d and t must be at least 1".into()));
        }
        if self.nonzero_per_task > self.d || self.matching_nonzero > self.nonzero_per_task {
            return Err(Error::InfeasibleSpec(format!(
                "cannot place {} non-zeros with {} matches in {} features",
                self.nonzero_per_task, self.matching_nonzero, self.d
            )));
        }
        if self.scenario == Scenario::Correlated && self.d % 2 != 0 {
            return Err(Error::InvalidConfig(
                "correlated scenario needs an even feature count".into(),
            ));
        }
        Ok(())
    }
}

/// One generated instance: the label-generating model and its three splits.
/// For the correlated scenario `b_true` is the mirrored (label-generating)
/// matrix, not the raw draw.
#[derive(Debug, Clone)]
pub struct BenchmarkInstance {
    pub spec: CaseSpec,
    pub seed: u64,
    pub b_true: CoefficientMatrix,
    pub train: TaskDataset,
    pub val: TaskDataset,
    pub test: TaskDataset,
}

/// Draws a coefficient matrix with exactly `nonzero_per_task` non-zeros
/// per column and exactly `matching_nonzero` equal-valued shared non-zeros
/// between each neighboring pair. Matched positions keep their value; the
/// remaining positions are drawn outside the matched set, and where they
/// happen to land on the previous support the value is forced to differ
/// so the match count stays exact. Intercepts are zero.
pub fn gen_coefficients(spec: &CaseSpec, rng: &mut impl Rng) -> Result<CoefficientMatrix> {
    spec.validate()?;
    let d = spec.d;
    let nnz = spec.nonzero_per_task;
    let matches = spec.matching_nonzero;
    let mut b = Array2::<f64>::zeros((1 + d, spec.t));

    let first = rand::seq::index::sample(rng, d, nnz);
    for l in first.iter() {
        b[[1 + l, 0]] = COEFFICIENT_VALUES[rng.random_range(0..4)];
    }

    for j in 1..spec.t {
        let prev_support: Vec<usize> =
            (0..d).filter(|&l| b[[1 + l, j - 1]] != 0.0).collect();
        let kept = rand::seq::index::sample(rng, prev_support.len(), matches);
        let mut is_kept = vec![false; d];
        for idx in kept.iter() {
            let l = prev_support[idx];
            is_kept[l] = true;
            b[[1 + l, j]] = b[[1 + l, j - 1]];
        }
        let pool: Vec<usize> = (0..d).filter(|&l| !is_kept[l]).collect();
        let fresh = rand::seq::index::sample(rng, pool.len(), nnz - matches);
        for idx in fresh.iter() {
            let l = pool[idx];
            let prev = b[[1 + l, j - 1]];
            let value = if prev != 0.0 {
                let others: Vec<f64> = COEFFICIENT_VALUES
                    .iter()
                    .copied()
                    .filter(|&v| v != prev)
                    .collect();
                others[rng.random_range(0..others.len())]
            } else {
                COEFFICIENT_VALUES[rng.random_range(0..4)]
            };
            b[[1 + l, j]] = value;
        }
    }
    CoefficientMatrix::new(b)
}

/// Number of positions where neighboring columns hold the same non-zero
/// value, per neighboring pair (intercept row excluded).
pub fn neighbor_match_counts(b: &CoefficientMatrix) -> Vec<usize> {
    let m = b.matrix();
    (1..b.t())
        .map(|j| {
            (1..b.n_params())
                .filter(|&l| m[[l, j - 1]] != 0.0 && m[[l, j - 1]] == m[[l, j]])
                .count()
        })
        .collect()
}

/// Non-zero count per column, intercept row excluded.
pub fn nonzero_counts(b: &CoefficientMatrix) -> Vec<usize> {
    let m = b.matrix();
    (0..b.t())
        .map(|j| (1..b.n_params()).filter(|&l| m[[l, j]] != 0.0).count())
        .collect()
}

/// Design matrix with intercept column, features i.i.d. standard normal.
pub fn gen_features_independent(n: usize, d: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut x = Array2::<f64>::ones((n, 1 + d));
    for i in 0..n {
        for l in 1..=d {
            x[[i, l]] = rng.sample(StandardNormal);
        }
    }
    x
}

/// Copies the first-half coefficient rows onto the second half (the
/// intercept row is untouched).
pub fn mirror_coefficients(b: &CoefficientMatrix, d: usize) -> Result<CoefficientMatrix> {
    if d % 2 != 0 || b.n_params() != 1 + d {
        return Err(Error::InvalidConfig(
            "mirroring needs an even feature count matching the matrix".into(),
        ));
    }
    let half = d / 2;
    let mut m = b.matrix().clone();
    let first = m.slice(s![1..1 + half, ..]).to_owned();
    m.slice_mut(s![1 + half.., ..]).assign(&first);
    CoefficientMatrix::new(m)
}

/// Correlated-scenario design: features drawn as in the independent
/// scenario, coefficients mirrored, and every second-half column whose
/// (mirrored) coefficient row is relevant re-drawn as its first-half
/// partner plus N(0, 0.4) noise. Irrelevant second-half columns keep
/// their independent draw.
pub fn gen_features_correlated(
    n: usize,
    d: usize,
    b_draw: &CoefficientMatrix,
    rng: &mut impl Rng,
) -> Result<(Array2<f64>, CoefficientMatrix)> {
    let b_adjusted = mirror_coefficients(b_draw, d)?;
    let mut x = gen_features_independent(n, d, rng);
    let half = d / 2;
    let noise_sd = 0.4f64.sqrt();
    let m = b_adjusted.matrix();
    for l in 1..=half {
        let relevant = (0..b_adjusted.t()).any(|j| m[[l, j]] != 0.0);
        if !relevant {
            continue;
        }
        for i in 0..n {
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * noise_sd;
            x[[i, half + l]] = x[[i, l]] + noise;
        }
    }
    Ok((x, b_adjusted))
}

/// Labels drawn from the logistic model: P(y=+1) = sigmoid(x'beta), row
/// by row, task within row.
pub fn gen_labels(x: &Array2<f64>, b: &CoefficientMatrix, rng: &mut impl Rng) -> Array2<f64> {
    assert_eq!(x.ncols(), b.n_params(), "design and coefficients disagree");
    let margins = x.dot(b.matrix());
    let mut y = Array2::<f64>::zeros((x.nrows(), b.t()));
    for i in 0..x.nrows() {
        for j in 0..b.t() {
            y[[i, j]] = if rng.random::<f64>() < sigmoid(margins[[i, j]]) {
                1.0
            } else {
                -1.0
            };
        }
    }
    y
}

/// Deterministically builds one instance from a seed: coefficient draw,
/// then train, validation, and test splits in that order, each split
/// drawing features then labels.
pub fn make_instance(
    spec: &CaseSpec,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<BenchmarkInstance> {
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::InvalidConfig("split sizes must be at least 1".into()));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b_draw = gen_coefficients(spec, &mut rng)?;

    let split = |n: usize, rng: &mut ChaCha8Rng| -> Result<(TaskDataset, CoefficientMatrix)> {
        let (x, b_true) = match spec.scenario {
            Scenario::Independent => (
                gen_features_independent(n, spec.d, rng),
                b_draw.clone(),
            ),
            Scenario::Correlated => gen_features_correlated(n, spec.d, &b_draw, rng)?,
        };
        let y = gen_labels(&x, &b_true, rng);
        Ok((TaskDataset::new(x, y)?, b_true))
    };

    let (train, b_true) = split(n_train, &mut rng)?;
    let (val, _) = split(n_val, &mut rng)?;
    let (test, _) = split(n_test, &mut rng)?;
    Ok(BenchmarkInstance {
        spec: *spec,
        seed,
        b_true,
        train,
        val,
        test,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceManifest {
    spec: CaseSpec,
    seed: u64,
    b_true: Vec<Vec<f64>>,
}

/// Writes `instance.json`, `train.csv`, `val.csv`, `test.csv` into `dir`.
pub fn write_instance(dir: &Path, inst: &BenchmarkInstance) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = InstanceManifest {
        spec: inst.spec,
        seed: inst.seed,
        b_true: io::matrix_to_rows(inst.b_true.matrix()),
    };
    let file = std::fs::File::create(dir.join("instance.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &manifest)?;
    io::write_dataset_csv(&dir.join("train.csv"), &inst.train)?;
    io::write_dataset_csv(&dir.join("val.csv"), &inst.val)?;
    io::write_dataset_csv(&dir.join("test.csv"), &inst.test)?;
    Ok(())
}

pub fn load_instance(dir: &Path) -> Result<BenchmarkInstance> {
    let file = std::fs::File::open(dir.join("instance.json"))?;
    let manifest: InstanceManifest = serde_json::from_reader(std::io::BufReader::new(file))?;
    let b_true = CoefficientMatrix::new(io::rows_to_matrix(&manifest.b_true)?)?;
    Ok(BenchmarkInstance {
        spec: manifest.spec,
        seed: manifest.seed,
        b_true,
        train: io::read_dataset_csv(&dir.join("train.csv"))?,
        val: io::read_dataset_csv(&dir.join("val.csv"))?,
        test: io::read_dataset_csv(&dir.join("test.csv"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
        let n = a.len() as f64;
        let ma = a.sum() / n;
        let mb = b.sum() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(b.iter()) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn coefficient_draws_hit_every_case_count_exactly() {
        for spec in CaseSpec::all_cases() {
            for seed in 0..25u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let b = gen_coefficients(&spec, &mut rng).unwrap();
                assert_eq!(
                    nonzero_counts(&b),
                    vec![spec.nonzero_per_task; spec.t],
                    "case {} seed {seed}",
                    spec.label
                );
                assert_eq!(
                    neighbor_match_counts(&b),
                    vec![spec.matching_nonzero; spec.t - 1],
                    "case {} seed {seed}",
                    spec.label
                );
                assert!(b.matrix().row(0).iter().all(|&v| v == 0.0));
                assert!(b
                    .matrix()
                    .iter()
                    .all(|&v| v == 0.0 || COEFFICIENT_VALUES.contains(&v)));
            }
        }
    }

    #[test]
    fn full_overlap_duplicates_the_column() {
        let spec = CaseSpec {
            label: CaseLabel::A,
            scenario: Scenario::Independent,
            nonzero_per_task: 10,
            matching_nonzero: 10,
            d: 30,
            t: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = gen_coefficients(&spec, &mut rng).unwrap();
        let m = b.matrix();
        for j in 1..3 {
            assert_eq!(m.column(j), m.column(0));
        }
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let mut spec = CaseSpec::for_label(CaseLabel::A);
        spec.matching_nonzero = spec.nonzero_per_task + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            gen_coefficients(&spec, &mut rng),
            Err(Error::InfeasibleSpec(_))
        ));
        let mut spec = CaseSpec::for_label(CaseLabel::A);
        spec.nonzero_per_task = spec.d + 1;
        spec.matching_nonzero = 0;
        assert!(matches!(
            gen_coefficients(&spec, &mut rng),
            Err(Error::InfeasibleSpec(_))
        ));
    }

    #[test]
    fn independent_features_look_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1400;
        let x = gen_features_independent(n, 20, &mut rng);
        assert!(x.column(0).iter().all(|&v| v == 1.0));
        for l in 1..=20 {
            let col = x.column(l);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "column {l} mean {mean}");
            assert!((var - 1.0).abs() <= 0.2, "column {l} variance {var}");
        }
    }

    #[test]
    fn correlated_features_pair_relevant_columns() {
        let spec = CaseSpec::for_label(CaseLabel::G);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b_draw = gen_coefficients(&spec, &mut rng).unwrap();
        let (x, b_adj) = gen_features_correlated(1400, spec.d, &b_draw, &mut rng).unwrap();
        let half = spec.d / 2;
        let m = b_adj.matrix();
        // Second-half rows mirror the first half.
        for l in 1..=half {
            for j in 0..spec.t {
                assert_eq!(m[[half + l, j]], m[[l, j]]);
            }
        }
        let mut saw_relevant = false;
        let mut saw_irrelevant = false;
        for l in 1..=half {
            let relevant = (0..spec.t).any(|j| m[[l, j]] != 0.0);
            let r = corr(x.column(l), x.column(half + l));
            if relevant {
                saw_relevant = true;
                assert!((0.80..=0.90).contains(&r), "relevant pair {l}: corr {r}");
            } else {
                saw_irrelevant = true;
                assert!(r.abs() <= 0.1, "irrelevant pair {l}: corr {r}");
            }
        }
        assert!(saw_relevant && saw_irrelevant);
    }

    #[test]
    fn correlated_scenario_needs_even_d() {
        let mut spec = CaseSpec::for_label(CaseLabel::E);
        spec.d = 99;
        spec.nonzero_per_task = 10;
        spec.matching_nonzero = 2;
        assert!(make_instance(&spec, 10, 10, 10, 0).is_err());
    }

    #[test]
    fn labels_from_zero_model_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = gen_features_independent(1400, 5, &mut rng);
        let b = CoefficientMatrix::zeros(6, 2);
        let y = gen_labels(&x, &b, &mut rng);
        for j in 0..2 {
            let pos = y.column(j).iter().filter(|&&v| v == 1.0).count() as f64 / 1400.0;
            assert!((pos - 0.5).abs() <= 0.05, "task {j} balance {pos}");
        }
    }

    #[test]
    fn true_model_beats_chance_on_its_own_labels() {
        let spec = CaseSpec::for_label(CaseLabel::C);
        let inst = make_instance(&spec, 50, 50, 1400, 3).unwrap();
        let pred = crate::model::classify(inst.b_true.matrix(), inst.test.x());
        let agree = pred
            .iter()
            .zip(inst.test.y().iter())
            .filter(|(a, b)| a == b)
            .count() as f64
            / (1400.0 * spec.t as f64);
        assert!(agree > 0.5, "accuracy {agree}");
    }

    #[test]
    fn label_frequency_tracks_the_margin() {
        // Margin fixed at 2 for every row: P(+1) = sigmoid(2) ~ 0.881.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1400;
        let mut x = Array2::<f64>::ones((n, 2));
        x.column_mut(1).fill(1.0);
        let b = CoefficientMatrix::new(ndarray::array![[0.0], [2.0]]).unwrap();
        let y = gen_labels(&x, &b, &mut rng);
        let pos = y.iter().filter(|&&v| v == 1.0).count() as f64 / n as f64;
        assert!((pos - sigmoid(2.0)).abs() <= 0.05, "frequency {pos}");
    }

    #[test]
    fn instances_are_deterministic_in_the_seed() {
        let spec = CaseSpec::for_label(CaseLabel::F);
        let a = make_instance(&spec, 30, 40, 50, 99).unwrap();
        let b = make_instance(&spec, 30, 40, 50, 99).unwrap();
        assert_eq!(a.b_true.matrix(), b.b_true.matrix());
        assert_eq!(a.train.x(), b.train.x());
        assert_eq!(a.train.y(), b.train.y());
        assert_eq!(a.test.x(), b.test.x());
        let c = make_instance(&spec, 30, 40, 50, 100).unwrap();
        assert_ne!(a.train.y(), c.train.y());
    }

    #[test]
    fn splits_are_independent_draws() {
        let spec = CaseSpec::for_label(CaseLabel::C);
        let inst = make_instance(&spec, 50, 50, 50, 21).unwrap();
        assert_ne!(inst.val.x(), inst.test.x());
        assert_ne!(inst.val.y(), inst.test.y());
    }

    #[test]
    fn correlated_instances_use_the_mirrored_model() {
        let spec = CaseSpec::for_label(CaseLabel::H);
        let inst = make_instance(&spec, 25, 25, 25, 8).unwrap();
        let m = inst.b_true.matrix();
        let half = spec.d / 2;
        for l in 1..=half {
            for j in 0..spec.t {
                assert_eq!(m[[half + l, j]], m[[l, j]]);
            }
        }
    }

    #[test]
    fn instance_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CaseSpec::for_label(CaseLabel::D);
        let inst = make_instance(&spec, 25, 30, 35, 5).unwrap();
        write_instance(dir.path(), &inst).unwrap();
        let back = load_instance(dir.path()).unwrap();
        assert_eq!(back.spec, inst.spec);
        assert_eq!(back.seed, inst.seed);
        assert_eq!(back.b_true.matrix(), inst.b_true.matrix());
        assert_eq!(back.train.x(), inst.train.x());
        assert_eq!(back.train.y(), inst.train.y());
        assert_eq!(back.val.x(), inst.val.x());
        assert_eq!(back.test.x(), inst.test.x());
    }

    #[test]
    fn case_labels_parse_and_print() {
        for label in CaseLabel::ALL {
            let s = label.to_string();
            assert_eq!(s.parse::<CaseLabel>().unwrap(), label);
        }
        assert!("z".parse::<CaseLabel>().is_err());
    }
}
