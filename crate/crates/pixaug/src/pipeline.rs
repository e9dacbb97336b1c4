//! Stage functions and the end-to-end experiment.
//!
//! The experiment writes every stage output into the output directory and
//! the manifest last, through an atomic rename, so a directory without
//! `manifest.json` is an incomplete run. When a stage fails, the files it
//! and earlier stages wrote are moved under `failed/`.

use std::fs;
use std::path::{Path, PathBuf};

use pixaug_core::classifier::{self, ClassifierConfig, Example, FitResult, GridCell};
use pixaug_core::data::{assemble_training, classify_scene, Dataset, Label, Normalization, Role};
use pixaug_core::gan::{generate_pixels, train_gan_on_raw, GanConfig, GanTraining};
use pixaug_core::rng::derive_indexed;
use pixaug_core::BANDS;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{ClassifierCheckpoint, GanCheckpoint, Selection};
use crate::config::{PipelineConfig, Seeds};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::pixels;
use crate::report::{validate_sets, AccuracyRecord, Report};
use crate::scene::{self, SceneSidecar};

pub const MANIFEST_SCHEMA: &str = "manifest.v1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const FAILED_DIR: &str = "failed";

/// Trains the GAN on the built-up pixels of `train`.
pub fn train_gan_stage(train: &Dataset, gan: &GanConfig, seed: u64) -> Result<GanTraining> {
    let rows = train.rows_with(Label::BuiltUp);
    if rows.len() < 2 {
        return Err(pixaug_core::Error::Data(format!(
            "GAN training needs at least 2 built-up pixels, found {}",
            rows.len()
        ))
        .into());
    }
    let mut config = gan.clone();
    config.train.seed = seed;
    Ok(train_gan_on_raw(&rows, &config)?)
}

/// `sets` synthetic sets of `size` pixels; set `i` uses `derive_indexed(seed, i)`.
pub fn generate_sets(training: &GanTraining, sets: usize, size: usize, seed: u64) -> Result<Vec<Vec<[f64; BANDS]>>> {
    (0..sets)
        .map(|i| {
            let rows = generate_pixels(&training.model, size, derive_indexed(seed, i as u64))?;
            Ok(rows.into_iter().map(to_array).collect())
        })
        .collect()
}

fn to_array(row: Vec<f64>) -> [f64; BANDS] {
    let mut a = [0.0; BANDS];
    a.copy_from_slice(&row);
    a
}

/// Grid search with cells spread over `threads` scoped workers. Cells are
/// seeded independently, so the result does not depend on `threads`.
pub fn grid_search(data: &[Example], config: &ClassifierConfig, threads: usize) -> Result<FitResult> {
    config.validate()?;
    let cells = config.cells();
    let threads = threads.clamp(1, cells.len());
    let results: Vec<pixaug_core::Result<GridCell>> = if threads == 1 {
        cells
            .iter()
            .map(|&(h, l)| classifier::evaluate_cell(data, config, h, l))
            .collect()
    } else {
        let mut slots: Vec<Option<pixaug_core::Result<GridCell>>> = vec![None; cells.len()];
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let cells = &cells;
                    s.spawn(move || {
                        (t..cells.len())
                            .step_by(threads)
                            .map(|i| (i, classifier::evaluate_cell(data, config, cells[i].0, cells[i].1)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("grid worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("every cell evaluated")).collect()
    };
    let cells = results.into_iter().collect::<pixaug_core::Result<Vec<_>>>()?;
    Ok(classifier::refit(data, config, cells)?)
}

/// Outcome of one training configuration.
pub struct ClassifierRun {
    pub fit: FitResult,
    pub record: AccuracyRecord,
}

/// Trains on `train` plus the first `k` generated sets (features normalized
/// with `norm`) and evaluates on `test`.
#[allow(clippy::too_many_arguments)]
pub fn classify_stage(
    train: &Dataset,
    sets: &[Vec<[f64; BANDS]>],
    k: usize,
    test: &Dataset,
    norm: &Normalization,
    config: &ClassifierConfig,
    seed: u64,
    threshold: f64,
    positive_label: Label,
    threads: usize,
) -> Result<ClassifierRun> {
    let assembled = assemble_training(train, sets, k)?;
    let data = classifier::examples(&assembled.normalized_with(norm)?)?;
    let mut config = config.clone();
    config.train.seed = derive_indexed(seed, k as u64);
    let fit = grid_search(&data, &config, threads)?;
    let test_data = classifier::examples(&test.normalized_with(norm)?)?;
    let eval = classifier::evaluate(&fit.model, &test_data, threshold, positive_label)?;
    let generated = assembled
        .samples
        .iter()
        .filter(|s| matches!(s.provenance, pixaug_core::data::Provenance::Generated(_)))
        .count();
    let record = AccuracyRecord::new(
        k,
        (assembled.count(Label::BuiltUp) - generated, generated, assembled.count(Label::NonBuiltUp)),
        (fit.chosen_hidden_units, fit.chosen_lambda, fit.cv_accuracy),
        &eval,
    );
    Ok(ClassifierRun { fit, record })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSetRecord {
    pub set_index: usize,
    pub file: String,
    pub rows: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub master_seed: u64,
    pub seeds: Seeds,
    pub config: PipelineConfig,
    pub inputs: Vec<FileDigest>,
    pub generated_sets: Vec<GeneratedSetRecord>,
    /// Every stage output, relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

/// Files written so far, relative to the output directory.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn digests(&self) -> Result<Vec<FileDigest>> {
        self.written
            .iter()
            .map(|n| {
                Ok(FileDigest {
                    path: n.clone(),
                    sha256: fsutil::sha256_file(&self.dir.join(n))?,
                })
            })
            .collect()
    }

    /// Moves every written file under `failed/`; best effort.
    fn quarantine(&self) {
        let failed = self.dir.join(FAILED_DIR);
        if fs::create_dir_all(&failed).is_err() {
            return;
        }
        for n in &self.written {
            let from = self.dir.join(n);
            if from.exists() {
                let _ = fs::rename(&from, failed.join(n));
            }
        }
    }
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Stage {
        stage: name.to_string(),
        source: Box::new(e),
    })
}

fn require(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.clone().ok_or_else(|| Error::Argument(format!("missing {what} path")))
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: fsutil::sha256_file(path)?,
    })
}

/// Runs the whole protocol. `progress` receives one line per finished step.
pub fn run_experiment(config: &PipelineConfig, progress: &mut dyn FnMut(&str)) -> Result<Report> {
    config.validate()?;
    let train_path = require(&config.train, "train")?;
    let test_path = require(&config.test, "test")?;
    let dir = config.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    }
    let mut out = Outputs {
        dir: dir.clone(),
        written: Vec::new(),
    };
    let result = run_stages(config, &train_path, &test_path, &mut out, progress);
    if result.is_err() {
        out.quarantine();
    }
    result
}

fn run_stages(
    config: &PipelineConfig,
    train_path: &Path,
    test_path: &Path,
    out: &mut Outputs,
    progress: &mut dyn FnMut(&str),
) -> Result<Report> {
    let seeds = config.seeds();
    let (train, test, mut inputs) = stage("load", || {
        let train = pixels::read_pixels(train_path, Role::Train)?;
        let test = pixels::read_pixels(test_path, Role::Test)?;
        if test.samples.iter().any(|s| s.label.is_none()) {
            return Err(pixaug_core::Error::Data("test pixels must be labeled".to_string()).into());
        }
        Ok((train, test, vec![digest(train_path)?, digest(test_path)?]))
    })?;
    progress(&format!(
        "loaded {} training and {} test pixels",
        train.len(),
        test.len()
    ));

    let mut sets = Vec::new();
    let mut set_records = Vec::new();
    let mut report = Report::new(config.master_seed, config.alpha);
    if config.generated_sets > 0 {
        let training = stage("train-gan", || {
            let t = train_gan_stage(&train, &config.gan, seeds.gan)?;
            GanCheckpoint::new(&t.model).save(&out.path("gan.json"))?;
            write_trace(&out.path("gan_trace.csv"), &t)?;
            Ok(t)
        })?;
        progress(&format!("trained GAN for {} iterations", training.trace.len()));

        sets = stage("generate", || {
            let sets = generate_sets(&training, config.generated_sets, config.set_size, seeds.generate)?;
            for (i, set) in sets.iter().enumerate() {
                let name = format!("generated_{}.csv", i + 1);
                pixels::save_rows(&out.path(&name), set)?;
                set_records.push(GeneratedSetRecord {
                    set_index: i + 1,
                    file: name,
                    rows: set.len(),
                    seed: derive_indexed(seeds.generate, i as u64),
                });
            }
            Ok(sets)
        })?;
        progress(&format!("generated {} sets of {}", sets.len(), config.set_size));

        stage("validate", || {
            let original = train.rows_with(Label::BuiltUp);
            let (ks, ball) = validate_sets(
                &original,
                &sets,
                config.alpha,
                config.permutations,
                seeds.validate,
                config.ks_method,
            )?;
            report.set_validation(ks, ball);
            Ok(())
        })?;
        progress(&format!("validation all_pass = {}", report.all_pass));
    }

    let norm = stage("classify", || Ok(Normalization::fit(&train.rows())?))?;
    let mut last_model = None;
    for k in 0..=sets.len() {
        let run = stage("classify", || {
            let run = classify_stage(
                &train,
                &sets,
                k,
                &test,
                &norm,
                &config.classifier,
                seeds.classifier,
                config.threshold,
                config.positive_label,
                config.threads,
            )?;
            ClassifierCheckpoint::new(&run.fit.model, &norm, Some(Selection::from_record(&run.record)))
                .save(&out.path(&format!("classifier_k{k}.json")))?;
            Ok(run)
        })?;
        progress(&format!(
            "k={k}: H={} lambda={} accuracy={:.4}",
            run.record.chosen_hidden_units, run.record.chosen_lambda, run.record.accuracy
        ));
        report.accuracy_table.push(run.record);
        last_model = Some(run.fit.model);
    }

    if let Some(scene_path) = &config.scene {
        stage("scene", || {
            let grid = scene::read_scene(scene_path)?;
            inputs.push(digest(scene_path)?);
            let model = last_model.as_ref().expect("at least one configuration");
            let labels = classify_scene(model, &grid, &norm, config.threshold)?;
            let raster = out.path("scene.pgm");
            fsutil::write_with(&raster, |w| scene::write_pgm(w, grid.width, grid.height, &labels))?;
            let side = SceneSidecar::new(grid.width, grid.height, config.threshold, &labels, "scene.pgm");
            fsutil::write_json(&out.path("scene.json"), &side)
        })?;
        progress("classified scene");
    }

    stage("report", || {
        fsutil::write_json(&out.path(REPORT_FILE), &report)?;
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA.to_string(),
            master_seed: config.master_seed,
            seeds,
            config: config.clone(),
            inputs,
            generated_sets: set_records,
            outputs: out.digests()?,
        };
        fsutil::write_json(&out.dir.join(MANIFEST_FILE), &manifest)
    })?;
    Ok(report)
}

/// `iteration,value,d_loss,g_loss` per training iteration.
pub fn write_trace(path: &Path, training: &GanTraining) -> Result<()> {
    fsutil::write_with(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["iteration", "value", "d_loss", "g_loss"])?;
        for t in &training.trace {
            csv.write_record([
                t.iteration.to_string(),
                t.value.to_string(),
                t.d_loss.to_string(),
                t.g_loss.to_string(),
            ])?;
        }
        csv.flush()
    })
}
