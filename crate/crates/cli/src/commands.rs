use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use relpose::io::{
    write_csv, write_depth_pgm, write_mask_pgm, write_ply, write_toml, EncodingFile,
    IntrinsicsRecord, PoseRecord, ResultRow, TargetsFile, RESULTS_CSV,
};
use relpose::metrics::{accuracy_at_threshold, decompose_add_loss};
use relpose::solver::{rotation_geodesic_error, translation_error};
use relpose::synth::{distribution_report, SceneGenerator, RNG_ALGORITHM};
use relpose::{
    add, add_s, add_selective, auc, constraint_residual, encode_input, encode_targets,
    reference_point, solve_from_constraints, ConstraintForm, EncodeOptions, Error, RefStrategy,
    SolveOptions,
};

use crate::config::{EncodeSettings, ExperimentConfig, MetricSettings, SolveSettings};
use crate::dataset::*;

pub const SOLVE_CSV: &str = "solve";
pub const DISTRIBUTION_CSV: &str = "distribution";
pub const LOSS_CSV: &str = "loss";
pub const VERIFY_CSV: &str = "verify";

pub fn synth_gen(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let generator = SceneGenerator::new(cfg.scene.clone())?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let model = &generator.model().model;
    write_ply(&out.join(MODEL), model.points())?;
    let k = IntrinsicsRecord::from(generator.intrinsics());
    (0..cfg.scene_count)
        .into_par_iter()
        .try_for_each(|i| -> Result<()> {
            let scene = generator
                .render(i)
                .with_context(|| format!("rendering {}", scene_name(i)))?;
            let dir = out.join(scene_name(i));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            write_depth_pgm(&dir.join(DEPTH), &scene.observation.depth)?;
            write_mask_pgm(&dir.join(MASK), &scene.observation.mask)?;
            write_toml(&dir.join(POSE), &PoseRecord::from(scene.gt_pose()))?;
            write_toml(&dir.join(INTRINSICS), &k)?;
            write_toml(
                &dir.join(META),
                &SceneMeta {
                    index: i,
                    spec_digest: scene.spec_digest,
                },
            )?;
            Ok(())
        })?;
    let manifest = Manifest {
        format: DATASET_FORMAT.into(),
        rng_algorithm: RNG_ALGORITHM.into(),
        scene_count: cfg.scene_count,
        model_file: MODEL.into(),
        symmetric: model.symmetric(),
        spec: cfg.scene.clone(),
    };
    write_toml(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeSummary {
    pub scenes: usize,
    pub pixels: usize,
}

pub fn encode(ds: &Dataset, settings: &EncodeSettings) -> Result<EncodeSummary> {
    let opts = EncodeOptions {
        depth_epsilon: settings.depth_epsilon,
        uv_offsets: settings.uv_offsets,
    };
    let counts = ds
        .indices()
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let obs = ds.observation(i)?;
            let reference = reference_point(
                &obs.depth,
                &obs.mask,
                None,
                &obs.intrinsics,
                settings.strategy,
            )
            .with_context(|| format!("reference point of {}", scene_name(i)))?;
            let enc = encode_input(&obs, &reference, settings.input_mode, &opts)?;
            let tgt = encode_targets(&obs, &reference, settings.target_mode, &opts)?;
            write_toml(&ds.scene_file(i, ENCODING), &EncodingFile::from(&enc))?;
            write_toml(&ds.scene_file(i, TARGETS), &TargetsFile::from(&tgt))?;
            Ok(enc.pixels.len())
        })
        .collect::<Result<Vec<_>>>()?;
    write_toml(
        &ds.root().join(ENCODE_SETTINGS),
        &EncodeRecord {
            format: ENCODE_FORMAT.into(),
            settings: *settings,
        },
    )?;
    Ok(EncodeSummary {
        scenes: counts.len(),
        pixels: counts.iter().sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub scene: String,
    pub pixels: usize,
    pub max_residual: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub form: ConstraintForm,
    pub rows: Vec<VerifyRow>,
    pub max_residual: f64,
    pub rms_residual: f64,
}

/// Residual of every encoded pixel against the ground-truth pose. The max is
/// the largest absolute component.
pub fn verify(ds: &Dataset, form: ConstraintForm) -> Result<VerifyReport> {
    let per_scene = ds
        .indices()
        .into_par_iter()
        .map(|i| -> Result<(VerifyRow, f64)> {
            let (enc, tgt) = ds.encoding(i)?;
            let pose = ds.gt_pose(i)?;
            let res = constraint_residual(&enc, &tgt, &pose, form)
                .with_context(|| format!("residual of {}", scene_name(i)))?;
            let max = res.iter().map(|r| r.amax()).fold(0.0, f64::max);
            let sq: f64 = res.iter().map(|r| r.norm_squared()).sum();
            Ok((
                VerifyRow {
                    scene: scene_name(i),
                    pixels: res.len(),
                    max_residual: max,
                    rms_residual: (sq / res.len() as f64).sqrt(),
                },
                sq,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let pixels: usize = per_scene.iter().map(|(r, _)| r.pixels).sum();
    let sq: f64 = per_scene.iter().map(|(_, s)| s).sum();
    let rows: Vec<VerifyRow> = per_scene.into_iter().map(|(r, _)| r).collect();
    Ok(VerifyReport {
        form,
        max_residual: rows.iter().map(|r| r.max_residual).fold(0.0, f64::max),
        rms_residual: if pixels == 0 {
            0.0
        } else {
            (sq / pixels as f64).sqrt()
        },
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRow {
    pub scene: String,
    pub point_count: usize,
    pub residual_rms: Option<f64>,
    pub condition: String,
}

/// Solves every scene from its encoding and (optionally perturbed) oracle
/// targets. Scene `i` draws its noise from stream `i` of the seed.
pub fn solve(ds: &Dataset, settings: &SolveSettings) -> Result<Vec<SolveRow>> {
    if !(settings.sigma.is_finite() && settings.sigma >= 0.0) {
        bail!("sigma must be a non-negative number");
    }
    let noise = Normal::new(0.0, settings.sigma)?;
    let opts = SolveOptions {
        refine_iterations: settings.refine_iterations,
    };
    let rows = ds
        .indices()
        .into_par_iter()
        .map(|i| -> Result<SolveRow> {
            let (enc, tgt) = ds.encoding(i)?;
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(i);
            let abc: Vec<Vector3<f64>> = if settings.sigma > 0.0 {
                tgt.abc
                    .iter()
                    .map(|v| v + Vector3::from_fn(|_, _| noise.sample(&mut rng)))
                    .collect()
            } else {
                tgt.abc.clone()
            };
            match solve_from_constraints(&enc, &abc, &enc.reference, &opts) {
                Ok(report) => {
                    write_toml(
                        &ds.scene_file(i, PRED_POSE),
                        &PoseRecord::from(&report.pose),
                    )?;
                    Ok(SolveRow {
                        scene: scene_name(i),
                        point_count: report.point_count,
                        residual_rms: Some(report.residual_rms),
                        condition: report.condition.name().into(),
                    })
                }
                Err(Error::Degenerate(_)) => {
                    ds.remove_scene_file(i, PRED_POSE)?;
                    Ok(SolveRow {
                        scene: scene_name(i),
                        point_count: enc.pixels.len(),
                        residual_rms: None,
                        condition: "degenerate".into(),
                    })
                }
                Err(e) => Err(e).with_context(|| format!("solving {}", scene_name(i))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(&ds.root().join("solve.csv"), SOLVE_CSV, &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub scenes: usize,
    pub evaluated: usize,
    pub mean_add_selective: Option<f64>,
    pub median_add: Option<f64>,
    /// Fraction of all scenes with ADD(S) below the diameter fraction.
    /// Scenes without a prediction count as misses.
    pub accuracy: f64,
    pub auc: f64,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

pub fn eval(ds: &Dataset, metrics: &MetricSettings) -> Result<(Vec<ResultRow>, EvalSummary)> {
    let cfg = metrics.to_config()?;
    let model = ds.model()?;
    let residuals: Vec<Option<f64>> =
        match relpose::io::read_csv::<SolveRow>(&ds.root().join("solve.csv"), SOLVE_CSV) {
            Ok(rows) => rows.into_iter().map(|r| r.residual_rms).collect(),
            Err(_) => vec![None; ds.manifest.scene_count as usize],
        };
    let rows = ds
        .indices()
        .into_par_iter()
        .map(|i| -> Result<ResultRow> {
            let gt = ds.gt_pose(i)?;
            let residual = residuals.get(i as usize).copied().flatten();
            Ok(match ds.predicted_pose(i)? {
                Some(pred) => ResultRow {
                    scene: scene_name(i),
                    add: Some(add(&pred, &gt, &model)),
                    add_s: Some(add_s(&pred, &gt, &model)),
                    add_selective: Some(add_selective(&pred, &gt, &model)),
                    rotation_error: Some(rotation_geodesic_error(&pred, &gt)),
                    translation_error: Some(translation_error(&pred, &gt)),
                    solver_residual: residual,
                    flags: String::new(),
                },
                None => ResultRow {
                    scene: scene_name(i),
                    add: None,
                    add_s: None,
                    add_selective: None,
                    rotation_error: None,
                    translation_error: None,
                    solver_residual: residual,
                    flags: "no-prediction".into(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        bail!("dataset has no scenes");
    }
    let errors: Vec<f64> = rows
        .iter()
        .map(|r| r.add_selective.unwrap_or(f64::INFINITY))
        .collect();
    let evaluated: Vec<f64> = rows.iter().filter_map(|r| r.add_selective).collect();
    let mut adds: Vec<f64> = rows.iter().filter_map(|r| r.add).collect();
    let summary = EvalSummary {
        scenes: rows.len(),
        evaluated: evaluated.len(),
        mean_add_selective: (!evaluated.is_empty())
            .then(|| evaluated.iter().sum::<f64>() / evaluated.len() as f64),
        median_add: median(&mut adds),
        accuracy: accuracy_at_threshold(&errors, &model, &cfg)?,
        auc: auc(&errors, &cfg)?,
    };
    write_csv(&ds.root().join("results.csv"), RESULTS_CSV, &rows)?;
    write_toml(&ds.root().join("summary.toml"), &summary)?;
    Ok((rows, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub axis: String,
    pub variance_t: f64,
    pub variance_delta_t: f64,
    pub reduction_ratio: f64,
    pub min_t: f64,
    pub max_t: f64,
    pub min_delta_t: f64,
    pub max_delta_t: f64,
}

pub fn dist_report(ds: &Dataset, strategy: RefStrategy) -> Result<Vec<DistributionRow>> {
    let observations = ds
        .indices()
        .into_par_iter()
        .map(|i| ds.observation(i))
        .collect::<Result<Vec<_>>>()?;
    let report = distribution_report(&observations, strategy)?;
    let ratio = report.reduction_ratio();
    let rows: Vec<DistributionRow> = ["x", "y", "z"]
        .iter()
        .enumerate()
        .map(|(i, axis)| DistributionRow {
            axis: (*axis).into(),
            variance_t: report.raw_t[i].variance,
            variance_delta_t: report.delta_t[i].variance,
            reduction_ratio: ratio[i],
            min_t: report.raw_t[i].min,
            max_t: report.raw_t[i].max,
            min_delta_t: report.delta_t[i].min,
            max_delta_t: report.delta_t[i].max,
        })
        .collect();
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub scene: String,
    pub total: f64,
    pub rotation_part: f64,
    pub translation_part: f64,
    pub cross_term: f64,
}

/// Decomposes the ADD loss of every predicted pose against ground truth.
pub fn loss_decompose(ds: &Dataset) -> Result<Vec<LossRow>> {
    let model = ds.model()?;
    let rows = ds
        .indices()
        .into_par_iter()
        .map(|i| -> Result<Option<LossRow>> {
            let Some(pred) = ds.predicted_pose(i)? else {
                return Ok(None);
            };
            let dec = decompose_add_loss(&pred, &ds.gt_pose(i)?, &model);
            Ok(Some(LossRow {
                scene: scene_name(i),
                total: dec.total,
                rotation_part: dec.rotation_part,
                translation_part: dec.translation_part,
                cross_term: dec.cross_term,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}
