//! On-disk dataset layout.
//!
//! ```text
//! <root>/manifest.toml        dataset manifest, written last
//! <root>/model.ply
//! <root>/encode.toml          settings of the last `encode` run
//! <root>/scene_0000/depth.pgm
//!                  /mask.pgm
//!                  /pose.toml
//!                  /intrinsics.toml
//!                  /meta.toml
//!                  /encoding.toml, targets.toml     (encode)
//!                  /pred_pose.toml                  (solve)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use relpose::io::{
    read_depth_pgm, read_mask_pgm, read_ply, read_toml, EncodingFile, IntrinsicsRecord, PoseRecord,
    TargetsFile,
};
use relpose::synth::SceneSpec;
use relpose::{Encoding, ObjPoint, Observation, Pose, Targets};

use crate::config::EncodeSettings;

pub const DATASET_FORMAT: &str = "relpose-dataset/v1";
pub const ENCODE_FORMAT: &str = "relpose-encode/v1";

pub const MANIFEST: &str = "manifest.toml";
pub const MODEL: &str = "model.ply";
pub const ENCODE_SETTINGS: &str = "encode.toml";
pub const DEPTH: &str = "depth.pgm";
pub const MASK: &str = "mask.pgm";
pub const POSE: &str = "pose.toml";
pub const INTRINSICS: &str = "intrinsics.toml";
pub const META: &str = "meta.toml";
pub const ENCODING: &str = "encoding.toml";
pub const TARGETS: &str = "targets.toml";
pub const PRED_POSE: &str = "pred_pose.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub rng_algorithm: String,
    pub scene_count: u64,
    pub model_file: String,
    pub symmetric: bool,
    pub spec: SceneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMeta {
    pub index: u64,
    pub spec_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeRecord {
    pub format: String,
    pub settings: EncodeSettings,
}

pub fn scene_name(index: u64) -> String {
    format!("scene_{index:04}")
}

#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let manifest: Manifest = read_toml(&path).with_context(|| {
            format!("{} is not a dataset (no readable manifest)", root.display())
        })?;
        if manifest.format != DATASET_FORMAT {
            bail!(
                "unsupported dataset format `{}` in {}",
                manifest.format,
                path.display()
            );
        }
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn indices(&self) -> std::ops::Range<u64> {
        0..self.manifest.scene_count
    }

    pub fn scene_dir(&self, index: u64) -> PathBuf {
        self.root.join(scene_name(index))
    }

    pub fn scene_file(&self, index: u64, name: &str) -> PathBuf {
        self.scene_dir(index).join(name)
    }

    pub fn model(&self) -> Result<relpose::Model> {
        let points = read_ply(&self.root.join(&self.manifest.model_file))?;
        Ok(relpose::Model::new(
            points.iter().map(ObjPoint::from_vector).collect(),
            self.manifest.symmetric,
        )?)
    }

    pub fn observation(&self, index: u64) -> Result<Observation> {
        let load = || -> Result<Observation> {
            let depth = read_depth_pgm(&self.scene_file(index, DEPTH))?;
            let mask = read_mask_pgm(&self.scene_file(index, MASK))?;
            let k: IntrinsicsRecord = read_toml(&self.scene_file(index, INTRINSICS))?;
            let pose = self.gt_pose(index)?;
            Ok(Observation::new(
                depth,
                mask,
                k.to_intrinsics()?,
                None,
                Some(pose),
            )?)
        };
        load().with_context(|| format!("loading {}", scene_name(index)))
    }

    pub fn gt_pose(&self, index: u64) -> Result<Pose> {
        let rec: PoseRecord = read_toml(&self.scene_file(index, POSE))?;
        Ok(rec.to_pose()?)
    }

    pub fn predicted_pose(&self, index: u64) -> Result<Option<Pose>> {
        let path = self.scene_file(index, PRED_POSE);
        if !path.exists() {
            return Ok(None);
        }
        let rec: PoseRecord = read_toml(&path)?;
        Ok(Some(rec.to_pose()?))
    }

    pub fn encoding(&self, index: u64) -> Result<(Encoding, Targets)> {
        let load = || -> Result<(Encoding, Targets)> {
            let enc: EncodingFile = read_toml(&self.scene_file(index, ENCODING))?;
            let tgt: TargetsFile = read_toml(&self.scene_file(index, TARGETS))?;
            Ok((enc.to_encoding()?, tgt.to_targets()?))
        };
        load().with_context(|| {
            format!(
                "loading encoding of {} (run `encode` first)",
                scene_name(index)
            )
        })
    }

    pub fn encode_settings(&self) -> Result<EncodeSettings> {
        let rec: EncodeRecord = read_toml(&self.root.join(ENCODE_SETTINGS))?;
        if rec.format != ENCODE_FORMAT {
            bail!("unsupported encode record format `{}`", rec.format);
        }
        Ok(rec.settings)
    }

    pub fn remove_scene_file(&self, index: u64, name: &str) -> Result<()> {
        let path = self.scene_file(index, name);
        match fs::remove_file(&path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
                Err(e).with_context(|| format!("removing {}", path.display()))
            }
            _ => Ok(()),
        }
    }
}
