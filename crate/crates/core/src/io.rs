//! File formats.
//!
//! * model points: ASCII PLY, `vertex` element with `x y z` in meters
//! * depth: binary 16-bit PGM (`P5`, maxval 65535), millimeters, 0 = invalid
//! * mask: binary 8-bit PGM (`P5`, maxval 255), 255 = foreground, 0 = background
//! * poses, intrinsics, references, encodings, targets: TOML with shortest
//!   round-trip decimals
//! * tables: CSV whose first line is `#relpose:<kind>:v<N>`
//!
//! Depth is quantized as `round_half_even(d · 1000)` millimeters, so a read-back
//! depth is within 0.5 mm of the written one.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedPixel, GeoEncoding, GeoTargets, InputMode, TargetMode};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, RigidPose};
use crate::refpoint::{DepthMap, InstanceMask, RefStrategy, ReferencePoint};

/// Writes via a sibling temp file and rename so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// PLY

pub fn format_ply(points: &[Vector3<f64>]) -> String {
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        points.len()
    );
    for p in points {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    out
}

/// Line iterator that tracks the byte offset of each line start.
struct Lines<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.text.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.text[start..];
        let (line, adv) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.pos += adv;
        Some((start, line.trim_end_matches('\r')))
    }
}

pub fn parse_ply(text: &str) -> Result<Vec<Vector3<f64>>> {
    const WHAT: &str = "ply";
    let mut lines = Lines { text, pos: 0 };
    match lines.next_line() {
        Some((_, "ply")) => {}
        _ => return Err(Error::parse(WHAT, 0, "missing `ply` magic")),
    }
    // (name, count, property names)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut saw_format = false;
    loop {
        let (off, line) = lines
            .next_line()
            .ok_or_else(|| Error::parse(WHAT, text.len(), "header ended before end_header"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => saw_format = true,
            ["format", other, ..] => {
                return Err(Error::parse(
                    WHAT,
                    off,
                    format!("unsupported format `{other}`"),
                ))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse::<usize>()
                    .map_err(|_| Error::parse(WHAT, off, format!("bad element count `{count}`")))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(WHAT, off, "property before element"))?;
                if el.0 == "vertex" {
                    return Err(Error::parse(
                        WHAT,
                        off,
                        "list properties on vertex are not supported",
                    ));
                }
                el.2.push(toks.last().unwrap().to_string());
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(WHAT, off, "property before element"))?;
                el.2.push(name.to_string());
            }
            ["end_header"] => break,
            _ => {
                return Err(Error::parse(
                    WHAT,
                    off,
                    format!("unexpected header line `{line}`"),
                ))
            }
        }
    }
    if !saw_format {
        return Err(Error::parse(WHAT, 0, "missing format line"));
    }
    let mut points = Vec::new();
    for (name, count, props) in &elements {
        if name != "vertex" {
            for _ in 0..*count {
                lines.next_line().ok_or_else(|| {
                    Error::parse(WHAT, text.len(), format!("truncated `{name}` element"))
                })?;
            }
            continue;
        }
        let idx = |axis: &str| {
            props
                .iter()
                .position(|p| p == axis)
                .ok_or_else(|| Error::parse(WHAT, 0, format!("vertex has no `{axis}` property")))
        };
        let (ix, iy, iz) = (idx("x")?, idx("y")?, idx("z")?);
        for _ in 0..*count {
            let (off, line) = lines
                .next_line()
                .ok_or_else(|| Error::parse(WHAT, text.len(), "truncated vertex data"))?;
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != props.len() {
                return Err(Error::parse(
                    WHAT,
                    off,
                    format!("expected {} values, got {}", props.len(), vals.len()),
                ));
            }
            let num = |i: usize| -> Result<f64> {
                vals[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(WHAT, off, format!("bad number `{}`", vals[i])))
            };
            points.push(Vector3::new(num(ix)?, num(iy)?, num(iz)?));
        }
    }
    Ok(points)
}

pub fn write_ply(path: &Path, points: &[Vector3<f64>]) -> Result<()> {
    write_atomic(path, format_ply(points).as_bytes())
}

pub fn read_ply(path: &Path) -> Result<Vec<Vector3<f64>>> {
    parse_ply(&read_text(path)?)
}

// ---------------------------------------------------------------------------
// PGM

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_pgm_header(bytes: &[u8], what: &str) -> Result<PgmHeader> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::parse(what, 0, "missing `P5` magic"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(Error::parse(what, pos, "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(
                what,
                pos,
                format!("expected header field {}", i + 1),
            ));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::parse(what, start, "header number out of range"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::parse(
                what,
                pos,
                "expected single whitespace after maxval",
            ))
        }
    }
    let [w, h, maxval] = fields;
    if w == 0 || h == 0 {
        return Err(Error::parse(what, 2, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(
            what,
            pos,
            format!("maxval {maxval} out of range"),
        ));
    }
    Ok(PgmHeader {
        width: w as usize,
        height: h as usize,
        maxval,
        data_offset: pos,
    })
}

/// Millimeter quantization used by the depth format.
pub fn depth_to_mm(d: f64) -> Result<u16> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidDepth(d));
    }
    let mm = (d * 1000.0).round_ties_even();
    if mm > u16::MAX as f64 {
        return Err(Error::InvalidDepth(d));
    }
    Ok(mm as u16)
}

pub fn encode_depth_pgm(depth: &DepthMap<f64>) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n65535\n", depth.width(), depth.height()).into_bytes();
    out.reserve(depth.values().len() * 2);
    for &d in depth.values() {
        out.extend_from_slice(&depth_to_mm(d)?.to_be_bytes());
    }
    Ok(out)
}

pub fn decode_depth_pgm(bytes: &[u8]) -> Result<DepthMap<f64>> {
    const WHAT: &str = "depth pgm";
    let h = parse_pgm_header(bytes, WHAT)?;
    if h.maxval < 256 {
        return Err(Error::parse(
            WHAT,
            h.data_offset,
            "depth must be 16-bit (maxval > 255)",
        ));
    }
    let n = h.width * h.height;
    let need = h.data_offset + 2 * n;
    if bytes.len() < need {
        return Err(Error::parse(
            WHAT,
            bytes.len(),
            format!("truncated pixel data, need {need} bytes"),
        ));
    }
    if bytes.len() > need {
        return Err(Error::parse(WHAT, need, "trailing bytes after pixel data"));
    }
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let off = h.data_offset + 2 * i;
        let mm = u16::from_be_bytes([bytes[off], bytes[off + 1]]);
        if u32::from(mm) > h.maxval {
            return Err(Error::parse(
                WHAT,
                off,
                format!("value {mm} exceeds maxval {}", h.maxval),
            ));
        }
        values.push(f64::from(mm) / 1000.0);
    }
    DepthMap::new(h.width, h.height, values)
}

pub fn encode_mask_pgm(mask: &InstanceMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.values().iter().map(|&m| if m { 255u8 } else { 0 }));
    out
}

pub fn decode_mask_pgm(bytes: &[u8]) -> Result<InstanceMask> {
    const WHAT: &str = "mask pgm";
    let h = parse_pgm_header(bytes, WHAT)?;
    if h.maxval > 255 {
        return Err(Error::parse(WHAT, h.data_offset, "mask must be 8-bit"));
    }
    let n = h.width * h.height;
    let need = h.data_offset + n;
    if bytes.len() < need {
        return Err(Error::parse(
            WHAT,
            bytes.len(),
            format!("truncated pixel data, need {need} bytes"),
        ));
    }
    if bytes.len() > need {
        return Err(Error::parse(WHAT, need, "trailing bytes after pixel data"));
    }
    let values = bytes[h.data_offset..need]
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            0 => Ok(false),
            255 => Ok(true),
            other => Err(Error::parse(
                WHAT,
                h.data_offset + i,
                format!("mask value {other} is neither 0 nor 255"),
            )),
        })
        .collect::<Result<Vec<bool>>>()?;
    InstanceMask::new(h.width, h.height, values)
}

pub fn write_depth_pgm(path: &Path, depth: &DepthMap<f64>) -> Result<()> {
    write_atomic(path, &encode_depth_pgm(depth)?)
}

pub fn read_depth_pgm(path: &Path) -> Result<DepthMap<f64>> {
    decode_depth_pgm(&read_bytes(path)?)
}

pub fn write_mask_pgm(path: &Path, mask: &InstanceMask) -> Result<()> {
    write_atomic(path, &encode_mask_pgm(mask))
}

pub fn read_mask_pgm(path: &Path) -> Result<InstanceMask> {
    decode_mask_pgm(&read_bytes(path)?)
}

// ---------------------------------------------------------------------------
// Structured text records

pub fn to_toml<S: Serialize>(value: &S) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::parse("toml", 0, e.to_string()))
}

pub fn from_toml<D: DeserializeOwned>(text: &str, what: &str) -> Result<D> {
    toml::from_str(text).map_err(|e| {
        let offset = e.span().map(|s| s.start).unwrap_or(0);
        Error::parse(what, offset, e.message().to_string())
    })
}

pub fn write_toml<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    write_atomic(path, to_toml(value)?.as_bytes())
}

pub fn read_toml<D: DeserializeOwned>(path: &Path) -> Result<D> {
    from_toml(&read_text(path)?, &path.display().to_string())
}

fn check_format(found: &str, expected: &str, what: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::UnsupportedVersion {
            what: what.into(),
            found: found.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl IntrinsicsRecord {
    pub fn to_intrinsics(&self) -> Result<CameraIntrinsics<f64>> {
        CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy)
    }
}

impl From<&CameraIntrinsics<f64>> for IntrinsicsRecord {
    fn from(k: &CameraIntrinsics<f64>) -> Self {
        Self {
            fx: k.fx(),
            fy: k.fy(),
            cx: k.cx(),
            cy: k.cy(),
        }
    }
}

/// Rotation stored row by row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl PoseRecord {
    pub fn to_pose(&self) -> Result<RigidPose<f64>> {
        let r = self.rotation;
        RigidPose::new(
            Matrix3::new(
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ),
            Vector3::from(self.translation),
        )
    }
}

impl From<&RigidPose<f64>> for PoseRecord {
    fn from(p: &RigidPose<f64>) -> Self {
        let r = p.rotation();
        Self {
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: (*p.translation()).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRecord {
    pub x0: f64,
    pub y0: f64,
    pub d0: f64,
    pub strategy: String,
}

impl ReferenceRecord {
    pub fn to_reference(&self) -> Result<ReferencePoint<f64>> {
        ReferencePoint::new(
            self.x0,
            self.y0,
            self.d0,
            self.strategy.parse::<RefStrategy>()?,
        )
    }
}

impl From<&ReferencePoint<f64>> for ReferenceRecord {
    fn from(r: &ReferencePoint<f64>) -> Self {
        Self {
            x0: r.x0,
            y0: r.y0,
            d0: r.d0,
            strategy: r.strategy.name().to_string(),
        }
    }
}

pub const ENCODING_FORMAT: &str = "relpose-encoding/v1";
pub const TARGETS_FORMAT: &str = "relpose-targets/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelRecord {
    pub u: usize,
    pub v: usize,
    pub xyd: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dd0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0_over_dd0: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_uv: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgb: Option<[u8; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingFile {
    pub format: String,
    pub mode: String,
    pub reference: ReferenceRecord,
    pub pixels: Vec<PixelRecord>,
}

impl From<&GeoEncoding<f64>> for EncodingFile {
    fn from(enc: &GeoEncoding<f64>) -> Self {
        Self {
            format: ENCODING_FORMAT.into(),
            mode: enc.mode.name().into(),
            reference: (&enc.reference).into(),
            pixels: enc
                .pixels
                .iter()
                .map(|p| PixelRecord {
                    u: p.u,
                    v: p.v,
                    xyd: p.xyd.into(),
                    dd0: p.dd0,
                    t0_over_dd0: p.t0_over_dd0.map(Into::into),
                    delta_uv: p.delta_uv.map(|(a, b)| [a, b]),
                    rgb: p.rgb,
                })
                .collect(),
        }
    }
}

impl EncodingFile {
    pub fn to_encoding(&self) -> Result<GeoEncoding<f64>> {
        check_format(&self.format, ENCODING_FORMAT, "encoding")?;
        Ok(GeoEncoding {
            mode: self.mode.parse::<InputMode>()?,
            reference: self.reference.to_reference()?,
            pixels: self
                .pixels
                .iter()
                .map(|p| EncodedPixel {
                    u: p.u,
                    v: p.v,
                    xyd: Vector3::from(p.xyd),
                    dd0: p.dd0,
                    t0_over_dd0: p.t0_over_dd0.map(Vector3::from),
                    delta_uv: p.delta_uv.map(|[a, b]| (a, b)),
                    rgb: p.rgb,
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsFile {
    pub format: String,
    pub mode: String,
    pub delta_t: [f64; 3],
    pub abc: Vec<[f64; 3]>,
}

impl From<&GeoTargets<f64>> for TargetsFile {
    fn from(t: &GeoTargets<f64>) -> Self {
        Self {
            format: TARGETS_FORMAT.into(),
            mode: t.mode.name().into(),
            delta_t: t.delta_t.into(),
            abc: t.abc.iter().map(|v| (*v).into()).collect(),
        }
    }
}

impl TargetsFile {
    pub fn to_targets(&self) -> Result<GeoTargets<f64>> {
        check_format(&self.format, TARGETS_FORMAT, "targets")?;
        Ok(GeoTargets {
            mode: self.mode.parse::<TargetMode>()?,
            delta_t: Vector3::from(self.delta_t),
            abc: self.abc.iter().map(|v| Vector3::from(*v)).collect(),
        })
    }
}

// ---------------------------------------------------------------------------
// Versioned CSV

pub const CSV_VERSION: u32 = 1;

fn csv_tag(kind: &str) -> String {
    format!("#relpose:{kind}:v{CSV_VERSION}")
}

/// Serializes rows under a version line.
pub fn format_csv<R: Serialize>(kind: &str, rows: &[R]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::parse(kind, 0, e.to_string()))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Error::parse(kind, 0, e.to_string()))?;
    let mut out = csv_tag(kind);
    out.push('\n');
    out.push_str(std::str::from_utf8(&body).expect("csv writer emits utf-8"));
    Ok(out)
}

pub fn parse_csv<R: DeserializeOwned>(kind: &str, text: &str) -> Result<Vec<R>> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let first = first.trim_end_matches('\r');
    let expected_prefix = format!("#relpose:{kind}:v");
    match first.strip_prefix(&expected_prefix) {
        Some(v) if v == CSV_VERSION.to_string() => {}
        _ => {
            return Err(Error::UnsupportedVersion {
                what: format!("{kind} csv"),
                found: first.to_string(),
            })
        }
    }
    let base = first.len() + 1;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(rest.as_bytes());
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| {
                let offset = e.position().map(|p| p.byte() as usize).unwrap_or(0) + base;
                Error::parse(format!("{kind} csv"), offset, e.to_string())
            })
        })
        .collect()
}

pub fn write_csv<R: Serialize>(path: &Path, kind: &str, rows: &[R]) -> Result<()> {
    write_atomic(path, format_csv(kind, rows)?.as_bytes())
}

pub fn read_csv<R: DeserializeOwned>(path: &Path, kind: &str) -> Result<Vec<R>> {
    parse_csv(kind, &read_text(path)?)
}

/// One evaluated scene. Metric fields are empty when no prediction exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scene: String,
    pub add: Option<f64>,
    pub add_s: Option<f64>,
    pub add_selective: Option<f64>,
    pub rotation_error: Option<f64>,
    pub translation_error: Option<f64>,
    pub solver_residual: Option<f64>,
    pub flags: String,
}

pub const RESULTS_CSV: &str = "results";
