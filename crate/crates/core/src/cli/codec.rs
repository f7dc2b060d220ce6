//! On-disk formats.
//!
//! Tensor files (`.f64t`):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "SPTD"
//! 4       4           u32 LE version = 1
//! 8       4           u32 LE ndim ∈ {2, 3}
//! 12      8·ndim      u64 LE dimensions (M, N[, K])
//! ...     8·∏dims     f64 LE values, row-major, k fastest
//! ```
//!
//! Images may also be plain CSV, one image row per line. Detections and
//! ground truth are CSV with headers `row,col,pseudo_likelihood` and
//! `row,col`.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::detection::{Detection, DetectionList};
use crate::error::{Error, Result};
use crate::evaluation::{GroundTruth, GtPoint};
use crate::tensor::{Image, Volume};

pub const MAGIC: &[u8; 4] = b"SPTD";
pub const VERSION: u32 = 1;
pub const DETECTIONS_HEADER: &str = "row,col,pseudo_likelihood";
pub const GROUND_TRUTH_HEADER: &str = "row,col";

/// A decoded tensor file.
#[derive(Clone, Debug, PartialEq)]
pub enum Tensor {
    Image(Image),
    Volume(Volume),
}

fn encode(dims: &[usize], values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * dims.len() + 8 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_image(img: &Image) -> Vec<u8> {
    encode(&[img.rows(), img.cols()], img.as_slice())
}

pub fn encode_volume(v: &Volume) -> Vec<u8> {
    encode(&[v.rows(), v.cols(), v.depth()], v.as_slice())
}

fn need(bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

fn u64_at(bytes: &[u8], offset: usize) -> u64 {
    u64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"))
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let parse = |offset: usize, message: String| Error::Parse { offset, message };

    need(bytes, 4)?;
    if &bytes[..4] != MAGIC {
        return Err(parse(0, format!("bad magic {:?}, expected \"SPTD\"", &bytes[..4])));
    }
    need(bytes, 12)?;
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(parse(4, format!("unsupported version {version}, expected {VERSION}")));
    }
    let ndim = u32_at(bytes, 8) as usize;
    if ndim != 2 && ndim != 3 {
        return Err(parse(8, format!("ndim must be 2 or 3, got {ndim}")));
    }
    let header = 12 + 8 * ndim;
    need(bytes, header)?;

    let mut dims = Vec::with_capacity(ndim);
    let mut count: usize = 1;
    for i in 0..ndim {
        let offset = 12 + 8 * i;
        let d = u64_at(bytes, offset);
        if d == 0 {
            return Err(parse(offset, format!("dimension {i} is zero")));
        }
        let d = usize::try_from(d).map_err(|_| parse(offset, format!("dimension {i} = {d} too large")))?;
        count = count
            .checked_mul(d)
            .filter(|c| c.checked_mul(8).and_then(|b| b.checked_add(header)).is_some())
            .ok_or_else(|| parse(offset, "tensor size overflows".into()))?;
        dims.push(d);
    }

    let expected = header + 8 * count;
    need(bytes, expected)?;
    if bytes.len() > expected {
        return Err(parse(
            expected,
            format!("{} trailing bytes after {expected}-byte tensor", bytes.len() - expected),
        ));
    }

    let values: Vec<f64> = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(parse(header + 8 * i, format!("non-finite value {}", values[i])));
    }

    Ok(match ndim {
        2 => Tensor::Image(Image::new(dims[0], dims[1], values)?),
        _ => Tensor::Volume(Volume::new(dims[0], dims[1], dims[2], values)?),
    })
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_tensor(&bytes)
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    Ok(fs::write(path, encode_image(img))?)
}

pub fn write_volume(path: &Path, v: &Volume) -> Result<()> {
    Ok(fs::write(path, encode_volume(v))?)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a 2-D tensor file, or a CSV image if the extension is `.csv`.
pub fn read_image(path: &Path) -> Result<Image> {
    if is_csv(path) {
        return parse_image_csv(&fs::read_to_string(path)?);
    }
    match read_tensor(path)? {
        Tensor::Image(img) => Ok(img),
        Tensor::Volume(v) => Err(Error::Malformed {
            what: path.display().to_string(),
            message: format!("expected a 2-D image, found a {:?} volume", v.shape()),
        }),
    }
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    match read_tensor(path)? {
        Tensor::Volume(v) => Ok(v),
        Tensor::Image(img) => Err(Error::Malformed {
            what: path.display().to_string(),
            message: format!("expected a 3-D volume, found a {:?} image", img.shape()),
        }),
    }
}

/// Plain decimal CSV, one image row per line. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn image_to_csv(img: &Image) -> String {
    let mut s = String::new();
    for m in 0..img.rows() {
        let row: Vec<String> = img.row(m).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_image_csv(text: &str) -> Result<Image> {
    let malformed = |message: String| Error::Malformed {
        what: "image CSV".into(),
        message,
    };
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| malformed(format!("line {}: {f:?}: {e}", line_no + 1)))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(malformed(format!(
                    "line {}: expected {c} values, found {}",
                    line_no + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| malformed("empty image".into()))?;
    Image::new(rows, cols, data)
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &str, what: &str) -> Result<()> {
    let found = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != expected {
        return Err(Error::Malformed {
            what: what.into(),
            message: format!("header must be exactly `{expected}`, found `{found}`"),
        });
    }
    Ok(())
}

pub fn detections_to_csv(dets: &DetectionList) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DETECTIONS_HEADER.split(','))?;
    for d in dets {
        w.write_record(&[d.row.to_string(), d.col.to_string(), d.pseudo_likelihood.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii"))
}

/// Parses a detections CSV. An entirely empty file means no detections.
pub fn parse_detections_csv(text: &str) -> Result<DetectionList> {
    if text.trim().is_empty() {
        return Ok(DetectionList::default());
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    check_header(&mut rdr, DETECTIONS_HEADER, "detections CSV")?;
    let dets = rdr
        .deserialize::<Detection>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some(i) = dets
        .iter()
        .position(|d| !(d.row.is_finite() && d.col.is_finite() && d.pseudo_likelihood >= 0.0))
    {
        return Err(Error::Malformed {
            what: "detections CSV".into(),
            message: format!("record {}: invalid coordinates or negative pseudo-likelihood", i + 1),
        });
    }
    Ok(DetectionList::new(dets))
}

pub fn ground_truth_to_csv(gt: &GroundTruth) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(GROUND_TRUTH_HEADER.split(','))?;
    for p in gt.points() {
        w.write_record(&[p.row.to_string(), p.col.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii"))
}

pub fn parse_ground_truth_csv(text: &str) -> Result<GroundTruth> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    check_header(&mut rdr, GROUND_TRUTH_HEADER, "ground-truth CSV")?;
    let pts = rdr
        .deserialize::<GtPoint>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    GroundTruth::new(pts)
}

pub fn write_detections(path: &Path, dets: &DetectionList) -> Result<()> {
    Ok(fs::write(path, detections_to_csv(dets)?)?)
}

pub fn read_detections(path: &Path) -> Result<DetectionList> {
    parse_detections_csv(&fs::read_to_string(path)?)
}

pub fn write_ground_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    Ok(fs::write(path, ground_truth_to_csv(gt)?)?)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    parse_ground_truth_csv(&fs::read_to_string(path)?)
}
