//! IDX image/label files as used by MNIST.

use std::fs;
use std::path::Path;

use pdpsgd_core::LabeledDataset;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// A decoded image/label pair. Features are pixels scaled to `[0, 1]`, user
/// ids are example indices.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxData {
    pub rows: u32,
    pub cols: u32,
    pub dataset: LabeledDataset,
}

fn format_err(file: &str, offset: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        file: file.to_string(),
        offset,
        message: msg.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, file: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err(file, bytes.len(), "file ends inside the header"))
}

fn check_magic(bytes: &[u8], expected: u32, file: &str) -> Result<()> {
    let magic = read_u32(bytes, 0, file)?;
    if magic != expected {
        return Err(format_err(file, 0, format!("magic {magic:#010x}, expected {expected:#010x}")));
    }
    Ok(())
}

fn check_body(bytes: &[u8], header: usize, body: u64, file: &str) -> Result<()> {
    let have = (bytes.len() - header) as u64;
    if have < body {
        return Err(format_err(file, bytes.len(), format!("truncated: {body} data bytes declared, {have} present")));
    }
    if have > body {
        return Err(format_err(file, header + body as usize, "trailing bytes after the declared data"));
    }
    Ok(())
}

pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<IdxData> {
    check_magic(images, IMAGES_MAGIC, "images")?;
    let n = read_u32(images, 4, "images")?;
    let rows = read_u32(images, 8, "images")?;
    let cols = read_u32(images, 12, "images")?;
    let dim = rows as u64 * cols as u64;
    if dim == 0 {
        return Err(format_err("images", 8, "zero-sized images"));
    }
    check_body(images, 16, n as u64 * dim, "images")?;

    check_magic(labels, LABELS_MAGIC, "labels")?;
    let n_labels = read_u32(labels, 4, "labels")?;
    if n_labels != n {
        return Err(format_err("labels", 4, format!("{n_labels} labels for {n} images")));
    }
    check_body(labels, 8, n as u64, "labels")?;

    let features: Vec<f64> = images[16..].iter().map(|&p| f64::from(p) / 255.0).collect();
    let label_vec: Vec<usize> = labels[8..].iter().map(|&l| usize::from(l)).collect();
    let classes = label_vec.iter().max().map_or(1, |m| m + 1);
    let dataset = LabeledDataset::with_index_users(features, label_vec, dim as usize, classes)?;
    Ok(IdxData { rows, cols, dataset })
}

pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<IdxData> {
    let read = |p: &Path| fs::read(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    parse_idx(&read(images.as_ref())?, &read(labels.as_ref())?)
}

/// Encodes images and labels; features are rounded back to bytes.
pub fn encode_idx(data: &IdxData) -> Result<(Vec<u8>, Vec<u8>)> {
    let ds = &data.dataset;
    if data.rows as usize * data.cols as usize != ds.dim() {
        return Err(Error::Usage(format!(
            "{}x{} images do not match dimension {}",
            data.rows,
            data.cols,
            ds.dim()
        )));
    }
    let n = u32::try_from(ds.len()).map_err(|_| Error::Usage("too many examples for IDX".into()))?;
    let mut images = Vec::with_capacity(16 + ds.features().len());
    for word in [IMAGES_MAGIC, n, data.rows, data.cols] {
        images.extend_from_slice(&word.to_be_bytes());
    }
    images.extend(ds.features().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    let mut labels = Vec::with_capacity(8 + ds.len());
    labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&n.to_be_bytes());
    for &l in ds.labels() {
        labels.push(u8::try_from(l).map_err(|_| Error::Usage(format!("label {l} does not fit a byte")))?);
    }
    Ok((images, labels))
}

pub fn write_idx(data: &IdxData, images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<()> {
    let (img, lab) = encode_idx(data)?;
    crate::output::write_atomic(images.as_ref(), &img)?;
    crate::output::write_atomic(labels.as_ref(), &lab)
}
