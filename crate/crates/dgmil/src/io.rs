//! Feature-file formats.
//!
//! Two interchangeable on-disk representations:
//!
//! * DGMF v1 binary (fast path). Little-endian layout:
//!   bytes 0-3 magic `DGMF`, byte 4 version (1), then `u32 n_instances`,
//!   `u32 dim`, `u32 n_bags`; a bag table of `n_bags × (u32 bag_id,
//!   u8 bag_label)`; then `n_instances × (u32 bag_id, u8 instance_label,
//!   dim × f32 features)` with 255 meaning "label unknown".
//! * CSV (interop path) with header `bag_id,bag_label,instance_label,f0,...`
//!   where an empty `instance_label` means unknown.
//!
//! Features are f32 on disk and widened to f64 in memory, so a read/write
//! round trip is bit-exact. [`read_feature_file`] sniffs the format from the
//! leading bytes and always returns a dataset that passes validation.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::{validate_dataset, Bag, BagLabel, BagTable, Dataset, InstanceLabel, InstanceSet};
use crate::error::{Error, Result};
use crate::linalg::Mat;

const MAGIC: &[u8; 4] = b"DGMF";
const VERSION: u8 = 1;

/// Read a DGMF or CSV feature file. The returned dataset is fully validated.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dataset = if bytes.len() >= MAGIC.len() && &bytes[..MAGIC.len()] == MAGIC {
        parse_binary(path, &bytes)?
    } else {
        parse_csv(path, &bytes)?
    };
    let report = validate_dataset(&dataset.instances, &dataset.bags);
    if let Some(first) = report.first() {
        return Err(Error::InvalidData(format!(
            "{}: {} ({} violation(s) total)",
            path.display(),
            first,
            report.len()
        )));
    }
    Ok(dataset)
}

/// Write the DGMF v1 binary layout. Rejects datasets that fail validation and
/// never leaves a partial file behind (write to temp, atomic rename).
pub fn write_feature_file(
    instances: &InstanceSet,
    bags: &BagTable,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let report = validate_dataset(instances, bags);
    if let Some(first) = report.first() {
        return Err(Error::InvalidData(format!(
            "refusing to write {}: {} ({} violation(s) total)",
            path.display(),
            first,
            report.len()
        )));
    }
    let bytes = encode_binary(instances, bags);
    write_atomic(path, &bytes)
}

/// Write the CSV representation (same validation and atomicity as the binary
/// writer).
pub fn write_feature_csv(
    instances: &InstanceSet,
    bags: &BagTable,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let report = validate_dataset(instances, bags);
    if let Some(first) = report.first() {
        return Err(Error::InvalidData(format!(
            "refusing to write {}: {} ({} violation(s) total)",
            path.display(),
            first,
            report.len()
        )));
    }
    let mut out = Vec::new();
    let d = instances.dim();
    let mut header = String::from("bag_id,bag_label,instance_label");
    for j in 0..d {
        header.push_str(&format!(",f{j}"));
    }
    out.extend_from_slice(header.as_bytes());
    out.push(b'\n');
    for i in 0..instances.len() {
        let bag = &bags.bags[instances.bag_of[i]];
        let label = match instances.labels[i] {
            InstanceLabel::Unknown => String::new(),
            other => other.to_code().to_string(),
        };
        let mut line = format!("{},{},{}", bag.id, bag.label.to_code(), label);
        for v in instances.features.row(i) {
            line.push(',');
            line.push_str(&v.to_string());
        }
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

/// Write bytes through a temp file in the same directory, then rename, so a
/// failure mid-write never leaves a truncated primary output.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)
}

fn encode_binary(instances: &InstanceSet, bags: &BagTable) -> Vec<u8> {
    let n = instances.len();
    let d = instances.dim();
    let mut out = Vec::with_capacity(17 + bags.len() * 5 + n * (5 + 4 * d));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(bags.len() as u32).to_le_bytes());
    for bag in &bags.bags {
        out.extend_from_slice(&bag.id.to_le_bytes());
        out.push(bag.label.to_code());
    }
    for i in 0..n {
        let bag = &bags.bags[instances.bag_of[i]];
        out.extend_from_slice(&bag.id.to_le_bytes());
        out.push(instances.labels[i].to_code());
        for &v in instances.features.row(i) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Byte cursor that reports the offset of the first missing byte on underrun.
struct Cursor<'a> {
    buf: &'a [u8],
    off: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.off + n > self.buf.len() {
            return Err(Error::Corrupt {
                path: self.path.to_path_buf(),
                offset: self.buf.len(),
                detail: format!(
                    "truncated while reading {what}: need {} byte(s) at offset {}",
                    n, self.off
                ),
            });
        }
        let s = &self.buf[self.off..self.off + n];
        self.off += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<Dataset> {
    // Header problems are format errors; once the header checks out, any
    // shortfall is corruption and is reported with its byte offset.
    if bytes.len() < MAGIC.len() + 1 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            detail: "file too short for magic and version".into(),
        });
    }
    let version = bytes[MAGIC.len()];
    if version != VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            detail: format!("unsupported version {version} (expected {VERSION})"),
        });
    }
    let mut cur = Cursor {
        buf: bytes,
        off: MAGIC.len() + 1,
        path,
    };
    let n = cur.u32("instance count")? as usize;
    let d = cur.u32("feature dimension")? as usize;
    let n_bags = cur.u32("bag count")? as usize;

    let mut bags = Vec::with_capacity(n_bags);
    let mut id_to_index = HashMap::with_capacity(n_bags);
    for b in 0..n_bags {
        let id = cur.u32("bag id")?;
        let code = cur.u8("bag label")?;
        let label = BagLabel::from_code(code).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            detail: format!("bag {b}: invalid bag label {code}"),
        })?;
        if id_to_index.insert(id, b).is_some() {
            return Err(Error::InvalidData(format!(
                "{}: bag id {id} appears more than once",
                path.display()
            )));
        }
        bags.push(Bag {
            id,
            label,
            instances: Vec::new(),
        });
    }

    let mut data = Vec::with_capacity(n * d);
    let mut bag_of = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let id = cur.u32("instance bag id")?;
        let code = cur.u8("instance label")?;
        let label = InstanceLabel::from_code(code).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            detail: format!("instance {i}: invalid instance label {code}"),
        })?;
        let &bag_index = id_to_index.get(&id).ok_or_else(|| {
            Error::InvalidData(format!(
                "{}: instance {i} references unknown bag id {id}",
                path.display()
            ))
        })?;
        for j in 0..d {
            let v = cur.f32("feature value")? as f64;
            if !v.is_finite() {
                return Err(Error::InvalidData(format!(
                    "{}: instance {i} has a non-finite feature in column {j}",
                    path.display()
                )));
            }
            data.push(v);
        }
        bags[bag_index].instances.push(i);
        bag_of.push(bag_index);
        labels.push(label);
    }
    if cur.off != bytes.len() {
        return Err(Error::Corrupt {
            path: path.to_path_buf(),
            offset: cur.off,
            detail: format!("{} trailing byte(s) after last record", bytes.len() - cur.off),
        });
    }

    Ok(Dataset {
        instances: InstanceSet {
            features: Mat::from_vec(n, d, data),
            bag_of,
            labels,
        },
        bags: BagTable { bags },
    })
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<Dataset> {
    let format_err = |detail: String| Error::Format {
        path: path.to_path_buf(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| format_err(format!("cannot read CSV header: {e}")))?
        .clone();
    if headers.len() < 4
        || headers.get(0) != Some("bag_id")
        || headers.get(1) != Some("bag_label")
        || headers.get(2) != Some("instance_label")
    {
        return Err(format_err(
            "expected CSV header `bag_id,bag_label,instance_label,f0,...`".into(),
        ));
    }
    let d = headers.len() - 3;
    for j in 0..d {
        if headers.get(3 + j) != Some(format!("f{j}").as_str()) {
            return Err(format_err(format!(
                "feature column {} is named `{}`, expected `f{j}`",
                3 + j,
                headers.get(3 + j).unwrap_or("")
            )));
        }
    }

    let mut data = Vec::new();
    let mut bag_of = Vec::new();
    let mut labels = Vec::new();
    let mut bags: Vec<Bag> = Vec::new();
    let mut id_to_index: HashMap<u32, usize> = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(format_err(format!(
                "row {row}: {} field(s), expected {}",
                record.len(),
                headers.len()
            )));
        }
        let bag_id: u32 = record[0]
            .parse()
            .map_err(|_| format_err(format!("row {row}: bad bag_id `{}`", &record[0])))?;
        let bag_label = record[1]
            .parse::<u8>()
            .ok()
            .and_then(BagLabel::from_code)
            .ok_or_else(|| format_err(format!("row {row}: bad bag_label `{}`", &record[1])))?;
        let label = if record[2].is_empty() {
            InstanceLabel::Unknown
        } else {
            record[2]
                .parse::<u8>()
                .ok()
                .and_then(InstanceLabel::from_code)
                .ok_or_else(|| {
                    format_err(format!("row {row}: bad instance_label `{}`", &record[2]))
                })?
        };
        let bag_index = match id_to_index.get(&bag_id) {
            Some(&b) => {
                if bags[b].label != bag_label {
                    return Err(format_err(format!(
                        "row {row}: bag {bag_id} label conflicts with an earlier row"
                    )));
                }
                b
            }
            None => {
                let b = bags.len();
                id_to_index.insert(bag_id, b);
                bags.push(Bag {
                    id: bag_id,
                    label: bag_label,
                    instances: Vec::new(),
                });
                b
            }
        };
        for j in 0..d {
            let v: f64 = record[3 + j]
                .parse()
                .map_err(|_| format_err(format!("row {row}: bad feature `{}`", &record[3 + j])))?;
            data.push(v);
        }
        let i = bag_of.len();
        bags[bag_index].instances.push(i);
        bag_of.push(bag_index);
        labels.push(label);
    }
    let n = bag_of.len();
    if n == 0 {
        return Err(format_err("CSV has a header but no data rows".into()));
    }

    Ok(Dataset {
        instances: InstanceSet {
            features: Mat::from_vec(n, d, data),
            bag_of,
            labels,
        },
        bags: BagTable { bags },
    })
}
