//! Dataset file formats.
//!
//! EVDS is a little-endian binary format that round-trips features
//! bit-exactly:
//!
//! ```text
//! magic "EVDS" | u16 version = 1 | u32 n | u32 d | u32 C
//! n*d f64 features, row-major | n u32 labels | u8 tag_len | tag bytes
//! ```
//!
//! CSV uses a `f0,...,f{d-1},label` header; floats are written in Rust's
//! shortest round-trip form, so values also survive a save/load cycle
//! exactly.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{EvError, Result};
use crate::scalar::{to_f64, Real};

use super::EmbeddingDataset;

const MAGIC: [u8; 4] = *b"EVDS";
const VERSION: u16 = 1;
const HEADER_LEN: u64 = 4 + 2 + 4 + 4 + 4;

/// Saves a dataset in the EVDS binary format.
pub fn save_evds<T: Real>(dataset: &EmbeddingDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let tag = dataset.domain_tag().as_bytes();
    if tag.len() > u8::MAX as usize {
        return Err(EvError::invalid(format!(
            "domain tag of {} bytes exceeds the 255-byte format limit",
            tag.len()
        )));
    }
    let mut buf: Vec<u8> = Vec::with_capacity(
        HEADER_LEN as usize + dataset.n() * dataset.d() * 8 + dataset.n() * 4 + 1 + tag.len(),
    );
    buf.extend_from_slice(&MAGIC);
    buf.write_u16::<LittleEndian>(VERSION)?;
    buf.write_u32::<LittleEndian>(dataset.n() as u32)?;
    buf.write_u32::<LittleEndian>(dataset.d() as u32)?;
    buf.write_u32::<LittleEndian>(dataset.num_classes() as u32)?;
    for &x in dataset.features() {
        buf.write_f64::<LittleEndian>(to_f64(x))?;
    }
    for &label in dataset.labels() {
        buf.write_u32::<LittleEndian>(label)?;
    }
    buf.push(tag.len() as u8);
    buf.extend_from_slice(tag);
    fs::write(path, buf)?;
    Ok(())
}

/// Loads an EVDS file.
pub fn load_evds<T: Real>(path: impl AsRef<Path>) -> Result<EmbeddingDataset<T>> {
    let bytes = fs::read(path)?;
    let actual = bytes.len() as u64;
    if actual < HEADER_LEN {
        return Err(EvError::TruncatedFile {
            expected: HEADER_LEN,
            actual,
        });
    }
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&bytes[..4]);
    if magic != MAGIC {
        return Err(EvError::BadMagic { found: magic });
    }
    let mut cursor = Cursor::new(&bytes[4..]);
    let version = cursor.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(EvError::BadVersion { found: version });
    }
    let n = cursor.read_u32::<LittleEndian>()? as u64;
    let d = cursor.read_u32::<LittleEndian>()? as u64;
    let classes = cursor.read_u32::<LittleEndian>()? as u64;
    if n == 0 || d == 0 || classes == 0 {
        return Err(EvError::invalid("EVDS header has a zero count field"));
    }

    // Validate the full payload size before allocating anything.
    let body = HEADER_LEN + n * d * 8 + n * 4 + 1;
    if actual < body {
        return Err(EvError::TruncatedFile {
            expected: body,
            actual,
        });
    }
    let tag_len = bytes[(body - 1) as usize] as u64;
    let expected = body + tag_len;
    if actual < expected {
        return Err(EvError::TruncatedFile { expected, actual });
    }
    if actual > expected {
        return Err(EvError::invalid(format!(
            "EVDS file has {} trailing bytes",
            actual - expected
        )));
    }

    let (n, d, classes) = (n as usize, d as usize, classes as usize);
    let mut features = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        let x = cursor.read_f64::<LittleEndian>()?;
        features.push(T::from_f64(x).ok_or_else(|| EvError::NonFinite {
            context: "EVDS feature conversion".to_string(),
        })?);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(cursor.read_u32::<LittleEndian>()?);
    }
    let tag_start = body as usize;
    let tag = std::str::from_utf8(&bytes[tag_start..tag_start + tag_len as usize])
        .map_err(|_| EvError::invalid("domain tag is not valid UTF-8"))?;
    EmbeddingDataset::new(features, d, labels, classes, tag)
}

/// Saves a dataset as CSV with a `f0,...,f{d-1},label` header.
///
/// The domain tag and class count are not representable in CSV; loading
/// infers `num_classes` as `max(label) + 1`.
pub fn save_csv<T: Real>(dataset: &EmbeddingDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for c in 0..dataset.d() {
        out.push_str(&format!("f{c},"));
    }
    out.push_str("label\n");
    for r in 0..dataset.n() {
        for &x in dataset.row(r) {
            out.push_str(&format!("{},", to_f64(x)));
        }
        out.push_str(&format!("{}\n", dataset.label(r)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a CSV dataset written by [`save_csv`] (or matching its header).
pub fn load_csv<T: Real>(path: impl AsRef<Path>) -> Result<EmbeddingDataset<T>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| EvError::invalid("empty CSV file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || *cols.last().unwrap() != "label" {
        return Err(EvError::invalid(
            "CSV header must be f0,...,f{d-1},label".to_string(),
        ));
    }
    let d = cols.len() - 1;
    for (c, name) in cols[..d].iter().enumerate() {
        if *name != format!("f{c}") {
            return Err(EvError::invalid(format!(
                "unexpected CSV column {name:?} at position {c}"
            )));
        }
    }

    let mut features: Vec<T> = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    for (line_idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(EvError::RaggedRows {
                line: line_idx + 1,
                expected: d + 1,
                got: fields.len(),
            });
        }
        for field in &fields[..d] {
            let x: f64 = field.parse().map_err(|_| EvError::ParseField {
                line: line_idx + 1,
                field: field.to_string(),
            })?;
            features.push(T::from_f64(x).ok_or_else(|| EvError::ParseField {
                line: line_idx + 1,
                field: field.to_string(),
            })?);
        }
        let label: u32 = fields[d].parse().map_err(|_| EvError::ParseField {
            line: line_idx + 1,
            field: fields[d].to_string(),
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(EvError::invalid("CSV file contains no data rows"));
    }
    let classes = labels.iter().copied().max().unwrap() as usize + 1;
    EmbeddingDataset::new(features, d, labels, classes, "")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn sample() -> EmbeddingDataset<f64> {
        EmbeddingDataset::new(
            vec![1.5, -2.25, 0.125, 3.0, 0.0, -1.0],
            2,
            vec![0, 2, 1],
            3,
            "unit",
        )
        .unwrap()
    }

    #[test]
    fn evds_round_trip_is_byte_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.evds");
        let ds = sample();
        save_evds(&ds, &path).unwrap();
        let back: EmbeddingDataset<f64> = load_evds(&path).unwrap();
        assert_eq!(back, ds);
        // Saving the reloaded dataset reproduces the same bytes.
        let path2 = dir.path().join("b.evds");
        save_evds(&back, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn csv_single_row() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("one.csv");
        fs::write(&path, "f0,f1,label\n1.0,0.0,1\n").unwrap();
        let ds: EmbeddingDataset<f64> = load_csv(&path).unwrap();
        assert_eq!(ds.n(), 1);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.label(0), 1);
        assert_eq!(ds.num_classes(), 2);
    }

    #[test]
    fn truncated_evds_reports_byte_counts() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.evds");
        save_evds(&sample(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();

        // Cut inside the domain tag: the expected size is the full file.
        fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        match load_evds::<f64>(&path) {
            Err(EvError::TruncatedFile { expected, actual }) => {
                assert_eq!(expected as usize, bytes.len());
                assert_eq!(actual as usize, bytes.len() - 2);
            }
            other => panic!("expected TruncatedFile, got {other:?}"),
        }

        // Cut inside the label block: expected covers everything up to and
        // including the tag-length byte.
        let body = bytes.len() - "unit".len();
        fs::write(&path, &bytes[..body - 9]).unwrap();
        match load_evds::<f64>(&path) {
            Err(EvError::TruncatedFile { expected, actual }) => {
                assert_eq!(expected as usize, body);
                assert_eq!(actual as usize, body - 9);
            }
            other => panic!("expected TruncatedFile, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.evds");
        fs::write(&path, b"NOPElonger-than-header-minimum").unwrap();
        assert!(matches!(
            load_evds::<f64>(&path),
            Err(EvError::BadMagic { .. })
        ));
    }

    #[test]
    fn ragged_csv_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, "f0,f1,label\n1.0,2.0,0\n1.0,0\n").unwrap();
        match load_csv::<f64>(&path) {
            Err(EvError::RaggedRows {
                line: 3,
                expected: 3,
                got: 2,
            }) => {}
            other => panic!("expected RaggedRows, got {other:?}"),
        }
    }

    #[test]
    fn label_out_of_range_in_evds() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("l.evds");
        save_evds(&sample(), &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // Patch the first label (right after the feature block) to 9.
        let offset = HEADER_LEN as usize + 6 * 8;
        bytes[offset..offset + 4].copy_from_slice(&9u32.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_evds::<f64>(&path),
            Err(EvError::LabelOutOfRange { label: 9, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn evds_round_trip_arbitrary(
            d in 1usize..6,
            labels in proptest::collection::vec(0u32..4, 1..20),
            raw in proptest::collection::vec(-1e9f64..1e9, 120),
            tag in "[a-z]{0,12}",
        ) {
            let n = labels.len();
            let features = raw[..n * d].to_vec();
            let ds = EmbeddingDataset::new(features, d, labels, 4, tag).unwrap();
            let dir = tempdir().unwrap();
            let path = dir.path().join("p.evds");
            save_evds(&ds, &path).unwrap();
            let back: EmbeddingDataset<f64> = load_evds(&path).unwrap();
            prop_assert_eq!(back, ds);
        }

        #[test]
        fn csv_round_trip_arbitrary(
            d in 1usize..5,
            labels in proptest::collection::vec(0u32..3, 1..12),
            raw in proptest::collection::vec(-1e6f64..1e6, 60),
        ) {
            let n = labels.len();
            let classes = labels.iter().copied().max().unwrap() as usize + 1;
            let ds = EmbeddingDataset::new(raw[..n * d].to_vec(), d, labels, classes, "").unwrap();
            let dir = tempdir().unwrap();
            let path = dir.path().join("p.csv");
            save_csv(&ds, &path).unwrap();
            let back: EmbeddingDataset<f64> = load_csv(&path).unwrap();
            prop_assert_eq!(back.features(), ds.features());
            prop_assert_eq!(back.labels(), ds.labels());
        }
    }
}
