//! A small self-describing on-disk grid format.
//!
//! Every array the toolkit persists — sinograms, chart fields, symbol grids,
//! depth profiles — is stored as two files:
//!
//! * the **payload** at the caller's path: nothing but little-endian IEEE 754
//!   64-bit floats in row-major order, complex values interleaved as
//!   `re, im`;
//! * a **sidecar header** at the same path with `.hdr` appended: one UTF-8
//!   JSON object describing the payload (dimensions, axis names and ranges,
//!   element type, free-form metadata such as the configuration echo).
//!
//! The payload stays flat and language-portable; the header stays diffable
//! and greppable. Reads are bit-exact inverses of writes: values round-trip
//! through raw byte copies, never through decimal text.
//!
//! Failure modes are first class: a payload whose byte count disagrees with
//! its header raises [`Error::TruncatedPayload`] naming both counts, and a
//! header that is not valid JSON raises [`Error::HeaderParse`] with the line
//! and column of the defect.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Axis;

/// Scalar layout of one grid element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementType {
    /// One `f64` per element.
    #[serde(rename = "f64")]
    Real,
    /// Two `f64`s per element, interleaved `re, im`.
    #[serde(rename = "c64")]
    Complex,
}

impl ElementType {
    /// Number of `f64` scalars per grid element.
    pub fn scalars_per_element(self) -> usize {
        match self {
            ElementType::Real => 1,
            ElementType::Complex => 2,
        }
    }
}

/// Name and coordinate range of one grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMeta {
    /// Axis label, e.g. `"x"`, `"lambda"`.
    pub name: String,
    /// Coordinate of the first node along this axis.
    pub lo: f64,
    /// Coordinate of the last node along this axis.
    pub hi: f64,
}

impl AxisMeta {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        AxisMeta {
            name: name.into(),
            lo,
            hi,
        }
    }

    /// Metadata for a node axis of the toolkit's uniform kind.
    pub fn of(name: impl Into<String>, axis: &Axis) -> Self {
        AxisMeta::new(name, axis.lo, axis.hi)
    }
}

/// Everything the sidecar header records about a payload.
///
/// `dims` and `axes` run in storage order: the **last** axis varies fastest
/// in the row-major payload. `meta` is free-form string metadata — drivers
/// put their configuration echo here — serialized in sorted key order so
/// that identical runs produce byte-identical headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    /// Extent of each axis, slowest-varying first. All positive.
    pub dims: Vec<usize>,
    /// One entry per dimension, in the same order as `dims`.
    pub axes: Vec<AxisMeta>,
    /// Scalar layout of one element.
    pub element: ElementType,
    /// Free-form metadata (configuration echo, provenance of the run).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl GridHeader {
    /// Header for a grid of real values.
    pub fn real(dims: Vec<usize>, axes: Vec<AxisMeta>) -> Self {
        GridHeader {
            dims,
            axes,
            element: ElementType::Real,
            meta: BTreeMap::new(),
        }
    }

    /// Header for a grid of complex values.
    pub fn complex(dims: Vec<usize>, axes: Vec<AxisMeta>) -> Self {
        GridHeader {
            dims,
            axes,
            element: ElementType::Complex,
            meta: BTreeMap::new(),
        }
    }

    /// Attach one metadata entry, builder style.
    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    /// Number of grid elements (product of `dims`).
    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of `f64` scalars in the payload.
    pub fn scalar_len(&self) -> usize {
        self.element_count() * self.element.scalars_per_element()
    }

    /// Exact payload size in bytes.
    pub fn payload_bytes(&self) -> u64 {
        self.scalar_len() as u64 * 8
    }

    /// Check the structural invariants: at least one dimension, every extent
    /// positive, one axis record per dimension, finite axis ranges.
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::validation("grid header needs at least one dimension"));
        }
        if let Some(k) = self.dims.iter().position(|&d| d == 0) {
            return Err(Error::validation(format!(
                "grid dimension {k} has extent 0; all extents must be positive"
            )));
        }
        if self.axes.len() != self.dims.len() {
            return Err(Error::validation(format!(
                "grid header lists {} axes for {} dimensions",
                self.axes.len(),
                self.dims.len()
            )));
        }
        for ax in &self.axes {
            if !(ax.lo.is_finite() && ax.hi.is_finite()) {
                return Err(Error::validation(format!(
                    "axis '{}' has a non-finite range [{}, {}]",
                    ax.name, ax.lo, ax.hi
                )));
            }
        }
        Ok(())
    }
}

/// Path of the sidecar header belonging to a payload path.
///
/// The `.hdr` suffix is appended to the full file name (`field.grid` pairs
/// with `field.grid.hdr`), so the payload name never loses information.
pub fn header_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".hdr");
    PathBuf::from(name)
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn header_parse(path: &Path, line: usize, column: usize, msg: impl Into<String>) -> Error {
    Error::HeaderParse {
        path: path.to_path_buf(),
        line,
        column,
        msg: msg.into(),
    }
}

/// Write a grid: raw scalars to `path`, the header to [`header_path`].
///
/// `values` holds the payload scalars exactly as stored — for a complex
/// grid that is the interleaved `re, im` sequence, so its length must be
/// twice the element count. The payload lands before the header; a header's
/// presence therefore certifies a complete pair.
pub fn write_grid(path: impl AsRef<Path>, header: &GridHeader, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    header.validate()?;
    if values.len() != header.scalar_len() {
        return Err(Error::validation(format!(
            "grid payload for {} has {} scalars but the header calls for {} \
             ({:?} elements of type {:?})",
            path.display(),
            values.len(),
            header.scalar_len(),
            header.dims,
            header.element,
        )));
    }

    let mut payload = Vec::with_capacity(values.len() * 8);
    for v in values {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, &payload).map_err(|e| with_path(path, e))?;

    let hdr = header_path(path);
    let mut text = serde_json::to_string_pretty(header)
        .map_err(|e| Error::validation(format!("unencodable grid header: {e}")))?;
    text.push('\n');
    let mut file = fs::File::create(&hdr).map_err(|e| with_path(&hdr, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| with_path(&hdr, e))?;
    Ok(())
}

/// Read back a grid pair written by [`write_grid`].
///
/// Returns the parsed header and the payload scalars (interleaved for
/// complex grids). The scalars are recovered by raw byte copies, so the
/// round trip is bit-exact for every value including NaNs.
pub fn read_grid(path: impl AsRef<Path>) -> Result<(GridHeader, Vec<f64>)> {
    let path = path.as_ref();
    let hdr = header_path(path);
    let text = fs::read_to_string(&hdr).map_err(|e| with_path(&hdr, e))?;
    let header: GridHeader = serde_json::from_str(&text).map_err(|e| {
        // serde_json repeats the position in its message; keep the prefix.
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        header_parse(&hdr, e.line(), e.column(), msg)
    })?;
    header.validate().map_err(|e| match e {
        Error::Validation(msg) => header_parse(&hdr, 1, 1, msg),
        other => other,
    })?;

    let bytes = fs::read(path).map_err(|e| with_path(path, e))?;
    let expected = header.payload_bytes();
    if bytes.len() as u64 != expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks_exact(8)")))
        .collect();
    Ok((header, values))
}

/// [`write_grid`] for complex elements: interleaves `re, im` for the caller.
pub fn write_complex_grid(
    path: impl AsRef<Path>,
    header: &GridHeader,
    values: &[Complex64],
) -> Result<()> {
    if header.element != ElementType::Complex {
        return Err(Error::validation(
            "write_complex_grid needs a header with element type c64",
        ));
    }
    let mut flat = Vec::with_capacity(values.len() * 2);
    for v in values {
        flat.push(v.re);
        flat.push(v.im);
    }
    write_grid(path, header, &flat)
}

/// [`read_grid`] for complex elements: de-interleaves the payload.
pub fn read_complex_grid(path: impl AsRef<Path>) -> Result<(GridHeader, Vec<Complex64>)> {
    let path = path.as_ref();
    let (header, flat) = read_grid(path)?;
    if header.element != ElementType::Complex {
        return Err(Error::validation(format!(
            "{} holds element type f64, not c64",
            path.display()
        )));
    }
    let values = flat
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dir() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    #[test]
    fn real_grid_round_trips_bit_exactly() {
        let d = dir();
        let path = d.path().join("field.grid");
        let header = GridHeader::real(
            vec![3, 4],
            vec![AxisMeta::new("x", 0.0, 1.0), AxisMeta::new("y", -2.0, 2.0)],
        )
        .with_meta("phantom", "gaussian-bump");
        let values: Vec<f64> = (0..12).map(|i| (i as f64).sin() * 1e-3).collect();
        write_grid(&path, &header, &values).unwrap();
        let (back, got) = read_grid(&path).unwrap();
        assert_eq!(back, header);
        assert_eq!(got.len(), values.len());
        for (a, b) in got.iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn complex_grid_round_trips_identically() {
        let d = dir();
        let path = d.path().join("symbol.grid");
        let header = GridHeader::complex(
            vec![2, 3],
            vec![
                AxisMeta::new("xi", -8.0, 8.0),
                AxisMeta::new("eta", -8.0, 8.0),
            ],
        );
        let values: Vec<Complex64> = (0..6)
            .map(|i| Complex64::new(1.0 / (i as f64 + 1.0), -(i as f64)))
            .collect();
        write_complex_grid(&path, &header, &values).unwrap();
        let (back, got) = read_complex_grid(&path).unwrap();
        assert_eq!(back.element, ElementType::Complex);
        for (a, b) in got.iter().zip(&values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn truncated_payload_reports_both_byte_counts() {
        let d = dir();
        let path = d.path().join("cut.grid");
        let header = GridHeader::real(vec![5], vec![AxisMeta::new("x", 0.0, 1.0)]);
        write_grid(&path, &header, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let full = fs::read(&path).unwrap();
        fs::write(&path, &full[..full.len() - 3]).unwrap();
        match read_grid(&path) {
            Err(Error::TruncatedPayload {
                expected, actual, ..
            }) => {
                assert_eq!(expected, 40);
                assert_eq!(actual, 37);
            }
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header_reports_line_and_column() {
        let d = dir();
        let path = d.path().join("bad.grid");
        let header = GridHeader::real(vec![2], vec![AxisMeta::new("x", 0.0, 1.0)]);
        write_grid(&path, &header, &[1.0, 2.0]).unwrap();
        let hdr = header_path(&path);
        let mut text = fs::read_to_string(&hdr).unwrap();
        text = text.replace("\"dims\"", "dims"); // strip the quotes: invalid JSON
        fs::write(&hdr, text).unwrap();
        match read_grid(&path) {
            Err(Error::HeaderParse { line, column, .. }) => {
                assert!(line >= 1 && column >= 1, "position {line}:{column}");
            }
            other => panic!("expected HeaderParse, got {other:?}"),
        }
    }

    #[test]
    fn empty_header_is_a_parse_error() {
        let d = dir();
        let path = d.path().join("empty.grid");
        let header = GridHeader::real(vec![1], vec![AxisMeta::new("x", 0.0, 0.0)]);
        write_grid(&path, &header, &[0.5]).unwrap();
        fs::write(header_path(&path), "").unwrap();
        assert!(matches!(
            read_grid(&path),
            Err(Error::HeaderParse { line: 1, .. })
        ));
    }

    #[test]
    fn headers_are_validated_on_both_ends() {
        let d = dir();
        let path = d.path().join("shape.grid");
        // Payload length disagrees with dims.
        let header = GridHeader::real(vec![3], vec![AxisMeta::new("x", 0.0, 1.0)]);
        assert!(matches!(
            write_grid(&path, &header, &[1.0, 2.0]),
            Err(Error::Validation(_))
        ));
        // Zero extent.
        let zero = GridHeader::real(vec![3, 0], vec![]);
        assert!(zero.validate().is_err());
        // Axis count mismatch survives serialization, so readers check too.
        let mut bad = GridHeader::real(
            vec![2],
            vec![AxisMeta::new("x", 0.0, 1.0), AxisMeta::new("y", 0.0, 1.0)],
        );
        write_grid(&path, &GridHeader::real(vec![2], vec![AxisMeta::new("x", 0.0, 1.0)]), &[1.0, 2.0])
            .unwrap();
        bad.meta.insert("k".into(), "v".into());
        let hdr_text = serde_json::to_string(&bad).unwrap();
        fs::write(header_path(&path), hdr_text).unwrap();
        assert!(matches!(
            read_grid(&path),
            Err(Error::HeaderParse { .. })
        ));
    }

    #[test]
    fn complex_readers_refuse_real_grids() {
        let d = dir();
        let path = d.path().join("real.grid");
        let header = GridHeader::real(vec![2], vec![AxisMeta::new("x", 0.0, 1.0)]);
        write_grid(&path, &header, &[1.0, 2.0]).unwrap();
        assert!(read_complex_grid(&path).is_err());
    }

    #[test]
    fn missing_files_name_the_path() {
        let d = dir();
        let path = d.path().join("nowhere.grid");
        let msg = read_grid(&path).unwrap_err().to_string();
        assert!(msg.contains("nowhere.grid"), "message was: {msg}");
    }

    #[test]
    fn axis_meta_mirrors_axis_endpoints() {
        let ax = Axis::new(-0.25, 0.75, 9);
        let meta = AxisMeta::of("depth", &ax);
        assert_eq!(meta.lo, ax.lo);
        assert_eq!(meta.hi, ax.hi);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        /// Round-trip bit-exactness over randomized shapes, element types,
        /// and raw bit patterns (NaNs and infinities included).
        #[test]
        fn random_grids_round_trip_bit_exactly(
            dims in prop::collection::vec(1usize..5, 1..4),
            complex in any::<bool>(),
            bits in prop::collection::vec(any::<u64>(), 0..256),
            seed in any::<u64>(),
        ) {
            let elems: usize = dims.iter().product();
            let element = if complex { ElementType::Complex } else { ElementType::Real };
            let scalars = elems * element.scalars_per_element();
            let values: Vec<f64> = (0..scalars)
                .map(|i| f64::from_bits(
                    bits.get(i % bits.len().max(1)).copied().unwrap_or(seed) ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15),
                ))
                .collect();
            let axes = dims
                .iter()
                .enumerate()
                .map(|(k, _)| AxisMeta::new(format!("axis{k}"), -(k as f64), k as f64 + 0.5))
                .collect();
            let header = GridHeader { dims, axes, element, meta: BTreeMap::new() };

            let d = dir();
            let path = d.path().join("rand.grid");
            write_grid(&path, &header, &values).unwrap();
            let (back, got) = read_grid(&path).unwrap();
            prop_assert_eq!(&back, &header);
            prop_assert_eq!(got.len(), values.len());
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
