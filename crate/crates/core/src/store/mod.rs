//! Zarr v2 compatible on-disk array hierarchy.

mod array;
mod echodata;
mod grids;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

pub use array::{
    chunk_key, read_array, write_array, ArrayData, ArrayMeta, ArrayWriter, Compressor, Dtype, FillValue, StorePath,
};
pub use echodata::{read_echodata, write_echodata};
pub use grids::{read_mask, read_sv_grid, write_mask, write_sv_grid};

use array::{group_dir, read_array_dir, read_json, write_json};

/// Flat JSON attributes of a group or array.
pub type Attrs = Map<String, Value>;

/// Attribute key holding an array's dimension names.
pub const DIMENSIONS_KEY: &str = "_ARRAY_DIMENSIONS";

pub const TIME_UNITS_KEY: &str = "units";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: data does not match metadata (expected {expected}, got {actual})")]
    ShapeMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("{path}: corrupt metadata: {reason}")]
    CorruptMetadata { path: PathBuf, reason: String },
    #[error("{path}: corrupt chunk: {reason}")]
    CorruptChunk { path: PathBuf, reason: String },
    #[error("{path}: chunk decodes to {actual} bytes, expected {expected}")]
    ChunkSizeMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("invalid store name {0:?}")]
    InvalidName(String),
    #[error("missing group {0}")]
    MissingGroup(String),
    #[error("group {group}: missing array {name}")]
    MissingArray { group: String, name: String },
}

/// An array held in memory together with its on-disk metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredArray {
    pub meta: ArrayMeta,
    pub data: ArrayData,
    pub attrs: Attrs,
}

impl StoredArray {
    /// A single-chunk array with the dtype's natural fill and the given dimension names.
    pub fn new(shape: Vec<usize>, data: ArrayData, dims: &[&str]) -> Self {
        let dtype = data.dtype();
        let chunks = shape.iter().map(|&s| s.max(1)).collect();
        let mut attrs = Attrs::new();
        attrs.insert(DIMENSIONS_KEY.into(), json!(dims));
        StoredArray {
            meta: ArrayMeta::new(shape, chunks, dtype, default_fill(dtype)),
            data,
            attrs,
        }
    }

    pub fn dims(&self) -> Vec<String> {
        self.attrs
            .get(DIMENSIONS_KEY)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_owned)).collect())
            .unwrap_or_default()
    }
}

pub fn default_fill(dtype: Dtype) -> FillValue {
    match dtype {
        Dtype::F8 | Dtype::F4 => FillValue::Float(f64::NAN),
        Dtype::B1 => FillValue::Bool(false),
        _ => FillValue::Int(0),
    }
}

/// Chunk extents by dimension name; other dimensions are stored whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkPolicy {
    pub frequency: usize,
    pub ping_time: usize,
    pub range_bin: usize,
    pub compressor: Compressor,
}

impl Default for ChunkPolicy {
    fn default() -> Self {
        ChunkPolicy {
            frequency: 1,
            ping_time: 512,
            range_bin: 1024,
            compressor: Compressor::default(),
        }
    }
}

impl ChunkPolicy {
    pub fn chunks(&self, shape: &[usize], dims: &[&str]) -> Vec<usize> {
        shape
            .iter()
            .zip(dims)
            .map(|(&n, &d)| {
                let limit = match d {
                    "frequency" => self.frequency,
                    "ping_time" => self.ping_time,
                    "range_bin" => self.range_bin,
                    _ => usize::MAX,
                };
                n.min(limit).max(1)
            })
            .collect()
    }
}

/// Creates a group directory with its `.zgroup` marker and attributes.
pub fn write_group(root: &Path, group: &str, attrs: &Attrs) -> Result<PathBuf, StoreError> {
    if !group.is_empty() {
        // validates the group path
        StorePath::new(root, group, "x")?;
    }
    let dir = group_dir(root, group);
    fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
        path: dir.clone(),
        source,
    })?;
    write_json(&dir.join(".zgroup"), &json!({ "zarr_format": 2 }))?;
    write_json(&dir.join(".zattrs"), &Value::Object(attrs.clone()))?;
    Ok(dir)
}

/// Attributes of an existing group; `MissingGroup` when there is no `.zgroup`.
pub fn read_group_attrs(root: &Path, group: &str) -> Result<Attrs, StoreError> {
    let dir = group_dir(root, group);
    if !dir.join(".zgroup").is_file() {
        return Err(StoreError::MissingGroup(if group.is_empty() { "/".into() } else { group.into() }));
    }
    let path = dir.join(".zattrs");
    if !path.exists() {
        return Ok(Attrs::new());
    }
    match read_json(&path)? {
        Value::Object(m) => Ok(m),
        _ => Err(StoreError::CorruptMetadata {
            path,
            reason: ".zattrs is not an object".into(),
        }),
    }
}

/// Every array directly inside a group, keyed by name.
pub fn read_group_arrays(root: &Path, group: &str) -> Result<BTreeMap<String, StoredArray>, StoreError> {
    let dir = group_dir(root, group);
    let entries = fs::read_dir(&dir).map_err(|source| StoreError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        let path = entry.path();
        if path.join(".zarray").is_file() {
            let name = entry.file_name().to_string_lossy().into_owned();
            let (meta, data, attrs) = read_array_dir(&path)?;
            out.insert(name, StoredArray { meta, data, attrs });
        }
    }
    Ok(out)
}

/// Writes one array, chunked by `policy`, recording its dimension names.
#[allow(clippy::too_many_arguments)]
pub fn put_array(
    root: &Path,
    group: &str,
    name: &str,
    shape: &[usize],
    dims: &[&str],
    data: ArrayData,
    mut attrs: Attrs,
    policy: &ChunkPolicy,
) -> Result<(), StoreError> {
    let path = StorePath::new(root, group, name)?;
    if shape.len() != dims.len() {
        return Err(StoreError::ShapeMismatch {
            path: path.dir(),
            expected: format!("{} dimension names", shape.len()),
            actual: format!("{dims:?}"),
        });
    }
    let dtype = data.dtype();
    let meta = ArrayMeta::new(shape.to_vec(), policy.chunks(shape, dims), dtype, default_fill(dtype))
        .with_compressor(policy.compressor);
    attrs.insert(DIMENSIONS_KEY.into(), json!(dims));
    write_array(&path, &meta, &data, &attrs)
}

/// Pulls typed arrays out of a loaded group by name.
pub(crate) struct GroupArrays {
    pub group: String,
    pub root: PathBuf,
    pub arrays: BTreeMap<String, StoredArray>,
}

macro_rules! taker {
    ($fn:ident, $variant:ident, $t:ty) => {
        pub fn $fn(&mut self, name: &str) -> Result<(Vec<usize>, Vec<$t>), StoreError> {
            let a = self.take(name)?;
            match a.data {
                ArrayData::$variant(v) => Ok((a.meta.shape, v)),
                other => Err(self.corrupt(name, format!("unexpected dtype {}", other.dtype().zarr_str()))),
            }
        }
    };
}

impl GroupArrays {
    pub fn load(root: &Path, group: &str) -> Result<Self, StoreError> {
        Ok(GroupArrays {
            group: group.into(),
            root: root.to_path_buf(),
            arrays: read_group_arrays(root, group)?,
        })
    }

    pub fn take(&mut self, name: &str) -> Result<StoredArray, StoreError> {
        self.arrays.remove(name).ok_or_else(|| StoreError::MissingArray {
            group: self.group.clone(),
            name: name.into(),
        })
    }

    pub fn corrupt(&self, name: &str, reason: String) -> StoreError {
        StoreError::CorruptMetadata {
            path: group_dir(&self.root, &self.group).join(name),
            reason,
        }
    }

    taker!(f8, F8, f64);
    taker!(f4, F4, f32);
    taker!(i8, I8, i64);
    taker!(i2, I2, i16);
    taker!(i1, I1, i8);
    taker!(b1, B1, bool);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_backscatter_chunk_grid() {
        let p = ChunkPolicy::default();
        let chunks = p.chunks(&[2, 2000, 3000], &["frequency", "ping_time", "range_bin"]);
        assert_eq!(chunks, vec![1, 512, 1024]);
        let m = ArrayMeta::new(vec![2, 2000, 3000], chunks, Dtype::F8, FillValue::Float(f64::NAN));
        assert_eq!(m.chunk_grid(), vec![2, 4, 3]);
    }

    #[test]
    fn empty_dimension_still_chunks() {
        assert_eq!(ChunkPolicy::default().chunks(&[0, 7], &["ping_time", "other"]), vec![1, 7]);
    }

    #[test]
    fn group_markers() {
        let tmp = tempfile::tempdir().unwrap();
        let mut attrs = Attrs::new();
        attrs.insert("title".into(), json!("x"));
        write_group(tmp.path(), "A/B", &attrs).unwrap();
        assert_eq!(read_group_attrs(tmp.path(), "A/B").unwrap(), attrs);
        assert!(matches!(read_group_attrs(tmp.path(), "A"), Err(StoreError::MissingGroup(_))));
        let marker: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("A/B/.zgroup")).unwrap()).unwrap();
        assert_eq!(marker, json!({"zarr_format": 2}));
    }
}
