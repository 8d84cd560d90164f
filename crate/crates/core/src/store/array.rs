use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::{Attrs, StoreError};

/// Element types the store can persist, named by their Zarr v2 dtype strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    F8,
    F4,
    I8,
    I2,
    I1,
    B1,
}

impl Dtype {
    pub fn zarr_str(&self) -> &'static str {
        match self {
            Dtype::F8 => "<f8",
            Dtype::F4 => "<f4",
            Dtype::I8 => "<i8",
            Dtype::I2 => "<i2",
            Dtype::I1 => "|i1",
            Dtype::B1 => "|b1",
        }
    }

    pub fn from_zarr_str(s: &str) -> Option<Dtype> {
        Some(match s {
            "<f8" => Dtype::F8,
            "<f4" => Dtype::F4,
            "<i8" => Dtype::I8,
            "<i2" => Dtype::I2,
            "|i1" | "<i1" => Dtype::I1,
            "|b1" => Dtype::B1,
            _ => return None,
        })
    }

    pub fn size(&self) -> usize {
        match self {
            Dtype::F8 | Dtype::I8 => 8,
            Dtype::F4 => 4,
            Dtype::I2 => 2,
            Dtype::I1 | Dtype::B1 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FillValue {
    Float(f64),
    Int(i64),
    Bool(bool),
}

/// Floats compare by bit pattern so that a NaN fill equals itself.
impl PartialEq for FillValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (FillValue::Float(a), FillValue::Float(b)) => a.to_bits() == b.to_bits(),
            (FillValue::Int(a), FillValue::Int(b)) => a == b,
            (FillValue::Bool(a), FillValue::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl FillValue {
    fn to_json(self) -> Value {
        match self {
            FillValue::Float(v) if v.is_nan() => json!("NaN"),
            FillValue::Float(v) if v == f64::INFINITY => json!("Infinity"),
            FillValue::Float(v) if v == f64::NEG_INFINITY => json!("-Infinity"),
            FillValue::Float(v) => json!(v),
            FillValue::Int(v) => json!(v),
            FillValue::Bool(v) => json!(v),
        }
    }

    fn from_json(v: &Value, dtype: Dtype) -> Option<FillValue> {
        match (dtype, v) {
            (Dtype::F8 | Dtype::F4, Value::String(s)) => match s.as_str() {
                "NaN" => Some(FillValue::Float(f64::NAN)),
                "Infinity" => Some(FillValue::Float(f64::INFINITY)),
                "-Infinity" => Some(FillValue::Float(f64::NEG_INFINITY)),
                _ => None,
            },
            (Dtype::F8 | Dtype::F4, Value::Number(n)) => n.as_f64().map(FillValue::Float),
            (Dtype::I8 | Dtype::I2 | Dtype::I1, Value::Number(n)) => n.as_i64().map(FillValue::Int),
            (Dtype::B1, Value::Bool(b)) => Some(FillValue::Bool(*b)),
            (_, Value::Null) => Some(match dtype {
                Dtype::F8 | Dtype::F4 => FillValue::Float(0.0),
                Dtype::B1 => FillValue::Bool(false),
                _ => FillValue::Int(0),
            }),
            _ => None,
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            FillValue::Float(v) => v,
            FillValue::Int(v) => v as f64,
            FillValue::Bool(b) => b as u8 as f64,
        }
    }

    fn as_i64(self) -> i64 {
        match self {
            FillValue::Float(v) => v as i64,
            FillValue::Int(v) => v,
            FillValue::Bool(b) => b as i64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compressor {
    None,
    /// zlib container around deflate, levels 0-9.
    Zlib { level: u32 },
}

impl Default for Compressor {
    fn default() -> Self {
        Compressor::Zlib { level: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayMeta {
    pub shape: Vec<usize>,
    pub chunks: Vec<usize>,
    pub dtype: Dtype,
    pub fill_value: FillValue,
    pub compressor: Compressor,
}

impl ArrayMeta {
    pub fn new(shape: Vec<usize>, chunks: Vec<usize>, dtype: Dtype, fill_value: FillValue) -> Self {
        ArrayMeta {
            shape,
            chunks,
            dtype,
            fill_value,
            compressor: Compressor::default(),
        }
    }

    pub fn with_compressor(mut self, compressor: Compressor) -> Self {
        self.compressor = compressor;
        self
    }

    /// Chunks along each dimension, `ceil(shape / chunks)`.
    pub fn chunk_grid(&self) -> Vec<usize> {
        self.shape
            .iter()
            .zip(&self.chunks)
            .map(|(&s, &c)| s.div_ceil(c))
            .collect()
    }

    pub fn chunk_count(&self) -> usize {
        self.chunk_grid().iter().product()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<(), String> {
        if self.shape.is_empty() {
            return Err("rank-0 arrays are not supported".into());
        }
        if self.shape.len() != self.chunks.len() {
            return Err(format!("shape rank {} != chunks rank {}", self.shape.len(), self.chunks.len()));
        }
        if self.chunks.contains(&0) {
            return Err("chunk extents must be >= 1".into());
        }
        if let Compressor::Zlib { level } = self.compressor {
            if level > 9 {
                return Err(format!("zlib level {level} outside 0..=9"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let compressor = match self.compressor {
            Compressor::None => Value::Null,
            Compressor::Zlib { level } => json!({ "id": "zlib", "level": level }),
        };
        json!({
            "zarr_format": 2,
            "shape": self.shape,
            "chunks": self.chunks,
            "dtype": self.dtype.zarr_str(),
            "compressor": compressor,
            "fill_value": self.fill_value.to_json(),
            "order": "C",
            "filters": Value::Null,
        })
    }

    pub fn from_json(v: &Value) -> Result<ArrayMeta, String> {
        let obj = v.as_object().ok_or("metadata is not a JSON object")?;
        match obj.get("zarr_format").and_then(Value::as_u64) {
            Some(2) => {}
            other => return Err(format!("unsupported zarr_format {other:?}")),
        }
        let dims = |key: &str| -> Result<Vec<usize>, String> {
            obj.get(key)
                .and_then(Value::as_array)
                .ok_or(format!("missing {key}"))?
                .iter()
                .map(|x| x.as_u64().map(|n| n as usize).ok_or(format!("bad {key} entry {x}")))
                .collect()
        };
        let shape = dims("shape")?;
        let chunks = dims("chunks")?;
        let dtype_str = obj.get("dtype").and_then(Value::as_str).ok_or("missing dtype")?;
        let dtype = Dtype::from_zarr_str(dtype_str).ok_or(format!("unsupported dtype {dtype_str}"))?;
        let fill_value = FillValue::from_json(obj.get("fill_value").unwrap_or(&Value::Null), dtype)
            .ok_or("bad fill_value")?;
        if obj.get("order").and_then(Value::as_str) != Some("C") {
            return Err("only C order is supported".into());
        }
        if !obj.get("filters").is_none_or(Value::is_null) {
            return Err("filters are not supported".into());
        }
        let compressor = match obj.get("compressor") {
            None | Some(Value::Null) => Compressor::None,
            Some(c) => match c.get("id").and_then(Value::as_str) {
                Some("zlib") => Compressor::Zlib {
                    level: c.get("level").and_then(Value::as_u64).unwrap_or(1) as u32,
                },
                other => return Err(format!("unsupported compressor {other:?}")),
            },
        };
        let meta = ArrayMeta {
            shape,
            chunks,
            dtype,
            fill_value,
            compressor,
        };
        meta.validate()?;
        Ok(meta)
    }
}

/// Dense C-order array contents, one variant per supported dtype.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F8(Vec<f64>),
    F4(Vec<f32>),
    I8(Vec<i64>),
    I2(Vec<i16>),
    I1(Vec<i8>),
    B1(Vec<bool>),
}

macro_rules! dispatch {
    ($data:expr, $v:ident => $body:expr) => {
        match $data {
            ArrayData::F8($v) => $body,
            ArrayData::F4($v) => $body,
            ArrayData::I8($v) => $body,
            ArrayData::I2($v) => $body,
            ArrayData::I1($v) => $body,
            ArrayData::B1($v) => $body,
        }
    };
}

impl ArrayData {
    pub fn dtype(&self) -> Dtype {
        match self {
            ArrayData::F8(_) => Dtype::F8,
            ArrayData::F4(_) => Dtype::F4,
            ArrayData::I8(_) => Dtype::I8,
            ArrayData::I2(_) => Dtype::I2,
            ArrayData::I1(_) => Dtype::I1,
            ArrayData::B1(_) => Dtype::B1,
        }
    }

    pub fn len(&self) -> usize {
        dispatch!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bit-level equality: floats compare by representation, so NaN == NaN.
    pub fn bit_eq(&self, other: &ArrayData) -> bool {
        match (self, other) {
            (ArrayData::F8(a), ArrayData::F8(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (ArrayData::F4(a), ArrayData::F4(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => self == other,
        }
    }
}

trait Element: Copy + Send + Sync {
    const SIZE: usize;
    fn put(self, out: &mut Vec<u8>);
    fn get(b: &[u8]) -> Self;
    fn from_fill(fill: FillValue) -> Self;
}

macro_rules! element {
    ($t:ty, float) => {
        element!($t, |f: FillValue| f.as_f64() as $t);
    };
    ($t:ty, int) => {
        element!($t, |f: FillValue| f.as_i64() as $t);
    };
    ($t:ty, $conv:expr) => {
        impl Element for $t {
            const SIZE: usize = std::mem::size_of::<$t>();
            fn put(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }
            fn get(b: &[u8]) -> Self {
                <$t>::from_le_bytes(b.try_into().unwrap())
            }
            fn from_fill(fill: FillValue) -> Self {
                ($conv)(fill)
            }
        }
    };
}

element!(f64, float);
element!(f32, float);
element!(i64, int);
element!(i16, int);
element!(i8, int);

impl Element for bool {
    const SIZE: usize = 1;
    fn put(self, out: &mut Vec<u8>) {
        out.push(self as u8);
    }
    fn get(b: &[u8]) -> Self {
        b[0] != 0
    }
    fn from_fill(fill: FillValue) -> Self {
        match fill {
            FillValue::Bool(b) => b,
            other => other.as_f64() != 0.0,
        }
    }
}

fn c_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Calls `f(global_offset, local_offset, run)` for every contiguous run of a
/// chunk that overlaps the array.
fn for_each_run(shape: &[usize], chunks: &[usize], chunk_idx: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    let rank = shape.len();
    let origin: Vec<usize> = chunk_idx.iter().zip(chunks).map(|(i, c)| i * c).collect();
    let extent: Vec<usize> = (0..rank).map(|d| chunks[d].min(shape[d] - origin[d])).collect();
    let g_strides = c_strides(shape);
    let l_strides = c_strides(chunks);
    let last = rank - 1;
    let run = extent[last];
    let mut local = vec![0usize; last];
    loop {
        let mut g = origin[last];
        let mut l = 0;
        for d in 0..last {
            g += (origin[d] + local[d]) * g_strides[d];
            l += local[d] * l_strides[d];
        }
        f(g, l, run);
        // odometer over the outer dimensions
        let mut d = last;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            local[d] += 1;
            if local[d] < extent[d] {
                break;
            }
            local[d] = 0;
        }
    }
}

fn encode_chunk<T: Element>(data: &[T], meta: &ArrayMeta, chunk_idx: &[usize]) -> Vec<u8> {
    let fill = T::from_fill(meta.fill_value);
    let mut buf = vec![fill; meta.chunks.iter().product()];
    for_each_run(&meta.shape, &meta.chunks, chunk_idx, |g, l, run| {
        buf[l..l + run].copy_from_slice(&data[g..g + run]);
    });
    let mut raw = Vec::with_capacity(buf.len() * T::SIZE);
    for v in buf {
        v.put(&mut raw);
    }
    raw
}

fn decode_chunk<T: Element>(raw: &[u8], out: &mut [T], meta: &ArrayMeta, chunk_idx: &[usize]) {
    for_each_run(&meta.shape, &meta.chunks, chunk_idx, |g, l, run| {
        for i in 0..run {
            let at = (l + i) * T::SIZE;
            out[g + i] = T::get(&raw[at..at + T::SIZE]);
        }
    });
}

fn chunk_indices(meta: &ArrayMeta) -> Vec<Vec<usize>> {
    let grid = meta.chunk_grid();
    let total: usize = grid.iter().product();
    let strides = c_strides(&grid);
    (0..total)
        .map(|flat| grid.iter().zip(&strides).map(|(&g, &s)| flat / s % g).collect())
        .collect()
}

pub fn chunk_key(idx: &[usize]) -> String {
    idx.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
}

fn compress(raw: Vec<u8>, compressor: Compressor) -> std::io::Result<Vec<u8>> {
    match compressor {
        Compressor::None => Ok(raw),
        Compressor::Zlib { level } => {
            let mut enc = ZlibEncoder::new(Vec::with_capacity(raw.len() / 2), Compression::new(level));
            enc.write_all(&raw)?;
            enc.finish()
        }
    }
}

fn decompress(stored: Vec<u8>, compressor: Compressor) -> std::io::Result<Vec<u8>> {
    match compressor {
        Compressor::None => Ok(stored),
        Compressor::Zlib { .. } => {
            let mut out = Vec::new();
            ZlibDecoder::new(&stored[..]).read_to_end(&mut out)?;
            Ok(out)
        }
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Location of one array: store root, slash-separated group path, array name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorePath {
    root: PathBuf,
    group: String,
    name: String,
}

impl StorePath {
    pub fn new(root: impl Into<PathBuf>, group: &str, name: &str) -> Result<Self, StoreError> {
        if !group.is_empty() && !group.split('/').all(valid_name) {
            return Err(StoreError::InvalidName(group.to_owned()));
        }
        if !valid_name(name) {
            return Err(StoreError::InvalidName(name.to_owned()));
        }
        Ok(StorePath {
            root: root.into(),
            group: group.to_owned(),
            name: name.to_owned(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn dir(&self) -> PathBuf {
        group_dir(&self.root, &self.group).join(&self.name)
    }
}

pub(crate) fn group_dir(root: &Path, group: &str) -> PathBuf {
    group.split('/').filter(|s| !s.is_empty()).fold(root.to_path_buf(), |p, s| p.join(s))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn write_json(path: &Path, value: &Value) -> Result<(), StoreError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn read_json(path: &Path) -> Result<Value, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::CorruptMetadata {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Writes metadata for an array and returns a handle for its chunks.
///
/// Any previous array at the same path is removed first.
pub struct ArrayWriter {
    dir: PathBuf,
    meta: ArrayMeta,
}

impl ArrayWriter {
    pub fn create(path: &StorePath, meta: ArrayMeta, attrs: &Attrs) -> Result<Self, StoreError> {
        meta.validate().map_err(|reason| StoreError::CorruptMetadata {
            path: path.dir(),
            reason,
        })?;
        let dir = path.dir();
        if dir.join(".zarray").exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_json(&dir.join(".zarray"), &meta.to_json())?;
        write_json(&dir.join(".zattrs"), &Value::Object(attrs.clone()))?;
        Ok(ArrayWriter { dir, meta })
    }

    pub fn meta(&self) -> &ArrayMeta {
        &self.meta
    }

    /// Encodes and writes one chunk taken from the full logical array.
    pub fn write_chunk(&self, data: &ArrayData, chunk_idx: &[usize]) -> Result<(), StoreError> {
        let raw = dispatch!(data, v => encode_chunk(v, &self.meta, chunk_idx));
        let path = self.dir.join(chunk_key(chunk_idx));
        let bytes = compress(raw, self.meta.compressor).map_err(io_err(&path))?;
        fs::write(&path, bytes).map_err(io_err(&path))
    }
}

/// Writes a full array: metadata, attributes and every chunk.
pub fn write_array(path: &StorePath, meta: &ArrayMeta, data: &ArrayData, attrs: &Attrs) -> Result<(), StoreError> {
    if data.len() != meta.len() || data.dtype() != meta.dtype {
        return Err(StoreError::ShapeMismatch {
            path: path.dir(),
            expected: format!("{:?} {}", meta.shape, meta.dtype.zarr_str()),
            actual: format!("{} elements {}", data.len(), data.dtype().zarr_str()),
        });
    }
    let writer = ArrayWriter::create(path, meta.clone(), attrs)?;
    chunk_indices(meta)
        .par_iter()
        .try_for_each(|idx| writer.write_chunk(data, idx))
}

/// Reads an array back; absent chunk files decode as all fill value.
pub fn read_array(path: &StorePath) -> Result<(ArrayMeta, ArrayData, Attrs), StoreError> {
    read_array_dir(&path.dir())
}

pub(crate) fn read_array_dir(dir: &Path) -> Result<(ArrayMeta, ArrayData, Attrs), StoreError> {
    let meta_path = dir.join(".zarray");
    let meta = ArrayMeta::from_json(&read_json(&meta_path)?).map_err(|reason| StoreError::CorruptMetadata {
        path: meta_path.clone(),
        reason,
    })?;
    let attrs_path = dir.join(".zattrs");
    let attrs = if attrs_path.exists() {
        match read_json(&attrs_path)? {
            Value::Object(m) => m,
            _ => {
                return Err(StoreError::CorruptMetadata {
                    path: attrs_path,
                    reason: ".zattrs is not an object".into(),
                })
            }
        }
    } else {
        Map::new()
    };

    fn fill_vec<T: Element>(meta: &ArrayMeta) -> Vec<T> {
        vec![T::from_fill(meta.fill_value); meta.len()]
    }
    let mut data = match meta.dtype {
        Dtype::F8 => ArrayData::F8(fill_vec(&meta)),
        Dtype::F4 => ArrayData::F4(fill_vec(&meta)),
        Dtype::I8 => ArrayData::I8(fill_vec(&meta)),
        Dtype::I2 => ArrayData::I2(fill_vec(&meta)),
        Dtype::I1 => ArrayData::I1(fill_vec(&meta)),
        Dtype::B1 => ArrayData::B1(fill_vec(&meta)),
    };

    let expected = meta.chunks.iter().product::<usize>() * meta.dtype.size();
    let indices = chunk_indices(&meta);
    let decoded: Vec<Option<(usize, Vec<u8>)>> = indices
        .par_iter()
        .enumerate()
        .map(|(i, idx)| {
            let path = dir.join(chunk_key(idx));
            let stored = match fs::read(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
                Err(e) => return Err(io_err(&path)(e)),
            };
            let raw = decompress(stored, meta.compressor).map_err(|e| StoreError::CorruptChunk {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            if raw.len() != expected {
                return Err(StoreError::ChunkSizeMismatch {
                    path,
                    expected,
                    actual: raw.len(),
                });
            }
            Ok(Some((i, raw)))
        })
        .collect::<Result<_, StoreError>>()?;
    for (i, raw) in decoded.into_iter().flatten() {
        dispatch!(&mut data, v => decode_chunk(&raw, v, &meta, &indices[i]));
    }
    Ok((meta, data, attrs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(shape: &[usize], chunks: &[usize], dtype: Dtype, fill: FillValue) -> ArrayMeta {
        ArrayMeta::new(shape.to_vec(), chunks.to_vec(), dtype, fill)
    }

    fn files(dir: &Path) -> Vec<String> {
        let mut v: Vec<String> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| !n.starts_with('.'))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn chunk_files_for_3x5_by_2x2() {
        let tmp = tempfile::tempdir().unwrap();
        let p = StorePath::new(tmp.path(), "", "a").unwrap();
        let m = meta(&[3, 5], &[2, 2], Dtype::I8, FillValue::Int(0));
        write_array(&p, &m, &ArrayData::I8((0..15).collect()), &Attrs::new()).unwrap();
        assert_eq!(files(&p.dir()), vec!["0.0", "0.1", "0.2", "1.0", "1.1", "1.2"]);
        let (_, data, _) = read_array(&p).unwrap();
        assert_eq!(data, ArrayData::I8((0..15).collect()));
    }

    #[test]
    fn edge_chunk_padded_with_fill() {
        let tmp = tempfile::tempdir().unwrap();
        let p = StorePath::new(tmp.path(), "g", "x").unwrap();
        let m = meta(&[5], &[2], Dtype::F8, FillValue::Float(f64::NAN)).with_compressor(Compressor::None);
        write_array(&p, &m, &ArrayData::F8(vec![1.0, 2.0, 3.0, 4.0, 5.0]), &Attrs::new()).unwrap();
        let raw = fs::read(p.dir().join("2")).unwrap();
        assert_eq!(raw.len(), 16);
        assert_eq!(f64::from_le_bytes(raw[..8].try_into().unwrap()), 5.0);
        assert!(f64::from_le_bytes(raw[8..].try_into().unwrap()).is_nan());
    }

    #[test]
    fn missing_chunks_read_as_fill() {
        let tmp = tempfile::tempdir().unwrap();
        let p = StorePath::new(tmp.path(), "", "z").unwrap();
        let m = meta(&[4], &[2], Dtype::I2, FillValue::Int(0));
        ArrayWriter::create(&p, m, &Attrs::new()).unwrap();
        let (_, data, _) = read_array(&p).unwrap();
        assert_eq!(data, ArrayData::I2(vec![0, 0, 0, 0]));
    }

    #[test]
    fn zarr_v3_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let p = StorePath::new(tmp.path(), "", "v3").unwrap();
        let m = meta(&[2], &[2], Dtype::I8, FillValue::Int(0));
        write_array(&p, &m, &ArrayData::I8(vec![1, 2]), &Attrs::new()).unwrap();
        let mut j = m.to_json();
        j["zarr_format"] = json!(3);
        write_json(&p.dir().join(".zarray"), &j).unwrap();
        assert!(matches!(read_array(&p), Err(StoreError::CorruptMetadata { .. })));
    }

    #[test]
    fn chunk_size_mismatch_detected() {
        let tmp = tempfile::tempdir().unwrap();
        let p = StorePath::new(tmp.path(), "", "c").unwrap();
        let m = meta(&[4], &[2], Dtype::I8, FillValue::Int(0)).with_compressor(Compressor::None);
        write_array(&p, &m, &ArrayData::I8(vec![1, 2, 3, 4]), &Attrs::new()).unwrap();
        fs::write(p.dir().join("1"), [0u8; 8]).unwrap();
        assert!(matches!(
            read_array(&p),
            Err(StoreError::ChunkSizeMismatch { expected: 16, actual: 8, .. })
        ));
    }

    #[test]
    fn shape_mismatch_and_names() {
        let tmp = tempfile::tempdir().unwrap();
        let p = StorePath::new(tmp.path(), "", "s").unwrap();
        let m = meta(&[3], &[2], Dtype::I8, FillValue::Int(0));
        assert!(matches!(
            write_array(&p, &m, &ArrayData::I8(vec![1]), &Attrs::new()),
            Err(StoreError::ShapeMismatch { .. })
        ));
        assert!(StorePath::new(tmp.path(), "", "bad-name").is_err());
        assert!(StorePath::new(tmp.path(), "a//b", "x").is_err());
    }

    #[test]
    fn chunks_larger_than_shape() {
        let tmp = tempfile::tempdir().unwrap();
        let p = StorePath::new(tmp.path(), "", "big").unwrap();
        let m = meta(&[2, 3], &[10, 10], Dtype::B1, FillValue::Bool(false));
        let d = ArrayData::B1(vec![true, false, true, true, false, false]);
        write_array(&p, &m, &d, &Attrs::new()).unwrap();
        assert_eq!(files(&p.dir()), vec!["0.0"]);
        assert_eq!(read_array(&p).unwrap().1, d);
    }

    #[test]
    fn metadata_json_shape() {
        let m = meta(&[3], &[2], Dtype::F4, FillValue::Float(f64::NAN));
        let j = m.to_json();
        assert_eq!(j["zarr_format"], 2);
        assert_eq!(j["fill_value"], "NaN");
        assert_eq!(j["compressor"], json!({"id": "zlib", "level": 1}));
        assert_eq!(j["filters"], Value::Null);
        assert_eq!(ArrayMeta::from_json(&j).unwrap().dtype, Dtype::F4);
    }
}
