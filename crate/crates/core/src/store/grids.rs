use std::path::Path;

use ndarray::{Array2, Array3};
use serde_json::{json, Value};

use super::{put_array, read_group_attrs, write_group, ArrayData, Attrs, ChunkPolicy, GroupArrays, StoreError};
use crate::calibrate::{Quantity, SvGrid};
use crate::model::{LabeledGrid, Mask};
use crate::time::TIME_UNITS;

fn units(u: &str) -> Attrs {
    let mut a = Attrs::new();
    a.insert("units".into(), json!(u));
    a
}

fn corrupt(root: &Path, reason: String) -> StoreError {
    StoreError::CorruptMetadata {
        path: root.to_path_buf(),
        reason,
    }
}

/// Writes a calibrated grid; values go to disk as 32-bit floats.
pub fn write_sv_grid(sv: &SvGrid, root: &Path, policy: &ChunkPolicy) -> Result<(), StoreError> {
    let name = sv.quantity.name();
    let mut attrs = Attrs::new();
    attrs.insert("quantity".into(), json!(name));
    write_group(root, "", &attrs)?;
    let g = &sv.grid;
    let (nf, nt, nr) = g.values.dim();
    let put = |name: &str, shape: &[usize], dims: &[&str], data: ArrayData, attrs: Attrs| {
        put_array(root, "", name, shape, dims, data, attrs, policy)
    };
    put("frequency", &[nf], &["frequency"], ArrayData::F8(g.frequency_hz.clone()), units("Hz"))?;
    put("ping_time", &[nt], &["ping_time"], ArrayData::I8(g.ping_time.clone()), units(TIME_UNITS))?;
    put(
        "range_bin",
        &[nr],
        &["range_bin"],
        ArrayData::I8((0..nr as i64).collect()),
        Attrs::new(),
    )?;
    put(
        "range_m",
        &[nf, nr],
        &["frequency", "range_bin"],
        ArrayData::F8(sv.range_m.iter().copied().collect()),
        units("m"),
    )?;
    put("range_step_m", &[nf], &["frequency"], ArrayData::F8(sv.range_step_m.clone()), units("m"))?;
    let unit = match sv.quantity {
        Quantity::Sv => "dB re 1 m-1",
        Quantity::Ts => "dB re 1 m2",
    };
    put(
        name,
        &[nf, nt, nr],
        &["frequency", "ping_time", "range_bin"],
        ArrayData::F4(g.values.iter().map(|&v| v as f32).collect()),
        units(unit),
    )
}

pub fn read_sv_grid(root: &Path) -> Result<SvGrid, StoreError> {
    let attrs = read_group_attrs(root, "")?;
    let quantity = attrs
        .get("quantity")
        .and_then(Value::as_str)
        .and_then(Quantity::from_name)
        .ok_or_else(|| corrupt(root, "not a calibrated grid store (no quantity attribute)".into()))?;
    let mut g = GroupArrays::load(root, "")?;
    let frequency_hz = g.f8("frequency")?.1;
    let ping_time = g.i8("ping_time")?.1;
    let (shape, range) = g.f8("range_m")?;
    let range_step_m = g.f8("range_step_m")?.1;
    let (vshape, values) = g.f4(quantity.name())?;
    let [nf, nt, nr] = vshape[..] else {
        return Err(corrupt(root, format!("values have shape {vshape:?}")));
    };
    let range_m = Array2::from_shape_vec((shape[0], shape.get(1).copied().unwrap_or(0)), range)
        .map_err(|e| corrupt(root, e.to_string()))?;
    let values = Array3::from_shape_vec((nf, nt, nr), values.into_iter().map(f64::from).collect())
        .map_err(|e| corrupt(root, e.to_string()))?;
    let grid = LabeledGrid::new(frequency_hz, ping_time, values).map_err(|e| corrupt(root, e.to_string()))?;
    SvGrid::new(quantity, grid, range_m, range_step_m).map_err(|e| corrupt(root, e.to_string()))
}

pub fn write_mask(mask: &Mask, root: &Path, policy: &ChunkPolicy) -> Result<(), StoreError> {
    let mut attrs = Attrs::new();
    attrs.insert("frequency_a_hz".into(), json!(mask.frequency_a_hz));
    attrs.insert("frequency_b_hz".into(), json!(mask.frequency_b_hz));
    write_group(root, "", &attrs)?;
    let (nt, nr) = mask.values.dim();
    put_array(
        root,
        "",
        "ping_time",
        &[nt],
        &["ping_time"],
        ArrayData::I8(mask.ping_time.clone()),
        units(TIME_UNITS),
        policy,
    )?;
    put_array(
        root,
        "",
        "range_m",
        &[nr],
        &["range_bin"],
        ArrayData::F8(mask.range_m.clone()),
        units("m"),
        policy,
    )?;
    put_array(
        root,
        "",
        "mask",
        &[nt, nr],
        &["ping_time", "range_bin"],
        ArrayData::B1(mask.values.iter().copied().collect()),
        Attrs::new(),
        policy,
    )
}

pub fn read_mask(root: &Path) -> Result<Mask, StoreError> {
    let attrs = read_group_attrs(root, "")?;
    let freq = |k: &str| {
        attrs
            .get(k)
            .and_then(Value::as_f64)
            .ok_or_else(|| corrupt(root, format!("missing {k}")))
    };
    let (frequency_a_hz, frequency_b_hz) = (freq("frequency_a_hz")?, freq("frequency_b_hz")?);
    let mut g = GroupArrays::load(root, "")?;
    let ping_time = g.i8("ping_time")?.1;
    let range_m = g.f8("range_m")?.1;
    let (shape, v) = g.b1("mask")?;
    let values = Array2::from_shape_vec((ping_time.len(), range_m.len()), v)
        .map_err(|e| corrupt(root, format!("mask shape {shape:?}: {e}")))?;
    Ok(Mask {
        frequency_a_hz,
        frequency_b_hz,
        ping_time,
        range_m,
        values,
    })
}
