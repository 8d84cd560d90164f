use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, Array3};
use serde_json::{json, Value};

use super::{
    put_array, read_group_attrs, write_array, write_group, ArrayData, Attrs, ChunkPolicy, GroupArrays, StoreError,
    StorePath, TIME_UNITS_KEY,
};
use crate::datagram::{SonarConfig, TransducerConfig, TABLE_LEN};
use crate::model::{
    Beam, EchoData, Environment, FixSource, GeoTrack, LabeledGrid, PingSettings, Platform, Provenance, Sonar, TopLevel,
    Vendor,
};
use crate::time::TIME_UNITS;

const FT: [&str; 2] = ["frequency", "ping_time"];
const FTR: [&str; 3] = ["frequency", "ping_time", "range_bin"];

fn time_attrs() -> Attrs {
    let mut a = Attrs::new();
    a.insert(TIME_UNITS_KEY.into(), json!(TIME_UNITS));
    a
}

fn attrs_of(pairs: Vec<(&str, Value)>) -> Attrs {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

struct Writer<'a> {
    root: &'a Path,
    policy: &'a ChunkPolicy,
}

impl Writer<'_> {
    fn put(&self, group: &str, name: &str, shape: &[usize], dims: &[&str], data: ArrayData) -> Result<(), StoreError> {
        put_array(self.root, group, name, shape, dims, data, Attrs::new(), self.policy)
    }

    fn put_with(
        &self,
        group: &str,
        name: &str,
        shape: &[usize],
        dims: &[&str],
        data: ArrayData,
        attrs: Attrs,
    ) -> Result<(), StoreError> {
        put_array(self.root, group, name, shape, dims, data, attrs, self.policy)
    }

    fn f8_1d(&self, group: &str, name: &str, dim: &str, v: &[f64]) -> Result<(), StoreError> {
        self.put(group, name, &[v.len()], &[dim], ArrayData::F8(v.to_vec()))
    }

    fn f8_2d(&self, group: &str, name: &str, a: &Array2<f64>) -> Result<(), StoreError> {
        self.put(group, name, a.shape(), &FT, ArrayData::F8(a.iter().copied().collect()))
    }

    fn f8_3d(&self, group: &str, name: &str, a: &Array3<f64>) -> Result<(), StoreError> {
        self.put(group, name, a.shape(), &FTR, ArrayData::F8(a.iter().copied().collect()))
    }

    fn times(&self, group: &str, name: &str, v: &[i64]) -> Result<(), StoreError> {
        self.put_with(group, name, &[v.len()], &[name], ArrayData::I8(v.to_vec()), time_attrs())
    }
}

/// Writes the seven groups of `ed` under `root`.
pub fn write_echodata(ed: &EchoData, root: &Path, policy: &ChunkPolicy) -> Result<(), StoreError> {
    let w = Writer { root, policy };
    write_group(root, "", &Attrs::new())?;

    write_group(
        root,
        "TopLevel",
        &attrs_of(vec![
            ("conventions", json!(ed.top_level.conventions)),
            ("title", json!(ed.top_level.title)),
        ]),
    )?;

    let env = &ed.environment;
    write_group(root, "Environment", &Attrs::new())?;
    w.f8_1d("Environment", "frequency", "frequency", &env.frequency_hz)?;
    w.f8_1d("Environment", "sound_speed_indicative", "frequency", &env.sound_speed_m_s)?;
    w.f8_1d("Environment", "absorption_indicative", "frequency", &env.absorption_db_m)?;
    w.f8_1d("Environment", "temperature", "frequency", &env.temperature_c)?;

    let p = &ed.platform;
    write_group(root, "Platform", &Attrs::new())?;
    w.times("Platform", "location_time", &p.track.location_time)?;
    w.f8_1d("Platform", "latitude", "location_time", &p.track.latitude_deg)?;
    w.f8_1d("Platform", "longitude", "location_time", &p.track.longitude_deg)?;
    w.put_with(
        "Platform",
        "sentence_type",
        &[p.track.len()],
        &["location_time"],
        ArrayData::I1(p.track.source.iter().map(|s| s.code()).collect()),
        attrs_of(vec![("flag_values", json!([0, 1])), ("flag_meanings", json!("GGA RMC"))]),
    )?;
    w.f8_1d("Platform", "frequency", "frequency", &p.frequency_hz)?;
    w.times("Platform", "ping_time", &p.ping_time)?;
    w.f8_2d("Platform", "transducer_depth", &p.transducer_depth_m)?;
    w.f8_2d("Platform", "heave", &p.heave_m)?;
    w.f8_2d("Platform", "roll", &p.roll_deg)?;
    w.f8_2d("Platform", "pitch", &p.pitch_deg)?;

    let pr = &ed.provenance;
    write_group(
        root,
        "Provenance",
        &attrs_of(vec![
            ("source_filenames", json!(pr.source_filenames)),
            ("software_name", json!(pr.software_name)),
            ("software_version", json!(pr.software_version)),
            ("conversion_time", json!(pr.conversion_time)),
            ("datagram_counts", json!(pr.datagram_counts)),
            ("unknown_datagrams", json!(pr.unknown_datagrams)),
            ("invalid_nmea", json!(pr.invalid_nmea)),
            ("warnings", json!(pr.warnings)),
        ]),
    )?;

    write_sonar(&w, &ed.sonar)?;

    let b = &ed.beam;
    let g = &b.backscatter_r;
    write_group(root, "Beam", &Attrs::new())?;
    w.f8_1d("Beam", "frequency", "frequency", &g.frequency_hz)?;
    w.times("Beam", "ping_time", &g.ping_time)?;
    let range_bin = g.range_bin();
    w.put("Beam", "range_bin", &[range_bin.len()], &["range_bin"], ArrayData::I8(range_bin))?;
    w.put("Beam", "channel", &[b.channel.len()], &["frequency"], ArrayData::I2(b.channel.clone()))?;
    w.f8_3d("Beam", "backscatter_r", &g.values)?;
    w.f8_3d("Beam", "angle_alongship", &b.angle_alongship_deg)?;
    w.f8_3d("Beam", "angle_athwartship", &b.angle_athwartship_deg)?;
    for (name, a) in b.settings.float_fields() {
        w.f8_2d("Beam", name, a)?;
    }
    for (name, a) in b.settings.int_fields() {
        w.put("Beam", name, a.shape(), &FT, ArrayData::I8(a.iter().copied().collect()))?;
    }

    write_group(root, "Vendor", &Attrs::new())?;
    for (name, a) in &ed.vendor.arrays {
        write_array(&StorePath::new(root, "Vendor", name)?, &a.meta, &a.data, &a.attrs)?;
    }
    Ok(())
}

fn write_sonar(w: &Writer<'_>, sonar: &Sonar) -> Result<(), StoreError> {
    let c = &sonar.config;
    let ids: Vec<&str> = c.transducers.iter().map(|t| t.channel_id.as_str()).collect();
    write_group(
        w.root,
        "Sonar",
        &attrs_of(vec![
            ("sonar_model", json!(sonar.sonar_model)),
            ("survey_name", json!(c.survey_name)),
            ("transect_name", json!(c.transect_name)),
            ("sounder_name", json!(c.sounder_name)),
            ("version", json!(c.version)),
            ("channel_id", json!(ids)),
        ]),
    )?;
    let n = c.transducers.len();
    let spare = c.spare.iter().map(|&b| b as i8).collect::<Vec<_>>();
    w.put("Sonar", "header_spare", &[spare.len()], &["header_spare_byte"], ArrayData::I1(spare))?;
    for (name, get) in transducer_scalars() {
        let v = c.transducers.iter().map(get).collect::<Vec<_>>();
        w.put("Sonar", name, &[n], &["channel"], ArrayData::F4(v))?;
    }
    for (name, get) in transducer_tables() {
        let v = c.transducers.iter().flat_map(|t| *get(t)).collect::<Vec<_>>();
        w.put("Sonar", name, &[n, TABLE_LEN], &["channel", "table_entry"], ArrayData::F4(v))?;
    }
    let width = c.transducers.iter().map(|t| t.spare.len()).max().unwrap_or(0);
    let mut spare = Vec::with_capacity(n * width);
    for t in &c.transducers {
        spare.extend(t.spare.iter().map(|&b| b as i8));
        spare.resize(spare.len() + width - t.spare.len(), 0);
    }
    w.put(
        "Sonar",
        "transducer_spare",
        &[n, width],
        &["channel", "transducer_spare_byte"],
        ArrayData::I1(spare),
    )
}

type ScalarGet = fn(&TransducerConfig) -> f32;
type TableGet = fn(&TransducerConfig) -> &[f32; TABLE_LEN];

fn transducer_scalars() -> [(&'static str, ScalarGet); 7] {
    [
        ("transducer_frequency", |t| t.frequency_hz),
        ("gain", |t| t.gain_db),
        ("equivalent_beam_angle", |t| t.equivalent_beam_angle_db),
        ("beamwidth_alongship", |t| t.beamwidth_alongship_deg),
        ("beamwidth_athwartship", |t| t.beamwidth_athwartship_deg),
        ("angle_sensitivity_alongship", |t| t.angle_sensitivity_alongship),
        ("angle_sensitivity_athwartship", |t| t.angle_sensitivity_athwartship),
    ]
}

fn transducer_tables() -> [(&'static str, TableGet); 3] {
    [
        ("pulse_length_table", |t| &t.pulse_length_table_s),
        ("gain_table", |t| &t.gain_table_db),
        ("sa_correction_table", |t| &t.sa_correction_table_db),
    ]
}

fn attr_str(attrs: &Attrs, key: &str) -> String {
    attrs.get(key).and_then(Value::as_str).unwrap_or_default().to_owned()
}

fn attr_u64(attrs: &Attrs, key: &str) -> u64 {
    attrs.get(key).and_then(Value::as_u64).unwrap_or(0)
}

fn attr_strings(attrs: &Attrs, key: &str) -> Vec<String> {
    attrs
        .get(key)
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_owned)).collect())
        .unwrap_or_default()
}

fn shaped2<T>(g: &GroupArrays, name: &str, shape: Vec<usize>, v: Vec<T>) -> Result<Array2<T>, StoreError> {
    match shape[..] {
        [a, b] => Array2::from_shape_vec((a, b), v).map_err(|e| g.corrupt(name, e.to_string())),
        _ => Err(g.corrupt(name, format!("expected 2 dimensions, found {}", shape.len()))),
    }
}

fn shaped3(g: &GroupArrays, name: &str, shape: Vec<usize>, v: Vec<f64>) -> Result<Array3<f64>, StoreError> {
    match shape[..] {
        [a, b, c] => Array3::from_shape_vec((a, b, c), v).map_err(|e| g.corrupt(name, e.to_string())),
        _ => Err(g.corrupt(name, format!("expected 3 dimensions, found {}", shape.len()))),
    }
}

/// Reads a dataset written by [`write_echodata`].
///
/// Arrays the reader does not recognise are kept in the Vendor group; those
/// found outside it are renamed `<group>_<name>`.
pub fn read_echodata(root: &Path) -> Result<EchoData, StoreError> {
    let mut attrs = BTreeMap::new();
    for g in crate::model::GROUP_NAMES {
        attrs.insert(g, read_group_attrs(root, g)?);
    }
    let mut vendor = Vendor::default();

    let top = &attrs["TopLevel"];
    let top_level = TopLevel {
        conventions: attr_str(top, "conventions"),
        title: attr_str(top, "title"),
    };

    let mut g = GroupArrays::load(root, "Environment")?;
    let environment = Environment {
        frequency_hz: g.f8("frequency")?.1,
        sound_speed_m_s: g.f8("sound_speed_indicative")?.1,
        absorption_db_m: g.f8("absorption_indicative")?.1,
        temperature_c: g.f8("temperature")?.1,
    };
    leftovers(g, &mut vendor);

    let mut g = GroupArrays::load(root, "Platform")?;
    let codes = g.i1("sentence_type")?.1;
    let mut source = Vec::with_capacity(codes.len());
    for c in codes {
        source.push(FixSource::from_code(c).ok_or_else(|| g.corrupt("sentence_type", format!("unknown code {c}")))?);
    }
    let track = GeoTrack {
        location_time: g.i8("location_time")?.1,
        latitude_deg: g.f8("latitude")?.1,
        longitude_deg: g.f8("longitude")?.1,
        source,
    };
    let plane = |g: &mut GroupArrays, name: &str| -> Result<Array2<f64>, StoreError> {
        let (shape, v) = g.f8(name)?;
        shaped2(g, name, shape, v)
    };
    let platform = Platform {
        track,
        frequency_hz: g.f8("frequency")?.1,
        ping_time: g.i8("ping_time")?.1,
        transducer_depth_m: plane(&mut g, "transducer_depth")?,
        heave_m: plane(&mut g, "heave")?,
        roll_deg: plane(&mut g, "roll")?,
        pitch_deg: plane(&mut g, "pitch")?,
    };
    leftovers(g, &mut vendor);

    let pa = &attrs["Provenance"];
    let provenance = Provenance {
        source_filenames: attr_strings(pa, "source_filenames"),
        software_name: attr_str(pa, "software_name"),
        software_version: attr_str(pa, "software_version"),
        conversion_time: attr_str(pa, "conversion_time"),
        datagram_counts: pa
            .get("datagram_counts")
            .and_then(Value::as_object)
            .map(|m| m.iter().map(|(k, v)| (k.clone(), v.as_u64().unwrap_or(0))).collect())
            .unwrap_or_default(),
        unknown_datagrams: attr_u64(pa, "unknown_datagrams"),
        invalid_nmea: attr_u64(pa, "invalid_nmea"),
        warnings: attr_strings(pa, "warnings"),
    };
    leftovers(GroupArrays::load(root, "Provenance")?, &mut vendor);
    leftovers(GroupArrays::load(root, "TopLevel")?, &mut vendor);

    let mut g = GroupArrays::load(root, "Sonar")?;
    let sonar = read_sonar(&mut g, &attrs["Sonar"])?;
    leftovers(g, &mut vendor);

    let mut g = GroupArrays::load(root, "Beam")?;
    let frequency_hz = g.f8("frequency")?.1;
    let ping_time = g.i8("ping_time")?.1;
    g.take("range_bin")?;
    let channel = g.i2("channel")?.1;
    let cube = |g: &mut GroupArrays, name: &str| -> Result<Array3<f64>, StoreError> {
        let (shape, v) = g.f8(name)?;
        shaped3(g, name, shape, v)
    };
    let values = cube(&mut g, "backscatter_r")?;
    let angle_alongship_deg = cube(&mut g, "angle_alongship")?;
    let angle_athwartship_deg = cube(&mut g, "angle_athwartship")?;
    let empty = || Array2::zeros((0, 0));
    let mut settings = PingSettings {
        frequency_hz: empty(),
        transmit_power_w: empty(),
        pulse_length_s: empty(),
        bandwidth_hz: empty(),
        sample_interval_s: empty(),
        sound_velocity_m_s: empty(),
        absorption_db_m: empty(),
        temperature_c: empty(),
        mode: Array2::zeros((0, 0)),
        sample_offset: Array2::zeros((0, 0)),
        sample_count: Array2::zeros((0, 0)),
    };
    for (name, slot) in settings.float_fields_mut() {
        let (shape, v) = g.f8(name)?;
        *slot = shaped2(&g, name, shape, v)?;
    }
    for (name, slot) in settings.int_fields_mut() {
        let (shape, v) = g.i8(name)?;
        *slot = shaped2(&g, name, shape, v)?;
    }
    let backscatter_r = LabeledGrid::new(frequency_hz, ping_time, values)
        .map_err(|e| g.corrupt("backscatter_r", e.to_string()))?;
    let beam = Beam {
        backscatter_r,
        angle_alongship_deg,
        angle_athwartship_deg,
        channel,
        settings,
    };
    leftovers(g, &mut vendor);

    let g = GroupArrays::load(root, "Vendor")?;
    vendor.arrays.extend(g.arrays);

    let ed = EchoData {
        top_level,
        environment,
        platform,
        provenance,
        sonar,
        beam,
        vendor,
    };
    ed.validate().map_err(|e| StoreError::CorruptMetadata {
        path: root.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(ed)
}

fn leftovers(g: GroupArrays, vendor: &mut Vendor) {
    for (name, a) in g.arrays {
        vendor.arrays.insert(format!("{}_{}", g.group, name), a);
    }
}

fn read_sonar(g: &mut GroupArrays, attrs: &Attrs) -> Result<Sonar, StoreError> {
    let ids = attr_strings(attrs, "channel_id");
    let n = ids.len();
    let mut transducers: Vec<TransducerConfig> = ids
        .into_iter()
        .map(|channel_id| TransducerConfig {
            channel_id,
            frequency_hz: 0.0,
            gain_db: 0.0,
            equivalent_beam_angle_db: 0.0,
            beamwidth_alongship_deg: 0.0,
            beamwidth_athwartship_deg: 0.0,
            angle_sensitivity_alongship: 0.0,
            angle_sensitivity_athwartship: 0.0,
            pulse_length_table_s: [0.0; TABLE_LEN],
            gain_table_db: [0.0; TABLE_LEN],
            sa_correction_table_db: [0.0; TABLE_LEN],
            spare: Vec::new(),
        })
        .collect();
    let check = |g: &GroupArrays, name: &str, shape: &[usize], want: &[usize]| {
        if shape == want {
            Ok(())
        } else {
            Err(g.corrupt(name, format!("shape {shape:?}, expected {want:?}")))
        }
    };
    let scalar_setters: [fn(&mut TransducerConfig) -> &mut f32; 7] = [
        |t| &mut t.frequency_hz,
        |t| &mut t.gain_db,
        |t| &mut t.equivalent_beam_angle_db,
        |t| &mut t.beamwidth_alongship_deg,
        |t| &mut t.beamwidth_athwartship_deg,
        |t| &mut t.angle_sensitivity_alongship,
        |t| &mut t.angle_sensitivity_athwartship,
    ];
    for ((name, _), set) in transducer_scalars().into_iter().zip(scalar_setters) {
        let (shape, v) = g.f4(name)?;
        check(g, name, &shape, &[n])?;
        for (t, x) in transducers.iter_mut().zip(v) {
            *set(t) = x;
        }
    }
    let table_setters: [fn(&mut TransducerConfig) -> &mut [f32; TABLE_LEN]; 3] = [
        |t| &mut t.pulse_length_table_s,
        |t| &mut t.gain_table_db,
        |t| &mut t.sa_correction_table_db,
    ];
    for ((name, _), set) in transducer_tables().into_iter().zip(table_setters) {
        let (shape, v) = g.f4(name)?;
        check(g, name, &shape, &[n, TABLE_LEN])?;
        for (t, row) in transducers.iter_mut().zip(v.chunks_exact(TABLE_LEN)) {
            set(t).copy_from_slice(row);
        }
    }
    let (shape, spare) = g.i1("transducer_spare")?;
    if shape.len() != 2 || shape[0] != n {
        return Err(g.corrupt("transducer_spare", format!("shape {shape:?}")));
    }
    if shape[1] > 0 {
        for (t, row) in transducers.iter_mut().zip(spare.chunks_exact(shape[1])) {
            t.spare = row.iter().map(|&b| b as u8).collect();
        }
    }
    let header_spare = g.i1("header_spare")?.1.into_iter().map(|b| b as u8).collect();
    Ok(Sonar {
        sonar_model: attr_str(attrs, "sonar_model"),
        config: SonarConfig {
            survey_name: attr_str(attrs, "survey_name"),
            transect_name: attr_str(attrs, "transect_name"),
            sounder_name: attr_str(attrs, "sounder_name"),
            version: attr_str(attrs, "version"),
            spare: header_spare,
            transducers,
        },
    })
}
