//! Quick-look echogram rasters.

use serde::Deserialize;
use thiserror::Error;

use crate::calibrate::SvGrid;

pub const DEFAULT_VMIN: f64 = -80.0;
pub const DEFAULT_VMAX: f64 = -30.0;

const DEFAULT_PALETTE_JSON: &str = include_str!("../data/ek500_palette.json");

#[derive(Debug, Error)]
pub enum EchogramError {
    #[error("frequency {0} Hz not in grid")]
    FrequencyNotFound(f64),
    #[error("invalid display range: vmin {vmin} must be below vmax {vmax}")]
    InvalidRange { vmin: f64, vmax: f64 },
    #[error("invalid palette: {0}")]
    InvalidPalette(String),
}

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Palette {
    pub colors: Vec<Rgb>,
    pub below: Rgb,
    pub nan: Rgb,
}

impl Palette {
    /// The 13-step EK500-style table shipped with the crate.
    pub fn ek500() -> Palette {
        Palette::from_json(DEFAULT_PALETTE_JSON).expect("bundled palette is valid")
    }

    pub fn from_json(text: &str) -> Result<Palette, EchogramError> {
        let p: Palette = serde_json::from_str(text).map_err(|e| EchogramError::InvalidPalette(e.to_string()))?;
        if p.colors.len() < 2 {
            return Err(EchogramError::InvalidPalette(format!(
                "need at least 2 colors, got {}",
                p.colors.len()
            )));
        }
        Ok(p)
    }
}

/// Where one Sv value lands in the palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shade {
    Below,
    Nan,
    Index(usize),
}

/// `floor(n·(sv − vmin)/(vmax − vmin))`, clamped to `n − 1`.
pub fn shade(sv: f64, vmin: f64, vmax: f64, n: usize) -> Shade {
    if sv.is_nan() {
        Shade::Nan
    } else if sv < vmin {
        Shade::Below
    } else {
        let x = (n as f64 * (sv - vmin) / (vmax - vmin)).floor();
        Shade::Index((x as usize).min(n - 1))
    }
}

/// 8-bit RGB raster, row-major, row 0 at the shallowest range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
}

/// Renders one frequency: one column per ping, one row per range bin.
pub fn render(sv: &SvGrid, frequency_hz: f64, vmin: f64, vmax: f64, palette: &Palette) -> Result<Raster, EchogramError> {
    if !(vmin < vmax) {
        return Err(EchogramError::InvalidRange { vmin, vmax });
    }
    let f = sv
        .grid
        .frequency_index(frequency_hz)
        .ok_or(EchogramError::FrequencyNotFound(frequency_hz))?;
    let (_, nt, nr) = sv.grid.values.dim();
    let mut rgb = Vec::with_capacity(nt * nr * 3);
    for k in 0..nr {
        for t in 0..nt {
            let c = match shade(sv.grid.values[[f, t, k]], vmin, vmax, palette.colors.len()) {
                Shade::Below => palette.below,
                Shade::Nan => palette.nan,
                Shade::Index(i) => palette.colors[i],
            };
            rgb.extend_from_slice(&c);
        }
    }
    Ok(Raster {
        width: nt as u32,
        height: nr as u32,
        rgb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_rule() {
        assert_eq!(shade(-80.0, -80.0, -30.0, 13), Shade::Index(0));
        assert_eq!(shade(-30.0 - 1e-9, -80.0, -30.0, 13), Shade::Index(12));
        assert_eq!(shade(-30.0, -80.0, -30.0, 13), Shade::Index(12));
        assert_eq!(shade(0.0, -80.0, -30.0, 13), Shade::Index(12));
        assert_eq!(shade(-80.1, -80.0, -30.0, 13), Shade::Below);
        assert_eq!(shade(f64::NAN, -80.0, -30.0, 13), Shade::Nan);
        // 13 bins of 50/13 dB; -55 sits at 25/(50/13) = 6.5
        assert_eq!(shade(-55.0, -80.0, -30.0, 13), Shade::Index(6));
    }

    #[test]
    fn bundled_palette() {
        let p = Palette::ek500();
        assert_eq!(p.colors.len(), 13);
        assert!(Palette::from_json(r#"{"colors": [[0,0,0]], "below": [0,0,0], "nan": [0,0,0]}"#).is_err());
        assert!(Palette::from_json(r#"{"colors": [[0,0,256],[0,0,0]], "below": [0,0,0], "nan": [0,0,0]}"#).is_err());
    }
}
