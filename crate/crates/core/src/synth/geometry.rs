//! Microphone array geometries. The presets mirror the four recording
//! devices' channel counts and sample formats; exact coordinates are
//! desk-scale stand-ins (linear arrays and a 5 cm circle).

use crate::error::{Error, Result};

/// Microphone positions in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub name: String,
    pub mics: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    pub fn new(name: impl Into<String>, mics: Vec<[f64; 3]>) -> Result<Self> {
        let g = ArrayGeometry {
            name: name.into(),
            mics,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mics.is_empty() {
            return Err(Error::Geometry("array needs at least one microphone".into()));
        }
        for (i, m) in self.mics.iter().enumerate() {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Geometry(format!("microphone {i} at non-finite position")));
            }
        }
        for i in 0..self.mics.len() {
            for j in i + 1..self.mics.len() {
                if distance(&self.mics[i], &self.mics[j]) <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "microphones {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn channel_count(&self) -> usize {
        self.mics.len()
    }
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Named array preset: geometry plus the device's recording format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryPreset {
    /// 2-mic linear, 44.1 kHz / 16-bit.
    D1,
    /// 4-mic linear, 44.1 kHz / 16-bit.
    D2,
    /// 6-mic circular, 44.1 kHz / 32-bit.
    D3,
    /// 6-mic circular plus center, 16 kHz / 16-bit.
    D4,
}

impl GeometryPreset {
    pub fn name(self) -> &'static str {
        match self {
            GeometryPreset::D1 => "d1",
            GeometryPreset::D2 => "d2",
            GeometryPreset::D3 => "d3",
            GeometryPreset::D4 => "d4",
        }
    }

    pub fn default_sample_rate(self) -> u32 {
        match self {
            GeometryPreset::D4 => 16_000,
            _ => 44_100,
        }
    }

    pub fn default_bit_depth(self) -> u16 {
        match self {
            GeometryPreset::D3 => 32,
            _ => 16,
        }
    }

    pub fn geometry(self) -> ArrayGeometry {
        let mics = match self {
            GeometryPreset::D1 => vec![[-0.035, 0.0, 0.0], [0.035, 0.0, 0.0]],
            GeometryPreset::D2 => vec![
                [-0.075, 0.0, 0.0],
                [-0.025, 0.0, 0.0],
                [0.025, 0.0, 0.0],
                [0.075, 0.0, 0.0],
            ],
            GeometryPreset::D3 => circle(6, 0.05),
            GeometryPreset::D4 => {
                let mut mics = circle(6, 0.05);
                mics.push([0.0, 0.0, 0.0]);
                mics
            }
        };
        ArrayGeometry::new(self.name(), mics).expect("presets are valid")
    }
}

impl std::str::FromStr for GeometryPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d1" => Ok(GeometryPreset::D1),
            "d2" => Ok(GeometryPreset::D2),
            "d3" => Ok(GeometryPreset::D3),
            "d4" => Ok(GeometryPreset::D4),
            other => Err(Error::InvalidInput(format!(
                "unknown geometry preset '{other}' (expected d1..d4)"
            ))),
        }
    }
}

fn circle(n: usize, radius: f64) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [radius * angle.cos(), radius * angle.sin(), 0.0]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_the_documented_channel_counts() {
        assert_eq!(GeometryPreset::D1.geometry().channel_count(), 2);
        assert_eq!(GeometryPreset::D2.geometry().channel_count(), 4);
        assert_eq!(GeometryPreset::D3.geometry().channel_count(), 6);
        assert_eq!(GeometryPreset::D4.geometry().channel_count(), 7);
        assert_eq!(GeometryPreset::D4.default_sample_rate(), 16_000);
        assert_eq!(GeometryPreset::D3.default_bit_depth(), 32);
    }

    #[test]
    fn coincident_microphones_are_rejected() {
        let res = ArrayGeometry::new("bad", vec![[0.0; 3], [0.0; 3]]);
        assert!(matches!(res, Err(Error::Geometry(_))));
    }

    #[test]
    fn preset_parsing() {
        assert_eq!("d2".parse::<GeometryPreset>().unwrap(), GeometryPreset::D2);
        assert!("d9".parse::<GeometryPreset>().is_err());
    }
}
