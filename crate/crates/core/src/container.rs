//! The HHFLD field container.
//!
//! Layout: `b"HHFLD"`, version byte `0x01`, little-endian `u32` header length,
//! a UTF-8 JSON header, then the values as interleaved little-endian `f64`
//! pairs `(re, im)` in row-major order.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, RadialField, SpaceTimeField};
use crate::grid::{Grid, TimeGrid};
use crate::htransform::{SpectralField, TailDiagnostics};
use crate::restriction::{SurfacePoint, SurfaceValues};

pub const MAGIC: &[u8; 5] = b"HHFLD";
pub const VERSION: u8 = 0x01;
pub const SCHEMA: &str = "hhfld/1";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("not an HHFLD container (bad magic)")]
    Magic,
    #[error("unsupported HHFLD version {0}")]
    Version(u8),
    #[error("container truncated: {0}")]
    Truncated(&'static str),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload holds {got} values, header implies {want}")]
    Payload { got: usize, want: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Radial,
    Spectral,
    Spacetime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub kind: Kind,
    pub d: usize,
    /// Absent for surface value sets, which carry `points` instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    pub dtype: String,
    pub order: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<SurfacePoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<TailDiagnostics>,
}

impl Header {
    fn new(kind: Kind, d: usize, grid: Option<Grid>, shape: Vec<usize>) -> Self {
        Self {
            schema: SCHEMA.into(),
            kind,
            d,
            grid,
            dtype: "c128le".into(),
            order: "row-major".into(),
            shape,
            l_max: None,
            lambdas: None,
            times: None,
            points: None,
            tail: None,
            diagnostics: None,
        }
    }
}

/// Anything that can live in a container.
#[derive(Debug, Clone, PartialEq)]
pub enum Stored {
    Radial(RadialField),
    Spectral(SpectralField),
    SpaceTime(SpaceTimeField),
    Surface(SurfaceValues),
}

impl Stored {
    pub fn kind(&self) -> Kind {
        match self {
            Stored::Radial(_) => Kind::Radial,
            Stored::Spectral(_) | Stored::Surface(_) => Kind::Spectral,
            Stored::SpaceTime(_) => Kind::Spacetime,
        }
    }

    fn header_and_values(&self) -> (Header, &[Complex64]) {
        match self {
            Stored::Radial(f) => {
                let h = Header::new(
                    Kind::Radial,
                    f.grid.d,
                    Some(f.grid.clone()),
                    vec![f.grid.n_rho(), f.grid.n_s()],
                );
                (h, &f.values)
            }
            Stored::Spectral(t) => {
                let mut h = Header::new(
                    Kind::Spectral,
                    t.grid.d,
                    Some(t.grid.clone()),
                    vec![t.l_max + 1, t.grid.n_s()],
                );
                h.l_max = Some(t.l_max);
                h.lambdas = Some(t.grid.s.lambdas());
                h.diagnostics = Some(t.diagnostics);
                (h, &t.values)
            }
            Stored::SpaceTime(u) => {
                let g = &u.grid;
                let mut h = Header::new(
                    Kind::Spacetime,
                    g.d,
                    Some(g.clone()),
                    vec![u.times.len(), g.n_rho(), g.n_s()],
                );
                h.times = Some(u.times.nodes.clone());
                (h, &u.values)
            }
            Stored::Surface(v) => {
                let mut h = Header::new(Kind::Spectral, v.d, None, vec![v.values.len()]);
                h.l_max = Some(v.l_max);
                h.lambdas = Some(v.points.iter().map(|p| p.lambda).collect());
                h.points = Some(v.points.clone());
                h.tail = Some(v.tail);
                (h, &v.values)
            }
        }
    }
}

pub fn encode(item: &Stored) -> Vec<u8> {
    let (header, values) = item.header_and_values();
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(10 + json.len() + 16 * values.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&u32::try_from(json.len()).expect("header below 4 GiB").to_le_bytes());
    out.extend_from_slice(&json);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_header(bytes: &[u8]) -> Result<(Header, &[u8]), ContainerError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(ContainerError::Magic);
    }
    let rest = &bytes[MAGIC.len()..];
    let (&version, rest) = rest.split_first().ok_or(ContainerError::Truncated("version"))?;
    if version != VERSION {
        return Err(ContainerError::Version(version));
    }
    if rest.len() < 4 {
        return Err(ContainerError::Truncated("header length"));
    }
    let len = u32::from_le_bytes(rest[..4].try_into().expect("four bytes")) as usize;
    let rest = &rest[4..];
    if rest.len() < len {
        return Err(ContainerError::Truncated("header"));
    }
    let header: Header = serde_json::from_slice(&rest[..len]).map_err(|e| ContainerError::Header(e.to_string()))?;
    if header.schema != SCHEMA || header.dtype != "c128le" || header.order != "row-major" {
        return Err(ContainerError::Header(format!(
            "unsupported schema/dtype/order {}/{}/{}",
            header.schema, header.dtype, header.order
        )));
    }
    Ok((header, &rest[len..]))
}

pub fn decode(bytes: &[u8]) -> Result<Stored, ContainerError> {
    let (h, payload) = decode_header(bytes)?;
    if payload.len() % 16 != 0 {
        return Err(ContainerError::Truncated("payload"));
    }
    let values: Vec<Complex64> = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("eight bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("eight bytes"));
            Complex64::new(re, im)
        })
        .collect();
    let want: usize = h.shape.iter().product();
    if values.len() != want {
        return Err(ContainerError::Payload {
            got: values.len(),
            want,
        });
    }
    let missing = |what: &str| ContainerError::Header(format!("kind {:?} needs {what}", h.kind));
    let grid = || h.grid.clone().ok_or_else(|| missing("grid"));
    let check_shape = |expect: Vec<usize>| {
        if h.shape == expect {
            Ok(())
        } else {
            Err(ContainerError::Header(format!(
                "shape {:?} does not match the grid {:?}",
                h.shape, expect
            )))
        }
    };
    match h.kind {
        Kind::Radial => {
            let g = grid()?;
            check_shape(vec![g.n_rho(), g.n_s()])?;
            Ok(Stored::Radial(RadialField::new(g, values)?))
        }
        Kind::Spacetime => {
            let g = grid()?;
            let times = TimeGrid {
                nodes: h.times.clone().ok_or_else(|| missing("times"))?,
            };
            check_shape(vec![times.len(), g.n_rho(), g.n_s()])?;
            Ok(Stored::SpaceTime(SpaceTimeField { grid: g, times, values }))
        }
        Kind::Spectral => {
            let l_max = h.l_max.ok_or_else(|| missing("l_max"))?;
            match (&h.grid, &h.points) {
                (Some(g), None) => {
                    check_shape(vec![l_max + 1, g.n_s()])?;
                    Ok(Stored::Spectral(SpectralField {
                        grid: g.clone(),
                        l_max,
                        values,
                        diagnostics: h.diagnostics.unwrap_or_default(),
                    }))
                }
                (None, Some(points)) => {
                    check_shape(vec![points.len()])?;
                    Ok(Stored::Surface(SurfaceValues {
                        d: h.d,
                        l_max,
                        points: points.clone(),
                        values,
                        tail: h.tail.unwrap_or(0.0),
                    }))
                }
                _ => Err(ContainerError::Header(
                    "spectral containers need exactly one of grid or points".into(),
                )),
            }
        }
    }
}

pub fn write(path: &Path, item: &Stored) -> Result<(), ContainerError> {
    Ok(fs::write(path, encode(item))?)
}

pub fn read(path: &Path) -> Result<Stored, ContainerError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::GaussianPacket;
    use crate::htransform::forward;
    use crate::restriction::{restrict_sphere, RestrictOptions, SphereMeasure};

    fn field() -> RadialField {
        GaussianPacket {
            a: 1.0,
            sigma: 2.0,
            kappa: 0.3,
            s0: 0.1,
            phase: 0.7,
        }
        .field(&Grid::new(1, 24, 7.0, 32, 10.0))
    }

    fn round_trip(item: Stored) {
        let bytes = encode(&item);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, item);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn every_kind_round_trips_bit_exactly() {
        let f = field();
        round_trip(Stored::Spectral(forward(&f, 8)));
        let u = SpaceTimeField::from_slices(TimeGrid::uniform(0.0, 1.0, 3), vec![f.clone(); 3]).unwrap();
        round_trip(Stored::SpaceTime(u));
        let opts = RestrictOptions {
            l_max: 6,
            ..Default::default()
        };
        round_trip(Stored::Surface(
            restrict_sphere(&f, &SphereMeasure::unit(), &opts).unwrap(),
        ));
        let mut odd = f;
        odd.values[3] = Complex64::new(-0.0, f64::MIN_POSITIVE / 3.0);
        odd.values[5] = Complex64::new(1.0 / 3.0, -1e300);
        round_trip(Stored::Radial(odd));
    }

    #[test]
    fn layout_prefix() {
        let bytes = encode(&Stored::Radial(field()));
        assert_eq!(&bytes[..5], b"HHFLD");
        assert_eq!(bytes[5], 1);
        let len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&bytes[10..10 + len]).unwrap();
        assert_eq!(header["kind"], "radial");
        assert_eq!(header["dtype"], "c128le");
        assert_eq!(bytes.len(), 10 + len + 16 * 24 * 32);
    }

    #[test]
    fn malformed_inputs_rejected() {
        let bytes = encode(&Stored::Radial(field()));
        assert!(matches!(decode(b"HHF"), Err(ContainerError::Magic)));
        let mut v = bytes.clone();
        v[5] = 2;
        assert!(matches!(decode(&v), Err(ContainerError::Version(2))));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 8]),
            Err(ContainerError::Truncated(_))
        ));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 16]),
            Err(ContainerError::Payload { .. })
        ));
        assert!(matches!(decode(&bytes[..12]), Err(ContainerError::Truncated("header"))));
        let mut v = bytes;
        v[12] = b'#';
        assert!(matches!(decode(&v), Err(ContainerError::Header(_))));
    }
}
