//! The `LPT1` file format: a 4-byte magic, a little-endian `u32` header
//! length, a JSON header and a row-major little-endian `f32` payload
//! (complex values interleaved as `re, im`).

use std::io::Write;
use std::path::Path;

use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::geometry::GridSpec;
use crate::kernel::{KernelKind, KernelSpectrum};
use crate::raster::Raster;

pub const MAGIC: &[u8; 4] = b"LPT1";

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
    #[error("bad magic {0:?}, expected \"LPT1\"")]
    BadMagic([u8; 4]),
    #[error("truncated container: {0}")]
    Truncated(String),
    #[error("header schema violation: {0}")]
    Schema(String),
    #[error("payload shape mismatch: {0}")]
    Shape(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

type CResult<T> = std::result::Result<T, ContainerError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContainerKind {
    Image,
    Sinogram,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    C32,
}

impl Dtype {
    pub fn components(self) -> usize {
        match self {
            Dtype::F32 => 1,
            Dtype::C32 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: ContainerKind,
    pub rows: usize,
    pub cols: usize,
    pub dtype: Dtype,
    pub grid: GridSpec,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Real(Vec<f32>),
    Complex(Vec<Complex32>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::Real(v) => v.len(),
            Payload::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Payload::Real(_) => Dtype::F32,
            Payload::Complex(_) => Dtype::C32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: Header,
    pub payload: Payload,
}

impl Container {
    /// Stores a raster as `f32`; values are rounded to nearest.
    pub fn from_raster(kind: ContainerKind, raster: &Raster, meta: Map<String, Value>) -> Self {
        Self {
            header: Header {
                kind,
                rows: raster.rows(),
                cols: raster.cols(),
                dtype: Dtype::F32,
                grid: raster.grid,
                meta,
            },
            payload: Payload::Real(raster.data.iter().map(|&v| v as f32).collect()),
        }
    }

    /// Stores a kernel spectrum in FFT order on the coarse sector grid.
    pub fn from_spectrum(
        spec: &KernelSpectrum,
        grid: GridSpec,
        mut meta: Map<String, Value>,
    ) -> Self {
        let kind = match spec.kind {
            KernelKind::Radon => "radon",
            KernelKind::Backprojection => "backprojection",
        };
        meta.insert("kernel".into(), kind.into());
        meta.insert("beta".into(), spec.beta.into());
        meta.insert("theta_period".into(), spec.theta_period.into());
        meta.insert("rho_period".into(), spec.rho_period.into());
        meta.insert("order".into(), "fft".into());
        Self {
            header: Header {
                kind: ContainerKind::Spectrum,
                rows: spec.rows,
                cols: spec.cols,
                dtype: Dtype::C32,
                grid,
                meta,
            },
            payload: Payload::Complex(
                spec.coeffs
                    .iter()
                    .map(|z| Complex32::new(z.re as f32, z.im as f32))
                    .collect(),
            ),
        }
    }

    /// The payload as an `f64` raster; fails for complex data or for a
    /// container of a different kind.
    pub fn to_raster(&self, expected: ContainerKind) -> CResult<Raster> {
        if self.header.kind != expected {
            return Err(ContainerError::Schema(format!(
                "expected a {expected:?} container, found {:?}",
                self.header.kind
            )));
        }
        match &self.payload {
            Payload::Real(v) => Ok(Raster {
                grid: self.header.grid,
                data: v.iter().map(|&x| x as f64).collect(),
            }),
            Payload::Complex(_) => Err(ContainerError::Schema(
                "complex payload cannot be read as a raster".into(),
            )),
        }
    }

    pub fn to_complex(&self) -> CResult<Vec<Complex64>> {
        match &self.payload {
            Payload::Complex(v) => Ok(v
                .iter()
                .map(|z| Complex64::new(z.re as f64, z.im as f64))
                .collect()),
            Payload::Real(_) => Err(ContainerError::Schema("payload is real".into())),
        }
    }

    fn validate(&self) -> CResult<()> {
        let h = &self.header;
        if h.grid.rows != h.rows || h.grid.cols != h.cols {
            return Err(ContainerError::Shape(format!(
                "header is {}x{} but grid is {}x{}",
                h.rows, h.cols, h.grid.rows, h.grid.cols
            )));
        }
        if self.payload.dtype() != h.dtype {
            return Err(ContainerError::Schema(format!(
                "payload is {:?} but header says {:?}",
                self.payload.dtype(),
                h.dtype
            )));
        }
        if self.payload.len() != h.rows * h.cols {
            return Err(ContainerError::Shape(format!(
                "payload holds {} values, header says {}x{}",
                self.payload.len(),
                h.rows,
                h.cols
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> CResult<Vec<u8>> {
        self.validate()?;
        let header =
            serde_json::to_vec(&self.header).map_err(|e| ContainerError::Schema(e.to_string()))?;
        let hlen = u32::try_from(header.len())
            .map_err(|_| ContainerError::Schema("header too long".into()))?;
        let mut out = Vec::with_capacity(
            8 + header.len() + 4 * self.payload.len() * self.header.dtype.components(),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&hlen.to_le_bytes());
        out.extend_from_slice(&header);
        match &self.payload {
            Payload::Real(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::Complex(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> CResult<Self> {
        if bytes.len() < 8 {
            return Err(ContainerError::Truncated(format!(
                "{} bytes, the fixed prefix needs 8",
                bytes.len()
            )));
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if &magic != MAGIC {
            return Err(ContainerError::BadMagic(magic));
        }
        let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let body = &bytes[8..];
        if body.len() < hlen {
            return Err(ContainerError::Truncated(format!(
                "header needs {hlen} bytes, {} present",
                body.len()
            )));
        }
        let header: Header = serde_json::from_slice(&body[..hlen])
            .map_err(|e| ContainerError::Schema(e.to_string()))?;
        let payload = &body[hlen..];
        let row_bytes = header.cols * 4 * header.dtype.components();
        let expected = header.rows * row_bytes;
        if payload.len() != expected {
            if row_bytes == 0 || !payload.len().is_multiple_of(row_bytes) {
                return Err(ContainerError::Truncated(format!(
                    "payload of {} bytes ends inside a row of {row_bytes} bytes",
                    payload.len()
                )));
            }
            return Err(ContainerError::Shape(format!(
                "payload holds {} rows, header says {}",
                payload.len() / row_bytes,
                header.rows
            )));
        }
        let words = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
        let payload = match header.dtype {
            Dtype::F32 => Payload::Real(words.collect()),
            Dtype::C32 => {
                let w: Vec<f32> = words.collect();
                Payload::Complex(
                    w.chunks_exact(2)
                        .map(|p| Complex32::new(p[0], p[1]))
                        .collect(),
                )
            }
        };
        let c = Container { header, payload };
        c.validate()?;
        Ok(c)
    }
}

pub fn write_container(path: impl AsRef<Path>, data: &Container) -> CResult<()> {
    let bytes = data.to_bytes()?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_container(path: impl AsRef<Path>) -> CResult<Container> {
    Container::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sampling_plan;
    use rand::{Rng, SeedableRng};

    fn image(n: usize) -> Container {
        let grid = sampling_plan(n, 3).unwrap().image_grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let data = (0..n * n).map(|_| rng.random::<f64>() - 0.5).collect();
        Container::from_raster(
            ContainerKind::Image,
            &Raster::from_vec(grid, data).unwrap(),
            Map::new(),
        )
    }

    #[test]
    fn roundtrip_bytes() {
        let c = image(32);
        let b = c.to_bytes().unwrap();
        let back = Container::from_bytes(&b).unwrap();
        assert_eq!(back.to_bytes().unwrap(), b);
        assert_eq!(back, c);
    }

    #[test]
    fn payload_size() {
        let b = image(64).to_bytes().unwrap();
        let hlen = u32::from_le_bytes(b[4..8].try_into().unwrap()) as usize;
        assert_eq!(b.len() - 8 - hlen, 4 * 64 * 64);
    }

    #[test]
    fn distinct_errors() {
        let b = image(32).to_bytes().unwrap();
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(
            Container::from_bytes(&bad),
            Err(ContainerError::BadMagic(_))
        ));
        assert!(matches!(
            Container::from_bytes(&b[..b.len() - 3]),
            Err(ContainerError::Truncated(_))
        ));
        assert!(matches!(
            Container::from_bytes(&b[..6]),
            Err(ContainerError::Truncated(_))
        ));
        assert!(matches!(
            Container::from_bytes(&b[..20]),
            Err(ContainerError::Truncated(_))
        ));
        assert!(matches!(
            Container::from_bytes(&b[..b.len() - 4 * 32]),
            Err(ContainerError::Shape(_))
        ));
        let mut junk = b[..8].to_vec();
        junk[4..8].copy_from_slice(&2u32.to_le_bytes());
        junk.extend_from_slice(b"{}");
        assert!(matches!(
            Container::from_bytes(&junk),
            Err(ContainerError::Schema(_))
        ));
    }

    #[test]
    fn kind_checked() {
        let c = image(32);
        assert!(c.to_raster(ContainerKind::Sinogram).is_err());
        assert!(c.to_raster(ContainerKind::Image).is_ok());
    }
}
