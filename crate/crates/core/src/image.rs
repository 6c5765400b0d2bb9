//! Reshaping images into higher-order tensors.
//!
//! Pixel row `r` is written in mixed radix over the row factors, most
//! significant digit first (so for factors `(6, 10, 10)` the first mode is
//! the coarsest); columns likewise. Modes are ordered row digits, column
//! digits, channel. With interleaving, row and column digits alternate
//! coarse to fine instead.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TnError};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensorization {
    pub row_factors: Vec<usize>,
    pub col_factors: Vec<usize>,
    /// Alternate row and column digits (requires equally many of each).
    pub interleave: bool,
}

impl Tensorization {
    /// `600 × 600 (× 3)` as `6 × 10 × 10 × 6 × 10 × 10 (× 3)`.
    pub fn einstein() -> Self {
        Self {
            row_factors: vec![6, 10, 10],
            col_factors: vec![6, 10, 10],
            interleave: false,
        }
    }

    /// `256 × 256` as `4^8`, row and column digits interleaved.
    pub fn live4x8() -> Self {
        Self {
            row_factors: vec![4; 4],
            col_factors: vec![4; 4],
            interleave: true,
        }
    }

    pub fn height(&self) -> usize {
        self.row_factors.iter().product()
    }

    pub fn width(&self) -> usize {
        self.col_factors.iter().product()
    }

    fn validate(&self) -> Result<()> {
        if self.row_factors.is_empty() || self.col_factors.is_empty() {
            return Err(TnError::InvalidConfig("empty factor list".into()));
        }
        if self.row_factors.iter().chain(&self.col_factors).any(|&f| f == 0) {
            return Err(TnError::InvalidConfig("zero factor".into()));
        }
        if self.interleave && self.row_factors.len() != self.col_factors.len() {
            return Err(TnError::InvalidConfig(
                "interleaving needs as many row factors as column factors".into(),
            ));
        }
        Ok(())
    }

    /// Permutation from the plain (rows, cols, channel) digit order to the
    /// output order.
    fn axes(&self, with_channel: bool) -> Vec<usize> {
        let nr = self.row_factors.len();
        let nc = self.col_factors.len();
        let mut axes: Vec<usize> = if self.interleave {
            (0..nr).flat_map(|i| [i, nr + i]).collect()
        } else {
            (0..nr + nc).collect()
        };
        if with_channel {
            axes.push(nr + nc);
        }
        axes
    }

    /// Output dims for an image with `channels` channels (`None` for a
    /// 2-D image).
    pub fn output_dims(&self, channels: Option<usize>) -> Vec<usize> {
        let mut plain: Vec<usize> = self.row_factors.iter().chain(&self.col_factors).copied().collect();
        if let Some(c) = channels {
            plain.push(c);
        }
        self.axes(channels.is_some()).iter().map(|&a| plain[a]).collect()
    }

    /// `H × W` or `H × W × C` pixels to the tensorized layout.
    pub fn tensorize(&self, pixels: &DenseTensor) -> Result<DenseTensor> {
        self.validate()?;
        let (h, w, channels) = match pixels.dims() {
            &[h, w] => (h, w, None),
            &[h, w, c] => (h, w, Some(c)),
            other => {
                return Err(TnError::InvalidShape {
                    dims: other.to_vec(),
                    reason: "image must be H×W or H×W×C".into(),
                })
            }
        };
        if h != self.height() || w != self.width() {
            return Err(TnError::InvalidShape {
                dims: pixels.dims().to_vec(),
                reason: format!(
                    "factors {:?}/{:?} describe a {}×{} image",
                    self.row_factors,
                    self.col_factors,
                    self.height(),
                    self.width()
                ),
            });
        }
        let mut plain: Vec<usize> = self.row_factors.iter().chain(&self.col_factors).copied().collect();
        if let Some(c) = channels {
            plain.push(c);
        }
        pixels.reshape(plain)?.permute(&self.axes(channels.is_some()))
    }

    /// Inverse of [`Tensorization::tensorize`].
    pub fn detensorize(&self, t: &DenseTensor, channels: Option<usize>) -> Result<DenseTensor> {
        self.validate()?;
        let expected = self.output_dims(channels);
        if t.dims() != expected.as_slice() {
            return Err(TnError::InvalidShape {
                dims: t.dims().to_vec(),
                reason: format!("expected tensorized dims {expected:?}"),
            });
        }
        let axes = self.axes(channels.is_some());
        let mut inverse = vec![0; axes.len()];
        for (pos, &a) in axes.iter().enumerate() {
            inverse[a] = pos;
        }
        let mut dims = vec![self.height(), self.width()];
        if let Some(c) = channels {
            dims.push(c);
        }
        t.permute(&inverse)?.into_reshape(dims)
    }
}

impl FromStr for Tensorization {
    type Err = TnError;

    /// `einstein`, `live4x8`, or `custom:<rows>/<cols>` with factors joined
    /// by `x`, e.g. `custom:6x10/6x10`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "einstein" => return Ok(Self::einstein()),
            "live4x8" => return Ok(Self::live4x8()),
            _ => {}
        }
        let spec = s.strip_prefix("custom:").ok_or_else(|| {
            TnError::InvalidConfig(format!(
                "unknown preset '{s}' (expected einstein, live4x8 or custom:<rows>/<cols>)"
            ))
        })?;
        let (rows, cols) = spec
            .split_once('/')
            .ok_or_else(|| TnError::InvalidConfig(format!("custom factors '{spec}' need a '/'")))?;
        let parse = |part: &str| {
            part.split('x')
                .map(|f| {
                    f.trim()
                        .parse::<usize>()
                        .map_err(|_| TnError::InvalidConfig(format!("bad factor '{f}'")))
                })
                .collect::<Result<Vec<_>>>()
        };
        let t = Self {
            row_factors: parse(rows)?,
            col_factors: parse(cols)?,
            interleave: false,
        };
        t.validate()?;
        Ok(t)
    }
}

impl fmt::Display for Tensorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::einstein() {
            return f.write_str("einstein");
        }
        if *self == Self::live4x8() {
            return f.write_str("live4x8");
        }
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x");
        write!(f, "custom:{}/{}", join(&self.row_factors), join(&self.col_factors))
    }
}

/// A smooth synthetic `h × w × channels` image with values in `[0, 1]`:
/// a few Gaussian blobs and plane waves per channel plus faint noise.
pub fn synthetic_image(h: usize, w: usize, channels: usize, seed: u64) -> Result<DenseTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    struct Blob {
        y: f64,
        x: f64,
        s: f64,
        a: f64,
    }
    struct Wave {
        ky: f64,
        kx: f64,
        phase: f64,
        a: f64,
    }
    let mut layers = Vec::new();
    for _ in 0..channels {
        let blobs: Vec<Blob> = (0..4)
            .map(|_| Blob {
                y: rng.random_range(0.0..1.0),
                x: rng.random_range(0.0..1.0),
                s: rng.random_range(0.08..0.3),
                a: rng.random_range(-1.0..1.0),
            })
            .collect();
        let waves: Vec<Wave> = (0..2)
            .map(|_| Wave {
                ky: rng.random_range(0.5..4.0),
                kx: rng.random_range(0.5..4.0),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                a: rng.random_range(0.05..0.25),
            })
            .collect();
        layers.push((blobs, waves));
    }
    let noise: Vec<f64> = (0..h * w * channels).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut raw = DenseTensor::from_fn(vec![h, w, channels], |ix| {
        let (y, x) = (ix[0] as f64 / h as f64, ix[1] as f64 / w as f64);
        let (blobs, waves) = &layers[ix[2]];
        let mut v = 0.0;
        for b in blobs {
            v += b.a * (-((y - b.y).powi(2) + (x - b.x).powi(2)) / (2.0 * b.s * b.s)).exp();
        }
        for wv in waves {
            v += wv.a * (std::f64::consts::TAU * (wv.ky * y + wv.kx * x) + wv.phase).sin();
        }
        v
    })?;
    for (v, n) in raw.data_mut().iter_mut().zip(&noise) {
        *v += n;
    }
    let (lo, hi) = raw
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    for v in raw.data_mut() {
        *v = (*v - lo) / span;
    }
    Ok(raw)
}
