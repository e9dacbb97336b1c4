//! Pixel samples, datasets, min-max normalization, training-set assembly and
//! scene classification.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::classifier::predict_one;
use crate::nn::Mlp;
use crate::{Error, Result, BANDS, BAND_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    BuiltUp,
    NonBuiltUp,
}

impl Label {
    /// Name used in CSV files.
    pub fn as_str(self) -> &'static str {
        match self {
            Label::BuiltUp => "builtup",
            Label::NonBuiltUp => "nonbuiltup",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "builtup" => Some(Label::BuiltUp),
            "nonbuiltup" => Some(Label::NonBuiltUp),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Label::BuiltUp => Label::NonBuiltUp,
            Label::NonBuiltUp => Label::BuiltUp,
        }
    }
}

/// Where a sample came from. Generated sets are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Provenance {
    Original,
    Generated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSample {
    pub bands: [f64; BANDS],
    pub label: Option<Label>,
    pub provenance: Provenance,
}

impl PixelSample {
    pub fn new(bands: [f64; BANDS], label: Option<Label>) -> Result<Self> {
        if let Some(i) = bands.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("band {} is not finite", BAND_NAMES[i])));
        }
        Ok(PixelSample {
            bands,
            label,
            provenance: Provenance::Original,
        })
    }

    /// A synthetic pixel from generated set `set_index`; always labeled BuiltUp.
    pub fn generated(bands: [f64; BANDS], set_index: usize) -> Result<Self> {
        let mut s = Self::new(bands, Some(Label::BuiltUp))?;
        s.provenance = Provenance::Generated(set_index);
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandRange {
    pub min: f64,
    pub max: f64,
}

/// Per-band min-max scaling statistics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Normalization {
    ranges: Vec<BandRange>,
}

impl Normalization {
    pub fn new(ranges: Vec<BandRange>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::State("normalization has no bands".to_string()));
        }
        for (i, r) in ranges.iter().enumerate() {
            if !(r.min.is_finite() && r.max.is_finite() && r.min < r.max) {
                return Err(Error::Data(format!(
                    "band {} range [{}, {}] is degenerate",
                    band_name(i),
                    r.min,
                    r.max
                )));
            }
        }
        Ok(Normalization { ranges })
    }

    /// Statistics of a row matrix. Fails on an empty input or a constant column.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Data("cannot normalize an empty dataset".to_string()))?;
        let dim = first.as_ref().len();
        let mut ranges: Vec<BandRange> = first
            .as_ref()
            .iter()
            .map(|&v| BandRange { min: v, max: v })
            .collect();
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (r, &v) in ranges.iter_mut().zip(row) {
                if !v.is_finite() {
                    return Err(Error::Data("non-finite value in dataset".to_string()));
                }
                r.min = r.min.min(v);
                r.max = r.max.max(v);
            }
        }
        for (i, r) in ranges.iter().enumerate() {
            if r.min == r.max {
                return Err(Error::Data(format!("band {} is constant", band_name(i))));
            }
        }
        Ok(Normalization { ranges })
    }

    pub fn ranges(&self) -> &[BandRange] {
        &self.ranges
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.ranges.len() {
            return Err(Error::Shape {
                expected: self.ranges.len(),
                got: len,
            });
        }
        Ok(())
    }

    /// `(x - min) / (max - min)` per band. Values outside the fitted range
    /// map outside `[0, 1]` and are passed through.
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row
            .iter()
            .zip(&self.ranges)
            .map(|(x, r)| (x - r.min) / (r.max - r.min))
            .collect())
    }

    pub fn invert(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row
            .iter()
            .zip(&self.ranges)
            .map(|(u, r)| r.min + u * (r.max - r.min))
            .collect())
    }
}

fn band_name(i: usize) -> &'static str {
    BAND_NAMES.get(i).copied().unwrap_or("?")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<PixelSample>,
    pub role: Role,
    pub normalization: Option<Normalization>,
}

impl Dataset {
    /// Validates the role invariants: a training set must be fully labeled.
    pub fn new(samples: Vec<PixelSample>, role: Role) -> Result<Self> {
        if role == Role::Train {
            if let Some(i) = samples.iter().position(|s| s.label.is_none()) {
                return Err(Error::Data(format!("training sample {i} has no label")));
            }
        }
        Ok(Dataset {
            samples,
            role,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == Some(label)).count()
    }

    pub fn rows(&self) -> Vec<[f64; BANDS]> {
        self.samples.iter().map(|s| s.bands).collect()
    }

    /// Band rows of the samples carrying `label`.
    pub fn rows_with(&self, label: Label) -> Vec<[f64; BANDS]> {
        self.samples
            .iter()
            .filter(|s| s.label == Some(label))
            .map(|s| s.bands)
            .collect()
    }

    /// Fits normalization on this dataset and returns the scaled copy.
    pub fn normalize(&self) -> Result<(Dataset, Normalization)> {
        let norm = Normalization::fit(&self.rows())?;
        let out = self.normalized_with(&norm)?;
        Ok((out, norm))
    }

    /// Scales with externally supplied statistics (e.g. a test set scaled
    /// with the training set's ranges).
    pub fn normalized_with(&self, norm: &Normalization) -> Result<Dataset> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let v = norm.apply(&s.bands)?;
                let mut bands = [0.0; BANDS];
                bands.copy_from_slice(&v);
                Ok(PixelSample { bands, ..*s })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            samples,
            role: self.role,
            normalization: Some(norm.clone()),
        })
    }
}

/// The original training set plus the first `k` generated sets.
///
/// Generated rows are labeled BuiltUp and tagged `Generated(i)` with `i`
/// counting from 1. The inputs are left untouched.
pub fn assemble_training(
    original: &Dataset,
    generated_sets: &[Vec<[f64; BANDS]>],
    k: usize,
) -> Result<Dataset> {
    if k > generated_sets.len() {
        return Err(Error::Argument(format!(
            "requested {k} generated sets but only {} exist",
            generated_sets.len()
        )));
    }
    let mut samples = original.samples.clone();
    for (i, set) in generated_sets.iter().take(k).enumerate() {
        for row in set {
            samples.push(PixelSample::generated(*row, i + 1)?);
        }
    }
    Ok(Dataset {
        samples,
        role: original.role,
        normalization: None,
    })
}

/// A rectangular multi-band raster, one row-major plane per band.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGrid {
    pub width: usize,
    pub height: usize,
    pub planes: [Vec<f64>; BANDS],
}

impl SceneGrid {
    pub fn new(width: usize, height: usize, planes: [Vec<f64>; BANDS]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument("scene dimensions must be positive".to_string()));
        }
        for (b, p) in planes.iter().enumerate() {
            if p.len() != width * height {
                return Err(Error::Data(format!(
                    "plane {} has {} cells, expected {}",
                    BAND_NAMES[b],
                    p.len(),
                    width * height
                )));
            }
        }
        Ok(SceneGrid {
            width,
            height,
            planes,
        })
    }

    pub fn pixel(&self, index: usize) -> [f64; BANDS] {
        core::array::from_fn(|b| self.planes[b][index])
    }
}

/// Classifies every cell of `grid`: 1 = BuiltUp, 0 = NonBuiltUp, row-major.
pub fn classify_scene(
    model: &Mlp,
    grid: &SceneGrid,
    normalization: &Normalization,
    threshold: f64,
) -> Result<Vec<u8>> {
    let cells = grid.width * grid.height;
    if let Some(b) = grid.planes.iter().position(|p| p.len() != cells) {
        return Err(Error::Shape {
            expected: cells,
            got: grid.planes[b].len(),
        });
    }
    (0..cells)
        .map(|i| {
            let x = normalization.apply(&grid.pixel(i))?;
            let (label, _) = predict_one(model, &x, threshold)?;
            Ok(u8::from(label == Label::BuiltUp))
        })
        .collect()
}
