//! Synthetic six-band scenario: 100 built-up and 400 other training pixels,
//! 2000 and 5000 test pixels.
//!
//! Built-up pixels follow a broad correlated Gaussian (one shared brightness
//! factor plus independent band noise). The non-built-up class is an equal
//! mixture of tight vegetation, forest and water Gaussians. Built-up and
//! vegetation overlap in the visible and SWIR bands; water stretches the
//! band ranges towards zero.

use pixaug_core::data::{Dataset, Label, PixelSample, Role, SceneGrid};
use pixaug_core::rng::{derive_seed, rng_from_seed, ChaCha8Rng};
use pixaug_core::BANDS;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;

/// Gaussian with a shared factor: `mean + sd * (rho * f + sqrt(1 - rho^2) * e_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub mean: [f64; BANDS],
    pub sd: [f64; BANDS],
    pub rho: f64,
}

impl Component {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; BANDS] {
        let f: f64 = StandardNormal.sample(rng);
        let own = (1.0 - self.rho * self.rho).sqrt();
        std::array::from_fn(|b| {
            let e: f64 = StandardNormal.sample(rng);
            self.mean[b] + self.sd[b] * (self.rho * f + own * e)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub builtup: Component,
    /// Equal-weight mixture.
    pub nonbuiltup: Vec<Component>,
    pub train_builtup: usize,
    pub train_nonbuiltup: usize,
    pub test_builtup: usize,
    pub test_nonbuiltup: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            builtup: Component {
                mean: [0.1305, 0.1135, 0.1405, 0.172, 0.2535, 0.2375],
                sd: [0.012675, 0.012675, 0.0169, 0.021125, 0.02535, 0.02535],
                rho: 0.8,
            },
            nonbuiltup: vec![
                // vegetation
                Component {
                    mean: [0.09, 0.10, 0.10, 0.28, 0.24, 0.17],
                    sd: [0.0039, 0.0039, 0.0052, 0.0104, 0.0078, 0.0078],
                    rho: 0.6,
                },
                // forest
                Component {
                    mean: [0.05, 0.07, 0.05, 0.32, 0.17, 0.09],
                    sd: [0.0065, 0.0078, 0.0078, 0.026, 0.01625, 0.013],
                    rho: 0.6,
                },
                // water
                Component {
                    mean: [0.07, 0.06, 0.04, 0.02, 0.01, 0.008],
                    sd: [0.008, 0.008, 0.008, 0.006, 0.004, 0.003],
                    rho: 0.6,
                },
            ],
            train_builtup: 100,
            train_nonbuiltup: 400,
            test_builtup: 2000,
            test_nonbuiltup: 5000,
        }
    }
}

pub struct Scenario {
    pub train: Dataset,
    pub test: Dataset,
}

impl ScenarioSpec {
    pub fn draw(&self, rng: &mut ChaCha8Rng, label: Label) -> [f64; BANDS] {
        match label {
            Label::BuiltUp => self.builtup.sample(rng),
            Label::NonBuiltUp => {
                let i = rng.gen_range(0..self.nonbuiltup.len());
                self.nonbuiltup[i].sample(rng)
            }
        }
    }

    fn dataset(&self, rng: &mut ChaCha8Rng, builtup: usize, other: usize, role: Role) -> Result<Dataset> {
        let samples = std::iter::repeat(Label::BuiltUp)
            .take(builtup)
            .chain(std::iter::repeat(Label::NonBuiltUp).take(other))
            .map(|l| PixelSample::new(self.draw(rng, l), Some(l)))
            .collect::<pixaug_core::Result<Vec<_>>>()?;
        Ok(Dataset::new(samples, role)?)
    }

    /// Training and test sets drawn from independent streams of `seed`.
    pub fn generate(&self, seed: u64) -> Result<Scenario> {
        let mut train_rng = rng_from_seed(derive_seed(seed, "scenario/train"));
        let mut test_rng = rng_from_seed(derive_seed(seed, "scenario/test"));
        Ok(Scenario {
            train: self.dataset(&mut train_rng, self.train_builtup, self.train_nonbuiltup, Role::Train)?,
            test: self.dataset(&mut test_rng, self.test_builtup, self.test_nonbuiltup, Role::Test)?,
        })
    }

    /// A `size x size` scene: a built-up disc in the centre plus a built-up
    /// road along the diagonal, everything else non-built-up. Returns the
    /// grid and the true label raster (1 = built-up).
    pub fn scene(&self, size: usize, seed: u64) -> Result<(SceneGrid, Vec<u8>)> {
        let mut rng = rng_from_seed(derive_seed(seed, "scenario/scene"));
        let mut planes: [Vec<f64>; BANDS] = std::array::from_fn(|_| Vec::with_capacity(size * size));
        let mut truth = Vec::with_capacity(size * size);
        let c = (size as f64 - 1.0) / 2.0;
        for r in 0..size {
            for col in 0..size {
                let (dr, dc) = (r as f64 - c, col as f64 - c);
                let urban = dr.hypot(dc) < size as f64 / 4.0 || r.abs_diff(col) <= size / 40;
                let label = if urban { Label::BuiltUp } else { Label::NonBuiltUp };
                for (p, v) in planes.iter_mut().zip(self.draw(&mut rng, label)) {
                    p.push(v);
                }
                truth.push(urban as u8);
            }
        }
        Ok((SceneGrid::new(size, size, planes)?, truth))
    }
}
