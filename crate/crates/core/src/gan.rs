//! Generator/discriminator training on positive-class pixels.
//!
//! The generator maps uniform noise on `[-1, 1]^noise_dim` to normalized
//! pixels in band space; the discriminator scores how likely a pixel is real.
//! Training alternates discriminator ascent on the minimax value
//! `E[ln D(x)] + E[ln(1 - D(G(z)))]` with a generator step.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::Normalization;
use crate::math;
use crate::nn::{Activation, Gradients, LayerSpec, Loss, Mlp, Scratch, TrainConfig, PROB_EPS};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result, BANDS};

/// Objective used for the generator step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GeneratorLoss {
    /// Maximize `ln D(G(z))`.
    #[default]
    NonSaturating,
    /// Minimize `ln(1 - D(G(z)))`, the literal minimax form.
    Saturating,
}

impl GeneratorLoss {
    fn as_loss(self) -> Loss {
        match self {
            GeneratorLoss::NonSaturating => Loss::GeneratorNonSaturating,
            GeneratorLoss::Saturating => Loss::GeneratorSaturating,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GanConfig {
    pub noise_dim: usize,
    pub generator_spec: Vec<LayerSpec>,
    pub discriminator_spec: Vec<LayerSpec>,
    pub d_steps_per_g_step: usize,
    pub generator_loss: GeneratorLoss,
    /// Generator optimization. `epochs` counts training iterations (one
    /// generator step each) and `learning_rate` is the generator's rate.
    pub train: TrainConfig,
    pub discriminator_learning_rate: f64,
    /// Multiplier on the discriminator's initial first-layer weights.
    pub discriminator_input_gain: f64,
    /// Initial bias of every generator output unit.
    pub generator_output_bias: f64,
    /// Decay of the running average of generator weights returned as the
    /// trained generator; 0 returns the last iterate.
    pub generator_averaging: f64,
    /// Standard deviation of Gaussian noise added to both real and generated
    /// discriminator inputs, annealed linearly to 0 over training.
    pub instance_noise: f64,
}

/// Generator 100-100-100-6 (Sigmoid, ReLU, ReLU).
pub fn default_generator_spec(noise_dim: usize, data_dim: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(noise_dim, 100, Activation::Sigmoid),
        LayerSpec::new(100, 100, Activation::Relu),
        LayerSpec::new(100, data_dim, Activation::Relu),
    ]
}

/// Discriminator 6-100-100-1 (Sigmoid, ReLU, then a sigmoid squash on the
/// output unit so that scores are probabilities).
pub fn default_discriminator_spec(data_dim: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(data_dim, 100, Activation::Sigmoid),
        LayerSpec::new(100, 100, Activation::Relu),
        LayerSpec::new(100, 1, Activation::Sigmoid),
    ]
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            noise_dim: 100,
            generator_spec: default_generator_spec(100, BANDS),
            discriminator_spec: default_discriminator_spec(BANDS),
            d_steps_per_g_step: 3,
            generator_loss: GeneratorLoss::NonSaturating,
            train: TrainConfig {
                learning_rate: 0.01,
                batch_size: 32,
                epochs: 5000,
                weight_decay_lambda: 0.0,
                seed: 0,
            },
            discriminator_learning_rate: 0.1,
            discriminator_input_gain: 15.0,
            generator_output_bias: 0.5,
            generator_averaging: 0.995,
            instance_noise: 0.2,
        }
    }
}

impl GanConfig {
    /// Checks the architecture against the noise and data dimensions.
    pub fn validate(&self, data_dim: usize) -> Result<()> {
        crate::nn::validate_specs(&self.generator_spec)?;
        crate::nn::validate_specs(&self.discriminator_spec)?;
        if self.noise_dim == 0 {
            return Err(Error::Config("noise_dim must be >= 1".to_string()));
        }
        if self.generator_spec[0].input_width != self.noise_dim {
            return Err(Error::Config(format!(
                "generator expects {} inputs but noise_dim is {}",
                self.generator_spec[0].input_width, self.noise_dim
            )));
        }
        let g_out = self.generator_spec[self.generator_spec.len() - 1].output_width;
        if g_out != data_dim {
            return Err(Error::Config(format!(
                "generator emits {g_out} values but data has {data_dim} bands"
            )));
        }
        if self.discriminator_spec[0].input_width != data_dim {
            return Err(Error::Config(format!(
                "discriminator expects {} inputs but data has {data_dim} bands",
                self.discriminator_spec[0].input_width
            )));
        }
        if self.discriminator_spec[self.discriminator_spec.len() - 1].output_width != 1 {
            return Err(Error::Config("discriminator must have one output".to_string()));
        }
        if self.d_steps_per_g_step == 0 {
            return Err(Error::Config("d_steps_per_g_step must be >= 1".to_string()));
        }
        let t = &self.train;
        if !(t.learning_rate > 0.0 && self.discriminator_learning_rate > 0.0)
            || t.batch_size == 0
            || !(t.weight_decay_lambda >= 0.0)
        {
            return Err(Error::Config(
                "GAN training needs learning rates > 0, batch_size >= 1, lambda >= 0".to_string(),
            ));
        }
        if !(self.discriminator_input_gain.is_finite() && self.generator_output_bias.is_finite()) {
            return Err(Error::Config("initialization settings must be finite".to_string()));
        }
        if !(0.0..1.0).contains(&self.generator_averaging) {
            return Err(Error::Config("generator_averaging must lie in [0, 1)".to_string()));
        }
        if !(self.instance_noise >= 0.0 && self.instance_noise.is_finite()) {
            return Err(Error::Config("instance_noise must be >= 0".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub normalization: Normalization,
}

/// Per-iteration training diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationStats {
    pub iteration: usize,
    /// Estimate of `V(G, D)` on the last discriminator batch, before its update.
    pub value: f64,
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanTraining {
    pub model: GanModel,
    pub trace: Vec<IterationStats>,
}

/// `count x noise_dim` matrix of draws from `U[-1, 1]`.
pub fn sample_noise(count: usize, noise_dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 || noise_dim == 0 {
        return Err(Error::Argument("noise count and dimension must be >= 1".to_string()));
    }
    Ok(noise_batch(&mut rng_from_seed(seed), count, noise_dim))
}

fn noise_batch<R: Rng + ?Sized>(rng: &mut R, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect()
}

/// Batch estimate of the minimax value: mean `ln D(x)` over real scores plus
/// mean `ln(1 - D(G(z)))` over fake scores, with scores clamped away from 0 and 1.
pub fn gan_value(d_on_real: &[f64], d_on_fake: &[f64]) -> Result<f64> {
    if d_on_real.is_empty() || d_on_fake.is_empty() {
        return Err(Error::Argument("gan_value needs non-empty inputs".to_string()));
    }
    let clamp = |p: f64| p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let real = d_on_real.iter().map(|&p| math::ln(clamp(p))).sum::<f64>() / d_on_real.len() as f64;
    let fake =
        d_on_fake.iter().map(|&p| math::ln(1.0 - clamp(p))).sum::<f64>() / d_on_fake.len() as f64;
    Ok(real + fake)
}

/// Gradient of the generator objective with respect to the generator's
/// parameters, backpropagated through a fixed discriminator.
///
/// The discriminator is only read; its parameter gradients are never formed.
pub fn generator_gradients(
    generator: &Mlp,
    discriminator: &Mlp,
    noise: &[Vec<f64>],
    loss: GeneratorLoss,
    lambda: f64,
) -> Result<(Gradients, f64)> {
    if noise.is_empty() {
        return Err(Error::Argument("empty noise batch".to_string()));
    }
    let loss = loss.as_loss();
    let mut grads = Gradients::zeros_like(generator);
    let mut gs = Scratch::default();
    let mut ds = Scratch::default();
    let mut total = 0.0;
    for z in noise {
        generator.forward_trace_into(z, &mut gs.trace)?;
        discriminator.forward_trace_into(&gs.trace[gs.trace.len() - 1], &mut ds.trace)?;
        let p = ds.trace[ds.trace.len() - 1][0];
        let (v, dp) = loss.eval(p, 0.0);
        total += v;
        ds.delta.clear();
        ds.delta.push(dp);
        discriminator.backprop_scratch(&ds.trace, None, true, &mut ds.delta, &mut ds.prev);
        gs.delta.clear();
        gs.delta.extend_from_slice(&ds.delta);
        generator.backprop_scratch(&gs.trace, Some(&mut grads), false, &mut gs.delta, &mut gs.prev);
    }
    let inv = 1.0 / noise.len() as f64;
    for (gw, layer) in grads.weights.iter_mut().zip(generator.layers()) {
        gw.iter_mut()
            .zip(layer.weights())
            .for_each(|(g, w)| *g = *g * inv + 2.0 * lambda * w);
    }
    grads.biases.iter_mut().flatten().for_each(|g| *g *= inv);
    Ok((grads, total * inv + lambda * generator.weight_penalty()))
}

/// Fresh generator and discriminator for `config`.
pub fn init_model(config: &GanConfig, normalization: Normalization) -> Result<GanModel> {
    config.validate(normalization.dim())?;
    let seed = config.train.seed;
    let mut generator = Mlp::init_seeded(&config.generator_spec, derive_seed(seed, "gan/generator"))?;
    let mut discriminator =
        Mlp::init_seeded(&config.discriminator_spec, derive_seed(seed, "gan/discriminator"))?;
    if let Some(out) = generator.layers_mut().last_mut() {
        out.biases_mut().fill(config.generator_output_bias);
    }
    discriminator.layers_mut()[0]
        .weights_mut()
        .iter_mut()
        .for_each(|w| *w *= config.discriminator_input_gain);
    Ok(GanModel {
        generator,
        discriminator,
        normalization,
    })
}

/// Trains a GAN on already-normalized rows (every entry in `[0, 1]`).
///
/// `normalization` is stored in the returned model so generated pixels can
/// be mapped back to band units.
pub fn train_gan(
    data: &[Vec<f64>],
    normalization: Normalization,
    config: &GanConfig,
) -> Result<GanTraining> {
    let dim = normalization.dim();
    config.validate(dim)?;
    let batch = config.train.batch_size;
    if data.len() < batch {
        return Err(Error::Config(format!(
            "{} training rows is fewer than the batch size {batch}",
            data.len()
        )));
    }
    for (i, row) in data.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: row.len(),
            });
        }
        if !row.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::Data(format!("row {i} is outside [0, 1]")));
        }
    }

    let mut model = init_model(config, normalization)?;
    let mut average = model.generator.clone();
    let mut rng = rng_from_seed(derive_seed(config.train.seed, "gan/batches"));
    let lr_g = config.train.learning_rate;
    let lr_d = config.discriminator_learning_rate;
    let lambda = config.train.weight_decay_lambda;
    let iterations = config.train.epochs;
    let mut trace = Vec::with_capacity(iterations);
    let real_target = [1.0];
    let fake_target = [0.0];

    for iteration in 0..iterations {
        let numeric = |e: Error| match e {
            Error::Numeric(msg) => Error::Numeric(format!("iteration {iteration}: {msg}")),
            other => other,
        };
        let sigma = config.instance_noise * (1.0 - iteration as f64 / iterations as f64);
        let mut value = 0.0;
        let mut d_loss = 0.0;
        for _ in 0..config.d_steps_per_g_step {
            let mut real: Vec<Vec<f64>> =
                (0..batch).map(|_| data[rng.gen_range(0..data.len())].clone()).collect();
            let noise = noise_batch(&mut rng, batch, config.noise_dim);
            let mut fake = noise
                .iter()
                .map(|z| model.generator.forward(z))
                .collect::<Result<Vec<_>>>()
                .map_err(numeric)?;
            if sigma > 0.0 {
                for v in real.iter_mut().chain(fake.iter_mut()).flatten() {
                    *v += sigma * gaussian(&mut rng);
                }
            }
            let samples = real
                .iter()
                .map(|x| (x.as_slice(), &real_target[..]))
                .chain(fake.iter().map(|x| (x.as_slice(), &fake_target[..])));
            let (grads, loss) = model
                .discriminator
                .backward(samples, Loss::BinaryCrossEntropy, lambda)
                .map_err(numeric)?;
            // with equal real and fake counts the value is minus twice the mean loss
            value = -2.0 * (loss - lambda * model.discriminator.weight_penalty());
            d_loss = loss;
            model.discriminator.sgd_step(&grads, lr_d)?;
        }
        let noise = noise_batch(&mut rng, batch, config.noise_dim);
        let (grads, g_loss) = generator_gradients(
            &model.generator,
            &model.discriminator,
            &noise,
            config.generator_loss,
            lambda,
        )
        .map_err(numeric)?;
        model.generator.sgd_step(&grads, lr_g)?;
        if config.generator_averaging > 0.0 {
            blend(&mut average, &model.generator, config.generator_averaging);
        }
        if !(value.is_finite() && d_loss.is_finite() && g_loss.is_finite()) {
            return Err(Error::Numeric(format!("iteration {iteration}: non-finite loss")));
        }
        trace.push(IterationStats {
            iteration,
            value,
            d_loss,
            g_loss,
        });
    }
    if config.generator_averaging > 0.0 {
        model.generator = average;
    }
    Ok(GanTraining { model, trace })
}

/// `avg <- decay * avg + (1 - decay) * current`, parameter by parameter.
fn blend(avg: &mut Mlp, current: &Mlp, decay: f64) {
    for (a, c) in avg.layers_mut().iter_mut().zip(current.layers()) {
        for (x, y) in a.weights_mut().iter_mut().zip(c.weights()) {
            *x = decay * *x + (1.0 - decay) * y;
        }
        for (x, y) in a.biases_mut().iter_mut().zip(c.biases()) {
            *x = decay * *x + (1.0 - decay) * y;
        }
    }
}

/// Standard normal draw by the Box-Muller transform.
fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    math::sqrt(-2.0 * math::ln(u)) * math::cos(2.0 * core::f64::consts::PI * v)
}

/// Normalizes raw positive-class rows, then trains.
pub fn train_gan_on_raw<R: AsRef<[f64]>>(rows: &[R], config: &GanConfig) -> Result<GanTraining> {
    let normalization = Normalization::fit(rows)?;
    let data = rows
        .iter()
        .map(|r| normalization.apply(r.as_ref()).map(|v| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    train_gan(&data, normalization, config)
}

/// `count` synthetic pixels in original band units.
pub fn generate_pixels(model: &GanModel, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let noise_dim = model.generator.input_width();
    let dim = model.generator.output_width();
    if model.normalization.dim() != dim {
        return Err(Error::State(format!(
            "model normalization covers {} bands, generator emits {dim}",
            model.normalization.dim()
        )));
    }
    sample_noise(count, noise_dim, seed)?
        .iter()
        .map(|z| {
            let out = model.generator.forward(z)?;
            model.normalization.invert(&out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BandRange;

    fn small_config(dim: usize, iterations: usize, lr: f64, seed: u64) -> GanConfig {
        GanConfig {
            noise_dim: 4,
            generator_spec: vec![
                LayerSpec::new(4, 16, Activation::Sigmoid),
                LayerSpec::new(16, 16, Activation::Relu),
                LayerSpec::new(16, dim, Activation::Relu),
            ],
            discriminator_spec: vec![
                LayerSpec::new(dim, 16, Activation::Sigmoid),
                LayerSpec::new(16, 16, Activation::Relu),
                LayerSpec::new(16, 1, Activation::Sigmoid),
            ],
            d_steps_per_g_step: 1,
            generator_loss: GeneratorLoss::NonSaturating,
            train: TrainConfig {
                learning_rate: lr,
                batch_size: 16,
                epochs: iterations,
                weight_decay_lambda: 0.0,
                seed,
            },
            discriminator_learning_rate: lr,
            ..GanConfig::default()
        }
    }

    fn unit_norm(dim: usize) -> Normalization {
        Normalization::new(vec![BandRange { min: 0.0, max: 1.0 }; dim]).unwrap()
    }

    #[test]
    fn noise_support_mean_and_determinism() {
        let a = sample_noise(100, 100, 5).unwrap();
        assert!(a.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        let mean = a.iter().flatten().sum::<f64>() / 10_000.0;
        assert!(mean.abs() < 0.05, "{mean}");
        assert_eq!(a, sample_noise(100, 100, 5).unwrap());
        assert!(sample_noise(0, 3, 1).is_err());
    }

    #[test]
    fn value_arithmetic() {
        let v = gan_value(&[0.5; 4], &[0.5; 3]).unwrap();
        assert!((v + 2.0 * core::f64::consts::LN_2).abs() < 1e-12);
        let v = gan_value(&[1.0], &[0.0]).unwrap();
        assert!((v - 2.0 * math::ln(1.0 - 1e-7)).abs() < 1e-15);
        assert!(v < 0.0 && v > -1e-6);
        let v = gan_value(&[0.9, 0.8], &[0.1]).unwrap();
        let expected = (math::ln(0.9) + math::ln(0.8)) / 2.0 + math::ln(0.9);
        assert!((v - expected).abs() < 1e-15);
        assert!(gan_value(&[], &[0.5]).is_err());
    }

    #[test]
    fn default_architecture_matches_layer_counts() {
        let c = GanConfig::default();
        c.validate(BANDS).unwrap();
        let widths: Vec<usize> = core::iter::once(c.generator_spec[0].input_width)
            .chain(c.generator_spec.iter().map(|s| s.output_width))
            .collect();
        assert_eq!(widths, vec![100, 100, 100, 6]);
        let widths: Vec<usize> = core::iter::once(c.discriminator_spec[0].input_width)
            .chain(c.discriminator_spec.iter().map(|s| s.output_width))
            .collect();
        assert_eq!(widths, vec![6, 100, 100, 1]);
        assert!(c.validate(5).is_err());
    }

    #[test]
    fn zero_iterations_returns_initial_model() {
        let cfg = small_config(2, 0, 0.05, 11);
        let data = vec![vec![0.5, 0.5]; 16];
        let out = train_gan(&data, unit_norm(2), &cfg).unwrap();
        assert_eq!(out.model, init_model(&cfg, unit_norm(2)).unwrap());
        assert!(out.trace.is_empty());
    }

    #[test]
    fn too_few_rows_for_batch() {
        let cfg = small_config(2, 1, 0.05, 11);
        let data = vec![vec![0.5, 0.5]; 15];
        assert!(matches!(train_gan(&data, unit_norm(2), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn generator_step_leaves_discriminator_alone() {
        let cfg = small_config(2, 0, 0.05, 3);
        let model = init_model(&cfg, unit_norm(2)).unwrap();
        let d_before = model.discriminator.clone();
        let noise = sample_noise(8, 4, 1).unwrap();
        let (g, _) = generator_gradients(
            &model.generator,
            &model.discriminator,
            &noise,
            GeneratorLoss::NonSaturating,
            0.0,
        )
        .unwrap();
        assert_eq!(model.discriminator, d_before);
        // the gradients are generator-shaped, so they cannot address D
        assert_eq!(g.weights.len(), model.generator.layers().len());
        for (gw, l) in g.weights.iter().zip(model.generator.layers()) {
            assert_eq!(gw.len(), l.weights().len());
        }
    }

    #[test]
    fn constant_target_is_learned() {
        let mut cfg = small_config(1, 3000, 0.01, 21);
        cfg.discriminator_learning_rate = 0.1;
        cfg.d_steps_per_g_step = 3;
        cfg.discriminator_input_gain = 5.0;
        let data = vec![vec![0.7]; 64];
        let out = train_gan(&data, unit_norm(1), &cfg).unwrap();
        let gen = generate_pixels(&out.model, 500, 99).unwrap();
        let mean = gen.iter().map(|r| r[0]).sum::<f64>() / gen.len() as f64;
        assert!((mean - 0.7).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn generation_shape_bounds_and_determinism() {
        let cfg = GanConfig::default();
        let norm = Normalization::new(
            (0..BANDS)
                .map(|b| BandRange {
                    min: 100.0 * b as f64,
                    max: 100.0 * b as f64 + 50.0,
                })
                .collect(),
        )
        .unwrap();
        let model = init_model(&cfg, norm).unwrap();
        let a = generate_pixels(&model, 100, 4).unwrap();
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|r| r.len() == BANDS));
        for r in &a {
            for (b, v) in r.iter().enumerate() {
                assert!(v.is_finite() && *v >= 100.0 * b as f64);
            }
        }
        assert_eq!(a, generate_pixels(&model, 100, 4).unwrap());
        assert_eq!(generate_pixels(&model, 7, 4).unwrap()[0].len(), BANDS);
    }

    #[test]
    fn mismatched_normalization_is_state_error() {
        let cfg = small_config(2, 0, 0.05, 3);
        let mut model = init_model(&cfg, unit_norm(2)).unwrap();
        model.normalization = unit_norm(3);
        assert!(matches!(generate_pixels(&model, 3, 0), Err(Error::State(_))));
    }

    #[test]
    fn discriminator_descends_on_separable_toy() {
        // real rows near 0.9, frozen "fake" rows near 0.1
        let cfg = small_config(2, 0, 0.1, 8);
        let mut d = init_model(&cfg, unit_norm(2)).unwrap().discriminator;
        let real: Vec<Vec<f64>> = (0..16).map(|i| vec![0.85 + 0.005 * i as f64, 0.9]).collect();
        let fake: Vec<Vec<f64>> = (0..16).map(|i| vec![0.05 + 0.005 * i as f64, 0.1]).collect();
        let (one, zero) = ([1.0], [0.0]);
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            let batch = real
                .iter()
                .map(|x| (x.as_slice(), &one[..]))
                .chain(fake.iter().map(|x| (x.as_slice(), &zero[..])));
            let (g, loss) = d.backward(batch, Loss::BinaryCrossEntropy, 0.0).unwrap();
            assert!(loss <= last + 1e-12, "{loss} > {last}");
            last = loss;
            d.sgd_step(&g, 0.1).unwrap();
        }
    }
}
