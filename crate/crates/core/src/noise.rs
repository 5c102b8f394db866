//! Laplace noise calibration and the noised tally algorithms.
//!
//! Noise is calibrated by *tally perturbation*: choose `d` and `q` so that a
//! draw `Y ~ Laplace(0, b)` satisfies `Pr(|Y| <= d*W) = q`. Since
//! `Pr(|Y| <= x) = 1 - exp(-x/b)`, the scale is `b = d*W / -ln(1-q)`.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::transcript::{TallyOutcome, VotingTranscript, NO, YES};

/// Tally-perturbation target a [`NoiseSpec`] was calibrated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub perturbation: f64,
    pub frequency: f64,
    pub total_weight: f64,
}

/// Zero-mean Laplace noise with scale `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    scale: f64,
    calibration: Option<Calibration>,
}

impl NoiseSpec {
    /// Noise with an explicit scale. `b = 0` is the no-noise limit.
    pub fn with_scale(scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::param("scale", format!("{scale} is not a finite non-negative number")));
        }
        Ok(NoiseSpec { scale, calibration: None })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `1/b`, the rate parameter; infinite for zero noise.
    pub fn rate(&self) -> f64 {
        1.0 / self.scale
    }

    pub fn calibration(&self) -> Option<Calibration> {
        self.calibration
    }

    /// `Pr(|Y| <= x)` from the closed-form CDF.
    pub fn prob_within(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if self.scale == 0.0 {
            return 1.0;
        }
        1.0 - (-x / self.scale).exp()
    }

    pub fn density(&self, y: f64) -> f64 {
        laplace_density(y, self.scale)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_laplace(rng, self.scale)
    }
}

/// Scale `b` with `Pr(|Y| <= d*W) = q` for `Y ~ Laplace(0, b)`.
pub fn calibrate_noise(perturbation: f64, frequency: f64, total_weight: f64) -> Result<NoiseSpec> {
    if !(frequency > 0.0 && frequency < 1.0) {
        return Err(Error::param("frequency", format!("{frequency} is outside (0, 1)")));
    }
    if !(total_weight > 0.0) || !total_weight.is_finite() {
        return Err(Error::param("total_weight", format!("{total_weight} must be positive")));
    }
    if !(perturbation >= 0.0) || !perturbation.is_finite() {
        return Err(Error::param("perturbation", format!("{perturbation} must be non-negative")));
    }
    let scale = perturbation * total_weight / -(1.0 - frequency).ln();
    Ok(NoiseSpec {
        scale,
        calibration: Some(Calibration {
            perturbation,
            frequency,
            total_weight,
        }),
    })
}

pub fn laplace_density(y: f64, scale: f64) -> f64 {
    (-y.abs() / scale).exp() / (2.0 * scale)
}

/// Inverse-CDF Laplace draw; a zero scale always yields 0.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// How noise is spread over the per-choice totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Binary only: one draw `Y` moves weight between the two totals, so the
    /// published no-total is `no + Y` and the yes-total `yes - Y`. Both
    /// totals still sum to `W`.
    SingleDraw,
    /// An independent draw added to every choice's total.
    PerChoice,
}

impl NoiseMode {
    pub fn default_for(num_choices: usize) -> Self {
        if num_choices == 2 {
            NoiseMode::SingleDraw
        } else {
            NoiseMode::PerChoice
        }
    }

    pub fn draws_needed(self, num_choices: usize) -> usize {
        match self {
            NoiseMode::SingleDraw => 1,
            NoiseMode::PerChoice => num_choices,
        }
    }
}

/// Applies explicit noise draws to the raw totals of `t`.
pub fn noised_totals_from_draws(t: &VotingTranscript, mode: NoiseMode, draws: &[f64]) -> Result<Vec<f64>> {
    if mode == NoiseMode::SingleDraw && !t.is_binary() {
        return Err(Error::NotBinary {
            num_choices: t.num_choices(),
        });
    }
    let needed = mode.draws_needed(t.num_choices());
    if draws.len() != needed {
        return Err(Error::param("draws", format!("expected {needed} draws, got {}", draws.len())));
    }
    let mut totals: Vec<f64> = t.raw_totals().iter().map(|s| s.to_f64(t.scale())).collect();
    match mode {
        NoiseMode::SingleDraw => {
            totals[NO] += draws[0];
            totals[YES] -= draws[0];
        }
        NoiseMode::PerChoice => {
            for (s, y) in totals.iter_mut().zip(draws) {
                *s += y;
            }
        }
    }
    Ok(totals)
}

fn draw_noise(spec: &NoiseSpec, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, 0);
    (0..count).map(|_| spec.sample(&mut rng)).collect()
}

/// Noised tally with the default mode for the transcript's choice count.
pub fn tally_noised(t: &VotingTranscript, spec: &NoiseSpec, seed: u64) -> Result<TallyOutcome> {
    tally_noised_with_mode(t, spec, NoiseMode::default_for(t.num_choices()), seed)
}

pub fn tally_noised_with_mode(
    t: &VotingTranscript,
    spec: &NoiseSpec,
    mode: NoiseMode,
    seed: u64,
) -> Result<TallyOutcome> {
    let draws = draw_noise(spec, mode.draws_needed(t.num_choices()), seed);
    noised_totals_from_draws(t, mode, &draws).map(TallyOutcome::Noised)
}

/// Noised totals published alongside the true winner.
pub fn tally_corrected_noised(t: &VotingTranscript, spec: &NoiseSpec, seed: u64) -> Result<TallyOutcome> {
    tally_corrected_noised_with_mode(t, spec, NoiseMode::default_for(t.num_choices()), seed)
}

pub fn tally_corrected_noised_with_mode(
    t: &VotingTranscript,
    spec: &NoiseSpec,
    mode: NoiseMode,
    seed: u64,
) -> Result<TallyOutcome> {
    let draws = draw_noise(spec, mode.draws_needed(t.num_choices()), seed);
    corrected_from_draws(t, mode, &draws)
}

pub fn corrected_from_draws(t: &VotingTranscript, mode: NoiseMode, draws: &[f64]) -> Result<TallyOutcome> {
    Ok(TallyOutcome::CorrectedNoised {
        noised: noised_totals_from_draws(t, mode, draws)?,
        winner: t.winner(),
    })
}

/// Laplace scale `w_max / epsilon` of the differentially private tally.
pub fn dp_scale(max_weight: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("{epsilon} must be positive")));
    }
    Ok(max_weight / epsilon)
}

/// Binary tally with `Laplace(w_max/epsilon)` noise on the yes-total.
pub fn tally_dp(t: &VotingTranscript, epsilon: f64, seed: u64) -> Result<TallyOutcome> {
    if !t.is_binary() {
        return Err(Error::NotBinary {
            num_choices: t.num_choices(),
        });
    }
    let spec = NoiseSpec::with_scale(dp_scale(t.max_weight().to_f64(t.scale()), epsilon)?)?;
    tally_noised_with_mode(t, &spec, NoiseMode::SingleDraw, seed)
}
