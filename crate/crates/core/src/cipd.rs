//! Monte Carlo model of a charge integration photon detector.
//!
//! Each light pulse goes through the chain photons → photoelectrons
//! (binomial thinning by the quantum efficiency) → avalanche gain → integrated
//! charge, with dark electrons collected over the integration window and
//! Gaussian readout noise added at the end. Charges are in electrons.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Pulses simulated per RNG stream.
pub const CHUNK_SIZE: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CipdConfig {
    /// Quantum efficiency.
    pub eta: f64,
    /// Mean avalanche gain in electrons per photoelectron.
    pub gain: f64,
    /// Dark current in electrons per second.
    pub dark_rate: f64,
    /// RMS readout noise in electrons.
    pub readout_noise: f64,
    /// Readout sampling rate in Hz.
    pub sample_rate: f64,
    /// Charge integration time per pulse in seconds.
    pub integration_window: f64,
    /// Excess noise factor `F > 1` of the avalanche gain. `None` makes the
    /// gain a deterministic multiplier.
    #[serde(default)]
    pub excess_noise_factor: Option<f64>,
}

impl CipdConfig {
    /// Parameters of the cooled detector at 20 Hz readout.
    ///
    /// The efficiency of 0.6 is an estimate for the cooled device; the
    /// room-temperature catalog value is 69%.
    pub fn cooled_20hz() -> Self {
        CipdConfig {
            eta: 0.6,
            gain: 10.0,
            dark_rate: 1.0,
            readout_noise: 7.0,
            sample_rate: 20.0,
            integration_window: 0.05,
            excess_noise_factor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::param("eta", format!("{} is outside [0, 1]", self.eta)));
        }
        if !(self.gain >= 1.0) || !self.gain.is_finite() {
            return Err(Error::param("gain", format!("must be finite and at least 1, got {}", self.gain)));
        }
        if !(self.dark_rate >= 0.0) || !self.dark_rate.is_finite() {
            return Err(Error::param("dark_rate", "must be finite and non-negative"));
        }
        if !(self.readout_noise >= 0.0) || !self.readout_noise.is_finite() {
            return Err(Error::param("readout_noise", "must be finite and non-negative"));
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(Error::param("sample_rate", "must be positive"));
        }
        if !(self.integration_window >= 0.0) || !self.integration_window.is_finite() {
            return Err(Error::param("integration_window", "must be finite and non-negative"));
        }
        if let Some(f) = self.excess_noise_factor {
            if !(f > 1.0) || !f.is_finite() {
                return Err(Error::param("excess_noise_factor", format!("must be finite and above 1, got {f}")));
            }
        }
        Ok(())
    }

    /// Mean dark electrons per integration window.
    pub fn dark_mean(&self) -> f64 {
        self.dark_rate * self.integration_window
    }
}

/// Photon-number statistics of the light pulses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhotonSource {
    /// Coherent or LED light.
    Poisson { mean: f64 },
    /// Exactly `n` photons per pulse.
    Fock { n: u64 },
    /// `probs[n]` is the probability of `n` photons; normalized on use.
    Distribution { probs: Vec<f64> },
}

impl PhotonSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            PhotonSource::Poisson { mean } if !(*mean >= 0.0) || !mean.is_finite() => {
                Err(Error::param("mean", "must be finite and non-negative"))
            }
            PhotonSource::Distribution { probs } => {
                if probs.is_empty() {
                    return Err(Error::Empty("probs"));
                }
                if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) || !(probs.iter().sum::<f64>() > 0.0) {
                    return Err(Error::param("probs", "must be non-negative with positive sum"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Mean and variance of the photon number.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            PhotonSource::Poisson { mean } => (*mean, *mean),
            PhotonSource::Fock { n } => (*n as f64, 0.0),
            PhotonSource::Distribution { probs } => {
                let total: f64 = probs.iter().sum();
                let m1: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total;
                let m2: f64 = probs.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum::<f64>() / total;
                (m1, m2 - m1 * m1)
            }
        }
    }
}

/// Outcome of one light pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub true_photons: u64,
    pub photoelectrons: u64,
    pub dark_electrons: u64,
    /// Integrated charge in electrons, including readout noise.
    pub output_charge: f64,
}

impl PulseRecord {
    /// Charge expressed in photoelectrons at the input of the gain stage.
    pub fn input_referred(&self, gain: f64) -> f64 {
        self.output_charge / gain
    }
}

enum Sampler {
    Poisson(Option<Poisson<f64>>),
    Fock(u64),
    Weighted(WeightedIndex<f64>),
}

impl Sampler {
    fn new(source: &PhotonSource) -> Result<Self> {
        source.validate()?;
        Ok(match source {
            PhotonSource::Poisson { mean } => Sampler::Poisson(poisson(*mean)?),
            PhotonSource::Fock { n } => Sampler::Fock(*n),
            PhotonSource::Distribution { probs } => Sampler::Weighted(
                WeightedIndex::new(probs).map_err(|e| Error::param("probs", e.to_string()))?,
            ),
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Sampler::Poisson(None) => 0,
            Sampler::Poisson(Some(d)) => d.sample(rng) as u64,
            Sampler::Fock(n) => *n,
            Sampler::Weighted(w) => w.sample(rng) as u64,
        }
    }
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean).map(Some).map_err(|e| Error::param("mean", e.to_string()))
}

/// Simulates `n_pulses` pulses. Chunk `k` of [`CHUNK_SIZE`] pulses draws from
/// stream `k` of `seed`, so results do not depend on the thread count.
pub fn simulate_pulses(config: &CipdConfig, source: &PhotonSource, n_pulses: usize, seed: u64) -> Result<Vec<PulseRecord>> {
    config.validate()?;
    if n_pulses == 0 {
        return Err(Error::param("n_pulses", "must be at least 1"));
    }
    let photons = Sampler::new(source)?;
    let dark = poisson(config.dark_mean())?;
    let noise = Normal::new(0.0, config.readout_noise).map_err(|e| Error::param("readout_noise", e.to_string()))?;
    let shape = config.excess_noise_factor.map(|f| 1.0 / (f - 1.0));
    let n_chunks = n_pulses.div_ceil(CHUNK_SIZE);
    let chunks: Vec<Vec<PulseRecord>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, k as u64);
            let len = CHUNK_SIZE.min(n_pulses - k * CHUNK_SIZE);
            (0..len)
                .map(|_| {
                    let true_photons = photons.sample(&mut rng);
                    let photoelectrons = if true_photons == 0 {
                        0
                    } else {
                        Binomial::new(true_photons, config.eta).expect("validated eta").sample(&mut rng)
                    };
                    let dark_electrons = dark.as_ref().map_or(0, |d| d.sample(&mut rng) as u64);
                    let electrons = photoelectrons + dark_electrons;
                    let amplified = match shape {
                        // sum of `electrons` gains, each Gamma with mean `gain`
                        Some(a) if electrons > 0 => Gamma::new(a * electrons as f64, config.gain / a)
                            .expect("positive parameters")
                            .sample(&mut rng),
                        _ => config.gain * electrons as f64,
                    };
                    let output_charge = amplified + noise.sample(&mut rng);
                    PulseRecord { true_photons, photoelectrons, dark_electrons, output_charge }
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Mean and variance of the output charge for `source`, by the laws of total
/// expectation and variance.
pub fn analytic_charge_moments(config: &CipdConfig, source: &PhotonSource) -> (f64, f64) {
    let (mn, vn) = source.moments();
    let eta = config.eta;
    let d = config.dark_mean();
    let mean_k = eta * mn + d;
    let var_k = eta * eta * vn + eta * (1.0 - eta) * mn + d;
    let g = config.gain;
    let excess = config.excess_noise_factor.map_or(0.0, |f| f - 1.0);
    (g * mean_k, g * g * var_k + g * g * excess * mean_k + config.readout_noise.powi(2))
}

/// Fixed-width histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_events: u64,
}

impl Histogram {
    /// Bins `values` with edges at `offset + k·bin_width`.
    pub fn from_values(values: &[f64], bin_width: f64, offset: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("values"));
        }
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::param("bin_width", "must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "must be finite"));
        }
        let index = |v: f64| ((v - offset) / bin_width).floor() as i64;
        let lo = values.iter().map(|&v| index(v)).min().expect("non-empty");
        let hi = values.iter().map(|&v| index(v)).max().expect("non-empty");
        let n_bins = (hi - lo + 1) as usize;
        let mut counts = vec![0u64; n_bins];
        for &v in values {
            counts[(index(v) - lo) as usize] += 1;
        }
        let bin_edges = (0..=n_bins).map(|k| offset + (lo + k as i64) as f64 * bin_width).collect();
        Ok(Histogram { bin_edges, counts, n_events: values.len() as u64 })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Fraction of events per bin.
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n_events as f64).collect()
    }

    /// Same counts with the axis divided by `gain`.
    pub fn rescaled(&self, gain: f64) -> Histogram {
        Histogram {
            bin_edges: self.bin_edges.iter().map(|e| e / gain).collect(),
            counts: self.counts.clone(),
            n_events: self.n_events,
        }
    }

    /// CSV with columns `bin_left, bin_right, count, probability`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "count", "probability"])?;
        for ((e, c), p) in self.bin_edges.windows(2).zip(&self.counts).zip(self.probabilities()) {
            w.write_record([e[0].to_string(), e[1].to_string(), c.to_string(), p.to_string()])?;
        }
        w.flush()
    }
}

/// Histogram of output charge with bins centred on integer multiples of
/// `bin_width` electrons.
pub fn histogram(records: &[PulseRecord], bin_width: f64) -> Result<Histogram> {
    let values: Vec<f64> = records.iter().map(|r| r.output_charge).collect();
    Histogram::from_values(&values, bin_width, -0.5 * bin_width)
}

/// Settings of [`detect_peaks`], in units of the gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    /// Gaussian smoothing width.
    pub smoothing: f64,
    /// Minimum height relative to the smoothed maximum.
    pub min_height: f64,
    /// Minimum prominence relative to the smoothed maximum.
    pub min_prominence: f64,
    /// Minimum distance between accepted peaks.
    pub min_separation: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams { smoothing: 0.2, min_height: 0.05, min_prominence: 0.1, min_separation: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Bin centre, in the histogram's units.
    pub position: f64,
    /// Smoothed count.
    pub height: f64,
    pub prominence: f64,
}

/// Local maxima of the smoothed histogram that clear the height and
/// prominence floors, thinned so no two are closer than the minimum
/// separation. Sorted by position.
pub fn detect_peaks(hist: &Histogram, gain: f64, params: &PeakParams) -> Vec<Peak> {
    let bw = hist.bin_width();
    let y = smooth(&hist.counts, params.smoothing * gain / bw);
    let centers = hist.centers();
    let max = y.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let n = y.len();
    let mut candidates: Vec<Peak> = (0..n)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { y[i - 1] };
            let right = if i + 1 == n { f64::NEG_INFINITY } else { y[i + 1] };
            y[i] > left && y[i] >= right && y[i] >= params.min_height * max
        })
        .map(|i| Peak { position: centers[i], height: y[i], prominence: prominence(&y, i) })
        .filter(|p| p.prominence >= params.min_prominence * max)
        .collect();
    candidates.sort_by(|a, b| b.height.total_cmp(&a.height));
    let mut accepted: Vec<Peak> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|a| (a.position - c.position).abs() >= params.min_separation * gain) {
            accepted.push(c);
        }
    }
    accepted.sort_by(|a, b| a.position.total_cmp(&b.position));
    accepted
}

/// Height of `y[i]` above the higher of the two minima separating it from
/// taller points on either side. The histogram is zero beyond its ends.
fn prominence(y: &[f64], i: usize) -> f64 {
    let base = |side: &mut dyn Iterator<Item = f64>| {
        let mut min = y[i];
        for v in side {
            if v > y[i] {
                return min;
            }
            min = min.min(v);
        }
        0.0
    };
    let left = base(&mut y[..i].iter().rev().copied());
    let right = base(&mut y[i + 1..].iter().copied());
    y[i] - left.max(right)
}

/// Gaussian smoothing with width `sigma` bins, zero outside the histogram.
fn smooth(counts: &[u64], sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return counts.iter().map(|&c| c as f64).collect();
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius).map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let n = counts.len() as i64;
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(j, w)| {
                    let src = i + j as i64 - radius;
                    (0..n).contains(&src).then(|| w * counts[src as usize] as f64)
                })
                .sum::<f64>()
                / norm
        })
        .collect()
}

/// Separation of adjacent photon-number charges over the readout noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub value: f64,
    /// Set when the readout noise is zero and `value` is infinite.
    pub infinite: bool,
}

/// `gain / readout_noise`.
pub fn resolution_metric(config: &CipdConfig) -> Result<Resolution> {
    if !(config.gain > 0.0) {
        return Err(Error::param("gain", "must be positive"));
    }
    if config.readout_noise == 0.0 {
        return Ok(Resolution { value: f64::INFINITY, infinite: true });
    }
    Ok(Resolution { value: config.gain / config.readout_noise, infinite: false })
}

/// Readout noise needed to reach `target_snr`.
pub fn required_noise(config: &CipdConfig, target_snr: f64) -> Result<f64> {
    if !(target_snr > 0.0) {
        return Err(Error::param("target_snr", "must be positive"));
    }
    Ok(config.gain / target_snr)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DarkDrift {
    /// Expected dark electrons accumulated over the duration.
    pub expected_electrons: f64,
    /// Whether the drift stays within the budget, when one is given.
    pub within_budget: Option<bool>,
}

pub fn dark_drift(config: &CipdConfig, duration: f64, budget: Option<f64>) -> Result<DarkDrift> {
    if !(duration >= 0.0) {
        return Err(Error::param("duration", "must be non-negative"));
    }
    let expected_electrons = config.dark_rate * duration;
    Ok(DarkDrift { expected_electrons, within_budget: budget.map(|b| expected_electrons <= b) })
}

/// Photon means of the four pulse intensities shown by default. Chosen for
/// visual spread; they are not measured values.
pub const DEFAULT_INTENSITIES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
