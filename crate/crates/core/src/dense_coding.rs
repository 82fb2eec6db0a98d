//! Continuous-variable dense coding with EPR beams.
//!
//! Two squeezed vacua are combined on a 50:50 beamsplitter to make EPR beams.
//! The signal beam is displaced by mixing in a modulated bright beam on a
//! high-reflectivity mirror, and a Bell measurement (the inverse beamsplitter
//! followed by `x` and `p` homodyne detection) decodes both quadratures.
//!
//! Each analysis frequency of a spectrum is an independent mode pair, so a
//! spectrum is a list of independent Gaussian calculations.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::io::Write;

use nalgebra::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{homodyne, noise_power_db, quadrature_moments, squeezing_for_db, GaussianState, HomodyneResult, VACUUM_VARIANCE};
use crate::rng;

/// Mirror transmittance used to couple the bright modulation beam.
pub const MIRROR_TRANSMITTANCE: f64 = 0.01;

/// Squeezing per OPO that yields a −2 dB Bell-measurement noise floor.
pub fn default_squeezing() -> f64 {
    squeezing_for_db(2.0)
}

/// EPR beams from an `x`-squeezed and a `p`-squeezed vacuum on a 50:50
/// beamsplitter. Mode 0 is the signal beam, mode 1 the reference beam.
pub fn build_epr(r: f64) -> Result<GaussianState> {
    if !(r >= 0.0) {
        return Err(Error::param("r", format!("EPR squeezing must be non-negative, got {r}")));
    }
    let x_sq = GaussianState::squeezed_vacuum(r, 0.0)?;
    let p_sq = GaussianState::squeezed_vacuum(r, FRAC_PI_2)?;
    x_sq.product(&p_sq).beamsplitter(0, 1, 0.5, 0.0)
}

/// Encodes `am` on `x` and `pm` on `p` of the signal beam (mode 0) through a
/// mirror of transmittance `transmittance`. The bright beam amplitude is
/// scaled so the transmitted displacement is `(am, pm)` in quadrature units.
pub fn encode(state: &GaussianState, am: f64, pm: f64, transmittance: f64) -> Result<GaussianState> {
    if !(transmittance > 0.0 && transmittance <= 1.0) {
        return Err(Error::param("transmittance", format!("{transmittance} is outside (0, 1]")));
    }
    let bright = Complex::new(am, pm) / (SQRT_2 * transmittance.sqrt());
    state.mirror_displace(0, bright, transmittance)
}

/// Lossless encoding: an ideal displacement of `(am, pm)` on mode 0.
pub fn encode_ideal(state: &GaussianState, am: f64, pm: f64) -> Result<GaussianState> {
    state.displace(0, Complex::new(am, pm) / SQRT_2)
}

/// State after the Bell-measurement beamsplitter (the inverse of the EPR
/// combiner). Mode 0 then carries `(x₁ − x₂)/√2`, mode 1 `(p₁ + p₂)/√2`.
pub fn bell_outputs(state: &GaussianState) -> Result<GaussianState> {
    if state.num_modes() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "Bell measurement needs 2 modes, got {}",
            state.num_modes()
        )));
    }
    state.beamsplitter(0, 1, 0.5, PI)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    pub x_minus: HomodyneResult,
    pub p_plus: HomodyneResult,
}

/// Bell measurement: beamsplitter, then `x` homodyne on output 0 and `p`
/// homodyne on output 1.
pub fn bell_measure<R: Rng + ?Sized>(state: &GaussianState, n_samples: usize, rng: &mut R) -> Result<BellResult> {
    let out = bell_outputs(state)?;
    Ok(BellResult {
        x_minus: homodyne(&out, 0, 0.0, n_samples, rng)?,
        p_plus: homodyne(&out, 1, FRAC_PI_2, n_samples, rng)?,
    })
}

/// One analysis frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandBin {
    pub frequency_hz: f64,
    /// Squeezing of each OPO in this sideband.
    pub squeezing_r: f64,
    pub am_amplitude: f64,
    pub pm_amplitude: f64,
    /// Lumped detection efficiency.
    pub loss_eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandPlan {
    pub bins: Vec<SidebandBin>,
    pub resolution_bandwidth_hz: f64,
    /// `None` encodes with an ideal displacement.
    pub mirror_transmittance: Option<f64>,
}

impl SidebandPlan {
    /// Flat plan from `start_hz` in steps of `step_hz`, `n_bins` bins, with
    /// the AM and PM tones placed on the bins nearest to the requested
    /// frequencies.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        start_hz: f64,
        step_hz: f64,
        n_bins: usize,
        r: f64,
        loss_eta: f64,
        am: (f64, f64),
        pm: (f64, f64),
        mirror_transmittance: Option<f64>,
    ) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::Empty("bins"));
        }
        if !(step_hz > 0.0) {
            return Err(Error::param("step_hz", "must be positive"));
        }
        let freqs: Vec<f64> = (0..n_bins).map(|k| start_hz + k as f64 * step_hz).collect();
        let nearest = |f: f64| {
            (0..n_bins)
                .min_by(|&a, &b| (freqs[a] - f).abs().total_cmp(&(freqs[b] - f).abs()))
                .expect("non-empty")
        };
        let (am_bin, pm_bin) = (nearest(am.0), nearest(pm.0));
        let bins = freqs
            .iter()
            .enumerate()
            .map(|(k, &f)| SidebandBin {
                frequency_hz: f,
                squeezing_r: r,
                am_amplitude: if k == am_bin { am.1 } else { 0.0 },
                pm_amplitude: if k == pm_bin { pm.1 } else { 0.0 },
                loss_eta,
            })
            .collect();
        let plan = SidebandPlan { bins, resolution_bandwidth_hz: step_hz, mirror_transmittance };
        plan.validate()?;
        Ok(plan)
    }

    /// 0.8–1.6 MHz in 50 kHz bins, AM tone at 1.3 MHz and PM tone at
    /// 1.1 MHz, each decoded about 10 dB above the squeezed floor.
    pub fn two_tone(r: f64, mirror_transmittance: Option<f64>) -> Result<Self> {
        let amplitude = default_tone_amplitude(r);
        SidebandPlan::uniform(
            800e3,
            50e3,
            17,
            r,
            1.0,
            (1.3e6, amplitude),
            (1.1e6, amplitude),
            mirror_transmittance,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins.is_empty() {
            return Err(Error::Empty("bins"));
        }
        for w in self.bins.windows(2) {
            if !(w[1].frequency_hz > w[0].frequency_hz) {
                return Err(Error::param("bins", "frequencies must be strictly increasing"));
            }
        }
        for b in &self.bins {
            if !(0.0..=1.0).contains(&b.loss_eta) {
                return Err(Error::param("loss_eta", format!("{} is outside [0, 1]", b.loss_eta)));
            }
            if !(b.squeezing_r >= 0.0) {
                return Err(Error::param("squeezing_r", "must be non-negative"));
            }
        }
        if let Some(t) = self.mirror_transmittance {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::param("mirror_transmittance", format!("{t} is outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Tone amplitude whose decoded power is 10 dB above the lossless floor:
/// `(a²/2 + V)/V = 10` with `V = e^{−2r}/2`, i.e. `a = 3e^{−r}`.
pub fn default_tone_amplitude(r: f64) -> f64 {
    3.0 * (-r).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLabel {
    Shot,
    Epr,
    BellOutput,
}

impl TraceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceLabel::Shot => "shot",
            TraceLabel::Epr => "epr",
            TraceLabel::BellOutput => "bell",
        }
    }
}

/// Power in one bin for both quadratures. Power counts the tone's coherent
/// amplitude plus the noise variance, relative to shot noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub frequency_hz: f64,
    pub x_db: f64,
    pub p_db: f64,
    pub x_mean: f64,
    pub x_variance: f64,
    pub p_mean: f64,
    pub p_variance: f64,
}

impl SpectrumPoint {
    fn from_moments(frequency_hz: f64, x: (f64, f64), p: (f64, f64)) -> Result<Self> {
        Ok(SpectrumPoint {
            frequency_hz,
            x_db: noise_power_db(x.0 * x.0 + x.1)?,
            p_db: noise_power_db(p.0 * p.0 + p.1)?,
            x_mean: x.0,
            x_variance: x.1,
            p_mean: p.0,
            p_variance: p.1,
        })
    }

    /// Noise floor (variance only) of each quadrature in dB.
    pub fn floor_db(&self) -> (f64, f64) {
        (
            noise_power_db(self.x_variance).unwrap_or(f64::NAN),
            noise_power_db(self.p_variance).unwrap_or(f64::NAN),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    pub label: TraceLabel,
    pub points: Vec<SpectrumPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub shot: NoiseSpectrum,
    pub epr: NoiseSpectrum,
    pub bell: NoiseSpectrum,
}

/// Signal beam after encoding and detection loss, together with its partner.
fn encoded_pair(bin: &SidebandBin, mirror: Option<f64>) -> Result<GaussianState> {
    let epr = build_epr(bin.squeezing_r)?;
    let encoded = match mirror {
        Some(t) => encode(&epr, bin.am_amplitude, bin.pm_amplitude, t)?,
        None => encode_ideal(&epr, bin.am_amplitude, bin.pm_amplitude)?,
    };
    encoded.loss(0, bin.loss_eta)?.loss(1, bin.loss_eta)
}

/// Analytic shot, EPR and Bell-output spectra.
pub fn run_spectrum(plan: &SidebandPlan) -> Result<SpectrumSet> {
    plan.validate()?;
    let vacuum = GaussianState::vacuum(1);
    let mut shot = Vec::with_capacity(plan.bins.len());
    let mut epr = Vec::with_capacity(plan.bins.len());
    let mut bell = Vec::with_capacity(plan.bins.len());
    for bin in &plan.bins {
        let f = bin.frequency_hz;
        shot.push(SpectrumPoint::from_moments(
            f,
            quadrature_moments(&vacuum, 0, 0.0)?,
            quadrature_moments(&vacuum, 0, FRAC_PI_2)?,
        )?);
        let pair = encoded_pair(bin, plan.mirror_transmittance)?;
        epr.push(SpectrumPoint::from_moments(
            f,
            quadrature_moments(&pair, 0, 0.0)?,
            quadrature_moments(&pair, 0, FRAC_PI_2)?,
        )?);
        let out = bell_outputs(&pair)?;
        bell.push(SpectrumPoint::from_moments(
            f,
            quadrature_moments(&out, 0, 0.0)?,
            quadrature_moments(&out, 1, FRAC_PI_2)?,
        )?);
    }
    Ok(SpectrumSet {
        shot: NoiseSpectrum { label: TraceLabel::Shot, points: shot },
        epr: NoiseSpectrum { label: TraceLabel::Epr, points: epr },
        bell: NoiseSpectrum { label: TraceLabel::BellOutput, points: bell },
    })
}

/// Monte Carlo estimate of the Bell-output power in one bin, in units of
/// shot noise, with its analytic value and standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledPoint {
    pub frequency_hz: f64,
    pub x_power: f64,
    pub x_power_expected: f64,
    pub x_power_sigma: f64,
    pub p_power: f64,
    pub p_power_expected: f64,
    pub p_power_sigma: f64,
}

/// Bell-output spectrum estimated from `n_samples` homodyne draws per bin.
/// Bin `k` uses stream `k` of `seed`, so results do not depend on threading.
pub fn run_spectrum_sampled(plan: &SidebandPlan, n_samples: usize, seed: u64) -> Result<Vec<SampledPoint>> {
    plan.validate()?;
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    plan.bins
        .par_iter()
        .enumerate()
        .map(|(k, bin)| {
            let mut rng = rng::stream(seed, k as u64);
            let pair = encoded_pair(bin, plan.mirror_transmittance)?;
            let res = bell_measure(&pair, n_samples, &mut rng)?;
            let (x_power, x_power_expected, x_power_sigma) = power_estimate(&res.x_minus, n_samples);
            let (p_power, p_power_expected, p_power_sigma) = power_estimate(&res.p_plus, n_samples);
            Ok(SampledPoint {
                frequency_hz: bin.frequency_hz,
                x_power,
                x_power_expected,
                x_power_sigma,
                p_power,
                p_power_expected,
                p_power_sigma,
            })
        })
        .collect()
}

fn power_estimate(h: &HomodyneResult, n: usize) -> (f64, f64, f64) {
    let samples = h.samples.as_deref().unwrap_or(&[]);
    let mean_sq = samples.iter().map(|y| y * y).sum::<f64>() / n as f64;
    let expected = h.mean * h.mean + h.variance;
    // Var(y²) for y ~ N(μ, V)
    let var_sq = 2.0 * h.variance * h.variance + 4.0 * h.mean * h.mean * h.variance;
    (
        mean_sq / VACUUM_VARIANCE,
        expected / VACUUM_VARIANCE,
        (var_sq / n as f64).sqrt() / VACUUM_VARIANCE,
    )
}

/// Power of the tone leaking into the wrong quadrature relative to the
/// decoded tone, in dB, for every bin carrying a tone. Values are
/// `(frequency, am_leak_into_p, pm_leak_into_x)`; `−∞` means no leakage.
pub fn crosstalk_db(plan: &SidebandPlan) -> Result<Vec<(f64, f64, f64)>> {
    let set = run_spectrum(plan)?;
    let ratio = |wrong: f64, right: f64| {
        if right == 0.0 {
            f64::NAN
        } else if wrong == 0.0 {
            f64::NEG_INFINITY
        } else {
            10.0 * (wrong * wrong / (right * right)).log10()
        }
    };
    Ok(plan
        .bins
        .iter()
        .zip(&set.bell.points)
        .filter(|(b, _)| b.am_amplitude != 0.0 || b.pm_amplitude != 0.0)
        .map(|(b, pt)| {
            let am_leak = if b.am_amplitude != 0.0 { ratio(pt.p_mean, pt.x_mean) } else { f64::NAN };
            let pm_leak = if b.pm_amplitude != 0.0 { ratio(pt.x_mean, pt.p_mean) } else { f64::NAN };
            (b.frequency_hz, am_leak, pm_leak)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Shot,
    Epr,
    Squeezed,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Shot => "shot",
            SweepKind::Epr => "epr",
            SweepKind::Squeezed => "squeezed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepTrace {
    pub label: SweepKind,
    pub lo_phase: Vec<f64>,
    pub noise_db: Vec<f64>,
}

impl PhaseSweepTrace {
    /// Max − min of the trace in dB.
    pub fn span_db(&self) -> f64 {
        let max = self.noise_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.noise_db.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// `n` LO angles evenly covering `[0, π)`.
pub fn lo_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / n as f64).collect()
}

/// Homodyne noise power versus LO phase for vacuum, one EPR beam, or an
/// `x`-squeezed vacuum with squeezing `r`.
pub fn phase_sweep(kind: SweepKind, r: f64, lo_phases: &[f64]) -> Result<PhaseSweepTrace> {
    let state = match kind {
        SweepKind::Shot => GaussianState::vacuum(1),
        SweepKind::Epr => build_epr(r)?.mode(0)?,
        SweepKind::Squeezed => GaussianState::squeezed_vacuum(r, 0.0)?,
    };
    let noise_db = lo_phases
        .iter()
        .map(|&theta| noise_power_db(quadrature_moments(&state, 0, theta)?.1))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseSweepTrace { label: kind, lo_phase: lo_phases.to_vec(), noise_db })
}

/// Writes the spectra as CSV: `frequency_hz`, then `x` and `p` power in dB
/// for the shot, EPR and Bell-output traces.
pub fn write_spectrum_csv<W: Write>(set: &SpectrumSet, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frequency_hz", "shot_x_db", "shot_p_db", "epr_x_db", "epr_p_db", "bell_x_db", "bell_p_db"])?;
    for ((s, e), b) in set.shot.points.iter().zip(&set.epr.points).zip(&set.bell.points) {
        w.write_record(
            [s.frequency_hz, s.x_db, s.p_db, e.x_db, e.p_db, b.x_db, b.p_db].map(|v| v.to_string()),
        )?;
    }
    w.flush()
}

/// Writes phase sweeps sharing one LO grid as CSV: `phase_rad`, then one
/// column per trace named after its kind.
pub fn write_phase_sweep_csv<W: Write>(traces: &[PhaseSweepTrace], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["phase_rad".to_string()];
    header.extend(traces.iter().map(|t| format!("{}_db", t.label.as_str())));
    w.write_record(&header)?;
    let n = traces.first().map_or(0, |t| t.lo_phase.len());
    for i in 0..n {
        let mut row = vec![traces[0].lo_phase[i].to_string()];
        row.extend(traces.iter().map(|t| t.noise_db[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn r2db() -> f64 {
        default_squeezing()
    }

    #[test]
    fn epr_correlations() {
        let r = r2db();
        let epr = build_epr(r).unwrap();
        let v = epr.cov();
        // Var(x₁ − x₂) and Var(p₁ + p₂)
        let var_xm = v[(0, 0)] + v[(2, 2)] - 2.0 * v[(0, 2)];
        let var_pp = v[(1, 1)] + v[(3, 3)] + 2.0 * v[(1, 3)];
        assert_relative_eq!(var_xm, 10f64.powf(-0.2), epsilon = 1e-14);
        assert_relative_eq!(var_pp, 10f64.powf(-0.2), epsilon = 1e-14);
        assert_relative_eq!(build_epr(0.0).unwrap().cov(), GaussianState::vacuum(2).cov(), epsilon = 1e-15);
        assert!(build_epr(-0.1).is_err());
    }

    #[test]
    fn single_beam_variance_is_cosh() {
        let r = r2db();
        let beam = build_epr(r).unwrap().mode(0).unwrap();
        for k in 0..16 {
            let (_, var) = quadrature_moments(&beam, 0, k as f64 * 0.2).unwrap();
            assert_relative_eq!(var, 0.553_962_634, epsilon = 1e-9);
        }
    }

    #[test]
    fn bell_measurement_cancels_epr_noise() {
        let mut rng = rng::seeded(5);
        let res = bell_measure(&build_epr(r2db()).unwrap(), 0, &mut rng).unwrap();
        assert_relative_eq!(res.x_minus.noise_db(), -2.0, epsilon = 1e-12);
        assert_relative_eq!(res.p_plus.noise_db(), -2.0, epsilon = 1e-12);
        let vac = bell_measure(&build_epr(0.0).unwrap(), 0, &mut rng).unwrap();
        assert_relative_eq!(vac.x_minus.noise_db(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn decoded_means_follow_beamsplitter_convention() {
        // golden trace: ideal encode (a, b) → Bell means (a/√2, b/√2)
        let (a, b) = (1.7, -0.6);
        let enc = encode_ideal(&build_epr(0.4).unwrap(), a, b).unwrap();
        let mut rng = rng::seeded(0);
        let res = bell_measure(&enc, 0, &mut rng).unwrap();
        assert_relative_eq!(res.x_minus.mean, a / SQRT_2, epsilon = 1e-14);
        assert_relative_eq!(res.p_plus.mean, b / SQRT_2, epsilon = 1e-14);
        let plain = bell_measure(&build_epr(0.4).unwrap(), 0, &mut rng).unwrap();
        assert_relative_eq!(res.x_minus.variance, plain.x_minus.variance, epsilon = 1e-15);
    }

    #[test]
    fn mirror_encoding_limits() {
        let epr = build_epr(0.3).unwrap();
        let lossy = encode(&epr, 0.0, 0.0, 0.01).unwrap();
        assert_eq!(lossy, epr.loss(0, 0.99).unwrap());
        let near_ideal = encode(&epr, 1.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(near_ideal.mean()[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(near_ideal.mean()[1], 2.0, epsilon = 1e-9);
        assert!(encode(&epr, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mirror_raises_floor_slightly() {
        let plan = SidebandPlan::two_tone(r2db(), Some(MIRROR_TRANSMITTANCE)).unwrap();
        let set = run_spectrum(&plan).unwrap();
        let (fx, _) = set.bell.points[0].floor_db();
        // 1% mirror loss on the signal beam: −1.9869 dB
        assert!(fx > -2.0 && fx < -1.98, "{fx}");
    }

    #[test]
    fn plan_validation() {
        let mut plan = SidebandPlan::two_tone(0.2, None).unwrap();
        plan.bins[3].frequency_hz = plan.bins[2].frequency_hz;
        assert!(plan.validate().is_err());
        let mut plan = SidebandPlan::two_tone(0.2, None).unwrap();
        plan.bins[0].loss_eta = 1.5;
        assert!(run_spectrum(&plan).is_err());
    }

    #[test]
    fn zero_squeezing_floor_is_shot_noise() {
        let plan = SidebandPlan::uniform(1e6, 1e5, 5, 0.0, 1.0, (1.2e6, 0.0), (1.1e6, 0.0), None).unwrap();
        let set = run_spectrum(&plan).unwrap();
        for pt in set.bell.points.iter().chain(&set.shot.points).chain(&set.epr.points) {
            assert_relative_eq!(pt.x_db, 0.0, epsilon = 1e-12);
            assert_relative_eq!(pt.p_db, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn phase_sweeps() {
        let r = r2db();
        let angles = lo_angles(64);
        let shot = phase_sweep(SweepKind::Shot, r, &angles).unwrap();
        assert!(shot.noise_db.iter().all(|v| v.abs() < 1e-12));
        let epr = phase_sweep(SweepKind::Epr, r, &angles).unwrap();
        assert!(epr.span_db() < 1e-9);
        assert_relative_eq!(epr.noise_db[0], 0.445_104_674, epsilon = 1e-8);
        let sq = phase_sweep(SweepKind::Squeezed, r, &angles).unwrap();
        assert_relative_eq!(sq.noise_db[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(sq.noise_db[32], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn csv_layout() {
        let plan = SidebandPlan::two_tone(0.2, None).unwrap();
        let set = run_spectrum(&plan).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "frequency_hz,shot_x_db,shot_p_db,epr_x_db,epr_p_db,bell_x_db,bell_p_db");
        assert!(lines.next().unwrap().starts_with("800000,0,0,"));
        assert_eq!(text.lines().count(), 18);

        let traces: Vec<_> = [SweepKind::Shot, SweepKind::Epr]
            .into_iter()
            .map(|k| phase_sweep(k, 0.2, &lo_angles(4)).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_phase_sweep_csv(&traces, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("phase_rad,shot_db,epr_db\n0,0,"));
    }
}
