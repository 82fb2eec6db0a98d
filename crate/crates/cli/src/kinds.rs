//! Parameter schemas and runners of the scenario kinds.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use cvsynth::cipd::{self, CipdConfig, PeakParams, PhotonSource};
use cvsynth::cubic_phase::{
    self, CubicGateConfig, HomodyneArm, TargetSpec, DESK_SCALE_FINGERPRINT, DESK_SCALE_GAMMA_FIT,
    DESK_SCALE_RESIDUAL_THRESHOLD,
};
use cvsynth::dense_coding::{self, SidebandPlan, SweepKind};
use cvsynth::fock::{quadrature_wavefunction, required_half_width, NORM_TOL};
use cvsynth::gaussian::{noise_power_db, squeezing_for_db, VACUUM_VARIANCE};
use cvsynth::{rng, Complex64, Error};

use crate::output::Artifacts;
use crate::scenario::{self, Kind};

/// Failure of a scenario run, split by exit code.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter { .. }
            | Error::Empty(_)
            | Error::ImpossibleOutcome { .. }
            | Error::WorkspaceTooLarge { .. }
            | Error::ModeIndex { .. } => RunError::Config(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Numerical(format!("serialization failed: {e}"))
    }
}

type RunResult = Result<Artifacts, RunError>;

/// One row of `describe` output.
pub struct Field {
    pub name: &'static str,
    pub ty: &'static str,
    pub description: &'static str,
}

const fn field(name: &'static str, ty: &'static str, description: &'static str) -> Field {
    Field { name, ty, description }
}

pub fn summary(kind: Kind) -> &'static str {
    match kind {
        Kind::DenseCodingSpectrum => "Bell-output, EPR and shot-noise spectra of dense coding with AM/PM tones",
        Kind::DenseCodingPhaseSweep => "homodyne noise versus local-oscillator phase",
        Kind::CubicPhaseRun => "one pass through the measurement-induced cubic phase gate",
        Kind::CipdHistogram => "photoelectron histograms of the charge integration detector",
        Kind::CipdResolution => "photon-number resolution and dark-current drift of the detector",
    }
}

const DETECTOR_FIELDS: [Field; 7] = [
    field("eta", "float", "quantum efficiency in [0, 1]"),
    field("gain", "float", "mean gain in electrons per photoelectron"),
    field("dark_rate", "float", "dark current in electrons per second"),
    field("readout_noise", "float", "RMS readout noise in electrons"),
    field("sample_rate", "float", "readout rate in Hz"),
    field("integration_window", "float", "integration time per pulse in seconds"),
    field("excess_noise_factor", "float", "gain excess noise factor F > 1; deterministic gain when absent"),
];

pub fn fields(kind: Kind) -> Vec<Field> {
    match kind {
        Kind::DenseCodingSpectrum => vec![
            field("squeezing_db", "float", "squeezing of each input beam below shot noise, dB"),
            field("loss_eta", "float", "detection efficiency applied to both beams"),
            field("encoding", "\"ideal\" | \"mirror\"", "ideal displacement or a bright beam through a mirror"),
            field("mirror_transmittance", "float", "mirror transmittance for mirror encoding"),
            field("start_hz", "float", "first sideband frequency"),
            field("step_hz", "float", "bin spacing, also the resolution bandwidth"),
            field("n_bins", "integer", "number of frequency bins"),
            field("am_frequency_hz", "float", "frequency of the amplitude-modulation tone"),
            field("am_amplitude", "float", "AM tone amplitude in quadrature units; default 3e^-r"),
            field("pm_frequency_hz", "float", "frequency of the phase-modulation tone"),
            field("pm_amplitude", "float", "PM tone amplitude in quadrature units; default 3e^-r"),
            field("mc_samples", "integer", "homodyne samples per bin for the sampled spectrum; 0 skips it"),
        ],
        Kind::DenseCodingPhaseSweep => vec![
            field("squeezing_db", "float", "squeezing below shot noise, dB"),
            field("n_angles", "integer", "LO angles evenly covering [0, pi)"),
            field("traces", "[\"shot\" | \"epr\" | \"squeezed\"]", "traces to compute"),
        ],
        Kind::CubicPhaseRun => vec![
            field("r", "float", "two-mode squeezing of the ancilla source"),
            field("alpha", "[float, float]", "displacement [re, im] of the counted arm"),
            field("squeezer_s", "float", "squeezing of the conditioned ancilla"),
            field("qnd_g", "float", "QND coupling strength"),
            field("gamma_target", "float", "cubic coefficient reported next to the fit"),
            field("dim", "integer", "Fock cutoff per mode"),
            field("post_select_n", "integer", "photon-count outcome kept"),
            field("sample_photon_count", "bool", "draw the photon count instead of post-selecting"),
            field("homodyne_x", "float", "homodyne outcome kept"),
            field("sample_homodyne", "bool", "draw the homodyne outcome instead of fixing it"),
            field("homodyne_arm", "\"ancilla\" | \"target\"", "mode that is homodyned"),
            field("target", "table", "input state: {kind = \"vacuum\"}, {kind = \"coherent\", re, im} or {kind = \"squeezed\", s}"),
            field("fit_half_width", "float", "half-width of the phase-fit window"),
            field("check_completeness", "bool", "integrate all outcomes to check the measurement is complete"),
            field("wavefunction_points", "integer", "grid points of the output wavefunction on ±max(2·fit_half_width, √(2·dim))"),
        ],
        Kind::CipdHistogram => {
            let mut f: Vec<Field> = DETECTOR_FIELDS.into_iter().collect();
            f.extend([
                field("intensities", "[float]", "mean photon numbers of the Poisson pulse sources"),
                field("n_pulses", "integer", "pulses per intensity"),
                field("bin_width", "float", "histogram bin width in electrons"),
            ]);
            f
        }
        Kind::CipdResolution => {
            let mut f: Vec<Field> = DETECTOR_FIELDS.into_iter().collect();
            f.extend([
                field("target_snr", "float", "resolution the detector should reach"),
                field("duration", "float", "time over which dark charge accumulates, seconds"),
                field("dark_budget", "float", "maximum tolerated dark electrons over the duration"),
            ]);
            f
        }
    }
}

/// Defaults of every parameter, as TOML values keyed by name. Missing keys
/// have no default value.
pub fn defaults(kind: Kind) -> toml::Table {
    let value = match kind {
        Kind::DenseCodingSpectrum => toml::Table::try_from(SpectrumParams::default()),
        Kind::DenseCodingPhaseSweep => toml::Table::try_from(SweepParams::default()),
        Kind::CubicPhaseRun => toml::Table::try_from(CubicParams::default()),
        Kind::CipdHistogram => toml::Table::try_from(HistogramParams::default()),
        Kind::CipdResolution => toml::Table::try_from(ResolutionParams::default()),
    };
    value.expect("defaults serialize")
}

/// Parses the full scenario for `kind` and runs it, returning the seed and
/// the artifacts.
pub fn run(kind: Kind, text: &str) -> Result<(u64, Artifacts), RunError> {
    fn go<P: for<'de> Deserialize<'de> + Default>(
        kind: Kind,
        text: &str,
        f: impl FnOnce(P, u64) -> RunResult,
    ) -> Result<(u64, Artifacts), RunError> {
        let s = scenario::parse::<P>(text).map_err(RunError::Config)?;
        if s.kind != kind {
            return Err(RunError::Config(format!("kind changed between reads: {kind} then {}", s.kind)));
        }
        Ok((s.seed, f(s.parameters, s.seed)?))
    }
    match kind {
        Kind::DenseCodingSpectrum => go(kind, text, run_spectrum),
        Kind::DenseCodingPhaseSweep => go(kind, text, run_sweep),
        Kind::CubicPhaseRun => go(kind, text, run_cubic),
        Kind::CipdHistogram => go(kind, text, run_histogram),
        Kind::CipdResolution => go(kind, text, run_resolution),
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>, RunError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn csv_rows<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, RunError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()
    })
}

// dense-coding-spectrum

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    Ideal,
    Mirror,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    squeezing_db: f64,
    loss_eta: f64,
    encoding: Encoding,
    mirror_transmittance: f64,
    start_hz: f64,
    step_hz: f64,
    n_bins: usize,
    am_frequency_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    am_amplitude: Option<f64>,
    pm_frequency_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pm_amplitude: Option<f64>,
    mc_samples: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams {
            squeezing_db: 2.0,
            loss_eta: 1.0,
            encoding: Encoding::Ideal,
            mirror_transmittance: dense_coding::MIRROR_TRANSMITTANCE,
            start_hz: 800e3,
            step_hz: 50e3,
            n_bins: 17,
            am_frequency_hz: 1.3e6,
            am_amplitude: None,
            pm_frequency_hz: 1.1e6,
            pm_amplitude: None,
            mc_samples: 0,
        }
    }
}

/// Bell-output floor for ideal encoding and equal loss on both beams.
fn expected_floor_db(r: f64, eta: f64) -> f64 {
    let v = eta * VACUUM_VARIANCE * (-2.0 * r).exp() + (1.0 - eta) * VACUUM_VARIANCE;
    noise_power_db(v).unwrap_or(f64::NAN)
}

fn run_spectrum(p: SpectrumParams, seed: u64) -> RunResult {
    if !(p.squeezing_db >= 0.0) {
        return Err(RunError::Config("invalid parameter `squeezing_db`: must be non-negative".into()));
    }
    let r = squeezing_for_db(p.squeezing_db);
    let tone = dense_coding::default_tone_amplitude(r);
    let (am, pm) = (p.am_amplitude.unwrap_or(tone), p.pm_amplitude.unwrap_or(tone));
    let plan_for = |mirror: Option<f64>| {
        SidebandPlan::uniform(
            p.start_hz,
            p.step_hz,
            p.n_bins,
            r,
            p.loss_eta,
            (p.am_frequency_hz, am),
            (p.pm_frequency_hz, pm),
            mirror,
        )
    };
    let mirror = match p.encoding {
        Encoding::Ideal => None,
        Encoding::Mirror => Some(p.mirror_transmittance),
    };
    let plan = plan_for(mirror)?;
    let set = dense_coding::run_spectrum(&plan)?;

    let mut out = Artifacts::default();
    out.add("spectrum.csv", csv_bytes(|b| dense_coding::write_spectrum_csv(&set, b))?);
    out.add_json("spectrum.json", &set);

    let floors: Vec<(f64, f64)> = set.bell.points.iter().map(|pt| pt.floor_db()).collect();
    let worst_floor = |reference: &dyn Fn(usize) -> f64| {
        floors
            .iter()
            .enumerate()
            .map(|(k, (x, p))| (x - reference(k)).abs().max((p - reference(k)).abs()))
            .fold(0.0, f64::max)
    };
    match p.encoding {
        Encoding::Ideal => {
            let expected = expected_floor_db(r, p.loss_eta);
            let err = worst_floor(&|_| expected);
            out.check("bell-floor", err < 1e-9, format!("floor {:.4} dB, expected {expected:.4} dB, max error {err:.1e}", floors[0].0));
        }
        Encoding::Mirror => {
            let ideal = dense_coding::run_spectrum(&plan_for(None)?)?;
            let penalty = worst_floor(&|k| ideal.bell.points[k].floor_db().0);
            out.check(
                "mirror-penalty",
                penalty <= 10.0 * (1.0 / (1.0 - p.mirror_transmittance)).log10() + 1e-9,
                format!("floor {:.4} dB, {penalty:.4} dB above ideal encoding", floors[0].0),
            );
        }
    }

    let mut rows = Vec::new();
    for (b, pt) in plan.bins.iter().zip(&set.bell.points) {
        let (fx, fp) = pt.floor_db();
        if b.am_amplitude != 0.0 {
            rows.push(("am", b.frequency_hz, pt.x_db - fx));
        }
        if b.pm_amplitude != 0.0 {
            rows.push(("pm", b.frequency_hz, pt.p_db - fp));
        }
    }
    let weakest = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    if !rows.is_empty() {
        out.check("tones-decoded", weakest >= 3.0, format!("weakest tone {weakest:.2} dB above its floor"));
    }

    let crosstalk = dense_coding::crosstalk_db(&plan)?;
    let worst_leak = crosstalk
        .iter()
        .flat_map(|&(_, a, b)| [a, b])
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    out.add(
        "crosstalk.csv",
        csv_rows(
            &["frequency_hz", "am_into_p_db", "pm_into_x_db"],
            crosstalk.iter().map(|(f, a, b)| [f.to_string(), a.to_string(), b.to_string()]),
        )?,
    );
    if !crosstalk.is_empty() {
        out.check("crosstalk", worst_leak < -60.0, format!("worst leakage {worst_leak:.1} dB"));
    }

    if p.mc_samples > 0 {
        let sampled = dense_coding::run_spectrum_sampled(&plan, p.mc_samples, seed)?;
        let worst_z = sampled
            .iter()
            .flat_map(|s| {
                [(s.x_power - s.x_power_expected) / s.x_power_sigma, (s.p_power - s.p_power_expected) / s.p_power_sigma]
            })
            .map(f64::abs)
            .fold(0.0, f64::max);
        out.add(
            "sampled.csv",
            csv_rows(
                &["frequency_hz", "x_power", "x_power_expected", "x_power_sigma", "p_power", "p_power_expected", "p_power_sigma"],
                sampled.iter().map(|s| {
                    [s.frequency_hz, s.x_power, s.x_power_expected, s.x_power_sigma, s.p_power, s.p_power_expected, s.p_power_sigma]
                        .map(|v| v.to_string())
                }),
            )?,
        );
        out.check("sampled-agreement", worst_z < 5.0, format!("max |z| {worst_z:.2} over {} bins", sampled.len()));
    }
    Ok(out)
}

// dense-coding-phase-sweep

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    squeezing_db: f64,
    n_angles: usize,
    traces: Vec<SweepKind>,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { squeezing_db: 2.0, n_angles: 64, traces: vec![SweepKind::Shot, SweepKind::Epr, SweepKind::Squeezed] }
    }
}

fn run_sweep(p: SweepParams, _seed: u64) -> RunResult {
    if !(p.squeezing_db >= 0.0) {
        return Err(RunError::Config("invalid parameter `squeezing_db`: must be non-negative".into()));
    }
    if p.n_angles < 2 {
        return Err(RunError::Config("invalid parameter `n_angles`: need at least 2".into()));
    }
    if p.traces.is_empty() {
        return Err(RunError::Config("invalid parameter `traces`: must not be empty".into()));
    }
    let r = squeezing_for_db(p.squeezing_db);
    let phases = dense_coding::lo_angles(p.n_angles);
    let traces = p
        .traces
        .iter()
        .map(|&k| dense_coding::phase_sweep(k, r, &phases))
        .collect::<cvsynth::Result<Vec<_>>>()?;

    let mut out = Artifacts::default();
    out.add("phase_sweep.csv", csv_bytes(|b| dense_coding::write_phase_sweep_csv(&traces, b))?);
    out.add_json("phase_sweep.json", &traces);
    for t in &traces {
        match t.label {
            SweepKind::Shot | SweepKind::Epr => {
                let span = t.span_db();
                out.check(&format!("{}-flat", t.label.as_str()), span < 1e-9, format!("span {span:.1e} dB"));
            }
            SweepKind::Squeezed => {
                let min = t.noise_db.iter().copied().fold(f64::INFINITY, f64::min);
                let max = t.noise_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let err = (min + p.squeezing_db).abs().max((max - p.squeezing_db).abs());
                out.check("squeezed-extremes", err < 1e-9, format!("min {min:.4} dB, max {max:.4} dB"));
            }
        }
    }
    Ok(out)
}

// cubic-phase-run

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CubicParams {
    r: f64,
    alpha: [f64; 2],
    squeezer_s: f64,
    qnd_g: f64,
    gamma_target: f64,
    dim: usize,
    post_select_n: usize,
    sample_photon_count: bool,
    homodyne_x: f64,
    sample_homodyne: bool,
    homodyne_arm: HomodyneArm,
    target: TargetSpec,
    fit_half_width: f64,
    check_completeness: bool,
    wavefunction_points: usize,
}

impl Default for CubicParams {
    fn default() -> Self {
        let c = CubicGateConfig::default();
        CubicParams {
            r: c.r,
            alpha: [c.alpha.re, c.alpha.im],
            squeezer_s: c.squeezer_s,
            qnd_g: c.qnd_g,
            gamma_target: c.gamma_target,
            dim: c.dim,
            post_select_n: c.post_select_n.unwrap_or(0),
            sample_photon_count: false,
            homodyne_x: c.homodyne_x.unwrap_or(0.0),
            sample_homodyne: false,
            homodyne_arm: c.homodyne_arm,
            target: c.target,
            fit_half_width: c.fit_half_width,
            check_completeness: true,
            wavefunction_points: 201,
        }
    }
}

impl CubicParams {
    fn config(&self) -> CubicGateConfig {
        CubicGateConfig {
            r: self.r,
            alpha: Complex64::new(self.alpha[0], self.alpha[1]),
            squeezer_s: self.squeezer_s,
            qnd_g: self.qnd_g,
            gamma_target: self.gamma_target,
            dim: self.dim,
            post_select_n: (!self.sample_photon_count).then_some(self.post_select_n),
            homodyne_x: (!self.sample_homodyne).then_some(self.homodyne_x),
            homodyne_arm: self.homodyne_arm,
            target: self.target,
            fit_half_width: self.fit_half_width,
        }
    }
}

fn run_cubic(p: CubicParams, seed: u64) -> RunResult {
    if p.wavefunction_points < 2 {
        return Err(RunError::Config("invalid parameter `wavefunction_points`: need at least 2".into()));
    }
    let cfg = p.config();
    let rec = cubic_phase::run_gate(&cfg, seed)?;
    let d = &rec.diagnostics;

    let mut out = Artifacts::default();
    out.add_json("record.json", &rec);
    out.add(
        "amplitudes.csv",
        csv_rows(
            &["n", "re", "im"],
            rec.conditional_target.amplitudes().iter().enumerate().map(|(n, c)| [n.to_string(), c.re.to_string(), c.im.to_string()]),
        )?,
    );
    let h = (2.0 * p.fit_half_width).max(required_half_width(p.dim));
    let grid: Vec<f64> =
        (0..p.wavefunction_points).map(|k| -h + 2.0 * h * k as f64 / (p.wavefunction_points - 1) as f64).collect();
    let wf = quadrature_wavefunction(&rec.conditional_target, &grid)?;
    out.add(
        "wavefunction.csv",
        csv_rows(
            &["x", "re", "im", "density"],
            wf.x.iter().zip(&wf.psi).map(|(x, c)| [x.to_string(), c.re.to_string(), c.im.to_string(), c.norm_sqr().to_string()]),
        )?,
    );

    let norm_err = (rec.conditional_target.norm_sqr() - 1.0).abs();
    out.check("normalized", norm_err <= NORM_TOL, format!("|norm - 1| = {norm_err:.1e}"));
    if p.check_completeness {
        let total = cubic_phase::outcome_completeness(&cfg)?;
        out.check("outcome-completeness", (total - 1.0).abs() < 1e-6, format!("total probability {total:.9}"));
    }
    if rec.config_fingerprint == DESK_SCALE_FINGERPRINT {
        let ok = (d.gamma_fit - DESK_SCALE_GAMMA_FIT).abs() < 1e-4 && d.phase_residual_rms < DESK_SCALE_RESIDUAL_THRESHOLD;
        out.check(
            "desk-scale-golden",
            ok,
            format!(
                "gamma_fit {:.6} (recorded {DESK_SCALE_GAMMA_FIT}), residual {:.4e} (threshold {DESK_SCALE_RESIDUAL_THRESHOLD:.2e})",
                d.gamma_fit, d.phase_residual_rms
            ),
        );
    }
    out.warnings = rec.warnings.iter().chain(&wf.warnings).map(|w| w.to_string()).collect();
    out.warnings.dedup();
    Ok(out)
}

// cipd-histogram

/// Parameter struct with the detector fields inlined, since flattening
/// would disable the unknown-field check.
macro_rules! detector_params {
    ($name:ident { $($field:ident: $ty:ty = $default:expr,)* } $(#[$extra_attr:meta] $extra:ident: $extra_ty:ty = $extra_default:expr,)*) => {
        #[derive(Debug, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            eta: f64,
            gain: f64,
            dark_rate: f64,
            readout_noise: f64,
            sample_rate: f64,
            integration_window: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            excess_noise_factor: Option<f64>,
            $($field: $ty,)*
            $(#[$extra_attr] $extra: $extra_ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                let c = CipdConfig::cooled_20hz();
                $name {
                    eta: c.eta,
                    gain: c.gain,
                    dark_rate: c.dark_rate,
                    readout_noise: c.readout_noise,
                    sample_rate: c.sample_rate,
                    integration_window: c.integration_window,
                    excess_noise_factor: c.excess_noise_factor,
                    $($field: $default,)*
                    $($extra: $extra_default,)*
                }
            }
        }

        impl $name {
            fn detector(&self) -> Result<CipdConfig, RunError> {
                let c = CipdConfig {
                    eta: self.eta,
                    gain: self.gain,
                    dark_rate: self.dark_rate,
                    readout_noise: self.readout_noise,
                    sample_rate: self.sample_rate,
                    integration_window: self.integration_window,
                    excess_noise_factor: self.excess_noise_factor,
                };
                c.validate()?;
                Ok(c)
            }
        }
    };
}

detector_params!(HistogramParams {
    intensities: Vec<f64> = cipd::DEFAULT_INTENSITIES.to_vec(),
    n_pulses: usize = 2000,
    bin_width: f64 = 1.0,
});

#[derive(Serialize)]
struct IntensitySummary {
    mean_photons: f64,
    charge_histogram: String,
    input_histogram: String,
    peaks: Vec<cipd::Peak>,
    sample_mean: f64,
    sample_variance: f64,
    analytic_mean: f64,
    analytic_variance: f64,
}

#[derive(Serialize)]
struct HistogramSummary {
    detector: CipdConfig,
    n_pulses: usize,
    bin_width: f64,
    resolution: cipd::Resolution,
    intensities: Vec<IntensitySummary>,
}

fn run_histogram(p: HistogramParams, seed: u64) -> RunResult {
    let cfg = p.detector()?;
    if p.intensities.is_empty() {
        return Err(RunError::Config("invalid parameter `intensities`: must not be empty".into()));
    }
    if p.n_pulses < 2 {
        return Err(RunError::Config("invalid parameter `n_pulses`: need at least 2".into()));
    }
    let mut seeds = rng::seeded(seed);
    let mut out = Artifacts::default();
    let mut pulses = Vec::new();
    let mut summaries = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (k, &mean) in p.intensities.iter().enumerate() {
        let source = PhotonSource::Poisson { mean };
        let records = cipd::simulate_pulses(&cfg, &source, p.n_pulses, seeds.next_u64())?;
        let hist = cipd::histogram(&records, p.bin_width)?;
        let input = hist.rescaled(cfg.gain);
        let peaks = cipd::detect_peaks(&hist, cfg.gain, &PeakParams::default());
        let charge_name = format!("histogram_{k}_charge.csv");
        let input_name = format!("histogram_{k}_input.csv");
        out.add(&charge_name, csv_bytes(|b| hist.write_csv(b))?);
        out.add(&input_name, csv_bytes(|b| input.write_csv(b))?);

        let n = records.len() as f64;
        let sample_mean = records.iter().map(|r| r.output_charge).sum::<f64>() / n;
        let sample_variance = records.iter().map(|r| (r.output_charge - sample_mean).powi(2)).sum::<f64>() / (n - 1.0);
        let (analytic_mean, analytic_variance) = cipd::analytic_charge_moments(&cfg, &source);
        if analytic_variance > 0.0 {
            worst_z = worst_z.max((sample_mean - analytic_mean).abs() / (analytic_variance / n).sqrt());
        }
        pulses.extend(records.iter().map(|r| {
            [
                k.to_string(),
                mean.to_string(),
                r.true_photons.to_string(),
                r.photoelectrons.to_string(),
                r.dark_electrons.to_string(),
                r.output_charge.to_string(),
            ]
        }));
        summaries.push(IntensitySummary {
            mean_photons: mean,
            charge_histogram: charge_name,
            input_histogram: input_name,
            peaks,
            sample_mean,
            sample_variance,
            analytic_mean,
            analytic_variance,
        });
    }
    out.add(
        "pulses.csv",
        csv_rows(&["intensity", "mean_photons", "true_photons", "photoelectrons", "dark_electrons", "output_charge"], pulses)?,
    );
    let resolution = cipd::resolution_metric(&cfg)?;
    out.check("charge-mean", worst_z < 5.0, format!("max |z| of the mean charge {worst_z:.2}"));
    out.add_json(
        "summary.json",
        &HistogramSummary { detector: cfg, n_pulses: p.n_pulses, bin_width: p.bin_width, resolution, intensities: summaries },
    );
    Ok(out)
}

// cipd-resolution

detector_params!(ResolutionParams {
    target_snr: f64 = 4.0,
    duration: f64 = 1.0,
}
    #[serde(skip_serializing_if = "Option::is_none")]
    dark_budget: Option<f64> = None,
);

#[derive(Serialize)]
struct ResolutionReport {
    detector: CipdConfig,
    resolution: cipd::Resolution,
    target_snr: f64,
    meets_target: bool,
    required_readout_noise: f64,
    duration: f64,
    dark_drift: cipd::DarkDrift,
}

fn run_resolution(p: ResolutionParams, _seed: u64) -> RunResult {
    let cfg = p.detector()?;
    let resolution = cipd::resolution_metric(&cfg)?;
    let required = cipd::required_noise(&cfg, p.target_snr)?;
    let drift = cipd::dark_drift(&cfg, p.duration, p.dark_budget)?;
    let mut out = Artifacts::default();
    if let (Some(ok), Some(budget)) = (drift.within_budget, p.dark_budget) {
        out.check(
            "dark-budget",
            ok,
            format!("{:.3} dark electrons over {} s, budget {budget}", drift.expected_electrons, p.duration),
        );
    }
    out.add_json(
        "resolution.json",
        &ResolutionReport {
            detector: cfg,
            resolution,
            target_snr: p.target_snr,
            meets_target: resolution.value >= p.target_snr,
            required_readout_noise: required,
            duration: p.duration,
            dark_drift: drift,
        },
    );
    Ok(out)
}
