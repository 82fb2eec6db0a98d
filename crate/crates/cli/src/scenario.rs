use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    DenseCodingSpectrum,
    DenseCodingPhaseSweep,
    CubicPhaseRun,
    CipdHistogram,
    CipdResolution,
}

impl Kind {
    pub const ALL: [Kind; 5] = [
        Kind::DenseCodingSpectrum,
        Kind::DenseCodingPhaseSweep,
        Kind::CubicPhaseRun,
        Kind::CipdHistogram,
        Kind::CipdResolution,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::DenseCodingSpectrum => "dense-coding-spectrum",
            Kind::DenseCodingPhaseSweep => "dense-coding-phase-sweep",
            Kind::CubicPhaseRun => "cubic-phase-run",
            Kind::CipdHistogram => "cipd-histogram",
            Kind::CipdResolution => "cipd-resolution",
        }
    }

    pub fn parse(name: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Top-level keys of a scenario file, with the parameter table typed by kind.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario<P> {
    pub kind: Kind,
    pub seed: u64,
    /// Read early through [`peek`]; declared here so the key is accepted.
    #[allow(dead_code)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub parameters: P,
}

#[derive(Deserialize)]
struct Header {
    kind: Option<toml::Value>,
    output_dir: Option<PathBuf>,
}

/// Reads only `kind` and `output_dir`, so the full file can then be parsed
/// with the right parameter schema.
pub fn peek(text: &str) -> Result<(Kind, Option<PathBuf>), String> {
    let head: Header = toml::from_str(text).map_err(|e| e.to_string())?;
    let kind = match head.kind {
        None => Err("missing key `kind`".into()),
        Some(toml::Value::String(s)) => Kind::parse(&s).ok_or_else(|| {
            format!("unknown kind `{s}`; expected one of: {}", Kind::ALL.map(Kind::name).join(", "))
        }),
        Some(other) => Err(format!("`kind` must be a string, got {}", other.type_str())),
    }?;
    Ok((kind, head.output_dir))
}

pub fn parse<P: DeserializeOwned + Default>(text: &str) -> Result<Scenario<P>, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// Output directory: the command-line override, else the file's
/// `output_dir` relative to the scenario file, else `<stem>.out` beside it.
pub fn resolve_output_dir(file: &Path, from_file: Option<&Path>, overridden: Option<&Path>) -> PathBuf {
    if let Some(p) = overridden {
        return p.to_path_buf();
    }
    let base = file.parent().unwrap_or(Path::new("."));
    match from_file {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => base.join(p),
        None => {
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
            base.join(format!("{stem}.out"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, Deserialize)]
    #[serde(deny_unknown_fields, default)]
    struct P {
        a: f64,
    }

    #[test]
    fn kinds_round_trip() {
        for k in Kind::ALL {
            assert_eq!(Kind::parse(k.name()), Some(k));
        }
        assert_eq!(Kind::parse("nope"), None);
    }

    #[test]
    fn header_peek() {
        let (kind, dir) = peek("kind = \"cipd-resolution\"\nseed = 1\noutput_dir = \"o\"").unwrap();
        assert_eq!(kind, Kind::CipdResolution);
        assert_eq!(dir, Some(PathBuf::from("o")));
        assert!(peek("seed = 1").unwrap_err().contains("missing"));
        assert!(peek("kind = \"x\"").unwrap_err().contains("cipd-histogram"));
        assert!(peek("kind = 3").is_err());
    }

    #[test]
    fn errors_carry_location() {
        let text = "kind = \"cipd-resolution\"\nseed = 1\n[parameters]\nb = 2\n";
        let err = parse::<P>(text).unwrap_err();
        assert!(err.contains("line 4"), "{err}");
        assert!(err.contains("unknown field `b`"), "{err}");
        let missing = parse::<P>("kind = \"cipd-resolution\"\n").unwrap_err();
        assert!(missing.contains("seed"), "{missing}");
    }

    #[test]
    fn output_dir_resolution() {
        let f = Path::new("/data/run/s.toml");
        assert_eq!(resolve_output_dir(f, None, None), PathBuf::from("/data/run/s.out"));
        assert_eq!(resolve_output_dir(f, Some(Path::new("o")), None), PathBuf::from("/data/run/o"));
        assert_eq!(resolve_output_dir(f, Some(Path::new("o")), Some(Path::new("x"))), PathBuf::from("x"));
    }
}
