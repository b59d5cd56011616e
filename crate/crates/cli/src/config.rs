use std::fmt;
use std::path::{Path, PathBuf};

use calogero::suite::SuiteConfig;
use calogero::Complex64;
use clap::{Args, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Lattice parameter as `RE,IM`.
    #[arg(long, value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: Option<Complex64>,
    /// Number of particles.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Overridden by `CM_SEED` when that is set.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for every file the command writes.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// `key = value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub suite: SuiteConfig,
    pub out: PathBuf,
    pub format: Format,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_tau(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected RE,IM, got {s:?}"))?;
    let part = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    Ok(Complex64::new(part(re)?, part(im)?))
}

fn parse_format(s: &str) -> Result<Format, String> {
    Format::from_str(s, true)
}

/// Reads `key = value` lines; `#` starts a comment.
fn read_file(path: &Path, into: &mut RunArgs) -> Result<(), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ConfigError(format!("{}:{}: {msg}", path.display(), lineno + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim().replace('-', "_"), value.trim());
        let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
        match key.as_str() {
            "tau" => into.tau = Some(parse_tau(value).map_err(err)?),
            "n" => into.n = Some(value.parse().map_err(|e| err(format!("n: {e}")))?),
            "dt" => into.dt = Some(num(value)?),
            "t_end" => into.t_end = Some(num(value)?),
            "seed" => into.seed = Some(value.parse().map_err(|e| err(format!("seed: {e}")))?),
            "tol" => into.tol = Some(num(value)?),
            "out" => into.out = Some(PathBuf::from(value)),
            "format" => into.format = Some(parse_format(value).map_err(err)?),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    Ok(())
}

impl RunArgs {
    pub fn resolve(&self, env_seed: Option<String>) -> Result<RunConfig, ConfigError> {
        let mut merged = RunArgs::default();
        if let Some(path) = &self.config {
            read_file(path, &mut merged)?;
        }
        macro_rules! over {
            ($($f:ident),*) => { $( if self.$f.is_some() { merged.$f = self.$f.clone(); } )* };
        }
        over!(tau, n, dt, t_end, seed, tol, out, format);
        if let Some(s) = env_seed {
            merged.seed = Some(s.trim().parse().map_err(|e| ConfigError(format!("CM_SEED: {e}")))?);
        }
        let d = SuiteConfig::default();
        let suite = SuiteConfig {
            tau: merged.tau.unwrap_or(d.tau),
            n: merged.n.unwrap_or(d.n),
            dt: merged.dt.unwrap_or(d.dt),
            t_end: merged.t_end.unwrap_or(d.t_end),
            seed: merged.seed.unwrap_or(d.seed),
            tol: merged.tol.unwrap_or(d.tol),
        };
        suite.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(RunConfig {
            suite,
            out: merged.out.unwrap_or_else(|| PathBuf::from("out")),
            format: merged.format.unwrap_or(Format::Json),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn tau_parsing() {
        assert_eq!(parse_tau("0.1,-2").unwrap(), Complex64::new(0.1, -2.0));
        assert!(parse_tau("0.1").is_err());
        assert!(parse_tau("a,1").is_err());
    }

    #[test]
    fn file_then_flags_then_env() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# run\ntau = 0.1, 1.2\nn = 2\nseed = 5\nt-end = 0.5\nformat = csv").unwrap();
        let args = RunArgs { n: Some(4), config: Some(f.path().into()), ..Default::default() };
        let cfg = args.resolve(None).unwrap();
        assert_eq!(cfg.suite.tau, Complex64::new(0.1, 1.2));
        assert_eq!((cfg.suite.n, cfg.suite.seed, cfg.suite.t_end), (4, 5, 0.5));
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(args.resolve(Some("9".into())).unwrap().suite.seed, 9);
    }

    #[test]
    fn bad_values_are_config_errors() {
        let args = RunArgs { tau: Some(Complex64::new(0.0, -1.0)), ..Default::default() };
        assert!(args.resolve(None).is_err());
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "colour = blue").unwrap();
        let args = RunArgs { config: Some(f.path().into()), ..Default::default() };
        assert!(args.resolve(None).unwrap_err().0.contains("unknown key"));
        assert!(RunArgs::default().resolve(Some("x".into())).is_err());
    }
}
