//! Flat `key = value` run configuration.
//!
//! Keys: `m`, `n`, `delta_f`, `fc`, `profile` (path to a
//! `delay_us, doppler_hz, power_db` file, or `table2` for the built-in
//! profile), `taps` (path to a pre-quantized `l, k, power_db` file),
//! `normalize`, `schemes`, `sigma2_p` (number or `optimal`), `snr_db`
//! (comma list or `start:stop:step`), `trials`, `min_errors`, `max_trials`,
//! `constellation`, `damping`, `epsilon`, `mp_iters`, `gaussian_exponent`,
//! `spi_tol`, `spi_max_iter`, `ep_l_max`, `ep_k_max`, `seed`, `output`.
//! Relative paths resolve against the directory of the config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::Scheme;
use crate::channel::{quantize_profile, ChannelProfile, ChannelTaps};
use crate::detector::MpConfig;
use crate::error::{Error, Result};
use crate::estimators::SpiStop;
use crate::grid::DdGrid;
use crate::modem::ConstellationSpec;

/// Where the channel taps come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    /// The built-in five-path profile.
    Table2,
    /// Physical path profile, quantized to the grid.
    Profile(PathBuf),
    /// Pre-quantized integer taps.
    Taps(PathBuf),
}

/// Pilot power selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitMode {
    Fixed(f64),
    /// Maximizer of the SINR bound, recomputed per SNR.
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub m: usize,
    pub n: usize,
    pub delta_f: f64,
    pub fc: f64,
    pub channel: ChannelSource,
    /// Scale tap powers to unit sum.
    pub normalize: bool,
    pub schemes: Vec<Scheme>,
    pub split: SplitMode,
    pub snr_db: Vec<f64>,
    /// Minimum trials per cell.
    pub trials: usize,
    /// Keep adding trials until this many bit errors are seen (0 disables).
    pub min_errors: u64,
    /// Hard cap on trials per cell.
    pub max_trials: usize,
    pub mp: MpConfig,
    pub spi: SpiStop,
    /// Embedded-pilot guard extents; defaults to the taps' `l_max`, `k_max`.
    pub ep_guard: Option<(usize, usize)>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 16,
            n: 16,
            delta_f: 15e3,
            fc: 4e9,
            channel: ChannelSource::Table2,
            normalize: false,
            schemes: vec![Scheme::SpNi, Scheme::SpI],
            split: SplitMode::Optimal,
            snr_db: vec![10.0],
            trials: 100,
            min_errors: 100,
            max_trials: 10_000,
            mp: MpConfig::default(),
            spi: SpiStop::default(),
            ep_guard: None,
            seed: 1,
            output: None,
        }
    }
}

/// Parses `a:b:step` (inclusive of `b` up to rounding) or a comma list.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("`{}` is not a number", t.trim())))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("range `{s}` must be start:stop:step")));
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(Error::Config(format!("range `{s}` needs step > 0 and stop ≥ start")));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| a + step * i as f64).collect());
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{v}` is not a boolean"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

impl RunConfig {
    /// Parses config text; `base_dir` anchors relative paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let base = origin.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: no + 1,
                msg: "expected `key = value`".into(),
            })?;
            cfg.set(k.trim(), v.trim(), base).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: no + 1,
                msg: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Sets one key; relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        match key {
            "m" => self.m = parse_num(key, v)?,
            "n" => self.n = parse_num(key, v)?,
            "delta_f" => self.delta_f = parse_num(key, v)?,
            "fc" => self.fc = parse_num(key, v)?,
            "profile" => {
                self.channel = if v.eq_ignore_ascii_case("table2") {
                    ChannelSource::Table2
                } else {
                    ChannelSource::Profile(base.join(v))
                }
            }
            "taps" => self.channel = ChannelSource::Taps(base.join(v)),
            "normalize" => self.normalize = parse_bool(v)?,
            "schemes" => {
                self.schemes = v
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "sigma2_p" => {
                self.split = if v.eq_ignore_ascii_case("optimal") {
                    SplitMode::Optimal
                } else {
                    SplitMode::Fixed(parse_num(key, v)?)
                }
            }
            "snr_db" => self.snr_db = parse_range(v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "min_errors" => self.min_errors = parse_num(key, v)?,
            "max_trials" => self.max_trials = parse_num(key, v)?,
            "constellation" => self.mp.constellation = ConstellationSpec::by_name(v)?,
            "damping" => self.mp.damping = parse_num(key, v)?,
            "epsilon" => self.mp.epsilon = parse_num(key, v)?,
            "mp_iters" => self.mp.max_iters = parse_num(key, v)?,
            "gaussian_exponent" => self.mp.gaussian_exponent = parse_bool(v)?,
            "spi_tol" => self.spi.tol = parse_num(key, v)?,
            "spi_max_iter" => self.spi.max_iter = parse_num(key, v)?,
            "ep_l_max" => {
                let k = self.ep_guard.map_or(0, |g| g.1);
                self.ep_guard = Some((parse_num(key, v)?, k));
            }
            "ep_k_max" => {
                let l = self.ep_guard.map_or(0, |g| g.0);
                self.ep_guard = Some((l, parse_num(key, v)?));
            }
            "seed" => self.seed = parse_num(key, v)?,
            "output" => self.output = Some(base.join(v)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.max_trials < self.trials {
            return Err(Error::Config(format!(
                "max_trials ({}) is below trials ({})",
                self.max_trials, self.trials
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db list is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes list is empty".into()));
        }
        if let SplitMode::Fixed(p) = self.split {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("sigma2_p must lie in [0, 1], got {p}")));
            }
        }
        self.mp.validate()?;
        if self.spi.max_iter == 0 || !(self.spi.tol > 0.0) {
            return Err(Error::Config("spi_max_iter must be ≥ 1 and spi_tol > 0".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<DdGrid> {
        DdGrid::new(self.m, self.n, self.delta_f, self.fc)
    }

    /// Integer taps for the configured grid.
    pub fn taps(&self) -> Result<ChannelTaps> {
        let grid = self.grid()?;
        let taps = match &self.channel {
            ChannelSource::Table2 => quantize_profile(&ChannelProfile::table2(self.normalize), &grid)?,
            ChannelSource::Profile(p) => quantize_profile(&ChannelProfile::from_file(p, self.normalize)?, &grid)?,
            ChannelSource::Taps(p) => ChannelTaps::from_file(p, self.normalize)?,
        };
        taps.validate_for(&grid)?;
        Ok(taps)
    }

    /// Guard extents used by the embedded-pilot scheme.
    pub fn ep_guard_for(&self, taps: &ChannelTaps) -> (usize, usize) {
        self.ep_guard.unwrap_or((taps.l_max(), taps.k_max()))
    }

    /// Canonical `key = value` rendering (parses back to an equal config).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "m = {}\nn = {}\ndelta_f = {:e}\nfc = {:e}", self.m, self.n, self.delta_f, self.fc);
        match &self.channel {
            ChannelSource::Table2 => s.push_str("profile = table2\n"),
            ChannelSource::Profile(p) => {
                let _ = writeln!(s, "profile = {}", p.display());
            }
            ChannelSource::Taps(p) => {
                let _ = writeln!(s, "taps = {}", p.display());
            }
        }
        let schemes: Vec<&str> = self.schemes.iter().map(Scheme::tag).collect();
        let snr: Vec<String> = self.snr_db.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "normalize = {}\nschemes = {}", self.normalize, schemes.join(", "));
        match self.split {
            SplitMode::Fixed(p) => {
                let _ = writeln!(s, "sigma2_p = {p:e}");
            }
            SplitMode::Optimal => s.push_str("sigma2_p = optimal\n"),
        }
        let _ = writeln!(s, "snr_db = {}", snr.join(", "));
        let _ = writeln!(
            s,
            "trials = {}\nmin_errors = {}\nmax_trials = {}",
            self.trials, self.min_errors, self.max_trials
        );
        let name = if self.mp.constellation == ConstellationSpec::qpsk() { "qpsk" } else { "bpsk" };
        let _ = writeln!(
            s,
            "constellation = {name}\ndamping = {:e}\nepsilon = {:e}\nmp_iters = {}\ngaussian_exponent = {}",
            self.mp.damping, self.mp.epsilon, self.mp.max_iters, self.mp.gaussian_exponent
        );
        let _ = writeln!(s, "spi_tol = {:e}\nspi_max_iter = {}", self.spi.tol, self.spi.max_iter);
        if let Some((l, k)) = self.ep_guard {
            let _ = writeln!(s, "ep_l_max = {l}\nep_k_max = {k}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(o) = &self.output {
            let _ = writeln!(s, "output = {}", o.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_keys_comments_and_ranges() {
        let text = "# demo\nm = 8\nn = 8 # inline\nschemes = SP-NI, EP, perfect-CSI\nsigma2_p = 0.3\nsnr_db = 0:10:5\nseed = 42\n";
        let cfg = RunConfig::parse(text, Path::new("/tmp/x.cfg")).unwrap();
        assert_eq!((cfg.m, cfg.n, cfg.seed), (8, 8, 42));
        assert_eq!(cfg.schemes, vec![Scheme::SpNi, Scheme::Ep, Scheme::PerfectCsi]);
        assert_eq!(cfg.split, SplitMode::Fixed(0.3));
        assert_eq!(cfg.snr_db, vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let cfg = RunConfig::parse("taps = t.taps\noutput = out.csv", Path::new("/a/b/c.cfg")).unwrap();
        assert_eq!(cfg.channel, ChannelSource::Taps(PathBuf::from("/a/b/t.taps")));
        assert_eq!(cfg.output, Some(PathBuf::from("/a/b/out.csv")));
    }

    #[test]
    fn rejects_bad_input() {
        let p = Path::new("c.cfg");
        assert!(matches!(RunConfig::parse("bogus = 1", p), Err(Error::Parse { line: 1, .. })));
        assert!(RunConfig::parse("schemes = OFDM", p).is_err());
        assert!(RunConfig::parse("trials = 0", p).is_err());
        assert!(RunConfig::parse("snr_db = ", p).is_err());
        assert!(RunConfig::parse("sigma2_p = 1.5", p).is_err());
        assert!(RunConfig::parse("m 8", p).is_err());
        assert!(parse_range("0:10").is_err());
        assert!(parse_range("5:0:1").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.schemes = Scheme::ALL.to_vec();
        cfg.split = SplitMode::Fixed(0.25);
        cfg.snr_db = vec![0.0, 2.5];
        cfg.ep_guard = Some((2, 1));
        cfg.channel = ChannelSource::Taps(PathBuf::from("/x/t.taps"));
        cfg.output = Some(PathBuf::from("/x/o.csv"));
        let back = RunConfig::parse(&cfg.to_text(), Path::new("/y/c.cfg")).unwrap();
        assert_eq!(back, cfg);
    }
}
