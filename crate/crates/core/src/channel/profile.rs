use std::path::Path;

use crate::error::{Error, Result};

/// One propagation path in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub delay_s: f64,
    pub doppler_hz: f64,
    pub power_db: f64,
}

/// A Q-path delay-Doppler power profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    paths: Vec<PathSpec>,
    normalize_total_power: bool,
}

impl ChannelProfile {
    pub fn new(paths: Vec<PathSpec>, normalize_total_power: bool) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("channel profile needs at least one path"));
        }
        for (i, p) in paths.iter().enumerate() {
            if !(p.delay_s.is_finite() && p.delay_s >= 0.0) {
                return Err(Error::invalid(format!("path {i}: delay must be finite and non-negative")));
            }
            if !p.doppler_hz.is_finite() || !p.power_db.is_finite() {
                return Err(Error::invalid(format!("path {i}: non-finite doppler or power")));
            }
        }
        Ok(Self {
            paths,
            normalize_total_power,
        })
    }

    /// The five-tap vehicular profile used throughout the experiments.
    pub fn table2(normalize_total_power: bool) -> Self {
        let rows = [
            (2.08, 0.0, 1.0),
            (5.20, 470.0, -1.804),
            (8.328, 940.0, -3.565),
            (11.46, 1410.0, -5.376),
            (14.80, 1851.0, -8.860),
        ];
        let paths = rows
            .iter()
            .map(|&(d, f, p)| PathSpec {
                delay_s: d * 1e-6,
                doppler_hz: f,
                power_db: p,
            })
            .collect();
        Self::new(paths, normalize_total_power).expect("static profile is valid")
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn q(&self) -> usize {
        self.paths.len()
    }

    pub fn normalize_total_power(&self) -> bool {
        self.normalize_total_power
    }

    pub fn with_normalization(mut self, on: bool) -> Self {
        self.normalize_total_power = on;
        self
    }

    /// Linear tap powers, scaled to unit sum when normalization is on.
    pub fn linear_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.paths.iter().map(|p| db_to_linear(p.power_db)).collect();
        if self.normalize_total_power {
            let total: f64 = raw.iter().sum();
            raw.iter().map(|v| v / total).collect()
        } else {
            raw
        }
    }

    /// Parses `delay_us, doppler_hz, power_db` lines; `#` starts a comment.
    pub fn parse(text: &str, origin: &Path, normalize_total_power: bool) -> Result<Self> {
        let rows = parse_triples(text, origin)?;
        let paths = rows
            .into_iter()
            .map(|(_, [d, f, p])| PathSpec {
                delay_s: d * 1e-6,
                doppler_hz: f,
                power_db: p,
            })
            .collect();
        Self::new(paths, normalize_total_power).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn from_file(path: &Path, normalize_total_power: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path, normalize_total_power)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Comma-separated numeric triples with line numbers, skipping blanks and comments.
pub(crate) fn parse_triples(text: &str, origin: &Path) -> Result<Vec<(usize, [f64; 3])>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 comma-separated fields, found {}", fields.len())));
        }
        let mut vals = [0.0; 3];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f.parse::<f64>().map_err(|_| err(format!("`{f}` is not a number")))?;
        }
        out.push((idx + 1, vals));
    }
    if out.is_empty() {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            msg: "no paths found".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_gives_unit_total() {
        let p = ChannelProfile::table2(true);
        let s: f64 = p.linear_powers().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let raw: f64 = ChannelProfile::table2(false).linear_powers().iter().sum();
        assert!((raw - 2.7786).abs() < 1e-3);
    }

    #[test]
    fn parses_comments_and_reports_line_numbers() {
        let text = "# header\n2.08, 0, 1\n\n5.2, 470, -1.804 # tap 2\n";
        let p = ChannelProfile::parse(text, Path::new("x"), false).unwrap();
        assert_eq!(p.q(), 2);
        assert!((p.paths()[1].delay_s - 5.2e-6).abs() < 1e-18);
        match ChannelProfile::parse("1, 2\n", Path::new("x"), false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ChannelProfile::parse("1, a, 3", Path::new("x"), false).is_err());
        assert!(ChannelProfile::parse("# nothing\n", Path::new("x"), false).is_err());
        assert!(ChannelProfile::parse("-1, 0, 0", Path::new("x"), false).is_err());
    }
}
