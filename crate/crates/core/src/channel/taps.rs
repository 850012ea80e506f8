use std::path::Path;

use crate::channel::profile::{db_to_linear, parse_triples, ChannelProfile};
use crate::error::{Error, Result};
use crate::grid::DdGrid;

/// An integer delay-Doppler tap with its prior power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub l: usize,
    /// Signed Doppler index; reduced mod N only inside phase computations.
    pub k: i64,
    pub var: f64,
}

/// Integer taps with the prior `C_h = diag(var)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    taps: Vec<Tap>,
    l_max: usize,
    k_max: usize,
}

impl ChannelTaps {
    /// Validates distinct `(l, k)` pairs and non-negative powers.
    pub fn new(taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("at least one tap is required"));
        }
        for (i, t) in taps.iter().enumerate() {
            if !(t.var.is_finite() && t.var >= 0.0) {
                return Err(Error::invalid(format!("tap {i}: power must be finite and non-negative")));
            }
            if let Some(j) = taps[..i].iter().position(|o| o.l == t.l && o.k == t.k) {
                return Err(Error::TapCollision {
                    first: j,
                    second: i,
                    l: t.l,
                    k: t.k,
                });
            }
        }
        let l_max = taps.iter().map(|t| t.l).max().unwrap_or(0);
        let k_max = taps.iter().map(|t| t.k.unsigned_abs() as usize).max().unwrap_or(0);
        Ok(Self { taps, l_max, k_max })
    }

    /// Checks that the taps fit `grid` and stay distinct after Doppler wrap.
    pub fn validate_for(&self, grid: &DdGrid) -> Result<()> {
        if self.l_max >= grid.m() {
            return Err(Error::invalid(format!(
                "maximum delay tap {} does not fit M = {}",
                self.l_max,
                grid.m()
            )));
        }
        let n = grid.n() as i64;
        for (i, t) in self.taps.iter().enumerate() {
            if let Some(j) = self.taps[..i]
                .iter()
                .position(|o| o.l == t.l && o.k.rem_euclid(n) == t.k.rem_euclid(n))
            {
                return Err(Error::TapCollision {
                    first: j,
                    second: i,
                    l: t.l,
                    k: t.k,
                });
            }
        }
        Ok(())
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn q(&self) -> usize {
        self.taps.len()
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn vars(&self) -> Vec<f64> {
        self.taps.iter().map(|t| t.var).collect()
    }

    /// `σ²_h = Σ var_i`.
    pub fn sigma2_h(&self) -> f64 {
        self.taps.iter().map(|t| t.var).sum()
    }

    /// `σ̃²_h = Σ 1/var_i`; undefined when any tap has zero power.
    pub fn sigma2_h_tilde(&self) -> Result<f64> {
        if self.taps.iter().any(|t| t.var <= 0.0) {
            return Err(Error::invalid("inverse power sum is undefined for a zero-power tap"));
        }
        Ok(self.taps.iter().map(|t| 1.0 / t.var).sum())
    }

    /// Rescales powers to unit sum.
    pub fn normalized(&self) -> Self {
        let s = self.sigma2_h();
        let taps = self.taps.iter().map(|t| Tap { var: t.var / s, ..*t }).collect();
        Self { taps, ..*self }
    }

    /// Parses `l, k, power_db` lines (pre-quantized integer taps).
    pub fn parse(text: &str, origin: &Path, normalize_total_power: bool) -> Result<Self> {
        let rows = parse_triples(text, origin)?;
        let mut taps = Vec::with_capacity(rows.len());
        for (line, [l, k, p]) in rows {
            if l < 0.0 || l.fract() != 0.0 || k.fract() != 0.0 {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    msg: "delay and Doppler taps must be integers (delay non-negative)".into(),
                });
            }
            taps.push(Tap {
                l: l as usize,
                k: k as i64,
                var: db_to_linear(p),
            });
        }
        let t = Self::new(taps).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
        Ok(if normalize_total_power { t.normalized() } else { t })
    }

    pub fn from_file(path: &Path, normalize_total_power: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path, normalize_total_power)
    }
}

/// Rounds each path to the nearest delay and Doppler bin of `grid`.
pub fn quantize_profile(profile: &ChannelProfile, grid: &DdGrid) -> Result<ChannelTaps> {
    let delay_scale = grid.m() as f64 * grid.delta_f();
    let doppler_scale = grid.n() as f64 * grid.symbol_duration();
    let powers = profile.linear_powers();
    let taps = profile
        .paths()
        .iter()
        .zip(powers)
        .map(|(p, var)| Tap {
            l: (p.delay_s * delay_scale).round() as usize,
            k: (p.doppler_hz * doppler_scale).round() as i64,
            var,
        })
        .collect();
    let taps = ChannelTaps::new(taps)?;
    taps.validate_for(grid)?;
    Ok(taps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::profile::PathSpec;

    #[test]
    fn first_table_delay_quantizes_to_one_at_m32() {
        let g = DdGrid::with_defaults(32, 16).unwrap();
        let p = ChannelProfile::new(
            vec![PathSpec {
                delay_s: 2.08e-6,
                doppler_hz: 0.0,
                power_db: 0.0,
            }],
            true,
        )
        .unwrap();
        let t = quantize_profile(&p, &g).unwrap();
        assert_eq!(t.taps()[0].l, 1);
        assert_eq!(t.taps()[0].k, 0);
    }

    #[test]
    fn zero_path_is_origin_tap() {
        let g = DdGrid::with_defaults(8, 8).unwrap();
        let p = ChannelProfile::new(
            vec![PathSpec {
                delay_s: 0.0,
                doppler_hz: 0.0,
                power_db: 3.0,
            }],
            false,
        )
        .unwrap();
        let t = quantize_profile(&p, &g).unwrap();
        assert_eq!((t.taps()[0].l, t.taps()[0].k), (0, 0));
        assert!((t.taps()[0].var - 10f64.powf(0.3)).abs() < 1e-12);
    }

    #[test]
    fn table2_taps_at_16_and_32() {
        let p = ChannelProfile::table2(true);
        let t16 = quantize_profile(&p, &DdGrid::with_defaults(16, 16).unwrap()).unwrap();
        let lk: Vec<_> = t16.taps().iter().map(|t| (t.l, t.k)).collect();
        assert_eq!(lk, vec![(0, 0), (1, 1), (2, 1), (3, 2), (4, 2)]);
        assert_eq!((t16.l_max(), t16.k_max()), (4, 2));
        let t32 = quantize_profile(&p, &DdGrid::with_defaults(32, 32).unwrap()).unwrap();
        let lk: Vec<_> = t32.taps().iter().map(|t| (t.l, t.k)).collect();
        assert_eq!(lk, vec![(1, 0), (2, 1), (4, 2), (6, 3), (7, 4)]);
    }

    #[test]
    fn colliding_paths_are_reported() {
        let g = DdGrid::with_defaults(4, 4).unwrap();
        let paths = vec![
            PathSpec {
                delay_s: 0.0,
                doppler_hz: 0.0,
                power_db: 0.0,
            },
            PathSpec {
                delay_s: 1e-7,
                doppler_hz: 100.0,
                power_db: 0.0,
            },
        ];
        let p = ChannelProfile::new(paths, true).unwrap();
        match quantize_profile(&p, &g) {
            Err(Error::TapCollision { first, second, l, k }) => {
                assert_eq!((first, second, l, k), (0, 1, 0, 0));
            }
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn doppler_wrap_collision_and_delay_overflow() {
        let t = ChannelTaps::new(vec![Tap { l: 0, k: 1, var: 1.0 }, Tap { l: 0, k: -3, var: 1.0 }]).unwrap();
        assert!(t.validate_for(&DdGrid::with_defaults(4, 4).unwrap()).is_err());
        assert!(t.validate_for(&DdGrid::with_defaults(4, 8).unwrap()).is_ok());
        let t = ChannelTaps::new(vec![Tap { l: 4, k: 0, var: 1.0 }]).unwrap();
        assert!(t.validate_for(&DdGrid::with_defaults(4, 4).unwrap()).is_err());
    }

    #[test]
    fn power_sums() {
        let t = ChannelTaps::new(vec![Tap { l: 0, k: 0, var: 0.5 }, Tap { l: 1, k: 0, var: 0.25 }]).unwrap();
        assert!((t.sigma2_h() - 0.75).abs() < 1e-15);
        assert!((t.sigma2_h_tilde().unwrap() - 6.0).abs() < 1e-12);
        let z = ChannelTaps::new(vec![Tap { l: 0, k: 0, var: 0.0 }]).unwrap();
        assert!(z.sigma2_h_tilde().is_err());
    }

    #[test]
    fn parses_integer_tap_file() {
        let t = ChannelTaps::parse("0,0,0\n1,-1,0\n", Path::new("t"), true).unwrap();
        assert_eq!(t.taps()[1].k, -1);
        assert!((t.sigma2_h() - 1.0).abs() < 1e-12);
        assert!(ChannelTaps::parse("0.5,0,0\n", Path::new("t"), true).is_err());
        assert!(ChannelTaps::parse("0,0,0\n0,0,1\n", Path::new("t"), true).is_err());
    }
}
