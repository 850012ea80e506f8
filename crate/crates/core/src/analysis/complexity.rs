use crate::analysis::se::Scheme;
use crate::error::{Error, Result};

/// Arguments of the operation-count formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityParams {
    pub m: u64,
    pub n: u64,
    pub q: u64,
    /// Constellation size.
    pub s: u64,
    /// Message-passing iterations.
    pub n_i: u64,
    /// Outer data-aided iterations.
    pub n_spi: u64,
    pub l_max: u64,
    pub k_max: u64,
}

/// Total real-valued operation count per frame. Order-level terms
/// (`O(Q³)` for the Q×Q inversion and `O(N_I·MN·Q·S)` for detection) are
/// counted with unit constant.
///
/// * SP-NI: `(2Q² + 2Q)MN + 3Q² + Q³ + N_I·MN·Q·S`.
/// * SP-I: `N_SPI · [(2Q² + 2Q + 1)MN + 3Q² + Q³ + N_I·MN·Q·S]`.
/// * EP: `(2k_max + 1)(l_max + 1) + 6Q + N_I·Q·S·(MN − G)` with `G` the
///   guard size, floored at zero when the guard exceeds the frame.
/// * CPA: the SP-NI estimator and detector cost (counted once per data frame).
pub fn complexity_counts(scheme: Scheme, p: &ComplexityParams) -> Result<u64> {
    if p.m == 0 || p.n == 0 || p.q == 0 || p.s == 0 || p.n_i == 0 {
        return Err(Error::invalid("complexity parameters must be positive"));
    }
    let mn = p.m * p.n;
    let q = p.q;
    let mp = p.n_i * mn * q * p.s;
    Ok(match scheme {
        Scheme::SpNi | Scheme::Cpa => (2 * q * q + 2 * q) * mn + 3 * q * q + q * q * q + mp,
        Scheme::SpI => {
            if p.n_spi == 0 {
                return Err(Error::invalid("N_SPI must be positive"));
            }
            p.n_spi * ((2 * q * q + 2 * q + 1) * mn + 3 * q * q + q * q * q + mp)
        }
        Scheme::Ep => {
            let guard = (2 * p.l_max + 1) * (4 * p.k_max + 1);
            (2 * p.k_max + 1) * (p.l_max + 1) + 6 * q + p.n_i * q * p.s * mn.saturating_sub(guard)
        }
        Scheme::PerfectCsi => mp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: u64) -> ComplexityParams {
        ComplexityParams {
            m,
            n: m,
            q: 5,
            s: 2,
            n_i: 20,
            n_spi: 2,
            l_max: 4,
            k_max: 12,
        }
    }

    #[test]
    fn single_tap_hand_count() {
        let p = ComplexityParams {
            q: 1,
            n_i: 1,
            ..params(8)
        };
        let mn = 64;
        assert_eq!(complexity_counts(Scheme::SpNi, &p).unwrap(), 4 * mn + 3 + 1 + mn * 2);
    }

    #[test]
    fn ordering_at_figure_parameters() {
        for m in [16, 32, 64] {
            let p = params(m);
            let ep = complexity_counts(Scheme::Ep, &p).unwrap();
            let ni = complexity_counts(Scheme::SpNi, &p).unwrap();
            let spi = complexity_counts(Scheme::SpI, &p).unwrap();
            assert!(ep <= ni && ni < spi);
        }
    }

    #[test]
    fn one_outer_iteration_dominates_non_iterative() {
        for q in 1..8 {
            for m in [4, 8, 16, 32] {
                for n_i in [1, 5, 20] {
                    let p = ComplexityParams {
                        q,
                        n_i,
                        n_spi: 1,
                        ..params(m)
                    };
                    assert!(complexity_counts(Scheme::SpI, &p).unwrap() >= complexity_counts(Scheme::SpNi, &p).unwrap());
                }
            }
        }
    }
}
