//! Fast paths against naive dense constructions written out here.

use std::f64::consts::PI;
use std::sync::Arc;

use otfs_sp::channel::dense::{build_dense_effective, DEFAULT_ORACLE_CAP};
use otfs_sp::channel::{build_omega, sample_channel, ChannelGeometry, ChannelTaps, SparseEffectiveChannel, Tap};
use otfs_sp::estimators::{spni_estimate, EpLayout};
use otfs_sp::modem::{pipeline_receive, PilotSequence, PowerSplit};
use otfs_sp::transform::OtfsOperators;
use otfs_sp::{Complex64, DdFrame, DdGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn zeros(n: usize) -> Mat {
    vec![vec![c(0.0, 0.0); n]; n]
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (p, q) = (a.len(), b.len());
    let mut out = zeros(p * q);
    for i in 0..p {
        for j in 0..p {
            for k in 0..q {
                for l in 0..q {
                    out[i * q + k][j * q + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn dft(n: usize, sign: f64) -> Mat {
    (0..n)
        .map(|r| (0..n).map(|s| Complex64::cis(sign * 2.0 * PI * (r * s) as f64 / n as f64) / (n as f64).sqrt()).collect())
        .collect()
}

fn identity(n: usize) -> Mat {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

/// `Π`: cyclic down-shift, `(Π s)[j] = s[j − 1]`.
fn pi_matrix(n: usize) -> Mat {
    let mut m = zeros(n);
    for j in 0..n {
        m[j][(j + n - 1) % n] = c(1.0, 0.0);
    }
    m
}

/// `Δ = diag(z^0, …, z^{n−1})`.
fn delta_matrix(n: usize) -> Mat {
    let mut m = zeros(n);
    for (j, row) in m.iter_mut().enumerate() {
        row[j] = Complex64::cis(2.0 * PI * j as f64 / n as f64);
    }
    m
}

fn power(a: &Mat, e: usize) -> Mat {
    (0..e).fold(identity(a.len()), |acc, _| matmul(&acc, a))
}

/// `B_rx (Σ h_i Π^{l_i} Δ^{k_i}) B_tx` with `B_tx = F_N^H ⊗ I_M`.
fn oracle_heff(grid: &DdGrid, taps: &ChannelTaps, h: &[Complex64]) -> Mat {
    let (m, n, mn) = (grid.m(), grid.n(), grid.mn());
    let pi = pi_matrix(mn);
    let delta = delta_matrix(mn);
    let mut sum = zeros(mn);
    for (t, g) in taps.taps().iter().zip(h) {
        let k = t.k.rem_euclid(mn as i64) as usize;
        let term = matmul(&power(&pi, t.l), &power(&delta, k));
        for (srow, trow) in sum.iter_mut().zip(&term) {
            for (s, v) in srow.iter_mut().zip(trow) {
                *s += g * v;
            }
        }
    }
    let btx = kron(&dft(n, 1.0), &identity(m));
    let brx = kron(&dft(n, -1.0), &identity(m));
    matmul(&matmul(&brx, &sum), &btx)
}

fn random_taps(rng: &mut ChaCha8Rng, grid: &DdGrid, q: usize) -> ChannelTaps {
    loop {
        let taps: Vec<Tap> = (0..q)
            .map(|_| Tap {
                l: rng.random_range(0..grid.m()),
                k: rng.random_range(-(grid.n() as i64) / 2 + 1..grid.n() as i64 / 2),
                var: rng.random_range(0.05..1.0),
            })
            .collect();
        if let Ok(t) = ChannelTaps::new(taps) {
            if t.validate_for(grid).is_ok() {
                return t;
            }
        }
    }
}

fn random_frame(rng: &mut ChaCha8Rng, grid: DdGrid) -> DdFrame {
    DdFrame::from_fn(grid, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

#[test]
fn sparse_channel_matches_kronecker_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (m, n) in [(4, 4), (4, 6), (6, 4)] {
        let grid = DdGrid::with_defaults(m, n).unwrap();
        for _ in 0..5 {
            let taps = random_taps(&mut rng, &grid, 3);
            let real = sample_channel(&taps, &mut rng);
            let oracle = oracle_heff(&grid, &taps, &real.h);
            let sparse = SparseEffectiveChannel::from_realization(grid, &real).unwrap();
            let lib_dense = build_dense_effective(&real, &grid, DEFAULT_ORACLE_CAP).unwrap();
            for a in 0..grid.mn() {
                for b in 0..grid.mn() {
                    assert!((sparse.entry(a, b) - oracle[a][b]).norm() < 1e-10, "({a},{b}) at {m}x{n}");
                    assert!((lib_dense[(a, b)] - oracle[a][b]).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn transforms_match_direct_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = DdGrid::with_defaults(4, 8).unwrap();
    let ops = OtfsOperators::new(grid);
    let x = random_frame(&mut rng, grid);
    let tf = ops.isfft(&x).unwrap();
    let (m, n) = (4usize, 8usize);
    for mm in 0..m {
        for nn in 0..n {
            let mut v = c(0.0, 0.0);
            for l in 0..m {
                for k in 0..n {
                    let ph = -((mm * l) as f64) / m as f64 + (nn * k) as f64 / n as f64;
                    v += x.get(l, k) * Complex64::cis(2.0 * PI * ph);
                }
            }
            v /= ((m * n) as f64).sqrt();
            assert!((tf.get(mm, nn) - v).norm() < 1e-12);
        }
    }
    let s = ops.heisenberg_tx(&x).unwrap();
    let btx = kron(&dft(n, 1.0), &identity(m));
    for (j, row) in btx.iter().enumerate() {
        let v: Complex64 = row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
        assert!((s[j] - v).norm() < 1e-12);
    }
}

#[test]
fn three_receive_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (m, n) in [(8, 8), (16, 8), (8, 16)] {
        let grid = DdGrid::with_defaults(m, n).unwrap();
        let ops = OtfsOperators::new(grid);
        for _ in 0..10 {
            let taps = random_taps(&mut rng, &grid, 4);
            let real = sample_channel(&taps, &mut rng);
            let x = random_frame(&mut rng, grid);
            let h = SparseEffectiveChannel::from_realization(grid, &real).unwrap();
            let a = pipeline_receive(&x, &real, &ops).unwrap();
            let b = h.mul(x.as_slice()).unwrap();
            let omega = build_omega(x.as_slice(), h.geometry()).unwrap();
            let cc = omega.mul(&real.h).unwrap();
            for i in 0..grid.mn() {
                assert!((a.as_slice()[i] - b[i]).norm() < 1e-10);
                assert!((b[i] - cc[i]).norm() < 1e-10);
            }
        }
    }
}

/// MMSE estimate against the explicit normal equations
/// `ĥ = (Ω^H Ω / c + C_h⁻¹)⁻¹ Ω^H y / c`, solved by Gaussian elimination.
#[test]
fn spni_estimate_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let grid = DdGrid::with_defaults(8, 8).unwrap();
    let taps = random_taps(&mut rng, &grid, 3);
    let geo = Arc::new(ChannelGeometry::new(grid, taps.clone()).unwrap());
    let split = PowerSplit::from_pilot(0.3).unwrap();
    let pilots = PilotSequence::generate(grid, 0.3, 5).unwrap();
    let omega = build_omega(pilots.as_slice(), &geo).unwrap();
    let y: Vec<Complex64> = (0..64).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let sigma2_w = 0.2;
    let est = spni_estimate(&y, &omega, &taps, split, sigma2_w).unwrap();

    let q = taps.q();
    let cvar = taps.sigma2_h() * 0.7 + sigma2_w;
    let mut a = vec![vec![c(0.0, 0.0); q + 1]; q];
    for i in 0..q {
        for j in 0..q {
            let g: Complex64 = (0..64).map(|r| omega.get(r, i).conj() * omega.get(r, j)).sum();
            a[i][j] = g / cvar;
        }
        a[i][i] += 1.0 / taps.taps()[i].var;
        a[i][q] = (0..64).map(|r| omega.get(r, i).conj() * y[r]).sum::<Complex64>() / cvar;
    }
    for col in 0..q {
        let piv = a[col][col];
        for v in a[col].iter_mut() {
            *v /= piv;
        }
        for row in 0..q {
            if row != col {
                let f = a[row][col];
                let pivot_row = a[col].clone();
                for (v, p) in a[row].iter_mut().zip(pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    for i in 0..q {
        assert!((est.h_hat[i] - a[i][q]).norm() < 1e-10);
    }
}

#[test]
fn embedded_pilot_response_lands_on_shifted_bins() {
    let grid = DdGrid::with_defaults(16, 16).unwrap();
    let taps = ChannelTaps::new(vec![Tap { l: 0, k: 0, var: 1.0 }, Tap { l: 2, k: -1, var: 0.5 }]).unwrap();
    let geo = ChannelGeometry::new(grid, taps).unwrap();
    let layout = EpLayout::centered(&grid, 2, 1).unwrap();
    let pilot = layout.pilot_frame(grid);
    let om = build_omega(pilot.as_slice(), &geo).unwrap();
    for (i, (dl, dk)) in [(0usize, 0i64), (2, -1)].iter().enumerate() {
        let l = layout.l_p + dl;
        let k = (layout.k_p as i64 + dk) as usize;
        let want = grid.index(l, k);
        for r in 0..grid.mn() {
            let v = om.get(r, i).norm();
            if r == want {
                assert!((v - layout.pilot_power().sqrt()).abs() < 1e-12);
            } else {
                assert!(v < 1e-12);
            }
        }
    }
}
