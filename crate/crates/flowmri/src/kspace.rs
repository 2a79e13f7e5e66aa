//! Fourier transforms, sparse sampling pattern generation and application,
//! zero-filling, phase differences, and the noise statistics chain linking
//! k-space, magnitude, phase, and velocity.

use crate::error::{Error, Result};
use crate::fields::{ComplexImage, Grid, ScalarField};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

/// Complex k-space signal with its per-signal noise deviation.
///
/// Values are stored in standard FFT ordering: the DC bin sits at index
/// `(0, 0)`.
#[derive(Debug, Clone)]
pub struct KSignal {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub sigma: f64,
}

impl KSignal {
    pub fn new(grid: Grid, values: Vec<Complex64>, sigma: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput("k-space signal length mismatch".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidInput("sigma must be nonnegative".into()));
        }
        Ok(KSignal { grid, values, sigma })
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn as_image(&self) -> ComplexImage {
        ComplexImage { grid: self.grid.clone(), values: self.values.clone() }
    }
}

/// Boolean k-space sampling mask, stored in the same standard FFT ordering
/// as [`KSignal`].
#[derive(Debug, Clone)]
pub struct SamplingPattern {
    pub grid: Grid,
    pub mask: Vec<bool>,
    pub n_sampled: usize,
}

impl SamplingPattern {
    pub fn new(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidInput("mask length mismatch".into()));
        }
        let n_sampled = mask.iter().filter(|&&b| b).count();
        if n_sampled == 0 {
            return Err(Error::InvalidInput("empty sampling pattern".into()));
        }
        Ok(SamplingPattern { grid, mask, n_sampled })
    }

    pub fn full(grid: &Grid) -> Self {
        SamplingPattern { grid: grid.clone(), mask: vec![true; grid.len()], n_sampled: grid.len() }
    }

    /// Density `N_s / N`.
    pub fn density(&self) -> f64 {
        self.n_sampled as f64 / self.grid.len() as f64
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn from_field(f: &ScalarField) -> Result<Self> {
        SamplingPattern::new(f.grid.clone(), f.values.iter().map(|&v| v > 0.5).collect())
    }
}

/// Velocity encoding description: `d` spatial components, four signals per
/// component, phase-difference constants `c_k` in m/s per radian.
#[derive(Debug, Clone)]
pub struct EncodingSpec {
    pub c: Vec<f64>,
}

impl EncodingSpec {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidInput("encoding constants must be positive".into()));
        }
        Ok(EncodingSpec { c })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Total signal count `4d`.
    pub fn n_signals(&self) -> usize {
        4 * self.c.len()
    }

    /// Component index `k = (j-1) div 4 + 1` for the 1-based signal index.
    pub fn component_of(&self, j: usize) -> Result<usize> {
        if j == 0 || j > self.n_signals() {
            return Err(Error::IndexOutOfRange(j, self.n_signals()));
        }
        Ok((j - 1) / 4 + 1)
    }

    /// Sign `(-1)^(j div 2)` of signal `j` in the phase difference, the
    /// `+,-,-,+` pattern within each group of four.
    pub fn sign_of(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.n_signals() {
            return Err(Error::IndexOutOfRange(j, self.n_signals()));
        }
        Ok(if (j / 2) % 2 == 0 { 1.0 } else { -1.0 })
    }
}

fn fft2(values: &mut [Complex64], n1: usize, n2: usize, forward: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if forward {
        planner.plan_fft_forward(n1)
    } else {
        planner.plan_fft_inverse(n1)
    };
    let col_fft = if forward {
        planner.plan_fft_forward(n2)
    } else {
        planner.plan_fft_inverse(n2)
    };
    for row in values.chunks_exact_mut(n1) {
        row_fft.process(row);
    }
    let mut col = vec![Complex64::default(); n2];
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            col[i2] = values[i2 * n1 + i1];
        }
        col_fft.process(&mut col);
        for i2 in 0..n2 {
            values[i2 * n1 + i1] = col[i2];
        }
    }
    let scale = 1.0 / ((n1 * n2) as f64).sqrt();
    for v in values.iter_mut() {
        *v *= scale;
    }
}

/// Unitary 2D Fourier transform of a complex image.
pub fn fft_forward(w: &ComplexImage) -> KSignal {
    let mut values = w.values.clone();
    fft2(&mut values, w.grid.n1, w.grid.n2, true);
    KSignal { grid: w.grid.clone(), values, sigma: 0.0 }
}

/// Unitary inverse transform back to image space.
pub fn fft_inverse(s: &KSignal) -> ComplexImage {
    let mut values = s.values.clone();
    fft2(&mut values, s.grid.n1, s.grid.n2, false);
    ComplexImage { grid: s.grid.clone(), values }
}

/// Map a centered k-space pixel index (DC at `floor(n/2)`) to standard FFT
/// ordering (DC at 0).
#[inline]
pub fn centered_to_std(c: usize, n: usize) -> usize {
    (c + n - n / 2) % n
}

#[inline]
pub fn std_to_centered(k: usize, n: usize) -> usize {
    (k + n / 2) % n
}

/// Point-sampling pattern from a rounded 2D normal distribution centered on
/// k-space, with standard deviation `omega_i * n_i / 4` per axis so that
/// `omega` covers the axis in the two-sigma sense. Samples that repeat or
/// fall outside the domain are rejected; drawing stops when
/// `round(density * N)` admissible pixels are set.
pub fn generate_p_odot(
    grid: &Grid,
    density: f64,
    omega: (f64, f64),
    seed: u64,
) -> Result<SamplingPattern> {
    generate_p_odot_with_draws(grid, density, omega, seed).map(|(p, _)| p)
}

/// As [`generate_p_odot`], additionally returning the rounded in-domain
/// draws (in centered pixel coordinates, repeats included) so the sampling
/// distribution itself can be checked.
pub fn generate_p_odot_with_draws(
    grid: &Grid,
    density: f64,
    omega: (f64, f64),
    seed: u64,
) -> Result<(SamplingPattern, Vec<(f64, f64)>)> {
    let n = grid.len();
    let target = (density * n as f64).round() as usize;
    if target < 1 {
        return Err(Error::InvalidInput("density too small: no samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mu1, mu2) = (grid.n1 as f64 / 2.0, grid.n2 as f64 / 2.0);
    let (s1, s2) = (omega.0 * grid.n1 as f64 / 4.0, omega.1 * grid.n2 as f64 / 4.0);
    let normal = Normal::new(0.0, 1.0).map_err(|_| Error::InvalidInput("bad normal".into()))?;
    let mut mask = vec![false; n];
    let mut draws = Vec::new();
    let mut set = 0usize;
    let budget = 1000 * n;
    for _ in 0..budget {
        if set == target {
            break;
        }
        let y1 = (mu1 + s1 * normal.sample(&mut rng)).round();
        let y2 = (mu2 + s2 * normal.sample(&mut rng)).round();
        if y1 < 0.0 || y1 >= grid.n1 as f64 || y2 < 0.0 || y2 >= grid.n2 as f64 {
            continue;
        }
        draws.push((y1, y2));
        let k1 = centered_to_std(y1 as usize, grid.n1);
        let k2 = centered_to_std(y2 as usize, grid.n2);
        let k = grid.idx(k1, k2);
        if !mask[k] {
            mask[k] = true;
            set += 1;
        }
    }
    if set < target {
        return Err(Error::DensityUnreachable(format!(
            "placed {} of {} after {} draws",
            set, target, budget
        )));
    }
    Ok((SamplingPattern::new(grid.clone(), mask)?, draws))
}

/// Vertical-line sampling pattern: whole columns at rounded 1D normal
/// samples, `round(density * n1)` distinct lines.
pub fn generate_p_parallel(
    grid: &Grid,
    density: f64,
    omega: (f64, f64),
    seed: u64,
) -> Result<SamplingPattern> {
    let target_lines = (density * grid.n1 as f64).round() as usize;
    if target_lines < 1 {
        return Err(Error::InvalidInput("density too small: no lines".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu1 = grid.n1 as f64 / 2.0;
    let s1 = omega.0 * grid.n1 as f64 / 4.0;
    let normal = Normal::new(0.0, 1.0).map_err(|_| Error::InvalidInput("bad normal".into()))?;
    let mut lines = vec![false; grid.n1];
    let mut set = 0usize;
    let budget = 1000 * grid.len();
    for _ in 0..budget {
        if set == target_lines {
            break;
        }
        let y1 = (mu1 + s1 * normal.sample(&mut rng)).round();
        if y1 < 0.0 || y1 >= grid.n1 as f64 {
            continue;
        }
        let k1 = centered_to_std(y1 as usize, grid.n1);
        if !lines[k1] {
            lines[k1] = true;
            set += 1;
        }
    }
    if set < target_lines {
        return Err(Error::DensityUnreachable(format!(
            "placed {} of {} lines after {} draws",
            set, target_lines, budget
        )));
    }
    let mut mask = vec![false; grid.len()];
    for i2 in 0..grid.n2 {
        for (i1, &on) in lines.iter().enumerate() {
            if on {
                mask[grid.idx(i1, i2)] = true;
            }
        }
    }
    SamplingPattern::new(grid.clone(), mask)
}

/// Restriction to the sampled bins: unsampled bins are zeroed.
pub fn apply_pattern(s: &KSignal, p: &SamplingPattern) -> Result<KSignal> {
    s.grid.check_same_layout(&p.grid, "apply_pattern")?;
    let values = s
        .values
        .iter()
        .zip(&p.mask)
        .map(|(&v, &m)| if m { v } else { Complex64::default() })
        .collect();
    Ok(KSignal { grid: s.grid.clone(), values, sigma: s.sigma })
}

/// Embedding of a sparse signal into the full grid by zero insertion.
pub fn zero_fill(s_sparse: &KSignal, p: &SamplingPattern) -> Result<KSignal> {
    apply_pattern(s_sparse, p)
}

/// Zero-filling image reconstruction: inverse transform of the zero-filled
/// signal.
pub fn zero_fill_image(s: &KSignal, p: &SamplingPattern) -> Result<ComplexImage> {
    Ok(fft_inverse(&zero_fill(s, p)?))
}

/// Velocity from the four phases of one encoding group:
/// `u_k = c_k * (phi1 - phi2 - phi3 + phi4)` pixelwise.
pub fn phase_difference(phis: &[ScalarField; 4], c_k: f64) -> Result<ScalarField> {
    for p in &phis[1..] {
        phis[0].grid.check_same_layout(&p.grid, "phase_difference")?;
    }
    let mut values = Vec::with_capacity(phis[0].values.len());
    for i in 0..phis[0].values.len() {
        values.push(
            c_k * (phis[0].values[i] - phis[1].values[i] - phis[2].values[i]
                + phis[3].values[i]),
        );
    }
    Ok(ScalarField { grid: phis[0].grid.clone(), values })
}

/// Wrap phase values into `(-pi, pi]`, leaving `exp(i phi)` unchanged.
pub fn wrap_phase(phi: &ScalarField) -> ScalarField {
    let pi = std::f64::consts::PI;
    let values = phi
        .values
        .iter()
        .map(|&p| {
            let t = (-p + pi).rem_euclid(2.0 * pi);
            pi - t
        })
        .collect();
    ScalarField { grid: phi.grid.clone(), values }
}

/// Rayleigh-consistent noise scale from a signal-free background region:
/// `sigma_rho = sqrt(mean(rho^2) / 2)`.
pub fn estimate_sigma_rho(rho: &ScalarField, background: &[usize]) -> Result<f64> {
    if background.len() < 100 {
        return Err(Error::RegionTooSmall { got: background.len(), need: 100 });
    }
    let mean_sq: f64 = background
        .iter()
        .map(|&k| rho.values[k] * rho.values[k])
        .sum::<f64>()
        / background.len() as f64;
    Ok((mean_sq / 2.0).sqrt())
}

/// Signal-level noise deviation from the magnitude-background estimate:
/// `sigma_j = sigma_rho * sqrt(2 / (4 - pi))`.
pub fn sigma_signal_from_rho(sigma_rho: f64) -> f64 {
    sigma_rho * (2.0 / (4.0 - std::f64::consts::PI)).sqrt()
}

/// Signal-to-noise ratio: mean magnitude over the active region divided by
/// the background noise scale.
pub fn snr(rho: &ScalarField, active: &[usize], sigma_rho: f64) -> Result<f64> {
    if active.is_empty() {
        return Err(Error::EmptyActiveRegion);
    }
    if sigma_rho <= 0.0 {
        return Err(Error::ZeroSigma);
    }
    let mu: f64 = active.iter().map(|&k| rho.values[k]).sum::<f64>() / active.len() as f64;
    Ok(mu / sigma_rho)
}

/// Phase noise deviation `sigma_phi = 1 / SNR`, valid for SNR > 3.
pub fn sigma_phase(snr: f64) -> f64 {
    if snr <= 3.0 {
        eprintln!(
            "warning: SNR {:.2} below 3, Gaussian phase-noise approximation degrades",
            snr
        );
    }
    1.0 / snr
}

/// Velocity noise deviation from the four phase deviations of a component:
/// `sigma_u = c_k * sqrt(sum_j sigma_phi_j^2)`.
pub fn sigma_velocity(c_k: f64, sigma_phis: &[f64; 4]) -> f64 {
    c_k * sigma_phis.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Add independent `N(0, sigma^2)` noise to the real and imaginary part of
/// every k-space bin. Deterministic per seed.
pub fn add_kspace_noise(s: &KSignal, sigma: f64, seed: u64) -> KSignal {
    if sigma == 0.0 {
        return s.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
    let values = s
        .values
        .iter()
        .map(|&v| v + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    KSignal { grid: s.grid.clone(), values, sigma: s.sigma.hypot(sigma) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn test_grid(n1: usize, n2: usize) -> Grid {
        Grid::new(n1, n2, 1.0, 1.0, (0.5, 0.5)).unwrap()
    }

    /// Direct O(N^2) unitary DFT, the oracle for the FFT path.
    fn dft_oracle(w: &ComplexImage) -> Vec<Complex64> {
        let (n1, n2) = (w.grid.n1, w.grid.n2);
        let mut out = vec![Complex64::default(); n1 * n2];
        for k2 in 0..n2 {
            for k1 in 0..n1 {
                let mut acc = Complex64::default();
                for x2 in 0..n2 {
                    for x1 in 0..n1 {
                        let ang = -2.0 * PI
                            * (k1 as f64 * x1 as f64 / n1 as f64
                                + k2 as f64 * x2 as f64 / n2 as f64);
                        acc += w.values[x2 * n1 + x1] * Complex64::from_polar(1.0, ang);
                    }
                }
                out[k2 * n1 + k1] = acc / ((n1 * n2) as f64).sqrt();
            }
        }
        out
    }

    #[test]
    fn constant_image_concentrates_at_dc() {
        let grid = test_grid(8, 8);
        let w = ComplexImage {
            grid: grid.clone(),
            values: vec![Complex64::new(1.0, 0.0); grid.len()],
        };
        let s = fft_forward(&w);
        assert!((s.values[0].re - 8.0).abs() < 1e-12);
        let off_dc: f64 = s.values[1..].iter().map(|v| v.norm()).sum();
        assert!(off_dc < 1e-12);
    }

    #[test]
    fn fft_matches_direct_dft_and_roundtrips() {
        let grid = test_grid(8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = ComplexImage {
            grid: grid.clone(),
            values: (0..grid.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        };
        let s = fft_forward(&w);
        let oracle = dft_oracle(&w);
        for (a, b) in s.values.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = fft_inverse(&s);
        for (a, b) in back.values.iter().zip(&w.values) {
            assert!((a - b).norm() < 1e-12);
        }
        // Parseval under the unitary normalization
        let ew: f64 = w.values.iter().map(|v| v.norm_sqr()).sum();
        assert!((s.energy() - ew).abs() < 1e-10 * ew);
    }

    #[test]
    fn odot_pattern_counts_and_spread() {
        let grid = test_grid(64, 64);
        let (p, draws) = generate_p_odot_with_draws(&grid, 0.15, (0.35, 0.35), 42).unwrap();
        assert_eq!(p.n_sampled, 614); // round(0.15 * 4096)
        // empirical std of accepted in-domain draws vs omega*n/4 = 5.6
        let stat = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        let xs: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let ys: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let target = 0.35 * 64.0 / 4.0;
        assert!((stat(&xs) - target).abs() / target < 0.15, "x spread {}", stat(&xs));
        assert!((stat(&ys) - target).abs() / target < 0.15, "y spread {}", stat(&ys));
        // every draw landed inside the domain
        assert!(draws
            .iter()
            .all(|&(x, y)| (0.0..64.0).contains(&x) && (0.0..64.0).contains(&y)));
    }

    #[test]
    fn odot_pattern_is_deterministic_and_saturates() {
        let grid = test_grid(16, 16);
        let a = generate_p_odot(&grid, 0.3, (0.5, 0.5), 7).unwrap();
        let b = generate_p_odot(&grid, 0.3, (0.5, 0.5), 7).unwrap();
        assert_eq!(a.mask, b.mask);
        // full density fills every pixel given a wide enough distribution
        let full = generate_p_odot(&grid, 1.0, (4.0, 4.0), 1).unwrap();
        assert_eq!(full.n_sampled, 256);
        // narrow distribution cannot reach high density
        assert!(matches!(
            generate_p_odot(&grid, 0.9, (0.02, 0.02), 1),
            Err(Error::DensityUnreachable(_))
        ));
    }

    #[test]
    fn parallel_pattern_sets_whole_columns() {
        let grid = test_grid(64, 64);
        let p = generate_p_parallel(&grid, 0.25, (0.35, 0.35), 11).unwrap();
        let mut lines = 0;
        for i1 in 0..64 {
            let col: Vec<bool> = (0..64).map(|i2| p.mask[grid.idx(i1, i2)]).collect();
            let on = col.iter().filter(|&&b| b).count();
            assert!(on == 0 || on == 64, "column {} partially set", i1);
            if on == 64 {
                lines += 1;
            }
        }
        assert_eq!(lines, 16); // round(0.25 * 64)
        let full = generate_p_parallel(&grid, 1.0, (4.0, 4.0), 2).unwrap();
        assert_eq!(full.n_sampled, 64 * 64);
    }

    #[test]
    fn pattern_application_and_zero_fill() {
        let grid = test_grid(16, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = KSignal {
            grid: grid.clone(),
            values: (0..grid.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
            sigma: 1.0,
        };
        let full = SamplingPattern::full(&grid);
        let same = apply_pattern(&s, &full).unwrap();
        assert_eq!(same.values, s.values);

        let p = generate_p_odot(&grid, 0.3, (0.8, 0.8), 9).unwrap();
        let sparse = apply_pattern(&s, &p).unwrap();
        assert!(sparse.energy() <= s.energy());
        // direct masking oracle: P(P^{-1}(x)) = x on the sampled set
        let refilled = apply_pattern(&zero_fill(&sparse, &p).unwrap(), &p).unwrap();
        for (k, (&a, &b)) in refilled.values.iter().zip(&sparse.values).enumerate() {
            assert_eq!(a, b, "bin {}", k);
            if !p.mask[k] {
                assert_eq!(a, Complex64::default());
            }
        }
    }

    #[test]
    fn phase_difference_matches_table_constant() {
        let grid = test_grid(4, 4);
        let phis = [
            ScalarField::constant(&grid, 0.5),
            ScalarField::constant(&grid, 0.2),
            ScalarField::constant(&grid, 0.1),
            ScalarField::constant(&grid, 0.0),
        ];
        let u = phase_difference(&phis, 0.01988).unwrap();
        for &v in &u.values {
            assert!((v - 3.976e-3).abs() < 1e-12);
        }
        // swapping phi1<->phi2 and phi3<->phi4 negates the velocity
        let swapped = [phis[1].clone(), phis[0].clone(), phis[3].clone(), phis[2].clone()];
        let un = phase_difference(&swapped, 0.01988).unwrap();
        for (&a, &b) in u.values.iter().zip(&un.values) {
            assert!((a + b).abs() < 1e-12);
        }
        let zeros = [
            ScalarField::zeros(&grid),
            ScalarField::zeros(&grid),
            ScalarField::zeros(&grid),
            ScalarField::zeros(&grid),
        ];
        let z = phase_difference(&zeros, 1.0).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrap_phase_convention() {
        let grid = test_grid(4, 4);
        let cases = [
            (0.0, 0.0),
            (1.5 * PI, -0.5 * PI),
            (PI, PI),
            (-PI, PI),
            (2.0 * PI, 0.0),
            (-2.5 * PI, -0.5 * PI),
        ];
        for &(inp, want) in &cases {
            let f = ScalarField::constant(&grid, inp);
            let w = wrap_phase(&f);
            assert!((w.values[0] - want).abs() < 1e-12, "wrap({}) = {}", inp, w.values[0]);
            assert!(w.values[0] > -PI && w.values[0] <= PI + 1e-15);
            // exp(i phi) preserved
            let d = (Complex64::from_polar(1.0, inp) - Complex64::from_polar(1.0, w.values[0]))
                .norm();
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn rayleigh_background_estimate() {
        // Monte-Carlo oracle: |(n1, n2)| with unit normals is Rayleigh(1)
        let n = 10_000;
        let grid = Grid::new(100, 100, 1.0, 1.0, (0.5, 0.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let rho = ScalarField {
            grid: grid.clone(),
            values: (0..n)
                .map(|_| {
                    let a: f64 = normal.sample(&mut rng);
                    let b: f64 = normal.sample(&mut rng);
                    a.hypot(b)
                })
                .collect(),
        };
        let idx: Vec<usize> = (0..n).collect();
        let est = estimate_sigma_rho(&rho, &idx).unwrap();
        assert!((est - 1.0).abs() < 0.03, "estimate {}", est);
        // homogeneity: scaling rho by 2 doubles the estimate
        let rho2 = rho.scale(2.0);
        let est2 = estimate_sigma_rho(&rho2, &idx).unwrap();
        assert!((est2 - 2.0 * est).abs() < 1e-12);
        // all-zero background gives 0
        let z = ScalarField::zeros(&grid);
        assert_eq!(estimate_sigma_rho(&z, &idx).unwrap(), 0.0);
        // too-small region is rejected
        assert!(matches!(
            estimate_sigma_rho(&rho, &idx[..50]),
            Err(Error::RegionTooSmall { .. })
        ));
    }

    #[test]
    fn signal_sigma_conversion() {
        assert_eq!(sigma_signal_from_rho(0.0), 0.0);
        let one = sigma_signal_from_rho(1.0);
        assert!((one - 1.52639).abs() < 1e-5, "factor {}", one);
        let t = sigma_signal_from_rho(14.7);
        assert!((t - 22.44).abs() < 0.01, "14.7 -> {}", t);
    }

    #[test]
    fn velocity_noise_closes_to_table_values() {
        // axial row: c = 1.988 cm/s, SNR = 11.4 -> sigma_u = 0.348 cm/s
        let sp = sigma_phase(11.4);
        let su = sigma_velocity(0.01988, &[sp, sp, sp, sp]);
        assert!((su - 0.01988 * 2.0 / 11.4).abs() < 1e-15);
        assert!((su * 100.0 - 0.348).abs() < 5e-3, "axial sigma_u {}", su * 100.0);
        // radial row: c = 0.529 cm/s, SNR = 9.3 -> sigma_u = 0.113 cm/s
        let sp = sigma_phase(9.3);
        let su = sigma_velocity(0.00529, &[sp, sp, sp, sp]);
        assert!((su * 100.0 - 0.113).abs() < 1e-3, "radial sigma_u {}", su * 100.0);
        // zero phases give zero velocity noise
        assert_eq!(sigma_velocity(1.0, &[0.0; 4]), 0.0);
    }

    #[test]
    fn kspace_noise_statistics() {
        let grid = test_grid(8, 8);
        let s = KSignal {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.len()],
            sigma: 0.0,
        };
        let clean = add_kspace_noise(&s, 0.0, 4);
        assert_eq!(clean.values, s.values);
        let a = add_kspace_noise(&s, 0.7, 4);
        let b = add_kspace_noise(&s, 0.7, 4);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x, y);
        }
        // empirical per-bin variance over many draws
        let sigma = 0.5;
        let draws = 10_000;
        let mut acc = 0.0;
        for seed in 0..draws {
            let noisy = add_kspace_noise(&s, sigma, seed);
            acc += noisy.values[17].re * noisy.values[17].re
                + noisy.values[17].im * noisy.values[17].im;
        }
        let var = acc / (2.0 * draws as f64);
        assert!(
            (var - sigma * sigma).abs() / (sigma * sigma) < 0.05,
            "variance {} vs {}",
            var,
            sigma * sigma
        );
    }

    #[test]
    fn encoding_spec_indexing() {
        let enc = EncodingSpec::new(vec![0.01988, 0.00529]).unwrap();
        assert_eq!(enc.n_signals(), 8);
        assert_eq!(enc.component_of(1).unwrap(), 1);
        assert_eq!(enc.component_of(4).unwrap(), 1);
        assert_eq!(enc.component_of(5).unwrap(), 2);
        assert_eq!(enc.component_of(8).unwrap(), 2);
        assert!(enc.component_of(9).is_err());
        let signs: Vec<f64> = (1..=8).map(|j| enc.sign_of(j).unwrap()).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn noise_chain_roundtrip_recovers_target_snr() {
        // constant-magnitude phantom at a target SNR, re-estimated through
        // the background Rayleigh chain
        let grid = Grid::new(128, 128, 1.0, 1.0, (0.5, 0.5)).unwrap();
        let target_snr = 10.0;
        let amp = 100.0;
        let sigma = amp / target_snr;
        // active disk in the center, background outside
        let mut active = Vec::new();
        let mut background = Vec::new();
        let rho0 = ScalarField::from_fn(&grid, |x, y| {
            let r = ((x - 64.0).powi(2) + (y - 64.0).powi(2)).sqrt();
            if r < 30.0 {
                amp
            } else {
                0.0
            }
        });
        for k in 0..grid.len() {
            let (i1, i2) = grid.coords(k);
            let (x, y) = grid.pos(i1, i2);
            let r = ((x - 64.0).powi(2) + (y - 64.0).powi(2)).sqrt();
            if r < 30.0 {
                active.push(k);
            } else if r > 45.0 {
                background.push(k);
            }
        }
        assert!(background.len() >= 10_000);
        let w = ComplexImage::from_polar(&rho0, &ScalarField::zeros(&grid)).unwrap();
        let s = fft_forward(&w);
        let noisy = add_kspace_noise(&s, sigma, 77);
        let img = fft_inverse(&noisy);
        let rho = img.magnitude();
        let sigma_rho = estimate_sigma_rho(&rho, &background).unwrap();
        let got = snr(&rho, &active, sigma_rho).unwrap();
        assert!(
            (got - target_snr).abs() / target_snr < 0.05,
            "snr {} vs {}",
            got,
            target_snr
        );
    }
}
