//! Dirichlet-kernel periodograms, peak extraction, and soft-thresholded
//! Fourier inversion: the harmonic-retrieval engine behind both pipelines.
//!
//! A [`TrigMomentSeries`] holds per-edge (or per-vertex) trigonometric
//! moments `c_1..c_kmax`. Two sign conventions appear:
//!
//! * the *analysis* periodogram `Re { sum_k c_k e^{-i k phi} }`, whose peak
//!   estimates the offset when `c_k ≈ e^{i k theta}` (peak extraction);
//! * the *synthesis* periodogram `Re { sum_k c_k e^{+i k theta} }` used by
//!   the iterative refinement, which pairs with the analysis-side quadrature
//!   so that the round trip at threshold zero returns `pi * c_k`.
//!
//! The synthesis periodogram of `c` equals the analysis periodogram of
//! `conj(c)`, so both share one evaluation path. Grids are uniform,
//! `phi_g = 2 pi g / G`, and evaluation goes through an FFT that must agree
//! with direct summation to 1e-10 (tested).

use std::cell::RefCell;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(buf.len());
        fft.process(buf);
    });
}

/// Dirichlet kernel `Dir_m(x) = sin((m + 1/2) x) / sin(x / 2)`, with the
/// removable singularity at multiples of 2 pi evaluated as `2m + 1`.
pub fn dirichlet(m: usize, x: f64) -> f64 {
    assert!(m >= 1, "kernel order must be at least 1");
    let half_sin = (x / 2.0).sin();
    if half_sin.abs() < 1e-7 {
        // Near the singularity the ratio loses digits; sum directly.
        return 1.0 + 2.0 * (1..=m).map(|k| (k as f64 * x).cos()).sum::<f64>();
    }
    ((m as f64 + 0.5) * x).sin() / half_sin
}

/// Per-edge (or per-vertex) trigonometric moments `c_1..c_kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMomentSeries {
    coeffs: Vec<Complex64>,
}

impl TrigMomentSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "coeffs",
                message: "series needs at least one coefficient".into(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coeffs",
                message: "series contains a non-finite coefficient".into(),
            });
        }
        Ok(Self { coeffs })
    }

    /// Moments of a clean offset: `c_k = e^{i k theta}`.
    pub fn clean(theta: f64, k_max: usize) -> Self {
        Self {
            coeffs: (1..=k_max)
                .map(|k| Complex64::from_polar(1.0, k as f64 * theta))
                .collect(),
        }
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs[k - 1]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn conjugate(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    /// Analysis-convention value `Re { sum_k c_k e^{-i k phi} }` at one angle.
    pub fn analysis_value(&self, phi: f64) -> f64 {
        let rot = Complex64::from_polar(1.0, -phi);
        let mut w = rot;
        let mut acc = 0.0;
        for c in &self.coeffs {
            acc += (c * w).re;
            w *= rot;
        }
        acc
    }
}

/// Uniform samples of the analysis periodogram on `phi_g = 2 pi g / G`.
#[derive(Debug, Clone)]
pub struct Periodogram {
    grid_size: usize,
    values: Vec<f64>,
    series: TrigMomentSeries,
}

impl Periodogram {
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn phi(&self, g: usize) -> f64 {
        TAU * g as f64 / self.grid_size as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// The series the samples were computed from.
    pub fn series(&self) -> &TrigMomentSeries {
        &self.series
    }
}

fn check_grid(grid_size: usize, k_max: usize) -> Result<()> {
    let min = 4 * k_max;
    if grid_size < min {
        return Err(Error::GridTooCoarse {
            grid_size,
            k_max,
            min,
        });
    }
    Ok(())
}

/// Sample `Re { sum_k c_k e^{-i k phi} }` on a uniform grid (FFT-backed).
pub fn evaluate_periodogram(series: &TrigMomentSeries, grid_size: usize) -> Result<Periodogram> {
    check_grid(grid_size, series.k_max())?;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid_size];
    for (k, c) in series.coeffs.iter().enumerate() {
        buf[k + 1] = *c;
    }
    fft_forward(&mut buf);
    Ok(Periodogram {
        grid_size,
        values: buf.into_iter().map(|v| v.re).collect(),
        series: series.clone(),
    })
}

/// Sample the synthesis periodogram `Re { sum_k c_k e^{+i k theta} }` used by
/// the iterative refinement. Equals the analysis periodogram of the
/// conjugated series.
pub fn synthesis_periodogram(series: &TrigMomentSeries, grid_size: usize) -> Result<Periodogram> {
    evaluate_periodogram(&series.conjugate(), grid_size)
}

/// Golden-section maximization of `f` on `[a, b]` (assumed unimodal there).
pub(crate) fn golden_section_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if b - a < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Offset estimate: grid argmax of the periodogram's absolute value, refined
/// by one golden-section search within one grid cell. Ties break toward the
/// smaller angle; the result lies in `[0, 2 pi)`.
pub fn extract_peak(series: &TrigMomentSeries, grid_size: usize) -> Result<f64> {
    let pg = evaluate_periodogram(series, grid_size)?;
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (g, v) in pg.values.iter().enumerate() {
        let a = v.abs();
        if a > best_val {
            best_val = a;
            best = g;
        }
    }
    let cell = TAU / grid_size as f64;
    let center = pg.phi(best);
    let refined = golden_section_max(center - cell, center + cell, |phi| {
        series.analysis_value(phi).abs()
    });
    Ok(refined.rem_euclid(TAU))
}

/// Soft threshold `sign(x) * max(|x| - tau, 0)`.
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0, "threshold must be nonnegative");
    x.signum() * (x.abs() - tau).max(0.0)
}

/// Rectangle-rule quadrature of the soft-thresholded periodogram against
/// `e^{-i k theta}`:
/// `c_k = (2 pi / G) * sum_g eta_tau(values[g]) e^{-i k phi_g}` for
/// `k = 1..k_max`. Exact for trigonometric polynomials of degree < G/2, so
/// at `tau = 0` the synthesis periodogram of `c` returns `pi * c`.
pub fn thresholded_fourier_coeffs(
    pg: &Periodogram,
    tau: f64,
    k_max: usize,
) -> Result<TrigMomentSeries> {
    check_grid(pg.grid_size, k_max)?;
    let g = pg.grid_size;
    let mut buf: Vec<Complex64> = pg
        .values
        .iter()
        .map(|&v| Complex64::new(soft_threshold(v, tau), 0.0))
        .collect();
    fft_forward(&mut buf);
    let scale = TAU / g as f64;
    TrigMomentSeries::new((1..=k_max).map(|k| scale * buf[k]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_at_zero_is_order() {
        assert_eq!(dirichlet(5, 0.0), 11.0);
        assert_eq!(dirichlet(1, TAU), 3.0);
    }

    #[test]
    fn dirichlet_vanishes_at_kernel_zeros() {
        for m in [1usize, 3, 8, 64] {
            for l in 1..=(2 * m) {
                let x = TAU * l as f64 / (2.0 * m as f64 + 1.0);
                assert!(
                    dirichlet(m, x).abs() < 1e-9,
                    "Dir_{m} at zero {l}: {}",
                    dirichlet(m, x)
                );
            }
        }
    }

    #[test]
    fn dirichlet_matches_direct_sum() {
        let direct: f64 = (-3i32..=3).map(|k| (k as f64).cos()).sum();
        assert!((dirichlet(3, 1.0) - direct).abs() < 1e-12);
        // Near-singular arguments fall back to the sum and stay continuous.
        let eps = 1e-8;
        assert!((dirichlet(6, eps) - 13.0).abs() < 1e-5);
    }

    #[test]
    fn periodogram_of_clean_series_is_shifted_dirichlet() {
        let theta0 = 2.171;
        let k_max = 9;
        let pg = evaluate_periodogram(&TrigMomentSeries::clean(theta0, k_max), 256).unwrap();
        for g in 0..256 {
            let want = 0.5 * (dirichlet(k_max, theta0 - pg.phi(g)) - 1.0);
            assert!(
                (pg.values()[g] - want).abs() < 1e-9,
                "grid point {g}: {} vs {want}",
                pg.values()[g]
            );
        }
    }

    #[test]
    fn periodogram_trivial_cases() {
        let zero = TrigMomentSeries::new(vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        let pg = evaluate_periodogram(&zero, 64).unwrap();
        assert!(pg.values().iter().all(|&v| v == 0.0));

        let single = TrigMomentSeries::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        let pg = evaluate_periodogram(&single, 16).unwrap();
        for g in 0..16 {
            assert!((pg.values()[g] - pg.phi(g).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_matches_direct_summation() {
        let mut rng = crate::rng::seeded(70);
        let coeffs: Vec<Complex64> = (0..33)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let series = TrigMomentSeries::new(coeffs).unwrap();
        let pg = evaluate_periodogram(&series, 200).unwrap();
        for g in 0..200 {
            let direct = series.analysis_value(pg.phi(g));
            assert!(
                (pg.values()[g] - direct).abs() < 1e-10,
                "grid point {g} differs by {}",
                (pg.values()[g] - direct).abs()
            );
        }
    }

    #[test]
    fn grid_too_coarse_is_rejected() {
        let series = TrigMomentSeries::clean(1.0, 16);
        assert!(matches!(
            evaluate_periodogram(&series, 63),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(extract_peak(&series, 64).is_ok());
    }

    #[test]
    fn clean_peak_within_lemma_bound() {
        let k_max = 8;
        let bound = 4.0 * PI / (2.0 * k_max as f64 + 1.0);
        let mut rng = crate::rng::seeded(71);
        for _ in 0..50 {
            let theta0 = rng.gen::<f64>() * TAU;
            let peak = extract_peak(&TrigMomentSeries::clean(theta0, k_max), 4096).unwrap();
            let err = angle_dist(peak, theta0);
            assert!(err <= bound, "error {err} exceeds {bound}");
        }
    }

    #[test]
    fn clean_peak_reaches_grid_resolution() {
        let mut rng = crate::rng::seeded(72);
        for &k_max in &[3usize, 17, 64] {
            let theta0 = rng.gen::<f64>() * TAU;
            let peak = extract_peak(&TrigMomentSeries::clean(theta0, k_max), 8192).unwrap();
            let err = angle_dist(peak, theta0);
            assert!(err <= TAU / 8192.0 + 1e-6, "k_max {k_max}: error {err}");
        }
    }

    #[test]
    fn perturbed_peak_stays_within_lemma_bound() {
        let k_max = 16;
        let bound = 4.0 * PI / (2.0 * k_max as f64 + 1.0);
        let mut rng = crate::rng::seeded(73);
        for _ in 0..1000 {
            let theta0 = rng.gen::<f64>() * TAU;
            let coeffs: Vec<Complex64> = (1..=k_max)
                .map(|k| {
                    let eps = Complex64::new(
                        0.01 * (2.0 * rng.gen::<f64>() - 1.0),
                        0.01 * (2.0 * rng.gen::<f64>() - 1.0),
                    );
                    Complex64::from_polar(1.0, k as f64 * theta0) + eps
                })
                .collect();
            let peak = extract_peak(&TrigMomentSeries::new(coeffs).unwrap(), 4096).unwrap();
            assert!(angle_dist(peak, theta0) <= bound);
        }
    }

    #[test]
    fn peak_is_shift_equivariant() {
        // Multiplying c_k by e^{+i k delta} moves the analysis peak by +delta.
        let k_max = 12;
        let theta0 = 0.8;
        let delta = 1.9;
        let base = TrigMomentSeries::clean(theta0, k_max);
        let shifted = TrigMomentSeries::new(
            (1..=k_max)
                .map(|k| base.coeff(k) * Complex64::from_polar(1.0, k as f64 * delta))
                .collect(),
        )
        .unwrap();
        let p0 = extract_peak(&base, 4096).unwrap();
        let p1 = extract_peak(&shifted, 4096).unwrap();
        let moved = (p1 - p0).rem_euclid(TAU);
        assert!(angle_dist(moved, delta) < TAU / 4096.0 + 1e-9);
    }

    #[test]
    fn soft_threshold_basics() {
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(-1.0, 2.0), 0.0);
        assert_eq!(soft_threshold(1.375, 0.0), 1.375);
        assert_eq!(soft_threshold(-4.0, 1.0), -3.0);
    }

    #[test]
    fn quadrature_round_trip_returns_half_weight() {
        // Synthesis then analysis at tau = 0 multiplies coefficients by pi.
        let theta0 = 1.3;
        let k_max = 6;
        let series = TrigMomentSeries::clean(theta0, k_max);
        let pg = synthesis_periodogram(&series, 512).unwrap();
        let coeffs = thresholded_fourier_coeffs(&pg, 0.0, k_max).unwrap();
        for k in 1..=k_max {
            let want = PI * series.coeff(k);
            assert!(
                (coeffs.coeff(k) - want).norm() < 1e-8,
                "k = {k}: {} vs {want}",
                coeffs.coeff(k)
            );
        }
        // The plain analysis periodogram round-trips to the conjugate.
        let pg2 = evaluate_periodogram(&series, 512).unwrap();
        let coeffs2 = thresholded_fourier_coeffs(&pg2, 0.0, k_max).unwrap();
        for k in 1..=k_max {
            let want = PI * series.coeff(k).conj();
            assert!((coeffs2.coeff(k) - want).norm() < 1e-8);
        }
    }

    #[test]
    fn quadrature_above_max_kills_everything() {
        let series = TrigMomentSeries::clean(0.4, 5);
        let pg = synthesis_periodogram(&series, 128).unwrap();
        let tau = pg.max_abs() + 1.0;
        let coeffs = thresholded_fourier_coeffs(&pg, tau, 5).unwrap();
        assert!(coeffs.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn quadrature_agrees_with_refined_grid() {
        // Band-limited integrand (tau = 0): rectangle rule is exact, so a
        // 4x finer grid must reproduce the coefficients to 1e-9.
        let mut rng = crate::rng::seeded(74);
        let coeffs: Vec<Complex64> = (0..10)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let series = TrigMomentSeries::new(coeffs).unwrap();
        let coarse =
            thresholded_fourier_coeffs(&synthesis_periodogram(&series, 1024).unwrap(), 0.0, 10)
                .unwrap();
        let fine =
            thresholded_fourier_coeffs(&synthesis_periodogram(&series, 4096).unwrap(), 0.0, 10)
                .unwrap();
        for k in 1..=10 {
            assert!(
                (coarse.coeff(k) - fine.coeff(k)).norm() < 1e-9,
                "k = {k} drifts by {}",
                (coarse.coeff(k) - fine.coeff(k)).norm()
            );
        }
    }

    #[test]
    fn quadrature_with_kinks_converges_under_refinement() {
        // A positive threshold introduces kinks where |h| crosses tau; the
        // rectangle rule then converges polynomially. Verify the error
        // against a much finer reference shrinks as the grid refines.
        let series = TrigMomentSeries::clean(0.9, 8);
        let tau = 2.0;
        let refer =
            thresholded_fourier_coeffs(&synthesis_periodogram(&series, 1 << 16).unwrap(), tau, 8)
                .unwrap();
        let err_at = |g: usize| -> f64 {
            let c =
                thresholded_fourier_coeffs(&synthesis_periodogram(&series, g).unwrap(), tau, 8)
                    .unwrap();
            (1..=8)
                .map(|k| (c.coeff(k) - refer.coeff(k)).norm())
                .fold(0.0, f64::max)
        };
        let coarse = err_at(512);
        let fine = err_at(4096);
        assert!(fine < coarse / 2.0, "no refinement gain: {coarse} -> {fine}");
        assert!(fine < 1e-4, "fine-grid error {fine}");
    }

    #[test]
    fn peak_lands_within_one_cell_across_sweep() {
        let k_max = 8;
        let grid = 1024;
        for s in 0..100 {
            let theta0 = TAU * s as f64 / 100.0;
            let pg = evaluate_periodogram(&TrigMomentSeries::clean(theta0, k_max), grid).unwrap();
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (g, v) in pg.values().iter().enumerate() {
                if v.abs() > best_val {
                    best_val = v.abs();
                    best = g;
                }
            }
            assert!(angle_dist(pg.phi(best), theta0) <= TAU / grid as f64 + 1e-12);
        }
    }

    fn angle_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    }
}
