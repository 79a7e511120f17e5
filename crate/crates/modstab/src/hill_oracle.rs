//! Fourier–Floquet–Hill discretization of the linearized operator about a
//! periodic wave, used as an independent check on the normal form.
//!
//! Perturbations are written `e^{iμy}·(periodic)`, so the spectrum near the
//! origin splits into four curves `λ_j(μ) ≈ r_j μ` whose slopes should equal
//! the normal-form ratios.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::action::action_jet;
use crate::brackets::compute_brackets;
use crate::equivalence::ConstrainedPoint;
use crate::error::{Error, Result};
use crate::normal_form::{assemble_whitham_pencil, grade, solve_pencil, StabilityVerdict};
use crate::numeric::{canonical_order, extrapolate_to_zero, match_multisets};
use crate::potential::PotentialModel;
use crate::settings::Settings;
use crate::wave::{profile, LinearPoint, WaveProfile};

/// Tail band `N/4 ≤ |m| ≤ N/2` must sit this far below the peak coefficient.
const RESOLUTION_TOL: f64 = 1e-10;
/// Slopes with `|Re r| ≤` this fraction of `max |r|` count as imaginary.
const VERDICT_REL: f64 = 1e-4;
/// `μ` may not exceed this fraction of the wavenumber `2π/T*`.
const MU_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct FloquetOperator {
    pub mu: f64,
    /// Grid points per component; the matrix is `2N × 2N`.
    pub modes: usize,
    pub period: f64,
    pub matrix: DMatrix<Complex64>,
}

impl FloquetOperator {
    pub fn dimension(&self) -> usize {
        2 * self.modes
    }
}

fn forward(data: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(data.len()).process(data);
}

fn inverse(data: &mut [Complex64]) {
    let n = data.len() as f64;
    FftPlanner::new().plan_fft_inverse(data.len()).process(data);
    for v in data.iter_mut() {
        *v /= n;
    }
}

/// Signed mode index of FFT slot `i`.
fn mode(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Dense circulant `F⁻¹ diag(symbol) F` on the grid.
fn circulant(symbol: &[Complex64]) -> DMatrix<Complex64> {
    let n = symbol.len();
    let mut column = symbol.to_vec();
    inverse(&mut column);
    DMatrix::from_fn(n, n, |j, l| column[(j + n - l) % n])
}

/// Largest coefficient in the band `N/4 ≤ |m| ≤ N/2`, relative to the largest overall.
fn spectral_tail(values: &[f64]) -> f64 {
    let n = values.len();
    let mut c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut c);
    let peak = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let tail = (0..n)
        .filter(|&i| mode(i, n).abs() >= (n / 4) as f64)
        .map(|i| c[i].norm())
        .fold(0.0, f64::max);
    tail / peak
}

/// Assemble `[[K, −L₋], [L₊, K]]` with `∂_y → ∂_y + iμ`:
///
/// `K = S_yy + 2S_y ∂_y`, `L₋ = −ω − ∂_yy + S_y² − ζf(A²)`,
/// `L₊ = L₋ − 2ζf′(A²)A²`.
pub fn build_operator(
    wave: &WaveProfile,
    lp: &LinearPoint,
    model: &PotentialModel,
    mu: f64,
) -> Result<FloquetOperator> {
    let n = wave.samples.len();
    if n < 64 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "Hill discretization needs a power of two ≥ 64 grid points, got {n}"
        )));
    }
    let t = wave.period;
    let s_y: Vec<f64> = wave.samples.iter().map(|p| p.s_y).collect();
    let amp2: Vec<f64> = wave.samples.iter().map(|p| p.a * p.a).collect();
    let potential: Vec<f64> = s_y
        .iter()
        .zip(&amp2)
        .map(|(s, &a2)| s * s - lp.zeta * model.f(a2))
        .collect();
    let stiffening: Vec<f64> = amp2
        .iter()
        .map(|&a2| 2.0 * lp.zeta * model.df(a2) * a2)
        .collect();

    let tail = [
        spectral_tail(&s_y),
        spectral_tail(&potential),
        spectral_tail(&stiffening),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if !(tail < RESOLUTION_TOL) {
        return Err(Error::Resolution { tail, modes: n });
    }

    let k = |i: usize| 2.0 * PI * mode(i, n) / t;
    let ny = n / 2;
    // The Nyquist mode drops its odd (first-derivative) part so that the
    // discrete ∂_y stays real and skew and ∂_yy stays symmetric.
    let d1: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(0.0, if i == ny { mu } else { k(i) + mu }))
        .collect();
    let d2: Vec<Complex64> = (0..n)
        .map(|i| {
            Complex64::new(
                if i == ny {
                    -(k(i) * k(i) + mu * mu)
                } else {
                    -(k(i) + mu).powi(2)
                },
                0.0,
            )
        })
        .collect();
    let d1 = circulant(&d1);
    let d2 = circulant(&d2);

    let mut syy: Vec<Complex64> = s_y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut syy);
    for (i, c) in syy.iter_mut().enumerate() {
        *c *= if i == ny {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k(i))
        };
    }
    inverse(&mut syy);

    let mut matrix = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let kk = d1[(r, c)] * (2.0 * s_y[r])
                + if r == c {
                    Complex64::new(syy[r].re, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            let mut lm = -d2[(r, c)];
            if r == c {
                lm += -lp.omega + potential[r];
            }
            let lplus = if r == c { lm - stiffening[r] } else { lm };
            matrix[(r, c)] = kk;
            matrix[(r + n, c + n)] = kk;
            matrix[(r, c + n)] = -lm;
            matrix[(r + n, c)] = lplus;
        }
    }
    Ok(FloquetOperator {
        mu,
        modes: n,
        period: t,
        matrix,
    })
}

/// Full dense spectrum, sorted by modulus.
pub fn spectrum(op: &FloquetOperator) -> Result<Vec<Complex64>> {
    let ev = op
        .matrix
        .eigenvalues()
        .ok_or_else(|| Error::EigenFailure(format!("Schur iteration failed at μ = {}", op.mu)))?;
    let mut ev: Vec<Complex64> = ev.iter().copied().collect();
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    Ok(ev)
}

/// The `count` eigenvalues of smallest modulus.
pub fn spectrum_near_origin(op: &FloquetOperator, count: usize) -> Result<Vec<Complex64>> {
    let mut ev = spectrum(op)?;
    ev.truncate(count);
    Ok(ev)
}

/// The four eigenvalues closest to the origin at one `μ`, plus the modulus of the fifth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearOrigin {
    pub mu: f64,
    pub eigenvalues: [Complex64; 4],
    pub fifth: f64,
    pub spectral_radius: f64,
}

fn near_origin(
    wave: &WaveProfile,
    lp: &LinearPoint,
    model: &PotentialModel,
    mu: f64,
) -> Result<NearOrigin> {
    let op = build_operator(wave, lp, model, mu)?;
    let ev = spectrum(&op)?;
    let mut four = ev[..4].to_vec();
    canonical_order(&mut four);
    Ok(NearOrigin {
        mu,
        eigenvalues: four.try_into().expect("four eigenvalues"),
        fifth: ev[4].norm(),
        spectral_radius: ev.last().map_or(0.0, |z| z.norm()),
    })
}

/// The four bands near the origin at each `μ`, in input order, with each
/// band's labels carried across `μ` by optimal assignment of `λ/μ`.
pub fn near_origin_curves(
    wave: &WaveProfile,
    lp: &LinearPoint,
    model: &PotentialModel,
    mu_list: &[f64],
) -> Result<Vec<NearOrigin>> {
    let mut curves: Vec<NearOrigin> = mu_list
        .par_iter()
        .map(|&mu| near_origin(wave, lp, model, mu))
        .collect::<Result<_>>()?;
    let mut previous: Option<[Complex64; 4]> = None;
    for c in curves.iter_mut() {
        if c.mu == 0.0 {
            continue;
        }
        let ratios = c.eigenvalues.map(|l| l / c.mu);
        if let Some(prev) = previous {
            let (perm, _) = match_multisets(&prev, &ratios);
            c.eigenvalues = std::array::from_fn(|i| c.eigenvalues[perm[i]]);
        }
        previous = Some(c.eigenvalues.map(|l| l / c.mu));
    }
    Ok(curves)
}

/// Extrapolate `λ_j(μ)/μ` to `μ = 0` over the curves with `μ ≠ 0`.
pub fn fit_slopes(curves: &[NearOrigin]) -> Option<[Complex64; 4]> {
    let used: Vec<&NearOrigin> = curves.iter().filter(|c| c.mu != 0.0).collect();
    if used.is_empty() {
        return None;
    }
    let mus: Vec<f64> = used.iter().map(|c| c.mu).collect();
    Some(std::array::from_fn(|j| {
        let ys: Vec<Complex64> = used.iter().map(|c| c.eigenvalues[j] / c.mu).collect();
        extrapolate_to_zero(&mus, &ys)
    }))
}

/// The `μ = 0` generalized kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// Moduli of the six eigenvalues closest to the origin.
    pub smallest: Vec<f64>,
    /// Count below `threshold`.
    pub dimension: usize,
    /// `|λ₅| / |λ₄|`.
    pub gap_factor: f64,
    /// `1e-6·√ρ` with `ρ` the spectral radius: a defective zero eigenvalue
    /// splits by about the square root of rounding times the operator norm.
    pub threshold: f64,
}

pub fn kernel_report(
    wave: &WaveProfile,
    lp: &LinearPoint,
    model: &PotentialModel,
) -> Result<KernelReport> {
    let op = build_operator(wave, lp, model, 0.0)?;
    let ev = spectrum(&op)?;
    let radius = ev.last().map_or(0.0, |z| z.norm());
    let threshold = 1e-6 * radius.sqrt();
    let smallest: Vec<f64> = ev.iter().take(6).map(|z| z.norm()).collect();
    let dimension = ev.iter().take_while(|z| z.norm() < threshold).count();
    Ok(KernelReport {
        gap_factor: smallest[4] / smallest[3].max(f64::MIN_POSITIVE),
        smallest,
        dimension,
        threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSlopeReport {
    pub modes: usize,
    pub period: f64,
    pub mu_values: Vec<f64>,
    /// Tracked `λ_j(μ)`, one entry per `μ`.
    pub branches: Vec<[Complex64; 4]>,
    /// `λ_j(μ)/μ` at the smallest `μ`, without extrapolation.
    pub single_mu_slopes: [Complex64; 4],
    /// Polynomial extrapolation of `λ_j/μ` to `μ = 0`.
    pub slopes: [Complex64; 4],
    pub normal_form: [Complex64; 4],
    /// `slopes[i] ↔ normal_form[matching[i]]`.
    pub matching: Vec<usize>,
    /// Largest matched distance over `max_j |r_j|`.
    pub max_rel_mismatch: f64,
    pub kernel: KernelReport,
    /// Two tracked slopes came within `1e-3·max|r|` of each other.
    pub collision: bool,
    pub verdict: StabilityVerdict,
    pub max_re_slope: f64,
}

/// Compare spectral slopes at the origin against the normal-form ratios.
pub fn slope_estimate(
    cp: &ConstrainedPoint,
    model: &PotentialModel,
    settings: &Settings,
) -> Result<SpectralSlopeReport> {
    let mu_list = &settings.hill_mu_list;
    if mu_list.is_empty() {
        return Err(Error::Config("hill_mu_list is empty".into()));
    }
    if mu_list.iter().any(|&m| m == 0.0 || !m.is_finite()) {
        return Err(Error::Config(
            "slope estimation needs finite non-zero μ values".into(),
        ));
    }
    let pt = &cp.point;
    let lp = pt.to_linear();
    let wave = profile(pt, model, settings.hill_modes, Some(settings.well_index))?;
    let mu_max = MU_FRACTION * 2.0 * PI / wave.period;
    if let Some(&bad) = mu_list.iter().find(|m| m.abs() > mu_max) {
        return Err(Error::Config(format!(
            "|μ| = {bad} exceeds {mu_max:.4e} = 0.05·2π/T*"
        )));
    }

    let jet = action_jet(pt, model, settings)?;
    let br = compute_brackets(&jet, pt);
    let roots = solve_pencil(&assemble_whitham_pencil(&jet, &br, pt)?)?;

    let kernel = kernel_report(&wave, &lp, model)?;
    let mut order: Vec<usize> = (0..mu_list.len()).collect();
    order.sort_by(|&a, &b| mu_list[a].abs().total_cmp(&mu_list[b].abs()));
    let sorted_mu: Vec<f64> = order.iter().map(|&i| mu_list[i]).collect();
    let curves = near_origin_curves(&wave, &lp, model, &sorted_mu)?;

    let ratios: Vec<[Complex64; 4]> = curves
        .iter()
        .map(|c| c.eigenvalues.map(|l| l / c.mu))
        .collect();
    let slopes = fit_slopes(&curves).expect("μ list is non-empty and zero-free");
    let scale = roots.max_modulus();
    let (matching, dist) = match_multisets(&slopes, &roots.ratios);
    let collision = ratios
        .iter()
        .any(|r| (0..4).any(|a| (a + 1..4).any(|b| (r[a] - r[b]).norm() < 1e-3 * scale)));
    let max_re_slope = slopes.iter().map(|s| s.re.abs()).fold(0.0, f64::max);
    Ok(SpectralSlopeReport {
        modes: wave.samples.len(),
        period: wave.period,
        mu_values: sorted_mu,
        branches: curves.iter().map(|c| c.eigenvalues).collect(),
        single_mu_slopes: ratios[0],
        slopes,
        normal_form: roots.ratios,
        matching,
        max_rel_mismatch: dist / scale,
        kernel,
        collision,
        verdict: grade(max_re_slope, VERDICT_REL * scale),
        max_re_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{ProfileSample, RootBracket};

    fn constant_profile(n: usize, kappa: f64) -> WaveProfile {
        let period = 2.0 * PI;
        WaveProfile {
            period,
            kappa,
            roots: RootBracket {
                r_minus: 1.0,
                r_plus: 1.0,
                dp_minus: 0.0,
                dp_plus: 0.0,
            },
            samples: (0..n)
                .map(|i| ProfileSample {
                    y: period * i as f64 / n as f64,
                    a: 1.0,
                    s_y: kappa,
                })
                .collect(),
        }
    }

    #[test]
    fn constant_coefficients_diagonalize_by_mode() {
        let (n, kappa) = (64, 0.3);
        let lp = LinearPoint::new(1.0, kappa, 0.7, 1.0);
        let model = PotentialModel::cubic();
        let op = build_operator(&constant_profile(n, kappa), &lp, &model, 0.0).unwrap();
        let m = 3.0;
        let wave: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, m * j as f64 * 2.0 * PI / n as f64))
            .collect();
        // Symbol: K = 2iκm, L₋ = −ω + m² + κ² − ζ, L₊ = L₋ − 2ζ.
        let l_minus = -lp.omega + m * m + kappa * kappa - lp.zeta;
        let l_plus = l_minus - 2.0 * lp.zeta;
        let kk = Complex64::new(0.0, 2.0 * kappa * m);
        for j in 0..n {
            let top: Complex64 = (0..n).map(|l| op.matrix[(j, l)] * wave[l]).sum();
            let bottom: Complex64 = (0..n).map(|l| op.matrix[(j + n, l)] * wave[l]).sum();
            assert!((top - kk * wave[j]).norm() < 1e-12);
            assert!((bottom - l_plus * wave[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_must_be_a_power_of_two() {
        let lp = LinearPoint::new(1.0, 0.3, 0.7, 1.0);
        let err = build_operator(
            &constant_profile(48, 0.3),
            &lp,
            &PotentialModel::cubic(),
            0.0,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn zero_mu_operator_is_real() {
        let lp = LinearPoint::new(1.0, 0.3, 0.7, 1.0);
        let op = build_operator(
            &constant_profile(64, 0.3),
            &lp,
            &PotentialModel::cubic(),
            0.0,
        )
        .unwrap();
        let scale = op.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(op.matrix.iter().all(|z| z.im.abs() < 1e-14 * scale));
    }
}
