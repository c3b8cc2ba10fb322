//! Empirical harmonic fiber measures, the drift estimator of the exponent,
//! degree reports and Poisson-kernel checks on the complex ball.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{sample_trajectory, sample_trajectory_from, PathConfig, TrajectorySummary};
use crate::cocycle::{exterior_power_rep, transport, Representation};
use crate::error::{Error, Result};
use crate::geometry::{HPoint, SurfaceModel};
use crate::grassmann::{divisor_distance, DivisorForm, PluckerVector};
use crate::linalg::{self, c, CVec};
use crate::lyapunov::{estimate_spectrum, run_paths, EstimatorConfig};
use crate::rng::{derive_seed, stream};
use crate::stats::{batch_estimate, Estimate};

/// Energy-distance level above which the two nested horizons are flagged.
pub const DISCREPANCY_THRESHOLD: f64 = 0.02;
/// Support gaps at or below this count as meeting the divisor.
pub const GAP_ZERO: f64 = 1e-2;
/// Support gaps at or above this count as clearly avoiding it.
pub const GAP_POSITIVE: f64 = 5e-2;
/// ε grid reported by [`support_divisor_gap`].
pub const GAP_EPS_GRID: [f64; 5] = [1e-3, 1e-2, 5e-2, 1e-1, 2e-1];

/// Fixed unit vector in general position for dimension `dim`.
pub fn generic_vector(dim: usize) -> CVec {
    let mut rng = stream(0x7630_0000, dim as u64);
    let v = CVec::from_fn(dim, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Chordal distance √(1 − |⟨p,q⟩|²) between unit representatives.
pub fn chordal(p: &CVec, q: &CVec) -> f64 {
    (1.0 - p.dotc(q).norm_sqr()).max(0.0).sqrt()
}

#[derive(Clone, Debug)]
pub struct FiberSample {
    /// Normalized Λᵏρ(g_T)·v₀, one per kept path.
    pub points: Vec<CVec>,
    /// The same at the nested horizon T/2.
    pub half_points: Vec<CVec>,
    pub weights: Vec<f64>,
    pub horizon: f64,
    pub n_paths: usize,
    pub discarded: usize,
    pub start: HPoint,
    pub k: usize,
    /// Energy distance between the T/2 and T samples.
    pub discrepancy: f64,
    pub converged: bool,
    /// Reduced positions at T/2.
    pub bases: Vec<HPoint>,
    /// Normalized Λᵏρ(w_{T/2..T})·v₀: a draw from the fiber measure over the
    /// corresponding base.
    pub moving: Vec<CVec>,
    pub v0: CVec,
    pub warning: Option<String>,
}

impl FiberSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.v0.len()
    }
}

pub fn sample_fiber_measure(
    rep: &Representation,
    surface: &SurfaceModel,
    cfg: &EstimatorConfig,
    k: usize,
    v0: Option<&CVec>,
) -> Result<FiberSample> {
    sample_fiber_measure_from(rep, surface, cfg, k, v0, surface.basepoint)
}

/// As [`sample_fiber_measure`] for paths started at an arbitrary point of the
/// plane; the start's deck word prefixes every path word.
pub fn sample_fiber_measure_from(
    rep: &Representation,
    surface: &SurfaceModel,
    cfg: &EstimatorConfig,
    k: usize,
    v0: Option<&CVec>,
    start: HPoint,
) -> Result<FiberSample> {
    cfg.validate()?;
    let pow = if k == 1 { rep.clone() } else { exterior_power_rep(rep, k)? };
    if pow.n_generators() != surface.n_generators() {
        return Err(Error::Invalid("surface and representation generator counts differ".into()));
    }
    let v0 = match v0 {
        Some(v) => {
            if v.len() != pow.n {
                return Err(Error::Invalid(format!("v0 has length {}, expected {}", v.len(), pow.n)));
            }
            let n = v.norm();
            if !(n > 0.0) {
                return Err(Error::Invalid("v0 must be nonzero".into()));
            }
            v / c(n, 0.0)
        }
        None => generic_vector(pow.n),
    };
    let half = 0.5 * cfg.path.horizon;
    let (paths, discarded, warning) = if start == surface.basepoint {
        let b = run_paths(surface, cfg, &[half])?;
        (b.paths, b.discarded, b.warning)
    } else {
        let paths = run_from(surface, cfg, start, half)?;
        let discarded = paths.iter().filter(|p| p.is_none()).count();
        (paths, discarded, None)
    };
    let apply = |w: &crate::geometry::Word| -> Result<CVec> {
        let p = transport(&pow, w)?;
        let v = &p.unit_matrix * &v0;
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::Degenerate("transported v0 vanished".into()));
        }
        Ok(v / c(n, 0.0))
    };
    let rows = paths
        .par_iter()
        .flatten()
        .map(|tr| {
            let (m, base) = tr.marks[0];
            let full = apply(&tr.word)?;
            let halfp = apply(&tr.word.slice(0, m))?;
            let moving = apply(&tr.word.slice(m, tr.word.len()))?;
            Ok((full, halfp, moving, base))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(rows.len());
    let mut half_points = Vec::with_capacity(rows.len());
    let mut moving = Vec::with_capacity(rows.len());
    let mut bases = Vec::with_capacity(rows.len());
    for (a, b, m, base) in rows {
        points.push(a);
        half_points.push(b);
        moving.push(m);
        bases.push(base);
    }
    let discrepancy = energy_distance(&half_points, &points);
    let n = points.len();
    Ok(FiberSample {
        weights: vec![1.0 / n as f64; n],
        points,
        half_points,
        horizon: cfg.path.horizon,
        n_paths: cfg.n_paths,
        discarded,
        start,
        k,
        converged: discrepancy <= DISCREPANCY_THRESHOLD,
        discrepancy,
        bases,
        moving,
        v0,
        warning,
    })
}

fn run_from(
    surface: &SurfaceModel,
    cfg: &EstimatorConfig,
    start: HPoint,
    half: f64,
) -> Result<Vec<Option<TrajectorySummary>>> {
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.path.rng_seed, i as u64);
            let first = PathConfig {
                horizon: half,
                ..cfg.path.clone()
            };
            let a = match sample_trajectory_from(surface, start, &first, &mut rng) {
                Ok(t) => t,
                Err(Error::CuspTrap { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let second = PathConfig {
                horizon: cfg.path.horizon - half,
                ..cfg.path.clone()
            };
            let b = match sample_trajectory(surface, a.endpoint, &second, &mut rng) {
                Ok(t) => t,
                Err(Error::CuspTrap { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let m = a.word.len();
            let mut tr = b;
            tr.marks = vec![(m, a.endpoint)];
            tr.word = a.word.concat(&tr.word);
            tr.start = start;
            Ok(Some(tr))
        })
        .collect()
}

/// Energy distance 2E d(X,Y) − E d(X,X') − E d(Y,Y') in the chordal metric.
pub fn energy_distance(a: &[CVec], b: &[CVec]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mean = |x: &[CVec], y: &[CVec]| -> f64 {
        // row sums in parallel, reduced in a fixed order
        let rows: Vec<f64> = x.par_iter().map(|p| y.iter().map(|q| chordal(p, q)).sum::<f64>()).collect();
        rows.iter().sum::<f64>() / (x.len() * y.len()) as f64
    };
    (2.0 * mean(a, b) - mean(a, a) - mean(b, b)).max(0.0)
}

/// Largest fraction of the sample inside a chordal ball of radius `r` centred
/// at a sample point.
pub fn max_cluster_mass(points: &[CVec], r: f64) -> f64 {
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    points
        .par_iter()
        .map(|p| points.iter().filter(|q| chordal(p, q) < r).count())
        .max()
        .unwrap_or(0) as f64
        / n as f64
}

/// Fubini–Study mass of a chordal ball of radius r in ℂP^{N−1}.
pub fn cluster_baseline(dim: usize, r: f64) -> f64 {
    1.0 - (1.0 - r * r).powi(dim as i32 - 1)
}

/// Mean of 2|Im(a·b̄)| over points (a, b) of ℂP¹: zero exactly on ℝP¹.
pub fn real_line_statistic(points: &[CVec]) -> f64 {
    points
        .iter()
        .map(|p| 2.0 * (p[0] * p[1].conj()).im.abs() / p.norm_squared())
        .sum::<f64>()
        / points.len() as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub min_distance: f64,
    /// (ε, fraction of the sample with distance < ε)
    pub fraction_below: Vec<(f64, f64)>,
    /// Counts over 20 equal bins of [0, 1].
    pub histogram: Vec<usize>,
    pub distances: Vec<f64>,
}

pub fn support_divisor_gap(sample: &FiberSample, d: &DivisorForm) -> Result<GapReport> {
    if sample.is_empty() {
        return Err(Error::Invalid("empty fiber sample".into()));
    }
    if d.0.len() != sample.dim() {
        return Err(Error::Invalid(format!(
            "divisor has {} coordinates, sample {}",
            d.0.len(),
            sample.dim()
        )));
    }
    let distances: Vec<f64> = sample
        .points
        .iter()
        .map(|p| divisor_distance(&PluckerVector(p.clone()), d))
        .collect();
    let n = distances.len() as f64;
    let mut histogram = vec![0usize; 20];
    for &x in &distances {
        histogram[((x * 20.0) as usize).min(19)] += 1;
    }
    Ok(GapReport {
        min_distance: distances.iter().copied().fold(f64::INFINITY, f64::min),
        fraction_below: GAP_EPS_GRID
            .iter()
            .map(|&e| (e, distances.iter().filter(|&&x| x < e).count() as f64 / n))
            .collect(),
        histogram,
        distances,
    })
}

/// Short-time drift of log‖·‖ at sampled fiber points: for each probe a fresh
/// path of length `probe_dt` from a sampled base carries the paired fiber
/// point by the geometric transport.
pub fn lambda_from_measure(
    rep: &Representation,
    surface: &SurfaceModel,
    sample: &FiberSample,
    path: &PathConfig,
    probe_dt: f64,
    n_probes: usize,
    n_batches: usize,
) -> Result<Estimate> {
    if !sample.converged {
        return Err(Error::Invalid(format!(
            "fiber sample did not converge (discrepancy {:.4})",
            sample.discrepancy
        )));
    }
    if sample.is_empty() || n_probes < n_batches || n_batches < 2 {
        return Err(Error::Invalid("need a sample and n_probes ≥ n_batches ≥ 2".into()));
    }
    let pow = if sample.k == 1 { rep.clone() } else { exterior_power_rep(rep, sample.k)? };
    let probe = PathConfig {
        horizon: probe_dt,
        ..path.clone()
    };
    probe.validate()?;
    let seed = derive_seed(path.rng_seed, 0x9be);
    let values = (0..n_probes)
        .into_par_iter()
        .map(|j| {
            let idx = j % sample.len();
            let mut rng = stream(seed, j as u64);
            let tr = sample_trajectory(surface, sample.bases[idx], &probe, &mut rng)?;
            let p = transport(&pow, &tr.word.inverse())?;
            let v = &p.unit_matrix * &sample.moving[idx];
            Ok((v.norm().ln() + p.log_scale) / probe_dt)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(batch_estimate(&values, n_batches))
}

/// A degree written as a rational with an optional `/pi` suffix, e.g.
/// `1/4/pi` for 1/(4π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Degree {
    text: String,
    value: f64,
}

impl Degree {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl FromStr for Degree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (body, over_pi) = match t.strip_suffix("/pi") {
            Some(b) => (b, true),
            None => (t, false),
        };
        let bad = || Error::Config(format!("cannot parse degree {s:?}"));
        let value = match body.split_once('/') {
            Some((p, q)) => {
                let p: i64 = p.trim().parse().map_err(|_| bad())?;
                let q: i64 = q.trim().parse().map_err(|_| bad())?;
                if q == 0 {
                    return Err(bad());
                }
                p as f64 / q as f64
            }
            None => body.trim().parse::<f64>().map_err(|_| bad())?,
        };
        if !value.is_finite() {
            return Err(bad());
        }
        Ok(Degree {
            text: t.to_string(),
            value: if over_pi { value / PI } else { value },
        })
    }
}

impl TryFrom<String> for Degree {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Degree> for String {
    fn from(d: Degree) -> String {
        d.text
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// |δ| ≤ CI
    EqualityPlausible,
    /// δ > 3·CI
    StrictInequality,
    Inconclusive,
}

/// Intervals narrower than this are rounding, not statistics. Unitary
/// presets produce λ-sums and intervals near 1e-17.
pub const VERDICT_CI_FLOOR: f64 = 1e-9;

impl Verdict {
    pub fn classify(delta: f64, ci: f64) -> Self {
        let ci = ci.max(VERDICT_CI_FLOOR);
        if delta.abs() <= ci {
            Verdict::EqualityPlausible
        } else if delta > 3.0 * ci {
            Verdict::StrictInequality
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::EqualityPlausible => "equality-plausible",
            Verdict::StrictInequality => "strict-inequality",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeReport {
    pub k: usize,
    pub lambda_sum: f64,
    pub lambda_sum_ci: f64,
    pub degree: Degree,
    pub pi_degree: f64,
    pub delta: f64,
    pub support_gap: f64,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

impl DegreeReport {
    /// λ₁ + ⋯ + λ_k − π·deg, the inequality margin.
    pub fn margin(&self) -> f64 {
        self.delta
    }
}

/// λ₁+⋯+λ_k against π·deg(F) together with the support gap of the sampled
/// fiber measure from the divisor of F. The two are reported independently
/// and cross-checked.
pub fn degree_report(
    rep: &Representation,
    surface: &SurfaceModel,
    cfg: &EstimatorConfig,
    divisor: &DivisorForm,
    degree: &Degree,
    k: usize,
    v0: Option<&CVec>,
) -> Result<DegreeReport> {
    if divisor.0.len() != linalg::binomial(rep.n, k) {
        return Err(Error::Invalid("divisor dimension does not match C(n, k)".into()));
    }
    let spec = estimate_spectrum(rep, surface, cfg)?;
    let sum = spec.top_sum(k);
    let fiber_cfg = EstimatorConfig {
        path: PathConfig {
            rng_seed: derive_seed(cfg.path.rng_seed, 0xf1b),
            ..cfg.path.clone()
        },
        ..cfg.clone()
    };
    let sample = sample_fiber_measure(rep, surface, &fiber_cfg, k, v0)?;
    let gap = support_divisor_gap(&sample, divisor)?;
    let pi_degree = PI * degree.value();
    let delta = sum.mean - pi_degree;
    let verdict = Verdict::classify(delta, sum.ci);
    let mut warnings = Vec::new();
    if verdict == Verdict::EqualityPlausible && gap.min_distance <= GAP_ZERO {
        warnings.push(format!(
            "inconsistent: δ ≈ 0 but the support meets the divisor (gap {:.3e})",
            gap.min_distance
        ));
    }
    if verdict == Verdict::StrictInequality && gap.min_distance >= GAP_POSITIVE {
        warnings.push(format!(
            "inconsistent: δ > 0 but the support avoids the divisor (gap {:.3e})",
            gap.min_distance
        ));
    }
    if delta < -sum.ci {
        warnings.push(format!("λ-sum falls below π·deg by {:.3e}, beyond the CI", -delta));
    }
    if !sample.converged {
        warnings.push(format!("fiber sample not converged (discrepancy {:.4})", sample.discrepancy));
    }
    warnings.extend(spec.warning);
    Ok(DegreeReport {
        k,
        lambda_sum: sum.mean,
        lambda_sum_ci: sum.ci,
        degree: degree.clone(),
        pi_degree,
        delta,
        support_gap: gap.min_distance,
        verdict,
        warnings,
    })
}

/// Chi-square statistic of base positions over `n_sectors` equal-angle sectors
/// around the basepoint (equal-area cells when the polygon is regular and
/// centred there), with its degrees of freedom.
pub fn sector_chi_square(surface: &SurfaceModel, bases: &[HPoint], n_sectors: usize) -> (f64, usize) {
    let b = surface.basepoint.z();
    let mut counts = vec![0usize; n_sectors];
    for p in bases {
        let w = (p.z() - b) / (p.z() - b.conj());
        let ang = (w.arg() + PI / n_sectors as f64).rem_euclid(2.0 * PI);
        counts[((ang / (2.0 * PI) * n_sectors as f64) as usize).min(n_sectors - 1)] += 1;
    }
    let expect = bases.len() as f64 / n_sectors as f64;
    let stat = counts.iter().map(|&o| (o as f64 - expect).powi(2) / expect).sum();
    (stat, n_sectors - 1)
}

fn check_ball(z: &[Complex64], u: &[Complex64]) -> Result<()> {
    if z.is_empty() || z.len() != u.len() {
        return Err(Error::Invalid("z and u must have the same positive dimension".into()));
    }
    let zn: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    if !(zn < 1.0) {
        return Err(Error::Domain(format!("|z|² = {zn} is not inside the ball")));
    }
    let un: f64 = u.iter().map(|x| x.norm_sqr()).sum();
    if (un - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("|u|² = {un} is not on the sphere")));
    }
    Ok(())
}

fn poisson_unchecked(z: &[Complex64], u: &[Complex64]) -> f64 {
    let n = z.len() as i32;
    let zn: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let dot: Complex64 = z.iter().zip(u).map(|(a, b)| a * b.conj()).sum();
    (1.0 - zn).powi(n) / (Complex64::new(1.0, 0.0) - dot).norm_sqr().powi(n)
}

/// P(z,u) = (1−|z|²)ⁿ / |1 − ⟨z,u⟩|^{2n} on the unit ball of ℂⁿ.
pub fn poisson_kernel(z: &[Complex64], u: &[Complex64]) -> Result<f64> {
    check_ball(z, u)?;
    Ok(poisson_unchecked(z, u))
}

/// Monte Carlo mean and standard error of ∫ P(z,u) dσ(u) over the sphere.
pub fn poisson_normalization(z: &[Complex64], n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    let n = z.len();
    let mut rng = stream(seed, 0);
    let mut vals = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let g: Vec<Complex64> = (0..n).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let norm = g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let u: Vec<Complex64> = g.iter().map(|x| x / norm).collect();
        vals.push(poisson_kernel(z, &u)?);
    }
    Ok(crate::stats::mean_stderr(&vals))
}

#[derive(Clone, Debug, Serialize)]
pub struct PluriResidual {
    /// |(1−|z|²) Σ (δ_jk − z_j z̄_k) ∂_j∂̄_k P|, the invariant Laplacian up to a factor 4.
    pub laplace_beltrami: f64,
    /// Frobenius norm of the complex Hessian ∂_j∂̄_k P.
    pub levi_form_norm: f64,
    pub accuracy_warning: Option<String>,
}

/// Central differences in the real coordinates of ℂⁿ.
pub fn pluriharmonicity_residual(z: &[Complex64], u: &[Complex64], fd_step: f64) -> Result<PluriResidual> {
    check_ball(z, u)?;
    if !(fd_step > 0.0 && fd_step <= 1e-2) {
        return Err(Error::Invalid("fd_step must lie in (0, 1e-2]".into()));
    }
    let n = z.len();
    let zn: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let dot: Complex64 = z.iter().zip(u).map(|(a, b)| a * b.conj()).sum();
    let scale = (1.0 - zn.sqrt()).min((Complex64::new(1.0, 0.0) - dot).norm());
    let accuracy_warning = (fd_step > 0.1 * scale).then(|| {
        format!("fd_step {fd_step} is large against the curvature scale {scale:.3e}")
    });
    let h = fd_step;
    let f = |dx: &[(usize, f64)]| -> f64 {
        let mut w = z.to_vec();
        for &(a, s) in dx {
            if a % 2 == 0 {
                w[a / 2].re += s;
            } else {
                w[a / 2].im += s;
            }
        }
        poisson_unchecked(&w, u)
    };
    let f0 = f(&[]);
    let d2 = |a: usize, b: usize| -> f64 {
        if a == b {
            (f(&[(a, h)]) - 2.0 * f0 + f(&[(a, -h)])) / (h * h)
        } else {
            (f(&[(a, h), (b, h)]) - f(&[(a, h), (b, -h)]) - f(&[(a, -h), (b, h)]) + f(&[(a, -h), (b, -h)]))
                / (4.0 * h * h)
        }
    };
    let mut lb = Complex64::new(0.0, 0.0);
    let mut levi = 0.0;
    for j in 0..n {
        for k in 0..n {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            let hjk = 0.25 * Complex64::new(d2(xj, xk) + d2(yj, yk), d2(xj, yk) - d2(yj, xk));
            levi += hjk.norm_sqr();
            let delta = if j == k { 1.0 } else { 0.0 };
            lb += (Complex64::new(delta, 0.0) - z[j] * z[k].conj()) * hjk;
        }
    }
    Ok(PluriResidual {
        laplace_beltrami: ((1.0 - zn) * lb).norm(),
        levi_form_norm: levi.sqrt(),
        accuracy_warning,
    })
}
