//! Brownian motion for the generator Δ/2 on the upper half-plane, run inside a
//! fundamental polygon with deck-word bookkeeping.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hyperbolic_distance, HPoint, Location, Mobius, SurfaceModel, Word};
use crate::rng::{normal_pair, stream};
use crate::stats::{batch_estimate, mean_stderr, Estimate};

/// Deepest allowed dt halving inside a cusp.
pub const MAX_CUSP_HALVINGS: u32 = 20;
/// Side crossings allowed within a single step before giving up.
pub const MAX_CROSSINGS_PER_STEP: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    pub horizon: f64,
    pub max_substep_refinements: u32,
    pub rng_seed: u64,
    pub cusp_y_cap: f64,
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Invalid(format!("horizon must be finite and ≥ 0, got {}", self.horizon)));
        }
        if self.horizon > 0.0 && self.horizon < self.dt {
            return Err(Error::Invalid("horizon shorter than one step".into()));
        }
        if !(self.cusp_y_cap > 1.0) {
            return Err(Error::Invalid("cusp_y_cap must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub start: HPoint,
    /// Deck element g_T with γ(T) ∈ g_T·D.
    pub word: Word,
    /// Reduced endpoint, inside the polygon.
    pub endpoint: HPoint,
    pub elapsed: f64,
    pub sup_displacement: f64,
    /// Unreduced endpoint g_T(endpoint), tracked incrementally.
    pub unreduced_endpoint: HPoint,
    pub steps: usize,
    /// Word length and reduced position at each requested mark time.
    pub marks: Vec<(usize, HPoint)>,
}

const GL5: [(f64, f64); 5] = [
    (0.046_910_077_030_668, 0.118_463_442_528_095),
    (0.230_765_344_947_158, 0.239_314_335_249_683),
    (0.5, 0.284_444_444_444_444),
    (0.769_234_655_052_842, 0.239_314_335_249_683),
    (0.953_089_922_969_332, 0.118_463_442_528_095),
];

/// One step: log y is advanced exactly, and the x increment is Gaussian with
/// variance E[∫y² ds | y_0, y_dt], using that log y is a Brownian bridge
/// between the endpoints. Plain y_0·y_dt·dt underestimates the variance by a
/// relative dt/2, which biases speeds by O(dt).
pub fn step(p: HPoint, dt: f64, noise: (f64, f64)) -> HPoint {
    let sq = dt.sqrt();
    let l = sq * noise.1 - 0.5 * dt;
    let y = p.y * l.exp();
    let mean_sq: f64 = GL5
        .iter()
        .map(|&(u, w)| w * (2.0 * l * u + 2.0 * dt * u * (1.0 - u)).exp())
        .sum();
    HPoint {
        x: p.x + p.y * (mean_sq * dt).sqrt() * noise.0,
        y,
    }
}

fn interpolate(p: HPoint, q: HPoint, s: f64) -> HPoint {
    HPoint {
        x: p.x + s * (q.x - p.x),
        y: (p.y.ln() + s * (q.y.ln() - p.y.ln())).exp(),
    }
}

/// Brings the step end `q` back into the polygon. Sides are found by bisection
/// along the interpolated step from `p`; letters are appended to `word` and
/// `deck` is updated.
fn resolve_crossings(
    surface: &SurfaceModel,
    p: HPoint,
    q: HPoint,
    refinements: u32,
    time: f64,
    word: &mut Word,
    deck: &mut Mobius,
) -> Result<HPoint> {
    let mut frame = Mobius::IDENTITY;
    let mut s_lo = 0.0;
    let mut crossings = 0;
    loop {
        let end = frame.apply(q)?;
        if surface.locate(end) == Location::Inside {
            return Ok(end);
        }
        let (mut a, mut b) = (s_lo, 1.0);
        for _ in 0..refinements {
            let mid = 0.5 * (a + b);
            let z = frame.apply(interpolate(p, q, mid))?;
            if surface.locate(z) == Location::Inside {
                a = mid;
            } else {
                b = mid;
            }
        }
        let z = frame.apply(interpolate(p, q, b))?;
        let Location::ExitedThroughSide(j) = surface.locate(z) else {
            return Err(Error::CrossingLocalization { refinements, time });
        };
        let side = &surface.sides[j];
        frame = side.pairing.compose(&frame);
        let letter = side.exit_letter();
        word.push(letter);
        *deck = deck.compose(&surface.letter_mobius(letter));
        s_lo = b;
        crossings += 1;
        if crossings > MAX_CROSSINGS_PER_STEP {
            return Err(Error::CrossingLocalization { refinements, time });
        }
    }
}

pub fn sample_trajectory<R: Rng + ?Sized>(
    surface: &SurfaceModel,
    start: HPoint,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<TrajectorySummary> {
    sample_trajectory_marked(surface, start, cfg, rng, &[])
}

/// As [`sample_trajectory`], also recording the word length and position at
/// each time in `marks` (sorted, within the horizon). Steps are clipped so the
/// marks are hit exactly.
pub fn sample_trajectory_marked<R: Rng + ?Sized>(
    surface: &SurfaceModel,
    start: HPoint,
    cfg: &PathConfig,
    rng: &mut R,
    marks: &[f64],
) -> Result<TrajectorySummary> {
    cfg.validate()?;
    if surface.locate(start) != Location::Inside {
        return Err(Error::Invalid("trajectory must start inside the polygon".into()));
    }
    let has_sides = !surface.sides.is_empty();
    let mut p = start;
    let mut word = Word::new();
    let mut deck = Mobius::IDENTITY;
    let mut t = 0.0;
    let mut sup: f64 = 0.0;
    let mut steps = 0;
    let mut mark_out = Vec::with_capacity(marks.len());
    let mut next_mark = 0;
    let eps = 1e-12 * cfg.horizon.max(1.0);
    while next_mark < marks.len() && marks[next_mark] <= eps {
        mark_out.push((0, p));
        next_mark += 1;
    }
    while t < cfg.horizon - eps {
        let mut h = cfg.dt.min(cfg.horizon - t);
        if next_mark < marks.len() {
            h = h.min(marks[next_mark] - t);
        }
        let height = surface.cusp_height(p);
        if height > cfg.cusp_y_cap {
            let halvings = (2.0 * (height / cfg.cusp_y_cap).log2()).ceil() as u32;
            if halvings > MAX_CUSP_HALVINGS {
                return Err(Error::CuspTrap { time: t, height });
            }
            h = h.min(cfg.dt / f64::from(1u32 << halvings));
        }
        let q = step(p, h, normal_pair(rng));
        p = if has_sides && surface.locate(q) != Location::Inside {
            resolve_crossings(surface, p, q, cfg.max_substep_refinements, t, &mut word, &mut deck)?
        } else {
            q
        };
        t += h;
        steps += 1;
        let unreduced = if has_sides { deck.apply(p)? } else { p };
        sup = sup.max(hyperbolic_distance(start, unreduced));
        while next_mark < marks.len() && marks[next_mark] <= t + eps {
            mark_out.push((word.len(), p));
            next_mark += 1;
        }
    }
    let unreduced_endpoint = if has_sides { deck.apply(p)? } else { p };
    Ok(TrajectorySummary {
        start,
        word,
        endpoint: p,
        elapsed: t,
        sup_displacement: sup,
        unreduced_endpoint,
        steps,
        marks: mark_out,
    })
}

/// Starts from an arbitrary point of the plane: the start is reduced first and
/// its deck word is prefixed to the trajectory's word.
pub fn sample_trajectory_from<R: Rng + ?Sized>(
    surface: &SurfaceModel,
    start: HPoint,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<TrajectorySummary> {
    let (reduced, prefix) = surface.reduce_to_domain(start)?;
    let mut tr = sample_trajectory(surface, reduced, cfg, rng)?;
    tr.word = prefix.concat(&tr.word);
    tr.start = start;
    tr.unreduced_endpoint = surface.word_mobius(&tr.word).apply(tr.endpoint)?;
    Ok(tr)
}

/// A scalar test function with its hyperbolic Laplacian Δf = y²(f_xx + f_yy).
pub trait TestFunction: Sync {
    fn value(&self, p: HPoint) -> f64;
    fn laplacian(&self, p: HPoint) -> f64;
}

pub struct ConstantFn(pub f64);

impl TestFunction for ConstantFn {
    fn value(&self, _: HPoint) -> f64 {
        self.0
    }
    fn laplacian(&self, _: HPoint) -> f64 {
        0.0
    }
}

/// f = x·y, harmonic for the flat (hence the hyperbolic) Laplacian.
pub struct ProductFn;

impl TestFunction for ProductFn {
    fn value(&self, p: HPoint) -> f64 {
        p.x * p.y
    }
    fn laplacian(&self, _: HPoint) -> f64 {
        0.0
    }
}

/// Gaussian bump exp(−|z − c|²/(2w²)) in half-plane coordinates.
pub struct GaussianBump {
    pub center: HPoint,
    pub width: f64,
}

impl TestFunction for GaussianBump {
    fn value(&self, p: HPoint) -> f64 {
        let r2 = (p.x - self.center.x).powi(2) + (p.y - self.center.y).powi(2);
        (-r2 / (2.0 * self.width * self.width)).exp()
    }
    fn laplacian(&self, p: HPoint) -> f64 {
        let w2 = self.width * self.width;
        let r2 = (p.x - self.center.x).powi(2) + (p.y - self.center.y).powi(2);
        // flat Laplacian of the 2D Gaussian: (r²/w⁴ − 2/w²)·f
        p.y * p.y * (r2 / (w2 * w2) - 2.0 / w2) * self.value(p)
    }
}

/// Monte Carlo residual of E f(γ_t) − f(x) − ½E∫Δf, with its standard error.
/// Free motion in the plane; the time integral uses the trapezoid rule.
pub fn dynkin_residual(
    f: &dyn TestFunction,
    start: HPoint,
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(t > 0.0 && dt > 0.0) || n_paths < 2 {
        return Err(Error::Invalid("dynkin_residual needs t, dt > 0 and ≥ 2 paths".into()));
    }
    let f0 = f.value(start);
    let per_path: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut p = start;
            let mut s = 0.0;
            let mut integral = 0.0;
            let mut lap_prev = f.laplacian(p);
            while s < t - 1e-12 {
                let h = dt.min(t - s);
                p = step(p, h, normal_pair(&mut rng));
                let lap = f.laplacian(p);
                integral += 0.5 * h * (lap_prev + lap);
                lap_prev = lap;
                s += h;
            }
            f.value(p) - f0 - 0.5 * integral
        })
        .collect();
    Ok(mean_stderr(&per_path))
}

fn free_path_distance(start: HPoint, cfg: &PathConfig, index: u64) -> (f64, f64) {
    let mut rng = stream(cfg.rng_seed, index);
    let mut p = start;
    let mut t = 0.0;
    let mut sup: f64 = 0.0;
    while t < cfg.horizon - 1e-12 * cfg.horizon.max(1.0) {
        let h = cfg.dt.min(cfg.horizon - t);
        p = step(p, h, normal_pair(&mut rng));
        sup = sup.max(hyperbolic_distance(start, p));
        t += h;
    }
    (hyperbolic_distance(start, p), sup)
}

/// Mean of d(start, γ_T)/T over free paths with a batch-means interval.
pub fn escape_rate(start: HPoint, cfg: &PathConfig, n_paths: usize, n_batches: usize) -> Result<Estimate> {
    cfg.validate()?;
    if cfg.horizon <= 0.0 {
        return Err(Error::Invalid("escape rate needs a positive horizon".into()));
    }
    let rates: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| free_path_distance(start, cfg, i).0 / cfg.horizon)
        .collect();
    Ok(batch_estimate(&rates, n_batches))
}

/// Running maxima sup_{t ≤ t0} d(start, γ_t) over free paths.
pub fn sup_displacements(start: HPoint, cfg: &PathConfig, t0: f64, n_paths: usize) -> Result<Vec<f64>> {
    let cfg = PathConfig {
        horizon: t0,
        ..cfg.clone()
    };
    cfg.validate()?;
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| free_path_distance(start, &cfg, i).1)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailPoint {
    pub r: f64,
    pub probability: f64,
    /// √2·exp(−r²/(4t₀) + C).
    pub envelope: f64,
}

/// Empirical P(sup_{t≤t0} d ≥ r) for each r, with the reference envelope.
pub fn sup_tail(
    start: HPoint,
    cfg: &PathConfig,
    radii: &[f64],
    t0: f64,
    n_paths: usize,
    envelope_const: f64,
) -> Result<Vec<TailPoint>> {
    if radii.iter().any(|&r| r < 0.0) {
        return Err(Error::Invalid("tail radii must be non-negative".into()));
    }
    let sups = sup_displacements(start, cfg, t0, n_paths)?;
    Ok(radii
        .iter()
        .map(|&r| TailPoint {
            r,
            probability: sups.iter().filter(|&&s| s >= r).count() as f64 / n_paths as f64,
            envelope: 2f64.sqrt() * (-r * r / (4.0 * t0) + envelope_const).exp(),
        })
        .collect())
}

/// Least-squares slope of log P against r² over points with positive probability.
pub fn log_tail_slope(points: &[TailPoint]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.probability > 0.0 && p.r > 0.0)
        .map(|p| (p.r * p.r, p.probability.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
