//! Lyapunov exponents of the geometric cocycle along Brownian paths.
//!
//! Along a path with deck word w = l₁⋯l_m the fiber over the start is carried
//! to the fiber over the endpoint by ρ(w)⁻¹ = ρ(l_m)⁻¹⋯ρ(l₁)⁻¹, so the frame is
//! left-multiplied by ρ(l_i)⁻¹ in path order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{sample_trajectory_marked, PathConfig, TrajectorySummary};
use crate::cocycle::{cocycle_norm_log, exterior_power_rep, transport, Representation};
use crate::error::{Error, Result};
use crate::geometry::SurfaceModel;
use crate::linalg::{self, CMat};
use crate::rng::stream;
use crate::stats::{batch_estimate, batch_means, from_batches, Estimate};

/// Discard fraction above which a warning is attached.
pub const DISCARD_WARN: f64 = 0.01;
/// Discard fraction above which the estimate is refused.
pub const DISCARD_FAIL: f64 = 0.10;
const DEFLATION_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub path: PathConfig,
    pub n_paths: usize,
    pub n_batches: usize,
    /// Fraction of the horizon discarded before accumulating.
    pub burn_in: f64,
    pub renorm_interval: usize,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        self.path.validate()?;
        if self.n_paths == 0 {
            return Err(Error::Invalid("n_paths must be positive".into()));
        }
        if self.n_batches < 2 || self.n_batches > self.n_paths {
            return Err(Error::Invalid("n_batches must lie in [2, n_paths]".into()));
        }
        if !(0.0..0.5).contains(&self.burn_in) {
            return Err(Error::Invalid("burn_in must lie in [0, 0.5)".into()));
        }
        if self.renorm_interval == 0 {
            return Err(Error::Invalid("renorm_interval must be positive".into()));
        }
        if self.path.horizon <= 0.0 {
            return Err(Error::Invalid("horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn burn_in_time(&self) -> f64 {
        self.burn_in * self.path.horizon
    }

    /// Length of the accumulation window, T − T₀.
    pub fn window(&self) -> f64 {
        self.path.horizon - self.burn_in_time()
    }
}

/// Paths from the basepoint, one RNG stream per path index. Cusp-trapped paths
/// are returned as `None`.
pub(crate) struct PathBatch {
    pub paths: Vec<Option<TrajectorySummary>>,
    pub discarded: usize,
    pub warning: Option<String>,
}

pub(crate) fn run_paths(surface: &SurfaceModel, cfg: &EstimatorConfig, marks: &[f64]) -> Result<PathBatch> {
    cfg.validate()?;
    let results: Vec<Result<Option<TrajectorySummary>>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.path.rng_seed, i as u64);
            match sample_trajectory_marked(surface, surface.basepoint, &cfg.path, &mut rng, marks) {
                Ok(t) => Ok(Some(t)),
                Err(Error::CuspTrap { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let paths = results.into_iter().collect::<Result<Vec<_>>>()?;
    let discarded = paths.iter().filter(|p| p.is_none()).count();
    let frac = discarded as f64 / cfg.n_paths as f64;
    if frac > DISCARD_FAIL || discarded == cfg.n_paths {
        return Err(Error::Discards {
            discarded,
            total: cfg.n_paths,
        });
    }
    let warning = (frac > DISCARD_WARN).then(|| format!("{discarded} of {} paths discarded in cusps", cfg.n_paths));
    Ok(PathBatch {
        paths,
        discarded,
        warning,
    })
}

/// Top exponent with its batch-means interval.
#[derive(Clone, Debug, Serialize)]
pub struct TopEstimate {
    pub lambda1: f64,
    pub ci: f64,
    pub n_batches: usize,
    pub discarded_trajectories: usize,
    pub warning: Option<String>,
    /// Per-path values, in path order with discards skipped.
    #[serde(skip)]
    pub per_path: Vec<f64>,
}

impl TopEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.lambda1,
            ci: self.ci,
            n_batches: self.n_batches,
        }
    }
}

/// λ₁ as the mean of log‖transport‖/(T − T₀) over the post-burn-in segment of
/// each path.
pub fn estimate_top(rep: &Representation, surface: &SurfaceModel, cfg: &EstimatorConfig) -> Result<TopEstimate> {
    check_surface(rep, surface)?;
    let t0 = cfg.burn_in_time();
    let batch = run_paths(surface, cfg, &[t0])?;
    let window = cfg.window();
    let per_path = batch
        .paths
        .par_iter()
        .flatten()
        .map(|tr| {
            let start = tr.marks[0].0;
            let seg = tr.word.slice(start, tr.word.len()).inverse();
            Ok(cocycle_norm_log(&transport(rep, &seg)?) / window)
        })
        .collect::<Result<Vec<f64>>>()?;
    let est = batch_estimate(&per_path, cfg.n_batches);
    Ok(TopEstimate {
        lambda1: est.mean,
        ci: est.ci,
        n_batches: est.n_batches,
        discarded_trajectories: batch.discarded,
        warning: batch.warning,
        per_path,
    })
}

/// Orthonormal frame carried along a path, with accumulated log |r_ii|.
#[derive(Clone, Debug)]
pub struct FrameState {
    pub frame: CMat,
    pub log_diag: Vec<f64>,
    pub steps_since_qr: usize,
}

impl FrameState {
    pub fn new(n: usize) -> Self {
        Self {
            frame: CMat::identity(n, n),
            log_diag: vec![0.0; n],
            steps_since_qr: 0,
        }
    }

    pub fn apply(&mut self, m: &CMat) {
        self.frame = m * &self.frame;
        self.steps_since_qr += 1;
    }

    pub fn renormalize(&mut self, step: usize) -> Result<()> {
        let (q, r) = linalg::qr_positive(&self.frame);
        for (acc, &x) in self.log_diag.iter_mut().zip(&r) {
            if !(x > DEFLATION_FLOOR) || !x.is_finite() {
                return Err(Error::Deflation { step });
            }
            *acc += x.ln();
        }
        self.frame = q;
        self.steps_since_qr = 0;
        Ok(())
    }
}

/// Per-path Lyapunov vector (unsorted, in frame column order).
fn path_spectrum(rep: &Representation, tr: &TrajectorySummary, burn_idx: usize, cfg: &EstimatorConfig) -> Result<Vec<f64>> {
    let mut st = FrameState::new(rep.n);
    for (i, &l) in tr.word.letters().iter().enumerate() {
        if i == burn_idx {
            st.renormalize(i)?;
            st.log_diag.iter_mut().for_each(|x| *x = 0.0);
        }
        st.apply(rep.letter_matrix(l.inverse()));
        if st.steps_since_qr >= cfg.renorm_interval {
            st.renormalize(i)?;
        }
    }
    if burn_idx >= tr.word.len() {
        // nothing crossed after burn-in: zero growth
        return Ok(vec![0.0; rep.n]);
    }
    st.renormalize(tr.word.len())?;
    let w = cfg.window();
    Ok(st.log_diag.iter().map(|x| x / w).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEstimate {
    /// Non-increasing.
    pub lambdas: Vec<f64>,
    pub ci_half_widths: Vec<f64>,
    pub total_time: f64,
    pub n_batches: usize,
    pub discarded_trajectories: usize,
    pub warning: Option<String>,
    /// batch_means[b][i]: batch b mean of exponent i (sorted order).
    #[serde(skip)]
    pub batch_means: Vec<Vec<f64>>,
}

impl SpectrumEstimate {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Σ_{i∈idx} λ_i with a paired batch interval.
    pub fn combination(&self, idx: &[usize]) -> Estimate {
        let b: Vec<f64> = self
            .batch_means
            .iter()
            .map(|row| idx.iter().map(|&i| row[i]).sum())
            .collect();
        from_batches(&b)
    }

    pub fn top_sum(&self, k: usize) -> Estimate {
        self.combination(&(0..k).collect::<Vec<_>>())
    }
}

pub fn estimate_spectrum(
    rep: &Representation,
    surface: &SurfaceModel,
    cfg: &EstimatorConfig,
) -> Result<SpectrumEstimate> {
    check_surface(rep, surface)?;
    let batch = run_paths(surface, cfg, &[cfg.burn_in_time()])?;
    let per_path = batch
        .paths
        .par_iter()
        .flatten()
        .map(|tr| path_spectrum(rep, tr, tr.marks[0].0, cfg))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let n = rep.n;
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|i| batch_means(&per_path.iter().map(|v| v[i]).collect::<Vec<_>>(), cfg.n_batches))
        .collect();
    let n_b = columns[0].len();
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n_b as f64).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
    let batch_rows: Vec<Vec<f64>> = (0..n_b).map(|b| order.iter().map(|&i| columns[i][b]).collect()).collect();
    let ests: Vec<Estimate> = order.iter().map(|&i| from_batches(&columns[i])).collect();
    Ok(SpectrumEstimate {
        lambdas: ests.iter().map(|e| e.mean).collect(),
        ci_half_widths: ests.iter().map(|e| e.ci).collect(),
        total_time: cfg.path.horizon,
        n_batches: n_b,
        discarded_trajectories: batch.discarded,
        warning: batch.warning,
        batch_means: batch_rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub ci: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryCheck {
    /// max_i |λ_i + λ_{n+1−i}|
    pub residual: f64,
    pub pairs: Vec<PairResidual>,
    pub within_ci: bool,
}

/// Pairing λ_i with λ_{n+1−i} (1-based). Each pair gets its own paired batch
/// interval; a 1e-12 floor absorbs rounding when both are exactly zero.
pub fn symmetry_residual(est: &SpectrumEstimate) -> SymmetryCheck {
    let n = est.dim();
    let mut pairs = Vec::new();
    for i in 0..n.div_ceil(2) {
        let j = n - 1 - i;
        let idx = if i == j { vec![i, i] } else { vec![i, j] };
        let e = est.combination(&idx);
        pairs.push(PairResidual {
            i,
            j,
            value: e.mean,
            ci: e.ci,
        });
    }
    let residual = pairs.iter().fold(0.0f64, |a, p| a.max(p.value.abs()));
    let within_ci = pairs.iter().all(|p| p.value.abs() <= p.ci + 1e-12);
    SymmetryCheck {
        residual,
        pairs,
        within_ci,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExteriorCheck {
    pub k: usize,
    pub top_of_power: Estimate,
    pub sum_of_top: Estimate,
    pub discrepancy: f64,
    pub joint_ci: f64,
}

impl ExteriorCheck {
    pub fn within_ci(&self) -> bool {
        self.discrepancy <= self.joint_ci + 1e-12
    }
}

/// Compares λ₁(Λᵏρ) against λ₁ + ⋯ + λ_k(ρ) on the same paths. Intervals are
/// combined in quadrature.
pub fn exterior_consistency(
    rep: &Representation,
    surface: &SurfaceModel,
    cfg: &EstimatorConfig,
    k: usize,
) -> Result<ExteriorCheck> {
    let pow = exterior_power_rep(rep, k)?;
    let top = estimate_top(&pow, surface, cfg)?.estimate();
    let spec = estimate_spectrum(rep, surface, cfg)?;
    let sum = spec.top_sum(k);
    Ok(ExteriorCheck {
        k,
        discrepancy: (top.mean - sum.mean).abs(),
        joint_ci: top.ci.hypot(sum.ci),
        top_of_power: top,
        sum_of_top: sum,
    })
}

fn check_surface(rep: &Representation, surface: &SurfaceModel) -> Result<()> {
    if rep.n_generators() != surface.n_generators() {
        return Err(Error::Invalid(format!(
            "surface has {} generators, representation {}",
            surface.n_generators(),
            rep.n_generators()
        )));
    }
    Ok(())
}
