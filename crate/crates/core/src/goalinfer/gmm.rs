//! Gaussian mixtures: EM fitting from k-means++ starts, analytic
//! conditioning, seeded sampling, and BIC model-order selection.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Diagonal floor applied to every fitted covariance.
pub const COV_FLOOR: f64 = 1e-6;
/// Minimum eigenvalue enforced after regularization.
const EIG_FLOOR: f64 = 1e-9;
const LL_GAIN_STOP: f64 = 1e-8;
const MAX_EM_ITERS: usize = 500;

#[derive(Debug, Clone, Error)]
pub enum GmmError {
    #[error("need at least {need} samples for K={k}, d={d}; have {have}")]
    InsufficientSamples {
        have: usize,
        need: usize,
        k: usize,
        d: usize,
    },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

#[derive(Debug, Clone)]
pub struct Component {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// A finite mixture of full-covariance Gaussians.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    components: Vec<Component>,
    dim: usize,
}

impl MixtureModel {
    pub fn new(components: Vec<Component>) -> Result<Self, GmmError> {
        if components.is_empty() {
            return Err(GmmError::BadInput("no components".into()));
        }
        let dim = components[0].mean.len();
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(GmmError::BadInput(format!("weights sum to {sum}")));
        }
        for c in &components {
            if c.weight <= 0.0 {
                return Err(GmmError::BadInput("non-positive component weight".into()));
            }
            if c.mean.len() != dim || c.cov.nrows() != dim || c.cov.ncols() != dim {
                return Err(GmmError::BadInput("component dimension mismatch".into()));
            }
        }
        Ok(Self { components, dim })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean of the heaviest component (ties: first), for deterministic
    /// point estimates.
    pub fn map_point(&self) -> Vec<f64> {
        let mut best = 0;
        for i in 1..self.components.len() {
            if self.components[i].weight > self.components[best].weight {
                best = i;
            }
        }
        self.components[best].mean.iter().copied().collect()
    }

    /// Total log-likelihood of the rows under the mixture.
    pub fn log_likelihood(&self, samples: &[Vec<f64>]) -> f64 {
        let chols: Vec<(f64, Cholesky<f64, nalgebra::Dyn>)> = self
            .components
            .iter()
            .map(|c| {
                let ch = spd_cholesky(&c.cov).expect("model covariance is SPD");
                (c.weight.ln(), ch)
            })
            .collect();
        samples
            .iter()
            .map(|row| {
                let x = DVector::from_column_slice(row);
                let logs: Vec<f64> = self
                    .components
                    .iter()
                    .zip(&chols)
                    .map(|(c, (lw, ch))| lw + log_gauss(&x, &c.mean, ch))
                    .collect();
                log_sum_exp(&logs)
            })
            .sum()
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn log_gauss(x: &DVector<f64>, mean: &DVector<f64>, chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let d = x.len() as f64;
    let diff = x - mean;
    let solved = chol.solve(&diff);
    let quad = diff.dot(&solved);
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Cholesky with an escalating jitter fallback; `None` only for hopeless
/// (non-finite) matrices.
fn spd_cholesky(cov: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(ch) = Cholesky::new(cov.clone()) {
        return Some(ch);
    }
    let mut jitter = EIG_FLOOR;
    for _ in 0..12 {
        let jittered = cov + DMatrix::identity(cov.nrows(), cov.ncols()) * jitter;
        if let Some(ch) = Cholesky::new(jittered) {
            return Some(ch);
        }
        jitter *= 10.0;
    }
    None
}

/// Symmetrize, clamp the diagonal to COV_FLOOR, and lift eigenvalues to the
/// SPD floor if the floored matrix is still singular.
fn regularize(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let mut sym = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            sym[(i, j)] = 0.5 * (cov[(i, j)] + cov[(j, i)]);
        }
    }
    for i in 0..d {
        if sym[(i, i)] < COV_FLOOR {
            sym[(i, i)] = COV_FLOOR;
        }
    }
    if Cholesky::new(sym.clone()).is_some() {
        return sym;
    }
    let eig = sym.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(EIG_FLOOR));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

fn check_rows(samples: &[Vec<f64>]) -> Result<usize, GmmError> {
    let d = samples
        .first()
        .ok_or_else(|| GmmError::BadInput("no samples".into()))?
        .len();
    if d == 0 {
        return Err(GmmError::BadInput("zero-dimensional samples".into()));
    }
    for row in samples {
        if row.len() != d {
            return Err(GmmError::BadInput("ragged sample rows".into()));
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(GmmError::BadInput("non-finite sample".into()));
        }
    }
    Ok(d)
}

/// k-means++ seeding followed by Lloyd iterations; returns cluster
/// assignments.
fn kmeans(samples: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = samples.len();
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    centers.push(samples[rng.random_range(0..n)].clone());
    while centers.len() < k {
        let d2: Vec<f64> = samples
            .iter()
            .map(|x| {
                centers
                    .iter()
                    .map(|c| (x - c).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // All points coincide with a center; duplicate deterministically.
            centers.push(samples[0].clone());
            continue;
        }
        let mut draw = rng.random_range(0.0..total);
        let mut pick = n - 1;
        for (i, w) in d2.iter().enumerate() {
            if draw < *w {
                pick = i;
                break;
            }
            draw -= w;
        }
        centers.push(samples[pick].clone());
    }
    let mut assign = vec![0usize; n];
    for _ in 0..25 {
        let mut changed = false;
        for (i, x) in samples.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = (x - c).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        for (j, center) in centers.iter_mut().enumerate() {
            let members: Vec<&DVector<f64>> =
                samples.iter().zip(&assign).filter(|(_, a)| **a == j).map(|(s, _)| s).collect();
            if members.is_empty() {
                // Reseat an empty cluster on the point farthest from its center.
                let far = (0..samples.len())
                    .max_by(|&a, &b| {
                        (&samples[a] - &*center)
                            .norm_squared()
                            .total_cmp(&(&samples[b] - &*center).norm_squared())
                    })
                    .unwrap();
                *center = samples[far].clone();
                continue;
            }
            let mut mean = DVector::zeros(center.len());
            for m in &members {
                mean += *m;
            }
            *center = mean / members.len() as f64;
        }
        if !changed {
            break;
        }
    }
    assign
}

/// EM fit. Deterministic given `seed`; log-likelihood is checked to be
/// non-decreasing on every iteration.
pub fn fit_gmm(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<MixtureModel, GmmError> {
    fit_gmm_traced(samples, k, seed).map(|(m, _)| m)
}

/// As `fit_gmm`, also returning the log-likelihood after each EM iteration.
pub fn fit_gmm_traced(
    samples: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<(MixtureModel, Vec<f64>), GmmError> {
    let d = check_rows(samples)?;
    let n = samples.len();
    if k == 0 {
        return Err(GmmError::BadInput("K = 0".into()));
    }
    let need = 5 * k * d;
    if n < need {
        return Err(GmmError::InsufficientSamples { have: n, need, k, d });
    }
    let rows: Vec<DVector<f64>> = samples.iter().map(|r| DVector::from_column_slice(r)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assign = kmeans(&rows, k, &mut rng);

    let mut comps: Vec<Component> = Vec::with_capacity(k);
    for j in 0..k {
        let members: Vec<&DVector<f64>> =
            rows.iter().zip(&assign).filter(|(_, a)| **a == j).map(|(r, _)| r).collect();
        let count = members.len().max(1);
        let mut mean = DVector::zeros(d);
        for m in &members {
            mean += *m;
        }
        mean /= count as f64;
        let mut cov = DMatrix::zeros(d, d);
        for m in &members {
            let diff = *m - &mean;
            cov += &diff * diff.transpose();
        }
        cov /= count as f64;
        comps.push(Component {
            weight: members.len().max(1) as f64 / n as f64,
            mean,
            cov: regularize(&cov),
        });
    }
    let wsum: f64 = comps.iter().map(|c| c.weight).sum();
    for c in &mut comps {
        c.weight /= wsum;
    }

    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    let mut resp = DMatrix::zeros(n, k);
    for _iter in 0..MAX_EM_ITERS {
        // E step in log space.
        let chols: Vec<_> = comps
            .iter()
            .map(|c| {
                spd_cholesky(&c.cov)
                    .ok_or_else(|| GmmError::DegenerateData("covariance not SPD".into()))
            })
            .collect::<Result<_, _>>()?;
        let mut ll = 0.0;
        for (i, x) in rows.iter().enumerate() {
            let logs: Vec<f64> = comps
                .iter()
                .zip(&chols)
                .map(|(c, ch)| c.weight.ln() + log_gauss(x, &c.mean, ch))
                .collect();
            let norm = log_sum_exp(&logs);
            if !norm.is_finite() {
                return Err(GmmError::DegenerateData("non-finite likelihood".into()));
            }
            ll += norm;
            for j in 0..k {
                resp[(i, j)] = (logs[j] - norm).exp();
            }
        }
        assert!(
            ll >= prev_ll - 1e-9 * (1.0 + prev_ll.abs()),
            "EM log-likelihood decreased: {prev_ll} -> {ll}"
        );
        trace.push(ll);
        let gain = ll - prev_ll;
        prev_ll = ll;
        if gain.abs() < LL_GAIN_STOP && trace.len() > 1 {
            break;
        }
        // M step.
        for j in 0..k {
            let nk: f64 = (0..n).map(|i| resp[(i, j)]).sum();
            if nk < 1e-12 {
                return Err(GmmError::DegenerateData(format!(
                    "component {j} collapsed to zero responsibility"
                )));
            }
            let mut mean = DVector::zeros(d);
            for (i, x) in rows.iter().enumerate() {
                mean += x * resp[(i, j)];
            }
            mean /= nk;
            let mut cov = DMatrix::zeros(d, d);
            for (i, x) in rows.iter().enumerate() {
                let diff = x - &mean;
                cov += &diff * diff.transpose() * resp[(i, j)];
            }
            cov /= nk;
            comps[j] = Component {
                weight: nk / n as f64,
                mean,
                cov: regularize(&cov),
            };
        }
    }
    let model = MixtureModel::new(comps)?;
    Ok((model, trace))
}

/// Condition the mixture on `observed_dims` = `observed_values`; returns the
/// mixture over the remaining dimensions, with component weights rescaled by
/// each component's marginal density at the observation.
pub fn condition(
    model: &MixtureModel,
    observed_dims: &[usize],
    observed_values: &[f64],
) -> Result<MixtureModel, GmmError> {
    let d = model.dim();
    if observed_dims.is_empty() || observed_dims.len() >= d {
        return Err(GmmError::BadInput(
            "observed dims must be a proper nonempty subset".into(),
        ));
    }
    if observed_dims.len() != observed_values.len() {
        return Err(GmmError::BadInput("dims/values length mismatch".into()));
    }
    let mut seen = vec![false; d];
    for &i in observed_dims {
        if i >= d || seen[i] {
            return Err(GmmError::BadInput(format!("bad observed dim {i}")));
        }
        seen[i] = true;
    }
    let free: Vec<usize> = (0..d).filter(|i| !seen[*i]).collect();
    let v = DVector::from_column_slice(observed_values);

    let mut log_w = Vec::with_capacity(model.components().len());
    let mut conditioned = Vec::with_capacity(model.components().len());
    for c in model.components() {
        let mu_e = DVector::from_iterator(
            observed_dims.len(),
            observed_dims.iter().map(|&i| c.mean[i]),
        );
        let mu_f = DVector::from_iterator(free.len(), free.iter().map(|&i| c.mean[i]));
        let sig_ee = select(&c.cov, observed_dims, observed_dims);
        let sig_fe = select(&c.cov, &free, observed_dims);
        let sig_ff = select(&c.cov, &free, &free);
        let chol = spd_cholesky(&sig_ee)
            .ok_or_else(|| GmmError::DegenerateData("observed block not SPD".into()))?;
        let diff = &v - &mu_e;
        let mean = &mu_f + &sig_fe * chol.solve(&diff);
        let cov = &sig_ff - &sig_fe * chol.solve(&sig_fe.transpose());
        log_w.push(c.weight.ln() + log_gauss(&v, &mu_e, &chol));
        conditioned.push((mean, symmetrized(&cov)));
    }
    let norm = log_sum_exp(&log_w);
    if !norm.is_finite() {
        return Err(GmmError::DegenerateData(
            "observation has zero density under every component".into(),
        ));
    }
    let components = conditioned
        .into_iter()
        .zip(&log_w)
        .map(|((mean, cov), lw)| Component {
            weight: (lw - norm).exp(),
            mean,
            cov,
        })
        .filter(|c| c.weight > 0.0)
        .collect::<Vec<_>>();
    // Renormalize exactly so the weight invariant holds after the filter.
    let sum: f64 = components.iter().map(|c| c.weight).sum();
    let components = components
        .into_iter()
        .map(|mut c| {
            c.weight /= sum;
            c
        })
        .collect();
    MixtureModel::new(components)
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Draw one sample: component by weight, then a multivariate normal draw.
pub fn sample(model: &MixtureModel, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(model, &mut rng)
}

/// As `sample`, advancing a caller-held generator.
pub fn sample_with(model: &MixtureModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut u: f64 = rng.random();
    let mut pick = model.components().len() - 1;
    for (i, c) in model.components().iter().enumerate() {
        if u < c.weight {
            pick = i;
            break;
        }
        u -= c.weight;
    }
    let c = &model.components()[pick];
    let d = model.dim();
    let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let l = match spd_cholesky(&c.cov) {
        Some(ch) => ch.l(),
        None => {
            // Semi-definite fallback: eigenvalue square root.
            let eig = symmetrized(&c.cov).symmetric_eigen();
            let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
            return (&c.mean + &eig.eigenvectors * DMatrix::from_diagonal(&vals) * z)
                .iter()
                .copied()
                .collect();
        }
    };
    (&c.mean + l * z).iter().copied().collect()
}

/// Fit K = lo..=hi and keep the best by BIC (ties favor fewer components).
/// K values whose sample-count precondition fails are skipped.
pub fn select_k_bic(
    samples: &[Vec<f64>],
    ks: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<(MixtureModel, usize), GmmError> {
    let d = check_rows(samples)?;
    let n = samples.len();
    let mut best: Option<(f64, usize, MixtureModel)> = None;
    let mut last_err = None;
    for k in ks {
        match fit_gmm(samples, k, seed.wrapping_add(k as u64)) {
            Ok(model) => {
                let ll = model.log_likelihood(samples);
                let p = (k - 1) + k * d + k * d * (d + 1) / 2;
                let bic = -2.0 * ll + p as f64 * (n as f64).ln();
                if best.as_ref().is_none_or(|(b, _, _)| bic < *b) {
                    best = Some((bic, k, model));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, k, model)) => Ok((model, k)),
        None => Err(last_err.unwrap_or_else(|| GmmError::BadInput("empty K range".into()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss_samples(
        rng: &mut ChaCha8Rng,
        n: usize,
        mean: &[f64],
        chol_lower: &[&[f64]],
    ) -> Vec<Vec<f64>> {
        let d = mean.len();
        (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                (0..d)
                    .map(|i| {
                        mean[i]
                            + (0..=i.min(chol_lower[i].len() - 1))
                                .map(|j| chol_lower[i][j] * z[j])
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn conditioning_matches_analytic_gaussian() {
        let model = MixtureModel::new(vec![Component {
            weight: 1.0,
            mean: DVector::from_column_slice(&[0.0, 0.0]),
            cov: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
        }])
        .unwrap();
        let cond = condition(&model, &[0], &[1.0]).unwrap();
        assert_eq!(cond.dim(), 1);
        assert!((cond.components()[0].mean[0] - 0.5).abs() <= 1e-9);
        assert!((cond.components()[0].cov[(0, 0)] - 0.75).abs() <= 1e-9);
    }

    #[test]
    fn diagonal_covariance_conditions_to_marginal() {
        let model = MixtureModel::new(vec![Component {
            weight: 1.0,
            mean: DVector::from_column_slice(&[3.0, -2.0]),
            cov: DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]),
        }])
        .unwrap();
        let cond = condition(&model, &[0], &[100.0]).unwrap();
        assert!((cond.components()[0].mean[0] - (-2.0)).abs() <= 1e-12);
        assert!((cond.components()[0].cov[(0, 0)] - 9.0).abs() <= 1e-12);
    }

    #[test]
    fn conditioning_at_symmetric_point_preserves_weights() {
        let mk = |mu: f64| Component {
            weight: 0.5,
            mean: DVector::from_column_slice(&[mu, 0.0]),
            cov: DMatrix::identity(2, 2),
        };
        let model = MixtureModel::new(vec![mk(-1.0), mk(1.0)]).unwrap();
        let cond = condition(&model, &[0], &[0.0]).unwrap();
        let w: Vec<f64> = cond.components().iter().map(|c| c.weight).collect();
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(w[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn em_recovers_sample_statistics_for_single_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples = gauss_samples(&mut rng, 1000, &[2.0, -1.0], &[&[0.8], &[0.2, 0.5]]);
        let (model, trace) = fit_gmm_traced(&samples, 1, 0).unwrap();
        let n = samples.len() as f64;
        let mut mean = [0.0; 2];
        for r in &samples {
            mean[0] += r[0] / n;
            mean[1] += r[1] / n;
        }
        // K=1 EM is the closed-form MLE: the sample mean, exactly.
        assert!((model.components()[0].mean[0] - mean[0]).abs() <= 1e-9);
        assert!((model.components()[0].mean[1] - mean[1]).abs() <= 1e-9);
        // And near the generator mean at this sample size.
        assert!((model.components()[0].mean[0] - 2.0).abs() <= 0.1);
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9 * (1.0 + pair[0].abs()));
        }
    }

    #[test]
    fn identical_samples_fit_to_floored_covariance() {
        let samples = vec![vec![1.5, -3.0]; 40];
        let model = fit_gmm(&samples, 1, 7).unwrap();
        let c = &model.components()[0];
        assert_relative_eq!(c.mean[0], 1.5, epsilon = 1e-12);
        assert_relative_eq!(c.cov[(0, 0)], COV_FLOOR, epsilon = 1e-15);
        assert_relative_eq!(c.cov[(1, 1)], COV_FLOOR, epsilon = 1e-15);
    }

    #[test]
    fn two_clusters_recover_proportions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut samples = gauss_samples(&mut rng, 700, &[0.0, 0.0], &[&[0.3], &[0.0, 0.3]]);
        samples.extend(gauss_samples(&mut rng, 300, &[8.0, 8.0], &[&[0.3], &[0.0, 0.3]]));
        let model = fit_gmm(&samples, 2, 11).unwrap();
        let mut weights: Vec<f64> = model.components().iter().map(|c| c.weight).collect();
        weights.sort_by(f64::total_cmp);
        assert!((weights[0] - 0.3).abs() <= 0.05, "weights {weights:?}");
        assert!((weights[1] - 0.7).abs() <= 0.05);
    }

    #[test]
    fn insufficient_samples_are_rejected() {
        let samples = vec![vec![0.0, 0.0]; 19];
        assert!(matches!(
            fit_gmm(&samples, 2, 0),
            Err(GmmError::InsufficientSamples { have: 19, need: 20, .. })
        ));
    }

    #[test]
    fn sampling_is_seed_deterministic_and_tracks_floor() {
        let model = MixtureModel::new(vec![Component {
            weight: 1.0,
            mean: DVector::from_column_slice(&[0.0]),
            cov: DMatrix::from_row_slice(1, 1, &[COV_FLOOR]),
        }])
        .unwrap();
        let a = sample(&model, 99);
        let b = sample(&model, 99);
        assert_eq!(a, b);
        // σ = 1e-3 under the floor; a draw sits within a few σ of the mean.
        assert!(a[0].abs() <= 4e-3, "draw {a:?}");
    }

    #[test]
    fn seeded_sample_mean_matches_model() {
        let model = MixtureModel::new(vec![Component {
            weight: 1.0,
            mean: DVector::from_column_slice(&[1.0, -2.0]),
            cov: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
        }])
        .unwrap();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let s = sample_with(&model, &mut rng);
            mean[0] += s[0];
            mean[1] += s[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        let bound0 = 3.0 * 1.0f64.sqrt() / (n as f64).sqrt();
        let bound1 = 3.0 * 2.0f64.sqrt() / (n as f64).sqrt();
        assert!((mean[0] - 1.0).abs() <= bound0, "mean {mean:?}");
        assert!((mean[1] + 2.0).abs() <= bound1, "mean {mean:?}");
    }

    #[test]
    fn bic_prefers_the_planted_component_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut samples = gauss_samples(&mut rng, 400, &[0.0], &[&[0.4]]);
        samples.extend(gauss_samples(&mut rng, 400, &[6.0], &[&[0.4]]));
        let (_, k2) = select_k_bic(&samples, 1..=5, 3).unwrap();
        assert_eq!(k2, 2);

        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let single = gauss_samples(&mut rng, 500, &[1.0], &[&[0.7]]);
        let (_, k1) = select_k_bic(&single, 1..=5, 3).unwrap();
        assert_eq!(k1, 1);
    }
}
