//! Starting values: k-means on the mean-imputed data, then per-cluster
//! method-of-moments estimates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::DataMatrix;
use crate::distributions::{delta_from_lambda, lambda_from_delta};
use crate::error::{Error, Result};
use crate::linalg::{psd_inv_sqrt, psd_sqrt, repair_pd};
use crate::model::{ComponentParams, Constraints, MixtureModel};
use crate::special::sqrt_2_over_pi;

pub const KMEANS_RESTARTS: usize = 25;
pub const KMEANS_RESEEDS: usize = 10;
const LLOYD_MAX_ITER: usize = 100;
const LAMBDA_CLIP: f64 = 2.0;
const ALPHA_INIT: f64 = 0.95;
const BETA_INIT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centers: Vec<DVector<f64>>,
    /// Sum of squared distances over the kept rows.
    pub inertia: f64,
    /// `false` for rows trimmed from the last center update.
    pub kept: Vec<bool>,
}

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    (0..x.ncols()).map(|j| (x[(i, j)] - c[j]).powi(2)).sum()
}

/// k-means++ seeding. The `n_trim` rows farthest from the current centers
/// are not eligible as the next center.
fn plus_plus_seed<R: Rng>(x: &DMatrix<f64>, k: usize, n_trim: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let n = x.nrows();
    let mut centers = vec![x.row(rng.random_range(0..n)).transpose()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &centers[0])).collect();
    while centers.len() < k {
        let eligible = keep_mask(&d2, n_trim);
        let weight: Vec<f64> = d2.iter().zip(&eligible).map(|(&d, &e)| if e { d } else { 0.0 }).collect();
        let total: f64 = weight.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = weight.iter().rposition(|&w| w > 0.0).unwrap_or(n - 1);
            for (i, &d) in weight.iter().enumerate() {
                if r < d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = x.row(pick).transpose();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, i, &c));
        }
        centers.push(c);
    }
    centers
}

/// Rows outside the `n_trim` largest distances.
fn keep_mask(dist: &[f64], n_trim: usize) -> Vec<bool> {
    let mut kept = vec![true; dist.len()];
    if n_trim > 0 {
        let mut order: Vec<usize> = (0..dist.len()).collect();
        order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
        for &i in &order[..n_trim] {
            kept[i] = false;
        }
    }
    kept
}

/// Lloyd iterations from the given centers; the `n_trim` rows farthest from
/// their center are left out of each center update. Returns `None` if a
/// cluster empties.
fn lloyd(x: &DMatrix<f64>, mut centers: Vec<DVector<f64>>, n_trim: usize) -> Option<KMeans> {
    let (n, p) = x.shape();
    let k = centers.len();
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut kept = vec![true; n];
    for _ in 0..LLOYD_MAX_ITER {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (g, c) in centers.iter().enumerate() {
                let d = sq_dist(x, i, c);
                if d < best.0 {
                    best = (d, g);
                }
            }
            dist[i] = best.0;
            if *label != best.1 {
                *label = best.1;
                changed = true;
            }
        }
        let new_kept = keep_mask(&dist, n_trim);
        changed |= new_kept != kept;
        kept = new_kept;
        let mut sums = vec![DVector::<f64>::zeros(p); k];
        let mut counts = vec![0usize; k];
        for (i, &g) in labels.iter().enumerate() {
            if kept[i] {
                sums[g] += x.row(i).transpose();
                counts[g] += 1;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for g in 0..k {
            centers[g] = &sums[g] / counts[g] as f64;
        }
        if !changed {
            break;
        }
    }
    for (i, label) in labels.iter_mut().enumerate() {
        let (d, g) = centers.iter().enumerate().map(|(g, c)| (sq_dist(x, i, c), g)).fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
        *label = g;
        dist[i] = d;
    }
    let kept = keep_mask(&dist, n_trim);
    let inertia = (0..n).filter(|&i| kept[i]).map(|i| dist[i]).sum();
    Some(KMeans { labels, centers, inertia, kept })
}

/// k-means with k-means++ seeding and `restarts` restarts; the lowest
/// inertia wins (first one on ties). A restart whose clusters empty is
/// reseeded, up to [`KMEANS_RESEEDS`] times in total.
pub fn kmeans(x: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeans> {
    trimmed_kmeans(x, k, restarts, seed, 0.0)
}

/// [`kmeans`] that ignores the fraction `trim` of rows farthest from their
/// centers when updating centers and scoring restarts.
pub fn trimmed_kmeans(x: &DMatrix<f64>, k: usize, restarts: usize, seed: u64, trim: f64) -> Result<KMeans> {
    if k == 0 || k > x.nrows() {
        return Err(Error::InvalidParameter(format!("cannot form {k} clusters from {} rows", x.nrows())));
    }
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::InvalidParameter(format!("trim fraction {trim} not in [0, 0.5)")));
    }
    let n_trim = (trim * x.nrows() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeans> = None;
    let mut reseeds = 0;
    let mut done = 0;
    while done < restarts.max(1) {
        match lloyd(x, plus_plus_seed(x, k, n_trim, &mut rng), n_trim) {
            Some(run) => {
                done += 1;
                if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
                    best = Some(run);
                }
            }
            None => {
                reseeds += 1;
                if reseeds > KMEANS_RESEEDS {
                    return best.ok_or(Error::EmptyCluster { attempts: KMEANS_RESEEDS });
                }
            }
        }
    }
    Ok(best.expect("at least one restart completed"))
}

/// Inverts the univariate skew-normal skewness formula for the shape
/// parameter, clipped to `|lambda| <= 2`.
pub fn lambda_from_skewness(gamma: f64) -> f64 {
    if !gamma.is_finite() || gamma == 0.0 {
        return 0.0;
    }
    // the skewness of a skew-normal is bounded by about 0.9953
    let g = gamma.abs().min(0.99);
    let c = (2.0 * g / (4.0 - std::f64::consts::PI)).cbrt();
    let m = c / (1.0 + c * c).sqrt();
    let delta = (m / sqrt_2_over_pi()).min(0.999_999);
    let lambda = delta / (1.0 - delta * delta).sqrt();
    lambda.min(LAMBDA_CLIP).copysign(gamma)
}

/// Method-of-moments component from the rows of `x` listed in `rows`.
fn moments_component(x: &DMatrix<f64>, rows: &[usize], pi: f64, constraints: Constraints, beta_floor: f64) -> Result<ComponentParams> {
    let p = x.ncols();
    let m = rows.len() as f64;
    let mut mean = DVector::zeros(p);
    for &i in rows {
        mean += x.row(i).transpose();
    }
    mean /= m;
    let mut cov = DMatrix::zeros(p, p);
    for &i in rows {
        let d = x.row(i).transpose() - &mean;
        cov += &d * d.transpose();
    }
    cov /= m;
    let scale = cov.trace().abs() / p as f64;
    let ridge = if scale > 0.0 { 1e-6 * scale } else { 1e-6 };
    for j in 0..p {
        cov[(j, j)] = cov[(j, j)].max(ridge);
    }
    let (cov, _) = repair_pd(&cov);
    let (alpha, beta) = if constraints.no_contamination { (1.0, beta_floor) } else { (ALPHA_INIT, BETA_INIT.max(beta_floor)) };
    let symmetric = |mean, cov| ComponentParams::from_direct(pi, mean, cov, DVector::zeros(p), alpha, beta);
    if constraints.no_skew {
        return symmetric(mean, cov);
    }
    // For a skew-normal, E[Z |Z|^2] of the standardized vector Z points along
    // the standardized skewness direction, so all coordinates inform it.
    let inv_root = psd_inv_sqrt(&cov)?;
    let z: Vec<DVector<f64>> = rows.iter().map(|&i| &inv_root * (x.row(i).transpose() - &mean)).collect();
    let mut dir = DVector::zeros(p);
    for zi in &z {
        dir += zi * zi.norm_squared();
    }
    if !(dir.norm() > 0.0) {
        return symmetric(mean, cov);
    }
    let u = dir.normalize();
    let gamma = z.iter().map(|zi| u.dot(zi).powi(3)).sum::<f64>() / m;
    let lam = lambda_from_skewness(gamma).max(0.0);
    let d = lam / (1.0 + lam * lam).sqrt();
    let delta = psd_sqrt(&cov)? * u * (d / (1.0 - 2.0 * d * d / std::f64::consts::PI).sqrt());
    let sigma = &cov + &delta * delta.transpose() * (2.0 / std::f64::consts::PI);
    let lambda = match lambda_from_delta(&(&sigma - &delta * delta.transpose()), &delta) {
        Ok(l) => l.map(|v| v.clamp(-LAMBDA_CLIP, LAMBDA_CLIP)),
        Err(_) => return symmetric(mean, cov),
    };
    let delta = delta_from_lambda(&sigma, &lambda)?;
    let mu = &mean - &delta * sqrt_2_over_pi();
    ComponentParams::from_direct(pi, mu, sigma, lambda, alpha, beta)
}

/// Starting model for `g` clusters, deterministic given `seed`.
pub fn initialize(data: &DataMatrix, g: usize, seed: u64, constraints: Constraints, beta_floor: f64) -> Result<MixtureModel> {
    initialize_trimmed(data, g, seed, constraints, beta_floor, 0.0)
}

/// [`initialize`] on a trimmed k-means partition. Weights count every row;
/// the moment estimates use only the kept rows of a cluster when it has
/// more than `p` of them.
pub fn initialize_trimmed(
    data: &DataMatrix,
    g: usize,
    seed: u64,
    constraints: Constraints,
    beta_floor: f64,
    trim: f64,
) -> Result<MixtureModel> {
    let (n, p) = (data.n(), data.p());
    if n <= g * (p + 1) {
        return Err(Error::InvalidParameter(format!("n = {n} must exceed G (p + 1) = {}", g * (p + 1))));
    }
    let x = data.mean_imputed();
    let km = if g == 1 && trim == 0.0 {
        KMeans { labels: vec![0; n], centers: Vec::new(), inertia: 0.0, kept: vec![true; n] }
    } else {
        trimmed_kmeans(&x, g, KMEANS_RESTARTS, seed, trim)?
    };
    let mut components = Vec::with_capacity(g);
    for k in 0..g {
        let all: Vec<usize> = (0..n).filter(|&i| km.labels[i] == k).collect();
        if all.is_empty() {
            return Err(Error::EmptyCluster { attempts: KMEANS_RESEEDS });
        }
        let pi = all.len() as f64 / n as f64;
        let kept: Vec<usize> = all.iter().copied().filter(|&i| km.kept[i]).collect();
        let rows = if kept.len() > p { kept } else { all };
        components.push(moments_component(&x, &rows, pi, constraints, beta_floor)?);
    }
    MixtureModel::new(components, constraints, beta_floor)
}
