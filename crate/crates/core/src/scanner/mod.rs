//! Numerical exploration of isoenergy surfaces: sampling by projection,
//! component counting on the sample cloud, and critical values of `K`.

mod unionfind;

use nalgebra::{SMatrix, SVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rstar::{PointDistance, RTree};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::system::{
    eval_constraints, is_rank_deficient, is_regular_orbit, newton_project, NumericSystem, OrbitParams, PhasePoint,
    DEFAULT_MAX_ITER,
};

pub use unionfind::UnionFind;

pub const DEFAULT_SAMPLES: usize = 20_000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SVD_TOL: f64 = 1e-6;
/// Neighbourhood radius as a multiple of the median nearest-neighbour distance.
pub const RADIUS_FACTOR: f64 = 3.0;
pub const DEFAULT_SEED: u64 = 20_240_601;

const BATCH: usize = 512;
/// Projection attempts allowed per requested sample before giving up.
const ATTEMPTS_PER_SAMPLE: usize = 8;
/// Projected candidates drawn per requested sample before thinning.
pub const OVERSAMPLE: usize = 3;
/// Neighbour rank of the local density estimate used for thinning.
const DENSITY_K: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("level (kappa={kappa}, a={a}, b={b}) is not a regular orbit")]
    Irregular { kappa: f64, a: f64, b: f64 },
    #[error("no projection converged onto H = {h} after {attempts} attempts (empty level set?)")]
    EmptyLevelSet { h: f64, attempts: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Points of `Q = {f1 = a, f2 = b, H = h}` found by projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCloud {
    pub points: Vec<PhasePoint>,
    pub params: OrbitParams,
    pub seed: u64,
    pub tol: f64,
}

impl SampleCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest constraint residual over the cloud.
    pub fn max_residual(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|pt| eval_constraints(pt, &self.params))
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    /// CSV with header `J1,J2,J3,x1,x2,x3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("J1,J2,J3,x1,x2,x3\n");
        for p in &self.points {
            let row: Vec<String> = p.j.iter().chain(&p.x).map(|v| format!("{v:.17e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn unit3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// A random point on `{f1 = a, f2 = b}` (exactly, for `kappa > 0`) or a
/// Gaussian guess of matching scale otherwise.
fn seed_point(p: &OrbitParams, rng: &mut ChaCha8Rng) -> PhasePoint {
    if p.kappa > 0.0 {
        // u = x + sqrt(k) J and v = x - sqrt(k) J lie on spheres of radii r+ and r-
        let s = p.kappa.sqrt();
        let rp = (p.a + 2.0 * s * p.b).max(0.0).sqrt();
        let rm = (p.a - 2.0 * s * p.b).max(0.0).sqrt();
        let u = unit3(rng) * rp;
        let v = unit3(rng) * rm;
        let x = (u + v) / 2.0;
        let j = (u - v) / (2.0 * s);
        PhasePoint::new([j[0], j[1], j[2]], [x[0], x[1], x[2]], p.kappa)
    } else {
        let scale = (p.a.abs() + p.b.abs() + 1.0).sqrt();
        let mut c = [0.0; 6];
        for v in &mut c {
            let g: f64 = rng.sample(StandardNormal);
            *v = g * scale;
        }
        PhasePoint::new([c[0], c[1], c[2]], [c[3], c[4], c[5]], p.kappa)
    }
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn project_batch(p: &OrbitParams, seed: u64, batch: u64, tol: f64) -> Vec<PhasePoint> {
    let sys = NumericSystem::shared();
    let mut rng = batch_rng(seed, batch);
    let mut out = Vec::new();
    for _ in 0..BATCH {
        let start = seed_point(p, &mut rng);
        let Ok((pt, _)) = newton_project(&start, p, tol, DEFAULT_MAX_ITER) else { continue };
        if eval_constraints(&pt, p).iter().any(|r| r.abs() > tol) {
            continue;
        }
        if is_rank_deficient(&sys.constraint_jacobian(&pt, p.c1)) {
            continue;
        }
        out.push(pt);
    }
    out
}

/// Keeps `n` points of `pool`, drawn without replacement with weights
/// proportional to the local volume per point (cube of the distance to the
/// `DENSITY_K`-th neighbour). Projection crowds points where the gradient
/// flow of `H` on the Casimir level converges; this evens the density out.
/// Kept points stay in pool order.
fn thin(pool: Vec<PhasePoint>, n: usize, seed: u64) -> Vec<PhasePoint> {
    if pool.len() <= n {
        return pool;
    }
    let coords: Vec<[f64; 6]> = pool.iter().map(|p| p.as_vec6().into()).collect();
    let tree = RTree::bulk_load(coords.clone());
    let k = DENSITY_K.min(pool.len() - 1);
    let weights: Vec<f64> = coords
        .par_iter()
        .map(|c| {
            let far = tree.nearest_neighbor_iter(*c).nth(k).expect("pool has more than k points");
            far.distance_2(c).powf(1.5)
        })
        .collect();
    // weighted sampling by largest key u^(1/w), compared as ln(u)/w
    let mut rng = batch_rng(seed, u64::MAX);
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| (rng.random::<f64>().ln() / w.max(f64::MIN_POSITIVE), i))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = keyed[..n].iter().map(|&(_, i)| i).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| pool[i]).collect()
}

/// Samples up to `n` points of `Q`: random points of the Casimir level are
/// projected onto `H = h` (about `OVERSAMPLE * n` of them) and the pool is
/// thinned to `n` points of roughly even density. Batches run in parallel,
/// each with its own ChaCha stream, and are merged in batch order, so the
/// cloud depends only on `(p, n, seed, tol)`.
pub fn sample_isoenergy(p: &OrbitParams, n: usize, seed: u64, tol: f64) -> Result<SampleCloud, ScanError> {
    if n == 0 {
        return Err(ScanError::InvalidArgument("sample count must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(ScanError::InvalidArgument("tolerance must be positive".into()));
    }
    if !is_regular_orbit(p) {
        return Err(ScanError::Irregular { kappa: p.kappa, a: p.a, b: p.b });
    }
    let target = n * OVERSAMPLE;
    let max_batches = (target * ATTEMPTS_PER_SAMPLE).div_ceil(BATCH).max(4);
    let threads = rayon::current_num_threads().max(1);
    let mut points = Vec::with_capacity(target);
    let mut next = 0usize;
    while points.len() < target && next < max_batches {
        let needed = (target - points.len()).div_ceil(BATCH);
        let round = needed.max(threads).min(max_batches - next);
        let results: Vec<Vec<PhasePoint>> = (next..next + round)
            .into_par_iter()
            .map(|b| project_batch(p, seed, b as u64, tol))
            .collect();
        next += round;
        for r in results {
            points.extend(r);
        }
        if points.is_empty() && next >= 4 {
            break;
        }
    }
    if points.is_empty() {
        return Err(ScanError::EmptyLevelSet { h: p.h, attempts: next * BATCH });
    }
    points.truncate(target);
    Ok(SampleCloud { points: thin(points, n, seed), params: *p, seed, tol })
}

fn dist2(a: &PhasePoint, b: &PhasePoint) -> f64 {
    (a.as_vec6() - b.as_vec6()).norm_squared()
}

/// Number of connected components of the graph joining cloud points at
/// ambient distance at most `radius`.
pub fn component_count(c: &SampleCloud, radius: f64) -> usize {
    assert!(radius > 0.0, "radius must be positive");
    let pts: Vec<SVector<f64, 6>> = c.points.iter().map(PhasePoint::as_vec6).collect();
    if pts.is_empty() {
        return 0;
    }
    // sweep along the coordinate of largest variance
    let n = pts.len() as f64;
    let axis = (0..6)
        .map(|k| {
            let mean = pts.iter().map(|p| p[k]).sum::<f64>() / n;
            let var = pts.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>();
            (k, var)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .unwrap();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i][axis].total_cmp(&pts[j][axis]));
    let r2 = radius * radius;
    let mut uf = UnionFind::new(pts.len());
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            if pts[j][axis] - pts[i][axis] > radius {
                break;
            }
            if (pts[i] - pts[j]).norm_squared() <= r2 {
                uf.union(i, j);
            }
        }
    }
    uf.sets()
}

/// Median nearest-neighbour distance over (a deterministic subsample of)
/// the cloud.
pub fn median_nn_distance(c: &SampleCloud) -> f64 {
    let n = c.points.len();
    if n < 2 {
        return 0.0;
    }
    let step = (n / 1000).max(1);
    let mut d: Vec<f64> = (0..n)
        .step_by(step)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| {
            c.points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| dist2(&c.points[i], q))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// `RADIUS_FACTOR` times the median nearest-neighbour distance.
pub fn default_radius(c: &SampleCloud) -> f64 {
    RADIUS_FACTOR * median_nn_distance(c)
}

type Mat9 = SMatrix<f64, 9, 9>;
type Vec9 = SVector<f64, 9>;

/// Smallest singular value of the 4x6 Jacobian of `(f1, f2, H, K)`.
pub fn momentum_sigma_min(pt: &PhasePoint, c1: f64) -> f64 {
    let j = NumericSystem::shared().momentum_jacobian(pt, c1);
    j.svd(false, false).singular_values.min()
}

/// Lagrange residual `(grad K - sum l_i grad g_i, g - c)` and its Jacobian.
fn lagrange_system(z: &Vec9, p: &OrbitParams) -> (Vec9, Mat9) {
    let sys = NumericSystem::shared();
    let pt = PhasePoint::from_vec6(&z.fixed_rows::<6>(0).into_owned(), p.kappa);
    let lam = [z[6], z[7], z[8]];
    let g = sys.constraint_jacobian(&pt, p.c1);
    let gk = sys.gradient(3, &pt, p.c1);
    let cons = eval_constraints(&pt, p);
    let mut f = Vec9::zeros();
    let stationarity = gk - g.transpose() * Vector3::from(lam);
    f.fixed_rows_mut::<6>(0).copy_from(&stationarity);
    for i in 0..3 {
        f[6 + i] = cons[i];
    }
    let mut hess = sys.hessian(3, &pt, p.c1);
    for (i, l) in lam.iter().enumerate() {
        hess -= sys.hessian(i, &pt, p.c1) * *l;
    }
    let mut jac = Mat9::zeros();
    jac.fixed_view_mut::<6, 6>(0, 0).copy_from(&hess);
    jac.fixed_view_mut::<6, 3>(0, 6).copy_from(&(-g.transpose()));
    jac.fixed_view_mut::<3, 6>(6, 0).copy_from(&g);
    (f, jac)
}

/// Gauss-Newton on the Lagrange system starting at `pt`; the SVD
/// pseudo-inverse copes with the degenerate directions along critical circles.
fn refine_critical(pt: &PhasePoint, p: &OrbitParams) -> Option<PhasePoint> {
    let sys = NumericSystem::shared();
    let g = sys.constraint_jacobian(pt, p.c1);
    let gk = sys.gradient(3, pt, p.c1);
    let lam = (g * g.transpose()).try_inverse()? * (g * gk);
    let mut z = Vec9::zeros();
    z.fixed_rows_mut::<6>(0).copy_from(&pt.as_vec6());
    z.fixed_rows_mut::<3>(6).copy_from(&lam);
    for _ in 0..60 {
        let (f, jac) = lagrange_system(&z, p);
        if !f.iter().all(|v| v.is_finite()) {
            return None;
        }
        if f.norm() < 1e-12 {
            break;
        }
        let step = jac.svd(true, true).solve(&f, 1e-12).ok()?;
        z -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    let out = PhasePoint::from_vec6(&z.fixed_rows::<6>(0).into_owned(), p.kappa);
    // land exactly on Q again before judging rank
    newton_project(&out, p, DEFAULT_TOL, DEFAULT_MAX_ITER).ok().map(|(q, _)| q)
}

/// Candidate count refined by the Lagrange solver.
const CRITICAL_CANDIDATES: usize = 48;

/// Clustered critical values of `K` on the sampled cloud: the points with
/// smallest rank-defect indicator plus the extreme-`K` points are refined
/// as constrained critical points and kept when the 4x6 Jacobian's
/// smallest singular value falls below `svd_tol`.
pub fn critical_values_from_cloud(c: &SampleCloud, svd_tol: f64) -> Vec<f64> {
    let p = c.params;
    let sys = NumericSystem::shared();
    if c.points.is_empty() {
        return vec![];
    }
    let scored: Vec<(usize, f64, f64)> = c
        .points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| (i, momentum_sigma_min(pt, p.c1), sys.values(pt, p.c1)[3]))
        .collect();
    let mut by_sigma = scored.clone();
    by_sigma.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut candidates: Vec<usize> = by_sigma.iter().take(CRITICAL_CANDIDATES).map(|s| s.0).collect();
    let kmin = scored.iter().min_by(|a, b| a.2.total_cmp(&b.2)).unwrap().0;
    let kmax = scored.iter().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap().0;
    candidates.extend([kmin, kmax]);
    candidates.sort_unstable();
    candidates.dedup();

    let mut values: Vec<f64> = candidates
        .par_iter()
        .filter_map(|&i| refine_critical(&c.points[i], &p))
        .filter(|q| momentum_sigma_min(q, p.c1) < svd_tol)
        .map(|q| sys.values(&q, p.c1)[3])
        .collect();
    values.sort_by(f64::total_cmp);
    cluster(&values, 1e-6)
}

/// Merges sorted values closer than `width * max(1, |v|)`, reporting cluster means.
fn cluster(sorted: &[f64], width: f64) -> Vec<f64> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some(cl) if (v - cl[cl.len() - 1]).abs() <= width * v.abs().max(1.0) => cl.push(v),
            _ => out.push(vec![v]),
        }
    }
    out.into_iter().map(|cl| cl.iter().sum::<f64>() / cl.len() as f64).collect()
}

/// Samples `Q` and returns its clustered critical values of `K`.
pub fn critical_values_k(p: &OrbitParams, n: usize, seed: u64, svd_tol: f64) -> Result<Vec<f64>, ScanError> {
    let cloud = sample_isoenergy(p, n, seed, DEFAULT_TOL)?;
    Ok(critical_values_from_cloud(&cloud, svd_tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub svd_tol: f64,
    /// Re-sample with twice the points and compare component counts.
    pub check_doubling: bool,
    pub critical_values: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOL,
            svd_tol: DEFAULT_SVD_TOL,
            check_doubling: false,
            critical_values: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Ok,
    EmptyLevelSet,
    Irregular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub h: f64,
    pub status: ScanStatus,
    pub points: usize,
    pub components: Option<usize>,
    pub radius: Option<f64>,
    pub max_residual: Option<f64>,
    pub critical_k: Vec<f64>,
    /// Component count with `2n` samples agrees (when checked).
    pub stable_under_doubling: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema: u32,
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub options: ScanOptions,
    pub entries: Vec<ScanEntry>,
    /// Indices `i` where the component count differs between `h[i]` and `h[i+1]`.
    pub count_changes: Vec<usize>,
    pub diagnostics: Vec<String>,
}

impl ScanReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(s: &str) -> Result<ScanReport, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// `steps` equally spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

/// Samples `Q` for every `h` of the grid; empty levels are recorded and
/// the scan continues.
pub fn scan_h(p: &OrbitParams, h_grid: &[f64], opts: &ScanOptions) -> Result<ScanReport, ScanError> {
    scan_h_with(p, h_grid, opts, |_| {})
}

/// [`scan_h`], handing every sampled cloud to `on_cloud` before it is dropped.
pub fn scan_h_with(
    p: &OrbitParams,
    h_grid: &[f64],
    opts: &ScanOptions,
    mut on_cloud: impl FnMut(&SampleCloud),
) -> Result<ScanReport, ScanError> {
    if h_grid.is_empty() {
        return Err(ScanError::InvalidArgument("h grid is empty".into()));
    }
    if h_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ScanError::InvalidArgument("h grid must be strictly increasing".into()));
    }
    let mut entries = Vec::new();
    let mut diagnostics = Vec::new();
    for &h in h_grid {
        let q = p.with_h(h);
        let empty = |status| ScanEntry {
            h,
            status,
            points: 0,
            components: None,
            radius: None,
            max_residual: None,
            critical_k: vec![],
            stable_under_doubling: None,
        };
        let cloud = match sample_isoenergy(&q, opts.samples, opts.seed, opts.tol) {
            Ok(c) => c,
            Err(ScanError::EmptyLevelSet { .. }) => {
                diagnostics.push(format!("h={h}: empty level set"));
                entries.push(empty(ScanStatus::EmptyLevelSet));
                continue;
            }
            Err(ScanError::Irregular { .. }) => {
                diagnostics.push(format!("h={h}: (a, b) is not a regular orbit"));
                entries.push(empty(ScanStatus::Irregular));
                continue;
            }
            Err(e) => return Err(e),
        };
        on_cloud(&cloud);
        let radius = default_radius(&cloud);
        let components = component_count(&cloud, radius);
        let stable = if opts.check_doubling {
            let big = sample_isoenergy(&q, 2 * opts.samples, opts.seed, opts.tol)?;
            let stable = component_count(&big, default_radius(&big)) == components;
            if !stable {
                diagnostics.push(format!("h={h}: component count changes when the sample count doubles"));
            }
            Some(stable)
        } else {
            None
        };
        if cloud.len() < opts.samples {
            diagnostics.push(format!("h={h}: only {} of {} projections converged", cloud.len(), opts.samples));
        }
        let critical_k = if opts.critical_values { critical_values_from_cloud(&cloud, opts.svd_tol) } else { vec![] };
        entries.push(ScanEntry {
            h,
            status: ScanStatus::Ok,
            points: cloud.len(),
            components: Some(components),
            radius: Some(radius),
            max_residual: Some(cloud.max_residual()),
            critical_k,
            stable_under_doubling: stable,
        });
    }
    let count_changes = entries
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].components != w[1].components)
        .map(|(i, _)| i)
        .collect();
    Ok(ScanReport {
        schema: 1,
        kappa: p.kappa,
        a: p.a,
        b: p.b,
        c1: p.c1,
        options: opts.clone(),
        entries,
        count_changes,
        diagnostics,
    })
}
