//! Fixation-prediction metrics: AUC-Judd, AUC-Borji, shuffled AUC, NSS, CC,
//! KL divergence, and SIM.
//!
//! All AUC variants share one ROC routine that sweeps every distinct saliency
//! value as a threshold and integrates with the trapezoid rule. That makes
//! ties between positive and negative samples count one half (the
//! Mann-Whitney convention) and keeps the scores invariant under strictly
//! monotonic transforms of the map.
//!
//! Degenerate (constant) maps never abort a sweep: the affected metrics
//! return their chance value with a warning flag instead.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{DensityMap, SaliencyMap};

const KL_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{metric}: fixation set is empty")]
    EmptyFixations { metric: &'static str },
    #[error("{metric}: map is {got:?} but fixations are on a {expected:?} grid")]
    DimMismatch {
        metric: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("shuffled AUC: negative-fixation pool is empty")]
    EmptyPool,
    #[error("fixation {index} at ({x}, {y}) is outside a {width}x{height} image")]
    OutOfBounds {
        index: usize,
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
}

/// Integer pixel coordinates of recorded fixations for one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixationSet {
    width: usize,
    height: usize,
    points: Vec<(usize, usize)>,
}

impl FixationSet {
    pub fn new(
        width: usize,
        height: usize,
        points: Vec<(usize, usize)>,
    ) -> Result<Self, MetricError> {
        for (index, &(x, y)) in points.iter().enumerate() {
            if x >= width || y >= height {
                return Err(MetricError::OutOfBounds {
                    index,
                    x,
                    y,
                    width,
                    height,
                });
            }
        }
        Ok(Self {
            width,
            height,
            points,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A metric value plus a flag raised when a degenerate input forced the
/// chance/zero fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOutcome {
    pub value: f64,
    pub degenerate: bool,
}

impl MetricOutcome {
    fn ok(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    fn degenerate(value: f64) -> Self {
        Self {
            value,
            degenerate: true,
        }
    }
}

fn is_constant(map: &SaliencyMap) -> bool {
    map.min() == map.max()
}

fn check_dims(
    metric: &'static str,
    sal: &SaliencyMap,
    fix: &FixationSet,
) -> Result<(), MetricError> {
    if (sal.width(), sal.height()) != (fix.width(), fix.height()) {
        return Err(MetricError::DimMismatch {
            metric,
            expected: (fix.width(), fix.height()),
            got: (sal.width(), sal.height()),
        });
    }
    if fix.is_empty() {
        return Err(MetricError::EmptyFixations { metric });
    }
    Ok(())
}

/// ROC area over every distinct value as a threshold, trapezoid rule,
/// implicit (0,0) start. Ties contribute one half.
fn roc_auc_values(pos: &[f64], neg: &[f64]) -> f64 {
    debug_assert!(!pos.is_empty() && !neg.is_empty());
    let mut thresholds: Vec<f64> = pos.iter().chain(neg.iter()).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut pos_sorted = pos.to_vec();
    pos_sorted.sort_by(|a, b| b.total_cmp(a));
    let mut neg_sorted = neg.to_vec();
    neg_sorted.sort_by(|a, b| b.total_cmp(a));

    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    let (mut ip, mut in_) = (0usize, 0usize);
    let (mut prev_fpr, mut prev_tpr) = (0.0f64, 0.0f64);
    let mut area = 0.0f64;
    for &t in &thresholds {
        while ip < pos_sorted.len() && pos_sorted[ip] >= t {
            ip += 1;
        }
        while in_ < neg_sorted.len() && neg_sorted[in_] >= t {
            in_ += 1;
        }
        let tpr = ip as f64 / np;
        let fpr = in_ as f64 / nn;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    area
}

/// AUC with non-fixated pixels as negatives.
///
/// Fixations landing on the same pixel count once: the positive class is the
/// set of fixated pixels, the negative class is everything else.
pub fn auc_judd(sal: &SaliencyMap, fix: &FixationSet) -> Result<MetricOutcome, MetricError> {
    check_dims("auc_judd", sal, fix)?;
    let mut fixated = vec![false; sal.width() * sal.height()];
    for &(x, y) in fix.points() {
        fixated[y * sal.width() + x] = true;
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &v) in sal.values().iter().enumerate() {
        if fixated[i] {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }
    if neg.is_empty() {
        // Every pixel fixated: no negative class, chance by convention.
        return Ok(MetricOutcome::degenerate(0.5));
    }
    let value = roc_auc_values(&pos, &neg);
    if is_constant(sal) {
        Ok(MetricOutcome::degenerate(value))
    } else {
        Ok(MetricOutcome::ok(value))
    }
}

/// AUC averaged over random splits; each split draws `|fix|` negative pixel
/// locations uniformly over the image. Deterministic under `seed`.
pub fn auc_borji(
    sal: &SaliencyMap,
    fix: &FixationSet,
    n_splits: usize,
    seed: u64,
) -> Result<MetricOutcome, MetricError> {
    check_dims("auc_borji", sal, fix)?;
    let pos: Vec<f64> = fix.points().iter().map(|&(x, y)| sal.get(x, y)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let npix = sal.width() * sal.height();
    let mut total = 0.0;
    for _ in 0..n_splits.max(1) {
        let neg: Vec<f64> = (0..fix.len())
            .map(|_| sal.values()[rng.gen_range(0..npix)])
            .collect();
        total += roc_auc_values(&pos, &neg);
    }
    let value = total / n_splits.max(1) as f64;
    if is_constant(sal) {
        Ok(MetricOutcome::degenerate(value))
    } else {
        Ok(MetricOutcome::ok(value))
    }
}

/// Shuffled AUC: negatives are drawn from fixations recorded on *other*
/// images, which penalizes predictions that only reproduce the center bias.
pub fn sauc(
    sal: &SaliencyMap,
    fix: &FixationSet,
    other_fix: &FixationSet,
    n_splits: usize,
    seed: u64,
) -> Result<MetricOutcome, MetricError> {
    check_dims("sauc", sal, fix)?;
    if other_fix.is_empty() {
        return Err(MetricError::EmptyPool);
    }
    if (other_fix.width(), other_fix.height()) != (sal.width(), sal.height()) {
        return Err(MetricError::DimMismatch {
            metric: "sauc",
            expected: (sal.width(), sal.height()),
            got: (other_fix.width(), other_fix.height()),
        });
    }
    let pos: Vec<f64> = fix.points().iter().map(|&(x, y)| sal.get(x, y)).collect();
    let pool = other_fix.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n_splits.max(1) {
        let neg: Vec<f64> = (0..fix.len())
            .map(|_| {
                let (x, y) = pool[rng.gen_range(0..pool.len())];
                sal.get(x, y)
            })
            .collect();
        total += roc_auc_values(&pos, &neg);
    }
    let value = total / n_splits.max(1) as f64;
    if is_constant(sal) {
        Ok(MetricOutcome::degenerate(value))
    } else {
        Ok(MetricOutcome::ok(value))
    }
}

/// Normalized scanpath saliency: mean z-scored map value at fixated pixels.
/// Uses the population standard deviation; a constant map scores 0, flagged.
pub fn nss(sal: &SaliencyMap, fix: &FixationSet) -> Result<MetricOutcome, MetricError> {
    check_dims("nss", sal, fix)?;
    if is_constant(sal) {
        return Ok(MetricOutcome::degenerate(0.0));
    }
    let n = sal.values().len() as f64;
    let mean = sal.values().iter().sum::<f64>() / n;
    let var = sal
        .values()
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    if var <= 0.0 {
        return Ok(MetricOutcome::degenerate(0.0));
    }
    let sd = var.sqrt();
    let z: f64 = fix
        .points()
        .iter()
        .map(|&(x, y)| (sal.get(x, y) - mean) / sd)
        .sum();
    Ok(MetricOutcome::ok(z / fix.len() as f64))
}

/// Pearson correlation between the two maps as flattened vectors.
pub fn cc(sal: &SaliencyMap, gt: &DensityMap) -> Result<MetricOutcome, MetricError> {
    if (sal.width(), sal.height()) != (gt.width(), gt.height()) {
        return Err(MetricError::DimMismatch {
            metric: "cc",
            expected: (gt.width(), gt.height()),
            got: (sal.width(), sal.height()),
        });
    }
    let a = sal.values();
    let b = gt.values();
    let a_constant = a.iter().all(|&v| v == a[0]);
    let b_constant = b.iter().all(|&v| v == b[0]);
    if a_constant || b_constant {
        return Ok(MetricOutcome::degenerate(0.0));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return Ok(MetricOutcome::degenerate(0.0));
    }
    Ok(MetricOutcome::ok(cov / (va.sqrt() * vb.sqrt())))
}

fn to_distribution(values: &[f64]) -> Vec<f64> {
    let sum: f64 = values.iter().sum();
    if sum > 0.0 {
        values.iter().map(|&v| v / sum).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// `KL(gt || sal)`: divergence of the prediction from the human density map.
/// Both maps are normalized to sum one; epsilon guards keep every term finite.
pub fn kl_div(gt: &DensityMap, sal: &SaliencyMap) -> Result<f64, MetricError> {
    if (sal.width(), sal.height()) != (gt.width(), gt.height()) {
        return Err(MetricError::DimMismatch {
            metric: "kl",
            expected: (gt.width(), gt.height()),
            got: (sal.width(), sal.height()),
        });
    }
    let p = to_distribution(gt.values());
    let q = to_distribution(sal.values());
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(&q) {
        kl += pi * ((pi + KL_EPSILON) / (qi + KL_EPSILON)).ln();
    }
    Ok(kl)
}

/// Histogram intersection of the two maps as distributions: `sum(min(p, q))`.
pub fn sim(sal: &SaliencyMap, gt: &DensityMap) -> Result<f64, MetricError> {
    if (sal.width(), sal.height()) != (gt.width(), gt.height()) {
        return Err(MetricError::DimMismatch {
            metric: "sim",
            expected: (gt.width(), gt.height()),
            got: (sal.width(), sal.height()),
        });
    }
    let p = to_distribution(gt.values());
    let q = to_distribution(sal.values());
    Ok(p.iter().zip(&q).map(|(&a, &b)| a.min(b)).sum())
}

/// Settings shared by one evaluation sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_splits: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_splits: 100,
            seed: 0,
        }
    }
}

/// Warning flags raised while evaluating one image.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub constant_prediction: bool,
    pub constant_ground_truth: bool,
}

/// All seven metrics for one image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub image_id: String,
    pub auc_judd: f64,
    pub auc_borji: f64,
    pub sauc: f64,
    pub nss: f64,
    pub cc: f64,
    pub kl: f64,
    pub sim: f64,
    pub flags: MetricFlags,
}

/// Evaluates one prediction against fixations and the density ground truth.
///
/// The prediction is resized (bilinearly) to the fixation grid for the
/// location-based metrics and to the ground-truth grid for the distribution
/// metrics; fixation coordinates are never rescaled.
pub fn evaluate_all(
    image_id: &str,
    sal: &SaliencyMap,
    fix: &FixationSet,
    gt: &DensityMap,
    pool: &FixationSet,
    config: EvalConfig,
) -> Result<MetricRow, MetricError> {
    let sal_fix = sal.resize_bilinear(fix.width(), fix.height());
    let sal_gt = sal.resize_bilinear(gt.width(), gt.height());
    let judd = auc_judd(&sal_fix, fix)?;
    let borji = auc_borji(&sal_fix, fix, config.n_splits, config.seed)?;
    let shuffled = sauc(
        &sal_fix,
        fix,
        pool,
        config.n_splits,
        config.seed.wrapping_add(1),
    )?;
    let nss_v = nss(&sal_fix, fix)?;
    let cc_v = cc(&sal_gt, gt)?;
    let kl_v = kl_div(gt, &sal_gt)?;
    let sim_v = sim(&sal_gt, gt)?;
    let gt_constant = gt.values().iter().all(|&v| v == gt.values()[0]);
    Ok(MetricRow {
        image_id: image_id.to_string(),
        auc_judd: judd.value,
        auc_borji: borji.value,
        sauc: shuffled.value,
        nss: nss_v.value,
        cc: cc_v.value,
        kl: kl_v,
        sim: sim_v,
        flags: MetricFlags {
            constant_prediction: judd.degenerate || nss_v.degenerate,
            constant_ground_truth: gt_constant,
        },
    })
}

/// Dataset means over the finite per-image values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricMeans {
    pub auc_judd: f64,
    pub auc_borji: f64,
    pub sauc: f64,
    pub nss: f64,
    pub cc: f64,
    pub kl: f64,
    pub sim: f64,
}

/// Per-image rows plus aggregates for one dataset sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub means: MetricMeans,
    pub count: usize,
    pub config: EvalConfig,
}

impl MetricReport {
    pub fn from_rows(rows: Vec<MetricRow>, config: EvalConfig) -> Self {
        fn mean(values: impl Iterator<Item = f64>) -> f64 {
            let mut sum = 0.0;
            let mut n = 0usize;
            for v in values.filter(|v| v.is_finite()) {
                sum += v;
                n += 1;
            }
            if n == 0 {
                f64::NAN
            } else {
                sum / n as f64
            }
        }
        let means = MetricMeans {
            auc_judd: mean(rows.iter().map(|r| r.auc_judd)),
            auc_borji: mean(rows.iter().map(|r| r.auc_borji)),
            sauc: mean(rows.iter().map(|r| r.sauc)),
            nss: mean(rows.iter().map(|r| r.nss)),
            cc: mean(rows.iter().map(|r| r.cc)),
            kl: mean(rows.iter().map(|r| r.kl)),
            sim: mean(rows.iter().map(|r| r.sim)),
        };
        let count = rows.len();
        Self {
            rows,
            means,
            count,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV with one row per image and the fixed column order
    /// `image_id,auc_judd,auc_borji,sauc,nss,cc,kl,sim`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,auc_judd,auc_borji,sauc,nss,cc,kl,sim\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.image_id, r.auc_judd, r.auc_borji, r.sauc, r.nss, r.cc, r.kl, r.sim
            ));
        }
        out
    }
}

/// Builds the shuffled-AUC negative pool for one image: fixations of every
/// *other* image that fall inside `width`x`height`.
pub fn sauc_pool(
    all: &[FixationSet],
    exclude: usize,
    width: usize,
    height: usize,
) -> Result<FixationSet, MetricError> {
    let mut points = Vec::new();
    for (i, fs) in all.iter().enumerate() {
        if i == exclude {
            continue;
        }
        for &(x, y) in fs.points() {
            if x < width && y < height {
                points.push((x, y));
            }
        }
    }
    FixationSet::new(width, height, points)
}

/// Ground truth used as its own prediction: the upper-bound sanity pattern.
pub fn density_as_prediction(gt: &DensityMap) -> SaliencyMap {
    SaliencyMap::new(gt.width(), gt.height(), gt.values().to_vec()).expect("density is a valid map")
}
