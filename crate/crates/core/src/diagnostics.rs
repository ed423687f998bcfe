//! Discrepancies between sample sets.
//!
//! Two measures are provided: the mean marginal total variation (MMTV),
//! built from per-coordinate Gaussian kernel density estimates integrated
//! with adaptive Gauss–Kronrod quadrature, and the squared maximum mean
//! discrepancy (MMD²) under a Gaussian kernel whose bandwidth comes from
//! the median heuristic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_dim, ensure_finite, Error, Result};

/// Point sets larger than this are subsampled for the median heuristic.
pub const MEDIAN_SUBSAMPLE: usize = 2000;

/// Default seed for the median-heuristic subsample.
pub const MEDIAN_SEED: u64 = 0x6d65_6469_616e;

/// Absolute quadrature tolerance per coordinate in [`mmtv`].
pub const MMTV_TOLERANCE: f64 = 1e-8;

/// Maximum number of subintervals in [`gauss_kronrod`].
pub const MAX_INTERVALS: usize = 1 << 15;

/// Rows of `p` processed together when forming kernel sums.
const KERNEL_BLOCK: usize = 256;

/// A labelled `N × d` matrix of points, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: DMatrix<f64>,
    label: String,
}

impl SampleSet {
    pub fn new(points: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        if points.nrows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a sample set needs at least 2 points, got {}",
                points.nrows()
            )));
        }
        if points.ncols() == 0 {
            return Err(Error::InvalidArgument("sample points must have at least one coordinate".into()));
        }
        ensure_finite(points.as_slice(), "sample set")?;
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    /// Builds a one-dimensional set.
    pub fn from_values(values: &[f64], label: impl Into<String>) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values), label)
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn coordinate(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.points.as_slice()[i * n..(i + 1) * n]
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

/// How pairwise distances enter the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandwidthRule {
    /// `2σ² = median ‖xᵢ - xⱼ‖`.
    #[default]
    MedianDistance,
    /// `2σ² = median ‖xᵢ - xⱼ‖²`.
    MedianSquaredDistance,
}

/// Gaussian-kernel bandwidth from the median of pairwise distances of `q`
/// (all pairs `i < j`). Sets larger than [`MEDIAN_SUBSAMPLE`] are
/// subsampled without replacement using `seed`.
pub fn median_bandwidth(q: &SampleSet, rule: BandwidthRule, seed: u64) -> Result<f64> {
    let n = q.len();
    let rows: Vec<usize> = if n > MEDIAN_SUBSAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, n, MEDIAN_SUBSAMPLE).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };
    let points: Vec<DVector<f64>> = rows.iter().map(|&r| q.points.row(r).transpose()).collect();
    let mut distances: Vec<f64> = (0..points.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = &points[i];
            points[i + 1..].iter().map(move |pj| (pi - pj).norm_squared())
        })
        .collect();
    if rule == BandwidthRule::MedianDistance {
        distances.iter_mut().for_each(|v| *v = v.sqrt());
    }
    let median = exact_median(&mut distances);
    if median <= 0.0 {
        return Err(Error::DegenerateBandwidth(format!(
            "median pairwise distance of '{}' is zero",
            q.label
        )));
    }
    Ok((median / 2.0).sqrt())
}

fn exact_median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (below + upper)
    }
}

/// Cached pieces of one side of a kernel sum.
struct KernelSide<'a> {
    points: &'a DMatrix<f64>,
    norms: Vec<f64>,
}

impl<'a> KernelSide<'a> {
    fn new(points: &'a DMatrix<f64>) -> Self {
        let norms = points.row_iter().map(|r| r.norm_squared()).collect();
        Self { points, norms }
    }
}

/// Mean of `exp(-‖xᵢ - yⱼ‖²/(2σ²))` over all pairs, with the squared
/// distances formed from Gram blocks. Blocks are summed in a fixed order.
fn mean_kernel(x: &KernelSide<'_>, y: &KernelSide<'_>, sigma: f64) -> f64 {
    let scale = -0.5 / (sigma * sigma);
    let yt = y.points.transpose();
    let nx = x.points.nrows();
    let block_sums: Vec<f64> = (0..nx.div_ceil(KERNEL_BLOCK))
        .into_par_iter()
        .map(|b| {
            let start = b * KERNEL_BLOCK;
            let rows = KERNEL_BLOCK.min(nx - start);
            let gram = x.points.rows(start, rows) * &yt;
            let mut acc = CompensatedSum::default();
            for (j, column) in gram.column_iter().enumerate() {
                let yn = y.norms[j];
                let mut partial = 0.0;
                for (i, g) in column.iter().enumerate() {
                    let d2 = (x.norms[start + i] + yn - 2.0 * g).max(0.0);
                    partial += (scale * d2).exp();
                }
                acc.add(partial);
            }
            acc.value()
        })
        .collect();
    compensated_sum(block_sums) / (nx as f64 * y.points.nrows() as f64)
}

/// Biased (V-statistic) estimate of `MMD²(p, q)` with a Gaussian kernel of
/// bandwidth `sigma`. Diagonal terms are included, so the value is
/// non-negative up to rounding.
pub fn mmd2(p: &SampleSet, q: &SampleSet, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    ensure_dim(q.dim(), p.dim())?;
    let (ps, qs) = (KernelSide::new(&p.points), KernelSide::new(&q.points));
    Ok(mean_kernel(&ps, &ps, sigma) + mean_kernel(&qs, &qs, sigma) - 2.0 * mean_kernel(&ps, &qs, sigma))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("kernel bandwidth must be positive, got {sigma}")))
    }
}

/// Silverman's rule `1.06 s N^(-1/5)` with `s` the sample standard deviation.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument("Silverman's rule needs at least 2 samples".into()));
    }
    let mean = compensated_sum(samples.iter().copied()) / n as f64;
    let var = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
    let b = 1.06 * var.sqrt() * (n as f64).powf(-0.2);
    if b > 0.0 && b.is_finite() {
        Ok(b)
    } else {
        Err(Error::DegenerateBandwidth("samples have zero spread".into()))
    }
}

/// Terms kept in the per-cell Taylor expansion of the kernel.
const KDE_TERMS: usize = 32;

/// Cells further than this many bandwidths from the evaluation point are skipped.
const KDE_CUTOFF: f64 = 12.0;

/// One-dimensional Gaussian kernel density estimate.
///
/// Samples are binned into cells one bandwidth wide. Within a cell with
/// centre `c` the kernel factorises as `exp(-t²/2) exp(ts) exp(-s²/2)` with
/// `t = (x - c)/b`, `s = (y - c)/b`, `|s| ≤ 1/2`, and `exp(ts)` is expanded
/// to [`KDE_TERMS`] terms, so each evaluation costs a few dozen cells
/// rather than one exponential per sample. Truncation error is far below
/// double precision for `|t| ≤` [`KDE_CUTOFF`].
#[derive(Debug, Clone)]
pub struct KernelDensity {
    bandwidth: f64,
    origin: f64,
    /// Occupied cells, sorted by index, with their expansion coefficients.
    cells: Vec<(i64, [f64; KDE_TERMS])>,
    normalizer: f64,
    min: f64,
    max: f64,
}

impl KernelDensity {
    pub fn new(samples: &[f64], bandwidth: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("a density estimate needs at least 2 samples".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
        }
        ensure_finite(samples, "density samples")?;
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut keyed: Vec<(i64, f64)> = samples
            .iter()
            .map(|&y| {
                let u = (y - min) / bandwidth;
                let cell = u.floor();
                (cell as i64, u - (cell + 0.5))
            })
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut cells: Vec<(i64, [f64; KDE_TERMS])> = Vec::new();
        for (cell, s) in keyed {
            if cells.last().is_none_or(|c| c.0 != cell) {
                cells.push((cell, [0.0; KDE_TERMS]));
            }
            let moments = &mut cells.last_mut().expect("just pushed").1;
            let mut term = (-0.5 * s * s).exp();
            for (k, m) in moments.iter_mut().enumerate() {
                *m += term;
                term *= s / (k + 1) as f64;
            }
        }
        Ok(Self {
            bandwidth,
            origin: min,
            cells,
            normalizer: 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt()),
            min,
            max,
        })
    }

    /// Estimate with Silverman's bandwidth.
    pub fn silverman(samples: &[f64]) -> Result<Self> {
        Self::new(samples, silverman_bandwidth(samples)?)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Smallest and largest sample.
    pub fn range(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let u = (x - self.origin) / self.bandwidth;
        let lo = (u - 0.5 - KDE_CUTOFF).ceil();
        let hi = (u - 0.5 + KDE_CUTOFF).floor();
        let first = self.cells.partition_point(|c| (c.0 as f64) < lo);
        let mut total = 0.0;
        for (cell, moments) in self.cells[first..].iter().take_while(|c| c.0 as f64 <= hi) {
            let t = u - (*cell as f64 + 0.5);
            let series = moments.iter().rev().fold(0.0, |acc, &c| acc * t + c);
            total += (-0.5 * t * t).exp() * series;
        }
        total * self.normalizer
    }

    /// Direct `O(N)` evaluation, kept as a reference for the expansion.
    pub fn evaluate_direct(samples: &[f64], bandwidth: f64, x: f64) -> f64 {
        let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        let sum = compensated_sum(samples.iter().map(|y| {
            let z = (x - y) / bandwidth;
            (-0.5 * z * z).exp()
        }));
        sum * norm
    }

    /// Centres of occupied cells, used to lay out quadrature panels.
    fn occupied_centres(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells
            .iter()
            .map(|(k, _)| self.origin + (*k as f64 + 0.5) * self.bandwidth)
    }
}

/// Gaussian KDE of `samples` with the given bandwidth, as a closure.
pub fn kde_marginal(samples: &[f64], bandwidth: f64) -> Result<impl Fn(f64) -> f64> {
    let kde = KernelDensity::new(samples, bandwidth)?;
    Ok(move |x| kde.evaluate(x))
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// 15-point Kronrod estimate.
    pub kronrod: f64,
    /// Embedded 7-point Gauss estimate.
    pub gauss: f64,
    /// Error estimate with the usual `(200|K - G|/I~)^1.5` rescaling and a
    /// round-off floor.
    pub error: f64,
}

/// Evaluates the G7/K15 pair on `[a, b]`.
pub fn kronrod_panel<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut gauss = fc * GAUSS_WEIGHTS[3];
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut abs_sum = kronrod.abs();
    let mut values = [(0.0, 0.0); 7];
    for (j, slot) in values.iter_mut().enumerate() {
        let dx = half * KRONROD_NODES[j];
        let (f1, f2) = (f(centre - dx), f(centre + dx));
        *slot = (f1, f2);
        kronrod += KRONROD_WEIGHTS[j] * (f1 + f2);
        abs_sum += KRONROD_WEIGHTS[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += GAUSS_WEIGHTS[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = KRONROD_WEIGHTS[7] * (fc - mean).abs();
    for (j, (f1, f2)) in values.iter().enumerate() {
        asc += KRONROD_WEIGHTS[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let scale = half.abs();
    let (abs_sum, asc) = (abs_sum * scale, asc * scale);
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Panel {
        a,
        b,
        kronrod: kronrod * half,
        gauss: gauss * half,
        error,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.0.error == other.0.error
    }
}

impl Eq for ByError {}

impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.error.total_cmp(&other.0.error)
    }
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`: the panel with the largest error is bisected until the
/// summed error estimate drops below `tol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    gauss_kronrod_partition(f, &[a, b], tol)
}

/// As [`gauss_kronrod`], starting from the panels between consecutive
/// `breakpoints` (strictly increasing).
pub fn gauss_kronrod_partition<F: Fn(f64) -> f64 + ?Sized>(f: &F, breakpoints: &[f64], tol: f64) -> Result<Quadrature> {
    if breakpoints.len() < 2 {
        return Err(Error::InvalidArgument("need at least two breakpoints".into()));
    }
    ensure_finite(breakpoints, "integration limits")?;
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("integration limits must be strictly increasing".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut heap: BinaryHeap<ByError> = breakpoints
        .windows(2)
        .map(|w| ByError(kronrod_panel(f, w[0], w[1])))
        .collect();
    let total_error = |heap: &BinaryHeap<ByError>| compensated_sum(heap.iter().map(|p| p.0.error));
    let mut error = total_error(&heap);
    while error > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::AccuracyNotReached {
                estimate: compensated_sum(heap.iter().map(|p| p.0.kronrod)),
                error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("non-empty").0;
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod_panel(f, worst.a, mid);
        let right = kronrod_panel(f, mid, worst.b);
        error += left.error + right.error - worst.error;
        heap.push(ByError(left));
        heap.push(ByError(right));
        // Refresh the running total now and then to shed drift.
        if heap.len() % 64 == 0 {
            error = total_error(&heap);
        }
    }
    let mut panels: Vec<Panel> = heap.into_iter().map(|p| p.0).collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(Quadrature {
        value: compensated_sum(panels.iter().map(|p| p.kronrod)),
        error: compensated_sum(panels.iter().map(|p| p.error)),
        intervals: panels.len(),
    })
}

/// Beyond this many bandwidths from every sample, both estimates are
/// below `exp(-50)` times their peak and the integrand is dropped.
const NEGLIGIBLE_BANDWIDTHS: f64 = 10.0;

/// Total variation `½∫|p̂ - q̂|` between two marginal estimates, over the
/// union of both sample ranges widened by four bandwidths. Initial panels
/// are at most one bandwidth wide and only cover the region where either
/// estimate is non-negligible.
pub fn marginal_total_variation(p: &KernelDensity, q: &KernelDensity, tol: f64) -> Result<f64> {
    let width = p.bandwidth.max(q.bandwidth);
    let (lo, hi) = (p.min.min(q.min) - 4.0 * width, p.max.max(q.max) + 4.0 * width);
    let panel = p.bandwidth.min(q.bandwidth);

    // Merge the neighbourhoods of occupied cells into disjoint intervals.
    let mut spans: Vec<(f64, f64)> = p
        .occupied_centres()
        .map(|c| (c, p.bandwidth))
        .chain(q.occupied_centres().map(|c| (c, q.bandwidth)))
        .map(|(c, b)| {
            let reach = (NEGLIGIBLE_BANDWIDTHS + 0.5) * b;
            ((c - reach).max(lo), (c + reach).min(hi))
        })
        .filter(|(a, b)| a < b)
        .collect();
    spans.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in spans {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let total_length: f64 = merged.iter().map(|(a, b)| b - a).sum();
    let budget = (MAX_INTERVALS / 4) as f64;
    let panel = panel.max(total_length / budget);

    let integrand = |x: f64| (p.evaluate(x) - q.evaluate(x)).abs();
    let share = tol / merged.len() as f64;
    let mut total = CompensatedSum::default();
    for (a, b) in merged {
        let pieces = ((b - a) / panel).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=pieces)
            .map(|k| if k == pieces { b } else { a + (b - a) * k as f64 / pieces as f64 })
            .collect();
        total.add(gauss_kronrod_partition(&integrand, &breaks, share)?.value);
    }
    Ok(0.5 * total.value())
}

/// `(1/d) Σᵢ TV(p̂ᵢ, q̂ᵢ)` with Silverman-bandwidth marginal estimates.
pub fn mmtv(p: &SampleSet, q: &SampleSet) -> Result<f64> {
    ensure_dim(q.dim(), p.dim())?;
    let tvs: Vec<f64> = (0..p.dim())
        .into_par_iter()
        .map(|i| {
            let kp = KernelDensity::silverman(p.coordinate(i))?;
            let kq = KernelDensity::silverman(q.coordinate(i))?;
            marginal_total_variation(&kp, &kq, MMTV_TOLERANCE)
        })
        .collect::<Result<_>>()?;
    Ok(compensated_sum(tvs) / p.dim() as f64)
}

/// Both discrepancies of one sample set against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub mmtv: f64,
    pub mmd2: f64,
    /// Silverman bandwidths of the compared set, per coordinate.
    pub kde_bandwidths: Vec<f64>,
    /// Gaussian-kernel bandwidth from the reference set.
    pub kernel_bandwidth: f64,
    pub quadrature_tolerance: f64,
}

/// A reference set with its kernel bandwidth, self-similarity term and
/// marginal density estimates computed once.
pub struct Reference {
    set: SampleSet,
    sigma: f64,
    norms: Vec<f64>,
    self_term: f64,
    marginals: Vec<KernelDensity>,
}

impl Reference {
    pub fn new(set: SampleSet, rule: BandwidthRule, seed: u64) -> Result<Self> {
        let sigma = median_bandwidth(&set, rule, seed)?;
        Self::with_bandwidth(set, sigma)
    }

    pub fn with_bandwidth(set: SampleSet, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let side = KernelSide::new(&set.points);
        let self_term = mean_kernel(&side, &side, sigma);
        let norms = side.norms;
        let marginals = (0..set.dim())
            .map(|i| KernelDensity::silverman(set.coordinate(i)))
            .collect::<Result<_>>()?;
        Ok(Self {
            set,
            sigma,
            norms,
            self_term,
            marginals,
        })
    }

    pub fn set(&self) -> &SampleSet {
        &self.set
    }

    pub fn kernel_bandwidth(&self) -> f64 {
        self.sigma
    }

    pub fn mmd2(&self, p: &SampleSet) -> Result<f64> {
        ensure_dim(self.set.dim(), p.dim())?;
        let ps = KernelSide::new(&p.points);
        let qs = KernelSide {
            points: &self.set.points,
            norms: self.norms.clone(),
        };
        Ok(mean_kernel(&ps, &ps, self.sigma) + self.self_term - 2.0 * mean_kernel(&ps, &qs, self.sigma))
    }

    /// Returns the MMTV and the Silverman bandwidths of `p`.
    pub fn mmtv(&self, p: &SampleSet) -> Result<(f64, Vec<f64>)> {
        ensure_dim(self.set.dim(), p.dim())?;
        let parts: Vec<(f64, f64)> = (0..p.dim())
            .into_par_iter()
            .map(|i| {
                let kp = KernelDensity::silverman(p.coordinate(i))?;
                let tv = marginal_total_variation(&kp, &self.marginals[i], MMTV_TOLERANCE)?;
                Ok((tv, kp.bandwidth))
            })
            .collect::<Result<_>>()?;
        let mmtv = compensated_sum(parts.iter().map(|x| x.0)) / p.dim() as f64;
        Ok((mmtv, parts.into_iter().map(|x| x.1).collect()))
    }

    pub fn report(&self, p: &SampleSet) -> Result<DiscrepancyReport> {
        let (mmtv, kde_bandwidths) = self.mmtv(p)?;
        Ok(DiscrepancyReport {
            mmtv,
            mmd2: self.mmd2(p)?,
            kde_bandwidths,
            kernel_bandwidth: self.sigma,
            quadrature_tolerance: MMTV_TOLERANCE,
        })
    }
}
