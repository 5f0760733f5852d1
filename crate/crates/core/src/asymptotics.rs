//! Interval-collapse asymptotics of candidate fields: log-log exponent fits,
//! the two-leg test, Δ−-rescaled limits, the two-channel decomposition and
//! grid scans of the far- and adjacent-pair bounds.
//!
//! Interval lengths are always read back from the realized coordinates, so a
//! field that depends on differences sees exactly the δ used in the fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{kpz, theta1, ConformalWeight, KpzPair};
use crate::heat_kernel::logspace;
use crate::parallel;
use crate::pde::{Candidate, PointConfig, WeightAssignment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    /// root-mean-square log residual
    pub rms: f64,
}

/// OLS slope of log|y| against log x.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<ExponentEstimate> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::DegenerateFit("need at least three samples".into()));
    }
    if ys.iter().all(|&y| y == 0.0) {
        return Err(Error::DegenerateFit("field vanishes on the whole grid".into()));
    }
    if ys.iter().any(|&y| y == 0.0 || !y.is_finite()) || xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateFit("zero or non-finite sample on the grid".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("grid has no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Ok(ExponentEstimate {
        p_hat: slope,
        stderr: (ssr / (n - 2.0) / sxx).sqrt(),
        intercept,
        deltas: xs.to_vec(),
        values: ys.to_vec(),
        rms: (ssr / n).sqrt(),
    })
}

/// Collapse of x_i onto x_{i−1} (1-based, 2 ≤ i ≤ M).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseSpec {
    pub i: usize,
    pub weights: WeightAssignment,
}

impl CollapseSpec {
    pub fn new(i: usize, weights: WeightAssignment) -> Result<Self> {
        if i < 2 {
            return Err(Error::domain("collapse index i must be at least 2"));
        }
        Ok(CollapseSpec { i, weights })
    }

    /// θ1 unless the interval (x_{i−1}, x_i) has x_ι as an endpoint.
    pub fn effective_weight(&self) -> ConformalWeight {
        let iota = self.weights.iota;
        if self.i == iota || self.i == iota + 1 {
            self.weights.h
        } else {
            theta1(self.weights.kappa)
        }
    }

    pub fn pair(&self) -> Result<KpzPair> {
        kpz(self.effective_weight(), self.weights.kappa)
    }
}

/// Logarithmic δ grid: `points` samples over `decades` decades ending at
/// `top` times the local gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub top: f64,
    pub decades: f64,
    pub points: usize,
}

impl Default for DeltaGrid {
    fn default() -> Self {
        DeltaGrid {
            top: 1e-6,
            decades: 8.0,
            points: 41,
        }
    }
}

fn check_collapse(f: &dyn Candidate, config: &PointConfig, spec: &CollapseSpec) -> Result<()> {
    if f.arity() != config.len() {
        return Err(Error::precondition(format!(
            "candidate {} takes {} points, configuration has {}",
            f.name(),
            f.arity(),
            config.len()
        )));
    }
    if spec.i > config.len() {
        return Err(Error::domain(format!("collapse index must be at most {}", config.len())));
    }
    Ok(())
}

/// Samples (δ, F) with x_i = x_{i−1} + δ; δ is read back from the coordinates.
fn collapse_samples(
    f: &dyn Candidate,
    config: &PointConfig,
    i: usize,
    deltas: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let base = config.x(i - 1);
    let mut ds = Vec::with_capacity(deltas.len());
    let mut vs = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let c = config.with(i, base + d)?;
        let real = c.x(i) - c.x(i - 1);
        ds.push(real);
        vs.push(f.eval(c.coords()));
    }
    Ok((ds, vs))
}

fn local_gap(config: &PointConfig, i: usize) -> f64 {
    config.x(i) - config.x(i - 1)
}

fn grid_deltas(config: &PointConfig, i: usize, grid: &DeltaGrid) -> Vec<f64> {
    let hi = grid.top * local_gap(config, i);
    logspace(hi * 10f64.powf(-grid.decades), hi, grid.points)
}

pub fn collapse_exponent(
    f: &dyn Candidate,
    config: &PointConfig,
    spec: &CollapseSpec,
    grid: &DeltaGrid,
) -> Result<ExponentEstimate> {
    check_collapse(f, config, spec)?;
    if grid.decades < 5.0 {
        return Err(Error::precondition("exponent fits need at least five decades"));
    }
    let (ds, vs) = collapse_samples(f, config, spec.i, &grid_deltas(config, spec.i, grid))?;
    fit_exponent(&ds, &vs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoLegVerdict {
    TwoLeg,
    NotTwoLeg,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLegResult {
    pub verdict: TwoLegVerdict,
    pub p_hat: f64,
    pub stderr: f64,
    pub delta_minus: f64,
    pub threshold: f64,
}

/// Largest slope standard error for which the test still decides.
pub const TWO_LEG_MAX_STDERR: f64 = 1e-2;

/// δ^{−Δ−(d)}F → 0, decided as p̂ > Δ−(d) + 3·stderr + 1e−3.
pub fn two_leg_test(
    f: &dyn Candidate,
    config: &PointConfig,
    spec: &CollapseSpec,
    grid: &DeltaGrid,
) -> Result<TwoLegResult> {
    let est = collapse_exponent(f, config, spec, grid)?;
    let dm = spec.pair()?.delta_minus;
    let threshold = dm + 3.0 * est.stderr + 1e-3;
    let verdict = if est.stderr > TWO_LEG_MAX_STDERR {
        TwoLegVerdict::Indeterminate
    } else if est.p_hat > threshold {
        TwoLegVerdict::TwoLeg
    } else {
        TwoLegVerdict::NotTwoLeg
    };
    Ok(TwoLegResult {
        verdict,
        p_hat: est.p_hat,
        stderr: est.stderr,
        delta_minus: dm,
        threshold,
    })
}

/// Repeated Aitken Δ² acceleration of a sequence converging geometrically.
pub fn aitken_limit(seq: &[f64]) -> f64 {
    let mut s = seq.to_vec();
    while s.len() >= 3 {
        let mut next = Vec::with_capacity(s.len() - 2);
        for w in s.windows(3) {
            let d2 = w[2] - 2.0 * w[1] + w[0];
            let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if d2.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                next.push(w[2]);
            } else {
                next.push(w[2] - (w[2] - w[1]).powi(2) / d2);
            }
        }
        s = next;
    }
    *s.last().expect("non-empty sequence")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllLimit {
    /// extrapolated limit of H at each slice configuration
    pub limits: Vec<f64>,
    pub deltas: Vec<f64>,
    /// sup over the slice of |H(δ_k) − limit|, one entry per δ_k
    pub uniformity: Vec<f64>,
}

impl EllLimit {
    pub fn uniform(&self) -> bool {
        self.uniformity.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-14)
    }
}

/// Limits of H = δ^{−Δ−(d)}F along δ_k = δ₀·2^{−k}, for each configuration
/// of a slice (which fixes every coordinate but x_i).
pub fn ell_limit(
    f: &dyn Candidate,
    slice: &[PointConfig],
    spec: &CollapseSpec,
    steps: usize,
) -> Result<EllLimit> {
    if slice.is_empty() || steps < 4 {
        return Err(Error::precondition("need a non-empty slice and at least four steps"));
    }
    let dm = spec.pair()?.delta_minus;
    let gap = slice.iter().map(|c| local_gap(c, spec.i)).fold(f64::INFINITY, f64::min);
    let d0 = 1e-2 * gap;
    let deltas: Vec<f64> = (0..steps).map(|k| d0 * f64::powi(0.5, k as i32)).collect();
    let mut sequences = Vec::with_capacity(slice.len());
    for c in slice {
        check_collapse(f, c, spec)?;
        let (ds, vs) = collapse_samples(f, c, spec.i, &deltas)?;
        let h: Vec<f64> = ds.iter().zip(&vs).map(|(d, v)| d.powf(-dm) * v).collect();
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergent { tail_ratios: tail_ratios(&h) });
        }
        let ratios = tail_ratios(&h);
        let size = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = (h[steps - 1] - h[steps - 2]).abs();
        // successive differences must shrink unless already at round-off
        if last > 1e-12 * size && ratios.iter().rev().take(3).any(|r| r.abs() >= 1.0) {
            return Err(Error::Divergent { tail_ratios: ratios });
        }
        sequences.push(h);
    }
    let limits: Vec<f64> = sequences.iter().map(|h| aitken_limit(h)).collect();
    let uniformity = (0..steps)
        .map(|k| {
            sequences
                .iter()
                .zip(&limits)
                .map(|(h, l)| (h[k] - l).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(EllLimit {
        limits,
        deltas,
        uniformity,
    })
}

/// Ratios of successive differences of a sequence.
fn tail_ratios(h: &[f64]) -> Vec<f64> {
    let diffs: Vec<f64> = h.windows(2).map(|w| w[1] - w[0]).collect();
    diffs
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .collect()
}

/// `count` copies of `config` with the 1-based coordinate `k` spread over
/// [lo, hi].
pub fn slice_configs(config: &PointConfig, k: usize, lo: f64, hi: f64, count: usize) -> Result<Vec<PointConfig>> {
    (0..count)
        .map(|n| {
            let v = if count == 1 { lo } else { lo + (hi - lo) * n as f64 / (count - 1) as f64 };
            config.with(k, v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// coefficient of δ^{Δ−(d)}
    pub a: f64,
    /// coefficient of δ^{Δ+(d)}
    pub b: f64,
    /// max relative misfit over the grid
    pub residual: f64,
}

/// Least-squares F ≈ A δ^{Δ−(d)} + B δ^{Δ+(d)} on [1e−6, 1e−1]·gap.
pub fn one_interval_decomposition_fit(
    f: &dyn Candidate,
    config: &PointConfig,
    spec: &CollapseSpec,
    points: usize,
) -> Result<Decomposition> {
    check_collapse(f, config, spec)?;
    let pair = spec.pair()?;
    if !(pair.gap > 0.05) {
        return Err(Error::precondition(format!(
            "exponents too close to separate (gap {})",
            pair.gap
        )));
    }
    let gap = local_gap(config, spec.i);
    let (ds, vs) = collapse_samples(f, config, spec.i, &logspace(1e-6 * gap, 1e-1 * gap, points))?;
    // divide by δ^{Δ−}: u = A + B δ^{⅄}
    let m = DMatrix::from_fn(ds.len(), 2, |r, c| if c == 0 { 1.0 } else { ds[r].powf(pair.gap) });
    let u = DVector::from_iterator(ds.len(), ds.iter().zip(&vs).map(|(d, v)| v * d.powf(-pair.delta_minus)));
    let sol = m
        .clone()
        .svd(true, true)
        .solve(&u, 1e-14)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let fitted = &m * &sol;
    let residual = fitted
        .iter()
        .zip(u.iter())
        .map(|(p, q)| (p - q).abs() / q.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(Decomposition {
        a: sol[0],
        b: sol[1],
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub delta: f64,
    pub eps: f64,
    pub value: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for PairGrid {
    fn default() -> Self {
        PairGrid {
            lo: 1e-8,
            hi: 1e-2,
            points: 13,
        }
    }
}

/// Growth slopes below this count as divergence.
pub const DIVERGENCE_SLOPE: f64 = -1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarPairScan {
    pub sup: f64,
    pub inf: f64,
    /// log-log slope of max_ε ratio against δ
    pub delta_slope: f64,
    /// log-log slope of max_δ ratio against ε
    pub eps_slope: f64,
    pub divergent: bool,
    pub rows: Vec<ScanRow>,
}

fn slope_of_max(rows: &[ScanRow], by_delta: bool) -> Result<f64> {
    let mut keys: Vec<f64> = rows.iter().map(|r| if by_delta { r.delta } else { r.eps }).collect();
    keys.sort_by(|a, b| a.total_cmp(b));
    keys.dedup();
    let maxes: Vec<f64> = keys
        .iter()
        .map(|k| {
            rows.iter()
                .filter(|r| (if by_delta { r.delta } else { r.eps }) == *k)
                .map(|r| r.ratio)
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(fit_exponent(&keys, &maxes)?.p_hat)
}

/// sup |F| / (δ^{Δ+(θ1)} ε^{Δ+(h)}) with δ = x_j − x_{j−1}, ε = x_ι − x_{ι−1}.
pub fn far_pair_bound_scan(
    f: &dyn Candidate,
    config: &PointConfig,
    j: usize,
    weights: &WeightAssignment,
    grid: &PairGrid,
) -> Result<FarPairScan> {
    let iota = weights.iota;
    let m = config.len();
    if f.arity() != m || j < 2 || iota < 2 || j > m || iota > m {
        return Err(Error::precondition("far-pair indices must lie in 2..=M"));
    }
    if j.abs_diff(iota) < 2 {
        return Err(Error::precondition("the two intervals must be neither adjacent nor identical"));
    }
    let p1 = kpz(theta1(weights.kappa), weights.kappa)?.delta_plus;
    let ph = kpz(weights.h, weights.kappa)?.delta_plus;
    let scale = local_gap(config, j).min(local_gap(config, iota));
    let ds = logspace(grid.lo * scale, grid.hi * scale, grid.points);
    let pts: Vec<(f64, f64)> = ds.iter().flat_map(|&d| ds.iter().map(move |&e| (d, e))).collect();
    let rows: Vec<Result<ScanRow>> = parallel::map(&pts, |&(d, e)| {
        let c = config
            .with(j, config.x(j - 1) + d)?
            .with(iota, config.x(iota - 1) + e)?;
        let (rd, re) = (c.x(j) - c.x(j - 1), c.x(iota) - c.x(iota - 1));
        let v = f.eval(c.coords());
        Ok(ScanRow {
            delta: rd,
            eps: re,
            value: v,
            ratio: v.abs() / (rd.powf(p1) * re.powf(ph)),
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let inf = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let delta_slope = slope_of_max(&rows, true)?;
    let eps_slope = slope_of_max(&rows, false)?;
    Ok(FarPairScan {
        sup,
        inf,
        delta_slope,
        eps_slope,
        divergent: !sup.is_finite() || delta_slope < DIVERGENCE_SLOPE || eps_slope < DIVERGENCE_SLOPE,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacentPairScan {
    pub sup: f64,
    pub inf: f64,
    /// (sup − inf) / sup
    pub spread: f64,
    /// ε exponent of |F| / (δ^{Δ+(θ1)} (ε−δ)^{Δ+(h)}) at fixed δ/ε, averaged over δ/ε
    pub eps_exponent: f64,
    /// −(ε exponent of |F|/δ^{Δ+(θ1)}) on δ < ε/2
    pub p1: f64,
    /// −(ε exponent of |F|/(ε−δ)^{Δ+(h)}) on δ > ε/2
    pub p2: f64,
    pub divergent: bool,
    pub rows: Vec<ScanRow>,
}

/// Scan of x_{ι−1} = x_{ι−2} + δ, x_ι = x_{ι−2} + ε over a triangle
/// 0 < δ < ε, normalized by δ^{Δ+(θ1)} ε^{Δ+(h)} (ε−δ)^{Δ+(h)}.
pub fn adjacent_pair_bound_scan(
    f: &dyn Candidate,
    config: &PointConfig,
    weights: &WeightAssignment,
    grid: &PairGrid,
    rho_points: usize,
) -> Result<AdjacentPairScan> {
    let iota = weights.iota;
    let m = config.len();
    if f.arity() != m || iota < 3 || iota > m {
        return Err(Error::precondition("adjacent-pair scan needs 3 <= iota <= M"));
    }
    if rho_points < 2 {
        return Err(Error::precondition("need at least two delta/eps ratios"));
    }
    let p1 = kpz(theta1(weights.kappa), weights.kappa)?.delta_plus;
    let ph = kpz(weights.h, weights.kappa)?.delta_plus;
    let room = if iota < m { config.x(iota + 1) } else { config.x(iota) + 1.0 } - config.x(iota - 2);
    let epss = logspace(grid.lo * room, grid.hi * room, grid.points);
    // ratios δ/ε strictly inside (0, 1), symmetric around 1/2
    let rhos: Vec<f64> = (1..=rho_points).map(|k| k as f64 / (rho_points + 1) as f64).collect();
    let pts: Vec<(f64, f64)> = epss.iter().flat_map(|&e| rhos.iter().map(move |&r| (r, e))).collect();
    let x0 = config.x(iota - 2);
    let samples: Vec<Result<(f64, ScanRow)>> = parallel::map(&pts, |&(r, e)| {
        let mut coords = config.coords().to_vec();
        coords[iota - 1] = x0 + e;
        coords[iota - 2] = x0 + r * e;
        let c = PointConfig::new(coords)?;
        let d = c.x(iota - 1) - c.x(iota - 2);
        let ee = c.x(iota) - c.x(iota - 2);
        let rest = c.x(iota) - c.x(iota - 1);
        let v = f.eval(c.coords());
        Ok((
            r,
            ScanRow {
                delta: d,
                eps: ee,
                value: v,
                ratio: v.abs() / (d.powf(p1) * ee.powf(ph) * rest.powf(ph)),
            },
        ))
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let rows: Vec<ScanRow> = samples.iter().map(|s| s.1).collect();

    let sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let inf = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);

    let mut eps_exponents = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for &rho in &rhos {
        let line: Vec<&ScanRow> = samples.iter().filter(|s| s.0 == rho).map(|s| &s.1).collect();
        let es: Vec<f64> = line.iter().map(|r| r.eps).collect();
        let without_eps: Vec<f64> = line
            .iter()
            .map(|r| r.value.abs() / (r.delta.powf(p1) * (r.eps - r.delta).powf(ph)))
            .collect();
        eps_exponents.push(fit_exponent(&es, &without_eps)?.p_hat);
        if rho < 0.5 {
            let v: Vec<f64> = line.iter().map(|r| r.value.abs() / r.delta.powf(p1)).collect();
            lower.push(-fit_exponent(&es, &v)?.p_hat);
        } else if rho > 0.5 {
            let v: Vec<f64> = line.iter().map(|r| r.value.abs() / (r.eps - r.delta).powf(ph)).collect();
            upper.push(-fit_exponent(&es, &v)?.p_hat);
        }
    }
    let eps_exponent = eps_exponents.iter().sum::<f64>() / eps_exponents.len() as f64;
    let eps_slope = slope_of_max(&rows, false)?;
    let worst = |v: &[f64]| v.iter().copied().fold(f64::NAN, f64::max);
    Ok(AdjacentPairScan {
        sup,
        inf,
        spread: (sup - inf) / sup,
        eps_exponent,
        p1: worst(&lower),
        p2: worst(&upper),
        divergent: !sup.is_finite() || eps_slope < DIVERGENCE_SLOPE,
        rows,
    })
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("delta,eps,abs_f,ratio\n");
    for r in rows {
        out.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.delta, r.eps, r.value.abs(), r.ratio));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{eigenvalue, leg_weight, Kappa};
    use crate::pde::{builtin_n1, manufactured, FieldContext, FnCandidate};

    fn k(v: f64) -> Kappa {
        Kappa::new(v).unwrap()
    }

    fn ctx(kv: f64) -> FieldContext {
        let kappa = k(kv);
        let h = leg_weight(2, kappa);
        FieldContext { kappa, h, lambda0: eigenvalue(0, h, kappa).unwrap().lambda }
    }

    fn cfg(x: &[f64]) -> PointConfig {
        PointConfig::new(x.to_vec()).unwrap()
    }

    #[test]
    fn pure_powers() {
        for p in [-3.0, -1.2, 0.0, 0.7, 3.0] {
            let xs = logspace(1e-8, 1e-2, 30);
            let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.5 * x.powf(p)).collect();
            let e = fit_exponent(&xs, &ys).unwrap();
            assert!((e.p_hat - p).abs() <= 1e-10 + 3.0 * e.stderr);
        }
        assert!(matches!(fit_exponent(&[1.0, 2.0, 3.0], &[0.0; 3]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn n1_collapse() {
        for kv in [2.0, 4.0, 6.0, 7.5] {
            let kappa = k(kv);
            let spec = CollapseSpec::new(2, WeightAssignment::uniform(kappa)).unwrap();
            let e = collapse_exponent(&builtin_n1(kappa), &cfg(&[0.3, 1.0]), &spec, &DeltaGrid::default()).unwrap();
            assert!((e.p_hat + 2.0 * theta1(kappa).value()).abs() <= 1e-3);
            let t = two_leg_test(&builtin_n1(kappa), &cfg(&[0.3, 1.0]), &spec, &DeltaGrid::default()).unwrap();
            assert_eq!(t.verdict, TwoLegVerdict::NotTwoLeg);
        }
    }

    #[test]
    fn manufactured_two_leg() {
        let c = ctx(10.0 / 3.0);
        let spec = CollapseSpec::new(2, WeightAssignment::uniform(c.kappa)).unwrap();
        let x = cfg(&[0.0, 1.0]);
        let f = manufactured("two-leg", &c).unwrap();
        assert_eq!(two_leg_test(f.as_ref(), &x, &spec, &DeltaGrid::default()).unwrap().verdict, TwoLegVerdict::TwoLeg);
        let f = manufactured("identity", &c).unwrap();
        assert_eq!(two_leg_test(f.as_ref(), &x, &spec, &DeltaGrid::default()).unwrap().verdict, TwoLegVerdict::NotTwoLeg);
    }

    #[test]
    fn limits() {
        let c = ctx(4.0);
        let spec = CollapseSpec::new(2, WeightAssignment::uniform(c.kappa)).unwrap();
        let slice = slice_configs(&cfg(&[0.0, 3.0]), 1, -1.0, 1.0, 20).unwrap();
        let l = ell_limit(&builtin_n1(c.kappa), &slice, &spec, 12).unwrap();
        assert!(l.limits.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let l = ell_limit(manufactured("two-leg", &c).unwrap().as_ref(), &slice, &spec, 30).unwrap();
        assert!(l.limits.iter().all(|v| v.abs() < 1e-6), "{:?}", l.limits);
        assert!(l.uniform());
        let l = ell_limit(manufactured("prefactor", &c).unwrap().as_ref(), &slice, &spec, 12).unwrap();
        for (v, s) in l.limits.iter().zip(&slice) {
            assert!((v - (s.x(1).powi(2) + 1.0)).abs() <= 1e-4);
        }
        let blow = FnCandidate { name: "blow".into(), arity: 2, f: |x: &[f64]| (x[1] - x[0]).powf(-3.0) };
        assert!(matches!(ell_limit(&blow, &slice, &spec, 12), Err(Error::Divergent { .. })));
    }

    #[test]
    fn decomposition() {
        let c = ctx(4.0);
        let spec = CollapseSpec::new(2, WeightAssignment::uniform(c.kappa)).unwrap();
        let x = cfg(&[0.0, 1.0]);
        let d = one_interval_decomposition_fit(manufactured("split", &c).unwrap().as_ref(), &x, &spec, 41).unwrap();
        assert!((d.a - 2.0).abs() <= 1e-6 && (d.b - 3.0).abs() <= 1e-6, "{d:?}");
        let d = one_interval_decomposition_fit(&builtin_n1(c.kappa), &x, &spec, 41).unwrap();
        assert!((d.a - 1.0).abs() <= 1e-6 && d.b.abs() <= 1e-6);
        let d = one_interval_decomposition_fit(manufactured("two-leg", &c).unwrap().as_ref(), &x, &spec, 41).unwrap();
        assert!(d.a.abs() <= 1e-6 && (d.b - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn far_pair() {
        let c = ctx(6.0);
        let w = WeightAssignment::new(4, c.h, c.kappa).unwrap();
        let x = cfg(&[0.0, 1.0, 2.0, 3.0]);
        let s = far_pair_bound_scan(manufactured("far-bounded", &c).unwrap().as_ref(), &x, 2, &w, &PairGrid::default()).unwrap();
        assert!(!s.divergent && s.sup.is_finite());
        let s = far_pair_bound_scan(manufactured("violating", &c).unwrap().as_ref(), &x, 2, &w, &PairGrid::default()).unwrap();
        assert!(s.divergent);
        assert!(far_pair_bound_scan(&builtin_n1(c.kappa), &cfg(&[0.0, 1.0]), 2, &w, &PairGrid::default()).is_err());
    }

    #[test]
    fn adjacent_pair() {
        let c = ctx(10.0 / 3.0);
        let w = WeightAssignment::new(3, c.h, c.kappa).unwrap();
        let x = cfg(&[0.0, 0.5, 1.0]);
        let s = adjacent_pair_bound_scan(manufactured("normalized", &c).unwrap().as_ref(), &x, &w, &PairGrid::default(), 9).unwrap();
        assert!(s.spread <= 1e-10, "{}", s.spread);
        assert!(!s.divergent);
        let s = adjacent_pair_bound_scan(manufactured("weakened", &c).unwrap().as_ref(), &x, &w, &PairGrid::default(), 9).unwrap();
        assert!(s.divergent);
        let s = adjacent_pair_bound_scan(manufactured("kernel-form", &c).unwrap().as_ref(), &x, &w, &PairGrid::default(), 9).unwrap();
        let ph = kpz(c.h, c.kappa).unwrap().delta_plus;
        assert!((s.eps_exponent - ph).abs() <= 1e-9);
    }
}
