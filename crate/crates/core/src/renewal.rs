//! Renewal measures `U = Σ_{n≥0} μ^{*n}`: exact lattice tables, the atomic
//! part `U_at`, windowed-mass suprema and Monte Carlo estimates.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Atom, InterarrivalSpec, MeanValue, RenewalClock};
use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::stats::{poisson_cdf, Estimate};
use crate::ETA;

pub const DEFAULT_MASS_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_TRIALS: u64 = 100_000;
const MAX_ATOMS: usize = 2_000_000;
const MAX_WINDOWS: usize = 4_000_000;
const MAX_DYADIC_LEVELS: u32 = 40;
const TRIAL_CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassSource {
    ExactRecursion,
    TruncatedConvolution,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalMassTable {
    pub span: f64,
    /// `masses[k] = U({k·span})`.
    pub masses: Vec<f64>,
    pub source: MassSource,
}

/// Probability mass function on `span · {1, 2, ..}`; `f[j] = μ({j·span})`, `f[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLaw {
    pub span: f64,
    f: Vec<f64>,
}

impl LatticeLaw {
    pub fn new(span: f64, masses: &[(u64, f64)]) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::invalid("span", "must be positive"));
        }
        let top = masses.iter().map(|&(k, _)| k).max().unwrap_or(0) as usize;
        let mut f = vec![0.0; top + 1];
        for &(k, m) in masses {
            if k == 0 {
                return Err(Error::invalid("masses", "mass at multiple 0"));
            }
            if !(m >= 0.0) {
                return Err(Error::invalid("masses", "masses must be non-negative"));
            }
            f[k as usize] += m;
        }
        let total: f64 = f.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("masses", format!("sum to {total}, not 1")));
        }
        Ok(Self { span, f })
    }

    pub fn from_spec(spec: &InterarrivalSpec) -> Result<Self> {
        let lattice = spec
            .lattice()
            .ok_or_else(|| Error::invalid("distribution", "not arithmetic (no lattice span found)"))?;
        let masses: Vec<(u64, f64)> = lattice
            .multiples
            .iter()
            .zip(spec.atoms())
            .map(|(&k, a)| (k, a.mass))
            .collect();
        Self::new(lattice.span, &masses)
    }

    pub fn mass(&self, j: usize) -> f64 {
        self.f.get(j).copied().unwrap_or(0.0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.f.iter().filter(|&&m| m > 0.0).count() == 1
    }

    pub fn mean(&self) -> f64 {
        self.span * self.f.iter().enumerate().map(|(j, m)| j as f64 * m).sum::<f64>()
    }
}

/// `u_0 = 1`, `u_k = Σ_{j=1}^k f_j u_{k−j}`.
pub fn arithmetic_renewal_masses(law: &LatticeLaw, k_max: usize) -> Result<RenewalMassTable> {
    if k_max < 1 {
        return Err(Error::invalid("K", "must be at least 1"));
    }
    let mut u = Vec::with_capacity(k_max + 1);
    u.push(1.0);
    for k in 1..=k_max {
        let top = k.min(law.f.len() - 1);
        let s: f64 = (1..=top).map(|j| law.f[j] * u[k - j]).sum();
        u.push(s);
    }
    Ok(RenewalMassTable {
        span: law.span,
        masses: u,
        source: MassSource::ExactRecursion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupMass {
    pub value: f64,
    pub k: usize,
}

/// `max_{k_min ≤ k ≤ K} u_k`, first maximiser on ties.
pub fn sup_arithmetic_mass(table: &RenewalMassTable, k_min: usize) -> SupMass {
    let mut best = SupMass { value: 0.0, k: k_min };
    for (k, &u) in table.masses.iter().enumerate().skip(k_min) {
        if u > best.value {
            best = SupMass { value: u, k };
        }
    }
    best
}

/// Parameters making the lattice block construction go through:
/// `c^M < η/2` and `P(Poisson(λd) ≤ 2M−2) < η/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArithmeticPlan {
    pub span: f64,
    pub c: f64,
    pub c_index: usize,
    pub block_size: u32,
    pub lambda: f64,
    /// `P(Poisson(λd) ≤ 2M − 2)`.
    pub infection_failure: f64,
}

pub fn plan_arithmetic(law: &LatticeLaw, k_max: usize) -> Result<ArithmeticPlan> {
    if law.is_degenerate() {
        return Err(Error::invalid(
            "distribution",
            "degenerate law: every lattice mass is 1 and no block size works",
        ));
    }
    let table = arithmetic_renewal_masses(law, k_max)?;
    let sup = sup_arithmetic_mass(&table, 1);
    if !(sup.value < 1.0) {
        return Err(Error::invalid("distribution", format!("sup u_k = {} is not below 1", sup.value)));
    }
    let half = ETA / 2.0;
    let mut m = 1u32;
    while sup.value.powi(m as i32) >= half {
        m += 1;
    }
    let lambda = lambda_for_blocks(m, law.span);
    Ok(ArithmeticPlan {
        span: law.span,
        c: sup.value,
        c_index: sup.k,
        block_size: m,
        lambda,
        infection_failure: poisson_cdf(lambda * law.span, 2 * m as u64 - 2),
    })
}

/// Smallest `λ` (to relative 1e-9) with `P(Poisson(λd) ≤ 2M−2) < η/2`.
pub fn lambda_for_blocks(block_size: u32, span: f64) -> f64 {
    let k = 2 * block_size as u64 - 2;
    let fails = |lam: f64| poisson_cdf(lam * span, k) >= ETA / 2.0;
    let mut hi = 1.0 / span;
    while fails(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if fails(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Truncated `Σ_{n=1}^N μ_at^{*n}`; the `n = 0` atom at the origin is left out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    /// Upper bound on the mass of every omitted term.
    pub truncation_deficit: f64,
    pub orders: u32,
}

impl AtomicMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
}

pub fn atomic_renewal_measure(atoms: &[Atom], mass_tolerance: f64) -> Result<AtomicMeasure> {
    if !(mass_tolerance > 0.0) {
        return Err(Error::invalid("mass_tolerance", "must be positive"));
    }
    let p: f64 = atoms.iter().map(|a| a.mass).sum();
    if atoms.is_empty() {
        return Ok(AtomicMeasure { atoms: Vec::new(), truncation_deficit: 0.0, orders: 0 });
    }
    if p >= 1.0 - 1e-12 {
        return Err(Error::invalid(
            "atomic_part",
            "atomic mass 1 gives infinite total mass; use arithmetic_renewal_masses",
        ));
    }
    let tail = |n: i32| p.powi(n + 1) / (1.0 - p);
    let mut orders = 1;
    while tail(orders) >= mass_tolerance {
        orders += 1;
    }
    let mut deficit = tail(orders);
    let mut total: Vec<Atom> = atoms.to_vec();
    let mut power: Vec<Atom> = atoms.to_vec();
    for _ in 2..=orders {
        let mut next = Vec::with_capacity(power.len() * atoms.len());
        for x in &power {
            for y in atoms {
                next.push(Atom { point: x.point + y.point, mass: x.mass * y.mass });
            }
        }
        power = merge_atoms(next);
        // negligible atoms are folded into the deficit to keep the support bounded
        if power.len() > MAX_ATOMS / 4 {
            let floor = mass_tolerance * 1e-6 / power.len() as f64;
            deficit += power.iter().filter(|a| a.mass < floor).map(|a| a.mass).sum::<f64>();
            power.retain(|a| a.mass >= floor);
        }
        total.extend_from_slice(&power);
        total = merge_atoms(total);
        if total.len() > MAX_ATOMS {
            return Err(Error::Resource(format!("more than {MAX_ATOMS} atoms in U_at")));
        }
    }
    Ok(AtomicMeasure {
        atoms: total,
        truncation_deficit: deficit,
        orders: orders as u32,
    })
}

fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.point.total_cmp(&b.point));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if (a.point - last.point).abs() <= 1e-12 * a.point => last.mass += a.mass,
            _ => out.push(a),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowReport {
    pub kappa: f64,
    pub sup_estimate: f64,
    pub a_star: f64,
    pub threshold: f64,
    pub passes: bool,
}

impl WindowReport {
    fn new(kappa: f64, sup_estimate: f64, a_star: f64) -> Self {
        let threshold = ETA / 2.0;
        Self { kappa, sup_estimate, a_star, threshold, passes: sup_estimate < threshold }
    }
}

/// `sup_{a≥0} U_at((a, a+κ])` for the truncated measure, plus its deficit.
pub fn sup_window_mass(measure: &AtomicMeasure, kappa: f64) -> Result<WindowReport> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    let (sup, a_star) = atomic_window_sup(&measure.atoms, kappa);
    Ok(WindowReport::new(kappa, sup + measure.truncation_deficit, a_star))
}

fn atomic_window_sup(atoms: &[Atom], kappa: f64) -> (f64, f64) {
    let mut prefix = Vec::with_capacity(atoms.len() + 1);
    prefix.push(0.0);
    for a in atoms {
        prefix.push(prefix.last().unwrap() + a.mass);
    }
    let mut best = (0.0, 0.0);
    for (j, a) in atoms.iter().enumerate() {
        // the window with right end on atom j, pushed right if it would start below 0
        let start = (a.point - kappa).max(0.0);
        let end = start + kappa;
        let lo = atoms.partition_point(|b| b.point <= start);
        let hi = atoms.partition_point(|b| b.point <= end).max(j + 1);
        let mass = prefix[hi] - prefix[lo];
        if mass > best.0 {
            best = (mass, start);
        }
    }
    best
}

/// Lattice laws: exact window suprema of the table `u_k`, `k ≥ 1`.
fn lattice_window_sup(table: &RenewalMassTable, kappa: f64) -> (f64, f64) {
    let ratio = kappa / table.span;
    let width = if (ratio - ratio.round()).abs() < 1e-12 {
        ratio.round() as usize
    } else {
        ratio.floor() as usize + 1
    };
    let u = &table.masses;
    let mut best = (0.0, 0.0);
    let mut sum: f64 = u.iter().skip(1).take(width).sum();
    for k in 1..u.len().saturating_sub(width) {
        if sum > best.0 {
            let start = ((k + width - 1) as f64 * table.span - kappa).max(0.0);
            best = (sum, start);
        }
        sum += u[k + width] - u[k];
    }
    best
}

/// Monte Carlo estimate of `U((a, b]) = E #{n ≥ 1 : S_n ∈ (a, b]}`.
pub fn mc_interval_mass(spec: &InterarrivalSpec, a: f64, b: f64, trials: u64, seed: u64) -> Result<Estimate> {
    if !(0.0 <= a && a < b && b.is_finite()) {
        return Err(Error::invalid("interval", "need 0 <= a < b"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_stream(seed, i);
            let mut clock = RenewalClock::new(spec);
            let mut count = 0u64;
            loop {
                let t = clock.next_epoch(&mut rng);
                if t > b {
                    break;
                }
                if t > a {
                    count += 1;
                }
            }
            (count, count * count)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(Estimate::from_sums(sum as f64, sum_sq as f64, trials))
}

/// Supremum over the grid windows `(j·δ/4, j·δ/4 + δ]` of Monte Carlo window means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSup {
    pub delta: f64,
    pub sup_mean: f64,
    /// Largest `mean + half_width` over all windows.
    pub sup_upper: f64,
    pub a_star: f64,
    pub windows: usize,
}

/// Window scan of the continuous part `U_cont`: only epochs whose partial sum
/// used at least one continuous draw are counted.
fn scan_continuous(spec: &InterarrivalSpec, delta: f64, reach: f64, trials: u64, seed: u64) -> Result<ScanSup> {
    let bin = delta / 4.0;
    let n_bins = (reach / bin).ceil() as usize + 4;
    let n_windows = n_bins - 3;
    if n_windows > MAX_WINDOWS {
        return Err(Error::Resource(format!("{n_windows} windows exceed cap {MAX_WINDOWS}")));
    }
    let horizon = n_bins as f64 * bin;
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .fold(
            || (vec![0u64; n_windows], vec![0u64; n_windows], Vec::new()),
            |(mut sum, mut sum_sq, mut bins), c| {
                let end = ((c + 1) * TRIAL_CHUNK).min(trials);
                for i in c * TRIAL_CHUNK..end {
                    bins.clear();
                    let mut rng = derive_stream(seed, i);
                    let mut clock = RenewalClock::new(spec);
                    loop {
                        let (t, atomic) = clock.next_tagged(&mut rng);
                        if t > horizon {
                            break;
                        }
                        if !atomic {
                            bins.push(((t / bin).ceil() as usize).max(1) - 1);
                        }
                    }
                    accumulate_windows(&bins, &mut sum, &mut sum_sq);
                }
                (sum, sum_sq, bins)
            },
        )
        .map(|(s, q, _)| (s, q))
        .reduce(
            || (vec![0u64; n_windows], vec![0u64; n_windows]),
            |(mut s1, mut q1), (s2, q2)| {
                s1.iter_mut().zip(&s2).for_each(|(a, b)| *a += b);
                q1.iter_mut().zip(&q2).for_each(|(a, b)| *a += b);
                (s1, q1)
            },
        );
    let mut out = ScanSup { delta, sup_mean: 0.0, sup_upper: 0.0, a_star: 0.0, windows: n_windows };
    for j in 0..n_windows {
        let e = Estimate::from_sums(sum[j] as f64, sum_sq[j] as f64, trials);
        out.sup_mean = out.sup_mean.max(e.mean);
        if e.upper() > out.sup_upper {
            out.sup_upper = e.upper();
            out.a_star = j as f64 * bin;
        }
    }
    Ok(out)
}

/// Adds one trial's per-window counts (and their squares) given its sorted bin list.
fn accumulate_windows(bins: &[usize], sum: &mut [u64], sum_sq: &mut [u64]) {
    let n = sum.len();
    let mut last = None;
    for &b in bins {
        for j in b.saturating_sub(3)..=b {
            if j >= n || last.is_some_and(|l| j <= l) {
                continue;
            }
            let lo = bins.partition_point(|&x| x < j);
            let hi = bins.partition_point(|&x| x <= j + 3);
            let c = (hi - lo) as u64;
            sum[j] += c;
            sum_sq[j] += c * c;
            last = Some(j);
        }
    }
}

fn scan_reach(spec: &InterarrivalSpec) -> f64 {
    match spec.mean() {
        MeanValue::Finite(m) => (20.0 * m).min(200.0),
        MeanValue::Infinite => 200.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub epsilon: f64,
    /// First grid `δ` that passed, if any.
    pub delta: Option<f64>,
    /// Scan results for every grid point tried, in order.
    pub scans: Vec<ScanSup>,
}

/// Scans the grid in the given order and stops at the first `δ` with
/// estimated `sup_a U_cont((a, a+δ]) + CI < ε`.
pub fn continuous_window_diagnostic(
    spec: &InterarrivalSpec,
    epsilon: f64,
    grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<DiagnosticReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    if grid.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid("grid", "every delta must be positive"));
    }
    let mut report = DiagnosticReport { epsilon, delta: None, scans: Vec::new() };
    let reach = scan_reach(spec);
    for (level, &delta) in grid.iter().enumerate() {
        let scan = if spec.continuous_mass() == 0.0 {
            ScanSup { delta, sup_mean: 0.0, sup_upper: 0.0, a_star: 0.0, windows: 0 }
        } else {
            scan_continuous(spec, delta, reach, trials, seed.wrapping_add(level as u64))?
        };
        report.scans.push(scan);
        if scan.sup_upper < epsilon {
            report.delta = Some(delta);
            break;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedCriterion {
    /// The atomic-stage report at window `κ`.
    pub atomic: WindowReport,
    pub nu: Option<f64>,
    /// Upper bound on `sup_a U((a, a+ν])`: exact atomic sup plus the MC continuous sup.
    pub u_nu: Option<f64>,
    /// Infection rate with `e^{−λν} < η − 2u_ν`.
    pub lambda: Option<f64>,
    pub levels: Vec<(f64, f64)>,
}

/// Atomic window criterion at `κ`, then a dyadic search `ν = κ/2^j` for
/// `sup U((a, a+ν]) < η/2`.
pub fn check_bounded_criterion(
    spec: &InterarrivalSpec,
    kappa: f64,
    mass_tolerance: f64,
    trials: u64,
    seed: u64,
) -> Result<BoundedCriterion> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    let source = if spec.atomic_mass() >= 1.0 - 1e-12 {
        let law = LatticeLaw::from_spec(spec)?;
        let k_max = (20.0 * law.mean() / law.span) as usize + (kappa / law.span) as usize + 2000;
        AtomicSource::Lattice(arithmetic_renewal_masses(&law, k_max)?)
    } else {
        AtomicSource::Measure(atomic_renewal_measure(spec.atoms(), mass_tolerance)?)
    };
    let atomic_sup = |nu: f64| -> (f64, f64) {
        match &source {
            AtomicSource::Measure(m) => {
                let (s, a) = atomic_window_sup(&m.atoms, nu);
                (s + m.truncation_deficit, a)
            }
            AtomicSource::Lattice(t) => lattice_window_sup(t, nu),
        }
    };
    let (sup, a_star) = atomic_sup(kappa);
    let atomic = WindowReport::new(kappa, sup, a_star);
    let mut out = BoundedCriterion { atomic, nu: None, u_nu: None, lambda: None, levels: Vec::new() };
    if !atomic.passes {
        return Ok(out);
    }
    let reach = scan_reach(spec);
    let half = ETA / 2.0;
    for j in 0..MAX_DYADIC_LEVELS {
        let nu = kappa / 2f64.powi(j as i32);
        let at = atomic_sup(nu).0;
        let cont = if spec.continuous_mass() == 0.0 {
            0.0
        } else {
            match scan_continuous(spec, nu, reach, trials, seed.wrapping_add(j as u64)) {
                Ok(scan) => scan.sup_upper,
                Err(Error::Resource(_)) => break,
                Err(e) => return Err(e),
            }
        };
        let u_nu = at + cont;
        out.levels.push((nu, u_nu));
        if u_nu < half {
            out.nu = Some(nu);
            out.u_nu = Some(u_nu);
            out.lambda = Some(window_lambda(nu, u_nu));
            break;
        }
    }
    Ok(out)
}

enum AtomicSource {
    Measure(AtomicMeasure),
    Lattice(RenewalMassTable),
}

/// `λ = ln(2 / (η − 2u))/ν`, so that `e^{−λν} = (η − 2u)/2`.
pub fn window_lambda(nu: f64, u_nu: f64) -> f64 {
    (2.0 / (ETA - 2.0 * u_nu)).ln() / nu
}
