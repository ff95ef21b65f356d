//! Interarrival laws `μ = μ_at + μ_cont` on `(0, ∞)` and their samplers.

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-12;
const CANTOR_DIGITS: u32 = 64;
/// Largest integer multiple accepted when recognising a lattice law.
const MAX_LATTICE_MULTIPLE: f64 = 1e6;
pub const DEFAULT_MARK_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousPart {
    None,
    Exponential { rate: f64 },
    UniformInterval { lo: f64, hi: f64 },
    /// Law of `C + G - 1`, `C` Cantor on `[0,1]`, `G` geometric on `{1,2,..}` with success `q`.
    CantorShiftGeometric { q: f64 },
    /// Piecewise-linear CDF through `(x, F(x))` knots.
    TabulatedCdf { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanValue {
    Finite(f64),
    Infinite,
}

impl MeanValue {
    /// `1/m`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            MeanValue::Finite(m) => 1.0 / m,
            MeanValue::Infinite => 0.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            MeanValue::Finite(m) => Some(m),
            MeanValue::Infinite => None,
        }
    }
}

/// Purely atomic law whose atoms all sit on `span · {1, 2, ..}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub span: f64,
    /// `multiples[i] · span` is atom `i`.
    pub multiples: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterarrivalSpec {
    atomic: Vec<Atom>,
    continuous: ContinuousPart,
    continuous_mass: f64,
    cumulative: Vec<f64>,
    lattice: Option<Lattice>,
}

/// Which branch produced a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Atom(usize),
    Continuous,
}

impl InterarrivalSpec {
    pub fn new(atomic: Vec<Atom>, continuous: ContinuousPart, continuous_mass: f64) -> Result<Self> {
        for (i, a) in atomic.iter().enumerate() {
            if !(a.point.is_finite() && a.point > 0.0) {
                return Err(Error::invalid("atomic_part", format!("point {} must be positive", a.point)));
            }
            if !(a.mass > 0.0 && a.mass <= 1.0) {
                return Err(Error::invalid("atomic_part", format!("mass {} must lie in (0, 1]", a.mass)));
            }
            if i > 0 && atomic[i - 1].point >= a.point {
                return Err(Error::invalid("atomic_part", "points must be strictly increasing"));
            }
        }
        if !(0.0..=1.0).contains(&continuous_mass) {
            return Err(Error::invalid("continuous_mass", "must lie in [0, 1]"));
        }
        let atomic_mass: f64 = atomic.iter().map(|a| a.mass).sum();
        if (atomic_mass + continuous_mass - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(
                "masses",
                format!("atomic {atomic_mass} + continuous {continuous_mass} != 1"),
            ));
        }
        validate_continuous(&continuous)?;
        if continuous_mass > 0.0 && continuous == ContinuousPart::None {
            return Err(Error::invalid("continuous_part", "positive mass on an empty continuous part"));
        }
        let continuous = if continuous_mass == 0.0 { ContinuousPart::None } else { continuous };
        let mut acc = 0.0;
        let cumulative = atomic
            .iter()
            .map(|a| {
                acc += a.mass;
                acc
            })
            .collect();
        let lattice = if continuous_mass == 0.0 { detect_lattice(&atomic) } else { None };
        Ok(Self {
            atomic,
            continuous,
            continuous_mass,
            cumulative,
            lattice,
        })
    }

    pub fn degenerate(point: f64) -> Result<Self> {
        Self::new(vec![Atom { point, mass: 1.0 }], ContinuousPart::None, 0.0)
    }

    /// Law on `span · ℕ` with `P(X = k·span) = mass`.
    pub fn arithmetic(span: f64, masses: &[(u64, f64)]) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::invalid("span", "must be positive"));
        }
        let mut masses = masses.to_vec();
        masses.sort_by_key(|&(k, _)| k);
        if masses.iter().any(|&(k, _)| k == 0) {
            return Err(Error::invalid("masses", "multiple 0 would put mass at 0"));
        }
        let atoms = masses
            .into_iter()
            .map(|(k, mass)| Atom { point: k as f64 * span, mass })
            .collect();
        Self::new(atoms, ContinuousPart::None, 0.0)
    }

    pub fn continuous(part: ContinuousPart) -> Result<Self> {
        Self::new(Vec::new(), part, 1.0)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::continuous(ContinuousPart::Exponential { rate })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::continuous(ContinuousPart::UniformInterval { lo, hi })
    }

    pub fn cantor_geometric(q: f64) -> Result<Self> {
        Self::continuous(ContinuousPart::CantorShiftGeometric { q })
    }

    /// `p · (normalised atoms) + (1 − p) · continuous`.
    pub fn mixture(p: f64, atoms: &[Atom], continuous: ContinuousPart) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("p", "must lie in [0, 1]"));
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if p > 0.0 && !(total > 0.0) {
            return Err(Error::invalid("atomic", "positive p needs at least one atom"));
        }
        let atomic = if p > 0.0 {
            atoms
                .iter()
                .map(|a| Atom { point: a.point, mass: p * a.mass / total })
                .collect()
        } else {
            Vec::new()
        };
        Self::new(atomic, continuous, 1.0 - p)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atomic
    }

    pub fn atomic_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn continuous_part(&self) -> &ContinuousPart {
        &self.continuous
    }

    pub fn continuous_mass(&self) -> f64 {
        self.continuous_mass
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn is_degenerate(&self) -> bool {
        self.continuous_mass == 0.0 && self.atomic.len() == 1
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let atomic: f64 = self.atomic.iter().take_while(|a| a.point <= x).map(|a| a.mass).sum();
        atomic + self.continuous_mass * continuous_cdf(&self.continuous, x)
    }

    pub fn mean(&self) -> MeanValue {
        let atomic: f64 = self.atomic.iter().map(|a| a.point * a.mass).sum();
        if self.continuous_mass == 0.0 {
            return MeanValue::Finite(atomic);
        }
        match continuous_mean(&self.continuous) {
            MeanValue::Finite(m) => MeanValue::Finite(atomic + self.continuous_mass * m),
            MeanValue::Infinite => MeanValue::Infinite,
        }
    }

    pub fn sample_interarrival<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_tagged(rng).0
    }

    pub fn sample_tagged<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Branch) {
        let branch = self.choose_branch(rng);
        match branch {
            Branch::Atom(i) => (self.atomic[i].point, branch),
            Branch::Continuous => loop {
                let x = sample_continuous(&self.continuous, rng);
                if x > 0.0 {
                    break (x, branch);
                }
            },
        }
    }

    fn choose_branch<R: Rng + ?Sized>(&self, rng: &mut R) -> Branch {
        if self.atomic.is_empty() {
            return Branch::Continuous;
        }
        if self.continuous_mass == 0.0 && self.atomic.len() == 1 {
            return Branch::Atom(0);
        }
        let u: f64 = rng.random();
        match self.cumulative.iter().position(|&c| u < c) {
            Some(i) => Branch::Atom(i),
            None if self.continuous_mass > 0.0 => Branch::Continuous,
            // rounding left `u` above the last cumulative mass
            None => Branch::Atom(self.atomic.len() - 1),
        }
    }
}

fn validate_continuous(part: &ContinuousPart) -> Result<()> {
    match *part {
        ContinuousPart::None => Ok(()),
        ContinuousPart::Exponential { rate } => {
            if rate.is_finite() && rate > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid("rate", "must be positive"))
            }
        }
        ContinuousPart::UniformInterval { lo, hi } => {
            if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi {
                Ok(())
            } else {
                Err(Error::invalid("uniform", "need 0 <= lo < hi"))
            }
        }
        ContinuousPart::CantorShiftGeometric { q } => {
            if q > 0.0 && q < 1.0 {
                Ok(())
            } else {
                Err(Error::invalid("q", "must lie in (0, 1)"))
            }
        }
        ContinuousPart::TabulatedCdf { ref knots } => {
            if knots.len() < 2 {
                return Err(Error::invalid("knots", "need at least two knots"));
            }
            if !(knots[0].0 >= 0.0) || knots[0].1 != 0.0 {
                return Err(Error::invalid("knots", "first knot must be (x >= 0, 0)"));
            }
            if (knots[knots.len() - 1].1 - 1.0).abs() > MASS_TOL {
                return Err(Error::invalid("knots", "last knot must have F = 1"));
            }
            for w in knots.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(Error::invalid("knots", "x must be strictly increasing (no atoms)"));
                }
                if w[1].1 < w[0].1 {
                    return Err(Error::invalid("knots", "F must be non-decreasing"));
                }
            }
            Ok(())
        }
    }
}

fn continuous_cdf(part: &ContinuousPart, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    match *part {
        ContinuousPart::None => 0.0,
        ContinuousPart::Exponential { rate } => -(-rate * x).exp_m1(),
        ContinuousPart::UniformInterval { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        ContinuousPart::CantorShiftGeometric { q } => {
            // Σ_g q(1-q)^{g-1} C(x - g + 1)
            let mut total = 0.0;
            let mut weight = q;
            let mut g = 1.0;
            while g - 1.0 <= x && weight > 1e-18 {
                total += weight * cantor_cdf(x - g + 1.0);
                weight *= 1.0 - q;
                g += 1.0;
            }
            total
        }
        ContinuousPart::TabulatedCdf { ref knots } => tabulated_cdf(knots, x),
    }
}

/// Cantor function on `[0,1]`.
pub fn cantor_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut x = x;
    let mut value = 0.0;
    let mut scale = 0.5;
    for _ in 0..CANTOR_DIGITS {
        x *= 3.0;
        if x >= 2.0 {
            value += scale;
            x -= 2.0;
        } else if x >= 1.0 {
            return value + scale;
        }
        scale *= 0.5;
    }
    value
}

fn tabulated_cdf(knots: &[(f64, f64)], x: f64) -> f64 {
    if x <= knots[0].0 {
        return 0.0;
    }
    for w in knots.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if x <= x1 {
            return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
        }
    }
    1.0
}

fn continuous_mean(part: &ContinuousPart) -> MeanValue {
    match *part {
        ContinuousPart::None => MeanValue::Finite(0.0),
        ContinuousPart::Exponential { rate } => MeanValue::Finite(1.0 / rate),
        ContinuousPart::UniformInterval { lo, hi } => MeanValue::Finite(0.5 * (lo + hi)),
        ContinuousPart::CantorShiftGeometric { q } => MeanValue::Finite(0.5 + 1.0 / q - 1.0),
        ContinuousPart::TabulatedCdf { ref knots } => {
            // ∫ (1 - F) over [0, x_last], trapezoidal between knots.
            let mut m = knots[0].0;
            for w in knots.windows(2) {
                let ((x0, f0), (x1, f1)) = (w[0], w[1]);
                m += (x1 - x0) * (1.0 - 0.5 * (f0 + f1));
            }
            MeanValue::Finite(m)
        }
    }
}

fn sample_continuous<R: Rng + ?Sized>(part: &ContinuousPart, rng: &mut R) -> f64 {
    match *part {
        ContinuousPart::None => unreachable!("continuous branch drawn with no continuous part"),
        ContinuousPart::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
        ContinuousPart::UniformInterval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        ContinuousPart::CantorShiftGeometric { q } => {
            let failures = Geometric::new(q).expect("validated q").sample(rng);
            sample_cantor(rng) + failures as f64
        }
        ContinuousPart::TabulatedCdf { ref knots } => {
            let u: f64 = rng.random();
            for w in knots.windows(2) {
                let ((x0, f0), (x1, f1)) = (w[0], w[1]);
                if u < f1 && f1 > f0 {
                    return x0 + (x1 - x0) * (u - f0) / (f1 - f0);
                }
            }
            knots[knots.len() - 1].0
        }
    }
}

/// Draw from the Cantor law using 64 independent ternary digits in `{0, 2}`.
pub fn sample_cantor<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let bits: u64 = rng.random();
    let mut v = 0.0;
    for i in (0..CANTOR_DIGITS).rev() {
        v = (v + 2.0 * ((bits >> i) & 1) as f64) / 3.0;
    }
    v
}

/// `Σ 2·b_i·3^{-i}` for the given leading digits.
pub fn cantor_from_digits(bits: &[bool]) -> f64 {
    bits.iter().rev().fold(0.0, |v, &b| (v + if b { 2.0 } else { 0.0 }) / 3.0)
}

fn detect_lattice(atoms: &[Atom]) -> Option<Lattice> {
    let first = atoms.first()?.point;
    let span = atoms.iter().skip(1).fold(first, |g, a| float_gcd(g, a.point));
    let mut multiples = Vec::with_capacity(atoms.len());
    for a in atoms {
        let k = (a.point / span).round();
        if !(1.0..=MAX_LATTICE_MULTIPLE).contains(&k) || (k * span - a.point).abs() > 1e-9 * a.point {
            return None;
        }
        multiples.push(k as u64);
    }
    Some(Lattice { span, multiples })
}

fn float_gcd(a: f64, b: f64) -> f64 {
    let tol = 1e-9 * a.max(b);
    let (mut a, mut b) = (a.max(b), a.min(b));
    while b > tol {
        let r = a % b;
        a = b;
        b = if r > b - tol { 0.0 } else { r };
    }
    a
}

/// Cursor over the renewal epochs `S_1 < S_2 < …` of one renewal process.
///
/// On lattice laws the epoch is kept as an integer multiple of the span so
/// that marks are exactly `k · d`.
#[derive(Debug, Clone)]
pub struct RenewalClock<'a> {
    spec: &'a InterarrivalSpec,
    time: f64,
    steps: u64,
    all_atomic: bool,
}

impl<'a> RenewalClock<'a> {
    pub fn new(spec: &'a InterarrivalSpec) -> Self {
        Self {
            spec,
            time: 0.0,
            steps: 0,
            all_atomic: true,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn next_epoch<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.next_tagged(rng).0
    }

    /// Next epoch, plus whether every increment so far was an atom.
    pub fn next_tagged<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (f64, bool) {
        let (x, branch) = self.spec.sample_tagged(rng);
        match (&self.spec.lattice, branch) {
            (Some(lat), Branch::Atom(i)) => {
                self.steps += lat.multiples[i];
                self.time = self.steps as f64 * lat.span;
            }
            _ => {
                self.time += x;
                if branch == Branch::Continuous {
                    self.all_atomic = false;
                }
            }
        }
        (self.time, self.all_atomic)
    }
}

pub fn sample_renewal_marks<R: Rng + ?Sized>(
    spec: &InterarrivalSpec,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    sample_renewal_marks_capped(spec, horizon, rng, DEFAULT_MARK_CAP)
}

pub fn sample_renewal_marks_capped<R: Rng + ?Sized>(
    spec: &InterarrivalSpec,
    horizon: f64,
    rng: &mut R,
    cap: usize,
) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", "must be positive and finite"));
    }
    if let MeanValue::Finite(m) = spec.mean() {
        if horizon / m > cap as f64 {
            return Err(Error::Resource(format!(
                "expected {:.3e} marks exceeds cap {cap}",
                horizon / m
            )));
        }
    }
    let mut clock = RenewalClock::new(spec);
    let mut marks = Vec::new();
    loop {
        let t = clock.next_epoch(rng);
        if t > horizon {
            return Ok(marks);
        }
        if marks.len() == cap {
            return Err(Error::Resource(format!("more than {cap} marks before horizon {horizon}")));
        }
        marks.push(t);
    }
}

/// JSON form of an interarrival law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionDescriptor {
    Arithmetic { span: f64, masses: Vec<(u64, f64)> },
    Atomic { atoms: Vec<(f64, f64)> },
    Degenerate { point: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    CantorGeometric {
        #[serde(default = "default_q")]
        q: f64,
    },
    Tabulated { knots: Vec<(f64, f64)> },
    /// `p` is the atomic mass; atom weights are normalised.
    Mixture {
        p: f64,
        atomic: Vec<(f64, f64)>,
        continuous: Box<DistributionDescriptor>,
    },
}

fn default_q() -> f64 {
    0.5
}

impl DistributionDescriptor {
    pub fn to_spec(&self) -> Result<InterarrivalSpec> {
        match self {
            Self::Arithmetic { span, masses } => InterarrivalSpec::arithmetic(*span, masses),
            Self::Atomic { atoms } => InterarrivalSpec::new(to_atoms(atoms), ContinuousPart::None, 0.0),
            Self::Degenerate { point } => InterarrivalSpec::degenerate(*point),
            Self::Mixture { p, atomic, continuous } => {
                InterarrivalSpec::mixture(*p, &to_atoms(atomic), continuous.continuous_part()?)
            }
            other => InterarrivalSpec::continuous(other.continuous_part()?),
        }
    }

    fn continuous_part(&self) -> Result<ContinuousPart> {
        Ok(match self {
            Self::Exponential { rate } => ContinuousPart::Exponential { rate: *rate },
            Self::Uniform { lo, hi } => ContinuousPart::UniformInterval { lo: *lo, hi: *hi },
            Self::CantorGeometric { q } => ContinuousPart::CantorShiftGeometric { q: *q },
            Self::Tabulated { knots } => ContinuousPart::TabulatedCdf { knots: knots.clone() },
            _ => return Err(Error::invalid("continuous", "must be an atomless family")),
        })
    }
}

fn to_atoms(pairs: &[(f64, f64)]) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = pairs.iter().map(|&(point, mass)| Atom { point, mass }).collect();
    atoms.sort_by(|a, b| a.point.total_cmp(&b.point));
    atoms
}
