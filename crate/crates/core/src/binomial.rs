//! Binomial pmf/cdf in log space, the typical-minimum-degree quantile, and
//! Chernoff-type tail bounds.
//!
//! The pmf uses Loader's saddle-point expansion, which keeps relative error
//! near machine precision without ever forming a factorial.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BinomialError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("d = {d} is outside 0..={trials}")]
    OutOfRange { d: u64, trials: u64 },
    #[error("deviation must be nonnegative, got {0}")]
    NegativeDeviation(f64),
    #[error("multiplicative factor must be positive, got {0}")]
    InvalidFactor(f64),
}

/// `Bin(trials, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSpec {
    pub trials: u64,
    pub p: f64,
}

impl BinomialSpec {
    pub fn new(trials: u64, p: f64) -> Result<Self, BinomialError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(BinomialError::InvalidProbability(p));
        }
        Ok(BinomialSpec { trials, p })
    }

    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.p
    }

    fn mode(&self) -> u64 {
        (((self.trials + 1) as f64 * self.p).floor() as u64).min(self.trials)
    }

    /// `P(X = d)`; zero outside the support.
    pub fn pmf(&self, d: u64) -> f64 {
        if d > self.trials {
            return 0.0;
        }
        dbinom_raw(d as f64, self.trials as f64, self.p, 1.0 - self.p)
    }

    /// `(P(X = d), P(X ≤ d))`.
    pub fn pmf_cdf(&self, d: u64) -> Result<(f64, f64), BinomialError> {
        if d > self.trials {
            return Err(BinomialError::OutOfRange {
                d,
                trials: self.trials,
            });
        }
        Ok((self.pmf(d), self.cdf(d)))
    }

    /// `P(X ≤ d)`, with `d` clamped to the support.
    pub fn cdf(&self, d: u64) -> f64 {
        if d >= self.trials {
            return 1.0;
        }
        if self.p <= 0.0 {
            return 1.0;
        }
        if self.p >= 1.0 {
            return 0.0;
        }
        if d <= self.mode() {
            self.sum_down(d).min(1.0)
        } else {
            (1.0 - self.sum_up(d + 1)).max(0.0)
        }
    }

    /// `P(X < x)` for a real threshold.
    pub fn cdf_below(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let d = x.ceil() - 1.0;
        if d >= self.trials as f64 {
            1.0
        } else {
            self.cdf(d as u64)
        }
    }

    /// `P(X > x)` for a real threshold.
    pub fn sf_above(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        let d = x.floor();
        if d >= self.trials as f64 {
            0.0
        } else {
            1.0 - self.cdf(d as u64)
        }
    }

    /// `Σ_{j ≤ d} b(j)`, walking down from `d` via the pmf ratio.
    fn sum_down(&self, d: u64) -> f64 {
        let (p, q, n) = (self.p, 1.0 - self.p, self.trials as f64);
        let mut term = self.pmf(d);
        let mut acc = Neumaier::default();
        acc.add(term);
        let mut j = d;
        while j > 0 && term > 0.0 {
            // b(j-1) / b(j) = j q / ((n - j + 1) p)
            let r = (j as f64 * q) / ((n - j as f64 + 1.0) * p);
            term *= r;
            acc.add(term);
            j -= 1;
            if r < 1.0 && term * r / (1.0 - r) < 1e-17 * acc.value() {
                break;
            }
        }
        acc.value()
    }

    /// `Σ_{j ≥ d} b(j)`, walking up from `d`.
    fn sum_up(&self, d: u64) -> f64 {
        let (p, q, n) = (self.p, 1.0 - self.p, self.trials as f64);
        let mut term = self.pmf(d);
        let mut acc = Neumaier::default();
        acc.add(term);
        let mut j = d;
        while j < self.trials && term > 0.0 {
            // b(j+1) / b(j) = (n - j) p / ((j + 1) q)
            let r = ((n - j as f64) * p) / ((j as f64 + 1.0) * q);
            term *= r;
            acc.add(term);
            j += 1;
            if r < 1.0 && term * r / (1.0 - r) < 1e-17 * acc.value() {
                break;
            }
        }
        acc.value()
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln(n!) − ln(√(2πn) (n/e)^n)` at integers `1..=30` (entry 0 is unused).
#[allow(clippy::excessive_precision)]
const STIRLERR_TABLE: [f64; 31] = [
    0.0,
    0.081_061_466_795_327_258_22,
    0.041_340_695_955_409_294_09,
    0.027_677_925_684_998_339_15,
    0.020_790_672_103_765_093_11,
    0.016_644_691_189_821_192_16,
    0.013_876_128_823_070_747_99,
    0.011_896_709_945_891_770_10,
    0.010_411_265_261_972_096_50,
    0.009_255_462_182_712_732_918,
    0.008_330_563_433_362_871_256,
    0.007_573_675_487_951_840_795,
    0.006_942_840_107_209_529_866,
    0.006_408_994_188_004_207_068,
    0.005_951_370_112_758_847_736,
    0.005_554_733_551_962_801_371,
    0.005_207_655_919_609_640_441,
    0.004_901_395_948_434_737_861,
    0.004_629_153_749_334_028_592,
    0.004_385_560_249_232_324_268,
    0.004_166_319_691_996_922_457,
    0.003_967_954_218_640_859_617,
    0.003_787_618_068_444_434_578,
    0.003_622_960_224_683_094_707,
    0.003_472_021_382_978_766_963,
    0.003_333_155_636_728_092_876,
    0.003_204_970_228_055_038_011,
    0.003_086_278_682_608_777_063,
    0.002_976_063_983_550_408_826,
    0.002_873_449_362_352_466_388,
    0.002_777_674_929_752_693_604,
];

fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 30.0 && n.fract() == 0.0 {
        return STIRLERR_TABLE[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `x ln(x/np) + np − x`, evaluated without cancellation near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1;
        loop {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1;
            if j > 1000 {
                return s;
            }
        }
    }
    x * (x / np).ln() + np - x
}

fn dbinom_raw(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    if x == 0.0 {
        if n == 0.0 {
            return 1.0;
        }
        let lc = if p < 0.1 {
            -bd0(n, n * q) - n * p
        } else {
            n * q.ln()
        };
        return lc.exp();
    }
    if x == n {
        let lc = if q < 0.1 {
            -bd0(n, n * p) - n * q
        } else {
            n * p.ln()
        };
        return lc.exp();
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / n).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Smallest `d` with `P(Bin(n−1, p) ≤ d) ≥ ln n / n`.
pub fn delta_quantile(n: u64, p: f64) -> Result<u64, BinomialError> {
    let spec = BinomialSpec::new(n.saturating_sub(1), p)?;
    let target = (n as f64).ln() / n as f64;
    if spec.cdf(0) >= target {
        return Ok(0);
    }
    // Exponential search for an upper bracket, then bisect on (lo, hi].
    let mut lo = 0u64;
    let mut hi = 1u64;
    while hi < spec.trials && spec.cdf(hi) < target {
        lo = hi;
        hi = (hi * 2).min(spec.trials);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if spec.cdf(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// `P(X < np − a) < exp(−a²/(2np))`.
    Lower,
    /// `P(X > np + a) < exp(−a²/(2np) + a³/(2(np)²))`.
    Upper,
    /// `P(X > κ np) ≤ (e/κ)^{κ np}`; the deviation argument is `κ`.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub kind: TailKind,
    pub value: f64,
}

/// Closed-form tail bound, clamped to `[0, 1]`.
pub fn chernoff_bound(
    spec: BinomialSpec,
    a: f64,
    kind: TailKind,
) -> Result<TailBound, BinomialError> {
    let mu = spec.mean();
    let value = match kind {
        TailKind::Lower | TailKind::Upper => {
            if a.is_nan() || a < 0.0 {
                return Err(BinomialError::NegativeDeviation(a));
            }
            if a == 0.0 {
                1.0
            } else if mu == 0.0 {
                0.0
            } else {
                let base = -a * a / (2.0 * mu);
                let expo = if kind == TailKind::Upper {
                    base + a.powi(3) / (2.0 * mu.powi(2))
                } else {
                    base
                };
                expo.exp()
            }
        }
        TailKind::Multiplicative => {
            if a.is_nan() || a <= 0.0 {
                return Err(BinomialError::InvalidFactor(a));
            }
            if mu == 0.0 {
                if a > 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                (a * mu * (1.0 - a.ln())).exp()
            }
        }
    };
    Ok(TailBound {
        kind,
        value: value.clamp(0.0, 1.0),
    })
}

/// The exact tail the corresponding bound controls.
pub fn exact_tail(spec: BinomialSpec, a: f64, kind: TailKind) -> f64 {
    let mu = spec.mean();
    match kind {
        TailKind::Lower => spec.cdf_below(mu - a),
        TailKind::Upper => spec.sf_above(mu + a),
        TailKind::Multiplicative => spec.sf_above(a * mu),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn closed_forms() {
        let s = BinomialSpec::new(4, 0.5).unwrap();
        assert_eq!(s.pmf_cdf(4).unwrap().1, 1.0);
        let s = BinomialSpec::new(4, 0.3).unwrap();
        assert!(close(s.pmf(0), 0.2401, 1e-14));
        assert!(matches!(
            s.pmf_cdf(5),
            Err(BinomialError::OutOfRange { .. })
        ));
        assert!(BinomialSpec::new(4, 1.2).is_err());
    }

    #[test]
    fn pmf_matches_direct_lgamma_free_product() {
        // b(d) via an incremental product in the mode's neighbourhood.
        let s = BinomialSpec::new(60, 0.3).unwrap();
        let mut b = 0.7f64.powi(60);
        for d in 0..=60u64 {
            assert!(close(s.pmf(d), b, 1e-12), "d={d}: {} vs {}", s.pmf(d), b);
            b *= (60 - d) as f64 / (d + 1) as f64 * 0.3 / 0.7;
        }
    }

    #[test]
    fn large_trials_stay_finite() {
        let s = BinomialSpec::new(10_000_000, 1e-6).unwrap();
        let (b, c) = s.pmf_cdf(10).unwrap();
        assert!(b > 0.1 && b < 0.2);
        assert!(c > 0.5 && c < 0.65);
        assert!(s.cdf(10_000_000) == 1.0);
    }

    #[test]
    fn cdf_monotone_and_ends_at_one() {
        let s = BinomialSpec::new(300, 0.07).unwrap();
        let mut prev = 0.0;
        for d in 0..=300 {
            let c = s.cdf(d);
            assert!(c + 1e-15 >= prev, "d={d}");
            prev = c;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn ratio_law_and_unimodality() {
        for &(n, p) in &[(100u64, 0.05), (999, 0.2), (40, 0.01)] {
            let s = BinomialSpec::new(n, p).unwrap();
            for d in 1..=n {
                let (b1, b0) = (s.pmf(d), s.pmf(d - 1));
                if b0 < 1e-290 || b1 < 1e-290 {
                    continue;
                }
                // Bin(n−1, p) over a universe of n = trials + 1 vertices.
                let np = (n + 1) as f64 * p;
                let want = 1.0 + (np - d as f64) / (d as f64 * (1.0 - p));
                assert!(close(b1 / b0, want, 1e-9), "n={n} p={p} d={d}");
                if (d as f64) <= np {
                    assert!(
                        b1 / b0 <= (1.0 + 1.25 * (np - d as f64) / d as f64) * (1.0 + 1e-9),
                        "n={n} p={p} d={d}"
                    );
                }
            }
            let m = (n as f64 * p).floor() as u64;
            for d in 1..=m {
                assert!(s.pmf(d - 1) <= s.pmf(d) * (1.0 + 1e-12));
            }
            for d in m + 1..=n {
                assert!(s.pmf(d) <= s.pmf(d - 1) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn delta_quantile_examples() {
        assert_eq!(delta_quantile(100, 1e-6).unwrap(), 0);
        // Exhaustive scan oracle for n=10, p=0.5.
        let s = BinomialSpec::new(9, 0.5).unwrap();
        let target = 10f64.ln() / 10.0;
        let scan = (0..=9).find(|&d| s.cdf(d) >= target).unwrap();
        assert_eq!(delta_quantile(10, 0.5).unwrap(), scan);
        assert_eq!(scan, 3);
    }

    #[test]
    fn delta_quantile_is_monotone_in_p() {
        let n = 2000u64;
        let mut prev = 0;
        for i in 1..200 {
            let p = i as f64 * 0.002;
            let d = delta_quantile(n, p).unwrap();
            assert!(d >= prev, "p={p}");
            prev = d;
        }
    }

    #[test]
    fn chernoff_basics() {
        let s = BinomialSpec::new(200, 0.05).unwrap();
        assert_eq!(chernoff_bound(s, 0.0, TailKind::Lower).unwrap().value, 1.0);
        assert!(chernoff_bound(s, -1.0, TailKind::Lower).is_err());
        assert!(chernoff_bound(s, 0.0, TailKind::Multiplicative).is_err());
        let b = chernoff_bound(s, 10.0, TailKind::Lower).unwrap().value;
        assert!(b >= exact_tail(s, 10.0, TailKind::Lower));
        let mut prev = 1.0;
        for i in 0..50 {
            let v = chernoff_bound(s, i as f64 * 0.2, TailKind::Lower)
                .unwrap()
                .value;
            assert!(v <= prev);
            prev = v;
        }
        let zero = BinomialSpec::new(10, 0.0).unwrap();
        assert_eq!(
            chernoff_bound(zero, 1.0, TailKind::Lower).unwrap().value,
            0.0
        );
    }

    #[test]
    fn bounds_dominate_exact_tails_on_random_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let trials = rng.gen_range(1..2000u64);
            let p = rng.gen_range(0.001..0.5);
            let s = BinomialSpec::new(trials, p).unwrap();
            let mu = s.mean();
            let a = rng.gen_range(0.0..=mu.max(1e-9));
            for kind in [TailKind::Lower, TailKind::Upper] {
                let bound = chernoff_bound(s, a, kind).unwrap().value;
                let exact = exact_tail(s, a, kind);
                assert!(
                    bound + 1e-12 >= exact,
                    "{kind:?} n={trials} p={p} a={a}: {bound} < {exact}"
                );
            }
            let kappa = rng.gen_range(1.0..6.0);
            let bound = chernoff_bound(s, kappa, TailKind::Multiplicative)
                .unwrap()
                .value;
            assert!(bound + 1e-12 >= exact_tail(s, kappa, TailKind::Multiplicative));
        }
    }

    proptest! {
        #[test]
        fn pmf_sums_to_one(n in 1u64..400, p in 0.0f64..1.0) {
            let s = BinomialSpec::new(n, p).unwrap();
            let total: f64 = (0..=n).map(|d| s.pmf(d)).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            prop_assert!((s.cdf(n / 2) - (0..=n / 2).map(|d| s.pmf(d)).sum::<f64>()).abs() < 1e-10);
        }
    }
}
