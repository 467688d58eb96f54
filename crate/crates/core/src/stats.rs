//! Log-space combinatorics for the conditional configuration-model null.
//!
//! Everything here works on natural-log probabilities. Significance scores
//! routinely fall far below the smallest positive `f64`, so nothing on the
//! scoring path ever exponentiates a tail probability.

use std::f64::consts::{LN_10, LN_2};
use std::fmt;

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("binomial coefficient C({n}, {k}) requires k <= n")]
    InvalidBinomial { n: u64, k: u64 },
    #[error("hypergeometric draws {draws} exceed population {population}")]
    DrawsExceedPopulation { draws: u64, population: u64 },
    #[error("value {x} outside support [{lo}, {hi}]")]
    OutsideSupport { x: u64, lo: u64, hi: u64 },
    #[error("order-statistic count must be at least 1")]
    EmptyOrderStatistic,
    #[error("log-probability {0} is positive or NaN")]
    InvalidLogProb(f64),
}

/// A natural-log probability in `[-inf, 0]`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    pub fn new(value: f64) -> Result<Self, StatsError> {
        if value <= 0.0 {
            Ok(LogProb(value))
        } else {
            Err(StatsError::InvalidLogProb(value))
        }
    }

    /// Clamps rounding noise above zero back to `ln 1`.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LogProb(value.min(0.0))
    }

    pub fn from_prob(p: f64) -> Result<Self, StatsError> {
        if (0.0..=1.0).contains(&p) {
            Ok(LogProb(p.ln()))
        } else {
            Err(StatsError::InvalidLogProb(p.ln()))
        }
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// Linear-space value; underflows to zero for deep tails.
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    /// `-log10(p)`, always `>= 0`.
    pub fn neg_log10(self) -> f64 {
        if self.0 == 0.0 {
            0.0
        } else {
            -self.0 / LN_10
        }
    }

    pub fn min(self, other: LogProb) -> LogProb {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }
}

impl fmt::Debug for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogProb({})", self.0)
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 - e^a)` for `a <= 0`.
pub fn log1m_exp(a: f64) -> f64 {
    if a >= 0.0 {
        f64::NEG_INFINITY
    } else if a > -LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(n!)`: exact factorials below 32, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    static SMALL: std::sync::OnceLock<[f64; 32]> = std::sync::OnceLock::new();
    if n < 32 {
        let table = SMALL.get_or_init(|| {
            let mut t = [0.0; 32];
            let mut f = 1.0f64;
            for (i, slot) in t.iter_mut().enumerate().skip(1) {
                f *= i as f64;
                *slot = f.ln();
            }
            t
        });
        return table[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // truncation error below 1e-17 for n >= 32
    let series = inv
        * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    (x + 0.5) * x.ln() - x + LN_SQRT_2PI + series
}

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64, StatsError> {
    if k > n {
        return Err(StatsError::InvalidBinomial { n, k });
    }
    Ok(ln_choose(n, k))
}

#[inline]
fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if k <= 16 && n < (1 << 40) {
        // short product: no cancellation between large log-factorials
        let base = (n - k) as f64;
        let mut prod = 1.0f64;
        for i in 1..=k {
            prod *= (base + i as f64) / i as f64;
        }
        return prod.ln();
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Hypergeometric law of the successes among `draws` stubs taken without
/// replacement from `successes + failures` stubs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HypergeomParams {
    successes: u64,
    failures: u64,
    draws: u64,
}

impl HypergeomParams {
    pub fn new(successes: u64, failures: u64, draws: u64) -> Result<Self, StatsError> {
        let population = successes + failures;
        if draws > population {
            return Err(StatsError::DrawsExceedPopulation { draws, population });
        }
        Ok(HypergeomParams {
            successes,
            failures,
            draws,
        })
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn failures(&self) -> u64 {
        self.failures
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn population(&self) -> u64 {
        self.successes + self.failures
    }

    /// Inclusive support `[max(0, n - M), min(n, K)]`.
    pub fn support(&self) -> (u64, u64) {
        (
            self.draws.saturating_sub(self.failures),
            self.draws.min(self.successes),
        )
    }

    pub fn mode(&self) -> u64 {
        let (lo, hi) = self.support();
        let m = ((self.draws + 1) as u128 * (self.successes + 1) as u128
            / (self.population() + 2) as u128) as u64;
        m.clamp(lo, hi)
    }

    fn check(&self, x: u64) -> Result<(), StatsError> {
        let (lo, hi) = self.support();
        if (lo..=hi).contains(&x) {
            Ok(())
        } else {
            Err(StatsError::OutsideSupport { x, lo, hi })
        }
    }

    /// `pmf(y + 1) / pmf(y)`.
    #[inline]
    fn up_ratio(&self, y: u64) -> f64 {
        let (k, m, n) = (self.successes as f64, self.failures as f64, self.draws as f64);
        let y = y as f64;
        (k - y) * (n - y) / ((y + 1.0) * (m - n + y + 1.0))
    }

    /// Sum of `pmf(y) / pmf(x)` over `y <= x`, walking down from `x`.
    /// Terms shrink monotonically when `x <= mode`.
    fn lower_relative_mass(&self, x: u64, lo: u64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut y = x;
        while y > lo {
            term /= self.up_ratio(y - 1);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            y -= 1;
        }
        sum
    }

    /// Sum of `pmf(y) / pmf(x)` over `y >= x`, walking up from `x`.
    fn upper_relative_mass(&self, x: u64, hi: u64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut y = x;
        while y < hi {
            term *= self.up_ratio(y);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            y += 1;
        }
        sum
    }
}

/// `ln P(X = x)`; `-inf` outside the support.
pub fn hypergeom_logpmf(x: u64, params: &HypergeomParams) -> LogProb {
    let (lo, hi) = params.support();
    if x < lo || x > hi {
        return LogProb::ZERO;
    }
    let HypergeomParams {
        successes: k,
        failures: m,
        draws: n,
    } = *params;
    LogProb::clamped(ln_choose(k, x) + ln_choose(m, n - x) - ln_choose(k + m, n))
}

/// `ln P(X <= x)`. The tail away from the mode is summed directly; the
/// other side is obtained by complement, so small lower tails keep full
/// relative precision.
pub fn hypergeom_logcdf(x: u64, params: &HypergeomParams) -> LogProb {
    let (lo, hi) = params.support();
    if x < lo {
        return LogProb::ZERO;
    }
    if x >= hi {
        return LogProb::ONE;
    }
    if x <= params.mode() {
        let lp = hypergeom_logpmf(x, params).ln();
        LogProb::clamped(lp + params.lower_relative_mass(x, lo).ln())
    } else {
        let lp = hypergeom_logpmf(x + 1, params).ln();
        let upper = lp + params.upper_relative_mass(x + 1, hi).ln();
        LogProb::clamped(log1m_exp(upper))
    }
}

/// `ln P(X >= x)`, the mirror image of [`hypergeom_logcdf`]: the tail
/// away from the mode is summed directly, so small upper tails keep full
/// relative precision.
pub fn hypergeom_logsf(x: u64, params: &HypergeomParams) -> LogProb {
    let (lo, hi) = params.support();
    if x > hi {
        return LogProb::ZERO;
    }
    if x <= lo {
        return LogProb::ONE;
    }
    if x >= params.mode() {
        let lp = hypergeom_logpmf(x, params).ln();
        LogProb::clamped(lp + params.upper_relative_mass(x, hi).ln())
    } else {
        let lp = hypergeom_logpmf(x - 1, params).ln();
        let lower = lp + params.lower_relative_mass(x - 1, lo).ln();
        LogProb::clamped(log1m_exp(lower))
    }
}

/// One step of the discrete CDF at `x`: the masses strictly below, at and
/// strictly above `x`, each in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfStep {
    pub below: LogProb,
    pub mass: LogProb,
    pub above: LogProb,
    at_or_below: LogProb,
    at_or_above: LogProb,
}

impl CdfStep {
    /// `ln P(X <= x)`.
    pub fn upper(&self) -> LogProb {
        self.at_or_below
    }

    /// `ln P(X >= x)`.
    pub fn survival(&self) -> LogProb {
        self.at_or_above
    }

    /// Randomized lower and upper tail values sharing one uniform `u`:
    /// `P(X < x) + u P(X = x)` and `P(X > x) + (1 - u) P(X = x)`. The two
    /// sum to one; each is computed in log space on its own so neither
    /// loses precision near zero.
    pub fn draw_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (LogProb, LogProb) {
        let u: f64 = rng.sample(Open01);
        let lower = log_add_exp(self.below.ln(), u.ln() + self.mass.ln());
        let upper = log_add_exp(self.above.ln(), (-u).ln_1p() + self.mass.ln());
        (LogProb::clamped(lower), LogProb::clamped(upper))
    }

    /// Randomized lower tail, a uniform draw over `[P(X < x), P(X <= x)]`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> LogProb {
        self.draw_pair(rng).0
    }
}

pub fn hypergeom_cdf_step(x: u64, params: &HypergeomParams) -> Result<CdfStep, StatsError> {
    params.check(x)?;
    let (lo, hi) = params.support();
    let below = if x == lo {
        LogProb::ZERO
    } else {
        hypergeom_logcdf(x - 1, params)
    };
    let above = if x == hi {
        LogProb::ZERO
    } else {
        hypergeom_logsf(x + 1, params)
    };
    Ok(CdfStep {
        below,
        mass: hypergeom_logpmf(x, params),
        above,
        at_or_below: hypergeom_logcdf(x, params),
        at_or_above: hypergeom_logsf(x, params),
    })
}

/// Randomized p-value: a uniform draw from `[P(X < x), P(X <= x)]`,
/// returned in log space. The uniform variate lies in the open unit
/// interval so the draw is never exactly zero.
pub fn randomized_cdf_draw<R: Rng + ?Sized>(
    x: u64,
    params: &HypergeomParams,
    rng: &mut R,
) -> Result<LogProb, StatsError> {
    let step = hypergeom_cdf_step(x, params)?;
    Ok(step.draw(rng))
}

/// `ln F_m(g)` where `F_m(g) = 1 - (1 - g)^m` is the CDF of the minimum of
/// `m` independent uniforms.
pub fn min_uniform_logcdf(log_g: LogProb, m: u64) -> Result<LogProb, StatsError> {
    if m == 0 {
        return Err(StatsError::EmptyOrderStatistic);
    }
    let lg = log_g.ln();
    if m == 1 || lg == f64::NEG_INFINITY {
        return Ok(log_g);
    }
    if lg >= 0.0 {
        return Ok(LogProb::ONE);
    }
    let ln_m = (m as f64).ln();
    if lg + ln_m < -30.0 {
        // 1 - (1-g)^m = m g (1 - (m-1) g / 2 + O((mg)^2))
        let g = lg.exp();
        let correction = (-(m as f64 - 1.0) * g / 2.0).ln_1p();
        return Ok(LogProb::clamped(ln_m + lg + correction));
    }
    let t = m as f64 * log1m_exp(lg);
    Ok(LogProb::clamped(log1m_exp(t)))
}
