//! Real-argument Airy functions and Laguerre polynomials.
//!
//! Airy functions use a Maclaurin series summed in double-double arithmetic
//! for |x| <= 8 and the standard asymptotic expansions beyond.  Scaled
//! variants strip the exponential factor so that products like
//! Ai(a)·Bi(a - z) can be formed for very large arguments.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Boundary between the Maclaurin and asymptotic regimes.
pub const SERIES_LIMIT: f64 = 8.0;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

// Ai(0) and -Ai'(0) as unevaluated sums hi + lo.
const C1: Dd = Dd { hi: 0.355_028_053_887_817_2, lo: 2.052_336_324_362_12e-17 };
const C2: Dd = Dd { hi: 0.258_819_403_792_806_8, lo: -2.522_243_111_610_832e-17 };
const SQRT3: Dd = Dd { hi: 1.732_050_807_568_877_2, lo: 1.003_508_422_180_690_3e-16 };

/// Ai, Bi and their derivatives at a single real argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AiryValues {
    pub ai: f64,
    pub bi: f64,
    pub ai_prime: f64,
    pub bi_prime: f64,
}

impl AiryValues {
    /// Ai·Bi' - Ai'·Bi, equal to 1/π for unscaled values.
    pub fn wronskian(&self) -> f64 {
        self.ai * self.bi_prime - self.ai_prime * self.bi
    }

    /// Ci = Bi + i·Ai.
    pub fn ci(&self) -> Complex64 {
        Complex64::new(self.bi, self.ai)
    }

    /// Ci' = Bi' + i·Ai'.
    pub fn ci_prime(&self) -> Complex64 {
        Complex64::new(self.bi_prime, self.ai_prime)
    }
}

/// Exponent ξ(x) = (2/3)x^{3/2} for x > 0, zero otherwise.
///
/// `airy_scaled(x)` returns Ai·e^ξ, Ai'·e^ξ, Bi·e^-ξ, Bi'·e^-ξ.
pub fn airy_exponent(x: f64) -> f64 {
    if x > 0.0 {
        2.0 / 3.0 * x * x.sqrt()
    } else {
        0.0
    }
}

/// Ai(x), Bi(x), Ai'(x), Bi'(x).
///
/// Overflow of Bi for large positive x yields infinities; underflow of Ai
/// yields zero.  Use [`airy_scaled`] in that regime.
pub fn airy(x: f64) -> Result<AiryValues> {
    let s = airy_scaled(x)?;
    if x <= 0.0 {
        return Ok(s);
    }
    let xi = airy_exponent(x);
    let (dn, up) = ((-xi).exp(), xi.exp());
    Ok(AiryValues {
        ai: s.ai * dn,
        ai_prime: s.ai_prime * dn,
        bi: s.bi * up,
        bi_prime: s.bi_prime * up,
    })
}

/// Exponentially scaled Airy functions, see [`airy_exponent`].
pub fn airy_scaled(x: f64) -> Result<AiryValues> {
    if x.is_nan() {
        return Err(Error::Domain("Airy argument is NaN".into()));
    }
    if x.is_infinite() {
        return Ok(AiryValues { ai: 0.0, bi: 0.0, ai_prime: 0.0, bi_prime: 0.0 });
    }
    if x.abs() <= SERIES_LIMIT {
        let v = maclaurin(x);
        if x > 0.0 {
            let xi = airy_exponent(x);
            let (up, dn) = (xi.exp(), (-xi).exp());
            return Ok(AiryValues {
                ai: v.ai * up,
                ai_prime: v.ai_prime * up,
                bi: v.bi * dn,
                bi_prime: v.bi_prime * dn,
            });
        }
        return Ok(v);
    }
    if x > 0.0 {
        Ok(asymptotic_positive(x))
    } else {
        Ok(asymptotic_negative(-x))
    }
}

/// Ci(x) = Bi(x) + i·Ai(x).
pub fn ci(x: f64) -> Result<Complex64> {
    Ok(airy(x)?.ci())
}

// ---- double-double helpers ----

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: e }
    }

    fn quick(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let s = Dd::quick(s.hi, s.lo + t.hi);
        Dd::quick(s.hi, s.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::quick(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = q1 * d;
        let e = q1.mul_add(d, -p);
        let r = (self.hi - p - e + self.lo) / d;
        Dd::quick(q1, r)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn maclaurin(x: f64) -> AiryValues {
    let xd = Dd::from(x);
    let x3 = xd.mul(xd).mul(xd);

    // f = Σ a_k x^{3k}, g = Σ b_k x^{3k+1}, and their derivatives.
    let mut f = Dd::from(1.0);
    let mut g = xd;
    let mut fp = Dd::ZERO;
    let mut gp = Dd::from(1.0);
    let mut tf = Dd::from(1.0);
    let mut tg = xd;
    let mut tfp = xd.mul(xd).div_f64(2.0);
    let mut tgp = Dd::from(1.0);
    fp = fp.add(tfp);
    let scale = 1.0 + x.abs().powi(3);
    for k in 1..200 {
        let kf = k as f64;
        tf = tf.mul(x3).div_f64((3.0 * kf - 1.0) * (3.0 * kf));
        tg = tg.mul(x3).div_f64((3.0 * kf) * (3.0 * kf + 1.0));
        tgp = tgp.mul(x3).div_f64((3.0 * kf - 2.0) * (3.0 * kf));
        f = f.add(tf);
        g = g.add(tg);
        gp = gp.add(tgp);
        if k >= 2 {
            tfp = tfp.mul(x3).div_f64(3.0 * (kf - 1.0) * (3.0 * kf - 1.0));
            fp = fp.add(tfp);
        }
        let small = 1e-34 * scale;
        if tf.hi.abs() < small && tg.hi.abs() < small && tgp.hi.abs() < small && tfp.hi.abs() < small
        {
            break;
        }
    }
    let ai = C1.mul(f).add(C2.mul(g).neg());
    let aip = C1.mul(fp).add(C2.mul(gp).neg());
    let bi = SQRT3.mul(C1.mul(f).add(C2.mul(g)));
    let bip = SQRT3.mul(C1.mul(fp).add(C2.mul(gp)));
    AiryValues { ai: ai.to_f64(), bi: bi.to_f64(), ai_prime: aip.to_f64(), bi_prime: bip.to_f64() }
}

// u_k and v_k coefficients of the asymptotic expansions.
fn uv_coefficients() -> &'static (Vec<f64>, Vec<f64>) {
    static UV: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    UV.get_or_init(|| {
    let mut u = vec![1.0; N_ASY];
    let mut v = vec![1.0; N_ASY];
    for k in 1..N_ASY {
        let kf = k as f64;
        u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        v[k] = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u[k];
    }
    (u, v)
    })
}

const N_ASY: usize = 40;

// Sums Σ s^k c_k ζ^{-k} until terms stop shrinking.
fn asy_sum(c: &[f64], zeta: f64, alternate: bool) -> f64 {
    let mut sum = 0.0;
    let mut p = 1.0;
    let mut last = f64::INFINITY;
    for (k, ck) in c.iter().enumerate() {
        let t = ck * p;
        if t.abs() > last {
            break;
        }
        sum += if alternate && k % 2 == 1 { -t } else { t };
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
        last = t.abs();
        p /= zeta;
    }
    sum
}

fn asymptotic_positive(x: f64) -> AiryValues {
    let (u, v) = uv_coefficients();
    let zeta = airy_exponent(x);
    let q = x.sqrt().sqrt();
    AiryValues {
        ai: 0.5 * FRAC_1_SQRT_PI / q * asy_sum(u, zeta, true),
        ai_prime: -0.5 * FRAC_1_SQRT_PI * q * asy_sum(v, zeta, true),
        bi: FRAC_1_SQRT_PI / q * asy_sum(u, zeta, false),
        bi_prime: FRAC_1_SQRT_PI * q * asy_sum(v, zeta, false),
    }
}

// Even and odd partial sums Σ(-1)^k c_{2k} ζ^{-2k}, Σ(-1)^k c_{2k+1} ζ^{-2k-1}.
fn asy_even_odd(c: &[f64], zeta: f64) -> (f64, f64) {
    let (mut even, mut odd) = (0.0, 0.0);
    let mut p = 1.0;
    let mut last = f64::INFINITY;
    for (k, ck) in c.iter().enumerate() {
        let t = ck * p;
        if t.abs() > last {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            even += sign * t;
        } else {
            odd += sign * t;
        }
        if t.abs() < 1e-17 {
            break;
        }
        last = t.abs();
        p /= zeta;
    }
    (even, odd)
}

fn asymptotic_negative(y: f64) -> AiryValues {
    let (u, v) = uv_coefficients();
    let zeta = airy_exponent(y);
    let q = y.sqrt().sqrt();
    let (s, c) = (zeta - std::f64::consts::FRAC_PI_4).sin_cos();
    let (ue, uo) = asy_even_odd(u, zeta);
    let (ve, vo) = asy_even_odd(v, zeta);
    AiryValues {
        ai: FRAC_1_SQRT_PI / q * (c * ue + s * uo),
        ai_prime: FRAC_1_SQRT_PI * q * (s * ve - c * vo),
        bi: FRAC_1_SQRT_PI / q * (-s * ue + c * uo),
        bi_prime: FRAC_1_SQRT_PI * q * (c * ve + s * vo),
    }
}

// ---- Laguerre ----

/// L_n(x) by upward three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Successive values of e^{-x/2} L_n(x), n = 0, 1, 2, ...
///
/// The recurrence is carried with a separate logarithmic scale so that
/// neither the polynomial (large x, large n) nor the exponential weight
/// overflows.  Values whose true magnitude is below the double range come
/// out as zero.
#[derive(Debug, Clone)]
pub struct LaguerreFunctions {
    x: f64,
    n: usize,
    prev: f64,
    cur: f64,
    log_scale: f64,
}

impl LaguerreFunctions {
    pub fn new(x: f64) -> Self {
        LaguerreFunctions { x, n: 0, prev: 0.0, cur: 1.0, log_scale: -0.5 * x }
    }
}

impl Iterator for LaguerreFunctions {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let value = if self.log_scale > -700.0 {
            self.cur * self.log_scale.exp()
        } else if self.cur == 0.0 {
            0.0
        } else {
            self.cur.signum() * (self.cur.abs().ln() + self.log_scale).exp()
        };
        let nf = self.n as f64;
        let next = ((2.0 * nf + 1.0 - self.x) * self.cur - nf * self.prev) / (nf + 1.0);
        self.prev = self.cur;
        self.cur = next;
        self.n += 1;
        let m = self.cur.abs().max(self.prev.abs());
        if m > 1e100 {
            self.prev /= m;
            self.cur /= m;
            self.log_scale += m.ln();
        }
        Some(value)
    }
}
