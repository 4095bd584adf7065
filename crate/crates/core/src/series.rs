//! One-variable power series over the rationals, truncated at a fixed degree.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exactlin::{factorial, fmt_rational, Rational};

/// Coefficients `c_0, c_1, ..., c_N` of `sum c_k t^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSeries {
    #[serde(with = "rational_vec")]
    pub coeffs: Vec<Rational>,
}

impl PowerSeries {
    pub fn zero(n: usize) -> Self {
        PowerSeries { coeffs: vec![Rational::zero(); n + 1] }
    }

    pub fn one(n: usize) -> Self {
        let mut s = Self::zero(n);
        s.coeffs[0] = Rational::one();
        s
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>, n: usize) -> Self {
        coeffs.resize(n + 1, Rational::zero());
        PowerSeries { coeffs }
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, o: &PowerSeries) -> PowerSeries {
        let n = self.degree_bound().min(o.degree_bound());
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] + &o.coeffs[k]).collect() }
    }

    pub fn sub(&self, o: &PowerSeries) -> PowerSeries {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> PowerSeries {
        PowerSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, o: &PowerSeries) -> PowerSeries {
        let n = self.degree_bound().min(o.degree_bound());
        let mut out = vec![Rational::zero(); n + 1];
        for i in 0..=n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                out[i + j] += &self.coeffs[i] * &o.coeffs[j];
            }
        }
        PowerSeries { coeffs: out }
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn inverse(&self) -> PowerSeries {
        let n = self.degree_bound();
        let c0 = self.coeffs[0].recip();
        let mut out = vec![Rational::zero(); n + 1];
        out[0] = c0.clone();
        for k in 1..=n {
            let mut s = Rational::zero();
            for i in 1..=k {
                s += &self.coeffs[i] * &out[k - i];
            }
            out[k] = -(s * &c0);
        }
        PowerSeries { coeffs: out }
    }

    /// `log(f)` for `f` with constant term 1.
    pub fn log(&self) -> PowerSeries {
        assert!(self.coeffs[0].is_one(), "log needs constant term 1");
        let n = self.degree_bound();
        let mut g = self.clone();
        g.coeffs[0] = Rational::zero();
        let mut out = PowerSeries::zero(n);
        let mut pow = PowerSeries::one(n);
        for k in 1..=n {
            pow = pow.mul(&g);
            let sign = if k % 2 == 1 { Rational::one() } else { -Rational::one() };
            out = out.add(&pow.scale(&(sign / Rational::from_integer(k.into()))));
        }
        out
    }

    /// Drops the constant term and divides by `t` (degree bound shrinks by one).
    pub fn shift_down(&self) -> PowerSeries {
        PowerSeries { coeffs: self.coeffs[1..].to_vec() }
    }

    pub fn odd_part(&self) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().enumerate().map(|(k, c)| if k % 2 == 1 { c.clone() } else { Rational::zero() }).collect(),
        }
    }

    pub fn even_part(&self) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().enumerate().map(|(k, c)| if k % 2 == 0 { c.clone() } else { Rational::zero() }).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// `t^k` terms printed as `c*s^k`.
    pub fn render(&self, var: &str) -> String {
        let terms: Vec<(String, &Rational)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let b = match k {
                    0 => "1".to_string(),
                    1 => var.to_string(),
                    _ => format!("{var}^{k}"),
                };
                (b, c)
            })
            .collect();
        crate::text::format_sum(terms.into_iter())
    }
}

/// `(e^t - 1)/t = sum t^k/(k+1)!`
pub fn exp_difference_quotient(n: usize) -> PowerSeries {
    PowerSeries { coeffs: (0..=n).map(|k| factorial(k + 1).recip()).collect() }
}

/// `e^t`
pub fn exp_series(n: usize) -> PowerSeries {
    PowerSeries { coeffs: (0..=n).map(|k| factorial(k).recip()).collect() }
}

/// `t/(e^t - 1) = 1 - t/2 + t^2/12 - ...`
pub fn bernoulli_generating(n: usize) -> PowerSeries {
    exp_difference_quotient(n).inverse()
}

/// `r(s) = log((e^s - 1)/s)`
pub fn duflo_r(n: usize) -> PowerSeries {
    exp_difference_quotient(n).log()
}

/// `s(z) = 1/(1 - e^{-z}) - 1/z`
pub fn duflo_s(n: usize) -> PowerSeries {
    // z/(1-e^{-z}) is the inverse of (1-e^{-z})/z = sum (-1)^k z^k/(k+1)!
    let q = PowerSeries {
        coeffs: (0..=n + 1)
            .map(|k| {
                let c = factorial(k + 1).recip();
                if k % 2 == 1 {
                    -c
                } else {
                    c
                }
            })
            .collect(),
    };
    let a = q.inverse();
    a.shift_down()
}

pub fn render_coeffs(c: &[Rational]) -> Vec<String> {
    c.iter().map(fmt_rational).collect()
}

pub(crate) mod rational_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::exactlin::{fmt_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(fmt_rational).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s}"))))
            .collect()
    }
}
