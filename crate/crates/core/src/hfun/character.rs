use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CHAR_TOL: f64 = 1e-9;
// Multiplicativity is checked on residues a, b below this bound.
const SPOT_CHECK: u64 = 64;

/// Dirichlet character given by its value table `chi(1), ..., chi(k)`.
///
/// Serialized as the bare value list; the modulus is its length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct Character {
    values: Vec<Complex64>,
}

impl Character {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        let k = values.len() as u64;
        if k == 0 {
            return Err(Error::InvalidCharacter("modulus must be at least 1".into()));
        }
        for (idx, v) in values.iter().enumerate() {
            let i = idx as u64 + 1;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidCharacter(format!("chi({i}) is not finite")));
            }
            if gcd(i, k) > 1 {
                if v.norm() > CHAR_TOL {
                    return Err(Error::InvalidCharacter(format!(
                        "chi({i}) must vanish since gcd({i}, {k}) > 1"
                    )));
                }
            } else if (v.norm() - 1.0).abs() > CHAR_TOL {
                return Err(Error::InvalidCharacter(format!("|chi({i})| = {} != 1", v.norm())));
            }
        }
        let chi = Character { values };
        if (chi.value(1) - 1.0).norm() > CHAR_TOL {
            return Err(Error::InvalidCharacter("chi(1) must be 1".into()));
        }
        let limit = k.min(SPOT_CHECK);
        for a in 1..=limit {
            for b in a..=limit {
                let lhs = chi.value(a * b);
                let rhs = chi.value(a) * chi.value(b);
                if (lhs - rhs).norm() > CHAR_TOL {
                    return Err(Error::InvalidCharacter(format!(
                        "chi({a}*{b}) != chi({a}) chi({b})"
                    )));
                }
            }
        }
        Ok(chi)
    }

    /// The principal character modulo `k`.
    pub fn principal(k: u32) -> Result<Self> {
        let k = k as u64;
        Character::new(
            (1..=k)
                .map(|i| Complex64::new(if gcd(i, k) == 1 { 1.0 } else { 0.0 }, 0.0))
                .collect(),
        )
    }

    /// The non-principal character modulo 4: `1, 0, -1, 0`.
    pub fn chi_minus_4() -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Character {
            values: vec![c(1.0), c(0.0), c(-1.0), c(0.0)],
        }
    }

    pub fn modulus(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `chi(n)`, extended periodically.
    pub fn value(&self, n: u64) -> Complex64 {
        let k = self.values.len() as u64;
        let r = (n % k) as usize;
        if r == 0 {
            self.values[k as usize - 1]
        } else {
            self.values[r - 1]
        }
    }

    pub fn is_principal(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.norm() < CHAR_TOL || (v - 1.0).norm() < CHAR_TOL)
    }
}

impl TryFrom<Vec<Complex64>> for Character {
    type Error = Error;

    fn try_from(values: Vec<Complex64>) -> Result<Self> {
        Character::new(values)
    }
}

impl From<Character> for Vec<Complex64> {
    fn from(chi: Character) -> Self {
        chi.values
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
