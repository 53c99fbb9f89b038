use serde::{Deserialize, Serialize};

use super::{Result, WaveletError};

const HAAR: [f64; 2] = [
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
];

const DB2: [f64; 4] = [
    -0.12940952255126037,
    0.2241438680420134,
    0.8365163037378079,
    0.48296291314453416,
];

const DB4: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

// Least-asymmetric Daubechies factor of order 5, solved at 50-digit precision
// and rounded; agrees with the usual published table to 2e-12.
const SYM5: [f64; 10] = [
    0.027333068344998768,
    0.02951949092570626,
    -0.039134249302313844,
    0.19939753397685558,
    0.7234076904040407,
    0.633978963456792,
    0.01660210576451085,
    -0.17532808990805623,
    -0.021101834024689042,
    0.019538882735249827,
];

/// Analysis and synthesis filters of an orthogonal wavelet.
///
/// Filters are stored in convolution order: the analysis step computes
/// `c[k] = Σ_j dec[j] · x[2k + 1 − j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    pub name: String,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
    /// Number of vanishing moments of the wavelet.
    pub vanishing_moments: usize,
}

impl FilterBank {
    /// Builds the quadrature-mirror bank of an orthogonal scaling filter:
    /// `g[n] = (−1)^(n+1) h[L−1−n]`, synthesis filters are the time reverses.
    pub fn orthogonal(name: &str, dec_lo: &[f64], vanishing_moments: usize) -> Self {
        let len = dec_lo.len();
        let dec_hi: Vec<f64> = (0..len)
            .map(|n| {
                let v = dec_lo[len - 1 - n];
                if n % 2 == 0 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let rec_lo = dec_lo.iter().rev().copied().collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        Self {
            name: name.to_string(),
            dec_lo: dec_lo.to_vec(),
            dec_hi,
            rec_lo,
            rec_hi,
            vanishing_moments,
        }
    }

    pub fn haar() -> Self {
        Self::orthogonal("haar", &HAAR, 1)
    }

    pub fn daubechies2() -> Self {
        Self::orthogonal("db2", &DB2, 2)
    }

    pub fn daubechies4() -> Self {
        Self::orthogonal("db4", &DB4, 4)
    }

    /// Symlet of order 5, the default for smoothing.
    pub fn symlet5() -> Self {
        Self::orthogonal("sym5", &SYM5, 5)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "haar" | "db1" => Ok(Self::haar()),
            "db2" => Ok(Self::daubechies2()),
            "db4" => Ok(Self::daubechies4()),
            "sym5" => Ok(Self::symlet5()),
            other => Err(WaveletError::UnknownWavelet(other.to_string())),
        }
    }

    pub fn shipped() -> Vec<Self> {
        vec![
            Self::haar(),
            Self::daubechies2(),
            Self::daubechies4(),
            Self::symlet5(),
        ]
    }

    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }
}

impl Default for FilterBank {
    fn default() -> Self {
        Self::symlet5()
    }
}
