use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Gaussian rational `p + q·i` with arbitrary-precision parts.
pub type GaussianRational = Complex<BigRational>;

/// A probability amplitude, exact or floating with an absolute error bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Amplitude {
    Exact(GaussianRational),
    Approx { value: Complex64, error: f64 },
}

impl Amplitude {
    pub fn one() -> Self {
        Amplitude::Exact(GaussianRational::one())
    }

    /// Exact amplitude `(re_num/re_den) + (im_num/im_den)·i`.
    pub fn rational(re: (i64, i64), im: (i64, i64)) -> Self {
        let q = |(n, d): (i64, i64)| BigRational::new(n.into(), d.into());
        Amplitude::Exact(Complex::new(q(re), q(im)))
    }

    /// Floating amplitude whose only error is the representation itself.
    pub fn float(value: Complex64) -> Self {
        Amplitude::Approx {
            value,
            error: f64::EPSILON * value.norm(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Amplitude::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Amplitude::Exact(z) => z.is_zero(),
            Amplitude::Approx { value, .. } => *value == Complex64::new(0.0, 0.0),
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Amplitude::Exact(z) => Complex64::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN)),
            Amplitude::Approx { value, .. } => *value,
        }
    }

    /// Absolute error bound; zero for exact amplitudes.
    pub fn error_bound(&self) -> f64 {
        match self {
            Amplitude::Exact(_) => 0.0,
            Amplitude::Approx { error, .. } => *error,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.to_c64().norm_sqr()
    }

    pub fn exact_norm_sqr(&self) -> Option<BigRational> {
        match self {
            Amplitude::Exact(z) => Some(z.norm_sqr()),
            Amplitude::Approx { .. } => None,
        }
    }
}
