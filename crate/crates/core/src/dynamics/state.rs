use super::amplitude::{Amplitude, GaussianRational};
use super::DynamicsError;
use crate::reversible::ExtendedBasisState;
use crate::Rational;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Tolerance on the squared norm of floating states.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Finitely supported state `Σ c_x |x⟩` representing `U(t)|ψ⟩` at `time_tag`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    entries: BTreeMap<ExtendedBasisState, Amplitude>,
    time_tag: Rational,
    mid_pulse: bool,
}

impl SparseState {
    /// The basis state `|x⟩` at time 0.
    pub fn basis(label: ExtendedBasisState) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(label, Amplitude::one());
        SparseState {
            entries,
            time_tag: Rational::zero(),
            mid_pulse: false,
        }
    }

    /// Builds a normalized state. Zero amplitudes are dropped; repeated
    /// labels are rejected.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (ExtendedBasisState, Amplitude)>,
        time_tag: Rational,
    ) -> Result<Self, DynamicsError> {
        let mut map = BTreeMap::new();
        for (label, amp) in entries {
            if amp.is_zero() {
                continue;
            }
            if map.insert(label, amp).is_some() {
                return Err(DynamicsError::DuplicateLabel);
            }
        }
        let state = SparseState {
            entries: map,
            time_tag,
            mid_pulse: false,
        };
        state.check_normalized()?;
        Ok(state)
    }

    pub(crate) fn from_parts(
        entries: BTreeMap<ExtendedBasisState, Amplitude>,
        time_tag: Rational,
        mid_pulse: bool,
    ) -> Self {
        SparseState {
            entries,
            time_tag,
            mid_pulse,
        }
    }

    pub(crate) fn into_parts(self) -> (BTreeMap<ExtendedBasisState, Amplitude>, Rational) {
        (self.entries, self.time_tag)
    }

    pub fn time_tag(&self) -> Rational {
        self.time_tag
    }

    /// True when the state was sampled strictly inside a pulse.
    pub fn is_mid_pulse(&self) -> bool {
        self.mid_pulse
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ExtendedBasisState, &Amplitude)> {
        self.entries.iter()
    }

    pub fn amplitude(&self, label: &ExtendedBasisState) -> Option<&Amplitude> {
        self.entries.get(label)
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(Amplitude::is_exact)
    }

    /// Largest per-amplitude error bound.
    pub fn max_error(&self) -> f64 {
        self.entries.values().map(Amplitude::error_bound).fold(0.0, f64::max)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(Amplitude::norm_sqr).sum()
    }

    pub fn exact_norm_sqr(&self) -> Option<BigRational> {
        self.entries
            .values()
            .map(Amplitude::exact_norm_sqr)
            .try_fold(BigRational::zero(), |acc, x| Some(acc + x?))
    }

    pub fn check_normalized(&self) -> Result<(), DynamicsError> {
        if let Some(n) = self.exact_norm_sqr() {
            if n.is_one() {
                return Ok(());
            }
            return Err(DynamicsError::NotNormalized {
                norm_sqr: num_traits::ToPrimitive::to_f64(&n).unwrap_or(f64::NAN),
            });
        }
        let n = self.norm_sqr();
        if (n - 1.0).abs() <= NORM_TOLERANCE {
            Ok(())
        } else {
            Err(DynamicsError::NotNormalized { norm_sqr: n })
        }
    }

    /// `⟨self|other⟩`, exact when both states are exact.
    pub fn inner_exact(&self, other: &SparseState) -> Option<GaussianRational> {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = GaussianRational::zero();
        for (label, a) in &small.entries {
            let Some(b) = large.entries.get(label) else {
                continue;
            };
            let (Amplitude::Exact(a), Amplitude::Exact(b)) = (a, b) else {
                return None;
            };
            acc += if conj_small { a.conj() * b } else { b.conj() * a };
        }
        Some(acc)
    }

    /// JSON dump: array of `[label hex, re, im]` triples in label order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.entries
                .iter()
                .map(|(label, a)| {
                    let z = a.to_c64();
                    serde_json::json!([label.to_hex(), z.re, z.im])
                })
                .collect(),
        )
    }
}
