use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::rational::Rational;

/// A variable valuation `Var -> Q+` with finite support.
///
/// Only non-zero bindings are stored, so an unbound variable reads as 0 and
/// two valuations that differ only in explicit zeros compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation {
    bindings: BTreeMap<String, Rational>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Rational {
        self.bindings.get(var).cloned().unwrap_or_else(Rational::zero)
    }

    /// Binds `var` to `value`. Panics if `value` is negative.
    pub fn set(&mut self, var: &str, value: Rational) {
        assert!(
            !value.is_negative(),
            "valuations are non-negative, got {var} = {value}"
        );
        if value.is_zero() {
            self.bindings.remove(var);
        } else if let Some(slot) = self.bindings.get_mut(var) {
            *slot = value;
        } else {
            self.bindings.insert(var.to_string(), value);
        }
    }

    /// `η[var ↦ max{value, 0}]`, the update performed by an assignment.
    pub fn assign_clamped(&mut self, var: &str, value: Rational) {
        if value.is_negative() {
            self.set(var, Rational::zero());
        } else {
            self.set(var, value);
        }
    }

    pub fn with(mut self, var: &str, value: Rational) -> Self {
        self.set(var, value);
        self
    }

    /// Non-zero bindings in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Restriction to the given variables.
    pub fn project<'a>(&self, vars: impl IntoIterator<Item = &'a str>) -> Valuation {
        let mut out = Valuation::new();
        for var in vars {
            out.set(var, self.get(var));
        }
        out
    }
}

impl FromIterator<(String, Rational)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (String, Rational)>>(iter: I) -> Self {
        let mut out = Valuation::new();
        for (k, v) in iter {
            out.set(&k, v);
        }
        out
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        f.write_str("}")
    }
}
