//! Adapted coordinates `(t, s1..sm, q1..qn)` and their variable names.

use crate::expr::VariableBinding;

/// Parameter dimension `m` and fiber dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize) -> Self {
        Dims { m, n }
    }

    /// Name of the parameter coordinate `sigma^lambda`, 0-based.
    pub fn sigma(lambda: usize) -> String {
        format!("s{}", lambda + 1)
    }

    /// Name of the fiber coordinate `q^k`, 0-based.
    pub fn q(k: usize) -> String {
        format!("q{}", k + 1)
    }

    /// Slot layout `[t, s1.., q1..]` shared by compiled coefficient fields.
    pub fn slots(&self) -> Vec<String> {
        let mut v = vec!["t".to_string()];
        v.extend((0..self.m).map(Dims::sigma));
        v.extend((0..self.n).map(Dims::q));
        v
    }

    /// Variables allowed in fields on `Q`: time, parameters and fiber coordinates.
    pub fn field_vars(&self) -> Vec<String> {
        self.slots()
    }

    /// Variables allowed in fields on the parameter bundle: time and parameters.
    pub fn parameter_vars(&self) -> Vec<String> {
        self.slots()[..1 + self.m].to_vec()
    }

    pub fn binding(&self, t: f64, sigma: &[f64], q: &[f64]) -> VariableBinding {
        let mut b = VariableBinding::new().with("t", t);
        for (l, s) in sigma.iter().enumerate() {
            b.set(&Dims::sigma(l), *s);
        }
        for (k, x) in q.iter().enumerate() {
            b.set(&Dims::q(k), *x);
        }
        b
    }
}

pub(crate) fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}
