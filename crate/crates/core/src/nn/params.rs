use indexmap::IndexMap;

use super::Tensor;
use crate::error::{Error, Result};

/// Named tensors in insertion order. Used for parameters, gradients and
/// optimizer moments alike.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    entries: IndexMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::invalid(
                "parameter name",
                format!("duplicate `{name}`"),
            ));
        }
        self.entries.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name)
    }

    /// Like [`get`](Self::get) but reports a missing key as an error.
    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::invalid("parameter name", format!("`{name}` not found")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(Tensor::len).sum()
    }

    /// Same keys, same order, same shapes, all zeros.
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), Tensor::zeros(v.shape().to_vec())))
                .collect(),
        }
    }

    /// Checks that `other` has exactly the same key sequence and per-key shapes.
    pub fn check_same_layout(&self, other: &ParamSet, op: &'static str) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::shape(
                op,
                format!("{} entries vs {}", self.entries.len(), other.entries.len()),
            ));
        }
        for ((ka, va), (kb, vb)) in self.entries.iter().zip(&other.entries) {
            if ka != kb {
                return Err(Error::shape(op, format!("key `{ka}` vs `{kb}`")));
            }
            if va.shape() != vb.shape() {
                return Err(Error::shape(
                    op,
                    format!("`{ka}` has shape {:?} vs {:?}", va.shape(), vb.shape()),
                ));
            }
        }
        Ok(())
    }

    /// `self += s * other`, key by key.
    pub fn add_scaled(&mut self, other: &ParamSet, s: f64) -> Result<()> {
        self.check_same_layout(other, "ParamSet::add_scaled")?;
        for (a, b) in self.entries.values_mut().zip(other.entries.values()) {
            a.add_scaled(b, s)?;
        }
        Ok(())
    }

    pub fn bit_eq(&self, other: &ParamSet) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
    }

    pub fn max_abs_diff(&self, other: &ParamSet) -> f64 {
        self.entries
            .values()
            .zip(other.entries.values())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_order_and_duplicates() {
        let mut p = ParamSet::new();
        p.insert("b", Tensor::zeros([2])).unwrap();
        p.insert("a", Tensor::zeros([3])).unwrap();
        assert!(p.insert("b", Tensor::zeros([1])).is_err());
        assert_eq!(p.names().collect::<Vec<_>>(), ["b", "a"]);
        assert_eq!(p.scalar_count(), 5);
    }

    #[test]
    fn layout_check_names_the_offender() {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::zeros([2, 2])).unwrap();
        let mut q = ParamSet::new();
        q.insert("w", Tensor::zeros([4])).unwrap();
        let err = p.check_same_layout(&q, "test").unwrap_err().to_string();
        assert!(err.contains("`w`"), "{err}");
        assert!(p.check_same_layout(&p.zeros_like(), "test").is_ok());
    }
}
