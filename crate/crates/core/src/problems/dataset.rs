use serde::{Deserialize, Serialize};

/// One example `z`. The quadratic family uses `features` as the additive
/// perturbation; logistic uses it as the covariate and `label` as +/-1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Datum {
    pub features: Vec<f64>,
    pub label: f64,
}

/// Fixed, ordered sample `z_1..z_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    items: Vec<Datum>,
}

impl Dataset {
    pub fn new(items: Vec<Datum>) -> Self {
        Dataset { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `z_t` for 1-based `t`.
    pub fn get(&self, t: usize) -> Option<&Datum> {
        t.checked_sub(1).and_then(|i| self.items.get(i))
    }

    pub fn items(&self) -> &[Datum] {
        &self.items
    }

    /// Neighboring dataset: identical except at 1-based index `q`.
    pub fn neighbor(&self, q: usize, replacement: Datum) -> Dataset {
        assert!(q >= 1 && q <= self.items.len(), "index {q} outside 1..={}", self.items.len());
        let mut items = self.items.clone();
        items[q - 1] = replacement;
        Dataset { items }
    }

    /// Number of positions where the datasets differ.
    pub fn hamming(&self, other: &Dataset) -> usize {
        self.items
            .iter()
            .zip(&other.items)
            .filter(|(a, b)| a != b)
            .count()
            + self.items.len().abs_diff(other.items.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: f64) -> Datum {
        Datum { features: vec![v], label: 0.0 }
    }

    #[test]
    fn neighbor_replaces_exactly_one() {
        let z = Dataset::new((0..10).map(|i| d(i as f64)).collect());
        let z2 = z.neighbor(4, d(-1.0));
        assert_eq!(z.hamming(&z2), 1);
        assert_eq!(z2.get(4).unwrap().features[0], -1.0);
        assert_eq!(z.get(4).unwrap().features[0], 3.0);
    }

    #[test]
    fn one_based_access() {
        let z = Dataset::new(vec![d(1.0)]);
        assert!(z.get(0).is_none());
        assert!(z.get(1).is_some());
        assert!(z.get(2).is_none());
    }
}
