use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::ConvexGenerator;
use crate::math::pairwise_sum;
use crate::point::Point;

/// A finite weighted empirical distribution. Weights are positive and
/// normalized to sum to one on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl SampleSet {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("sample set"));
        }
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let dim = points[0].dim();
        if dim == 0 {
            return Err(Error::Empty("point"));
        }
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(Error::NonFinite("sample point"));
            }
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        let total = pairwise_sum(&weights);
        if !total.is_finite() {
            return Err(Error::NonFinite("weight total"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(points, alloc::vec![1.0; n])
    }

    pub fn singleton(point: Point) -> Self {
        Self {
            points: alloc::vec![point],
            weights: alloc::vec![1.0],
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Checks every atom against `g`'s domain. With `allow_boundary`, simplex
    /// faces are accepted (one-hot labels used only as first arguments).
    pub fn check_domain(&self, g: &ConvexGenerator, allow_boundary: bool) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            let res = if allow_boundary {
                g.domain().check_first_argument(p.coords())
            } else {
                g.domain().check(p.coords())
            };
            res.map_err(|e| match e {
                Error::OutsideDomain(msg) => {
                    Error::OutsideDomain(alloc::format!("sample {i}: {msg}"))
                }
                other => other,
            })?;
        }
        Ok(())
    }

    /// Σ wᵢ f(xᵢ), summed pairwise.
    pub(crate) fn expect<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&Point) -> Result<f64>,
    {
        let terms = self
            .iter()
            .map(|(p, w)| f(p).map(|v| w * v))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

/// A [`SampleSet`] partitioned by a discrete conditioning variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSampleSet {
    keys: Vec<String>,
    groups: Vec<SampleSet>,
    weights: Vec<f64>,
}

impl GroupedSampleSet {
    pub fn new(groups: Vec<(String, SampleSet)>, weights: Vec<f64>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Empty("group list"));
        }
        if weights.len() != groups.len() {
            return Err(Error::DimensionMismatch {
                expected: groups.len(),
                got: weights.len(),
            });
        }
        let dim = groups[0].1.dim();
        for (i, (key, set)) in groups.iter().enumerate() {
            if set.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: set.dim(),
                });
            }
            if groups[..i].iter().any(|(k, _)| k == key) {
                return Err(Error::DuplicateGroup(key.clone()));
            }
        }
        // reuse the weight validation of SampleSet
        let normalized = SampleSet::new(
            groups.iter().map(|(_, s)| s.points[0].clone()).collect(),
            weights,
        )?
        .weights;
        let (keys, groups) = groups.into_iter().unzip();
        Ok(Self {
            keys,
            groups,
            weights: normalized,
        })
    }

    /// Groups weighted atoms by key, in order of first appearance. A group's
    /// weight is the total weight of its atoms.
    pub fn from_labeled(points: Vec<Point>, weights: Vec<f64>, keys: Vec<String>) -> Result<Self> {
        if keys.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: keys.len(),
            });
        }
        // validates points and weights
        let all = SampleSet::new(points, weights)?;
        let mut order: Vec<String> = Vec::new();
        let mut members: Vec<(Vec<Point>, Vec<f64>)> = Vec::new();
        for ((p, w), key) in all.iter().zip(keys) {
            let slot = match order.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    order.push(key);
                    members.push((Vec::new(), Vec::new()));
                    order.len() - 1
                }
            };
            members[slot].0.push(p.clone());
            members[slot].1.push(w);
        }
        let group_weights: Vec<f64> = members.iter().map(|(_, w)| pairwise_sum(w)).collect();
        let groups = order
            .into_iter()
            .zip(members)
            .map(|(k, (pts, ws))| SampleSet::new(pts, ws).map(|s| (k, s)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups, group_weights)
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn groups(&self) -> &[SampleSet] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.groups[0].dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SampleSet, f64)> + '_ {
        self.keys
            .iter()
            .zip(&self.groups)
            .zip(self.weights.iter().copied())
            .map(|((k, s), w)| (k.as_str(), s, w))
    }

    /// The marginal distribution: atom weights become `w_z · wᵢ`.
    pub fn flatten(&self) -> SampleSet {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (_, set, wz) in self.iter() {
            for (p, w) in set.iter() {
                points.push(p.clone());
                weights.push(wz * w);
            }
        }
        SampleSet::new(points, weights).expect("flattening valid groups")
    }

    pub fn check_domain(&self, g: &ConvexGenerator, allow_boundary: bool) -> Result<()> {
        self.groups
            .iter()
            .try_for_each(|s| s.check_domain(g, allow_boundary))
    }

    pub(crate) fn expect<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&SampleSet) -> Result<f64>,
    {
        let terms = self
            .iter()
            .map(|(_, s, w)| f(s).map(|v| w * v))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn p(c: &[f64]) -> Point {
        Point::from(c)
    }

    #[test]
    fn weights_are_normalized() {
        let s = SampleSet::new(vec![p(&[0.8, 0.2]), p(&[0.6, 0.4])], vec![1.0, 3.0]).unwrap();
        assert_eq!(s.weights(), &[0.25, 0.75]);
        let u = SampleSet::uniform(vec![p(&[1.0]), p(&[2.0])]).unwrap();
        assert_eq!(u.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert_eq!(
            SampleSet::uniform(vec![]).unwrap_err(),
            Error::Empty("sample set")
        );
        assert!(matches!(
            SampleSet::uniform(vec![p(&[1.0]), p(&[1.0, 2.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            SampleSet::new(vec![p(&[1.0]), p(&[2.0])], vec![1.0, 0.0]).unwrap_err(),
            Error::InvalidWeight {
                index: 1,
                value: 0.0
            }
        );
        assert!(SampleSet::new(vec![p(&[1.0])], vec![-1.0]).is_err());
        assert!(SampleSet::uniform(vec![p(&[f64::NAN])]).is_err());
    }

    #[test]
    fn grouping_by_key() {
        let g = GroupedSampleSet::from_labeled(
            vec![p(&[0.0]), p(&[2.0]), p(&[4.0])],
            vec![1.0, 1.0, 2.0],
            vec!["a".to_string(), "a".to_string(), "b".to_string()],
        )
        .unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.keys(), &["a".to_string(), "b".to_string()]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
        assert_eq!(g.groups()[0].weights(), &[0.5, 0.5]);
        let flat = g.flatten();
        assert_eq!(flat.weights(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn duplicate_keys_rejected() {
        let s = SampleSet::singleton(p(&[1.0]));
        let err = GroupedSampleSet::new(
            vec![("a".to_string(), s.clone()), ("a".to_string(), s)],
            vec![1.0, 1.0],
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateGroup("a".to_string()));
    }
}
