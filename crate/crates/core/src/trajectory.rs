//! Observations `Y_t^{(i,s)}` keyed by subgroup, trajectory and period.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObservationKey {
    pub subgroup: String,
    pub trajectory: String,
    pub period: u32,
}

impl ObservationKey {
    pub fn new(subgroup: impl Into<String>, trajectory: impl Into<String>, period: u32) -> Self {
        Self {
            subgroup: subgroup.into(),
            trajectory: trajectory.into(),
            period,
        }
    }
}

/// Scalar observations of several trajectories in several subgroups.
/// Trajectories may have different, non-contiguous period sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectorySet {
    observations: BTreeMap<ObservationKey, f64>,
}

impl TrajectorySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations<I>(obs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ObservationKey, f64)>,
    {
        let mut set = Self::new();
        for (k, v) in obs {
            set.insert(k, v)?;
        }
        Ok(set)
    }

    /// Adds one observation; periods start at 1 and keys must be unique.
    pub fn insert(&mut self, key: ObservationKey, value: f64) -> Result<()> {
        if key.period == 0 {
            return Err(Error::invalid("periods are positive integers"));
        }
        if key.subgroup.is_empty() || key.trajectory.is_empty() {
            return Err(Error::invalid("subgroup and trajectory labels must be non-empty"));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!(
                "observation ({}, {}, {}) is not finite",
                key.subgroup, key.trajectory, key.period
            )));
        }
        if self.observations.contains_key(&key) {
            return Err(Error::invalid(format!(
                "duplicate observation ({}, {}, {})",
                key.subgroup, key.trajectory, key.period
            )));
        }
        self.observations.insert(key, value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn get(&self, key: &ObservationKey) -> Option<f64> {
        self.observations.get(key).copied()
    }

    pub fn contains(&self, key: &ObservationKey) -> bool {
        self.observations.contains_key(key)
    }

    /// Observations in `(subgroup, trajectory, period)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&ObservationKey, f64)> + '_ {
        self.observations.iter().map(|(k, &v)| (k, v))
    }

    pub fn subgroups(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.observations.keys().map(|k| &k.subgroup).collect();
        set.into_iter().cloned().collect()
    }

    pub fn trajectories(&self, subgroup: &str) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .observations
            .keys()
            .filter(|k| k.subgroup == subgroup)
            .map(|k| &k.trajectory)
            .collect();
        set.into_iter().cloned().collect()
    }

    /// `T^{(i,s)}` with values.
    pub fn trajectory(&self, subgroup: &str, trajectory: &str) -> BTreeMap<u32, f64> {
        self.observations
            .iter()
            .filter(|(k, _)| k.subgroup == subgroup && k.trajectory == trajectory)
            .map(|(k, &v)| (k.period, v))
            .collect()
    }

    /// Union of all observed periods, `T⁺`.
    pub fn periods(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.observations.keys().map(|k| k.period).collect();
        set.into_iter().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.observations.values().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn retain<F: FnMut(&ObservationKey, f64) -> bool>(&mut self, mut keep: F) {
        self.observations.retain(|k, v| keep(k, *v));
    }

    pub fn map_values<F: Fn(&ObservationKey, f64) -> f64>(&self, f: F) -> Self {
        Self {
            observations: self
                .observations
                .iter()
                .map(|(k, &v)| (k.clone(), f(k, v)))
                .collect(),
        }
    }

    /// Adds `offset` to every period label.
    pub fn shift_periods(&self, offset: u32) -> Self {
        Self {
            observations: self
                .observations
                .iter()
                .map(|(k, &v)| {
                    let mut k = k.clone();
                    k.period += offset;
                    (k, v)
                })
                .collect(),
        }
    }

    /// Keeps the first `keep` trajectories (label order) of `subgroup`.
    pub fn truncate_trajectories(&self, subgroup: &str, keep: usize) -> Self {
        let kept: BTreeSet<String> = self.trajectories(subgroup).into_iter().take(keep).collect();
        let mut out = self.clone();
        out.retain(|k, _| k.subgroup != subgroup || kept.contains(&k.trajectory));
        out
    }

    /// Keeps periods `<= horizon`.
    pub fn truncate_horizon(&self, horizon: u32) -> Self {
        let mut out = self.clone();
        out.retain(|k, _| k.period <= horizon);
        out
    }

    pub fn is_subset_of(&self, other: &TrajectorySet) -> bool {
        self.observations
            .iter()
            .all(|(k, v)| other.observations.get(k) == Some(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str, i: &str, t: u32) -> ObservationKey {
        ObservationKey::new(s, i, t)
    }

    #[test]
    fn insert_validates() {
        let mut d = TrajectorySet::new();
        d.insert(key("a", "1", 3), 1.0).unwrap();
        assert!(d.insert(key("a", "1", 3), 2.0).is_err());
        assert!(d.insert(key("a", "1", 0), 2.0).is_err());
        assert!(d.insert(key("a", "1", 4), f64::NAN).is_err());
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn structure_queries() {
        let d = TrajectorySet::from_observations([
            (key("b", "2", 5), 1.0),
            (key("a", "1", 1), 2.0),
            (key("a", "2", 3), 3.0),
        ])
        .unwrap();
        assert_eq!(d.subgroups(), ["a", "b"]);
        assert_eq!(d.trajectories("a"), ["1", "2"]);
        assert_eq!(d.periods(), [1, 3, 5]);
        assert_eq!(d.shift_periods(2).periods(), [3, 5, 7]);
        assert_eq!(d.truncate_trajectories("a", 1).len(), 2);
        assert!(d.truncate_horizon(3).is_subset_of(&d));
    }
}
