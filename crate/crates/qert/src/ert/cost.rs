//! Runtime cost models.

use super::ErtError;
use crate::frontend::Ir;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-operation time costs.
///
/// `skip` consumes `skip` units (1 by default); initializations, unitaries
/// and measurements are looked up by label, falling back to `default` when
/// set. A missing label with `default: null` is an error.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CostModel {
    pub skip: f64,
    #[serde(default)]
    pub init: BTreeMap<String, f64>,
    #[serde(default)]
    pub unitary: BTreeMap<String, f64>,
    #[serde(default)]
    pub measurement: BTreeMap<String, f64>,
    pub default: Option<f64>,
}

impl Default for CostModel {
    fn default() -> Self {
        Self::unit()
    }
}

impl CostModel {
    /// Every operation costs 1 unit.
    pub fn unit() -> Self {
        Self {
            skip: 1.0,
            init: BTreeMap::new(),
            unitary: BTreeMap::new(),
            measurement: BTreeMap::new(),
            default: Some(1.0),
        }
    }

    /// Every operation is free (useful for isolating one label).
    pub fn zero() -> Self {
        Self {
            skip: 0.0,
            init: BTreeMap::new(),
            unitary: BTreeMap::new(),
            measurement: BTreeMap::new(),
            default: Some(0.0),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, ErtError> {
        let model: CostModel =
            serde_json::from_str(json).map_err(|e| ErtError::BadCostModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ErtError> {
        let all = std::iter::once(&self.skip)
            .chain(self.init.values())
            .chain(self.unitary.values())
            .chain(self.measurement.values())
            .chain(self.default.iter());
        for &v in all {
            if !v.is_finite() || v < 0.0 {
                return Err(ErtError::BadCostModel(format!(
                    "costs must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn lookup(&self, table: &BTreeMap<String, f64>, label: &str) -> Result<f64, ErtError> {
        table
            .get(label)
            .copied()
            .or(self.default)
            .ok_or_else(|| ErtError::MissingCost(label.to_string()))
    }

    pub fn init_cost(&self, label: &str) -> Result<f64, ErtError> {
        self.lookup(&self.init, label)
    }

    pub fn unitary_cost(&self, label: &str) -> Result<f64, ErtError> {
        self.lookup(&self.unitary, label)
    }

    pub fn measurement_cost(&self, label: &str) -> Result<f64, ErtError> {
        self.lookup(&self.measurement, label)
    }

    /// All labels of a program resolve to a cost.
    pub fn check_program(&self, ir: &Ir) -> Result<(), ErtError> {
        match ir {
            Ir::Skip => Ok(()),
            Ir::InitKet { label, .. } => self.init_cost(label).map(|_| ()),
            Ir::Unitary(op) => self.unitary_cost(op.label()).map(|_| ()),
            Ir::Seq(items) => items.iter().try_for_each(|i| self.check_program(i)),
            Ir::Case { mset, branches } => {
                self.measurement_cost(mset.label())?;
                branches
                    .iter()
                    .try_for_each(|(_, b)| self.check_program(b))
            }
            Ir::While { mset, body, .. } => {
                self.measurement_cost(mset.label())?;
                self.check_program(body)
            }
        }
    }

    /// Every cost (including `skip`) scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            skip: self.skip * factor,
            init: self
                .init
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
            unitary: self
                .unitary
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
            measurement: self
                .measurement
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
            default: self.default.map(|d| d * factor),
        }
    }

    /// Deterministic fingerprint of the canonical JSON form (FNV-1a).
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("cost models serialize");
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100_0000_01b3);
        }
        format!("{hash:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_schema() {
        let json = r#"{"skip": 1, "init": {"|0>": 1, "|+>": 1, "|++>": 1},
                       "unitary": {"H": 1}, "measurement": {"M_m": 2}, "default": null}"#;
        let m = CostModel::from_json(json).unwrap();
        assert_eq!(m.measurement_cost("M_m").unwrap(), 2.0);
        assert!(matches!(
            m.unitary_cost("X"),
            Err(ErtError::MissingCost(l)) if l == "X"
        ));
    }

    #[test]
    fn default_fills_gaps() {
        let m = CostModel::unit();
        assert_eq!(m.init_cost("|anything>").unwrap(), 1.0);
    }

    #[test]
    fn rejects_negative_costs() {
        let json = r#"{"skip": -1, "default": null}"#;
        assert!(CostModel::from_json(json).is_err());
    }

    #[test]
    fn scaling_scales_everything() {
        let mut m = CostModel::unit();
        m.measurement.insert("M".into(), 3.0);
        let s = m.scaled(2.0);
        assert_eq!(s.skip, 2.0);
        assert_eq!(s.measurement_cost("M").unwrap(), 6.0);
        assert_eq!(s.init_cost("|0>").unwrap(), 2.0);
    }
}
