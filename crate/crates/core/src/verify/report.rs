//! Check results.
//!
//! The margin is relative: `(lhs - rhs) / |rhs|` for checks of the form
//! `lhs ≥ rhs` and `(rhs - lhs) / |rhs|` for `lhs ≤ rhs` (absolute when
//! `rhs = 0`). A report passes iff `margin ≥ -tolerances["margin"]`.
//!
//! Checks with side conditions fold them into the margin: a failed
//! condition with margin `m_i < -t_i` lowers the report margin to at most
//! `m_i + t_i - t`, `t` the main tolerance, so the pass rule above holds iff
//! every condition holds. Conditions that hold leave the margin alone. Each
//! condition's own margin is kept in `details`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Direction of the inequality being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    AtLeast,
    AtMost,
}

/// Relative margin of `lhs` against `rhs`.
pub fn margin(lhs: f64, rhs: f64, sense: Sense) -> f64 {
    let diff = match sense {
        Sense::AtLeast => lhs - rhs,
        Sense::AtMost => rhs - lhs,
    };
    if rhs == 0.0 {
        diff
    } else {
        diff / rhs.abs()
    }
}

/// Where a check ran.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Context {
    pub space: String,
    pub surface: Option<String>,
    pub grid: Option<String>,
    pub kappa: f64,
    pub diameter: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub space: String,
    pub surface: Option<String>,
    pub grid: Option<String>,
    pub kappa: f64,
    pub diameter: Option<f64>,
    #[serde(with = "nan_as_null")]
    pub lhs: f64,
    #[serde(with = "nan_as_null")]
    pub rhs: f64,
    #[serde(with = "nan_as_null")]
    pub margin: f64,
    pub pass: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub runtime_ms: u64,
    /// Named sub-results (condition margins, counts, worst cases).
    #[serde(default, with = "nan_map")]
    pub details: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(check: &str, ctx: &Context, lhs: f64, rhs: f64, sense: Sense, tol: f64) -> Self {
        let m = margin(lhs, rhs, sense);
        let mut tolerances = BTreeMap::new();
        tolerances.insert("margin".to_string(), tol);
        let mut details = BTreeMap::new();
        details.insert("primary.margin".to_string(), m);
        VerificationReport {
            check: check.to_string(),
            space: ctx.space.clone(),
            surface: ctx.surface.clone(),
            grid: ctx.grid.clone(),
            kappa: ctx.kappa,
            diameter: ctx.diameter,
            lhs,
            rhs,
            margin: m,
            pass: !m.is_nan() && m >= -tol,
            tolerances,
            seed: ctx.seed,
            runtime_ms: 0,
            details,
            notes: Vec::new(),
        }
    }

    /// A report for a check that could not be evaluated.
    pub fn failed(check: &str, ctx: &Context, tol: f64, reason: impl Into<String>) -> Self {
        let mut r = Self::new(check, ctx, f64::NAN, f64::NAN, Sense::AtLeast, tol);
        r.notes.push(reason.into());
        r
    }

    pub fn main_tolerance(&self) -> f64 {
        self.tolerances.get("margin").copied().unwrap_or(0.0)
    }

    /// Adds a side condition with its own margin and tolerance.
    pub fn condition(mut self, name: &str, m: f64, tol: f64) -> Self {
        let main = self.main_tolerance();
        self.details.insert(format!("{name}.margin"), m);
        self.tolerances.insert(name.to_string(), tol);
        self.margin = fold(self.margin, m, tol, main);
        self.pass = !self.margin.is_nan() && self.margin >= -main;
        self
    }

    /// A condition that holds iff `count` is zero.
    pub fn count_condition(self, name: &str, count: usize) -> Self {
        self.condition(name, 0.0 - count as f64, 0.0)
    }

    /// Replaces tolerances by name (`margin` for the main one) and
    /// recomputes the folded margin and the pass flag.
    pub fn with_tolerances(mut self, overrides: &BTreeMap<String, f64>) -> Self {
        for (k, v) in overrides {
            if let Some(t) = self.tolerances.get_mut(k) {
                *t = *v;
            }
        }
        let main = self.main_tolerance();
        let mut m = self.details.get("primary.margin").copied().unwrap_or(self.margin);
        for (name, tol) in &self.tolerances {
            if name == "margin" {
                continue;
            }
            let Some(cm) = self.details.get(&format!("{name}.margin")) else { continue };
            m = fold(m, *cm, *tol, main);
        }
        self.margin = m;
        self.pass = !m.is_nan() && m >= -main;
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn timed(mut self, start: std::time::Instant) -> Self {
        self.runtime_ms = start.elapsed().as_millis() as u64;
        self
    }
}

/// Report margin after a condition with margin `m` and tolerance `tol`.
fn fold(margin: f64, m: f64, tol: f64, main: f64) -> f64 {
    if margin.is_nan() || m.is_nan() {
        f64::NAN
    } else if m >= -tol {
        margin
    } else {
        margin.min(m + tol - main)
    }
}

/// JSON has no NaN; failed evaluations serialize as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

mod nan_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, v.is_finite().then_some(*v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
        Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        Context { space: "euclidean:3".into(), kappa: 0.0, ..Default::default() }
    }

    #[test]
    fn margins_are_relative() {
        assert_eq!(margin(3.0, 2.0, Sense::AtLeast), 0.5);
        assert_eq!(margin(3.0, 2.0, Sense::AtMost), -0.5);
        assert_eq!(margin(1e-9, 0.0, Sense::AtMost), -1e-9);
    }

    #[test]
    fn pass_iff_margin_within_tolerance() {
        let r = VerificationReport::new("x", &ctx(), 1.0 - 1e-7, 1.0, Sense::AtLeast, 1e-6);
        assert!(r.pass);
        let r = VerificationReport::new("x", &ctx(), 1.0 - 1e-5, 1.0, Sense::AtLeast, 1e-6);
        assert!(!r.pass);
        let r = VerificationReport::failed("x", &ctx(), 1e-6, "boom");
        assert!(!r.pass && r.margin.is_nan());
    }

    #[test]
    fn conditions_fold_into_margin() {
        let r = VerificationReport::new("x", &ctx(), 2.0, 1.0, Sense::AtLeast, 1e-6);
        let ok = r.clone().condition("floor", -1e-9, 1e-8);
        assert!(ok.pass);
        assert_eq!(ok.margin, 1.0);
        let bad = r.condition("floor", -1e-7, 1e-8);
        assert!(!bad.pass);
        assert!(bad.margin < -bad.main_tolerance());
    }

    #[test]
    fn tolerance_overrides_refold() {
        let r = VerificationReport::new("x", &ctx(), 1.0 - 1e-5, 1.0, Sense::AtLeast, 1e-6).condition("floor", -1e-7, 1e-8);
        assert!(!r.pass);
        let same = r.clone().with_tolerances(&BTreeMap::new());
        assert_eq!(same.margin, r.margin);
        let mut o = BTreeMap::new();
        o.insert("margin".to_string(), 1e-4);
        assert!(!r.clone().with_tolerances(&o).pass);
        o.insert("floor".to_string(), 1e-6);
        let loose = r.clone().with_tolerances(&o);
        assert!(loose.pass && (loose.margin + 1e-5).abs() < 1e-12);
        o.insert("floor".to_string(), 0.0);
        assert!(loose.with_tolerances(&o).margin < -1e-4);
    }

    #[test]
    fn json_round_trip_with_nan() {
        let r = VerificationReport::failed("x", &ctx(), 1e-6, "boom").detail("k", 2.0);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"lhs\":null"));
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert!(back.lhs.is_nan() && back.details["k"] == 2.0);
    }
}
