//! Finite simple configurations on `(0, ∞)` and their counting paths.
//!
//! A [`Configuration`] is an immutable, strictly increasing list of positive
//! jump times. It doubles as the counting path `N(t) = #{n : T_n <= t}`.

use std::fmt;
use std::io::{Read, Write};
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Configuration {
    jumps: Vec<f64>,
}

fn check_time(t: f64, what: &str) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

impl Configuration {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a configuration, rejecting non-positive, non-finite, unordered
    /// or duplicated times.
    pub fn new(jumps: Vec<f64>) -> Result<Self> {
        for (i, &t) in jumps.iter().enumerate() {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "jump time at position {i} must be finite and positive, got {t}"
                )));
            }
            if i > 0 {
                let prev = jumps[i - 1];
                if prev == t {
                    return Err(Error::DuplicateJump {
                        time: t,
                        first: i - 1,
                        second: i,
                    });
                }
                if prev > t {
                    return Err(Error::NotIncreasing {
                        previous: prev,
                        next: t,
                        index: i,
                    });
                }
            }
        }
        Ok(Self { jumps })
    }

    /// Crate-internal constructor for sequences produced by the simulators,
    /// which are increasing by construction.
    pub(crate) fn from_sorted_unchecked(jumps: Vec<f64>) -> Self {
        debug_assert!(jumps.windows(2).all(|w| w[0] < w[1]));
        Self { jumps }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jumps
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.jumps
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// `T_k`, 1-based as in the usual point-process notation.
    pub fn jump(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.jumps.get(i).copied())
    }

    /// `N(t) = #{n : T_n <= t}`.
    pub fn count(&self, t: f64) -> Result<usize> {
        check_time(t, "time")?;
        Ok(self.count_unchecked(t))
    }

    pub(crate) fn count_unchecked(&self, t: f64) -> usize {
        self.jumps.partition_point(|&x| x <= t)
    }

    /// Number of jumps strictly before `t`, i.e. `N(t-)`.
    pub fn count_before(&self, t: f64) -> usize {
        self.jumps.partition_point(|&x| x < t)
    }

    /// The path stopped at `a`: jumps in `(0, a]`.
    pub fn stop(&self, a: f64) -> Result<Self> {
        check_time(a, "stopping time")?;
        Ok(self.prefix(self.count_unchecked(a)))
    }

    /// Jumps strictly before `t`; the history visible to a predictable
    /// intensity at time `t`.
    pub fn strictly_before(&self, t: f64) -> Self {
        self.prefix(self.count_before(t))
    }

    /// The first `n` jumps.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            jumps: self.jumps[..n.min(self.jumps.len())].to_vec(),
        }
    }

    /// Interarrival times `T_1, T_2 - T_1, ...`.
    pub fn interarrivals(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.jumps
            .iter()
            .map(|&t| {
                let d = t - prev;
                prev = t;
                d
            })
            .collect()
    }

    /// Writes the configuration as a single CSV row of ascending times.
    pub fn write_csv_row<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        if self.jumps.is_empty() {
            w.write_record(std::iter::empty::<&[u8]>())?;
        } else {
            w.write_record(self.jumps.iter().map(|t| t.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a configuration from the first row of a CSV source.
    pub fn read_csv_row<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut times = Vec::new();
        if let Some(record) = r.records().next() {
            for (i, field) in record?.iter().enumerate() {
                if field.is_empty() {
                    continue;
                }
                let t: f64 = field.parse().map_err(|_| {
                    Error::InvalidArgument(format!("field {i}: cannot parse {field:?} as a time"))
                })?;
                times.push(t);
            }
        }
        Self::new(times)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.jumps).expect("f64 slices always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: Vec<f64> = serde_json::from_str(s)?;
        Self::new(v)
    }
}

/// Absolute difference of counting paths, `|N_omega(t) - N_eta(t)|`.
pub fn diff_count(omega: &Configuration, eta: &Configuration, t: f64) -> Result<usize> {
    Ok(omega.count(t)?.abs_diff(eta.count(t)?))
}

impl Deref for Configuration {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.jumps
    }
}

impl TryFrom<Vec<f64>> for Configuration {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.jumps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.jumps.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Configuration::new(v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(v: &[f64]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn count_examples() {
        assert_eq!(cfg(&[0.3, 0.7]).count(0.5).unwrap(), 1);
        assert_eq!(cfg(&[0.3, 0.7]).count(0.7).unwrap(), 2);
        assert_eq!(Configuration::empty().count(10.0).unwrap(), 0);
    }

    #[test]
    fn count_rejects_bad_time() {
        let c = cfg(&[1.0]);
        assert!(matches!(c.count(-1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(c.count(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(matches!(c.count(f64::INFINITY), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn stop_examples() {
        let c = cfg(&[1.0, 2.5]);
        assert_eq!(c.stop(2.0).unwrap(), cfg(&[1.0]));
        assert_eq!(c.stop(0.0).unwrap(), Configuration::empty());
        assert_eq!(c.stop(2.5).unwrap(), c);
        assert!(c.stop(-0.1).is_err());
    }

    #[test]
    fn diff_count_examples() {
        let a = cfg(&[1.0, 2.0]);
        let b = cfg(&[1.0, 3.0]);
        assert_eq!(diff_count(&a, &b, 2.5).unwrap(), 1);
        assert_eq!(diff_count(&a, &b, 3.5).unwrap(), 0);
        let e = Configuration::empty();
        assert_eq!(diff_count(&e, &e, 1.0).unwrap(), 0);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            Configuration::new(vec![1.0, 1.0]),
            Err(Error::DuplicateJump { .. })
        ));
        assert!(matches!(
            Configuration::new(vec![2.0, 1.0]),
            Err(Error::NotIncreasing { .. })
        ));
        assert!(Configuration::new(vec![0.0]).is_err());
        assert!(Configuration::new(vec![-1.0]).is_err());
        assert!(Configuration::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let c = cfg(&[1e-300, 0.1, 1.0 / 3.0, std::f64::consts::PI, 7.0e10]);
        let mut buf = Vec::new();
        c.write_csv_row(&mut buf).unwrap();
        assert_eq!(Configuration::read_csv_row(buf.as_slice()).unwrap(), c);
        assert_eq!(Configuration::from_json(&c.to_json()).unwrap(), c);

        let mut buf = Vec::new();
        Configuration::empty().write_csv_row(&mut buf).unwrap();
        assert!(Configuration::read_csv_row(buf.as_slice()).unwrap().is_empty());
    }

    fn arb_config() -> impl Strategy<Value = Configuration> {
        prop::collection::vec(1e-3f64..5.0, 0..30).prop_map(|gaps| {
            let mut t = 0.0;
            let v = gaps
                .into_iter()
                .map(|g| {
                    t += g;
                    t
                })
                .collect();
            Configuration::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn count_is_monotone_with_unit_jumps(c in arb_config(), t in 0.0f64..200.0, dt in 0.0f64..5.0) {
            let a = c.count(t).unwrap();
            let b = c.count(t + dt).unwrap();
            prop_assert!(a <= b);
            for (i, &tj) in c.jump_times().iter().enumerate() {
                prop_assert_eq!(c.count(tj).unwrap(), i + 1);
                prop_assert_eq!(c.count_before(tj), i);
            }
        }

        #[test]
        fn stop_then_count(c in arb_config(), a in 0.0f64..100.0, t in 0.0f64..150.0) {
            let s = c.stop(a).unwrap();
            prop_assert_eq!(s.count(t).unwrap(), c.count(t.min(a)).unwrap());
        }

        #[test]
        fn diff_count_symmetric(x in arb_config(), y in arb_config(), t in 0.0f64..150.0) {
            prop_assert_eq!(diff_count(&x, &y, t).unwrap(), diff_count(&y, &x, t).unwrap());
        }

        #[test]
        fn serialization_round_trip(c in arb_config()) {
            let mut buf = Vec::new();
            c.write_csv_row(&mut buf).unwrap();
            prop_assert_eq!(&Configuration::read_csv_row(buf.as_slice()).unwrap(), &c);
            prop_assert_eq!(&Configuration::from_json(&c.to_json()).unwrap(), &c);
        }
    }
}
