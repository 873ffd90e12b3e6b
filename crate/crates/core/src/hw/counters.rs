//! Mapping from equivalence classes to raw PMU event encodings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fitness::{ClassMap, EquivalenceClass};
use crate::oracle::MicroarchProfile;

pub const DEFAULT_COUNTER_MAP: &str = include_str!("../../data/counters.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEvent {
    pub event: u8,
    pub umask: u8,
}

impl RawEvent {
    /// `config` value for a raw perf event.
    pub fn config(self) -> u64 {
        self.event as u64 | (self.umask as u64) << 8
    }

    pub fn parse(s: &str) -> Result<Option<RawEvent>, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unsupported") {
            return Ok(None);
        }
        let (e, u) = s.split_once(':').ok_or_else(|| format!("`{s}` is not event:umask"))?;
        let hex = |x: &str| u8::from_str_radix(x.trim().trim_start_matches("0x"), 16).map_err(|e| format!("`{s}`: {e}"));
        Ok(Some(RawEvent { event: hex(e)?, umask: hex(u)? }))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterMap {
    pub microarch: MicroarchProfile,
    /// PMU directory name under `/sys/bus/event_source/devices`.
    pub pmu: String,
    pub events: ClassMap<Option<RawEvent>>,
}

impl CounterMap {
    pub fn parse(text: &str, profile: MicroarchProfile) -> Result<CounterMap, String> {
        let doc: BTreeMap<String, BTreeMap<String, String>> = toml::from_str(text).map_err(|e| e.to_string())?;
        let table = doc.get(profile.id()).ok_or_else(|| format!("no counter table for {profile}"))?;
        let mut events = ClassMap::<Option<RawEvent>>::default();
        for c in EquivalenceClass::ALL {
            let v = table
                .get(c.event_name())
                .ok_or_else(|| format!("{profile}: {} neither mapped nor marked unsupported", c.event_name()))?;
            events[c] = RawEvent::parse(v)?;
        }
        for k in table.keys() {
            if k != "pmu" && k.parse::<EquivalenceClass>().is_err() {
                return Err(format!("{profile}: unknown counter name `{k}`"));
            }
        }
        let pmu = table.get("pmu").cloned().unwrap_or_else(|| "cpu".into());
        Ok(CounterMap { microarch: profile, pmu, events })
    }

    pub fn builtin(profile: MicroarchProfile) -> CounterMap {
        Self::parse(DEFAULT_COUNTER_MAP, profile).expect("embedded counter map is valid")
    }

    pub fn supported(&self) -> impl Iterator<Item = (EquivalenceClass, RawEvent)> + '_ {
        self.events.iter().filter_map(|(c, e)| e.map(|e| (c, e)))
    }
}
