//! CPU identification.

use serde::{Deserialize, Serialize};

use crate::oracle::MicroarchProfile;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpuIdentity {
    pub vendor: String,
    pub family: u32,
    pub model: u32,
}

impl CpuIdentity {
    pub fn profile(&self) -> Option<MicroarchProfile> {
        profile_for(&self.vendor, self.family, self.model)
    }
}

/// Known family-6 display models per profile.
pub fn profile_for(vendor: &str, family: u32, model: u32) -> Option<MicroarchProfile> {
    if vendor != "GenuineIntel" || family != 6 {
        return None;
    }
    match model {
        0x97 | 0x9a => Some(MicroarchProfile::AlderLake),
        0x8f => Some(MicroarchProfile::SapphireRapids),
        0xa5 | 0xa6 => Some(MicroarchProfile::CometLake),
        0x6a | 0x6c | 0x7d | 0x7e => Some(MicroarchProfile::IceLake),
        _ => None,
    }
}

/// Identity from the CPUID instruction.
#[cfg(target_arch = "x86_64")]
pub fn cpuid_identity() -> Option<CpuIdentity> {
    let cpuid = raw_cpuid::CpuId::new();
    let vendor = cpuid.get_vendor_info()?.as_str().to_string();
    let f = cpuid.get_feature_info()?;
    let family = f.family_id() as u32;
    let model = f.model_id() as u32;
    Some(CpuIdentity { vendor, family, model })
}

#[cfg(not(target_arch = "x86_64"))]
pub fn cpuid_identity() -> Option<CpuIdentity> {
    None
}

/// Identity parsed from `/proc/cpuinfo`-style text (first processor block).
pub fn parse_cpuinfo(text: &str) -> Option<CpuIdentity> {
    let mut vendor = None;
    let mut family = None;
    let mut model = None;
    for line in text.lines() {
        if line.trim().is_empty() && vendor.is_some() {
            break;
        }
        let Some((k, v)) = line.split_once(':') else { continue };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "vendor_id" => vendor = Some(v.to_string()),
            "cpu family" => family = v.parse().ok(),
            "model" => model = v.parse().ok(),
            _ => {}
        }
    }
    Some(CpuIdentity { vendor: vendor?, family: family?, model: model? })
}

pub fn cpuinfo_identity() -> Option<CpuIdentity> {
    parse_cpuinfo(&std::fs::read_to_string("/proc/cpuinfo").ok()?)
}

/// Profile of the running CPU, or `None` when it is not one of the supported parts.
pub fn detect_platform() -> Option<MicroarchProfile> {
    cpuid_identity().or_else(cpuinfo_identity).and_then(|id| id.profile())
}
