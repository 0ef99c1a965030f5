// SPDX-License-Identifier: Apache-2.0

//! Port-list checks against an expected interface.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{AstModule, Direction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpecEntry {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
}

/// The ports a problem statement expects, in no particular order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    pub ports: Vec<PortSpecEntry>,
}

impl PortSpec {
    /// Builds a spec, rejecting duplicate names.
    pub fn new(ports: Vec<PortSpecEntry>) -> Result<Self, String> {
        for (i, p) in ports.iter().enumerate() {
            if ports[..i].iter().any(|q| q.name == p.name) {
                return Err(format!("duplicate port `{}` in port spec", p.name));
            }
        }
        Ok(PortSpec { ports })
    }

    pub fn entry(name: &str, direction: Direction, width: u32) -> PortSpecEntry {
        PortSpecEntry { name: name.to_string(), direction, width }
    }

    /// The interface a module actually declares.
    pub fn from_module(m: &AstModule) -> Self {
        PortSpec {
            ports: m
                .ports
                .iter()
                .map(|p| PortSpecEntry { name: p.name.clone(), direction: p.direction, width: p.width() })
                .collect(),
        }
    }

    /// Parses the JSON file form `{"ports":[{"name":..,"direction":..,"width":..}]}`.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let spec: PortSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
        PortSpec::new(spec.ports)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceMismatch {
    pub port: String,
    pub message: String,
}

impl fmt::Display for InterfaceMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.port, self.message)
    }
}

/// Checks names, directions and widths; ordering is ignored. Mismatches are
/// listed in module port order, then missing ports in spec order.
pub fn validate_interface(m: &AstModule, spec: &PortSpec) -> Result<(), Vec<InterfaceMismatch>> {
    let mut out = Vec::new();
    for p in &m.ports {
        let Some(want) = spec.ports.iter().find(|s| s.name == p.name) else {
            out.push(InterfaceMismatch { port: p.name.clone(), message: "unexpected port".into() });
            continue;
        };
        if want.direction != p.direction {
            out.push(InterfaceMismatch {
                port: p.name.clone(),
                message: format!("direction {} ≠ {}", p.direction, want.direction),
            });
        }
        if want.width != p.width() {
            out.push(InterfaceMismatch {
                port: p.name.clone(),
                message: format!("width {} ≠ {}", p.width(), want.width),
            });
        }
    }
    for s in &spec.ports {
        if m.port(&s.name).is_none() {
            out.push(InterfaceMismatch { port: s.name.clone(), message: "missing port".into() });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
