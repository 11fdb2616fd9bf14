use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ClientShard, Dataset};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZonePredicate {
    OneOf(Vec<String>),
    Any,
}

impl ZonePredicate {
    pub fn matches(&self, value: &str) -> bool {
        match self {
            ZonePredicate::OneOf(values) => values.iter().any(|v| v == value),
            ZonePredicate::Any => true,
        }
    }
}

/// Routes rows whose zone tag matches `predicate` to `client_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneRule {
    pub client_id: usize,
    pub predicate: ZonePredicate,
}

impl ZoneRule {
    /// Parses `"<client>:<v1>|<v2>|..."` or `"<client>:*"`.
    pub fn parse(text: &str) -> Result<Self> {
        let (id, values) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("zone rule {text:?} is not <client>:<values>")))?;
        let client_id = id
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("zone rule {text:?} has a non-integer client id")))?;
        let values = values.trim();
        let predicate = if values == "*" {
            ZonePredicate::Any
        } else {
            ZonePredicate::OneOf(values.split('|').map(|v| v.trim().to_string()).collect())
        };
        Ok(Self { client_id, predicate })
    }

    /// Parses a comma-separated rule list.
    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Self::parse)
            .collect()
    }
}

/// Row indices per client, in ascending client id. Each row goes to the first
/// rule it matches; the last rule must be a catch-all.
pub fn zone_groups(zones: &[String], rules: &[ZoneRule]) -> Result<Vec<(usize, Vec<usize>)>> {
    match rules.last() {
        Some(ZoneRule {
            predicate: ZonePredicate::Any,
            ..
        }) => {}
        _ => {
            return Err(Error::Config(
                "zone rules must end with a catch-all rule (<client>:*)".into(),
            ))
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = rules.iter().map(|r| (r.client_id, Vec::new())).collect();
    for (i, z) in zones.iter().enumerate() {
        let rule = rules
            .iter()
            .find(|r| r.predicate.matches(z))
            .expect("catch-all rule matches every row");
        groups.get_mut(&rule.client_id).expect("client declared").push(i);
    }
    if let Some((id, _)) = groups.iter().find(|(_, rows)| rows.is_empty()) {
        return Err(Error::Config(format!("zone rules give client {id} no rows")));
    }
    Ok(groups.into_iter().collect())
}

pub fn partition_by_zone(data: &Dataset, rules: &[ZoneRule]) -> Result<Vec<ClientShard>> {
    let zones = data
        .zones
        .as_ref()
        .ok_or_else(|| Error::Config("dataset carries no zone column".into()))?;
    zone_groups(zones, rules)?
        .into_iter()
        .map(|(id, rows)| Ok(ClientShard::new(id, data.select(&rows)?)))
        .collect()
}
