use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Fingerprint, TransportKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DpiAction {
    Allow,
    /// Shape the flow to this fraction of link bandwidth.
    Throttle(f64),
    Block,
}

/// One entry of the `[[dpi]]` array in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpiRule {
    pub transport: TransportKind,
    pub first_byte: u8,
    pub action: RuleAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleAction {
    Allow,
    Throttle,
    Block,
}

impl DpiRule {
    pub fn action(&self) -> Result<DpiAction, String> {
        match (self.action, self.factor) {
            (RuleAction::Allow, None) => Ok(DpiAction::Allow),
            (RuleAction::Block, None) => Ok(DpiAction::Block),
            (RuleAction::Throttle, Some(f)) if f > 0.0 && f <= 1.0 => Ok(DpiAction::Throttle(f)),
            (RuleAction::Throttle, Some(f)) => {
                Err(format!("throttle factor must lie in (0, 1], got {f}"))
            }
            (RuleAction::Throttle, None) => Err("throttle rule needs a factor".into()),
            (_, Some(_)) => Err("factor is only valid for throttle rules".into()),
        }
    }
}

/// Maps fingerprints to actions. Unlisted fingerprints are allowed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DpiPolicy {
    rules: BTreeMap<Fingerprint, DpiAction>,
}

impl DpiPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rules(rules: &[DpiRule]) -> Result<Self, String> {
        let mut p = Self::new();
        for r in rules {
            let fp = Fingerprint {
                kind: r.transport,
                first_byte: r.first_byte,
            };
            if p.rules.contains_key(&fp) {
                return Err(format!("duplicate dpi rule for {fp}"));
            }
            p.rules.insert(fp, r.action()?);
        }
        Ok(p)
    }

    pub fn with(mut self, kind: TransportKind, first_byte: u8, action: DpiAction) -> Self {
        self.rules.insert(Fingerprint { kind, first_byte }, action);
        self
    }

    pub fn classify(&self, fp: Fingerprint) -> DpiAction {
        self.rules.get(&fp).copied().unwrap_or(DpiAction::Allow)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

pub fn classify_and_police(fp: Fingerprint, policy: &DpiPolicy) -> DpiAction {
    policy.classify(fp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_allows() {
        let p = DpiPolicy::new().with(TransportKind::Datagram, 0x48, DpiAction::Block);
        assert_eq!(
            p.classify(Fingerprint {
                kind: TransportKind::Datagram,
                first_byte: 0x48
            }),
            DpiAction::Block
        );
        assert_eq!(
            p.classify(Fingerprint {
                kind: TransportKind::Stream,
                first_byte: 0x48
            }),
            DpiAction::Allow
        );
        assert_eq!(
            p.classify(Fingerprint {
                kind: TransportKind::Datagram,
                first_byte: 0x04
            }),
            DpiAction::Allow
        );
    }

    #[test]
    fn rule_validation() {
        let r = |action, factor| DpiRule {
            transport: TransportKind::Datagram,
            first_byte: 1,
            action,
            factor,
        };
        assert!(r(RuleAction::Throttle, None).action().is_err());
        assert!(r(RuleAction::Throttle, Some(0.0)).action().is_err());
        assert!(r(RuleAction::Block, Some(0.5)).action().is_err());
        assert_eq!(
            r(RuleAction::Throttle, Some(0.01)).action(),
            Ok(DpiAction::Throttle(0.01))
        );
        let dup = [r(RuleAction::Allow, None), r(RuleAction::Block, None)];
        assert!(DpiPolicy::from_rules(&dup).is_err());
    }
}
