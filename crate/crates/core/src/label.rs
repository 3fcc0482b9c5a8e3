use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Diagnostic group of a subject. AD is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "AD")]
    Ad,
}

impl Label {
    /// Column index used for per-class counts (HC = 0, AD = 1).
    pub fn index(self) -> usize {
        match self {
            Label::Hc => 0,
            Label::Ad => 1,
        }
    }

    pub fn from_index(index: usize) -> Label {
        if index == 0 {
            Label::Hc
        } else {
            Label::Ad
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hc => "HC",
            Label::Ad => "AD",
        }
    }

    /// Parses a manifest label cell; empty means "unknown".
    pub fn parse_optional(s: &str) -> Result<Option<Label>, Error> {
        let s = s.trim();
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some)
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HC" => Ok(Label::Hc),
            "AD" => Ok(Label::Ad),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_case_insensitively() {
        assert_eq!("hc".parse::<Label>().unwrap(), Label::Hc);
        assert_eq!(" Ad ".parse::<Label>().unwrap(), Label::Ad);
        assert_eq!(Label::parse_optional("").unwrap(), None);
        assert!(matches!("MCI".parse::<Label>(), Err(Error::UnknownLabel(_))));
    }
}
