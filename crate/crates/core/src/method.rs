use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Clustering methods known to the CLI and the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Exhaustive Bayes/IBR partition.
    IbrExact,
    /// Pseed Fast approximation of the IBR partition.
    IbrPseed,
    KMeans,
    Fcm,
    HierSingle,
    HierAverage,
    HierComplete,
    Em,
    Random,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::IbrExact,
        Method::IbrPseed,
        Method::KMeans,
        Method::Fcm,
        Method::HierSingle,
        Method::HierAverage,
        Method::HierComplete,
        Method::Em,
        Method::Random,
    ];

    /// Classical comparison methods.
    pub const BASELINES: [Method; 7] = [
        Method::Fcm,
        Method::KMeans,
        Method::Em,
        Method::HierComplete,
        Method::HierAverage,
        Method::HierSingle,
        Method::Random,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::IbrExact => "ibr-exact",
            Method::IbrPseed => "ibr-pseed",
            Method::KMeans => "kmeans",
            Method::Fcm => "fcm",
            Method::HierSingle => "hier-s",
            Method::HierAverage => "hier-a",
            Method::HierComplete => "hier-c",
            Method::Em => "em",
            Method::Random => "random",
        }
    }

    pub fn is_ibr(self) -> bool {
        matches!(self, Method::IbrExact | Method::IbrPseed)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.id().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
