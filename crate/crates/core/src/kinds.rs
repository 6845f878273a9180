use std::fmt;
use std::str::FromStr;

use crate::Error;

/// Node build variant: unmodified, instruction-level redundancy with
/// fail-stop on detection, or redundancy plus transactional retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeVariant {
    Native,
    FtIlr,
    FtTx,
}

impl NodeVariant {
    pub const ALL: [NodeVariant; 3] = [NodeVariant::Native, NodeVariant::FtIlr, NodeVariant::FtTx];

    pub fn as_str(&self) -> &'static str {
        match self {
            NodeVariant::Native => "native",
            NodeVariant::FtIlr => "ft_ilr",
            NodeVariant::FtTx => "ft_tx",
        }
    }
}

impl fmt::Display for NodeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "native" => Ok(NodeVariant::Native),
            "ft_ilr" | "ilr" => Ok(NodeVariant::FtIlr),
            "ft_tx" | "tx" => Ok(NodeVariant::FtTx),
            other => Err(Error::InvalidArgument(format!("unknown node variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Deployment {
    Cloud,
    OnPremises,
}

impl Deployment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Deployment::Cloud => "cloud",
            Deployment::OnPremises => "on-premises",
        }
    }
}

impl fmt::Display for Deployment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Deployment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cloud" => Ok(Deployment::Cloud),
            "on-premises" | "on_premises" | "onpremises" | "on-prem" | "onprem" => {
                Ok(Deployment::OnPremises)
            }
            other => Err(Error::InvalidArgument(format!("unknown deployment `{other}`"))),
        }
    }
}

/// Over-provisioning technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technique {
    /// Cold standby pool; crashed active nodes are replaced from the pool.
    PassiveFailover,
    /// Extra fully active nodes behind the load balancer.
    ActiveRouteAnywhere,
}

impl Technique {
    pub fn as_str(&self) -> &'static str {
        match self {
            Technique::PassiveFailover => "PF",
            Technique::ActiveRouteAnywhere => "ARA",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pf" | "passive" | "passive-failover" => Ok(Technique::PassiveFailover),
            "ara" | "active" | "active-route-anywhere" => Ok(Technique::ActiveRouteAnywhere),
            other => Err(Error::InvalidArgument(format!("unknown technique `{other}`"))),
        }
    }
}
