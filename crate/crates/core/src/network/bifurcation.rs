//! How much of each daughter branch belongs to the junction element.

use serde::{Deserialize, Serialize};

use super::VascularNetwork;
use crate::scalar::Scalar;

/// Partition of daughter branches between junction and Poiseuille segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BifurcationDefinition {
    /// Junction ends where the outlet cross-sections separate; approximated by
    /// a fixed fraction of the branch (see `NetworkOptions::no_branch_fraction`).
    NoBranch,
    /// Junction covers 90% of each daughter branch.
    PartialBranch,
    /// Junction covers the whole daughter branch.
    FullBranch,
}

impl BifurcationDefinition {
    pub const ALL: [BifurcationDefinition; 3] = [
        BifurcationDefinition::NoBranch,
        BifurcationDefinition::PartialBranch,
        BifurcationDefinition::FullBranch,
    ];

    /// Fraction of the branch length attributed to the junction.
    pub fn attributed_fraction<T: Scalar>(self, no_branch_fraction: T) -> T {
        match self {
            BifurcationDefinition::NoBranch => no_branch_fraction,
            BifurcationDefinition::PartialBranch => T::lit(0.9),
            BifurcationDefinition::FullBranch => T::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BifurcationDefinition::NoBranch => "no_branch",
            BifurcationDefinition::PartialBranch => "partial_branch",
            BifurcationDefinition::FullBranch => "full_branch",
        }
    }
}

impl std::str::FromStr for BifurcationDefinition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "no_branch" => Ok(Self::NoBranch),
            "partial_branch" => Ok(Self::PartialBranch),
            "full_branch" => Ok(Self::FullBranch),
            other => Err(format!("unknown bifurcation definition `{other}`")),
        }
    }
}

impl<T: Scalar> VascularNetwork<T> {
    /// Recomputes the attributed outlet length of every junction under `definition`.
    /// The remainder of each branch is the residual Poiseuille segment.
    pub fn apply_bifurcation_definition(&mut self, definition: BifurcationDefinition) {
        let fraction = definition.attributed_fraction(self.options.no_branch_fraction);
        for j in 0..self.junctions.len() {
            for k in 0..2 {
                let v = self.topo.junction_outlets[j][k];
                let len = self.vessels[v].length();
                self.junctions[j].attributed[k] = if fraction == T::one() { len } else { fraction * len };
            }
        }
        self.definition = definition;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_symmetric_tree, TreeSpec};

    #[test]
    fn partition_sums_to_branch_length() {
        let mut net = generate_symmetric_tree(&TreeSpec::<f64>::new(3)).unwrap();
        for def in BifurcationDefinition::ALL {
            net.apply_bifurcation_definition(def);
            for j in 0..net.junctions().len() {
                for k in 0..2 {
                    let v = net.junction_outlets(j)[k];
                    let total = net.vessels()[v].length();
                    let sum = net.junctions()[j].attributed_lengths()[k] + net.residual_length(j, k);
                    assert!((sum - total).abs() <= 1e-15 * total);
                }
            }
        }
    }

    #[test]
    fn full_branch_leaves_no_residual() {
        let mut net = generate_symmetric_tree(&TreeSpec::<f64>::new(1)).unwrap();
        net.apply_bifurcation_definition(BifurcationDefinition::FullBranch);
        assert_eq!(net.residual_length(0, 0), 0.0);
        assert_eq!(net.residual_length(0, 1), 0.0);
    }

    #[test]
    fn partial_branch_leaves_ten_percent() {
        let net = generate_symmetric_tree(&TreeSpec::<f64>::new(1)).unwrap();
        assert_eq!(net.bifurcation_definition(), BifurcationDefinition::PartialBranch);
        let v = net.junction_outlets(0)[0];
        let len = net.vessels()[v].length();
        assert!((net.residual_length(0, 0) - 0.1 * len).abs() < 1e-14 * len);
    }

    #[test]
    fn no_branch_uses_configured_fraction() {
        let mut net = generate_symmetric_tree(&TreeSpec::<f64>::new(1)).unwrap();
        net.apply_bifurcation_definition(BifurcationDefinition::NoBranch);
        let v = net.junction_outlets(0)[1];
        let len = net.vessels()[v].length();
        assert!((net.junctions()[0].attributed_lengths()[1] - 0.1 * len).abs() < 1e-15);
    }
}
