//! Newtype identifiers for the domain vocabulary.
//!
//! All identifiers are lowercase ASCII `[a-z0-9_-]+`, matching the PDDL
//! file syntax. Portable object ids follow the `<noun>_<attribute>`
//! convention (`tie_red`), which lets the instruction layer recover the
//! noun and attribute without a separate lookup.

use serde::{Deserialize, Serialize};
use std::fmt;

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(
    /// A room in the household floor plan.
    LocationId
);
string_id!(
    /// A portable object.
    ObjectId
);
string_id!(
    /// A container that can hold portable objects.
    ContainerId
);
string_id!(
    /// One of the two agents.
    AgentId
);

impl ObjectId {
    /// The `<noun>_<attribute>` convention, split at the first underscore.
    /// Ids without an underscore are treated as a bare noun.
    pub fn noun_attribute(&self) -> (&str, Option<&str>) {
        match self.0.split_once('_') {
            Some((noun, attr)) => (noun, Some(attr)),
            None => (self.0.as_str(), None),
        }
    }
}

pub fn matcher() -> AgentId {
    AgentId::new("matcher")
}

pub fn director() -> AgentId {
    AgentId::new("director")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_id_splits_noun_and_attribute() {
        let id = ObjectId::new("tie_red");
        assert_eq!(id.noun_attribute(), ("tie", Some("red")));
        let bare = ObjectId::new("basket");
        assert_eq!(bare.noun_attribute(), ("basket", None));
    }
}
