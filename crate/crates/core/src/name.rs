use std::fmt;
use std::str::FromStr;

use crate::error::SimError;

/// Hierarchical NDN name. The root name `/` has zero components and is only
/// used as a default route; packet names are non-empty.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Name(Vec<String>);

impl Name {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn from_components<I, S>(parts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(parts.into_iter().map(Into::into).collect())
    }

    pub fn components(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.0.get(i).map(String::as_str)
    }

    pub fn first(&self) -> Option<&str> {
        self.get(0)
    }

    pub fn last(&self) -> Option<&str> {
        self.0.last().map(String::as_str)
    }

    /// Returns a new name with `component` appended.
    pub fn child(&self, component: impl Into<String>) -> Self {
        let mut parts = self.0.clone();
        parts.push(component.into());
        Self(parts)
    }

    pub fn is_prefix_of(&self, other: &Name) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a == b)
    }

    /// Bytes on the wire: one length byte per component plus its contents.
    pub fn wire_len(&self) -> usize {
        self.0.iter().map(|c| c.len() + 2).sum()
    }
}

impl FromStr for Name {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if !s.starts_with('/') {
            return Err(SimError::Config(format!("name {s:?} must start with '/'")));
        }
        Ok(Self(
            s.split('/').filter(|c| !c.is_empty()).map(str::to_owned).collect(),
        ))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for c in &self.0 {
            write!(f, "/{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[macro_export]
macro_rules! name {
    ($($c:expr),* $(,)?) => {
        $crate::name::Name::from_components([$(::std::string::ToString::to_string(&$c)),*])
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let n: Name = "/sync/Game1/Piece_B_1".parse().unwrap();
        assert_eq!(n.len(), 3);
        assert_eq!(n.to_string(), "/sync/Game1/Piece_B_1");
        assert_eq!(Name::root().to_string(), "/");
        assert!("sync".parse::<Name>().is_err());
    }

    #[test]
    fn prefix_relation_is_componentwise() {
        let a: Name = "/a/b".parse().unwrap();
        assert!(a.is_prefix_of(&"/a/b/c".parse().unwrap()));
        assert!(!a.is_prefix_of(&"/a/bc".parse().unwrap()));
        assert!(Name::root().is_prefix_of(&a));
        assert_eq!(name!("a", "b", 3), "/a/b/3".parse().unwrap());
    }
}
