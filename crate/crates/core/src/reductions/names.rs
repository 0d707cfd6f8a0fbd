use std::collections::{BTreeMap, BTreeSet};

/// Hands out variable names that avoid a fixed set of source variables.
///
/// A request for `base` returns `base` itself if it is free, otherwise
/// `base` with as many leading underscores as needed. Answers are memoized,
/// so every request for the same role yields the same name.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    taken: BTreeSet<String>,
    assigned: BTreeMap<String, String>,
}

impl NameSupply {
    pub fn avoiding<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        NameSupply {
            taken: vars.into_iter().map(Into::into).collect(),
            assigned: BTreeMap::new(),
        }
    }

    /// A name for a skeleton variable (`c`, `i`, `v`, ...).
    pub fn name(&mut self, base: &str) -> String {
        if let Some(name) = self.assigned.get(base) {
            return name.clone();
        }
        let mut name = base.to_string();
        while self.taken.contains(&name) {
            name.insert(0, '_');
        }
        self.taken.insert(name.clone());
        self.assigned.insert(base.to_string(), name.clone());
        name
    }

    /// A name for a scratch variable; always starts with `_`.
    pub fn scratch(&mut self, base: &str) -> String {
        self.name(&format!("_{base}"))
    }

    /// Every name handed out so far, sorted.
    pub fn reserved(&self) -> Vec<String> {
        let mut names: Vec<String> = self.assigned.values().cloned().collect();
        names.sort();
        names
    }
}
