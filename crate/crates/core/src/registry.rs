//! Name-keyed registries of interchangeable strategies.

use std::fmt;
use std::sync::Arc;

/// Strategies of one family, looked up by name at run time.
pub struct Registry<T: ?Sized> {
    family: &'static str,
    entries: Vec<(&'static str, Arc<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(family: &'static str) -> Self {
        Self { family, entries: Vec::new() }
    }

    /// Adds an entry; a later registration under the same name replaces the earlier one.
    pub fn register(&mut self, name: &'static str, entry: Arc<T>) -> &mut Self {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, entry));
        self
    }

    pub fn get(&self, name: &str) -> Option<Arc<T>> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, e)| Arc::clone(e))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    /// Lookup with an error message listing the known names.
    pub fn require(&self, name: &str) -> Result<Arc<T>, UnknownEntry> {
        self.get(name).ok_or_else(|| UnknownEntry {
            family: self.family,
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown {family} '{name}' (known: {known})")]
pub struct UnknownEntry {
    pub family: &'static str,
    pub name: String,
    pub known: String,
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry").field("family", &self.family).field("entries", &self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Hello;
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    struct Hi;
    impl Greeter for Hi {
        fn greet(&self) -> String {
            "hi".into()
        }
    }

    #[test]
    fn lookup_and_replace() {
        let mut r: Registry<dyn Greeter> = Registry::new("greeter");
        r.register("a", Arc::new(Hello)).register("b", Arc::new(Hi));
        assert_eq!(r.get("a").unwrap().greet(), "hello");
        r.register("a", Arc::new(Hi));
        assert_eq!(r.get("a").unwrap().greet(), "hi");
        assert_eq!(r.names(), vec!["b", "a"]);
        let Err(e) = r.require("zzz") else { panic!("unknown name resolved") };
        assert_eq!(e.to_string(), "unknown greeter 'zzz' (known: b, a)");
    }
}
