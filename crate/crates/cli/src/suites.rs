//! Built-in acceptance suites, one per criterion.

pub struct Suite {
    pub name: &'static str,
    pub file: &'static str,
    pub text: &'static str,
}

macro_rules! suite {
    ($name:literal) => {
        Suite { name: $name, file: concat!("crates/cli/suites/", $name, ".toml"), text: include_str!(concat!("../suites/", $name, ".toml")) }
    };
}

pub const SUITES: [Suite; 10] = [
    suite!("ac1-cone-coefficient"),
    suite!("ac2-gaussian-exactness"),
    suite!("ac3-sandwich"),
    suite!("ac4-divergence"),
    suite!("ac5-flat-equals-eta"),
    suite!("ac6-action-chain"),
    suite!("ac7-speed-action"),
    suite!("ac8-robust"),
    suite!("ac9-transport-core"),
    suite!("ac10-heat-core"),
];

/// Looks a suite up by full name or by its criterion prefix ("ac4").
pub fn find(name: &str) -> Option<&'static str> {
    SUITES
        .iter()
        .find(|s| s.name == name || s.name.split_once('-').is_some_and(|(p, _)| p == name))
        .map(|s| s.text)
}

pub fn listing() -> String {
    let mut out = String::new();
    for s in &SUITES {
        let n = s.text.matches("[[experiment]]").count();
        out.push_str(&format!("{:<24} {:>3} experiments  {}\n", s.name, n, s.file));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn every_suite_parses_and_validates() {
        for s in &SUITES {
            let cfg = Config::parse(s.text).unwrap_or_else(|e| panic!("{}: {e}", s.name));
            assert!(!cfg.experiment.is_empty(), "{}", s.name);
            for e in &cfg.experiment {
                crate::runner::validate(e).unwrap_or_else(|err| panic!("{}: {err}", s.name));
            }
        }
    }

    #[test]
    fn lookup_by_prefix() {
        assert!(find("ac10").unwrap().contains("heat"));
        assert!(find("ac1").unwrap().contains("cone-coefficient"));
        assert!(find("ac11").is_none());
    }
}
