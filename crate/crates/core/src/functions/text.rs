//! Canonical text form of [`FunctionSpec`].
//!
//! | form | family |
//! |------|--------|
//! | `dict:<m>` | dictator on `m` bits |
//! | `parity:<m>` | parity |
//! | `dap:<m>` | dictator AND parity |
//! | `type2:<m>` | type-2 example |
//! | `maj:<n>` | majority |
//! | `itermaj3:<depth>` | iterated 3-majority |
//! | `andor:<depth>` | AND/OR tree |
//! | `bigtame:<n>` | big-influence tame construction |
//! | `perc:<profile>:<level>` | tree percolation; `<profile>` is a file path or an inline list `[c1,c2,...]` |
//! | `table:<source>` | truth table; `<source>` is a string of `0`/`1` or a file path |

use std::fmt;
use std::str::FromStr;

use super::{FunctionSpec, TruthTable};
use crate::error::{Error, Result};
use crate::perctree::LevelProfile;

fn number<T: FromStr>(kind: &str, text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{kind}: expected a non-negative integer, got {text:?}")))
}

fn parse_profile(text: &str) -> Result<LevelProfile> {
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let children = inner
            .split(',')
            .map(|c| number::<u32>("perc", c))
            .collect::<Result<Vec<_>>>()?;
        LevelProfile::new(children)
    } else {
        LevelProfile::from_file(text)
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected <family>:<parameters>, got {text:?}")))?;
        let spec = match kind {
            "dict" => FunctionSpec::Dictator { m: number(kind, rest)? },
            "parity" => FunctionSpec::Parity { m: number(kind, rest)? },
            "dap" => FunctionSpec::DictatorAndParity { m: number(kind, rest)? },
            "type2" => FunctionSpec::Type2Example { m: number(kind, rest)? },
            "maj" => FunctionSpec::Majority { n: number(kind, rest)? },
            "itermaj3" => FunctionSpec::IterMaj3 { depth: number(kind, rest)? },
            "andor" => FunctionSpec::AndOrTree { depth: number(kind, rest)? },
            "bigtame" => FunctionSpec::BigInfluenceTame { n: number(kind, rest)? },
            "perc" => {
                let (profile, level) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| Error::Parse("perc: expected perc:<profile>:<level>".into()))?;
                FunctionSpec::TreePercolation {
                    profile: parse_profile(profile)?,
                    level: number(kind, level)?,
                }
            }
            "table" => {
                let looks_inline = !rest.is_empty() && rest.chars().all(|c| c == '0' || c == '1');
                FunctionSpec::TruthTable(if looks_inline {
                    TruthTable::parse_str(rest)?
                } else {
                    TruthTable::from_file(rest)?
                })
            }
            other => return Err(Error::Parse(format!("unknown function family {other:?}"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Dictator { m } => write!(f, "dict:{m}"),
            FunctionSpec::Parity { m } => write!(f, "parity:{m}"),
            FunctionSpec::DictatorAndParity { m } => write!(f, "dap:{m}"),
            FunctionSpec::Type2Example { m } => write!(f, "type2:{m}"),
            FunctionSpec::Majority { n } => write!(f, "maj:{n}"),
            FunctionSpec::IterMaj3 { depth } => write!(f, "itermaj3:{depth}"),
            FunctionSpec::AndOrTree { depth } => write!(f, "andor:{depth}"),
            FunctionSpec::BigInfluenceTame { n } => write!(f, "bigtame:{n}"),
            FunctionSpec::TreePercolation { profile, level } => write!(f, "perc:{profile}:{level}"),
            FunctionSpec::TruthTable(t) => write!(f, "table:{}", t.to_bit_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for s in [
            "maj:9",
            "itermaj3:4",
            "andor:5",
            "parity:16",
            "dap:16",
            "type2:16",
            "bigtame:2",
            "dict:3",
            "perc:[2,3,4]:2",
            "table:0110",
        ] {
            let spec: FunctionSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn profile_file() {
        let dir = std::env::temp_dir().join(format!("boolvol-text-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("profile.txt");
        std::fs::write(&path, "2\n2\n").unwrap();
        let spec: FunctionSpec = format!("perc:{}:2", path.display()).parse().unwrap();
        assert_eq!(
            spec,
            FunctionSpec::TreePercolation {
                profile: LevelProfile::binary(2),
                level: 2
            }
        );
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn rejects_garbage() {
        assert!("maj".parse::<FunctionSpec>().is_err());
        assert!("maj:x".parse::<FunctionSpec>().is_err());
        assert!("foo:3".parse::<FunctionSpec>().is_err());
        assert!("maj:-3".parse::<FunctionSpec>().is_err());
        assert!("table:011".parse::<FunctionSpec>().is_err());
    }
}
