//! Experiment configuration: a TOML file whose keys mirror the command-line
//! flags, overlaid by the flags themselves.

use std::fs;
use std::path::{Path, PathBuf};

use lifting::exact::{parse_q, q_int, q_ratio};
use lifting::fixtures::{and_with_error_third, bottom_fixture, one_bit, protocol_family};
use lifting::protocol::{ProtocolTree, RandomizedDecisionTree, RandomizedProtocol};
use lifting::simulate::SimConfig;
use lifting::{Budget, ComposedInstance, OuterFunction, Q};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every configurable value; `None` means "not set at this layer".
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub m: Option<u32>,
    pub ms: Option<Vec<u32>>,
    pub delta: Option<String>,
    pub deficiency_cap: Option<String>,
    pub query_cap: Option<usize>,
    pub strict_zpp: Option<bool>,
    pub protocol: Option<PathBuf>,
    pub fixture: Option<String>,
    pub tree: Option<PathBuf>,
    pub function: Option<PathBuf>,
    pub count: Option<u64>,
    pub coords: Option<usize>,
    pub fourier_coords: Option<usize>,
    pub z: Option<String>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($f:ident),*) => {
        ExperimentConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // Paths in a config file are relative to the file.
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.protocol, &mut cfg.tree, &mut cfg.function, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Values set in `self` win over `base`.
    pub fn over(self, base: ExperimentConfig) -> ExperimentConfig {
        overlay!(
            self,
            base,
            seed,
            samples,
            budget,
            out,
            n,
            m,
            ms,
            delta,
            deficiency_cap,
            query_cap,
            strict_zpp,
            protocol,
            fixture,
            tree,
            function,
            count,
            coords,
            fourier_coords,
            z
        )
    }

    pub fn seed(&self, why: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Config(format!("--seed is required for {why}")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn samples(&self) -> u64 {
        self.samples.unwrap_or(1000)
    }

    pub fn count(&self) -> u64 {
        self.count.unwrap_or(1000)
    }

    pub fn budget(&self) -> Budget {
        self.budget.map(Budget::with_pairs).unwrap_or_default()
    }

    pub fn delta(&self) -> Result<Q, CliError> {
        match &self.delta {
            None => Ok(q_ratio(9, 10)),
            Some(s) => {
                let d = parse_q(s)?;
                if d <= q_int(0) || d >= q_int(1) {
                    return Err(CliError::Config(format!("delta {s} must lie in (0, 1)")));
                }
                Ok(d)
            }
        }
    }

    /// Walk settings for `n` blocks; the cap defaults to `n³` bits.
    pub fn sim(&self, n: usize) -> Result<SimConfig, CliError> {
        let mut cfg = SimConfig::for_blocks(n);
        cfg.delta = self.delta()?;
        if let Some(c) = &self.deficiency_cap {
            cfg.deficiency_cap = parse_q(c)?;
        }
        cfg.query_cap = self.query_cap;
        cfg.strict_zpp = self.strict_zpp.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn instance(&self) -> Result<ComposedInstance, CliError> {
        match (self.n, self.m) {
            (Some(n), Some(m)) => Ok(ComposedInstance::index(n, m)?),
            _ => Err(CliError::Config("the instance needs n and m".into())),
        }
    }

    /// The sweep's `m` values; must be ascending powers of two.
    pub fn sweep_ms(&self) -> Result<Vec<u32>, CliError> {
        let ms = self.ms.clone().unwrap_or_else(|| vec![4, 8, 16, 32]);
        if ms.is_empty() || ms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config(format!("ms {ms:?} must be a nonempty ascending list")));
        }
        for &m in &ms {
            lifting::GadgetSpec::index(m)?;
        }
        Ok(ms)
    }

    /// The `z` values to examine: one 0/1 string, or every `z`.
    pub fn zs(&self, n: usize) -> Result<Vec<Vec<bool>>, CliError> {
        match &self.z {
            None => Ok((0..1u64 << n).map(|z| lifting::gadget::z_from_index(n, z)).collect()),
            Some(s) => {
                let z: Vec<bool> = s
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(CliError::Config(format!("bad z {s:?}"))),
                    })
                    .collect::<Result<_, _>>()?;
                if z.len() != n {
                    return Err(CliError::Config(format!("z {s:?} needs {n} bits")));
                }
                Ok(vec![z])
            }
        }
    }

    fn read(path: &Path) -> Result<String, CliError> {
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
    }

    /// Fills in or checks `n` and `m` against an instance fixed by a file or a
    /// fixture.
    fn agree(&self, g: ComposedInstance) -> Result<ComposedInstance, CliError> {
        let m = g.gadget().alice_size() as u32;
        if self.n.is_some_and(|n| n != g.n()) || self.m.is_some_and(|mm| mm != m) {
            return Err(CliError::Config(format!("n/m settings conflict with the instance {g}")));
        }
        Ok(g)
    }

    /// Named protocols with weights, from `protocol` or `fixture`.
    pub fn protocols(&self) -> Result<(ComposedInstance, Vec<Component>), CliError> {
        if let Some(path) = &self.protocol {
            if self.fixture.is_some() {
                return Err(CliError::Config("give either protocol or fixture, not both".into()));
            }
            let (header, p) = RandomizedProtocol::parse(&Self::read(path)?)?;
            let g = match header {
                Some(g) => self.agree(g)?,
                None => self.instance()?,
            };
            p.validate(&g)?;
            let comps = p
                .components()
                .iter()
                .enumerate()
                .map(|(i, (w, t))| Component {
                    name: format!("component{}", i + 1),
                    weight: w.clone(),
                    protocol: t.clone(),
                })
                .collect();
            return Ok((g, comps));
        }
        let name = self
            .fixture
            .as_deref()
            .ok_or_else(|| CliError::Config("no protocol: set protocol (a file) or fixture".into()))?;
        let single = |name: &str, (g, p): (ComposedInstance, ProtocolTree)| -> Result<_, CliError> {
            Ok((self.agree(g)?, vec![Component::unit(name, p)]))
        };
        match name {
            "one_bit" => single(name, one_bit()),
            "bottom" => single(name, bottom_fixture()),
            "and_third" => {
                let g = self.agree_n(2)?;
                let (_, _, p) = and_with_error_third(&g)?;
                let comps = p
                    .components()
                    .iter()
                    .zip(["exact", "negated"])
                    .map(|((w, t), n)| Component {
                        name: n.to_string(),
                        weight: w.clone(),
                        protocol: t.clone(),
                    })
                    .collect();
                Ok((g, comps))
            }
            "family" => {
                let g = self.instance()?;
                let comps = protocol_family(&g).into_iter().map(|(n, p)| Component::unit(n, p)).collect();
                Ok((g, comps))
            }
            other => {
                let g = self.instance()?;
                let p = protocol_family(&g)
                    .into_iter()
                    .find(|(n, _)| *n == other)
                    .ok_or_else(|| CliError::Config(format!("unknown fixture {other:?}")))?;
                Ok((g, vec![Component::unit(other, p.1)]))
            }
        }
    }

    /// The instance with `n` forced to `required` (and `m` defaulting to 4).
    fn agree_n(&self, required: usize) -> Result<ComposedInstance, CliError> {
        if self.n.is_some_and(|n| n != required) {
            return Err(CliError::Config(format!("this fixture needs n = {required}")));
        }
        Ok(ComposedInstance::index(required, self.m.unwrap_or(4))?)
    }

    pub fn decision_tree(&self) -> Result<Option<(Option<ComposedInstance>, RandomizedDecisionTree)>, CliError> {
        self.tree
            .as_ref()
            .map(|p| Ok(RandomizedDecisionTree::parse(&Self::read(p)?)?))
            .transpose()
    }

    pub fn outer_function(&self) -> Result<Option<OuterFunction>, CliError> {
        self.function
            .as_ref()
            .map(|p| {
                let text = Self::read(p)?;
                let table: String = text
                    .lines()
                    .flat_map(|l| l.split('#').next().unwrap_or("").chars())
                    .filter(|c| !c.is_whitespace())
                    .collect();
                Ok(table.parse::<OuterFunction>()?)
            })
            .transpose()
    }
}

/// One deterministic protocol with its mixture weight.
#[derive(Clone, Debug)]
pub struct Component {
    pub name: String,
    pub weight: Q,
    pub protocol: ProtocolTree,
}

impl Component {
    fn unit(name: &str, protocol: ProtocolTree) -> Self {
        Component {
            name: name.to_string(),
            weight: q_int(1),
            protocol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_the_file() {
        let file = ExperimentConfig {
            seed: Some(1),
            samples: Some(10),
            ..Default::default()
        };
        let flags = ExperimentConfig {
            samples: Some(20),
            ..Default::default()
        };
        let c = flags.over(file);
        assert_eq!((c.seed, c.samples), (Some(1), Some(20)));
    }

    #[test]
    fn file_paths_resolve_against_the_file() {
        let dir = std::env::temp_dir().join(format!("lifting-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        fs::write(&path, "protocol = \"p.txt\"\nout = \"/abs\"\n").unwrap();
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.protocol, Some(dir.join("p.txt")));
        assert_eq!(c.out, Some(PathBuf::from("/abs")));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rates_outside_the_unit_interval_are_rejected() {
        for d in ["0", "1", "3/2"] {
            let c = ExperimentConfig {
                delta: Some(d.into()),
                ..Default::default()
            };
            assert!(c.delta().is_err(), "{d}");
        }
    }
}
