//! Flat `key = value` run configuration for `simulate`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use terraslope_core::loss::STAGE_COUNT;
use terraslope_core::simulate::{default_schedule, StageConfig, TerrainKind, TerrainSpec};

use crate::error::{CliError, CliResult};

const KEYS: &[&str] = &[
    "terrain",
    "input",
    "rows",
    "cols",
    "cell_size",
    "amplitude",
    "roughness",
    "terrain_seed",
    "seed",
    "planes",
    "sigma_floor",
    "slope_partition",
    "height_correction",
    "correction_scale",
    "temperature",
    "noise",
    "range_margin",
    "ablation_seeds",
];

/// Where the ground truth comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Synthetic { spec: TerrainSpec, cell_size: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub ground_truth: GroundTruth,
    pub seed: u64,
    pub stages: [StageConfig; STAGE_COUNT],
    pub range_margin: f64,
    pub ablation_seeds: Vec<u64>,
}

fn invalid(key: &str, value: &str, what: &str) -> CliError {
    CliError::Validation(format!(
        "config key `{key}`: cannot parse `{value}` as {what}"
    ))
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn parse(text: &str) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("config line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Validation(format!("unknown config key `{key}`")));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Validation(format!(
                    "duplicate config key `{key}`"
                )));
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str, what: &str) -> CliResult<Option<T>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| invalid(key, v, what)))
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str, what: &str) -> CliResult<T> {
        self.get(key, what)?
            .ok_or_else(|| CliError::Validation(format!("missing config key `{key}`")))
    }

    fn flag(&self, key: &str) -> CliResult<Option<bool>> {
        self.raw(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "on" | "yes" | "1" => Ok(true),
                "false" | "off" | "no" | "0" => Ok(false),
                _ => Err(invalid(key, v, "a boolean")),
            })
            .transpose()
    }

    /// One value per stage, or a single value broadcast to all stages.
    fn per_stage<T: FromStr + Copy>(
        &self,
        key: &str,
        what: &str,
    ) -> CliResult<Option<[T; STAGE_COUNT]>> {
        let Some(raw) = self.raw(key) else {
            return Ok(None);
        };
        let items = parse_list::<T>(raw).map_err(|_| invalid(key, raw, what))?;
        match items.as_slice() {
            [v] => Ok(Some([*v; STAGE_COUNT])),
            [a, b, c] => Ok(Some([*a, *b, *c])),
            _ => Err(CliError::Validation(format!(
                "config key `{key}`: expected 1 or {STAGE_COUNT} values, got {}",
                items.len()
            ))),
        }
    }
}

fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>, ()> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| ()))
        .collect()
}

/// Comma-separated seeds, or `a..b` for the half-open range.
fn parse_seeds(key: &str, raw: &str) -> CliResult<Vec<u64>> {
    if let Some((a, b)) = raw.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| invalid(key, raw, "a seed range"))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| invalid(key, raw, "a seed range"))?;
        return Ok((a..b).collect());
    }
    parse_list(raw).map_err(|_| invalid(key, raw, "a seed list"))
}

impl SimConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let e = Entries::parse(text)?;
        let seed = e.get("seed", "an integer")?.unwrap_or(0);

        let ground_truth = match (e.raw("terrain"), e.raw("input")) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "config keys `terrain` and `input` are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Validation("missing config key `terrain`".into()))
            }
            (None, Some(path)) => GroundTruth::File(PathBuf::from(path)),
            (Some(kind), None) => {
                let kind: TerrainKind = kind
                    .parse()
                    .map_err(|_| invalid("terrain", kind, "a terrain kind"))?;
                let mut spec = TerrainSpec::new(
                    e.require("rows", "a count")?,
                    e.require("cols", "a count")?,
                    kind,
                    e.get("amplitude", "a number")?.unwrap_or(200.0),
                    e.get("terrain_seed", "an integer")?.unwrap_or(seed),
                );
                if let Some(r) = e.get("roughness", "a number")? {
                    spec.roughness = r;
                }
                GroundTruth::Synthetic {
                    spec,
                    cell_size: e.get("cell_size", "a number")?.unwrap_or(1.0),
                }
            }
        };

        let mut stages = default_schedule();
        if let Some(m) = e.per_stage::<usize>("planes", "plane counts")? {
            stages
                .iter_mut()
                .zip(m)
                .for_each(|(s, m)| s.plane_count = m);
        }
        if let Some(f) = e.per_stage::<f64>("sigma_floor", "sigma floors")? {
            stages
                .iter_mut()
                .zip(f)
                .for_each(|(s, f)| s.sigma_floor = f);
        }
        let slope = e.flag("slope_partition")?;
        let correction = e.flag("height_correction")?;
        let scale = e.get::<f64>("correction_scale", "a number")?;
        let tau = e.get::<f64>("temperature", "a number")?;
        let noise = e.get::<f64>("noise", "a number")?;
        for s in stages.iter_mut() {
            s.use_slope_partition = slope.unwrap_or(s.use_slope_partition);
            s.use_height_correction = correction.unwrap_or(s.use_height_correction);
            s.correction_scale = scale.unwrap_or(s.correction_scale);
            s.matcher_temperature = tau.unwrap_or(s.matcher_temperature);
            s.matcher_noise = noise.unwrap_or(s.matcher_noise);
        }
        for (n, s) in stages.iter().enumerate() {
            s.validate()
                .map_err(|err| CliError::Validation(format!("stage {}: {err}", n + 1)))?;
        }

        let ablation_seeds = match e.raw("ablation_seeds") {
            Some(raw) => parse_seeds("ablation_seeds", raw)?,
            None => (0..10).collect(),
        };
        if ablation_seeds.is_empty() {
            return Err(CliError::Validation(
                "config key `ablation_seeds` is empty".into(),
            ));
        }

        Ok(Self {
            ground_truth,
            seed,
            stages,
            range_margin: e.get("range_margin", "a number")?.unwrap_or(10.0),
            ablation_seeds,
        })
    }
}
