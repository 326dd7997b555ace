use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use gridplan_core::fixtures;
use serde::Serialize;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Name {
    /// The radially operated 20 kV ring with rules for switching and line replacement.
    Intro,
    /// The same ring with a fixed catalog of six line replacements.
    IntroReplace,
    /// The 12-bus network with decommissioned lines and candidate trails.
    Trail,
}

fn put(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

pub fn write(name: Name, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    put(dir, "cases.json", &fixtures::intro_cases())?;
    match name {
        Name::Intro => {
            put(dir, "network.json", &fixtures::intro_ring())?;
            put(dir, "network_without_pv.json", &fixtures::intro_ring_without_pv())?;
            put(dir, "rules.json", &fixtures::intro_rules())?;
            put(dir, "scenario_conservative.json", &fixtures::conservative_scenario())?;
            put(dir, "scenario_progressive.json", &fixtures::progressive_scenario())?;
        }
        Name::IntroReplace => {
            let p = fixtures::intro_replace_problem();
            put(dir, "network.json", &p.base)?;
            put(dir, "catalog.json", &p.catalog)?;
        }
        Name::Trail => {
            put(dir, "network.json", &fixtures::trail_network())?;
            put(dir, "rules.json", &fixtures::trail_rules())?;
        }
    }
    Ok(())
}
