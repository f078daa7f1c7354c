use std::path::{Path, PathBuf};

use nmlogic::consequence::NmLogic;
use nmlogic::lang::Language;
use nmlogic::pref::{PreferenceRelation, ProductStructure};
use nmlogic::size::SizeSystem;
use serde_json::Value;

use crate::report::CliError;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// A string in place of an object is a path, relative to `dir`.
fn inline(v: &Value, dir: &Path) -> Result<Value, CliError> {
    match v {
        Value::String(p) => read_json(&dir.join(p)),
        other => Ok(other.clone()),
    }
}

pub enum Structure {
    Relation { rel: PreferenceRelation, lang: Option<Language> },
    Product(ProductStructure),
    Size(SizeSystem),
}

impl Structure {
    pub fn kind(&self) -> &'static str {
        match self {
            Structure::Relation { .. } => "relation",
            Structure::Product(_) => "product",
            Structure::Size(_) => "size-system",
        }
    }

    /// Consequence relation of a relation or product file.
    pub fn logic(&self) -> Result<NmLogic, CliError> {
        match self {
            Structure::Relation { rel, lang: Some(l) } => Ok(NmLogic::new(l.clone(), rel.clone())?),
            Structure::Relation { rel, lang: None } => Ok(NmLogic::on_points(rel.clone())),
            Structure::Product(ps) => Ok(NmLogic::from_product(ps)?),
            Structure::Size(_) => Err(CliError::usage("a size system has no preference relation")),
        }
    }
}

pub fn product_from_value(v: &Value, dir: &Path) -> Result<ProductStructure, CliError> {
    let mut v = v.clone();
    if let Some(comps) = v.get_mut("components").and_then(Value::as_array_mut) {
        for c in comps.iter_mut() {
            *c = inline(c, dir)?;
        }
    }
    if let Some(rels) = v.get_mut("relations").and_then(Value::as_object_mut) {
        for r in rels.values_mut() {
            *r = inline(r, dir)?;
        }
    }
    Ok(ProductStructure::from_json(&v)?)
}

pub fn structure_from_value(v: &Value, dir: &Path) -> Result<Structure, CliError> {
    if v.get("blocks").is_some() {
        return Ok(Structure::Product(product_from_value(v, dir)?));
    }
    if v.get("bases").is_some() {
        return Ok(Structure::Size(SizeSystem::from_json(v)?));
    }
    if v.get("carrier").is_some() {
        let rel = PreferenceRelation::from_json(v)?;
        let lang = match v.get("vars") {
            Some(x) => Some(Language::new(
                serde_json::from_value::<Vec<String>>(x.clone())
                    .map_err(|e| CliError::usage(format!("vars: {e}")))?,
            )?),
            None => None,
        };
        return Ok(Structure::Relation { rel, lang });
    }
    Err(CliError::usage(
        "structure needs 'carrier' (relation), 'blocks' (product) or 'bases' (size system)",
    ))
}

pub fn structure(path: &Path) -> Result<Structure, CliError> {
    structure_from_value(&read_json(path)?, &base_dir(path))
}

/// Field `key` of a problem file, inlined if it is a path.
pub fn field(v: &Value, key: &str, file: &Path) -> Result<Value, CliError> {
    let x = v
        .get(key)
        .ok_or_else(|| CliError::usage(format!("{}: missing '{key}'", file.display())))?;
    inline(x, &base_dir(file))
}

pub fn dir_of(path: &Path) -> PathBuf {
    base_dir(path)
}

pub fn str_list(v: &Value, what: &str) -> Result<Vec<String>, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::usage(format!("{what}: {e}")))
}

/// Block mask list such as "0|1,2" or "p|q,r" (variables name their block).
pub fn parse_blocks(ps: &ProductStructure, text: &str, parts: usize) -> Result<Vec<u64>, CliError> {
    let pieces: Vec<&str> = text.split('|').collect();
    if pieces.len() != parts {
        return Err(CliError::usage(format!("expected {parts} parts separated by '|', got '{text}'")));
    }
    pieces
        .iter()
        .map(|p| {
            p.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .try_fold(0u64, |acc, t| Ok(acc | 1 << block_of(ps, t)?))
        })
        .collect()
}

fn block_of(ps: &ProductStructure, token: &str) -> Result<usize, CliError> {
    if let Ok(i) = token.parse::<usize>() {
        if i < ps.blocks().len() {
            return Ok(i);
        }
    }
    ps.blocks()
        .iter()
        .position(|b| b.language().contains(token))
        .ok_or_else(|| CliError::usage(format!("no block '{token}'")))
}

/// Block mask covering the named variables; each block must be whole.
pub fn blocks_of_vars(ps: &ProductStructure, vars: &[String]) -> Result<u64, CliError> {
    let mut mask = 0u64;
    for v in vars {
        mask |= 1 << block_of(ps, v)?;
    }
    for b in nmlogic::bits::ones(mask) {
        for v in ps.blocks()[b].language().vars() {
            if !vars.contains(v) {
                return Err(CliError::usage(format!("block of '{v}' is split across parts")));
            }
        }
    }
    Ok(mask)
}
