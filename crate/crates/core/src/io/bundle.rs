use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::correlation::{parse_correlation_csv, write_correlation_csv, LabeledCorrelation};
use super::manifest::{parse_manifest, AssetEntry, IndexEntry, Manifest, MaturityEntry};
use super::surface::{parse_surface_csv, write_surface_csv, SurfaceRow};
use super::{DataError, Issue, IssueKind};
use crate::jump::JumpParams;
use crate::surface::VolSurfaceSlice;

pub const MANIFEST_FILE: &str = "bundle.toml";

/// Maturities in surface files match manifest maturities within this.
const MATURITY_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MaturityData {
    pub maturity: f64,
    pub discount: f64,
    /// In asset order.
    pub forwards: Vec<f64>,
    /// One slice per asset, in asset order.
    pub slices: Vec<VolSurfaceSlice>,
    pub index: Option<VolSurfaceSlice>,
}

/// A validated, immutable set of market data.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketBundle {
    pub name: String,
    pub asset_ids: Vec<String>,
    pub weights: Vec<f64>,
    /// Ascending in maturity.
    pub maturities: Vec<MaturityData>,
    /// Total correlation in asset order.
    pub correlation: DMatrix<f64>,
    pub index_id: Option<String>,
    pub jump: Option<JumpParams>,
    /// SHA-256 of every file read, keyed by path relative to the bundle.
    pub checksums: BTreeMap<String, String>,
}

impl MarketBundle {
    pub fn asset_index(&self, id: &str) -> Option<usize> {
        self.asset_ids.iter().position(|a| a == id)
    }

    pub fn maturity(&self, t: f64) -> Option<&MaturityData> {
        self.maturities.iter().find(|m| (m.maturity - t).abs() <= MATURITY_MATCH)
    }

    pub fn maturity_list(&self) -> Vec<f64> {
        self.maturities.iter().map(|m| m.maturity).collect()
    }
}

impl MaturityData {
    pub fn basket_forward(&self, weights: &[f64]) -> f64 {
        weights.iter().zip(&self.forwards).map(|(w, f)| w * f).sum()
    }
}

struct Loader {
    root: PathBuf,
    issues: Vec<Issue>,
    checksums: BTreeMap<String, String>,
}

impl Loader {
    fn read(&mut self, rel: &str) -> Option<String> {
        let path = self.root.join(rel);
        match fs::read(&path) {
            Ok(bytes) => {
                self.checksums.insert(rel.to_string(), hex::encode(Sha256::digest(&bytes)));
                match String::from_utf8(bytes) {
                    Ok(s) => Some(s),
                    Err(_) => {
                        self.issues.push(Issue::new(IssueKind::Parse, rel, "file is not valid UTF-8"));
                        None
                    }
                }
            }
            Err(e) => {
                self.issues.push(Issue::new(IssueKind::Io, rel, format!("cannot read {}: {e}", path.display())));
                None
            }
        }
    }

    fn consistency(&mut self, file: &str, msg: String) {
        self.issues.push(Issue::new(IssueKind::Consistency, file, msg));
    }

    /// Splits surface rows into per-maturity slices for the manifest's maturities.
    fn slices(
        &mut self,
        file: &str,
        id: &str,
        rows: &[SurfaceRow],
        mats: &[MaturityEntry],
    ) -> Vec<Option<(Vec<f64>, Vec<f64>)>> {
        let mut out: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; mats.len()];
        let mut extra = BTreeSet::new();
        for r in rows {
            match mats.iter().position(|m| (m.t - r.maturity).abs() <= MATURITY_MATCH) {
                Some(i) => {
                    let (k, v) = out[i].get_or_insert_with(Default::default);
                    k.push(r.strike);
                    v.push(r.implied_vol);
                }
                None => {
                    extra.insert(r.maturity.to_bits());
                }
            }
        }
        for t in extra {
            log::warn!("{file}: quotes at maturity {} not listed in the manifest are ignored", f64::from_bits(t));
        }
        for (i, m) in mats.iter().enumerate() {
            match &out[i] {
                None => self.consistency(file, format!("{id} has no quotes at maturity {}", m.t)),
                Some((k, _)) if k.len() < 3 => self
                    .consistency(file, format!("{id} has {} quotes at maturity {}; at least 3 required", k.len(), m.t)),
                _ => {}
            }
        }
        out
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Loads and validates a bundle from its directory or manifest path,
/// reporting every problem found across all files.
pub fn load_bundle(path: &Path) -> Result<MarketBundle, DataError> {
    let manifest_path = manifest_path(path);
    let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest_name = manifest_path.file_name().map_or(MANIFEST_FILE.into(), |n| n.to_string_lossy().into_owned());
    let mut ld = Loader { root, issues: Vec::new(), checksums: BTreeMap::new() };

    let Some(text) = ld.read(&manifest_name) else {
        return Err(DataError::Invalid(ld.issues));
    };
    let manifest = parse_manifest(&text, &manifest_name).map_err(DataError::Invalid)?;
    ld.issues.extend(validate_manifest(&manifest, &manifest_name));

    let mut mats: Vec<MaturityEntry> = manifest.maturities.clone();
    mats.sort_by(|a, b| a.t.total_cmp(&b.t));
    let ids: Vec<String> = manifest.assets.iter().map(|a| a.id.clone()).collect();

    let mut asset_slices = Vec::new();
    for a in &manifest.assets {
        asset_slices.push(load_surface(&mut ld, &a.surface, &a.id, &mats));
    }
    let index_slices = manifest.index.as_ref().map(|ix| load_surface(&mut ld, &ix.surface, &ix.id, &mats));

    let correlation =
        ld.read(&manifest.correlation).and_then(|text| match parse_correlation_csv(&text, &manifest.correlation) {
            Ok(c) => check_labels(&mut ld, &manifest.correlation, &c, &ids),
            Err(mut e) => {
                ld.issues.append(&mut e);
                None
            }
        });

    if !ld.issues.is_empty() {
        return Err(DataError::Invalid(ld.issues));
    }
    let weights: Vec<f64> = manifest.assets.iter().map(|a| a.weight).collect();
    let mut maturities = Vec::new();
    for (m_i, m) in mats.iter().enumerate() {
        let forwards: Vec<f64> = ids.iter().map(|id| m.forwards[id]).collect();
        let mut slices = Vec::new();
        for (a_i, id) in ids.iter().enumerate() {
            let (k, v) = asset_slices[a_i][m_i].clone().expect("checked above");
            let s = VolSurfaceSlice::new(id.clone(), m.t, forwards[a_i], m.discount, k, v);
            match s {
                Ok(s) => slices.push(s),
                Err(e) => ld.consistency(&manifest.assets[a_i].surface, e.to_string()),
            }
        }
        let index = match (&manifest.index, &index_slices) {
            (Some(ix), Some(per_mat)) => {
                let (k, v) = per_mat[m_i].clone().expect("checked above");
                let fwd: f64 = weights.iter().zip(&forwards).map(|(w, f)| w * f).sum();
                match VolSurfaceSlice::new(ix.id.clone(), m.t, fwd, m.discount, k, v) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        ld.consistency(&ix.surface, e.to_string());
                        None
                    }
                }
            }
            _ => None,
        };
        maturities.push(MaturityData { maturity: m.t, discount: m.discount, forwards, slices, index });
    }
    if !ld.issues.is_empty() {
        return Err(DataError::Invalid(ld.issues));
    }
    Ok(MarketBundle {
        name: manifest.name,
        asset_ids: ids,
        weights,
        maturities,
        correlation: correlation.expect("checked above"),
        index_id: manifest.index.map(|i| i.id),
        jump: manifest.jump,
        checksums: ld.checksums,
    })
}

fn load_surface(ld: &mut Loader, file: &str, id: &str, mats: &[MaturityEntry]) -> Vec<Option<(Vec<f64>, Vec<f64>)>> {
    match ld.read(file).map(|t| parse_surface_csv(&t, file)) {
        Some(Ok(rows)) => ld.slices(file, id, &rows, mats),
        Some(Err(mut e)) => {
            ld.issues.append(&mut e);
            vec![None; mats.len()]
        }
        None => vec![None; mats.len()],
    }
}

fn check_labels(ld: &mut Loader, file: &str, c: &LabeledCorrelation, ids: &[String]) -> Option<DMatrix<f64>> {
    for l in &c.labels {
        if !ids.contains(l) {
            ld.consistency(file, format!("correlation label `{l}` has no surface in the bundle"));
        }
    }
    for id in ids {
        if !c.labels.contains(id) {
            ld.consistency(file, format!("asset `{id}` missing from the correlation table"));
        }
    }
    c.reordered(ids)
}

fn validate_manifest(m: &Manifest, file: &str) -> Vec<Issue> {
    let mut issues = Vec::new();
    let schema = |msg: String| Issue::new(IssueKind::Schema, file, msg);
    if m.assets.is_empty() {
        issues.push(schema("at least one [[asset]] is required".into()));
    }
    if m.maturities.is_empty() {
        issues.push(schema("at least one [[maturity]] is required".into()));
    }
    let mut ids = BTreeSet::new();
    for a in &m.assets {
        if a.id.is_empty() || a.id.contains(',') {
            issues.push(schema(format!("asset id `{}` must be nonempty and free of commas", a.id)));
        }
        if !ids.insert(a.id.as_str()) {
            issues.push(schema(format!("duplicate asset id `{}`", a.id)));
        }
        if !a.weight.is_finite() {
            issues.push(schema(format!("weight of `{}` must be finite", a.id)));
        }
    }
    if let Some(ix) = &m.index {
        if ids.contains(ix.id.as_str()) {
            issues.push(schema(format!("index id `{}` collides with an asset id", ix.id)));
        }
    }
    for (i, mat) in m.maturities.iter().enumerate() {
        if !(mat.t.is_finite() && mat.t > 0.0) {
            issues.push(schema(format!("maturity {} must be positive", mat.t)));
        }
        if !(mat.discount.is_finite() && mat.discount > 0.0) {
            issues.push(schema(format!("discount {} at maturity {} must be positive", mat.discount, mat.t)));
        }
        if m.maturities[..i].iter().any(|o| (o.t - mat.t).abs() <= MATURITY_MATCH) {
            issues.push(schema(format!("maturity {} listed twice", mat.t)));
        }
        for id in &ids {
            match mat.forwards.get(*id) {
                None => issues.push(Issue::new(
                    IssueKind::Consistency,
                    file,
                    format!("no forward for `{id}` at maturity {}", mat.t),
                )),
                Some(f) if !(f.is_finite() && *f > 0.0) => issues.push(Issue::new(
                    IssueKind::Schema,
                    file,
                    format!("forward {f} of `{id}` at maturity {} must be positive", mat.t),
                )),
                _ => {}
            }
        }
        for k in mat.forwards.keys() {
            if !ids.contains(k.as_str()) {
                issues.push(Issue::new(
                    IssueKind::Consistency,
                    file,
                    format!("forward given for unknown asset `{k}` at maturity {}", mat.t),
                ));
            }
        }
    }
    if let Some(jp) = &m.jump {
        if let Err(e) = jp.validate() {
            issues.push(Issue::new(IssueKind::Schema, file, format!("jump: {e}")));
        }
    }
    issues
}

fn write_file(path: &Path, text: &str) -> Result<(), DataError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| DataError::Write { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| DataError::Write { path: path.to_path_buf(), source })
}

/// Writes `bundle` as a directory that [`load_bundle`] reads back.
pub fn write_bundle(bundle: &MarketBundle, dir: &Path) -> Result<(), DataError> {
    let surface_path = |id: &str| format!("surfaces/{id}.csv");
    let manifest = Manifest {
        name: bundle.name.clone(),
        correlation: "correlation.csv".into(),
        assets: bundle
            .asset_ids
            .iter()
            .zip(&bundle.weights)
            .map(|(id, &weight)| AssetEntry { id: id.clone(), surface: surface_path(id), weight })
            .collect(),
        maturities: bundle
            .maturities
            .iter()
            .map(|m| MaturityEntry {
                t: m.maturity,
                discount: m.discount,
                forwards: bundle.asset_ids.iter().cloned().zip(m.forwards.iter().copied()).collect(),
            })
            .collect(),
        index: bundle.index_id.as_ref().map(|id| IndexEntry { id: id.clone(), surface: surface_path(id) }),
        jump: bundle.jump,
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| DataError::Write { path: dir.join(MANIFEST_FILE), source: std::io::Error::other(e) })?;
    write_file(&dir.join(MANIFEST_FILE), &text)?;

    let rows = |pick: &dyn Fn(&MaturityData) -> Option<&VolSurfaceSlice>| {
        let mut rows = Vec::new();
        for m in &bundle.maturities {
            if let Some(s) = pick(m) {
                rows.extend(s.strikes.iter().zip(&s.vols).map(|(&k, &v)| (k, m.maturity, v)));
            }
        }
        write_surface_csv(&rows)
    };
    for (i, id) in bundle.asset_ids.iter().enumerate() {
        write_file(&dir.join(surface_path(id)), &rows(&|m| m.slices.get(i)))?;
    }
    if let Some(id) = &bundle.index_id {
        write_file(&dir.join(surface_path(id)), &rows(&|m| m.index.as_ref()))?;
    }
    let corr = LabeledCorrelation { labels: bundle.asset_ids.clone(), matrix: bundle.correlation.clone() };
    write_file(&dir.join("correlation.csv"), &write_correlation_csv(&corr))
}
