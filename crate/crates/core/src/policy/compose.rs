//! Composition of per-span policy units into one model.
//!
//! Variables are clustered by similarity (single link, never joining two
//! variables of the same unit), each cluster is unified under its
//! lexicographically smallest name, rules are rewritten and then
//! deduplicated by canonical print.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::embed::EmbeddingProvider;
use super::{ModelError, PolicyModel, PolicyUnit, Rule, VariableSpec};
use crate::logic::{DatatypeDecl, Sort};

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("clustered variables have different sorts: {}", fmt_members(.variables))]
    SortConflict { variables: Vec<(String, Sort)> },
    #[error("datatype `{name}` is declared with different constructors")]
    DatatypeConflict { name: String },
    #[error("cluster threshold {0} is outside (0, 1]")]
    Threshold(String),
    #[error(transparent)]
    Invalid(#[from] ModelError),
}

fn fmt_members(vs: &[(String, Sort)]) -> String {
    vs.iter().map(|(n, s)| format!("{n}: {s}")).collect::<Vec<_>>().join(", ")
}

/// The composed model together with each unit's variable renaming.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub model: PolicyModel,
    pub renames: Vec<BTreeMap<String, String>>,
    pub dropped_duplicates: usize,
}

pub fn compose(
    units: &[PolicyUnit],
    embedder: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<PolicyModel, ComposeError> {
    compose_detailed(units, embedder, threshold).map(|c| c.model)
}

struct Clusters {
    parent: Vec<usize>,
    units: Vec<BTreeSet<usize>>,
}

impl Clusters {
    fn find(&mut self, i: usize) -> usize {
        let p = self.parent[i];
        if p == i {
            return i;
        }
        let r = self.find(p);
        self.parent[i] = r;
        r
    }

    fn try_union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb || !self.units[ra].is_disjoint(&self.units[rb]) {
            return;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        let moved = std::mem::take(&mut self.units[hi]);
        self.units[lo].extend(moved);
    }
}

fn var_key(v: &VariableSpec) -> (String, String, String) {
    (v.name.clone(), v.description.clone(), v.sort.to_string())
}

pub fn compose_detailed(
    units: &[PolicyUnit],
    embedder: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<Composition, ComposeError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ComposeError::Threshold(threshold.to_string()));
    }
    let entries: Vec<(usize, &VariableSpec)> =
        units.iter().enumerate().flat_map(|(u, unit)| unit.variables.iter().map(move |v| (u, v))).collect();

    let mut edges = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            if entries[i].0 == entries[j].0 {
                continue;
            }
            let sim = embedder.similarity(entries[i].1, entries[j].1);
            if sim >= threshold {
                let (ki, kj) = (var_key(entries[i].1), var_key(entries[j].1));
                let (ka, kb) = if ki <= kj { (ki, kj) } else { (kj, ki) };
                edges.push((sim, ka, kb, i, j));
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| (&a.1, &a.2).cmp(&(&b.1, &b.2))));

    let mut clusters = Clusters {
        parent: (0..entries.len()).collect(),
        units: entries.iter().map(|(u, _)| BTreeSet::from([*u])).collect(),
    };
    for (_, _, _, i, j) in &edges {
        clusters.try_union(*i, *j);
    }

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..entries.len() {
        let r = clusters.find(i);
        members.entry(r).or_default().push(i);
    }

    let taken_by_types: BTreeSet<String> = units
        .iter()
        .flat_map(|u| u.datatypes.iter())
        .flat_map(|d| std::iter::once(d.name.clone()).chain(d.constructors.iter().cloned()))
        .collect();

    // (first entry index, unified spec, member entry indices)
    let mut unified: Vec<(usize, VariableSpec, Vec<usize>)> = Vec::new();
    for ms in members.values() {
        let specs: Vec<&VariableSpec> = ms.iter().map(|&i| entries[i].1).collect();
        let sorts: BTreeSet<&Sort> = specs.iter().map(|v| &v.sort).collect();
        if sorts.len() > 1 {
            let mut variables: Vec<(String, Sort)> = specs.iter().map(|v| (v.name.clone(), v.sort.clone())).collect();
            variables.sort();
            variables.dedup();
            return Err(ComposeError::SortConflict { variables });
        }
        let name = specs.iter().map(|v| v.name.as_str()).min().unwrap().to_string();
        let description = specs
            .iter()
            .map(|v| v.description.as_str())
            .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
            .unwrap()
            .to_string();
        let provenance: BTreeSet<String> = specs
            .iter()
            .flat_map(|v| std::iter::once(v.description.clone()).chain(v.provenance.iter().cloned()))
            .filter(|d| *d != description)
            .collect();
        let spec = VariableSpec {
            name,
            sort: specs[0].sort.clone(),
            description,
            provenance: provenance.into_iter().collect(),
        };
        unified.push((ms[0], spec, ms.clone()));
    }

    // Distinct clusters sharing a canonical name get numeric suffixes.
    let mut by_name: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (ix, (_, spec, _)) in unified.iter().enumerate() {
        by_name.entry(spec.name.clone()).or_default().push(ix);
    }
    let mut taken: BTreeSet<String> = by_name.keys().cloned().chain(taken_by_types).collect();
    for (name, ixs) in &by_name {
        if ixs.len() < 2 {
            continue;
        }
        let mut ordered = ixs.clone();
        ordered.sort_by_key(|&ix| {
            let (_, spec, ms) = &unified[ix];
            let mut keys: Vec<_> = ms.iter().map(|&i| var_key(entries[i].1)).collect();
            keys.sort();
            (spec.sort.to_string(), spec.description.clone(), keys)
        });
        let mut n = 1;
        for ix in ordered {
            while taken.contains(&format!("{name}_{n}")) {
                n += 1;
            }
            let fresh = format!("{name}_{n}");
            taken.insert(fresh.clone());
            unified[ix].1.name = fresh;
        }
    }

    let mut renames = vec![BTreeMap::new(); units.len()];
    for (_, spec, ms) in &unified {
        for &i in ms {
            let (u, v) = entries[i];
            renames[u].insert(v.name.clone(), spec.name.clone());
        }
    }
    unified.sort_by_key(|(first, _, _)| *first);

    let mut datatypes: Vec<DatatypeDecl> = Vec::new();
    for d in units.iter().flat_map(|u| u.datatypes.iter()) {
        match datatypes.iter().find(|e| e.name == d.name) {
            Some(e) if e.constructors != d.constructors => {
                return Err(ComposeError::DatatypeConflict { name: d.name.clone() })
            }
            Some(_) => {}
            None => datatypes.push(d.clone()),
        }
    }

    let mut rules: Vec<Rule> = Vec::new();
    let mut printed = BTreeSet::new();
    let mut ids = BTreeSet::new();
    let mut dropped_duplicates = 0;
    for (u, unit) in units.iter().enumerate() {
        let map = &renames[u];
        for r in &unit.rules {
            let term = r.term.rename_vars(&|n| map.get(n).cloned());
            if !printed.insert(term.to_string()) {
                dropped_duplicates += 1;
                continue;
            }
            let mut id = r.id.clone();
            let mut n = 2;
            while ids.contains(&id) {
                id = format!("{}_{n}", r.id);
                n += 1;
            }
            ids.insert(id.clone());
            rules.push(Rule { id, term, provenance: r.provenance.clone() });
        }
    }

    let model = PolicyModel {
        datatypes,
        variables: unified.into_iter().map(|(_, spec, _)| spec).collect(),
        rules,
        vetted: None,
    };
    model.validate()?;
    Ok(Composition { model, renames, dropped_duplicates })
}
