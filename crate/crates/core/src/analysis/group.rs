//! Frequency-threshold clustering of candidate interfaces into a "group picture":
//! the methods that a given share of the candidates agree on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::extract::render_interface;
use crate::model::{
    canonicalize_signature, CanonicalSignature, ComponentKind, InterfaceSpec, MethodSignature,
    TypeName,
};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupMember {
    pub signature: CanonicalSignature,
    /// Share of candidates declaring the signature, in (0, 1].
    pub support: f64,
    /// Number of candidates declaring the signature.
    pub count: usize,
    pub display_signature: MethodSignature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupPicture {
    pub class_name: TypeName,
    pub members: Vec<GroupMember>,
    pub sample_size: usize,
    pub threshold: f64,
}

/// Methods (constructors excluded) declared by at least `threshold` of the candidates.
///
/// Each member is shown with the spelling most candidates used; ties go to the
/// lexicographically least spelling. Members are ordered by support descending,
/// then canonical name.
pub fn group_picture(candidates: &[InterfaceSpec], threshold: f64, name: TypeName) -> GroupPicture {
    let mut counts: BTreeMap<CanonicalSignature, usize> = BTreeMap::new();
    let mut spellings: BTreeMap<CanonicalSignature, BTreeMap<String, (usize, MethodSignature)>> =
        BTreeMap::new();
    for iface in candidates {
        let mut seen = BTreeSet::new();
        for m in iface.plain_methods() {
            let canon = canonicalize_signature(m);
            let spelled = spellings.entry(canon.clone()).or_default();
            let entry = spelled.entry(m.to_string()).or_insert((0, m.clone()));
            entry.0 += 1;
            if seen.insert(canon.clone()) {
                *counts.entry(canon).or_default() += 1;
            }
        }
    }

    let n = candidates.len();
    let mut members: Vec<GroupMember> = counts
        .into_iter()
        .filter(|(_, count)| n > 0 && (*count as f64) >= threshold * n as f64 - 1e-12)
        .map(|(canon, count)| {
            let display_signature = spellings[&canon]
                .values()
                .max_by(|(a, sa), (b, sb)| {
                    a.cmp(b).then_with(|| sb.to_string().cmp(&sa.to_string()))
                })
                .map(|(_, sig)| sig.clone())
                .expect("every counted signature has a spelling");
            GroupMember {
                support: count as f64 / n as f64,
                count,
                signature: canon,
                display_signature,
            }
        })
        .collect();
    members.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.signature.name.cmp(&b.signature.name))
            .then_with(|| a.signature.cmp(&b.signature))
    });

    GroupPicture {
        class_name: name,
        members,
        sample_size: n,
        threshold,
    }
}

/// A class skeleton with one empty-bodied declaration per member, in member order.
pub fn render_skeleton(gp: &GroupPicture) -> String {
    let mut iface = InterfaceSpec::new(
        TypeName::simple(gp.class_name.simple.clone()),
        ComponentKind::Class,
    );
    for m in &gp.members {
        iface.push_method(m.display_signature.clone());
    }
    render_interface(&iface)
}
