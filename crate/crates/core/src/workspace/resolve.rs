use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{invoked_members, referenced_types, MemberUse};
use crate::index::CorpusIndex;
use crate::model::{ComponentId, ComponentKind, ComponentRecord, TypeName};
use crate::mql::{match_interface, MethodPattern, MqlQuery, ParamPattern, ReturnPattern};

pub const DEFAULT_DEPTH_CAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Heuristic {
    Workspace,
    QualifiedName,
    SimpleNameMembers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResolvedBy {
    Component(ComponentId),
    Workspace,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolutionStep {
    pub missing_type: TypeName,
    pub resolved_by: ResolvedBy,
    /// The heuristic that succeeded; absent when unresolved.
    pub heuristic: Option<Heuristic>,
    /// 1 for types the root refers to, 2 for types those refer to, and so on.
    pub depth: usize,
    /// Members invoked on the type by the component that needs it.
    pub required_members: Vec<MemberUse>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolutionPlan {
    pub root: ComponentId,
    pub steps: Vec<ResolutionStep>,
    pub depth_reached: usize,
}

fn usable(r: &ComponentRecord) -> bool {
    r.interface.kind != ComponentKind::Test
}

fn by_qualified_name<'a>(ix: &'a CorpusIndex, ty: &TypeName) -> Option<&'a ComponentRecord> {
    let full = ty.full_name();
    let mut found = ix
        .components
        .values()
        .filter(|r| usable(r) && r.interface.class_name.full_name() == full);
    let first = found.next()?;
    found.next().is_none().then_some(first)
}

fn members_query(ty: &TypeName, members: &[MemberUse]) -> MqlQuery {
    let mut q = MqlQuery::new(ty.simple.clone());
    for m in members {
        q.methods.push(MethodPattern::new(
            m.name.clone(),
            vec![ParamPattern::Type("*".into()); m.arity],
            ReturnPattern::Any,
        ));
    }
    q
}

fn by_members<'a>(
    ix: &'a CorpusIndex,
    ty: &TypeName,
    members: &[MemberUse],
) -> Option<&'a ComponentRecord> {
    let q = members_query(ty, members);
    let mut best: Option<(f64, &ComponentRecord)> = None;
    for r in ix.components.values() {
        if !usable(r)
            || !r
                .interface
                .class_name
                .simple
                .eq_ignore_ascii_case(&ty.simple)
        {
            continue;
        }
        let has_all = members.iter().all(|m| {
            r.interface
                .plain_methods()
                .any(|s| s.name == m.name && s.params.len() == m.arity)
        });
        if !has_all {
            continue;
        }
        let score = match_interface(&q, &r.interface).score;
        // Components iterate in id order, so a strict improvement keeps the least id on ties.
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, r));
        }
    }
    best.map(|(_, r)| r)
}

/// Breadth-first resolution of the types `root` needs, trying for each type:
/// the workspace, then a unique component with the same qualified name, then
/// components with the same simple name offering every member used on the type.
/// Components found are searched in turn while their depth is below `depth_cap`.
pub fn resolve_dependencies(
    root: &ComponentRecord,
    ix: &CorpusIndex,
    workspace_types: &BTreeSet<TypeName>,
    depth_cap: usize,
) -> ResolutionPlan {
    let depth_cap = depth_cap.max(1);
    let workspace: HashSet<&str> = workspace_types.iter().map(|t| t.simple.as_str()).collect();
    let mut visited: HashSet<ComponentId> = HashSet::from([root.id.clone()]);
    let mut provided: HashSet<String> = HashSet::from([root.interface.class_name.simple.clone()]);
    let mut handled: HashSet<String> = HashSet::new();
    let mut steps = Vec::new();
    let mut depth_reached = 0;
    let mut queue: VecDeque<(&ComponentRecord, usize)> = VecDeque::from([(root, 1)]);

    while let Some((record, depth)) = queue.pop_front() {
        let Ok(types) = referenced_types(&record.source) else {
            continue;
        };
        for ty in types {
            if provided.contains(&ty.simple) || !handled.insert(ty.full_name()) {
                continue;
            }
            let members = invoked_members(&record.source, &ty.simple).unwrap_or_default();
            let (resolved_by, heuristic, found) = if workspace.contains(ty.simple.as_str()) {
                (ResolvedBy::Workspace, Some(Heuristic::Workspace), None)
            } else if let Some(r) = by_qualified_name(ix, &ty) {
                (
                    ResolvedBy::Component(r.id.clone()),
                    Some(Heuristic::QualifiedName),
                    Some(r),
                )
            } else if let Some(r) = by_members(ix, &ty, &members) {
                (
                    ResolvedBy::Component(r.id.clone()),
                    Some(Heuristic::SimpleNameMembers),
                    Some(r),
                )
            } else {
                (ResolvedBy::Unresolved, None, None)
            };
            depth_reached = depth_reached.max(depth);
            steps.push(ResolutionStep {
                missing_type: ty,
                resolved_by,
                heuristic,
                depth,
                required_members: members,
            });
            if let Some(r) = found {
                provided.insert(r.interface.class_name.simple.clone());
                if visited.insert(r.id.clone()) && depth < depth_cap {
                    queue.push_back((r, depth + 1));
                }
            }
        }
    }
    ResolutionPlan {
        root: root.id.clone(),
        steps,
        depth_reached,
    }
}
