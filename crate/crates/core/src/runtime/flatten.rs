//! Expands composite instances into a flat set of leaf instances (basic
//! and service FBs) with connections resolved end to end.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{FbBody, FbNetwork, FbType, PortRef, Value};

use super::RuntimeError;

const MAX_DEPTH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    In,
    Out,
}

type Node = (String, String, Side);

#[derive(Clone, Debug)]
pub struct Leaf {
    pub path: String,
    pub type_name: String,
}

/// Leaf index plus port name.
pub type LeafPort = (usize, String);

#[derive(Clone, Debug, Default)]
pub struct Flat {
    pub leaves: Vec<Leaf>,
    /// Root instances in declaration order, with their type names.
    pub roots: Vec<(String, String)>,
    pub event_routes: BTreeMap<LeafPort, Vec<LeafPort>>,
    pub data_routes: BTreeMap<LeafPort, Vec<LeafPort>>,
    /// Literal bindings on leaf inputs; later entries win.
    pub params: Vec<(usize, String, Value)>,
    /// Root-level input ports to the leaf inputs they reach.
    pub event_inject: BTreeMap<(String, String), Vec<LeafPort>>,
    pub data_inject: BTreeMap<(String, String), Vec<LeafPort>>,
    /// Root-level data outputs to the leaf output driving them.
    pub outputs: BTreeMap<(String, String), LeafPort>,
    /// Root-level event outputs to the leaf outputs that raise them.
    pub event_sources: BTreeMap<(String, String), Vec<LeafPort>>,
}

struct Builder<'a> {
    types: &'a BTreeMap<&'a str, &'a FbType>,
    flat: Flat,
    leaf_index: BTreeMap<String, usize>,
    event_edges: BTreeMap<Node, Vec<Node>>,
    data_edges: BTreeMap<Node, Vec<Node>>,
    params: Vec<(Node, Value)>,
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn source_node(prefix: &str, p: &PortRef) -> Node {
    if p.is_self() {
        (prefix.to_string(), p.port.clone(), Side::In)
    } else {
        (join(prefix, &p.fb), p.port.clone(), Side::Out)
    }
}

fn target_node(prefix: &str, p: &PortRef) -> Node {
    if p.is_self() {
        (prefix.to_string(), p.port.clone(), Side::Out)
    } else {
        (join(prefix, &p.fb), p.port.clone(), Side::In)
    }
}

impl Builder<'_> {
    fn expand(&mut self, prefix: &str, net: &FbNetwork, depth: usize) -> Result<(), RuntimeError> {
        if depth > MAX_DEPTH {
            return Err(RuntimeError::Flatten(format!(
                "composite nesting too deep at `{prefix}`"
            )));
        }
        for inst in &net.instances {
            let path = join(prefix, &inst.name);
            let ty = self
                .types
                .get(inst.type_name.as_str())
                .ok_or_else(|| RuntimeError::UnknownType(inst.type_name.clone()))?;
            if depth == 0 {
                self.flat.roots.push((path.clone(), inst.type_name.clone()));
            }
            match &ty.body {
                FbBody::Composite(inner) => self.expand(&path, inner, depth + 1)?,
                FbBody::Basic(_) | FbBody::Service { .. } => {
                    self.leaf_index.insert(path.clone(), self.flat.leaves.len());
                    self.flat.leaves.push(Leaf {
                        path,
                        type_name: inst.type_name.clone(),
                    });
                }
            }
        }
        for c in &net.event_conns {
            self.event_edges
                .entry(source_node(prefix, &c.source))
                .or_default()
                .push(target_node(prefix, &c.target));
        }
        for c in &net.data_conns {
            self.data_edges
                .entry(source_node(prefix, &c.source))
                .or_default()
                .push(target_node(prefix, &c.target));
        }
        for p in &net.params {
            self.params.push((target_node(prefix, &p.target), p.value.clone()));
        }
        Ok(())
    }

    fn resolve(&self, edges: &BTreeMap<Node, Vec<Node>>, from: &Node, out: &mut Vec<LeafPort>, depth: usize) {
        if depth > MAX_DEPTH {
            return;
        }
        if from.2 == Side::In {
            if let Some(&idx) = self.leaf_index.get(&from.0) {
                out.push((idx, from.1.clone()));
                return;
            }
        }
        for next in edges.get(from).into_iter().flatten() {
            self.resolve(edges, next, out, depth + 1);
        }
    }

    fn resolve_back(&self, reverse: &BTreeMap<Node, Vec<Node>>, from: &Node, out: &mut Vec<LeafPort>, depth: usize) {
        if depth > MAX_DEPTH {
            return;
        }
        if from.2 == Side::Out {
            if let Some(&idx) = self.leaf_index.get(&from.0) {
                out.push((idx, from.1.clone()));
                return;
            }
        }
        for prev in reverse.get(from).into_iter().flatten() {
            self.resolve_back(reverse, prev, out, depth + 1);
        }
    }

    fn finish(mut self) -> Flat {
        let mut all_routes = [BTreeMap::new(), BTreeMap::new()];
        for (edges, routes) in [&self.event_edges, &self.data_edges]
            .into_iter()
            .zip(all_routes.iter_mut())
        {
            for src in edges.keys() {
                if src.2 != Side::Out {
                    continue;
                }
                let Some(&idx) = self.leaf_index.get(&src.0) else {
                    continue;
                };
                let mut out = Vec::new();
                self.resolve(edges, src, &mut out, 0);
                if !out.is_empty() {
                    routes.insert((idx, src.1.clone()), out);
                }
            }
        }
        let [event_routes, data_routes] = all_routes;
        self.flat.event_routes = event_routes;
        self.flat.data_routes = data_routes;

        let mut params = Vec::new();
        for (node, value) in &self.params {
            let mut out = Vec::new();
            self.resolve(&self.data_edges, node, &mut out, 0);
            for (idx, port) in out {
                params.push((idx, port, value.clone()));
            }
        }
        self.flat.params = params;

        let reverse = |edges: &BTreeMap<Node, Vec<Node>>| {
            let mut rev: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
            for (src, targets) in edges {
                for t in targets {
                    rev.entry(t.clone()).or_default().push(src.clone());
                }
            }
            rev
        };
        let rev_data = reverse(&self.data_edges);
        let rev_event = reverse(&self.event_edges);

        let types = self.types;
        let roots = self.flat.roots.clone();
        for (name, type_name) in &roots {
            let ty = types[type_name.as_str()];
            let iface = &ty.interface;
            for ev in &iface.event_inputs {
                let mut out = Vec::new();
                self.resolve(&self.event_edges, &(name.clone(), ev.clone(), Side::In), &mut out, 0);
                self.flat.event_inject.insert((name.clone(), ev.clone()), out);
            }
            for d in &iface.data_inputs {
                let mut out = Vec::new();
                self.resolve(&self.data_edges, &(name.clone(), d.name.clone(), Side::In), &mut out, 0);
                self.flat.data_inject.insert((name.clone(), d.name.clone()), out);
            }
            for d in &iface.data_outputs {
                let mut out = Vec::new();
                self.resolve_back(&rev_data, &(name.clone(), d.name.clone(), Side::Out), &mut out, 0);
                if let Some(first) = out.into_iter().next() {
                    self.flat.outputs.insert((name.clone(), d.name.clone()), first);
                }
            }
            for ev in &iface.event_outputs {
                let mut out = Vec::new();
                self.resolve_back(&rev_event, &(name.clone(), ev.clone(), Side::Out), &mut out, 0);
                let unique: BTreeSet<LeafPort> = out.into_iter().collect();
                self.flat
                    .event_sources
                    .insert((name.clone(), ev.clone()), unique.into_iter().collect());
            }
        }
        self.flat
    }
}

/// Flattens `net` against the type library.
pub fn flatten(net: &FbNetwork, types: &[FbType]) -> Result<Flat, RuntimeError> {
    let index: BTreeMap<&str, &FbType> = types.iter().map(|t| (t.name.as_str(), t)).collect();
    let mut b = Builder {
        types: &index,
        flat: Flat::default(),
        leaf_index: BTreeMap::new(),
        event_edges: BTreeMap::new(),
        data_edges: BTreeMap::new(),
        params: Vec::new(),
    };
    b.expand("", net, 0)?;
    Ok(b.finish())
}
