//! Left-to-right layered layout, plus DOT and SVG export.
//!
//! Stem elements are placed in columns by longest-path depth over causal
//! connections, so a strategy sits left of its mechanism, and so on down to
//! the distal outcome. Moderators go in a lane above the element or
//! connection they annotate, preconditions in a lane below it. Anything that
//! cannot be attached lands in an overflow row under the pathway.

mod dot;
mod svg;

pub use dot::to_dot;
pub use svg::to_svg;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConnectionKind, Diagram, Element, ElementId, ElementKind, Point, Target};

/// Drawn size of every element, in board units.
pub const BOX_WIDTH: f64 = 160.0;
pub const BOX_HEIGHT: f64 = 80.0;
/// Minimum horizontal distance between annotation centres in one lane.
const LANE_SPACING: f64 = BOX_WIDTH + 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("layout gaps must be strictly positive (got {0})")]
pub struct InvalidGap(pub f64);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct LayoutConfig {
    column_gap: f64,
    row_gap: f64,
    annotation_offset: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_column_gap")]
    column_gap: f64,
    #[serde(default = "default_row_gap")]
    row_gap: f64,
    #[serde(default = "default_annotation_offset")]
    annotation_offset: f64,
}

fn default_column_gap() -> f64 {
    240.0
}
fn default_row_gap() -> f64 {
    140.0
}
fn default_annotation_offset() -> f64 {
    100.0
}

impl TryFrom<RawConfig> for LayoutConfig {
    type Error = InvalidGap;

    fn try_from(raw: RawConfig) -> Result<Self, InvalidGap> {
        LayoutConfig::new(raw.column_gap, raw.row_gap, raw.annotation_offset)
    }
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            column_gap: default_column_gap(),
            row_gap: default_row_gap(),
            annotation_offset: default_annotation_offset(),
        }
    }
}

impl LayoutConfig {
    pub fn new(column_gap: f64, row_gap: f64, annotation_offset: f64) -> Result<Self, InvalidGap> {
        for g in [column_gap, row_gap, annotation_offset] {
            if !(g.is_finite() && g > 0.0) {
                return Err(InvalidGap(g));
            }
        }
        Ok(Self {
            column_gap,
            row_gap,
            annotation_offset,
        })
    }

    pub fn column_gap(&self) -> f64 {
        self.column_gap
    }

    pub fn row_gap(&self) -> f64 {
        self.row_gap
    }

    pub fn annotation_offset(&self) -> f64 {
        self.annotation_offset
    }
}

fn kind_id_order(a: &Element, b: &Element) -> Ordering {
    (a.kind, a.id.as_str()).cmp(&(b.kind, b.id.as_str()))
}

/// Column index of every element that takes part in the stem: the longest
/// causal path leading to it. Back edges found by a deterministic DFS are
/// ignored so cyclic drafts still lay out.
pub fn stem_depths(diagram: &Diagram) -> BTreeMap<ElementId, usize> {
    let mut nodes: Vec<&Element> = diagram
        .elements()
        .iter()
        .filter(|e| {
            e.kind.is_stem()
                || diagram.connections().iter().any(|c| {
                    c.kind == ConnectionKind::Causal && (c.source == e.id || c.target_element() == Some(&e.id))
                })
        })
        .collect();
    nodes.sort_by(|a, b| kind_id_order(a, b));
    let index: HashMap<&ElementId, usize> = nodes.iter().enumerate().map(|(i, e)| (&e.id, i)).collect();

    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for c in diagram.connections() {
        if c.kind != ConnectionKind::Causal {
            continue;
        }
        if let (Some(&s), Some(&t)) = (index.get(&c.source), c.target_element().and_then(|t| index.get(t))) {
            succ[s].push(t);
        }
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }

    // iterative DFS: drop back edges, record post-order
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; nodes.len()];
    let mut kept: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut post = Vec::with_capacity(nodes.len());
    for root in 0..nodes.len() {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some((v, i)) = stack.pop() {
            if i < succ[v].len() {
                stack.push((v, i + 1));
                let w = succ[v][i];
                match mark[w] {
                    Mark::Active => {} // back edge
                    Mark::Done => kept[v].push(w),
                    Mark::New => {
                        kept[v].push(w);
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                    }
                }
            } else {
                mark[v] = Mark::Done;
                post.push(v);
            }
        }
    }

    let mut depth = vec![0usize; nodes.len()];
    for &v in post.iter().rev() {
        for &w in &kept[v] {
            depth[w] = depth[w].max(depth[v] + 1);
        }
    }
    nodes
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.clone(), depth[i]))
        .collect()
}

/// Assigns a position to every element. Equal inputs give equal output;
/// invalid diagrams get a best-effort placement.
pub fn layout(diagram: &Diagram, anchor: Point, config: &LayoutConfig) -> Diagram {
    let depths = stem_depths(diagram);
    let by_id: HashMap<&ElementId, &Element> = diagram.elements().iter().map(|e| (&e.id, e)).collect();

    // causal predecessors, for row ordering
    let mut preds: HashMap<&ElementId, Vec<&ElementId>> = HashMap::new();
    for c in diagram.connections() {
        if c.kind != ConnectionKind::Causal {
            continue;
        }
        if let Some(t) = c.target_element() {
            if depths.contains_key(t) && depths.contains_key(&c.source) && depths[&c.source] < depths[t] {
                preds.entry(t).or_default().push(&c.source);
            }
        }
    }

    let max_depth = depths.values().copied().max();
    let mut row_of: HashMap<&ElementId, usize> = HashMap::new();
    if let Some(max_depth) = max_depth {
        for col in 0..=max_depth {
            let mut members: Vec<(&Element, Option<f64>)> = depths
                .iter()
                .filter(|(_, d)| **d == col)
                .map(|(id, _)| {
                    let e = by_id[id];
                    let rows: Vec<f64> = preds
                        .get(&e.id)
                        .into_iter()
                        .flatten()
                        .filter_map(|p| row_of.get(p))
                        .map(|r| *r as f64)
                        .collect();
                    let centre = (!rows.is_empty()).then(|| rows.iter().sum::<f64>() / rows.len() as f64);
                    (e, centre)
                })
                .collect();
            members.sort_by(|(a, ca), (b, cb)| {
                let ka = ca.unwrap_or(f64::INFINITY);
                let kb = cb.unwrap_or(f64::INFINITY);
                ka.total_cmp(&kb).then_with(|| kind_id_order(a, b))
            });
            let mut next_free = 0usize;
            for (e, centre) in members {
                let wanted = centre.map_or(0, |c| (c + 0.5).floor() as usize);
                let row = wanted.max(next_free);
                row_of.insert(&e.id, row);
                next_free = row + 1;
            }
        }
    }

    // annotation attachments: (element, row, desired x, above?)
    let column_x = |id: &ElementId| anchor.x + depths[id] as f64 * config.column_gap;
    let mut attachments: Vec<(&Element, usize, f64, bool)> = Vec::new();
    let mut overflow: Vec<&Element> = Vec::new();
    for e in diagram.elements() {
        if depths.contains_key(&e.id) {
            continue;
        }
        let link = diagram
            .connections()
            .iter()
            .find(|c| c.kind == ConnectionKind::Annotates && c.source == e.id);
        let spot = link.and_then(|c| match &c.target {
            Target::Element(t) => row_of.get(t).map(|r| (*r, column_x(t))),
            Target::Connection(t) => {
                let annotated = diagram.connection(t)?;
                let to = annotated.target_element()?;
                let (rs, rt) = (row_of.get(&annotated.source)?, row_of.get(to)?);
                Some(((*rs).min(*rt), (column_x(&annotated.source) + column_x(to)) / 2.0))
            }
        });
        match spot {
            Some((row, x)) => attachments.push((e, row, x, e.kind != ElementKind::Precondition)),
            None => overflow.push(e),
        }
    }

    let rows = row_of.values().copied().max().map_or(0, |r| r + 1);
    let mut above = vec![false; rows];
    let mut below = vec![false; rows];
    for (_, row, _, up) in &attachments {
        if *up {
            above[*row] = true;
        } else {
            below[*row] = true;
        }
    }
    let mut row_y = Vec::with_capacity(rows);
    for r in 0..rows {
        let y = if r == 0 {
            anchor.y
        } else {
            row_y[r - 1]
                + config.row_gap
                + if below[r - 1] { config.annotation_offset } else { 0.0 }
                + if above[r] { config.annotation_offset } else { 0.0 }
        };
        row_y.push(y);
    }

    let mut positions: HashMap<ElementId, Point> = HashMap::new();
    for (id, depth) in &depths {
        let x = anchor.x + *depth as f64 * config.column_gap;
        positions.insert(id.clone(), Point::new(x, row_y[row_of[id]]));
    }

    // lanes keyed by (row, above?)
    let mut lanes: BTreeMap<(usize, bool), Vec<(&Element, f64)>> = BTreeMap::new();
    for (e, row, x, up) in attachments {
        lanes.entry((row, up)).or_default().push((e, x));
    }
    for ((row, up), mut members) in lanes {
        members.sort_by(|(a, xa), (b, xb)| xa.total_cmp(xb).then_with(|| kind_id_order(a, b)));
        let y = if up {
            row_y[row] - config.annotation_offset
        } else {
            row_y[row] + config.annotation_offset
        };
        let mut last: Option<f64> = None;
        for (e, wanted) in members {
            let x = match last {
                Some(prev) => wanted.max(prev + LANE_SPACING),
                None => wanted,
            };
            last = Some(x);
            positions.insert(e.id.clone(), Point::new(x, y));
        }
    }

    overflow.sort_by(|a, b| kind_id_order(a, b));
    let overflow_y = match row_y.last() {
        None => anchor.y,
        Some(y) => {
            y + config.row_gap
                + if below.last().copied().unwrap_or(false) {
                    config.annotation_offset
                } else {
                    0.0
                }
        }
    };
    let spacing = config.column_gap.max(LANE_SPACING);
    for (i, e) in overflow.iter().enumerate() {
        positions.insert(e.id.clone(), Point::new(anchor.x + i as f64 * spacing, overflow_y));
    }

    diagram.clone().with_positions(&positions)
}
