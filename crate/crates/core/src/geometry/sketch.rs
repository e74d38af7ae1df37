//! Planar profiles: element polygonization, loop chaining and the even-odd
//! membership test used by extruded leaves.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::Arc;

use super::error::KernelError;
use super::frame::CoordinateSystem;
use super::KernelConfig;

pub type Point2 = [f64; 2];

/// One drawing primitive in sketch-local coordinates. Angles are degrees,
/// arcs sweep counter-clockwise from `start_angle` to `end_angle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SketchElement {
    Line {
        start: Point2,
        end: Point2,
    },
    Arc {
        center: Point2,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
    Circle {
        center: Point2,
        radius: f64,
    },
    /// Accepted on the wire so it can be rejected with a precise error.
    Spline {
        #[serde(default)]
        points: Vec<Point2>,
    },
}

impl SketchElement {
    pub fn kind(&self) -> &'static str {
        match self {
            SketchElement::Line { .. } => "line",
            SketchElement::Arc { .. } => "arc",
            SketchElement::Circle { .. } => "circle",
            SketchElement::Spline { .. } => "spline",
        }
    }

    fn scalars(&self) -> Vec<f64> {
        match self {
            SketchElement::Line { start, end } => vec![start[0], start[1], end[0], end[1]],
            SketchElement::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => vec![center[0], center[1], *radius, *start_angle, *end_angle],
            SketchElement::Circle { center, radius } => vec![center[0], center[1], *radius],
            SketchElement::Spline { points } => points.iter().flatten().copied().collect(),
        }
    }

    fn validate(&self, index: usize, tol: f64) -> Result<(), KernelError> {
        if self.scalars().iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFiniteInput(format!("sketch element {index}")));
        }
        match self {
            SketchElement::Spline { .. } => Err(KernelError::UnsupportedElement(format!(
                "element {index} is a spline; use lines, arcs and circles"
            ))),
            SketchElement::Line { start, end } => {
                if dist(*start, *end) <= tol {
                    Err(KernelError::InvalidElement(format!(
                        "line {index} has zero length"
                    )))
                } else {
                    Ok(())
                }
            }
            SketchElement::Circle { radius, .. } => check_radius(index, *radius),
            SketchElement::Arc {
                radius,
                start_angle,
                end_angle,
                ..
            } => {
                check_radius(index, *radius)?;
                let sweep = arc_sweep(*start_angle, *end_angle);
                if sweep <= 0.0 {
                    Err(KernelError::InvalidElement(format!(
                        "arc {index} sweep must lie strictly between 0 and 360 degrees"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn check_radius(index: usize, radius: f64) -> Result<(), KernelError> {
    if radius > 0.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidElement(format!(
            "element {index} radius must be positive, got {radius}"
        )))
    }
}

/// Counter-clockwise sweep in degrees, in `[0, 360)`.
fn arc_sweep(start: f64, end: f64) -> f64 {
    (end - start).rem_euclid(360.0)
}

fn dist(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Vertices of a regular polygon inscribed in the circle, counter-clockwise.
pub fn polygonize_circle(center: Point2, radius: f64, segments: usize) -> Vec<Point2> {
    (0..segments)
        .map(|i| {
            let t = TAU * i as f64 / segments as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

fn polygonize_arc(
    center: Point2,
    radius: f64,
    start_angle: f64,
    end_angle: f64,
    full_turn_segments: usize,
) -> Vec<Point2> {
    let sweep = arc_sweep(start_angle, end_angle);
    let n = ((full_turn_segments as f64 * sweep / 360.0).ceil() as usize).max(2);
    (0..=n)
        .map(|i| {
            let t = (start_angle + sweep * i as f64 / n as f64).to_radians();
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

/// A closed polygon; the edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub vertices: Vec<Point2>,
}

impl Loop {
    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let a = v[i];
                let b = v[(i + 1) % n];
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        0.5 * twice
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// A validated profile: its source elements, the frame it lives in and the
/// closed loops derived from them.
#[derive(Debug, Clone)]
pub struct Sketch {
    name: String,
    frame: Arc<CoordinateSystem>,
    elements: Vec<SketchElement>,
    loops: Vec<Loop>,
    bounds: [Point2; 2],
}

impl Sketch {
    pub fn new(
        name: impl Into<String>,
        frame: Arc<CoordinateSystem>,
        elements: Vec<SketchElement>,
        config: &KernelConfig,
    ) -> Result<Self, KernelError> {
        let loops = build_loops(&elements, config)?;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in loops.iter().flat_map(|l| l.vertices.iter()) {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Ok(Self {
            name: name.into(),
            frame,
            elements,
            loops,
            bounds: [lo, hi],
        })
    }

    /// Copy of `other` placed in a different frame.
    pub fn with_frame(other: &Sketch, frame: Arc<CoordinateSystem>) -> Self {
        Self { frame, ..other.clone() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn face_name(&self) -> String {
        format!("{}_Face", self.name)
    }

    pub fn frame(&self) -> &Arc<CoordinateSystem> {
        &self.frame
    }

    pub fn elements(&self) -> &[SketchElement] {
        &self.elements
    }

    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    pub fn bounds(&self) -> [Point2; 2] {
        self.bounds
    }

    /// Filled area under the even-odd rule: loops nested at odd depth are holes.
    pub fn area(&self) -> f64 {
        self.loops
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let probe = l.vertices[0];
                let depth = self
                    .loops
                    .iter()
                    .enumerate()
                    .filter(|(j, other)| *j != i && crossings_odd(other, probe))
                    .count();
                if depth % 2 == 0 {
                    l.area()
                } else {
                    -l.area()
                }
            })
            .sum()
    }

    /// Strict even-odd interior test; points within `eps` of an edge are outside.
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        let [lo, hi] = self.bounds;
        if p[0] <= lo[0] + eps || p[0] >= hi[0] - eps || p[1] <= lo[1] + eps || p[1] >= hi[1] - eps {
            return false;
        }
        let mut inside = false;
        for l in &self.loops {
            for (a, b) in l.edges() {
                if near_segment(p, a, b, eps) {
                    return false;
                }
                if (a[1] > p[1]) != (b[1] > p[1]) {
                    let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    if p[0] < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }
}

fn crossings_odd(l: &Loop, p: Point2) -> bool {
    let mut inside = false;
    for (a, b) in l.edges() {
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn near_segment(p: Point2, a: Point2, b: Point2, eps: f64) -> bool {
    if p[0] < a[0].min(b[0]) - eps
        || p[0] > a[0].max(b[0]) + eps
        || p[1] < a[1].min(b[1]) - eps
        || p[1] > a[1].max(b[1]) + eps
    {
        return false;
    }
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    dist(p, q) <= eps
}

/// Chains elements into closed loops. Circles always close on their own;
/// lines and arcs are joined end-to-start (either orientation) until every
/// chain returns to its first point within `loop_close_tol`.
pub fn build_loops(
    elements: &[SketchElement],
    config: &KernelConfig,
) -> Result<Vec<Loop>, KernelError> {
    if elements.is_empty() {
        return Err(KernelError::EmptySketch);
    }
    let tol = config.loop_close_tol;
    for (i, e) in elements.iter().enumerate() {
        e.validate(i, tol)?;
    }

    let mut loops = Vec::new();
    let mut open: Vec<Vec<Point2>> = Vec::new();
    for e in elements {
        match *e {
            SketchElement::Circle { center, radius } => loops.push(Loop {
                vertices: polygonize_circle(center, radius, config.arc_segments),
            }),
            SketchElement::Line { start, end } => open.push(vec![start, end]),
            SketchElement::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => open.push(polygonize_arc(
                center,
                radius,
                start_angle,
                end_angle,
                config.arc_segments,
            )),
            SketchElement::Spline { .. } => unreachable!("rejected by validation"),
        }
    }

    let mut used = vec![false; open.len()];
    while let Some(first) = used.iter().position(|u| !u) {
        used[first] = true;
        let mut chain = open[first].clone();
        let start = chain[0];
        loop {
            let tail = *chain.last().expect("non-empty chain");
            if chain.len() > 2 && dist(tail, start) <= tol {
                chain.pop();
                break;
            }
            let mut best: Option<(usize, bool, f64)> = None;
            for (j, poly) in open.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let d_fwd = dist(tail, poly[0]);
                let d_rev = dist(tail, *poly.last().expect("non-empty polyline"));
                let (rev, d) = if d_rev < d_fwd { (true, d_rev) } else { (false, d_fwd) };
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((j, rev, d));
                }
            }
            match best {
                Some((j, rev, d)) if d <= tol => {
                    used[j] = true;
                    let mut poly = open[j].clone();
                    if rev {
                        poly.reverse();
                    }
                    chain.extend(poly.into_iter().skip(1));
                }
                _ => {
                    let closing = dist(tail, start);
                    let gap = best.map_or(closing, |(_, _, d)| d.min(closing));
                    return Err(KernelError::OpenLoop { gap });
                }
            }
        }
        loops.push(Loop { vertices: chain });
    }

    check_simple(&loops, tol)?;
    Ok(loops)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Rejects degenerate loops, self-intersections and crossings between loops.
fn check_simple(loops: &[Loop], tol: f64) -> Result<(), KernelError> {
    for (li, l) in loops.iter().enumerate() {
        if l.vertices.len() < 3 || l.area() <= tol * tol {
            return Err(KernelError::SelfIntersection { loop_index: li });
        }
    }
    let edges: Vec<(usize, usize, Point2, Point2)> = loops
        .iter()
        .enumerate()
        .flat_map(|(li, l)| l.edges().enumerate().map(move |(ei, (a, b))| (li, ei, a, b)))
        .collect();
    for (x, &(la, ea, a, b)) in edges.iter().enumerate() {
        for &(lb, eb, c, d) in &edges[x + 1..] {
            if la == lb {
                let n = loops[la].vertices.len();
                if eb == ea + 1 || (ea == 0 && eb == n - 1) {
                    // Adjacent edges share one vertex; only a fold-back overlaps.
                    let shared = if eb == ea + 1 { b } else { a };
                    let (p, q) = if eb == ea + 1 { (a, d) } else { (b, c) };
                    if orient(p, shared, q) == 0.0
                        && (p[0] - shared[0]) * (q[0] - shared[0]) + (p[1] - shared[1]) * (q[1] - shared[1]) > 0.0
                    {
                        return Err(KernelError::SelfIntersection { loop_index: la });
                    }
                    continue;
                }
            }
            if segments_intersect(a, b, c, d) {
                return Err(KernelError::SelfIntersection { loop_index: la.max(lb) });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> KernelConfig {
        KernelConfig::default()
    }

    fn frame() -> Arc<CoordinateSystem> {
        Arc::new(CoordinateSystem::identity("CS1"))
    }

    fn square(x0: f64, y0: f64, s: f64) -> Vec<SketchElement> {
        let p = [[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]];
        (0..4)
            .map(|i| SketchElement::Line { start: p[i], end: p[(i + 1) % 4] })
            .collect()
    }

    #[test]
    fn unit_square_is_one_loop_of_area_one() {
        let s = Sketch::new("S1", frame(), square(0.0, 0.0, 1.0), &cfg()).unwrap();
        assert_eq!(s.loops().len(), 1);
        assert!((s.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lines_chain_in_any_order_and_orientation() {
        let mut els = square(0.0, 0.0, 2.0);
        els.swap(1, 3);
        if let SketchElement::Line { start, end } = &mut els[2] {
            std::mem::swap(start, end);
        }
        let s = Sketch::new("S", frame(), els, &cfg()).unwrap();
        assert!((s.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn circle_area_close_to_analytic() {
        let s = Sketch::new(
            "S2",
            frame(),
            vec![SketchElement::Circle { center: [0.0, 0.0], radius: 5.0 }],
            &cfg(),
        )
        .unwrap();
        // Inscribed 64-gon area = 32 r^2 sin(2pi/64) ~ 0.9984 * 25pi.
        let exact = 25.0 * std::f64::consts::PI;
        assert!((s.area() - exact).abs() / exact < 0.005);
    }

    #[test]
    fn open_profile_reports_gap() {
        let els = vec![
            SketchElement::Line { start: [0.0, 0.0], end: [1.0, 0.0] },
            SketchElement::Line { start: [1.0, 0.0], end: [1.0, 1.0] },
            SketchElement::Line { start: [1.0, 1.0], end: [0.0, 0.5] },
        ];
        match build_loops(&els, &cfg()) {
            Err(KernelError::OpenLoop { gap }) => assert!((gap - 0.5).abs() < 1e-12),
            other => panic!("expected open loop, got {other:?}"),
        }
    }

    #[test]
    fn lone_line_cannot_close() {
        let els = vec![SketchElement::Line { start: [0.0, 0.0], end: [1.0, 0.0] }];
        assert!(matches!(build_loops(&els, &cfg()), Err(KernelError::OpenLoop { .. })));
    }

    #[test]
    fn bow_tie_is_self_intersecting() {
        let p = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let els: Vec<_> = (0..4)
            .map(|i| SketchElement::Line { start: p[i], end: p[(i + 1) % 4] })
            .collect();
        assert!(matches!(
            build_loops(&els, &cfg()),
            Err(KernelError::SelfIntersection { .. })
        ));
    }

    #[test]
    fn overlapping_circles_are_rejected() {
        let els = vec![
            SketchElement::Circle { center: [0.0, 0.0], radius: 1.0 },
            SketchElement::Circle { center: [1.0, 0.0], radius: 1.0 },
        ];
        assert!(matches!(
            build_loops(&els, &cfg()),
            Err(KernelError::SelfIntersection { .. })
        ));
    }

    #[test]
    fn washer_uses_even_odd_fill() {
        let mut els = square(-2.0, -2.0, 4.0);
        els.push(SketchElement::Circle { center: [0.0, 0.0], radius: 1.0 });
        let s = Sketch::new("W", frame(), els, &cfg()).unwrap();
        let hole = Loop { vertices: polygonize_circle([0.0, 0.0], 1.0, 64) }.area();
        assert!((s.area() - (16.0 - hole)).abs() < 1e-12);
        assert!(!s.contains([0.0, 0.0], 1e-9));
        assert!(s.contains([1.5, 1.5], 1e-9));
    }

    #[test]
    fn arc_and_lines_make_a_slot_end() {
        // Half-disc: diameter line plus a 180 degree arc.
        let els = vec![
            SketchElement::Line { start: [-1.0, 0.0], end: [1.0, 0.0] },
            SketchElement::Arc { center: [0.0, 0.0], radius: 1.0, start_angle: 0.0, end_angle: 180.0 },
        ];
        let s = Sketch::new("A", frame(), els, &cfg()).unwrap();
        let half = 0.5 * std::f64::consts::PI;
        assert!((s.area() - half).abs() / half < 0.005);
    }

    #[test]
    fn element_validation() {
        let bad_radius = vec![SketchElement::Circle { center: [0.0, 0.0], radius: -1.0 }];
        assert!(matches!(build_loops(&bad_radius, &cfg()), Err(KernelError::InvalidElement(_))));
        let spline = vec![SketchElement::Spline { points: vec![[0.0, 0.0]] }];
        assert!(matches!(build_loops(&spline, &cfg()), Err(KernelError::UnsupportedElement(_))));
        let full_arc = vec![SketchElement::Arc { center: [0.0, 0.0], radius: 1.0, start_angle: 0.0, end_angle: 360.0 }];
        assert!(matches!(build_loops(&full_arc, &cfg()), Err(KernelError::InvalidElement(_))));
        let nan = vec![SketchElement::Circle { center: [f64::NAN, 0.0], radius: 1.0 }];
        assert!(matches!(build_loops(&nan, &cfg()), Err(KernelError::NonFiniteInput(_))));
        assert!(matches!(build_loops(&[], &cfg()), Err(KernelError::EmptySketch)));
    }

    #[test]
    fn circle_area_error_shrinks_as_segments_double() {
        let exact = std::f64::consts::PI;
        let mut last = f64::INFINITY;
        for k in 2..12 {
            let n = 1usize << k;
            let err = (Loop { vertices: polygonize_circle([0.3, -0.2], 1.0, n) }.area() - exact).abs();
            assert!(err <= last, "segments {n}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn element_json_shape() {
        let e: SketchElement =
            serde_json::from_str(r#"{"type":"circle","center":[1,1],"radius":2}"#).unwrap();
        assert_eq!(e, SketchElement::Circle { center: [1.0, 1.0], radius: 2.0 });
    }
}
