//! Time-varying abnormal skin regions.
//!
//! Each scenario is a finite union of closed convex shapes whose size is a
//! piecewise-linear function of the round index. Geometry is evaluated exactly;
//! sensors only ever sample it at their own location.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::types::{Location, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Gunshot,
    Scratch,
    Oval,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Gunshot,
        ScenarioKind::Scratch,
        ScenarioKind::Oval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Gunshot => "gunshot",
            ScenarioKind::Scratch => "scratch",
            ScenarioKind::Oval => "oval",
        }
    }
}

/// Disk that grows to `peak_factor * radius` by `growth_rounds`, then shrinks
/// linearly to nothing at `heal_rounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gunshot {
    pub center: Location,
    pub radius: f64,
    pub peak_factor: f64,
    pub growth_rounds: u32,
    pub heal_rounds: u32,
}

/// Three parallel capsules (segments thickened by a radius), each shrinking
/// linearly until its own heal round. The middle one heals last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scratch {
    pub center: Location,
    pub length: f64,
    pub radius: f64,
    /// Perpendicular spacing between neighbouring capsule axes.
    pub spacing: f64,
    /// Orientation of the capsule axes, degrees from the x axis.
    pub angle_deg: f64,
    /// Heal rounds for the (first, middle, last) capsule.
    pub heal_rounds: [u32; 3],
}

/// Axis-aligned ellipse shrinking uniformly to nothing at `heal_rounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oval {
    pub center: Location,
    pub semi_x: f64,
    pub semi_y: f64,
    pub heal_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WoundField {
    Gunshot(Gunshot),
    Scratch(Scratch),
    Oval(Oval),
}

/// A closed convex piece of the region at a given round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        center: Location,
        radius: f64,
    },
    Ellipse {
        center: Location,
        semi_x: f64,
        semi_y: f64,
    },
    Capsule {
        a: Location,
        b: Location,
        radius: f64,
    },
}

impl Shape {
    pub fn contains(&self, p: &Location) -> bool {
        match *self {
            Shape::Disk { center, radius } => radius > 0.0 && center.distance(p) <= radius,
            Shape::Ellipse {
                center,
                semi_x,
                semi_y,
            } => {
                if semi_x <= 0.0 || semi_y <= 0.0 {
                    return false;
                }
                let dx = (p.x - center.x) / semi_x;
                let dy = (p.y - center.y) / semi_y;
                dx * dx + dy * dy <= 1.0
            }
            Shape::Capsule { a, b, radius } => {
                radius > 0.0 && segment_distance(p, &a, &b) <= radius
            }
        }
    }
}

fn segment_distance(p: &Location, a: &Location, b: &Location) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let s = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0);
    p.distance(&Location::new(a.x + s * vx, a.y + s * vy))
}

/// `max(0, 1 - t/h)`
fn linear_decay(t: u32, h: u32) -> f64 {
    if h == 0 {
        return 0.0;
    }
    (1.0 - f64::from(t) / f64::from(h)).max(0.0)
}

impl Gunshot {
    pub fn radius_at(&self, t: u32) -> f64 {
        let peak = self.radius * self.peak_factor;
        if t < self.growth_rounds {
            let g = (self.peak_factor - 1.0) / f64::from(self.growth_rounds);
            self.radius * (1.0 + g * f64::from(t))
        } else if t < self.heal_rounds {
            let span = f64::from(self.heal_rounds - self.growth_rounds);
            peak * f64::from(self.heal_rounds - t) / span
        } else {
            0.0
        }
    }
}

impl Scratch {
    /// Axis endpoints of the three capsules.
    pub fn axes(&self) -> [(Location, Location); 3] {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (ux, uy) = (c, s);
        let (nx, ny) = (-s, c);
        let half = self.length / 2.0;
        let mut out = [(Location::default(), Location::default()); 3];
        for (i, slot) in out.iter_mut().enumerate() {
            let off = (i as f64 - 1.0) * self.spacing;
            let mid = Location::new(self.center.x + nx * off, self.center.y + ny * off);
            *slot = (
                Location::new(mid.x - ux * half, mid.y - uy * half),
                Location::new(mid.x + ux * half, mid.y + uy * half),
            );
        }
        out
    }

    pub fn radius_at(&self, capsule: usize, t: u32) -> f64 {
        self.radius * linear_decay(t, self.heal_rounds[capsule])
    }
}

impl WoundField {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            WoundField::Gunshot(_) => ScenarioKind::Gunshot,
            WoundField::Scratch(_) => ScenarioKind::Scratch,
            WoundField::Oval(_) => ScenarioKind::Oval,
        }
    }

    /// Shapes whose union is the abnormal region at round `t`. Empty shapes are omitted.
    pub fn shapes_at(&self, t: u32) -> Vec<Shape> {
        match self {
            WoundField::Gunshot(g) => {
                let radius = g.radius_at(t);
                if radius > 0.0 {
                    vec![Shape::Disk {
                        center: g.center,
                        radius,
                    }]
                } else {
                    Vec::new()
                }
            }
            WoundField::Scratch(s) => s
                .axes()
                .iter()
                .enumerate()
                .filter_map(|(i, &(a, b))| {
                    let radius = s.radius_at(i, t);
                    (radius > 0.0).then_some(Shape::Capsule { a, b, radius })
                })
                .collect(),
            WoundField::Oval(o) => {
                let k = linear_decay(t, o.heal_rounds);
                if k > 0.0 {
                    vec![Shape::Ellipse {
                        center: o.center,
                        semi_x: o.semi_x * k,
                        semi_y: o.semi_y * k,
                    }]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Largest extent the region ever reaches (drawn as the healed area).
    pub fn peak_shapes(&self) -> Vec<Shape> {
        match self {
            WoundField::Gunshot(g) => self.shapes_at(g.growth_rounds),
            _ => self.shapes_at(0),
        }
    }

    /// First round from which the region is empty forever.
    pub fn healed_round(&self) -> u32 {
        match self {
            WoundField::Gunshot(g) => g.heal_rounds,
            WoundField::Scratch(s) => s.heal_rounds.iter().copied().max().unwrap_or(0),
            WoundField::Oval(o) => o.heal_rounds,
        }
    }

    /// Round at which the region is largest.
    pub fn peak_round(&self) -> u32 {
        match self {
            WoundField::Gunshot(g) => g.growth_rounds,
            _ => 0,
        }
    }

    pub fn is_abnormal(&self, loc: &Location, t: u32) -> bool {
        self.shapes_at(t).iter().any(|s| s.contains(loc))
    }

    /// Ids of the sensors lying on abnormal skin at round `t`.
    pub fn active_sensor_set(&self, sensors: &[(NodeId, Location)], t: u32) -> BTreeSet<NodeId> {
        let shapes = self.shapes_at(t);
        sensors
            .iter()
            .filter(|(_, loc)| shapes.iter().any(|s| s.contains(loc)))
            .map(|(id, _)| *id)
            .collect()
    }
}
