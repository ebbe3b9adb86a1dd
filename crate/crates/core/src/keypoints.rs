//! Annotated keypoints with per-point visibility.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub visible: bool,
}

impl Keypoint {
    pub const fn visible(x: f64, y: f64) -> Self {
        Self { x, y, visible: true }
    }

    /// Unannotated point. Coordinates are zeroed so records compare cleanly.
    pub const fn invisible() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            visible: false,
        }
    }

    pub fn point(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// One hand's keypoints, indexed by topology keypoint id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeypointSet(pub Vec<Keypoint>);

impl KeypointSet {
    pub fn new(points: Vec<Keypoint>) -> Self {
        Self(points)
    }

    pub fn all_invisible(count: usize) -> Self {
        Self(vec![Keypoint::invisible(); count])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Keypoint> {
        self.0.get(id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Keypoint> {
        self.0.iter()
    }

    pub fn visible_count(&self) -> usize {
        self.0.iter().filter(|k| k.visible).count()
    }

    /// Applies `f` to every visible point; invisible points pass through.
    pub fn map_visible(&self, mut f: impl FnMut(f64, f64) -> (f64, f64)) -> Self {
        Self(
            self.0
                .iter()
                .map(|k| {
                    if k.visible {
                        let (x, y) = f(k.x, k.y);
                        Keypoint::visible(x, y)
                    } else {
                        *k
                    }
                })
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for KeypointSet {
    type Output = Keypoint;

    fn index(&self, id: usize) -> &Keypoint {
        &self.0[id]
    }
}

impl FromIterator<Keypoint> for KeypointSet {
    fn from_iter<I: IntoIterator<Item = Keypoint>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}
