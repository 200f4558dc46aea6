//! 4-connected component labelling of class maps.

use std::collections::VecDeque;

use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    /// Component index per pixel, numbered in raster order of first pixel.
    pub ids: Grid<u32>,
    pub sizes: Vec<usize>,
    /// Class of each component.
    pub classes: Vec<u32>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

#[inline]
pub(crate) fn neighbours4(
    x: usize,
    y: usize,
    w: usize,
    h: usize,
) -> impl Iterator<Item = (usize, usize)> {
    let left = (x > 0).then(|| (x - 1, y));
    let right = (x + 1 < w).then(|| (x + 1, y));
    let up = (y > 0).then(|| (x, y - 1));
    let down = (y + 1 < h).then(|| (x, y + 1));
    [left, right, up, down].into_iter().flatten()
}

pub fn label_components(labels: &Grid<u32>) -> Components {
    let (w, h) = labels.dims();
    let src = labels.as_slice();
    let mut ids = vec![u32::MAX; w * h];
    let mut sizes = Vec::new();
    let mut classes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if ids[start] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let class = src[start];
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(p) = queue.pop_front() {
            size += 1;
            for (nx, ny) in neighbours4(p % w, p / w, w, h) {
                let q = ny * w + nx;
                if ids[q] == u32::MAX && src[q] == class {
                    ids[q] = id;
                    queue.push_back(q);
                }
            }
        }
        sizes.push(size);
        classes.push(class);
    }
    Components {
        ids: Grid::from_vec(w, h, ids).expect("same dimensions"),
        sizes,
        classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_checkerboard_and_rings() {
        let g = Grid::from_fn(3, 3, |x, y| ((x + y) % 2) as u32);
        let c = label_components(&g);
        assert_eq!(c.count(), 9);

        let ring = Grid::from_fn(5, 5, |x, y| u32::from(x == 0 || y == 0 || x == 4 || y == 4));
        let c = label_components(&ring);
        assert_eq!(c.count(), 2);
        assert_eq!(c.sizes, vec![16, 9]);
        assert_eq!(c.classes, vec![1, 0]);
    }

    #[test]
    fn diagonal_touch_is_not_connected() {
        let g = Grid::from_vec(2, 2, vec![1, 0, 0, 1]).unwrap();
        assert_eq!(label_components(&g).count(), 4);
    }
}
