use crate::error::{Error, Result};

/// Row-major 2D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Grayscale image or single coefficient plane.
pub type Plane = Grid<f64>;

/// Color image with channels in `[0, 1]`.
pub type RgbImage = Grid<[f64; 3]>;

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(width * height, data.len()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn ensure_same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ));
        }
        Ok(())
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

/// Per-pixel class labels. Every label is below `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationMap {
    labels: Grid<u32>,
    classes: u32,
}

impl SegmentationMap {
    pub fn new(labels: Grid<u32>, classes: u32) -> Result<Self> {
        if let Some(&bad) = labels.as_slice().iter().find(|&&l| l >= classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self { labels, classes })
    }

    /// Builds a map whose class count is one past the largest label.
    pub fn from_labels(labels: Grid<u32>) -> Self {
        let classes = labels.as_slice().iter().copied().max().map_or(1, |m| m + 1);
        Self { labels, classes }
    }

    pub fn uniform(width: usize, height: usize, class: u32) -> Self {
        Self {
            labels: Grid::filled(width, height, class),
            classes: class + 1,
        }
    }

    pub fn labels(&self) -> &Grid<u32> {
        &self.labels
    }

    pub fn into_labels(self) -> Grid<u32> {
        self.labels
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn width(&self) -> usize {
        self.labels.width()
    }

    pub fn height(&self) -> usize {
        self.labels.height()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        *self.labels.get(x, y)
    }

    /// Applies a class-to-class mapping, e.g. region index to texture index.
    pub fn remap(&self, mapping: &[u32]) -> Result<Self> {
        let mut out = Vec::with_capacity(self.len());
        for &l in self.labels.as_slice() {
            let m = *mapping
                .get(l as usize)
                .ok_or_else(|| Error::invalid(format!("no mapping for class {l}")))?;
            out.push(m);
        }
        let classes = mapping.iter().copied().max().map_or(1, |m| m + 1);
        Ok(Self {
            labels: Grid::from_vec(self.width(), self.height(), out)?,
            classes,
        })
    }
}
