//! Dense row-major images (M×N) and volumes (M×N×K).
//!
//! Volumes store the scale axis `k` fastest, so the per-pixel vector
//! `a[m, n, ..]` is a contiguous slice and a scale slice `a[.., .., k]` is a
//! strided gather of M·N entries.

use crate::error::{Error, Result};

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

// Element-wise arithmetic shared by `Image` and `Volume`.
macro_rules! elementwise_ops {
    ($ty:ident, $ctx:literal) => {
        impl $ty {
            fn check_same_shape(&self, other: &Self) -> Result<()> {
                if self.shape() != other.shape() {
                    return Err(Error::shape(
                        $ctx,
                        format!("{:?}", self.shape()),
                        format!("{:?}", other.shape()),
                    ));
                }
                Ok(())
            }

            /// Number of stored entries.
            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.data
            }

            pub fn all_finite(&self) -> bool {
                self.data.iter().all(|v| v.is_finite())
            }

            /// Sum of element-wise products.
            pub fn dot(&self, other: &Self) -> Result<f64> {
                self.check_same_shape(other)?;
                Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
            }

            pub fn frobenius_norm(&self) -> f64 {
                self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
            }

            pub fn max_abs(&self) -> f64 {
                self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }

            /// Element-wise (Hadamard) product `self ⊙ other`.
            pub fn hadamard(&self, other: &Self) -> Result<Self> {
                self.check_same_shape(other)?;
                let mut out = self.clone();
                out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a *= b);
                Ok(out)
            }

            /// Element-wise square.
            pub fn square(&self) -> Self {
                let mut out = self.clone();
                out.data.iter_mut().for_each(|v| *v *= *v);
                out
            }

            /// `self − other`.
            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.check_same_shape(other)?;
                let mut out = self.clone();
                out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a -= b);
                Ok(out)
            }

            /// In-place `self += alpha · x`.
            pub fn axpy(&mut self, alpha: f64, x: &Self) -> Result<()> {
                self.check_same_shape(x)?;
                self.data
                    .iter_mut()
                    .zip(&x.data)
                    .for_each(|(a, b)| *a += alpha * b);
                Ok(())
            }

            pub fn scale(&mut self, alpha: f64) {
                self.data.iter_mut().for_each(|v| *v *= alpha);
            }

            pub fn max_value(&self) -> f64 {
                self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    };
}

/// An M×N matrix of finite reals, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

elementwise_ops!(Image, "image");

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(
                "shape",
                format!("image must be at least 1x1, got {rows}x{cols}"),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::shape("image data", rows * cols, data.len()));
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "image must be at least 1x1");
        assert!(value.is_finite());
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds an image from `f(row, col)`. Panics if `f` yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                data.push(f(m, n));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid image")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.data[m * self.cols + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, value: f64) {
        self.data[m * self.cols + n] = value;
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.cols..(m + 1) * self.cols]
    }
}

/// An M×N×K tensor of finite reals; `k` varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    rows: usize,
    cols: usize,
    depth: usize,
    data: Vec<f64>,
}

elementwise_ops!(Volume, "volume");

impl Volume {
    pub fn new(rows: usize, cols: usize, depth: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || depth == 0 {
            return Err(Error::invalid(
                "shape",
                format!("volume must be at least 1x1x1, got {rows}x{cols}x{depth}"),
            ));
        }
        if data.len() != rows * cols * depth {
            return Err(Error::shape("volume data", rows * cols * depth, data.len()));
        }
        check_finite(&data)?;
        Ok(Self {
            rows,
            cols,
            depth,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, depth: usize) -> Self {
        assert!(rows > 0 && cols > 0 && depth > 0, "volume must be at least 1x1x1");
        Self {
            rows,
            cols,
            depth,
            data: vec![0.0; rows * cols * depth],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, depth: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols * depth);
        for m in 0..rows {
            for n in 0..cols {
                for k in 0..depth {
                    data.push(f(m, n, k));
                }
            }
        }
        Self::new(rows, cols, depth, data).expect("from_fn produced an invalid volume")
    }

    /// Stacks equally shaped images along the scale axis.
    pub fn from_slices(slices: &[Image]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::invalid("slices", "at least one slice is required"))?;
        let (rows, cols) = first.shape();
        let mut out = Self::zeros(rows, cols, slices.len());
        for (k, s) in slices.iter().enumerate() {
            out.set_slice(k, s)?;
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.depth)
    }

    #[inline]
    fn offset(&self, m: usize, n: usize, k: usize) -> usize {
        (m * self.cols + n) * self.depth + k
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, k: usize) -> f64 {
        self.data[self.offset(m, n, k)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, k: usize, value: f64) {
        let i = self.offset(m, n, k);
        self.data[i] = value;
    }

    /// The scale slice `a_k` as an M×N image.
    pub fn slice(&self, k: usize) -> Image {
        assert!(k < self.depth, "slice {k} out of range for depth {}", self.depth);
        let data = self.data.iter().skip(k).step_by(self.depth).copied().collect();
        Image {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn set_slice(&mut self, k: usize, img: &Image) -> Result<()> {
        if img.shape() != (self.rows, self.cols) {
            return Err(Error::shape(
                "volume slice",
                format!("{:?}", (self.rows, self.cols)),
                format!("{:?}", img.shape()),
            ));
        }
        if k >= self.depth {
            return Err(Error::invalid("k", format!("{k} >= depth {}", self.depth)));
        }
        let depth = self.depth;
        for (dst, src) in self.data.iter_mut().skip(k).step_by(depth).zip(&img.data) {
            *dst = *src;
        }
        Ok(())
    }

    /// The length-K vector at pixel `(m, n)`.
    #[inline]
    pub fn pixel(&self, m: usize, n: usize) -> &[f64] {
        let start = (m * self.cols + n) * self.depth;
        &self.data[start..start + self.depth]
    }

    #[inline]
    pub fn pixel_mut(&mut self, m: usize, n: usize) -> &mut [f64] {
        let start = (m * self.cols + n) * self.depth;
        &mut self.data[start..start + self.depth]
    }

    /// Iterates over the per-pixel vectors in row-major pixel order.
    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.depth)
    }

    pub fn pixels_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.depth)
    }

    pub fn is_nonneg(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    /// In-place positive part.
    pub fn project_nonneg_mut(&mut self) {
        self.data.iter_mut().for_each(|v| *v = v.max(0.0));
    }
}

/// Element-wise positive part `[v]_+`.
pub fn project_nonneg(v: &Volume) -> Volume {
    let mut out = v.clone();
    out.project_nonneg_mut();
    out
}

/// Per-pixel Euclidean norm across the scale axis, `sqrt(Σ_k v[m,n,k]²)`.
pub fn group_norm_image(v: &Volume) -> Image {
    let data = v
        .pixels()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    Image {
        rows: v.rows,
        cols: v.cols,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vol1(values: &[f64]) -> Volume {
        Volume::new(1, values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn positive_part() {
        let v = vol1(&[-1.0, 0.0, 2.0]);
        assert_eq!(project_nonneg(&v).as_slice(), &[0.0, 0.0, 2.0]);

        let pos = vol1(&[0.5, 3.0, 0.0]);
        assert_eq!(project_nonneg(&pos), pos);

        let neg = vol1(&[-0.5, -3.0, -1e-300]);
        assert!(project_nonneg(&neg).as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn group_norm_examples() {
        let v = Volume::new(1, 1, 2, vec![3.0, 4.0]).unwrap();
        assert_eq!(group_norm_image(&v).as_slice(), &[5.0]);

        let z = Volume::zeros(3, 4, 5);
        assert!(group_norm_image(&z).as_slice().iter().all(|&x| x == 0.0));

        let k1 = Volume::new(2, 2, 1, vec![-1.5, 2.0, 0.0, -7.0]).unwrap();
        assert_eq!(group_norm_image(&k1).as_slice(), &[1.5, 2.0, 0.0, 7.0]);
    }

    #[test]
    fn basic_arithmetic() {
        let a = Image::new(1, 2, vec![1.0, 2.0]).unwrap();
        let b = Image::new(1, 2, vec![3.0, 4.0]).unwrap();
        assert_eq!(a.dot(&b).unwrap(), 11.0);
        assert_eq!(a.hadamard(&b).unwrap().as_slice(), &[3.0, 8.0]);
        assert_eq!(Image::zeros(3, 3).frobenius_norm(), 0.0);
        assert_eq!(b.sub(&a).unwrap().as_slice(), &[2.0, 2.0]);
        assert_eq!(b.square().as_slice(), &[9.0, 16.0]);
        let mut c = a.clone();
        c.axpy(2.0, &b).unwrap();
        assert_eq!(c.as_slice(), &[7.0, 10.0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Image::zeros(2, 3);
        let b = Image::zeros(3, 2);
        assert!(matches!(a.dot(&b), Err(Error::ShapeMismatch { .. })));
        assert!(a.hadamard(&b).is_err());
        assert!(a.sub(&b).is_err());
        let v = Volume::zeros(2, 2, 2);
        let w = Volume::zeros(2, 2, 3);
        assert!(v.dot(&w).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(matches!(
            Image::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(Image::new(0, 2, vec![]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Volume::new(1, 1, 2, vec![f64::INFINITY, 0.0]).is_err());
        assert!(Volume::new(1, 1, 0, vec![]).is_err());
    }

    #[test]
    fn slices_and_pixels() {
        let v = Volume::from_fn(3, 4, 2, |m, n, k| (100 * m + 10 * n + k) as f64);
        let s1 = v.slice(1);
        assert_eq!(s1.get(2, 3), 231.0);
        assert_eq!(v.pixel(1, 2), &[120.0, 121.0]);

        let mut w = Volume::zeros(3, 4, 2);
        w.set_slice(0, &v.slice(0)).unwrap();
        w.set_slice(1, &s1).unwrap();
        assert_eq!(w, v);
        assert_eq!(Volume::from_slices(&[v.slice(0), v.slice(1)]).unwrap(), v);
    }

    fn volume_strategy() -> impl Strategy<Value = Volume> {
        (1usize..5, 1usize..5, 1usize..4).prop_flat_map(|(m, n, k)| {
            proptest::collection::vec(-10.0f64..10.0, m * n * k).prop_map(move |d| Volume::new(m, n, k, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_pointwise(v in volume_strategy()) {
            let p = project_nonneg(&v);
            prop_assert_eq!(&project_nonneg(&p), &p);
            for (o, i) in p.as_slice().iter().zip(v.as_slice()) {
                prop_assert!(*o == 0.0 || *o == *i);
            }
        }

        #[test]
        fn group_norm_energy_matches_frobenius(v in volume_strategy()) {
            let g = group_norm_image(&v);
            let lhs: f64 = g.as_slice().iter().map(|x| x * x).sum();
            let rhs = v.frobenius_norm().powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn hadamard_commutes_and_associates(
            a in proptest::collection::vec(-5.0f64..5.0, 6),
            b in proptest::collection::vec(-5.0f64..5.0, 6),
            c in proptest::collection::vec(-5.0f64..5.0, 6),
        ) {
            let a = Image::new(2, 3, a).unwrap();
            let b = Image::new(2, 3, b).unwrap();
            let c = Image::new(2, 3, c).unwrap();
            prop_assert_eq!(a.hadamard(&b).unwrap(), b.hadamard(&a).unwrap());
            let l = a.hadamard(&b).unwrap().hadamard(&c).unwrap();
            let r = a.hadamard(&b.hadamard(&c).unwrap()).unwrap();
            for (x, y) in l.as_slice().iter().zip(r.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
