//! Cell detections from a reconstructed volume: regional maxima of the
//! per-pixel group-norm image, with the map value as pseudo-likelihood.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::tensor::{group_norm_image, Image, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub row: f64,
    pub col: f64,
    pub pseudo_likelihood: f64,
}

/// Descending pseudo-likelihood, then ascending (row, col).
fn detection_order(a: &Detection, b: &Detection) -> Ordering {
    b.pseudo_likelihood
        .total_cmp(&a.pseudo_likelihood)
        .then(a.row.total_cmp(&b.row))
        .then(a.col.total_cmp(&b.col))
}

/// Detections kept sorted by [`detection_order`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionList(Vec<Detection>);

impl DetectionList {
    pub fn new(mut detections: Vec<Detection>) -> Self {
        detections.sort_by(detection_order);
        Self(detections)
    }

    pub fn as_slice(&self) -> &[Detection] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Detection> {
        self.0.iter()
    }

    /// Detections with pseudo-likelihood `>= threshold`. Because the list
    /// is sorted this is a prefix.
    pub fn above(&self, threshold: f64) -> &[Detection] {
        let end = self.0.partition_point(|d| d.pseudo_likelihood >= threshold);
        &self.0[..end]
    }

    pub fn into_vec(self) -> Vec<Detection> {
        self.0
    }
}

impl<'a> IntoIterator for &'a DetectionList {
    type Item = &'a Detection;
    type IntoIter = std::slice::Iter<'a, Detection>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// `sqrt(Σ_k a_k²)` per pixel.
pub fn pseudo_likelihood_map(a: &Volume) -> Image {
    group_norm_image(a)
}

fn neighbors(m: usize, n: usize, rows: usize, cols: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1isize..=1)
        .flat_map(|dm| (-1isize..=1).map(move |dn| (dm, dn)))
        .filter(|&d| d != (0, 0))
        .filter_map(move |(dm, dn)| {
            let (mm, nn) = (m as isize + dm, n as isize + dn);
            (mm >= 0 && nn >= 0 && (mm as usize) < rows && (nn as usize) < cols).then_some((mm as usize, nn as usize))
        })
}

/// One detection per regional maximum of `p`.
///
/// A regional maximum is an 8-connected plateau of equal positive value
/// whose in-image neighbors are all strictly smaller. Plateaus touching the
/// border qualify. The detection sits at the plateau centroid.
pub fn regional_maxima(p: &Image) -> DetectionList {
    let (rows, cols) = p.shape();
    let mut visited = vec![false; rows * cols];
    let mut stack = Vec::new();
    let mut found = Vec::new();

    for start in 0..rows * cols {
        if visited[start] {
            continue;
        }
        let value = p.as_slice()[start];
        visited[start] = true;
        if value <= 0.0 {
            continue;
        }

        // flood the plateau, noting whether anything around it is higher
        let mut is_max = true;
        let (mut sum_r, mut sum_c, mut count) = (0.0, 0.0, 0usize);
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (m, n) = (idx / cols, idx % cols);
            sum_r += m as f64;
            sum_c += n as f64;
            count += 1;
            for (mm, nn) in neighbors(m, n, rows, cols) {
                let j = mm * cols + nn;
                let v = p.as_slice()[j];
                if v == value {
                    if !visited[j] {
                        visited[j] = true;
                        stack.push(j);
                    }
                } else if v > value {
                    is_max = false;
                }
            }
        }

        if is_max {
            found.push(Detection {
                row: sum_r / count as f64,
                col: sum_c / count as f64,
                pseudo_likelihood: value,
            });
        }
    }
    DetectionList::new(found)
}

/// Regional maxima of the pseudo-likelihood map of `a`.
pub fn detect(a: &Volume) -> DetectionList {
    regional_maxima(&pseudo_likelihood_map(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(rows: &[&[f64]]) -> Image {
        let r = rows.len();
        let c = rows[0].len();
        Image::new(r, c, rows.iter().flat_map(|x| x.iter().copied()).collect()).unwrap()
    }

    fn det(row: f64, col: f64, p: f64) -> Detection {
        Detection {
            row,
            col,
            pseudo_likelihood: p,
        }
    }

    #[test]
    fn map_examples() {
        let mut a = Volume::zeros(3, 3, 2);
        a.set(1, 1, 1, 5.0);
        assert_eq!(pseudo_likelihood_map(&a).get(1, 1), 5.0);
        a.set(0, 2, 0, 3.0);
        a.set(0, 2, 1, 4.0);
        assert_eq!(pseudo_likelihood_map(&a).get(0, 2), 5.0);
        assert!(pseudo_likelihood_map(&Volume::zeros(2, 2, 3))
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn isolated_peak() {
        let p = img(&[&[0.0, 0.0, 0.0], &[0.0, 5.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(regional_maxima(&p).as_slice(), &[det(1.0, 1.0, 5.0)]);
    }

    #[test]
    fn two_pixel_plateau() {
        let p = img(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(regional_maxima(&p).as_slice(), &[det(0.0, 0.5, 1.0)]);
    }

    #[test]
    fn constant_image_is_one_plateau() {
        let p = Image::filled(4, 5, 2.5);
        assert_eq!(regional_maxima(&p).as_slice(), &[det(1.5, 2.0, 2.5)]);
    }

    #[test]
    fn shoulder_plateau_is_not_a_maximum() {
        let p = img(&[&[3.0, 3.0, 4.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(regional_maxima(&p).as_slice(), &[det(0.0, 2.0, 4.0)]);
    }

    #[test]
    fn diagonal_plateau_is_connected() {
        let p = img(&[&[2.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 2.0]]);
        assert_eq!(regional_maxima(&p).as_slice(), &[det(1.0, 1.0, 2.0)]);
    }

    #[test]
    fn detect_examples() {
        assert!(detect(&Volume::zeros(5, 5, 2)).is_empty());

        let mut a = Volume::zeros(10, 10, 2);
        a.set(7, 7, 0, 3.0);
        a.set(2, 2, 1, 7.0);
        let d = detect(&a);
        assert_eq!(d.as_slice(), &[det(2.0, 2.0, 7.0), det(7.0, 7.0, 3.0)]);

        let mut t = Volume::zeros(10, 10, 1);
        t.set(6, 1, 0, 4.0);
        t.set(1, 8, 0, 4.0);
        t.set(1, 3, 0, 4.0);
        let d = detect(&t);
        assert_eq!(
            d.as_slice(),
            &[det(1.0, 3.0, 4.0), det(1.0, 8.0, 4.0), det(6.0, 1.0, 4.0)]
        );
    }

    #[test]
    fn above_is_a_prefix() {
        let d = DetectionList::new(vec![det(0.0, 0.0, 1.0), det(1.0, 1.0, 3.0), det(2.0, 2.0, 2.0)]);
        assert_eq!(d.above(2.0).len(), 2);
        assert_eq!(d.above(f64::INFINITY).len(), 0);
        assert_eq!(d.above(0.5).len(), 3);
    }

    /// Integer-valued maps produce plenty of plateaus.
    fn plateau_map() -> impl Strategy<Value = Image> {
        (1usize..9, 1usize..9).prop_flat_map(|(r, c)| {
            proptest::collection::vec(0u8..4, r * c)
                .prop_map(move |v| Image::new(r, c, v.into_iter().map(f64::from).collect()).unwrap())
        })
    }

    fn plateau_of(p: &Image, d: &Detection) -> Vec<(usize, usize)> {
        // pixels equal to d's value, 8-connected to the centroid's plateau; found by
        // brute force over all pixels with that value, grouped by connectivity
        let (rows, cols) = p.shape();
        let mut comp = vec![usize::MAX; rows * cols];
        let mut label = 0;
        for s in 0..rows * cols {
            if comp[s] != usize::MAX || p.as_slice()[s] != d.pseudo_likelihood {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = label;
            while let Some(i) = stack.pop() {
                for (mm, nn) in neighbors(i / cols, i % cols, rows, cols) {
                    let j = mm * cols + nn;
                    if comp[j] == usize::MAX && p.as_slice()[j] == d.pseudo_likelihood {
                        comp[j] = label;
                        stack.push(j);
                    }
                }
            }
            label += 1;
        }
        (0..label)
            .map(|l| {
                (0..rows * cols)
                    .filter(|&i| comp[i] == l)
                    .map(|i| (i / cols, i % cols))
                    .collect::<Vec<_>>()
            })
            .find(|px| {
                let n = px.len() as f64;
                let mr = px.iter().map(|x| x.0 as f64).sum::<f64>() / n;
                let mc = px.iter().map(|x| x.1 as f64).sum::<f64>() / n;
                mr == d.row && mc == d.col
            })
            .expect("detection must correspond to a plateau")
    }

    proptest! {
        #[test]
        fn plateaus_are_strict_maxima_and_disjoint(p in plateau_map()) {
            let dets = regional_maxima(&p);
            let mut owned = std::collections::HashSet::new();
            for d in &dets {
                prop_assert!(d.pseudo_likelihood > 0.0);
                let px = plateau_of(&p, d);
                for &(m, n) in &px {
                    prop_assert_eq!(p.get(m, n), d.pseudo_likelihood);
                    prop_assert!(owned.insert((m, n)));
                    for (mm, nn) in neighbors(m, n, p.rows(), p.cols()) {
                        prop_assert!(px.contains(&(mm, nn)) || p.get(mm, nn) < d.pseudo_likelihood);
                    }
                }
            }
        }

        #[test]
        fn lowering_the_background_changes_nothing(p in plateau_map()) {
            let dets = regional_maxima(&p);
            let mut on_plateau = vec![false; p.len()];
            for d in &dets {
                for (m, n) in plateau_of(&p, d) {
                    on_plateau[m * p.cols() + n] = true;
                }
            }
            let data = p
                .as_slice()
                .iter()
                .zip(&on_plateau)
                .map(|(&v, &keep)| if keep || v == 0.0 { v } else { v - 0.5 })
                .collect();
            let lowered = Image::new(p.rows(), p.cols(), data).unwrap();
            prop_assert_eq!(regional_maxima(&lowered), dets);
        }

        #[test]
        fn monotone_relabeling_keeps_positions(p in plateau_map()) {
            let f = |v: f64| v * v + 3.0 * v;
            let q = Image::new(p.rows(), p.cols(), p.as_slice().iter().map(|&v| f(v)).collect()).unwrap();
            let mut a: Vec<_> = regional_maxima(&p).iter().map(|d| (d.row, d.col, f(d.pseudo_likelihood))).collect();
            let mut b: Vec<_> = regional_maxima(&q).iter().map(|d| (d.row, d.col, d.pseudo_likelihood)).collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
