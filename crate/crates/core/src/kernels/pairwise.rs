use ndarray::Array2;
use rayon::prelude::*;

use super::{distance, distance_with_grad, DistanceKind, KernelGrad};
use crate::parallel::with_workers;
use crate::{Error, Result};

/// `Q × K` matrix of sequential distances, rows indexed by videos.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub values: Array2<f64>,
    pub kind: DistanceKind,
}

impl DistanceMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }
}

fn check_inputs(videos: &[Array2<f64>], audios: &[Array2<f64>], kind: &DistanceKind) -> Result<()> {
    kind.validate()?;
    if videos.is_empty() || audios.is_empty() {
        return Err(Error::InvalidArgument("empty sequence list".into()));
    }
    Ok(())
}

/// Entry `(i, j)` is `distance(videos[i], audios[j])`. Entries are computed
/// independently, so the result does not depend on the worker count.
pub fn pairwise_matrix(
    videos: &[Array2<f64>],
    audios: &[Array2<f64>],
    kind: &DistanceKind,
    workers: Option<usize>,
) -> Result<DistanceMatrix> {
    check_inputs(videos, audios, kind)?;
    let k = audios.len();
    let flat: Vec<f64> = with_workers(workers, || {
        (0..videos.len() * k)
            .into_par_iter()
            .map(|idx| distance(videos[idx / k].view(), audios[idx % k].view(), kind))
            .collect::<Result<Vec<f64>>>()
    })?;
    let values = Array2::from_shape_vec((videos.len(), k), flat).expect("shape");
    Ok(DistanceMatrix { values, kind: *kind })
}

/// [`pairwise_matrix`] plus the per-entry kernel gradients, row-major.
pub fn pairwise_with_grads(
    videos: &[Array2<f64>],
    audios: &[Array2<f64>],
    kind: &DistanceKind,
    workers: Option<usize>,
) -> Result<(DistanceMatrix, Vec<KernelGrad>)> {
    check_inputs(videos, audios, kind)?;
    let k = audios.len();
    let entries: Vec<(f64, KernelGrad)> = with_workers(workers, || {
        (0..videos.len() * k)
            .into_par_iter()
            .map(|idx| distance_with_grad(videos[idx / k].view(), audios[idx % k].view(), kind))
            .collect::<Result<Vec<_>>>()
    })?;
    let (flat, grads): (Vec<f64>, Vec<KernelGrad>) = entries.into_iter().unzip();
    let values = Array2::from_shape_vec((videos.len(), k), flat).expect("shape");
    Ok((DistanceMatrix { values, kind: *kind }, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::test_util::*;
    use crate::kernels::{Direction, Stage};

    fn kinds() -> Vec<DistanceKind> {
        vec![
            DistanceKind::eucl(Direction::V2A, Stage::Post),
            DistanceKind::eucl(Direction::A2V, Stage::Post),
            DistanceKind::SoftDtw { gamma: 0.5 },
            DistanceKind::HardDtw,
            DistanceKind::wasserstein_default(),
        ]
    }

    #[test]
    fn one_by_one_equals_the_kernel() {
        let mut r = rng(31);
        let v = vec![random_seq(&mut r, 4, 3)];
        let a = vec![random_seq(&mut r, 6, 3)];
        for kind in kinds() {
            let m = pairwise_matrix(&v, &a, &kind, None).unwrap();
            assert_eq!(m.values.dim(), (1, 1));
            assert_eq!(m.values[[0, 0]], distance(v[0].view(), a[0].view(), &kind).unwrap());
        }
    }

    #[test]
    fn zero_diagonal_for_identical_lists() {
        let mut r = rng(32);
        let seqs: Vec<_> = (0..4).map(|_| random_seq(&mut r, 5, 2)).collect();
        let m = pairwise_matrix(&seqs, &seqs, &DistanceKind::eucl(Direction::V2A, Stage::Post), None)
            .unwrap();
        for i in 0..4 {
            assert_eq!(m.values[[i, i]], 0.0);
        }
    }

    #[test]
    fn parallel_matches_serial_recomputation() {
        let mut r = rng(33);
        let v: Vec<_> = (0..3).map(|i| random_seq(&mut r, 3 + i, 2)).collect();
        let a: Vec<_> = (0..3).map(|i| random_seq(&mut r, 5 - i, 2)).collect();
        for kind in kinds() {
            let m = pairwise_matrix(&v, &a, &kind, Some(3)).unwrap();
            let m1 = pairwise_matrix(&v, &a, &kind, Some(1)).unwrap();
            assert_eq!(m, m1);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(m.values[[i, j]], distance(v[i].view(), a[j].view(), &kind).unwrap());
                }
            }
        }
    }

    #[test]
    fn hard_dtw_has_no_gradient_path() {
        let mut r = rng(34);
        let v = vec![random_seq(&mut r, 2, 2)];
        assert!(pairwise_with_grads(&v, &v, &DistanceKind::HardDtw, None).is_err());
    }
}
