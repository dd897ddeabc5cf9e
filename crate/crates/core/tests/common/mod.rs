#![allow(dead_code)]

use g2l_core::losses::Batch;
use g2l_core::numcore::{l2_normalize_rows, EmbeddingMatrix, Matrix, RngStream};

pub fn gaussian(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    m.data_mut().iter_mut().for_each(|v| *v = rng.normal());
    m
}

pub fn unit_gaussian(rows: usize, cols: usize, rng: &mut RngStream) -> EmbeddingMatrix {
    EmbeddingMatrix::unit(l2_normalize_rows(&gaussian(rows, cols, rng)).unwrap()).unwrap()
}

/// Random batch no larger than 4 queries by 8 moments in 16 dimensions. Every
/// video holds at least `min_per_video` moments.
pub fn random_batch(rng: &mut RngStream, min_per_video: usize) -> Batch {
    let videos = 1 + rng.below(2);
    let per_video = min_per_video + rng.below(8 / videos - min_per_video + 1);
    let dim = 2 + rng.below(15);
    let b = 1 + rng.below(4);
    let nm = videos * per_video;
    let moment_video: Vec<usize> = (0..nm).map(|i| i / per_video).collect();
    let query_video: Vec<usize> = (0..b).map(|_| rng.below(videos)).collect();
    let targets = query_video
        .iter()
        .map(|&v| v * per_video + rng.below(per_video))
        .collect();
    Batch::new(
        unit_gaussian(b, dim, rng),
        unit_gaussian(nm, dim, rng),
        targets,
        query_video,
        moment_video,
    )
    .unwrap()
}
