//! Fixtures shared by the criterion benches.

use lecseg_core::datamodel::generate_synthetic;
use lecseg_core::{ClipPoint, FeatureDims, Lecture, SynthConfig};

/// One seeded synthetic lecture with `n_clips` clips of `dim`-wide features.
pub fn synthetic_lecture(n_clips: usize, dim: usize, seed: u64) -> Lecture {
    let cfg = SynthConfig {
        n_lectures: 1,
        clips_per_lecture: n_clips,
        dims: FeatureDims::uniform(dim),
        rng_seed: seed,
        ..SynthConfig::default()
    };
    generate_synthetic(&cfg)
        .expect("valid synthetic config")
        .remove(0)
}

/// Raw 2D visual features as clustering points.
pub fn clip_points(lecture: &Lecture) -> Vec<ClipPoint> {
    lecture
        .clips
        .iter()
        .map(|c| ClipPoint::new(c.v2d.iter().map(|&x| x as f64).collect(), c.midpoint_s()))
        .collect()
}
