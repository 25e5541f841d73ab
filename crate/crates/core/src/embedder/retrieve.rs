use std::cmp::Ordering;

use super::model::{cosine, ClipEmbedding, ClipId, TextEmbedding};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalHit {
    pub id: ClipId,
    pub score: f64,
}

/// Ranks clips by cosine similarity to a text query, best first.
///
/// Equal scores are ordered by `(lecture_id, clip_index)`. `top_k` is
/// clamped to the number of clips.
pub fn retrieve(
    query: &TextEmbedding,
    clips: &[ClipEmbedding],
    top_k: usize,
) -> Result<Vec<RetrievalHit>> {
    if top_k == 0 {
        return Err(Error::validation("top_k must be at least 1"));
    }
    if clips.is_empty() {
        return Err(Error::Empty("no clips to retrieve from".into()));
    }
    let mut hits = clips
        .iter()
        .map(|c| {
            Ok(RetrievalHit {
                id: c.id.clone(),
                score: cosine(&query.vector, &c.vector)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    hits.truncate(top_k);
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn clip(lecture: &str, idx: usize, v: Vec<f64>) -> ClipEmbedding {
        ClipEmbedding {
            id: ClipId {
                lecture_id: lecture.into(),
                clip_index: idx,
            },
            vector: v,
        }
    }

    fn query(v: Vec<f64>) -> TextEmbedding {
        TextEmbedding {
            id: ClipId {
                lecture_id: "q".into(),
                clip_index: 0,
            },
            vector: v,
        }
    }

    #[test]
    fn aligned_clip_first() {
        let clips = vec![
            clip("a", 0, vec![1.0, 0.0, 0.0]),
            clip("a", 1, vec![0.0, 2.0, 0.0]),
            clip("b", 0, vec![1.0, 1.0, 0.0]),
        ];
        let hits = retrieve(&query(vec![0.0, 5.0, 0.0]), &clips, 2).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].id.clip_index, 1);
        assert_eq!(hits[0].score, 1.0);
        assert_eq!(
            retrieve(&query(vec![0.0, 5.0, 0.0]), &clips, 50)
                .unwrap()
                .len(),
            3
        );
    }

    #[test]
    fn ties_by_identity() {
        let clips = vec![
            clip("b", 0, vec![1.0, 0.0]),
            clip("a", 3, vec![2.0, 0.0]),
            clip("a", 1, vec![3.0, 0.0]),
        ];
        let hits = retrieve(&query(vec![1.0, 0.0]), &clips, 3).unwrap();
        let order: Vec<_> = hits
            .iter()
            .map(|h| (h.id.lecture_id.as_str(), h.id.clip_index))
            .collect();
        assert_eq!(order, [("a", 1), ("a", 3), ("b", 0)]);
    }

    #[test]
    fn errors() {
        assert!(retrieve(&query(vec![1.0]), &[], 1).is_err());
        assert!(retrieve(&query(vec![1.0]), &[clip("a", 0, vec![1.0])], 0).is_err());
    }

    #[test]
    fn matches_exhaustive_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clips: Vec<_> = (0..100)
            .map(|i| {
                clip(
                    &format!("l{}", i % 7),
                    i,
                    (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let q = query((0..5).map(|_| rng.random_range(-1.0..1.0)).collect());
        let hits = retrieve(&q, &clips, 100).unwrap();

        // brute force: every pairwise comparison decides the position
        let score = |c: &ClipEmbedding| {
            let dot: f64 = c.vector.iter().zip(&q.vector).map(|(a, b)| a * b).sum();
            let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (n(&c.vector) * n(&q.vector))
        };
        for (pos, hit) in hits.iter().enumerate() {
            let c = clips.iter().find(|c| c.id == hit.id).unwrap();
            let s = score(c);
            let better = clips.iter().filter(|o| score(o) > s + 1e-12).count();
            assert_eq!(better, pos);
            assert!((hit.score - s).abs() < 1e-12);
        }
    }
}
