//! Candidate scoring and goal selection.
//!
//! Objects are compared by the cosine similarity of their unit feature
//! vectors; each candidate is scored by the optimal one-to-one assignment of
//! movable objects, and the best-scoring candidate becomes the goal.

mod hungarian;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::scene::{CandidateScene, ObjectInstance, SceneDescription};

pub use hungarian::minimize;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("feature dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("object counts differ: {initial} initial vs {candidate} candidate")]
    CountMismatch { initial: usize, candidate: usize },
    #[error("similarity matrix must be square with finite entries")]
    InvalidMatrix,
}

/// `sim[i][j] = ⟨vᵢ, v′ⱼ⟩` for unit features.
pub fn similarity_matrix(initial: &[&ObjectInstance], candidate: &[&ObjectInstance]) -> Result<Vec<Vec<f64>>, MatchError> {
    if initial.len() != candidate.len() {
        return Err(MatchError::CountMismatch {
            initial: initial.len(),
            candidate: candidate.len(),
        });
    }
    initial
        .iter()
        .map(|a| {
            candidate
                .iter()
                .map(|b| {
                    if a.feature.len() != b.feature.len() {
                        return Err(MatchError::DimensionMismatch(a.feature.len(), b.feature.len()));
                    }
                    Ok(a.feature.iter().zip(&b.feature).map(|(x, y)| x * y).sum())
                })
                .collect()
        })
        .collect()
}

/// A bijection `pairs[k] = (row, column)` listed by ascending row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_score: f64,
}

fn row_total(sim: &[Vec<f64>], cols: &[usize]) -> f64 {
    cols.iter().enumerate().map(|(i, &j)| sim[i][j]).sum()
}

/// Best completion value for rows `from..` over the unused columns.
fn best_completion(sim: &[Vec<f64>], from: usize, used: &[bool]) -> (f64, Vec<usize>) {
    let cols: Vec<usize> = (0..sim.len()).filter(|&j| !used[j]).collect();
    let rows = &sim[from..];
    if rows.is_empty() {
        return (0.0, Vec::new());
    }
    let max = rows.iter().flat_map(|r| cols.iter().map(move |&j| r[j])).fold(f64::NEG_INFINITY, f64::max);
    let costs: Vec<Vec<f64>> = rows.iter().map(|r| cols.iter().map(|&j| max - r[j]).collect()).collect();
    let local = minimize(&costs);
    let picked: Vec<usize> = local.iter().map(|&k| cols[k]).collect();
    let value = picked.iter().enumerate().map(|(i, &j)| rows[i][j]).sum();
    (value, picked)
}

/// Maximum-similarity bijection. Among optimal assignments the
/// lexicographically smallest column sequence wins.
pub fn optimal_assignment(sim: &[Vec<f64>]) -> Result<Assignment, MatchError> {
    let n = sim.len();
    if sim.iter().any(|r| r.len() != n || r.iter().any(|x| !x.is_finite())) {
        return Err(MatchError::InvalidMatrix);
    }
    if n == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total_score: 0.0,
        });
    }
    let (best, mut cols) = best_completion(sim, 0, &vec![false; n]);
    let scale = sim.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs())) * n as f64;
    let eps = 1e-12 * scale;

    let mut used = vec![false; n];
    let mut prefix = 0.0;
    for i in 0..n {
        for j in 0..cols[i] {
            if used[j] {
                continue;
            }
            used[j] = true;
            let (rest, tail) = best_completion(sim, i + 1, &used);
            used[j] = false;
            if prefix + sim[i][j] + rest >= best - eps {
                cols.truncate(i);
                cols.push(j);
                cols.extend(tail);
                break;
            }
        }
        used[cols[i]] = true;
        prefix += sim[i][cols[i]];
    }

    Ok(Assignment {
        total_score: row_total(sim, &cols),
        pairs: cols.into_iter().enumerate().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectMatch {
    pub initial_id: String,
    pub initial_index: usize,
    pub candidate_index: usize,
    pub similarity: f64,
}

/// The chosen candidate together with its movable-object correspondence.
/// `matches` index into `SceneDescription::objects` and
/// `CandidateScene::objects` respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSelection {
    pub candidate_index: usize,
    pub candidate: CandidateScene,
    pub assignment: Assignment,
    pub matches: Vec<ObjectMatch>,
    pub candidate_scores: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionAudit<'a> {
    pub source_tag: &'a str,
    pub candidate_index: usize,
    pub total_score: f64,
    pub candidate_scores: &'a [f64],
    pub pairs: &'a [ObjectMatch],
}

impl GoalSelection {
    pub fn audit(&self) -> SelectionAudit<'_> {
        SelectionAudit {
            source_tag: &self.candidate.source_tag,
            candidate_index: self.candidate_index,
            total_score: self.assignment.total_score,
            candidate_scores: &self.candidate_scores,
            pairs: &self.matches,
        }
    }
}

fn movable_indexed(objects: &[ObjectInstance]) -> (Vec<usize>, Vec<&ObjectInstance>) {
    objects.iter().enumerate().filter(|(_, o)| o.movable).unzip()
}

/// Scores every candidate and returns the best; ties go to the lowest index.
pub fn select_goal(scene: &SceneDescription, candidates: &[CandidateScene]) -> Result<GoalSelection, MatchError> {
    if candidates.is_empty() {
        return Err(MatchError::NoCandidates);
    }
    let (init_idx, init_objs) = movable_indexed(&scene.objects);
    let scored: Vec<Result<Assignment, MatchError>> = candidates
        .par_iter()
        .map(|c| {
            let (_, cand_objs) = movable_indexed(&c.objects);
            optimal_assignment(&similarity_matrix(&init_objs, &cand_objs)?)
        })
        .collect();
    let mut assignments = Vec::with_capacity(scored.len());
    for s in scored {
        assignments.push(s?);
    }
    let scores: Vec<f64> = assignments.iter().map(|a| a.total_score).collect();
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    let candidate = candidates[best].clone();
    let assignment = assignments.swap_remove(best);
    let (cand_idx, _) = movable_indexed(&candidate.objects);
    let (_, cand_objs) = movable_indexed(&candidate.objects);
    let matches = assignment
        .pairs
        .iter()
        .map(|&(r, c)| ObjectMatch {
            initial_id: init_objs[r].id.clone(),
            initial_index: init_idx[r],
            candidate_index: cand_idx[c],
            similarity: init_objs[r].feature.iter().zip(&cand_objs[c].feature).map(|(x, y)| x * y).sum(),
        })
        .collect();
    Ok(GoalSelection {
        candidate_index: best,
        candidate,
        assignment,
        matches,
        candidate_scores: scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive oracle: maximum over all permutations, row-order sums.
    fn brute_force(sim: &[Vec<f64>]) -> (f64, Vec<usize>) {
        fn rec(sim: &[Vec<f64>], row: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
            if row == sim.len() {
                let t: f64 = cur.iter().enumerate().map(|(i, &j)| sim[i][j]).sum();
                if t > best.0 {
                    *best = (t, cur.clone());
                }
                return;
            }
            for j in 0..sim.len() {
                if !used[j] {
                    used[j] = true;
                    cur.push(j);
                    rec(sim, row + 1, used, cur, best);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = (f64::NEG_INFINITY, Vec::new());
        rec(sim, 0, &mut vec![false; sim.len()], &mut Vec::new(), &mut best);
        best
    }

    fn obj(id: &str, f: &[f64]) -> ObjectInstance {
        ObjectInstance {
            id: id.into(),
            caption: String::new(),
            class_noun: "thing".into(),
            movable: true,
            mask: crate::mask::BinaryMask::from_fn(2, 2, |_, _| true),
            feature: f.to_vec(),
        }
    }

    #[test]
    fn similarity_examples() {
        let a = obj("a", &[1.0, 0.0]);
        let b = obj("b", &[0.0, 1.0]);
        let c = obj("c", &[0.6, 0.8]);
        assert_eq!(similarity_matrix(&[&a], &[&a]).unwrap()[0][0], 1.0);
        assert_eq!(similarity_matrix(&[&a], &[&b]).unwrap()[0][0], 0.0);
        assert!((similarity_matrix(&[&a], &[&c]).unwrap()[0][0] - 0.6).abs() < 1e-15);
        let d3 = obj("d", &[1.0, 0.0, 0.0]);
        assert_eq!(similarity_matrix(&[&a], &[&d3]), Err(MatchError::DimensionMismatch(2, 3)));
        assert!(matches!(similarity_matrix(&[&a, &b], &[&c]), Err(MatchError::CountMismatch { .. })));
    }

    #[test]
    fn assignment_examples() {
        let a = optimal_assignment(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert!((a.total_score - 1.7).abs() < 1e-12);

        let diag: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.1 }).collect()).collect();
        let a = optimal_assignment(&diag).unwrap();
        assert_eq!(a.pairs, (0..5).map(|i| (i, i)).collect::<Vec<_>>());

        assert_eq!(optimal_assignment(&[vec![1.0, f64::NAN], vec![0.0, 0.0]]), Err(MatchError::InvalidMatrix));
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let flat = vec![vec![0.5; 4]; 4];
        let a = optimal_assignment(&flat).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        // anti-diagonal and diagonal tie at 2.0; rows prefer column 0 first
        let m = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(optimal_assignment(&m).unwrap().pairs, vec![(0, 0), (1, 1)]);
        let m = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]];
        assert_eq!(optimal_assignment(&m).unwrap().pairs, vec![(0, 1), (1, 0), (2, 2)]);
    }

    #[test]
    fn random_5x5_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let sim: Vec<Vec<f64>> = (0..5).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let got = optimal_assignment(&sim).unwrap();
            let (best, perm) = brute_force(&sim);
            assert_eq!(got.total_score, best);
            assert_eq!(got.pairs.iter().map(|p| p.1).collect::<Vec<_>>(), perm);
        }
    }

    #[test]
    fn constant_shift_keeps_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            let sim: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let shifted: Vec<Vec<f64>> = sim.iter().map(|r| r.iter().map(|x| x + 0.37).collect()).collect();
            let a = optimal_assignment(&sim).unwrap();
            let b = optimal_assignment(&shifted).unwrap();
            assert_eq!(a.pairs, b.pairs);
            assert!((b.total_score - a.total_score - 0.37 * n as f64).abs() < 1e-9);
        }
    }

    fn scene_with(objs: Vec<ObjectInstance>) -> SceneDescription {
        SceneDescription {
            image_width: 2,
            image_height: 2,
            camera: crate::scene::CameraModel { fx: 1.0, fy: 1.0, cx: 0.0, cy: 0.0, table_depth: 1.0 },
            table_edge_band: crate::mask::BinaryMask::empty(2, 2),
            objects: objs,
        }
    }

    fn cand(tag: &str, objs: Vec<ObjectInstance>) -> CandidateScene {
        CandidateScene { source_tag: tag.into(), image_width: 2, image_height: 2, objects: objs }
    }

    #[test]
    fn select_goal_examples() {
        let s = scene_with(vec![obj("x", &[1.0, 0.0]), obj("y", &[0.0, 1.0])]);
        assert_eq!(select_goal(&s, &[]), Err(MatchError::NoCandidates));

        let single = cand("only", vec![obj("p", &[0.0, 1.0]), obj("q", &[1.0, 0.0])]);
        let g = select_goal(&s, std::slice::from_ref(&single)).unwrap();
        assert_eq!(g.candidate_index, 0);
        assert_eq!(g.assignment.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(g.matches[0].candidate_index, 1);

        let weak = cand("weak", vec![obj("p", &[0.6, 0.8]), obj("q", &[0.8, 0.6])]);
        let g = select_goal(&s, &[weak.clone(), single.clone()]).unwrap();
        assert_eq!(g.candidate_index, 1);

        let g = select_goal(&s, &[single.clone(), single]).unwrap();
        assert_eq!(g.candidate_index, 0, "exact tie resolves to the lower index");
    }

    #[test]
    fn select_goal_skips_stationary_objects() {
        let mut pinned = obj("basket", &[0.0, 1.0]);
        pinned.movable = false;
        let s = scene_with(vec![pinned.clone(), obj("x", &[1.0, 0.0])]);
        let c = cand("c", vec![pinned, obj("x2", &[1.0, 0.0])]);
        let g = select_goal(&s, &[c]).unwrap();
        assert_eq!(g.matches.len(), 1);
        assert_eq!(g.matches[0].initial_index, 1);
        assert_eq!(g.matches[0].candidate_index, 1);
    }

    #[test]
    fn select_goal_is_permutation_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut unit = || {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let init: Vec<_> = (0..4).map(|i| obj(&format!("o{i}"), &unit())).collect();
        let gen: Vec<_> = (0..4).map(|i| obj(&format!("g{i}"), &unit())).collect();
        let perm = [2usize, 0, 3, 1];
        let permuted: Vec<_> = perm.iter().map(|&k| gen[k].clone()).collect();
        let s = scene_with(init);
        let a = select_goal(&s, &[cand("a", gen)]).unwrap();
        let b = select_goal(&s, &[cand("b", permuted)]).unwrap();
        for (ma, mb) in a.matches.iter().zip(&b.matches) {
            assert_eq!(perm[mb.candidate_index], ma.candidate_index);
        }
        assert!((a.assignment.total_score - b.assignment.total_score).abs() < 1e-12);
    }
}
