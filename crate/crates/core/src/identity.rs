//! Cross-view instance identity alignment: greedy maximum-IoU matching of
//! canonical first-frame labels against per-view labels, then propagation
//! of the aligned ids through each view's frame sequence.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::grid::LabelMap;
use crate::maskgeom::{label_iou, MaskError};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// Matching floor: pairs below this IoU stay unmatched.
pub const IOU_FLOOR: f64 = 0.1;

/// Per-view injective map from view label to canonical label. Background
/// (0) always maps to 0 and is not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewMapping {
    pub view_to_canonical: BTreeMap<u8, u8>,
    /// View labels that found no canonical partner.
    pub unmatched_view: Vec<u8>,
    /// Canonical labels absent from this view's first frame.
    pub unmatched_canonical: Vec<u8>,
}

impl ViewMapping {
    pub fn identity(labels: impl IntoIterator<Item = u8>) -> Self {
        Self {
            view_to_canonical: labels.into_iter().map(|l| (l, l)).collect(),
            unmatched_view: Vec::new(),
            unmatched_canonical: Vec::new(),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            view_to_canonical: self
                .view_to_canonical
                .iter()
                .map(|(&v, &c)| (c, v))
                .collect(),
            unmatched_view: Vec::new(),
            unmatched_canonical: Vec::new(),
        }
    }
}

/// Greedy one-to-one assignment: repeatedly take the unmatched
/// (canonical, view) pair with the highest IoU above the floor; ties break
/// by (canonical, view) label order for determinism.
pub fn match_canonical_to_view(
    canonical: &LabelMap,
    view: &LabelMap,
) -> Result<ViewMapping, AlignError> {
    if canonical.height() != view.height() || canonical.width() != view.width() {
        return Err(AlignError::Mask(MaskError::ResolutionMismatch {
            a: (canonical.height(), canonical.width()),
            b: (view.height(), view.width()),
        }));
    }
    let canon_labels: Vec<u8> = present_labels(canonical);
    let view_labels: Vec<u8> = present_labels(view);

    let mut pairs: Vec<(f64, u8, u8)> = Vec::new();
    for &c in &canon_labels {
        for &v in &view_labels {
            let iou = label_iou(canonical, c, view, v)?;
            if iou > IOU_FLOOR {
                pairs.push((iou, c, v));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut mapping = ViewMapping::default();
    let mut canon_used = vec![false; 256];
    let mut view_used = vec![false; 256];
    for (_, c, v) in pairs {
        if canon_used[c as usize] || view_used[v as usize] {
            continue;
        }
        canon_used[c as usize] = true;
        view_used[v as usize] = true;
        mapping.view_to_canonical.insert(v, c);
    }
    mapping.unmatched_view = view_labels
        .iter()
        .copied()
        .filter(|&v| !view_used[v as usize])
        .collect();
    mapping.unmatched_canonical = canon_labels
        .iter()
        .copied()
        .filter(|&c| !canon_used[c as usize])
        .collect();
    Ok(mapping)
}

/// Rewrite a view's label maps to canonical ids. Unmatched labels become
/// background; the returned count reports how many pixels were dropped.
pub fn propagate_ids(mapping: &ViewMapping, masks: &mut [LabelMap]) -> usize {
    let mut lut = [0u8; 256];
    let mut known = [false; 256];
    known[0] = true;
    for (&v, &c) in &mapping.view_to_canonical {
        lut[v as usize] = c;
        known[v as usize] = true;
    }
    let mut dropped = 0usize;
    for mask in masks {
        for v in mask.data_mut() {
            let raw = *v as usize;
            if known[raw] {
                *v = lut[raw];
            } else {
                *v = 0;
                dropped += 1;
            }
        }
    }
    dropped
}

fn present_labels(mask: &LabelMap) -> Vec<u8> {
    let mut seen = [false; 256];
    for &v in mask.data() {
        seen[v as usize] = true;
    }
    (1..=255u8).filter(|&l| seen[l as usize]).collect()
}

/// Exhaustive-optimal one-to-one assignment by total IoU, used as the test
/// oracle for the greedy matcher (feasible for D <= ~6).
pub fn exhaustive_match(canonical: &LabelMap, view: &LabelMap) -> Result<ViewMapping, AlignError> {
    let canon_labels = present_labels(canonical);
    let view_labels = present_labels(view);
    let mut iou = BTreeMap::new();
    for &c in &canon_labels {
        for &v in &view_labels {
            iou.insert((c, v), label_iou(canonical, c, view, v)?);
        }
    }
    let mut best_score = -1.0;
    let mut best: Vec<(u8, u8)> = Vec::new();
    let mut assignment: Vec<(u8, u8)> = Vec::new();
    fn recurse(
        canon: &[u8],
        idx: usize,
        remaining_views: &mut Vec<u8>,
        iou: &BTreeMap<(u8, u8), f64>,
        assignment: &mut Vec<(u8, u8)>,
        score: f64,
        best_score: &mut f64,
        best: &mut Vec<(u8, u8)>,
    ) {
        if idx == canon.len() {
            if score > *best_score {
                *best_score = score;
                *best = assignment.clone();
            }
            return;
        }
        let c = canon[idx];
        // Option: leave c unmatched.
        recurse(
            canon,
            idx + 1,
            remaining_views,
            iou,
            assignment,
            score,
            best_score,
            best,
        );
        for i in 0..remaining_views.len() {
            let v = remaining_views.remove(i);
            let pair = iou[&(c, v)];
            if pair > IOU_FLOOR {
                assignment.push((c, v));
                recurse(
                    canon,
                    idx + 1,
                    remaining_views,
                    iou,
                    assignment,
                    score + pair,
                    best_score,
                    best,
                );
                assignment.pop();
            }
            remaining_views.insert(i, v);
        }
    }
    let mut views = view_labels.clone();
    recurse(
        &canon_labels,
        0,
        &mut views,
        &iou,
        &mut assignment,
        0.0,
        &mut best_score,
        &mut best,
    );
    let mut mapping = ViewMapping::default();
    for (c, v) in best {
        mapping.view_to_canonical.insert(v, c);
    }
    Ok(mapping)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from_rows(rows: &[&[u8]]) -> LabelMap {
        let h = rows.len();
        let w = rows[0].len();
        let mut data = Vec::with_capacity(h * w);
        for r in rows {
            data.extend_from_slice(r);
        }
        LabelMap::from_data(h, w, data)
    }

    #[test]
    fn identical_masks_map_identically() {
        let m = mask_from_rows(&[&[0, 1, 1, 0], &[0, 2, 2, 0], &[0, 0, 0, 0]]);
        let mapping = match_canonical_to_view(&m, &m).unwrap();
        assert_eq!(mapping.view_to_canonical[&1], 1);
        assert_eq!(mapping.view_to_canonical[&2], 2);
        assert!(mapping.unmatched_view.is_empty());
    }

    #[test]
    fn permuted_labels_are_recovered() {
        let canon = mask_from_rows(&[&[1, 1, 0, 0], &[0, 0, 2, 2]]);
        let view = mask_from_rows(&[&[2, 2, 0, 0], &[0, 0, 1, 1]]);
        let mapping = match_canonical_to_view(&canon, &view).unwrap();
        assert_eq!(mapping.view_to_canonical[&2], 1);
        assert_eq!(mapping.view_to_canonical[&1], 2);
    }

    #[test]
    fn resolution_mismatch_is_an_error() {
        let a = LabelMap::zeros(4, 4);
        let b = LabelMap::zeros(4, 5);
        assert!(match_canonical_to_view(&a, &b).is_err());
    }

    #[test]
    fn three_canonical_two_view_matches_exhaustive() {
        // Canonical has labels 1,2,3; the view sees only two of them,
        // shifted by one pixel.
        let canon = mask_from_rows(&[
            &[1, 1, 0, 2, 2, 0, 3, 3],
            &[1, 1, 0, 2, 2, 0, 3, 3],
            &[0, 0, 0, 0, 0, 0, 0, 0],
        ]);
        let view = mask_from_rows(&[
            &[2, 2, 0, 0, 0, 0, 1, 1],
            &[2, 2, 0, 0, 0, 0, 1, 1],
            &[0, 0, 0, 0, 0, 0, 0, 0],
        ]);
        let greedy = match_canonical_to_view(&canon, &view).unwrap();
        let oracle = exhaustive_match(&canon, &view).unwrap();
        assert_eq!(greedy.view_to_canonical, oracle.view_to_canonical);
        assert_eq!(greedy.unmatched_canonical, vec![2]);
    }

    #[test]
    fn propagate_identity_mapping_is_noop() {
        let m = mask_from_rows(&[&[0, 1, 2], &[2, 1, 0]]);
        let mapping = ViewMapping::identity([1u8, 2]);
        let mut masks = vec![m.clone(), m.clone()];
        let dropped = propagate_ids(&mapping, &mut masks);
        assert_eq!(dropped, 0);
        assert_eq!(masks[0], m);
        assert_eq!(masks[1], m);
    }

    #[test]
    fn propagate_relabels_consistently_and_round_trips() {
        let m = mask_from_rows(&[&[0, 1, 2], &[2, 1, 3]]);
        let mut mapping = ViewMapping::default();
        mapping.view_to_canonical.insert(1, 2);
        mapping.view_to_canonical.insert(2, 1);
        mapping.view_to_canonical.insert(3, 3);
        let mut masks = vec![m.clone(), m.clone()];
        propagate_ids(&mapping, &mut masks);
        assert_eq!(masks[0].data(), &[0, 2, 1, 1, 2, 3]);
        assert_eq!(masks[0], masks[1]);
        // Applying the inverse mapping restores the original labels.
        let inv = mapping.inverse();
        propagate_ids(&inv, &mut masks);
        assert_eq!(masks[0], m);
    }

    #[test]
    fn unmatched_labels_become_background_with_count() {
        let m = mask_from_rows(&[&[5, 5, 0], &[0, 1, 1]]);
        let mapping = ViewMapping::identity([1u8]);
        let mut masks = vec![m];
        let dropped = propagate_ids(&mapping, &mut masks);
        assert_eq!(dropped, 2);
        assert_eq!(masks[0].data(), &[0, 0, 0, 0, 1, 1]);
    }
}
