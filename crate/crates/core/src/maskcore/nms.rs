use super::geometry::{box_iou, ScoredBox};

pub const DEFAULT_SCORE_THRESH: f64 = 0.05;
pub const DEFAULT_NMS_IOU: f64 = 0.6;

/// Greedy non-maximum suppression.
///
/// Drops boxes scoring `<= score_thresh`, then walks the rest by descending
/// score (lower index first on ties) and suppresses any box whose IoU with an
/// already kept box exceeds `iou_thresh`. Returns kept indices in that order.
pub fn nms(candidates: &[ScoredBox], score_thresh: f64, iou_thresh: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].score > score_thresh)
        .collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .score
            .total_cmp(&candidates[a].score)
            .then(a.cmp(&b))
    });
    let mut keep: Vec<usize> = Vec::with_capacity(order.len());
    for i in order {
        let bi = &candidates[i].bbox;
        if keep
            .iter()
            .all(|&k| box_iou(&candidates[k].bbox, bi) <= iou_thresh)
        {
            keep.push(i);
        }
    }
    keep
}
