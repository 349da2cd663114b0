use crate::tensor::Tensor2;

/// `drift[e][i] = ‖p_i(e) − p_i(0)‖₂` for every snapshot `e` and slot `i`.
pub fn track_embedding_drift(snapshots: &[Tensor2]) -> Vec<Vec<f64>> {
    let Some(first) = snapshots.first() else {
        return Vec::new();
    };
    snapshots
        .iter()
        .map(|t| {
            (0..first.rows())
                .map(|i| {
                    t.row(i)
                        .iter()
                        .zip(first.row(i))
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect()
}

/// Pairwise cosine similarity of table rows. Entries involving a zero row are
/// undefined (`None`).
pub fn embedding_similarity(table: &Tensor2) -> Vec<Vec<Option<f64>>> {
    let n = table.rows();
    let norms: Vec<f64> = (0..n).map(|i| table.row(i).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if norms[i] == 0.0 || norms[j] == 0.0 {
                        None
                    } else if i == j {
                        Some(1.0)
                    } else {
                        let dot: f64 = table.row(i).iter().zip(table.row(j)).map(|(a, b)| a * b).sum();
                        Some((dot / (norms[i] * norms[j])).clamp(-1.0, 1.0))
                    }
                })
                .collect()
        })
        .collect()
}

pub fn similarity_csv(sim: &[Vec<Option<f64>>]) -> String {
    let mut out = String::from("slot_i,slot_j,cosine\n");
    for (i, row) in sim.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let v = v.map_or_else(|| "nan".to_string(), |x| x.to_string());
            out.push_str(&format!("{i},{j},{v}\n"));
        }
    }
    out
}

pub fn drift_csv(drift: &[Vec<f64>]) -> String {
    let mut out = String::from("epoch,slot,distance\n");
    for (e, row) in drift.iter().enumerate() {
        for (s, d) in row.iter().enumerate() {
            out.push_str(&format!("{e},{s},{d}\n"));
        }
    }
    out
}
