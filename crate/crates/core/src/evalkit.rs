//! Image-quality and segmentation metrics plus JSON/HTML report emission.

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, LabelMap};
use crate::losses::ssim_mean;

/// PSNR with identical images reported as a distinguished exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Psnr {
    Exact,
    Db(f64),
}

impl Psnr {
    pub fn as_db(&self) -> f64 {
        match self {
            Psnr::Exact => f64::INFINITY,
            Psnr::Db(v) => *v,
        }
    }
}

impl std::fmt::Display for Psnr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Psnr::Exact => write!(f, "exact"),
            Psnr::Db(v) => write!(f, "{v:.3} dB"),
        }
    }
}

/// 10 log10(1 / MSE) for images in [0, 1]. Panics on shape mismatch.
pub fn psnr(a: &Grid, b: &Grid) -> Psnr {
    assert!(a.same_shape(b), "psnr shape mismatch");
    let mut mse = 0.0;
    for (x, y) in a.data().iter().zip(b.data()) {
        mse += (x - y) * (x - y);
    }
    mse /= a.data().len() as f64;
    if mse == 0.0 {
        Psnr::Exact
    } else {
        Psnr::Db(10.0 * (1.0 / mse).log10())
    }
}

/// Mean SSIM (shared windowed implementation); None when no 11x11 window
/// fits.
pub fn ssim(a: &Grid, b: &Grid) -> Option<f64> {
    ssim_mean(a, b)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SegMetrics {
    pub miou: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-instance IoU / recall / F1 averaged over instances and frames.
/// Instances absent from both prediction and ground truth in a frame are
/// skipped.
pub fn seg_metrics(pred: &[LabelMap], gt: &[LabelMap], instances: u8) -> SegMetrics {
    let mut iou_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut count = 0usize;
    for (p, g) in pred.iter().zip(gt) {
        assert_eq!(p.height(), g.height());
        assert_eq!(p.width(), g.width());
        for d in 1..=instances {
            let mut inter = 0usize;
            let mut p_count = 0usize;
            let mut g_count = 0usize;
            for (&pv, &gv) in p.data().iter().zip(g.data()) {
                let in_p = pv == d;
                let in_g = gv == d;
                if in_p {
                    p_count += 1;
                }
                if in_g {
                    g_count += 1;
                }
                if in_p && in_g {
                    inter += 1;
                }
            }
            if p_count == 0 && g_count == 0 {
                continue;
            }
            let union = p_count + g_count - inter;
            let iou = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
            let recall = if g_count == 0 { 1.0 } else { inter as f64 / g_count as f64 };
            let precision = if p_count == 0 { 0.0 } else { inter as f64 / p_count as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            iou_sum += iou;
            recall_sum += recall;
            f1_sum += f1;
            count += 1;
        }
    }
    if count == 0 {
        SegMetrics {
            miou: 1.0,
            recall: 1.0,
            f1: 1.0,
        }
    } else {
        SegMetrics {
            miou: iou_sum / count as f64,
            recall: recall_sum / count as f64,
            f1: f1_sum / count as f64,
        }
    }
}

/// One frame's metric row in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub psnr_db: Vec<f64>,
    pub ssim: Vec<f64>,
    pub seg: SegMetrics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub frames: Vec<FrameMetrics>,
    pub mean_psnr_db: f64,
    pub mean_ssim: f64,
    pub seg: SegMetrics,
}

impl Report {
    pub fn from_frames(frames: Vec<FrameMetrics>) -> Self {
        let mut psnr_sum = 0.0;
        let mut psnr_n = 0usize;
        let mut ssim_sum = 0.0;
        let mut ssim_n = 0usize;
        let mut seg = SegMetrics::default();
        for f in &frames {
            for &v in &f.psnr_db {
                psnr_sum += v;
                psnr_n += 1;
            }
            for &v in &f.ssim {
                ssim_sum += v;
                ssim_n += 1;
            }
            seg.miou += f.seg.miou;
            seg.recall += f.seg.recall;
            seg.f1 += f.seg.f1;
        }
        let nf = frames.len().max(1) as f64;
        Report {
            frames,
            mean_psnr_db: if psnr_n == 0 { 0.0 } else { psnr_sum / psnr_n as f64 },
            mean_ssim: if ssim_n == 0 { 0.0 } else { ssim_sum / ssim_n as f64 },
            seg: SegMetrics {
                miou: seg.miou / nf,
                recall: seg.recall / nf,
                f1: seg.f1 / nf,
            },
        }
    }

    /// Simple SVG polyline chart of one series.
    pub fn svg_chart(series: &[(String, Vec<f64>)], title: &str) -> String {
        let (w, h, pad) = (640.0, 240.0, 36.0);
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        let mut max_len = 1usize;
        for (_, values) in series {
            for &v in values {
                min_v = min_v.min(v);
                max_v = max_v.max(v);
            }
            max_len = max_len.max(values.len());
        }
        if !min_v.is_finite() || !max_v.is_finite() {
            min_v = 0.0;
            max_v = 1.0;
        }
        if (max_v - min_v).abs() < 1e-12 {
            max_v = min_v + 1.0;
        }
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        let mut body = String::new();
        for (si, (name, values)) in series.iter().enumerate() {
            let pts: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let x = pad + (w - 2.0 * pad) * i as f64 / (max_len.max(2) - 1) as f64;
                    let y = h - pad - (h - 2.0 * pad) * (v - min_v) / (max_v - min_v);
                    format!("{x:.1},{y:.1}")
                })
                .collect();
            let color = colors[si % colors.len()];
            body.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\
                 <text x=\"{}\" y=\"{}\" fill=\"{}\" font-size=\"11\">{}</text>",
                color,
                pts.join(" "),
                pad + 4.0,
                pad + 14.0 * (si as f64 + 1.0),
                color,
                name
            ));
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\
             <text x=\"{}\" y=\"16\" font-size=\"13\">{title}</text>\
             <text x=\"2\" y=\"{}\" font-size=\"10\">{min_v:.3}</text>\
             <text x=\"2\" y=\"{}\" font-size=\"10\">{max_v:.3}</text>{body}</svg>",
            pad,
            h - pad,
            pad
        )
    }

    pub fn to_html(&self) -> String {
        let psnr_series = vec![(
            "PSNR (dB)".to_string(),
            self.frames
                .iter()
                .map(|f| {
                    if f.psnr_db.is_empty() {
                        0.0
                    } else {
                        f.psnr_db.iter().sum::<f64>() / f.psnr_db.len() as f64
                    }
                })
                .collect(),
        )];
        let seg_series = vec![
            (
                "mIoU".to_string(),
                self.frames.iter().map(|f| f.seg.miou).collect(),
            ),
            (
                "F1".to_string(),
                self.frames.iter().map(|f| f.seg.f1).collect(),
            ),
        ];
        let mut rows = String::new();
        for f in &self.frames {
            let psnr = if f.psnr_db.is_empty() {
                String::from("-")
            } else {
                format!(
                    "{:.2}",
                    f.psnr_db.iter().sum::<f64>() / f.psnr_db.len() as f64
                )
            };
            rows.push_str(&format!(
                "<tr><td>{}</td><td>{}</td><td>{:.4}</td><td>{:.4}</td><td>{:.4}</td></tr>",
                f.frame, psnr, f.seg.miou, f.seg.recall, f.seg.f1
            ));
        }
        format!(
            "<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>reconstruction report</title>\
             <style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}\
             td,th{{border:1px solid #ccc;padding:4px 10px}}</style></head><body>\
             <h1>Reconstruction report</h1>\
             <p>mean PSNR {:.2} dB, mean SSIM {:.4}, mIoU {:.4}, recall {:.4}, F1 {:.4}</p>\
             {}{}<table><tr><th>frame</th><th>PSNR</th><th>mIoU</th><th>recall</th><th>F1</th></tr>{}</table>\
             </body></html>",
            self.mean_psnr_db,
            self.mean_ssim,
            self.seg.miou,
            self.seg.recall,
            self.seg.f1,
            Self::svg_chart(&psnr_series, "PSNR per frame"),
            Self::svg_chart(&seg_series, "Segmentation per frame"),
            rows
        )
    }
}
