use super::json::Json;
use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold count.
    pub support: u64,
}

/// Single-label classification metrics. Ratios with a zero denominator are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct F1Report {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][pred]`.
    pub confusion: Vec<Vec<u64>>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Every class in `0..num_classes` enters the macro average, including
/// classes absent from both `preds` and `golds`.
pub fn f1_metrics(preds: &[usize], golds: &[usize], num_classes: usize) -> Result<F1Report, HarnessError> {
    if preds.len() != golds.len() {
        return Err(HarnessError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Err(HarnessError::InvalidConfig("no predictions to score".into()));
    }
    if let Some(&bad) = preds.iter().chain(golds).find(|&&l| l >= num_classes) {
        return Err(HarnessError::InvalidConfig(format!("label {bad} >= {num_classes} classes")));
    }
    let mut confusion = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &g) in preds.iter().zip(golds) {
        confusion[g][p] += 1;
    }
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let per_class: Vec<ClassMetrics> = (0..num_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            tp_all += tp;
            fp_all += predicted - tp;
            fn_all += support - tp;
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassMetrics { precision, recall, f1: f1(precision, recall), support }
        })
        .collect();
    let micro_f1 = f1(ratio(tp_all, tp_all + fp_all), ratio(tp_all, tp_all + fn_all));
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / num_classes as f64;
    let accuracy = ratio(tp_all, preds.len() as u64);
    Ok(F1Report { micro_f1, macro_f1, accuracy, per_class, confusion })
}

impl F1Report {
    pub fn to_json(&self, labels: &[String]) -> Json {
        let per_class = labels
            .iter()
            .zip(&self.per_class)
            .map(|(l, m)| {
                let entry = Json::obj([
                    ("precision", m.precision.into()),
                    ("recall", m.recall.into()),
                    ("f1", m.f1.into()),
                    ("support", m.support.into()),
                ]);
                (l.clone(), entry)
            })
            .collect::<Vec<_>>();
        Json::obj([
            ("micro_f1", self.micro_f1.into()),
            ("macro_f1", self.macro_f1.into()),
            ("accuracy", self.accuracy.into()),
            ("per_class", Json::obj(per_class)),
            (
                "confusion",
                Json::Arr(self.confusion.iter().map(|r| Json::Arr(r.iter().map(|&v| v.into()).collect())).collect()),
            ),
        ])
    }
}
