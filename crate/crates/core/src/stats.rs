//! Ordered ensemble statistics.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Mean and standard error, accumulated in slice order so that the result is
/// bit-identical however the values were produced.
pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    let count = values.len();
    if count == 0 {
        return invalid("cannot aggregate an empty sample");
    }
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    let mean = sum / count as f64;
    let stderr = if count > 1 {
        let mut ss = 0.0;
        for v in values {
            ss += (v - mean) * (v - mean);
        }
        (ss / (count - 1) as f64).sqrt() / (count as f64).sqrt()
    } else {
        0.0
    };
    Ok(Aggregate { mean, stderr, count })
}

/// Per-column aggregates of equally long rows.
pub fn aggregate_columns(rows: &[Vec<f64>]) -> Result<Vec<Aggregate>> {
    let Some(first) = rows.first() else {
        return invalid("cannot aggregate an empty sample");
    };
    let width = first.len();
    if rows.iter().any(|r| r.len() != width) {
        return invalid("rows of unequal length");
    }
    (0..width).map(|c| aggregate(&rows.iter().map(|r| r[c]).collect::<Vec<_>>())).collect()
}

/// `|a - b|` measured in combined standard errors.
pub fn se_distance(a: &Aggregate, b: &Aggregate) -> f64 {
    let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    if se == 0.0 {
        if a.mean == b.mean { 0.0 } else { f64::INFINITY }
    } else {
        (a.mean - b.mean).abs() / se
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(aggregate(&[4.5]).unwrap(), Aggregate { mean: 4.5, stderr: 0.0, count: 1 });
        let a = aggregate(&[1.0, 3.0]).unwrap();
        assert_eq!((a.mean, a.stderr, a.count), (2.0, 1.0, 2));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn columns() {
        let a = aggregate_columns(&[vec![1.0, 0.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(a[0].mean, 2.0);
        assert_eq!(a[1].stderr, 0.0);
        assert!(aggregate_columns(&[vec![1.0], vec![]]).is_err());
    }
}
