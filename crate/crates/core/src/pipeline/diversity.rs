use crate::error::{Error, Result};
use crate::stats::StyleVector;

/// Mean pairwise Euclidean distance between `mu ‖ sigma` vectors. A single
/// vector has diversity 0.
pub fn style_diversity<'a>(styles: impl IntoIterator<Item = &'a StyleVector>) -> Result<f64> {
    let points: Vec<Vec<f64>> = styles.into_iter().map(StyleVector::concat).collect();
    let Some(first) = points.first() else {
        return Err(Error::shape("diversity of an empty set"));
    };
    if points.iter().any(|p| p.len() != first.len()) {
        return Err(Error::shape("styles have differing channel counts"));
    }
    let n = points.len();
    if n == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}
