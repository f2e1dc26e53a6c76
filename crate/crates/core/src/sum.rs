//! Compensated summation.

/// Neumaier's improved Kahan sum.
pub fn neumaier<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    #[test]
    fn recovers_cancelled_terms() {
        assert_eq!(super::neumaier([1.0, 1e100, 1.0, -1e100]), 2.0);
    }
}
