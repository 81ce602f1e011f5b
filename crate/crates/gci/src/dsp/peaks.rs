//! Local extrema with a flat-run midpoint rule.

/// A strict local extremum. For a plateau (equal neighboring samples) the
/// reported index is the plateau midpoint, rounded down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub index: usize,
    pub value: f64,
}

/// Local minima: positions where the first difference changes sign from
/// negative to positive. Endpoints never qualify.
pub fn local_minima(x: &[f64]) -> Vec<Extremum> {
    extrema(x, false)
}

/// Local maxima: first-difference sign change from positive to negative.
pub fn local_maxima(x: &[f64]) -> Vec<Extremum> {
    extrema(x, true)
}

fn extrema(x: &[f64], maxima: bool) -> Vec<Extremum> {
    let mut out = Vec::new();
    // Sign of the last nonzero difference, and the sample index where the
    // current plateau began (the sample just after that difference).
    let mut prev_sign = 0i8;
    let mut plateau_start = 0usize;
    for i in 1..x.len() {
        let d = x[i] - x[i - 1];
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            continue;
        };
        let turning = if maxima {
            prev_sign == 1 && sign == -1
        } else {
            prev_sign == -1 && sign == 1
        };
        if turning {
            let index = (plateau_start + i - 1) / 2;
            out.push(Extremum { index, value: x[index] });
        }
        prev_sign = sign;
        plateau_start = i;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_valley_and_peak() {
        let x = [3.0, 1.0, 2.0, 5.0, 2.0];
        let mins = local_minima(&x);
        assert_eq!(mins.len(), 1);
        assert_eq!(mins[0].index, 1);
        let maxs = local_maxima(&x);
        assert_eq!(maxs.len(), 1);
        assert_eq!(maxs[0].index, 3);
    }

    #[test]
    fn plateau_reports_midpoint() {
        let x = [3.0, 1.0, 1.0, 1.0, 2.0];
        let mins = local_minima(&x);
        assert_eq!(mins.len(), 1);
        assert_eq!(mins[0].index, 2);
        // Even-length plateau rounds down.
        let x2 = [3.0, 1.0, 1.0, 2.0];
        assert_eq!(local_minima(&x2)[0].index, 1);
    }

    #[test]
    fn monotone_and_constant_have_no_extrema() {
        assert!(local_minima(&[1.0, 2.0, 3.0, 4.0]).is_empty());
        assert!(local_maxima(&[1.0, 2.0, 3.0, 4.0]).is_empty());
        assert!(local_minima(&[2.0; 10]).is_empty());
        assert!(local_maxima(&[2.0; 10]).is_empty());
    }

    #[test]
    fn endpoint_plateaus_do_not_count() {
        // Falls to a plateau that runs into the end: not a minimum.
        assert!(local_minima(&[3.0, 1.0, 1.0]).is_empty());
        // Plateau at the start that then rises: not a minimum either.
        assert!(local_minima(&[1.0, 1.0, 2.0]).is_empty());
    }

    #[test]
    fn alternating_signal_finds_every_extremum() {
        let x = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        assert_eq!(local_maxima(&x).iter().map(|e| e.index).collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(local_minima(&x).iter().map(|e| e.index).collect::<Vec<_>>(), vec![2, 4]);
    }
}
