use crate::ctc::{SymbolTable, BLANK};
use crate::numkit::{argmax, Matrix, Real};

/// Per-frame argmax, lowest index on ties (so the blank wins them).
pub fn best_path<T: Real>(log_probs: &Matrix<T>) -> Vec<usize> {
    log_probs.row_iter().map(argmax).collect()
}

/// Merges adjacent repeats, then drops blanks.
pub fn collapse(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &k in path {
        if Some(k) != prev && k != BLANK {
            out.push(k);
        }
        prev = Some(k);
    }
    out
}

/// Best-path decoding to text.
pub fn greedy_decode<T: Real>(log_probs: &Matrix<T>, table: &SymbolTable) -> String {
    table.decode(&collapse(&best_path(log_probs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_hot(path: &[usize], n_sym: usize) -> Matrix<f64> {
        let mut m = Matrix::from_vec(path.len(), n_sym, vec![-10.0; path.len() * n_sym]).unwrap();
        for (t, &k) in path.iter().enumerate() {
            m[(t, k)] = 0.0;
        }
        m
    }

    #[test]
    fn collapse_rules() {
        let t = SymbolTable::default();
        let (a, b) = (t.index_of('a').unwrap(), t.index_of('b').unwrap());
        assert_eq!(greedy_decode(&one_hot(&[a, a, BLANK, b], 33), &t), "ab");
        assert_eq!(greedy_decode(&one_hot(&[BLANK, BLANK, BLANK], 33), &t), "");
        assert_eq!(greedy_decode(&one_hot(&[a, BLANK, a], 33), &t), "aa");
    }

    #[test]
    fn ties_go_to_blank() {
        let m = Matrix::from_vec(1, 3, vec![-1.0, -1.0, -2.0]).unwrap();
        assert_eq!(best_path(&m), vec![BLANK]);
    }

    proptest! {
        #[test]
        fn collapse_output_is_clean(path in prop::collection::vec(0usize..5, 0..30)) {
            let c = collapse(&path);
            prop_assert!(!c.contains(&BLANK));
            // re-expanding with blanks between symbols collapses back to itself
            let expanded: Vec<usize> = c.iter().flat_map(|&k| [k, BLANK]).collect();
            prop_assert_eq!(collapse(&expanded), c.clone());
            prop_assert_eq!(collapse(&c).len() <= c.len(), true);
        }
    }
}
