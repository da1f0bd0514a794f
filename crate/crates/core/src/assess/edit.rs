use crate::ctc::normalize_text;
use crate::error::{Error, Result};

/// Levenshtein distance over Unicode scalar values with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Lowercases, trims and collapses whitespace runs to single spaces.
pub fn normalize_transcript(s: &str) -> String {
    normalize_text(s).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Character error rate: edit distance divided by the normalised reference
/// length. Can exceed 1 when the hypothesis is much longer.
pub fn cer(hypothesis: &str, reference: &str) -> Result<f64> {
    let r = normalize_transcript(reference);
    if r.is_empty() {
        return Err(Error::invalid("CER reference is empty"));
    }
    let h = normalize_transcript(hypothesis);
    Ok(edit_distance(&h, &r) as f64 / r.chars().count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_distances() {
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("flaw", "lawn"), 2);
    }

    #[test]
    fn cer_examples() {
        assert_eq!(cer("hello there", "hello there").unwrap(), 0.0);
        assert_eq!(cer("ab", "abcd").unwrap(), 0.5);
        assert_eq!(cer("", "abc").unwrap(), 1.0);
        assert_eq!(cer("abcabc", "abc").unwrap(), 1.0);
        assert_eq!(cer("  Hello   THERE ", "hello there").unwrap(), 0.0);
        assert!(cer("abc", "   ").is_err());
    }

    proptest! {
        #[test]
        fn bounded_by_lengths(a in "[ab]{0,8}", b in "[ab]{0,8}") {
            let d = edit_distance(&a, &b);
            prop_assert!(d >= a.len().abs_diff(b.len()));
            prop_assert!(d <= a.len().max(b.len()));
        }
    }
}
