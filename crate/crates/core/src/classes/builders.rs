use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ClassError, FiniteClass, Row, MAX_DOMAIN};

/// On-disk class format: one JSON object, one string per hypothesis, with
/// character `i` giving the label of instance `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFile {
    pub domain_size: usize,
    pub hypotheses: Vec<String>,
}

fn too_many(d: u32) -> ClassError {
    ClassError::Precondition(format!("2^{d} instances exceed the supported maximum of {MAX_DOMAIN}"))
}

/// `2^d` thresholds `1_[n]`, `n = 1..=2^d`.
///
/// Instance named `k ∈ {1, ..., 2^d}` is stored as `k - 1`, so the threshold
/// `1_[n]` is the row with bits `0..n` set.
pub fn thresholds(d: u32) -> Result<FiniteClass, ClassError> {
    if d == 0 {
        return Err(ClassError::Precondition("thresholds need d >= 1".into()));
    }
    let n = 1usize.checked_shl(d).filter(|&n| n <= MAX_DOMAIN);
    let n = n.ok_or_else(|| too_many(d))?;
    FiniteClass::new(n, (1..=n).map(prefix_row))
}

/// Thresholds plus the characteristic function of
/// `E = {2^d + i : 1 <= i <= d - 1}` (1-based names; stored at `2^d + i - 1`).
///
/// Domain size is `2^d + d - 1`.
pub fn hd_prime(d: u32) -> Result<FiniteClass, ClassError> {
    if d == 0 {
        return Err(ClassError::Precondition("hd_prime needs d >= 1".into()));
    }
    let base = 1usize
        .checked_shl(d)
        .filter(|&n| n <= MAX_DOMAIN)
        .ok_or_else(|| too_many(d))?;
    let size = base + d as usize - 1;
    if size > MAX_DOMAIN {
        return Err(ClassError::DomainTooLarge(size));
    }
    let e_row: Row = (base..size).fold(0, |r, x| r | (1 << x));
    FiniteClass::new(size, (1..=base).map(prefix_row).chain([e_row]))
}

/// `{1_{x}}` for `x < n`.
pub fn singletons(n: usize) -> FiniteClass {
    assert!(n <= MAX_DOMAIN, "singletons({n}) exceeds the domain limit");
    FiniteClass::from_sorted_unchecked(n, (0..n).map(|x| 1u128 << x).collect())
}

fn prefix_row(n: usize) -> Row {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// A nonempty random class with domain `1..=max_domain` and up to
/// `max_rows` distinct rows.
pub fn random_class<R: Rng + ?Sized>(rng: &mut R, max_domain: usize, max_rows: usize) -> FiniteClass {
    let n = rng.gen_range(1..=max_domain.clamp(1, MAX_DOMAIN));
    let count = rng.gen_range(1..=max_rows.max(1));
    let mask = super::domain_mask(n);
    let rows: Vec<Row> = (0..count).map(|_| rng.gen::<u128>() & mask).collect();
    FiniteClass::new(n, rows).expect("masked rows fit the domain")
}

pub fn from_file(path: impl AsRef<Path>) -> Result<FiniteClass, ClassError> {
    let text = std::fs::read_to_string(path)?;
    from_json_str(&text)
}

/// Parses the class file format, rejecting malformed rows, wrong lengths
/// and duplicates with the line they occur on.
pub fn from_json_str(text: &str) -> Result<FiniteClass, ClassError> {
    let file: ClassFile = serde_json::from_str(text).map_err(|e| ClassError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    if file.domain_size > MAX_DOMAIN {
        return Err(ClassError::DomainTooLarge(file.domain_size));
    }
    let lines = hypothesis_lines(text);
    let line_of = |k: usize| lines.get(k).copied().unwrap_or(1);
    let mut rows = Vec::with_capacity(file.hypotheses.len());
    for (k, s) in file.hypotheses.iter().enumerate() {
        if s.chars().count() != file.domain_size {
            return Err(ClassError::Parse {
                line: line_of(k),
                msg: format!(
                    "hypothesis {k} has length {} but domain_size is {}",
                    s.chars().count(),
                    file.domain_size
                ),
            });
        }
        let mut row: Row = 0;
        for (x, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => row |= 1 << x,
                other => {
                    return Err(ClassError::Parse {
                        line: line_of(k),
                        msg: format!("hypothesis {k} has character {other:?}; expected 0 or 1"),
                    })
                }
            }
        }
        if rows.contains(&row) {
            return Err(ClassError::Parse {
                line: line_of(k),
                msg: format!("hypothesis {k} duplicates an earlier row"),
            });
        }
        rows.push(row);
    }
    FiniteClass::new(file.domain_size, rows)
}

/// 1-based line of each string literal inside the `"hypotheses"` array.
fn hypothesis_lines(text: &str) -> Vec<usize> {
    let Some(key) = text.find("\"hypotheses\"") else {
        return Vec::new();
    };
    let Some(open) = text[key..].find('[').map(|o| key + o) else {
        return Vec::new();
    };
    let mut line = 1 + text[..open].matches('\n').count();
    let mut out = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for c in text[open..].chars() {
        match c {
            '\n' => line += 1,
            _ if in_string && escaped => escaped = false,
            '\\' if in_string => escaped = true,
            '"' => {
                if !in_string {
                    out.push(line);
                }
                in_string = !in_string;
            }
            ']' if !in_string => break,
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_examples() {
        let t1 = thresholds(1).unwrap();
        assert_eq!(t1.domain_size(), 2);
        assert_eq!(t1.row_strings(), vec!["10", "11"]);
        let h = hd_prime(3).unwrap();
        assert_eq!((h.len(), h.domain_size()), (9, 10));
        assert_eq!(singletons(3).row_strings(), vec!["100", "010", "001"]);
        assert!(thresholds(0).is_err());
        assert!(thresholds(8).is_err());
    }

    #[test]
    fn file_round_trip() {
        let h = hd_prime(2).unwrap();
        assert_eq!(from_json_str(&h.to_json()).unwrap(), h);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "{\n  \"domain_size\": 3,\n  \"hypotheses\": [\n    \"101\",\n    \"10\"\n  ]\n}";
        match from_json_str(text) {
            Err(ClassError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        let dup = "{\"domain_size\": 2,\n\"hypotheses\": [\"01\",\n\"01\"]}";
        assert!(matches!(from_json_str(dup), Err(ClassError::Parse { line: 3, .. })));
        let bad = "{\"domain_size\": 2, \"hypotheses\": [\"0x\"]}";
        assert!(matches!(from_json_str(bad), Err(ClassError::Parse { line: 1, .. })));
        assert!(matches!(from_json_str("{\n\"domain_size\": }"), Err(ClassError::Parse { line: 2, .. })));
    }
}
