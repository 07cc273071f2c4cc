use super::{JobError, KeyOrder, KeyValue};

/// One reduce group: a key and its values in arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyGroup {
    pub key: String,
    pub values: Vec<String>,
}

/// Groups `pairs` by key with keys in ascending `order`.
///
/// Values keep their input order, which the runner arranges to be map task
/// index then emission order. Under [`KeyOrder::Numeric`] keys that are
/// numerically equal but spelled differently (`"7"`, `"07"`) stay distinct
/// and are ordered by their text.
pub fn shuffle_sort(pairs: Vec<KeyValue>, order: KeyOrder) -> Result<Vec<KeyGroup>, JobError> {
    match order {
        KeyOrder::Lexicographic => {
            let mut pairs = pairs;
            pairs.sort_by(|a, b| a.key.cmp(&b.key));
            Ok(group(pairs.into_iter()))
        }
        KeyOrder::Numeric => {
            let mut keyed = pairs
                .into_iter()
                .map(|kv| match parse_int(&kv.key) {
                    Some(n) => Ok((n, kv)),
                    None => Err(JobError::NonNumericKey(kv.key)),
                })
                .collect::<Result<Vec<_>, _>>()?;
            keyed.sort_by(|(na, a), (nb, b)| na.cmp(nb).then_with(|| a.key.cmp(&b.key)));
            Ok(group(keyed.into_iter().map(|(_, kv)| kv)))
        }
    }
}

fn parse_int(key: &str) -> Option<i128> {
    key.trim().parse().ok()
}

fn group(sorted: impl Iterator<Item = KeyValue>) -> Vec<KeyGroup> {
    let mut groups: Vec<KeyGroup> = Vec::new();
    for kv in sorted {
        match groups.last_mut() {
            Some(g) if g.key == kv.key => g.values.push(kv.value),
            _ => groups.push(KeyGroup { key: kv.key, values: vec![kv.value] }),
        }
    }
    groups
}
