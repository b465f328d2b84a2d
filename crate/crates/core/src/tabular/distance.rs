use super::dataset::Value;
use super::schema::Schema;

/// Gower dissimilarity of one attribute pair. Numeric: `|x - y| / range`
/// clamped to `[0, 1]`, zero when the range is degenerate. Categorical: 0 if
/// equal, else 1.
#[inline]
pub fn gower_term(a: Value, b: Value, range: Option<(f64, f64)>) -> f64 {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => match range {
            Some((lo, hi)) if hi > lo => ((x - y).abs() / (hi - lo)).min(1.0),
            _ => 0.0,
        },
        (Value::Cat(x), Value::Cat(y)) if x == y => 0.0,
        _ => 1.0,
    }
}

/// Mean Gower dissimilarity over all attributes.
///
/// `ranges[a]` is the `(min, max)` for numeric attribute `a` and is ignored
/// for categorical attributes.
pub fn gower_distance(a: &[Value], b: &[Value], schema: &Schema, ranges: &[Option<(f64, f64)>]) -> f64 {
    debug_assert_eq!(a.len(), schema.len());
    let attrs: Vec<usize> = (0..schema.len()).collect();
    gower_distance_on(a, b, &attrs, ranges)
}

/// Mean Gower dissimilarity restricted to the listed attributes.
pub fn gower_distance_on(a: &[Value], b: &[Value], attrs: &[usize], ranges: &[Option<(f64, f64)>]) -> f64 {
    if attrs.is_empty() {
        return 0.0;
    }
    let total: f64 = attrs
        .iter()
        .map(|&k| gower_term(a[k], b[k], ranges[k]))
        .sum();
    total / attrs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Attribute;
    use proptest::prelude::*;

    fn schema() -> Schema {
        Schema::new(vec![
            Attribute::numeric("x"),
            Attribute::categorical("c", ["a", "b"]),
        ])
        .unwrap()
    }

    const RANGES: [Option<(f64, f64)>; 2] = [Some((0.0, 10.0)), None];

    #[test]
    fn identity_is_zero() {
        let r = [Value::Num(3.0), Value::Cat(1)];
        assert_eq!(gower_distance(&r, &r, &schema(), &RANGES), 0.0);
    }

    #[test]
    fn maximal_difference_is_one() {
        let a = [Value::Num(0.0), Value::Cat(0)];
        let b = [Value::Num(10.0), Value::Cat(1)];
        assert_eq!(gower_distance(&a, &b, &schema(), &RANGES), 1.0);
    }

    #[test]
    fn half_range_numeric_equal_categorical() {
        let a = [Value::Num(0.0), Value::Cat(0)];
        let b = [Value::Num(5.0), Value::Cat(0)];
        assert_eq!(gower_distance(&a, &b, &schema(), &RANGES), 0.25);
    }

    #[test]
    fn out_of_range_clamps() {
        let a = [Value::Num(-50.0), Value::Cat(0)];
        let b = [Value::Num(50.0), Value::Cat(0)];
        assert_eq!(gower_distance(&a, &b, &schema(), &RANGES), 0.5);
    }

    #[test]
    fn degenerate_range_contributes_zero() {
        let a = [Value::Num(1.0), Value::Cat(0)];
        let b = [Value::Num(2.0), Value::Cat(1)];
        assert_eq!(gower_distance(&a, &b, &schema(), &[Some((1.0, 1.0)), None]), 0.5);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(x in -20.0f64..20.0, y in -20.0f64..20.0, c in 0u32..2, d in 0u32..2) {
            let a = [Value::Num(x), Value::Cat(c)];
            let b = [Value::Num(y), Value::Cat(d)];
            let s = schema();
            let ab = gower_distance(&a, &b, &s, &RANGES);
            let ba = gower_distance(&b, &a, &s, &RANGES);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 0.0, x == y && c == d);
        }
    }
}
