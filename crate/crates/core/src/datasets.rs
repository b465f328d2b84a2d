//! Seeded desk-scale stand-in for the Adult census table.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::rng;
use crate::tabular::{Attribute, Dataset, Schema, Value};

pub const MINI_ADULT_TARGET: &str = "income";
pub const MINI_ADULT_GTCAP_KEYS: [&str; 3] = ["workclass", "education", "marital_status"];

pub fn mini_adult_schema() -> Schema {
    Schema::new(vec![
        Attribute::numeric("age"),
        Attribute::categorical("workclass", ["Private", "Self-emp", "Gov", "Without-pay"]),
        Attribute::categorical(
            "education",
            ["HS-grad", "Some-college", "Bachelors", "Masters", "Doctorate"],
        ),
        Attribute::categorical("marital_status", ["Never-married", "Married", "Divorced"]),
        Attribute::categorical("sex", ["Male", "Female"]),
        Attribute::numeric("hours_per_week"),
        Attribute::numeric("capital_gain"),
        Attribute::categorical("income", ["<=50K", ">50K"]),
    ])
    .expect("static schema is valid")
}

/// Five categorical and three numeric attributes driven by two latent
/// factors, so income, education and hours are strongly correlated.
pub fn mini_adult(n_rows: usize, seed: u64) -> Dataset {
    let mut rng = rng::rng(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let status: f64 = std.sample(&mut rng);
        let life: f64 = std.sample(&mut rng);

        let age = (38.0 + 12.0 * life + 2.0 * std.sample(&mut rng)).clamp(17.0, 90.0).round();

        let edu_score = status + 0.6 * std.sample(&mut rng);
        let education = match edu_score {
            s if s < -0.5 => 0,
            s if s < 0.2 => 1,
            s if s < 0.9 => 2,
            s if s < 1.6 => 3,
            _ => 4,
        };

        let u: f64 = rng.random();
        let workclass = if u < 0.03 {
            3
        } else if u < 0.15 + 0.05 * status.max(0.0) {
            1
        } else if u < 0.35 {
            2
        } else {
            0
        };

        let married_score = 0.08 * (age - 30.0) + 0.4 * status + std.sample(&mut rng);
        let marital = if married_score < -0.3 {
            0
        } else if married_score < 1.8 {
            1
        } else {
            2
        };

        let male = rng.random::<f64>() < 0.55;
        let hours = (40.0 + 6.0 * status + if male { 4.0 } else { -2.0 } + 4.0 * std.sample(&mut rng))
            .clamp(1.0, 99.0)
            .round();

        let capital_gain = (7.0 + 0.5 * status + 0.25 * std.sample(&mut rng)).exp().round();

        let logit = 2.2 * status + 0.04 * (age - 38.0) + 0.5 * male as u8 as f64
            + 0.06 * (hours - 40.0)
            + if marital == 1 { 0.8 } else { -0.4 }
            - 1.3;
        let income = (rng.random::<f64>() < 1.0 / (1.0 + (-logit).exp())) as u32;

        rows.push(vec![
            Value::Num(age),
            Value::Cat(workclass),
            Value::Cat(education),
            Value::Cat(marital),
            Value::Cat(if male { 0 } else { 1 }),
            Value::Num(hours),
            Value::Num(capital_gain),
            Value::Cat(income),
        ]);
    }
    Dataset::new(mini_adult_schema(), rows).expect("generator emits valid rows")
}
