//! Small deterministic stand-ins for the external datasets, generated on
//! demand so the full pipelines can run without downloads.
//!
//! * [`write_mini_newsgroups`] writes a 200-document, two-category corpus in
//!   the by-date archive layout.
//! * [`write_synthetic_compas`] writes a 500-row CSV with the COMPAS column
//!   schema, including a few rows with nulls and malformed timestamps.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::error::Result;
use crate::ingest::{TEST_DIR, TRAIN_DIR};
use crate::rng::{rng_from_seed, Rng};

pub const MINI_NEWSGROUPS_CATEGORIES: (&str, &str) = ("sci.electronics", "sci.crypt");
pub const MINI_NEWSGROUPS_DOCS: usize = 200;
pub const SYNTHETIC_COMPAS_ROWS: usize = 500;

const FILLER: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "that", "it", "for", "you", "on", "with", "this", "be", "are", "not",
    "have", "as", "or", "but", "can", "would", "if", "an", "what", "there", "about", "just", "some", "one",
];

const ELECTRONICS: &[&str] = &[
    "circuit", "voltage", "resistor", "capacitor", "amplifier", "power", "ground", "wire", "signal", "battery",
    "transistor", "diode", "current", "led", "board", "solder", "frequency", "oscillator", "supply", "chip",
];

const CRYPT: &[&str] = &[
    "encryption", "key", "clipper", "escrow", "nsa", "algorithm", "des", "rsa", "pgp", "crypto", "secure",
    "privacy", "government", "cipher", "wiretap", "security", "public", "bits", "keys", "chip",
];

const ELECTRONICS_SENDERS: &[(&str, &str)] = &[
    ("jsmith", "ee.purdue.edu"),
    ("mkelly", "hp.com"),
    ("rwilson", "ti.com"),
    ("dlee", "cs.utexas.edu"),
];

const CRYPT_SENDERS: &[(&str, &str)] = &[
    ("strnlght", "netcom.com"),
    ("amanda", "netcom.com"),
    ("pmetzger", "lehman.com"),
    ("tcmay", "netcom.com"),
];

fn body(rng: &mut Rng, own: &[&str], other: &[&str], len: usize) -> String {
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let u: f64 = rng.random();
        let pool = if u < 0.55 {
            FILLER
        } else if u < 0.9 {
            own
        } else {
            other
        };
        words.push(*pool.choose(rng).expect("word pools are nonempty"));
    }
    let mut text = String::new();
    for line in words.chunks(12) {
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    text
}

fn message(rng: &mut Rng, category: usize) -> String {
    let (own, other, senders) = if category == 0 {
        (ELECTRONICS, CRYPT, ELECTRONICS_SENDERS)
    } else {
        (CRYPT, ELECTRONICS, CRYPT_SENDERS)
    };
    let (user, host) = senders.choose(rng).expect("sender lists are nonempty");
    let len = rng.random_range(40..120);
    let subject: Vec<&str> = (0..3).map(|_| *own.choose(rng).unwrap()).collect();
    let mut text = format!(
        "From: {user}@{host}\nSubject: Re: {}\nLines: {}\n\n",
        subject.join(" "),
        len / 12 + 1
    );
    text.push_str(&body(rng, own, other, len));
    if category == 1 && *user == "strnlght" {
        text.push_str("David Sternlight\n");
    }
    text
}

/// Writes the mini corpus under `root` (80 train and 20 test documents per
/// category). Output is a pure function of `seed`.
pub fn write_mini_newsgroups(root: &Path, seed: u64) -> Result<()> {
    let mut rng = rng_from_seed(seed);
    let cats = [MINI_NEWSGROUPS_CATEGORIES.0, MINI_NEWSGROUPS_CATEGORIES.1];
    let per_cat = MINI_NEWSGROUPS_DOCS / 2;
    let n_train = per_cat * 4 / 5;
    for (c, cat) in cats.iter().enumerate() {
        for split in [TRAIN_DIR, TEST_DIR] {
            fs::create_dir_all(root.join(split).join(cat))?;
        }
        for i in 0..per_cat {
            let split = if i < n_train { TRAIN_DIR } else { TEST_DIR };
            let id = 50_000 + c * 1_000 + i;
            fs::write(root.join(split).join(cat).join(id.to_string()), message(&mut rng, c))?;
        }
    }
    Ok(())
}

const RACES: &[(&str, f64)] = &[
    ("African-American", 0.51),
    ("Caucasian", 0.34),
    ("Hispanic", 0.08),
    ("Other", 0.05),
    ("Asian", 0.01),
    ("Native American", 0.01),
];

fn pick_race(rng: &mut Rng) -> &'static str {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (r, p) in RACES {
        acc += p;
        if u < acc {
            return r;
        }
    }
    RACES[0].0
}

/// Writes a COMPAS-shaped CSV with `SYNTHETIC_COMPAS_ROWS` rows.
///
/// The risk label is driven by priors count, age, juvenile felony and
/// misdemeanour counts and days in jail. Every 40th row has an empty
/// `days_b_screening_arrest` and every 97th row a malformed jail timestamp.
pub fn write_synthetic_compas(path: &Path, seed: u64) -> Result<()> {
    let mut rng = rng_from_seed(seed);
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(
        out,
        "id,name,sex,dob,age,age_cat,race,juv_fel_count,decile_score,juv_misd_count,juv_other_count,priors_count,days_b_screening_arrest,c_jail_in,c_jail_out,c_charge_degree,is_recid,score_text"
    )?;
    let noise = Normal::new(0.0, 0.6).expect("valid normal");
    let stay = Exp::new(1.0 / 6.0).expect("valid exponential");
    let priors = Poisson::new(2.5).expect("valid poisson");
    let juv = Poisson::new(0.15).expect("valid poisson");
    let misd = Poisson::new(0.5).expect("valid poisson");
    let origin = NaiveDate::from_ymd_opt(2013, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    for id in 1..=SYNTHETIC_COMPAS_ROWS {
        let sex = if rng.random::<f64>() < 0.8 { "Male" } else { "Female" };
        let age: u32 = 18 + (rng.random::<f64>().powf(1.6) * 52.0) as u32;
        let race = pick_race(&mut rng);
        let juv_fel = juv.sample(&mut rng) as u32;
        let juv_misd = misd.sample(&mut rng) as u32;
        let juv_other = juv.sample(&mut rng) as u32;
        let prior = priors.sample(&mut rng) as u32 + if rng.random::<f64>() < 0.2 { rng.random_range(3..15) } else { 0 };
        let screening: i32 = if rng.random::<f64>() < 0.7 { -1 } else { rng.random_range(-20..5) };
        let jail_in = origin + Duration::minutes(rng.random_range(0..(2 * 365 * 24 * 60)));
        let days: f64 = stay.sample(&mut rng);
        let jail_out = jail_in + Duration::seconds((days * 86_400.0) as i64);
        let degree = if rng.random::<f64>() < 0.65 { "F" } else { "M" };

        let latent = 0.35 * prior as f64 - 0.07 * (age as f64 - 35.0)
            + 1.2 * juv_fel as f64
            + 0.9 * juv_misd as f64
            + 0.12 * days
            + noise.sample(&mut rng);
        let (score, decile) = if latent < 0.8 {
            ("Low", 1 + (latent.max(-3.0) + 3.0) as u32)
        } else if latent < 2.2 {
            ("Medium", 5 + (latent - 0.8) as u32 * 2)
        } else {
            ("High", 8 + ((latent - 2.2) as u32).min(2))
        };
        let age_cat = match age {
            0..=24 => "Less than 25",
            25..=45 => "25 - 45",
            _ => "Greater than 45",
        };
        let dob = (origin - Duration::days(365 * age as i64 + 100)).format("%Y-%m-%d");
        let screening_field = if id % 40 == 0 { String::new() } else { screening.to_string() };
        let jail_in_field = if id % 97 == 0 {
            "unknown".to_string()
        } else {
            jail_in.format("%Y-%m-%d %H:%M:%S").to_string()
        };
        writeln!(
            out,
            "{id},person {id},{sex},{dob},{age},{age_cat},{race},{juv_fel},{decile},{juv_misd},{juv_other},{prior},{screening_field},{jail_in_field},{},{degree},{},{score}",
            jail_out.format("%Y-%m-%d %H:%M:%S"),
            u8::from(rng.random::<f64>() < 0.45),
        )?;
    }
    out.flush()?;
    Ok(())
}
