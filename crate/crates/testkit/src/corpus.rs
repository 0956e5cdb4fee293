use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const APPS: [&str; 4] = ["alpha-bank", "beta-pay", "gamma-wallet", "delta-cash"];

/// A 200-line dump with planted rejects at each funnel stage.
#[derive(Debug, Clone)]
pub struct FunnelDump {
    pub jsonl: String,
    pub raw: usize,
    pub duplicates: usize,
    pub noisy: usize,
    pub language: usize,
    pub empty: usize,
    pub kept: usize,
}

fn line(id: &str, app: &str, text: &str, rating: u8, day: u32, thumbs: u64) -> Value {
    json!({
        "review_id": id,
        "app_id": app,
        "text": text,
        "rating": rating,
        "posted_at": format!("2023-{:02}-{:02}T08:30:00Z", 1 + day % 12, 1 + day % 28),
        "thumbs_up": thumbs,
        "app_version": format!("1.{}", day % 5),
    })
}

pub fn funnel_dump() -> FunnelDump {
    let words = [
        "smooth", "banking", "transfer", "quick", "login", "fails", "balance", "update", "needed",
        "wallet", "support", "reply",
    ];
    let bn_words = ["লেনদেন", "দ্রুত", "অ্যাপ", "ব্যাংক", "সমস্যা", "টাকা", "ভালো", "লাগছে"];
    let noisy = ["👍👍👍", "5", "ok", "!!!", "https://x.co/abc", "👌 🙏", "...", "10/10", "A+", "😡"];
    let foreign = [
        "यह ऐप बहुत अच्छा है",
        "这个应用很好用 真的",
        "هذا التطبيق جيد جدا",
        "Это приложение хорошее",
        "この アプリ は 便利 です",
    ];
    let stop_only = ["the the and of", "is it to be", "এবং এই যে", "you are so", "কিন্তু এবং তবে"];

    let mut junk = Vec::new();
    for i in 0..15usize {
        junk.push((APPS[i % 4], noisy[i % noisy.len()], 5));
    }
    for i in 0..20usize {
        junk.push((APPS[i % 4], foreign[i % foreign.len()], 4));
    }
    for i in 0..15usize {
        junk.push((APPS[i % 4], stop_only[i % stop_only.len()], 2));
    }
    // Round-robin over the three kinds so each is spread through the dump.
    let mut kinds = [0..15usize, 15..35, 35..50];
    let mut order = Vec::with_capacity(junk.len());
    while order.len() < junk.len() {
        for kind in kinds.iter_mut() {
            order.extend(kind.next());
        }
    }
    let mut junk_iter = order.into_iter();

    let mut ordered = Vec::with_capacity(200);
    let mut n = 0;
    let mut next_id = || {
        n += 1;
        format!("f{n:03}")
    };
    for i in 0..130u32 {
        let app = APPS[i as usize % 4];
        let text = if i % 4 == 3 {
            format!("{} {} {}", bn_words[i as usize % 8], bn_words[(i as usize + 3) % 8], i)
        } else {
            format!("{} {} review {i}", words[i as usize % 12], words[(i as usize + 5) % 12])
        };
        let row = line(&next_id(), app, &text, (i % 5 + 1) as u8, i, u64::from(i % 7));
        ordered.push(row.clone());
        if i % 6 == 0 && i / 6 < 20 {
            let mut dup = row;
            dup["review_id"] = json!(next_id());
            dup["thumbs_up"] = json!(99);
            ordered.push(dup);
        }
        if i % 2 == 1 && i < 100 {
            let (app, text, rating) = junk[junk_iter.next().expect("50 junk rows")];
            ordered.push(line(&next_id(), app, text, rating, i, 0));
        }
    }
    let jsonl = ordered.iter().map(|v| format!("{v}\n")).collect();
    FunnelDump {
        jsonl,
        raw: 200,
        duplicates: 20,
        noisy: 15,
        language: 20,
        empty: 15,
        kept: 130,
    }
}

/// Synthetic bilingual corpus whose sentiment words are disjoint by class.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    /// Review dump lines.
    pub reviews: Vec<Value>,
    /// One `{review_id, label, confidence, model_id}` per review. About 90%
    /// agree with the star label.
    pub sentiment: Vec<Value>,
    /// `{review_id, aspect, polarity, confidence}` for every planted aspect cue.
    pub absa: Vec<Value>,
}

impl PlantedCorpus {
    pub fn dump_jsonl(&self) -> String {
        to_jsonl(&self.reviews)
    }

    pub fn sentiment_jsonl(&self) -> String {
        to_jsonl(&self.sentiment)
    }

    pub fn absa_jsonl(&self) -> String {
        to_jsonl(&self.absa)
    }
}

fn to_jsonl(values: &[Value]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

const EN_CLASS: [&[&str]; 3] = [
    &["terrible", "awful", "horrible", "worst", "useless", "pathetic", "disappointing", "broken", "hate", "annoying"],
    &["okay", "average", "decent", "mediocre", "fine", "moderate", "ordinary", "acceptable", "fair", "alright"],
    &["excellent", "wonderful", "amazing", "love", "perfect", "helpful", "great", "superb", "fantastic", "brilliant"],
];
const BN_CLASS: [&[&str]; 3] = [
    &["জঘন্য", "বাজে", "খারাপ", "ভয়ানক", "বিরক্তিকর", "ব্যর্থ", "অকেজো"],
    &["মোটামুটি", "চলনসই", "মাঝারি", "গড়পড়তা", "সাদামাটা"],
    &["চমৎকার", "অসাধারণ", "দারুণ", "ভালোবাসি", "সেরা", "উপকারী", "প্রশংসনীয়"],
];
const EN_FILLER: [&str; 6] = ["app", "bank", "account", "mobile", "today", "service"];
const BN_FILLER: [&str; 4] = ["অ্যাপ", "ব্যাংক", "একাউন্ট", "মোবাইল"];
/// (cue, aspect) pairs planted into texts.
const EN_CUES: [(&str, &str); 6] = [
    ("design", "UI/UX"),
    ("otp", "Security"),
    ("loading", "Speed/Performance"),
    ("helpline", "Customer Service"),
    ("feature", "Features"),
    ("transfer", "Transaction Processing"),
];
const BN_CUES: [(&str, &str); 3] = [
    ("ডিজাইন", "UI/UX"),
    ("ওটিপি", "Security"),
    ("লেনদেন", "Transaction Processing"),
];

const LABELS: [&str; 3] = ["negative", "neutral", "positive"];

/// 1,000 reviews across four apps, about a quarter in Bangla, dated
/// 2021-2025, with thumbs-up counts and app versions.
pub fn planted_corpus(seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reviews = Vec::new();
    let mut sentiment = Vec::new();
    let mut absa = Vec::new();
    for i in 0..1000usize {
        let class = match rng.gen_range(0..10) {
            0..=3 => 2,
            4..=5 => 1,
            _ => 0,
        };
        let rating: u8 = match class {
            0 => rng.gen_range(1..=2),
            1 => 3,
            _ => rng.gen_range(4..=5),
        };
        let bangla = rng.gen_bool(0.25);
        let (class_words, fillers, cues): (&[&str], &[&str], &[(&str, &str)]) = if bangla {
            (BN_CLASS[class], &BN_FILLER, &BN_CUES)
        } else {
            (EN_CLASS[class], &EN_FILLER, &EN_CUES)
        };
        let mut words: Vec<&str> = Vec::new();
        for _ in 0..rng.gen_range(3..=5) {
            words.push(class_words[rng.gen_range(0..class_words.len())]);
        }
        for _ in 0..rng.gen_range(1..=3) {
            words.push(fillers[rng.gen_range(0..fillers.len())]);
        }
        let mut planted: Vec<&str> = Vec::new();
        if rng.gen_bool(0.6) {
            let (cue, aspect) = cues[rng.gen_range(0..cues.len())];
            words.push(cue);
            planted.push(aspect);
        }
        words.shuffle(&mut rng);
        let text = words.join(" ");

        let app = APPS[rng.gen_range(0..APPS.len())];
        let year = rng.gen_range(2021..=2025);
        let month = rng.gen_range(1..=12u32);
        let day = rng.gen_range(1..=28u32);
        let thumbs: u64 = if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..30) };
        let id = format!("r{i:04}");
        reviews.push(json!({
            "review_id": id,
            "app_id": app,
            "text": text,
            "rating": rating,
            "posted_at": format!("{year}-{month:02}-{day:02}T{:02}:{:02}:00Z", rng.gen_range(0..24), rng.gen_range(0..60)),
            "thumbs_up": thumbs,
            "app_version": format!("{}.{}", year - 2020, (month - 1) / 6),
        }));

        let model_class = if rng.gen_bool(0.9) { class } else { (class + rng.gen_range(1..3)) % 3 };
        let confidence = f64::from(rng.gen_range(50..100u32)) / 100.0;
        sentiment.push(json!({
            "review_id": id,
            "label": LABELS[model_class],
            "confidence": confidence,
            "model_id": "xlmr-ots",
        }));
        for aspect in planted {
            let polarity = if rng.gen_bool(0.85) { class } else { rng.gen_range(0..3) };
            absa.push(json!({
                "review_id": id,
                "aspect": aspect,
                "polarity": LABELS[polarity],
                "confidence": f64::from(rng.gen_range(50..100u32)) / 100.0,
            }));
        }
    }
    PlantedCorpus {
        reviews,
        sentiment,
        absa,
    }
}
