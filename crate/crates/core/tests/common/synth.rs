//! Seeded generator of synthetic Cookie Theft sessions.
//!
//! "HC" speakers describe every part of the scene in full sentences close to
//! the reference descriptions, plus a few neutral asides. "AD" speakers
//! produce vague utterances of similar length with many filled pauses and
//! only occasional keyword fragments. Keyword coverage is the main
//! separation, so a working pipeline classifies them almost perfectly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HC_SENTENCES: &[&str] = &[
    "the boy is standing on the stool trying to grab a cookie from the jar",
    "the stool is tipping over and he is reaching up into the cupboard",
    "the girl is standing on the floor and she is looking up at the boy",
    "she looks worried but she has a little smile while she waits for a cookie",
    "the mother is washing the dishes at the sink with soap",
    "mom is busy and has turned away so she does not see the water",
    "the water is overflowing from the sink and spilling onto the floor",
    "there are dishes and cups on the counter next to the sink",
    "the window over the sink is open with a curtain on each side",
    "through the window you can see the trees and the light outside",
    "the cupboard door is open and the cookie jar lid is off",
    "the faucet is still running and her feet are getting wet in the puddle",
];

const AD_SENTENCES: &[&str] = &[
    "and then there is a little one over there doing something with it",
    "i do not really know what that one is supposed to be doing",
    "she is over there by that thing and she is just waiting",
    "there is some kind of thing up there on top of the other thing",
    "it is a kitchen i guess or maybe it is some other kind of room",
    "they are all just doing their own things in there i think",
    "well that is about it i can not see anything else in there",
    "what else is there to say about it i do not know really",
    "somebody is there and somebody else is over here on this side",
    "it seems like they have all of the things they need in there",
];

const ASIDES: &[&str] = &[
    "it is a nice day outside",
    "that is what i see in the picture",
    "i think that is everything",
    "it is a typical kitchen scene",
];

const FILLERS: &[&str] = &["uh", "um", "er"];

pub struct Subject {
    pub id: String,
    pub ad: bool,
    pub manifest_row: String,
}

fn tree_for(words: &[&str]) -> String {
    // right-branching bracketing; longer utterances give deeper trees
    let mut s = String::from("(ROOT ");
    for w in words {
        write!(s, "(X {w} ").unwrap();
    }
    s.push_str(&")".repeat(words.len()));
    s.push(')');
    s
}

fn session(rng: &mut ChaCha8Rng, ad: bool) -> Vec<(Vec<String>, usize)> {
    let mut utterances = Vec::new();
    if ad {
        let n = rng.random_range(4..8);
        for _ in 0..n {
            let source = if rng.random_bool(0.12) { HC_SENTENCES } else { AD_SENTENCES };
            let mut words: Vec<String> = source.choose(rng).unwrap().split(' ').map(str::to_string).collect();
            if source == HC_SENTENCES {
                // a fragment of a full sentence
                let keep = rng.random_range(3..6).min(words.len());
                words.truncate(keep);
            }
            let fillers = rng.random_range(1..4);
            utterances.push((words, fillers));
        }
    } else {
        let mut pool: Vec<&str> = HC_SENTENCES.to_vec();
        let asides = rng.random_range(0..3);
        pool.extend(ASIDES.choose_multiple(rng, asides));
        pool.shuffle(rng);
        for s in pool {
            let fillers = usize::from(rng.random_bool(0.15));
            utterances.push((s.split(' ').map(str::to_string).collect(), fillers));
        }
    }
    utterances
}

/// Writes a CHAT transcript, ASR hypothesis and parse trees for each of
/// `n_per_class` HC and AD subjects. Returns subjects in interleaved order.
pub fn generate(dir: &Path, n_per_class: usize, seed: u64) -> Vec<Subject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subjects = Vec::new();
    for i in 0..2 * n_per_class {
        let ad = i % 2 == 1;
        let id = format!("{}{:03}", if ad { "AD" } else { "HC" }, i / 2);
        let utterances = session(&mut rng, ad);

        let mut cha = String::from("@UTF8\n@Begin\n@Participants:\tPAR Participant, INV Investigator\n");
        cha.push_str("*INV:\tjust tell me everything you see happening in the picture .\n");
        let mut asr = String::new();
        let mut trees = String::new();
        for (words, fillers) in &utterances {
            let mut spoken: Vec<String> = words.clone();
            for _ in 0..*fillers {
                let at = rng.random_range(0..=spoken.len());
                spoken.insert(at, format!("&-{}", FILLERS.choose(&mut rng).unwrap()));
            }
            writeln!(cha, "*PAR:\t{} . \u{15}0_1000\u{15}", spoken.join(" ")).unwrap();
            // the recognizer misses more words of disfluent speech
            let error_rate = if ad { 0.3 } else { 0.08 };
            let heard: Vec<String> = spoken
                .iter()
                .map(|w| w.trim_start_matches("&-").to_string())
                .filter(|_| !rng.random_bool(error_rate))
                .collect();
            writeln!(asr, "{}", heard.join(" ")).unwrap();
            let ws: Vec<&str> = words.iter().map(String::as_str).collect();
            writeln!(trees, "{}", tree_for(&ws)).unwrap();
        }
        cha.push_str("@End\n");

        let cha_path: PathBuf = dir.join(format!("{id}.cha"));
        std::fs::write(&cha_path, cha).unwrap();
        std::fs::write(dir.join(format!("{id}.asr.txt")), asr).unwrap();
        std::fs::write(dir.join(format!("{id}.tree")), trees).unwrap();
        let label = if ad { "AD" } else { "HC" };
        subjects.push(Subject {
            manifest_row: format!("{id},{label},{id}.cha,{id}.asr.txt,{id}.tree"),
            id,
            ad,
        });
    }
    subjects
}

/// Splits into train and test with the given train fraction per class.
pub fn split(subjects: &[Subject], train_fraction: f64) -> (Vec<&Subject>, Vec<&Subject>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for ad in [false, true] {
        let class: Vec<&Subject> = subjects.iter().filter(|s| s.ad == ad).collect();
        let n_train = (class.len() as f64 * train_fraction).round() as usize;
        train.extend(&class[..n_train]);
        test.extend(&class[n_train..]);
    }
    (train, test)
}

pub fn write_manifest(dir: &Path, name: &str, subjects: &[&Subject]) -> PathBuf {
    let mut text = String::from("subject_id,label,transcript,asr,trees\n");
    for s in subjects {
        text.push_str(&s.manifest_row);
        text.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}
