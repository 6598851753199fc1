//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::time::Instant;

use fieldwork::analytics::{
    quiz_stats, read_costs, read_likert, read_quiz_scores, sus_item_stats, sus_overall, sus_participant_score, CostReport,
};
use fieldwork::assets::SAMPLE_CORPUS;
use fieldwork::corpus::{build_index, retrieve, ChunkConfig, HashEmbedder, IndexConfig};
use fieldwork::engine::{Choice, Engine, EngineError, GameSession, Lifeline, Phase, QuizRuntime};
use fieldwork::narrative::{parse_quiz, validate_quiz_composition, Category, NarrativeError, QuizQuestion, QuizSpec};
use fieldwork::service::{build_engine, play, Script, ServiceConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUS_CSV: &str = include_str!("../assets/study/sus_responses.csv");
const QUIZ_CSV: &str = include_str!("../assets/study/quiz_scores.csv");
const COST_CSV: &str = include_str!("../assets/study/costs.csv");
const GOLDEN_SCRIPT: &str = include_str!("../assets/scripts/golden.play");
const GOLDEN_TRANSCRIPT: &str = include_str!("golden/seed42.json");

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn engine() -> Engine {
    let mut config = ServiceConfig::default();
    config.server.image_dir = None;
    build_engine(&config).expect("offline engine builds")
}

fn sus_scores() -> Check {
    let started = Instant::now();
    let m = read_likert(SUS_CSV.as_bytes()).map_err(|e| e.to_string())?;
    let printed = [93, 75, 88, 85, 67, 72, 87, 85, 72, 93, 80, 93, 87, 90];
    let got: Vec<u32> = m.responses().iter().map(|r| sus_participant_score(r).unwrap()).collect();
    ensure!(got == printed, "per-participant scores {got:?}");
    let overall = sus_overall(&m).map_err(|e| e.to_string())?;
    ensure!((overall - 83.4).abs() <= 0.05, "overall {overall}");
    let elapsed = started.elapsed();
    ensure!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    Ok(format!("14/14 participants exact, overall {overall:.3} (reported as {:.0}), {elapsed:.1?}", overall.round()))
}

fn sus_items() -> Check {
    let m = read_likert(SUS_CSV.as_bytes()).map_err(|e| e.to_string())?;
    let stats = sus_item_stats(&m).map_err(|e| e.to_string())?;
    // printed mean, median, sample std per item
    let printed = [
        (5.79, 6.0, 1.58),
        (1.86, 2.0, 0.77),
        (6.36, 6.5, 0.74),
        (1.00, 1.0, 0.00),
        (4.57, 4.0, 1.65),
        (3.21, 3.0, 1.48),
        (6.71, 7.0, 0.47),
        (1.43, 1.0, 0.51),
        (5.86, 6.0, 1.10),
        (1.79, 2.0, 1.05),
    ];
    let mut worst = 0.0f64;
    for (s, (mean, median, sd)) in stats.iter().zip(printed) {
        for (got, want, what) in [(s.mean, mean, "mean"), (s.median, median, "median"), (s.sample_std, sd, "std")] {
            let d = (got - want).abs();
            ensure!(d <= 0.01, "item {} {what} {got:.4} vs {want}", s.item);
            worst = worst.max(d);
        }
    }
    Ok(format!("30/30 values within 0.01 (max deviation {worst:.4})"))
}

fn quiz_statistics() -> Check {
    let scores: Vec<u32> = read_quiz_scores(QUIZ_CSV.as_bytes()).map_err(|e| e.to_string())?.into_iter().map(|(_, s)| s).collect();
    ensure!(scores == [7, 9, 8, 8, 8, 7, 6, 8, 7, 7], "scores {scores:?}");
    let s = quiz_stats(&scores).map_err(|e| e.to_string())?;
    // independent: sum 75, squared deviations 6.5
    let std = (6.5f64 / 10.0).sqrt();
    ensure!((s.mean - 7.5).abs() <= 0.005, "mean {}", s.mean);
    ensure!((s.median - 7.5).abs() <= 0.005, "median {}", s.median);
    ensure!((s.population_std - 0.806).abs() <= 0.005 && (s.population_std - std).abs() < 1e-12, "std {}", s.population_std);
    Ok(format!("mean {:.2}, median {:.2}, population std {:.4}", s.mean, s.median, s.population_std))
}

fn cost_total() -> Check {
    let ledger = read_costs(COST_CSV.as_bytes()).map_err(|e| e.to_string())?;
    let costs: Vec<f64> = ledger.entries().iter().map(|e| e.cost_eur).collect();
    ensure!(costs == [5.0, 18.0, 1.0, 9.0], "rows {costs:?}");
    let r = CostReport::compute(&ledger).map_err(|e| e.to_string())?;
    ensure!(r.total_rounded == 33 && r.total_eur == 33.0, "total {}", r.total_eur);
    Ok("5 + 18 + 1 + 9 = 33 EUR".into())
}

fn golden() -> Check {
    let started = Instant::now();
    let e = engine();
    let script = Script::parse(GOLDEN_SCRIPT).map_err(|e| e.to_string())?;
    let fresh = e.new_session("golden", 42, None).map_err(|e| e.to_string())?;
    ensure!(fresh.phase == Phase::Intro, "starts in {}", fresh.phase);
    let a = play(&e, &script, "golden", 42, None).map_err(|e| e.to_string())?.session;
    let b = play(&e, &script, "golden", 42, None).map_err(|e| e.to_string())?.session;
    let elapsed = started.elapsed();
    let (ta, tb) = (a.transcript_json(), b.transcript_json());
    ensure!(ta == tb, "two runs differ");
    ensure!(ta == GOLDEN_TRANSCRIPT, "transcript differs from the checked-in golden file");
    ensure!(a.phase == Phase::Complete, "ended in {}", a.phase);
    ensure!(a.turns.len() >= 4 && a.distinct_artifacts() == 4, "{} days, {} artifacts", a.turns.len(), a.distinct_artifacts());
    ensure!(a.quiz.as_ref().is_some_and(|q| q.answers.len() == 10), "quiz unfinished");
    ensure!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    Ok(format!("{} days, 4 artifacts, score {}/10, {} bytes identical to golden, {elapsed:.1?} for two runs", a.turns.len(), a.quiz.unwrap().score, ta.len()))
}

const LABELS: [(Category, &[&str]); 5] = [
    (Category::BookQuote, &["book_quote", "Book quote", "Quote", "book-quote"]),
    (Category::Theory, &["theory", "Theory", "THEORY"]),
    (Category::Vocabulary, &["vocabulary", "Vocabulary"]),
    (Category::Artifact, &["artifact", "Artefact", "ARTIFACT"]),
    (Category::Narrative, &["narrative", "Narrative"]),
];

fn label(c: Category, rng: &mut ChaCha8Rng) -> &'static str {
    LABELS.iter().find(|(k, _)| *k == c).map(|(_, ls)| *ls.choose(rng).unwrap()).unwrap()
}

/// Quiz text in the model output grammar, written independently of the
/// crate's own serializer, with randomized ordering and formatting.
fn quiz_fixture(cats: &[Category], correct: &[u8], rng: &mut ChaCha8Rng, tag: u64) -> String {
    let mut out = String::new();
    for (i, (&c, &k)) in cats.iter().zip(correct).enumerate() {
        let n = i + 1;
        let head = if rng.gen_bool(0.5) { format!("Q{n} [{}]", label(c, rng)) } else { format!("**Q{n}.** ({})", label(c, rng)) };
        out.push_str(&format!("{head} Question {n} of fixture {tag}?\n"));
        for (j, letter) in ['A', 'B', 'C', 'D'].into_iter().enumerate() {
            let sep = if rng.gen_bool(0.5) { ")" } else { "." };
            out.push_str(&format!("{letter}{sep} option {j} for {tag}-{n}\n"));
        }
        out.push_str(&format!("ANSWER: {}\n\n", ['A', 'B', 'C', 'D'][k as usize]));
    }
    out
}

fn quiz_composition() -> Check {
    let mut rejected = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cats: Vec<Category> = [
            Category::BookQuote,
            Category::Theory,
            Category::Vocabulary,
            Category::Vocabulary,
            Category::Vocabulary,
            Category::Artifact,
            Category::Artifact,
            Category::Narrative,
            Category::Narrative,
            Category::Narrative,
        ]
        .to_vec();
        cats.shuffle(&mut rng);
        let correct: Vec<u8> = (0..10).map(|_| rng.gen_range(0..4)).collect();
        let text = quiz_fixture(&cats, &correct, &mut rng, seed);
        let q = parse_quiz(&text).map_err(|e| format!("seed {seed}: {e}"))?;
        validate_quiz_composition(&q).map_err(|e| format!("seed {seed}: {e}"))?;
        let hist = q.histogram();
        let counts: Vec<usize> = Category::ALL.iter().map(|c| hist.get(c).copied().unwrap_or(0)).collect();
        ensure!(counts == [1, 1, 3, 2, 3], "seed {seed}: counts {counts:?}");
        for (qq, (&c, &k)) in q.questions.iter().zip(cats.iter().zip(&correct)) {
            let mut opts = qq.options.to_vec();
            opts.sort();
            opts.dedup();
            ensure!(opts.len() == 4, "seed {seed}: duplicate options in Q{}", qq.id);
            ensure!(qq.category == c && qq.correct_index == k, "seed {seed}: Q{} mis-parsed", qq.id);
        }

        // one question moved to another category
        let i = rng.gen_range(0..10);
        let to = *Category::ALL.iter().filter(|&&c| c != cats[i]).collect::<Vec<_>>().choose(&mut rng).unwrap();
        let mut bad = cats.clone();
        bad[i] = *to;
        let text = quiz_fixture(&bad, &correct, &mut rng, seed);
        let expected: BTreeMap<Category, i64> = [(cats[i], -1), (*to, 1)].into_iter().collect();
        match parse_quiz(&text).map(|q| validate_quiz_composition(&q)) {
            Ok(Err(e)) if e.deltas == expected => rejected += 1,
            other => return Err(format!("seed {seed}: expected deltas {expected:?}, got {other:?}")),
        }

        // duplicate options and a missing answer never parse
        let dup = quiz_fixture(&cats, &correct, &mut rng, seed).replacen(&format!("option 1 for {seed}-1"), &format!("option 0 for {seed}-1"), 1);
        ensure!(matches!(parse_quiz(&dup), Err(NarrativeError::QuizParse(_))), "seed {seed}: duplicate options accepted");
        let no_answer = quiz_fixture(&cats, &correct, &mut rng, seed).replacen("ANSWER:", "ANSWR", 1);
        ensure!(parse_quiz(&no_answer).is_err(), "seed {seed}: question without answer accepted");
    }
    Ok(format!("100/100 valid fixtures accepted, {rejected}/100 mis-composed fixtures rejected with exact deltas"))
}

fn grounding() -> Check {
    let e = engine();
    let mut quotes = 0;
    let mut citations = 0;
    for seed in 0..25u64 {
        let mut s = e.new_session(format!("g{seed}"), seed, None).map_err(|e| e.to_string())?;
        for day in 0..4u8 {
            let start = e.begin_turn(&mut s).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure!(SAMPLE_CORPUS.contains(&start.loading_quote), "seed {seed}: quote not verbatim: {:?}", start.loading_quote);
            quotes += 1;
            e.submit_choice(&mut s, Choice::Index(day % 3)).map_err(|e| e.to_string())?;
        }
        for question in ["What is exchanged in the Kula ring?", "How are canoes built?", "Why do the villagers sail?"] {
            let a = e.ask_about_book(&mut s, question).map_err(|e| format!("seed {seed}: {e}"))?;
            for c in &a.citations {
                ensure!(SAMPLE_CORPUS.contains(&c.span), "seed {seed}: citation not verbatim: {:?}", c.span);
                let chunk = e.index().unwrap().chunk(c.chunk_id).ok_or("citation names an unknown chunk")?;
                ensure!(chunk.text.contains(c.span.trim_end_matches(['.', ',', ';', ':', '!', '?'])), "citation outside its chunk");
                citations += 1;
            }
        }
    }
    ensure!(quotes == 100, "{quotes} quotes");
    ensure!(citations > 0, "no citations produced, nothing was checked");
    Ok(format!("{quotes}/100 loading quotes and {citations}/{citations} citation spans verbatim"))
}

/// Reference embedding: FNV-1a 64 over lowercased alphanumeric tokens (inner
/// apostrophes kept), counted into 256 buckets.
fn oracle_counts(text: &str) -> Vec<u64> {
    let mut v = vec![0u64; 256];
    let mut any = false;
    for raw in text.split(|c: char| !c.is_alphanumeric() && c != '\'') {
        let t = raw.trim_matches('\'').to_lowercase();
        if t.is_empty() {
            continue;
        }
        let mut h: u64 = 14_695_981_039_346_656_037;
        for b in t.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(1_099_511_628_211);
        }
        v[(h % 256) as usize] += 1;
        any = true;
    }
    assert!(any, "oracle corpora always contain words");
    v
}

/// Exhaustive ranking with exact integer comparisons of cosine similarity:
/// a·q/|a| > b·q/|b|  ⇔  (a·q)²|b|² > (b·q)²|a|² for non-negative dots.
fn oracle_rank(chunks: &[Vec<u64>], q: &[u64]) -> Vec<usize> {
    let dot = |a: &[u64], b: &[u64]| -> u128 { a.iter().zip(b).map(|(x, y)| u128::from(x * y)).sum() };
    let keys: Vec<(u128, u128)> = chunks.iter().map(|c| (dot(c, q), dot(c, c))).collect();
    let mut ids: Vec<usize> = (0..chunks.len()).collect();
    ids.sort_by(|&i, &j| {
        let (di, ni) = keys[i];
        let (dj, nj) = keys[j];
        (dj * dj * ni).cmp(&(di * di * nj)).then(i.cmp(&j))
    });
    ids
}

const WORDS: &[&str] = &[
    "kula", "canoe", "mwali", "soulava", "yam", "garden", "chief", "lagoon", "magic", "spell", "trade", "shell", "village", "reef",
    "Dobu", "sail", "carve", "gift", "ring", "armband", "necklace", "don't", "O'Brien",
];

fn retrieval_oracle() -> Check {
    let e = HashEmbedder::default();
    let mut queries = 0;
    let mut ties = 0;
    for corpus_seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + corpus_seed);
        let size = rng.gen_range(40..120);
        let overlap = rng.gen_range(0..size / 3);
        // repeated blocks make exact score ties common
        let blocks: Vec<String> = (0..4)
            .map(|_| (0..rng.gen_range(3..12)).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" "))
            .collect();
        let target = rng.gen_range(size..size * 30);
        let mut raw = String::new();
        while raw.chars().count() < target {
            raw.push_str(blocks.choose(&mut rng).unwrap());
            raw.push_str(". ");
        }
        let config = IndexConfig { chunk: ChunkConfig::new(size, overlap), ..Default::default() };
        let index = build_index(&raw, &config, &e).map_err(|e| e.to_string())?;
        let n = index.chunks().len();
        ensure!((1..=50).contains(&n), "corpus {corpus_seed} has {n} chunks");
        let vectors: Vec<Vec<u64>> = index.chunks().iter().map(|c| oracle_counts(&c.text)).collect();
        for _ in 0..5 {
            let query = (0..rng.gen_range(1..4)).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
            let want = oracle_rank(&vectors, &oracle_counts(&query));
            let got: Vec<usize> = retrieve(&index, &query, n, &e).map_err(|e| e.to_string())?.iter().map(|r| r.chunk.id).collect();
            ensure!(got == want, "corpus {corpus_seed}, query {query:?}: {got:?} vs oracle {want:?}");
            let k = rng.gen_range(1..=n);
            let top: Vec<usize> = retrieve(&index, &query, k, &e).map_err(|e| e.to_string())?.iter().map(|r| r.chunk.id).collect();
            ensure!(top == want[..k], "corpus {corpus_seed}: top-{k} differs");
            ties += want.windows(2).filter(|w| vectors[w[0]] == vectors[w[1]]).count();
            queries += 1;
        }
    }
    ensure!(ties > 0, "no ties exercised");
    Ok(format!("20 corpora, {queries} queries match brute force exactly ({ties} tied neighbours ordered by id)"))
}

fn random_spec(rng: &mut ChaCha8Rng) -> QuizSpec {
    let cats = [
        Category::BookQuote,
        Category::Theory,
        Category::Vocabulary,
        Category::Vocabulary,
        Category::Vocabulary,
        Category::Artifact,
        Category::Artifact,
        Category::Narrative,
        Category::Narrative,
        Category::Narrative,
    ];
    let questions = cats
        .iter()
        .enumerate()
        .map(|(i, &category)| QuizQuestion {
            id: i as u32 + 1,
            category,
            stem: format!("Question {}?", i + 1),
            options: std::array::from_fn(|j| format!("choice {j} of {}", i + 1)),
            correct_index: rng.gen_range(0..4),
        })
        .collect();
    QuizSpec { questions }
}

fn in_defense(e: &Engine, seed: u64) -> GameSession {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut s = e.new_session(format!("l{seed}"), seed, None).unwrap();
    s.phase = Phase::Defense;
    s.quiz = Some(QuizRuntime::new(random_spec(&mut rng), "quote".into(), "Kula ring".into()));
    s
}

fn lifelines() -> Check {
    let e = engine();
    let mut kept_correct = 0;
    for seed in 0..200u64 {
        let mut s = in_defense(&e, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qid = rng.gen_range(1..=10);
        let correct = s.quiz.as_ref().unwrap().spec.question(qid).unwrap().correct_index;
        let kept = e.use_fifty_fifty(&mut s, qid).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(kept.contains(&correct) && kept[0] != kept[1], "seed {seed}: kept {kept:?}, correct {correct}");
        let gone = s.quiz.as_ref().unwrap().eliminated[&qid];
        ensure!(!gone.contains(&correct) && gone[0] != gone[1], "seed {seed}: eliminated {gone:?}");
        kept_correct += 1;
        let again = e.use_fifty_fifty(&mut s, rng.gen_range(1..=10));
        ensure!(again == Err(EngineError::LifelineExhausted(Lifeline::FiftyFifty)), "seed {seed}: second fifty-fifty gave {again:?}");
        for _ in 0..2 {
            e.request_hint(&mut s, rng.gen_range(1..=10)).map_err(|e| format!("seed {seed}: {e}"))?;
        }
        let third = e.request_hint(&mut s, rng.gen_range(1..=10));
        ensure!(third == Err(EngineError::LifelineExhausted(Lifeline::Hint)), "seed {seed}: third hint gave {third:?}");
    }
    Ok(format!("{kept_correct}/200 fifty-fifties kept the answer; every 2nd fifty-fifty and 3rd hint refused"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("sus_scores", sus_scores),
        ("sus_item_statistics", sus_items),
        ("quiz_statistics", quiz_statistics),
        ("cost_total", cost_total),
        ("golden_playthrough", golden),
        ("quiz_composition", quiz_composition),
        ("grounding", grounding),
        ("retrieval_oracle", retrieval_oracle),
        ("lifelines", lifelines),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS  {name:<22} {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  {name:<22} {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name:<22} panicked");
            }
        }
    }
    // learning effects and interview findings need real participants; the
    // arithmetic and property checks above are their desk-scale stand-in
    let verdict = if failed == 0 { "PASS" } else { "FAIL" };
    println!("{verdict}  {:<22} proxy only: participant outcomes cannot be rerun offline, so this reflects the arithmetic and property checks above", "study_outcomes");
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
