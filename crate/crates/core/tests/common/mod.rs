//! Independent oracles and acceptance checks shared by the integration tests
//! and the workspace acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use msti_core::config::{DEFAULT_BETAS, DEFAULT_GROUP_SIZE, DEFAULT_LAMBDA_COORD};
use msti_core::dataset::{rebalance, stats, target_negatives, DatasetManifest, SplitCounts, SplitRatios};
use msti_core::ftpo_sim::{
    expected_total, gradcheck, max_attainable_total, toy_task, total_variation, train, SimConfig, SlotPolicy,
    GRADCHECK_TOLERANCE,
};
use msti_core::loss_weights::{weight_mask, weighted_nll, TokenSpan, WeightMask};
use msti_core::metrics::{coco_thresholds, visual_ap, Detection};
use msti_core::parser::{parse_response, render_response, ParsedAnswer};
use msti_core::rewards::group_advantages;
use msti_core::types::COORD_MAX;
use msti_core::{BBox, Label, RewardConfig, Sample, Split};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CheckResult = Result<String, String>;

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, limit {limit:?}"))
    }
}

// ---------------------------------------------------------------- IoU

/// Unit cells covered by both / either box, counted over the lattice after
/// compressing it to the distinct edge coordinates of the two boxes.
pub fn lattice_counts(a: [u32; 4], b: [u32; 4]) -> (u64, u64) {
    let mut xs = vec![a[0], a[2], b[0], b[2]];
    let mut ys = vec![a[1], a[3], b[1], b[3]];
    xs.sort();
    xs.dedup();
    ys.sort();
    ys.dedup();
    let inside = |bx: [u32; 4], x: u32, y: u32| bx[0] <= x && x < bx[2] && bx[1] <= y && y < bx[3];
    let (mut both, mut either) = (0u64, 0u64);
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let cells = u64::from(xw[1] - xw[0]) * u64::from(yw[1] - yw[0]);
            // Every cell of this block shares membership with its corner cell.
            let (ia, ib) = (inside(a, xw[0], yw[0]), inside(b, xw[0], yw[0]));
            if ia && ib {
                both += cells;
            }
            if ia || ib {
                either += cells;
            }
        }
    }
    (both, either)
}

/// Literal cell-by-cell count; only for small coordinates.
pub fn cell_counts(a: [u32; 4], b: [u32; 4]) -> (u64, u64) {
    let hi = a.iter().chain(&b).copied().max().unwrap_or(0);
    let inside = |bx: [u32; 4], x: u32, y: u32| bx[0] <= x && x < bx[2] && bx[1] <= y && y < bx[3];
    let (mut both, mut either) = (0, 0);
    for x in 0..hi {
        for y in 0..hi {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            both += u64::from(ia && ib);
            either += u64::from(ia || ib);
        }
    }
    (both, either)
}

pub fn oracle_iou(a: &BBox, b: &BBox) -> f64 {
    let (both, either) = lattice_counts(a.coords(), b.coords());
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

pub fn random_box<R: Rng>(rng: &mut R, max: u32) -> BBox {
    let (a, c) = (rng.gen_range(0..=max), rng.gen_range(0..=max));
    let (b, d) = (rng.gen_range(0..=max), rng.gen_range(0..=max));
    BBox::new(a.min(c).into(), b.min(d).into(), a.max(c).into(), b.max(d).into()).unwrap()
}

pub fn check_iou_suite(pairs: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        // Mix full-range boxes with coarse ones that collide often.
        let max = if i % 2 == 0 { COORD_MAX } else { 20 };
        let (a, b) = (random_box(&mut rng, max), random_box(&mut rng, max));
        let ab = a.iou(&b);
        if ab != b.iou(&a) {
            return Err(format!("asymmetric IoU for {a} {b}"));
        }
        if !(0.0..=1.0).contains(&ab) {
            return Err(format!("IoU {ab} out of bounds for {a} {b}"));
        }
        let self_iou = a.iou(&a);
        if a.area() > 0 && self_iou != 1.0 || a.area() == 0 && self_iou != 0.0 {
            return Err(format!("identity IoU {self_iou} for {a}"));
        }
        worst = worst.max((ab - oracle_iou(&a, &b)).abs());
        if max == 20 {
            let (both, either) = cell_counts(a.coords(), b.coords());
            let direct = if either == 0 { 0.0 } else { both as f64 / either as f64 };
            worst = worst.max((ab - direct).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("max deviation from lattice oracle {worst:e}"));
    }
    within(start.elapsed(), Duration::from_secs(5), "IoU suite")?;
    Ok(format!("{pairs} pairs, max deviation {worst:e}, {:?}", start.elapsed()))
}

// ---------------------------------------------------------------- AP

/// Average precision at one threshold by re-running the matching for every
/// confidence cutoff and taking the 101-point interpolated area directly.
/// Threshold comparisons are exact rational ones.
pub fn oracle_ap(dets: &[Detection], gts: &BTreeMap<String, Vec<BBox>>, t_percent: u64) -> f64 {
    let n_gt: usize = gts.values().map(Vec::len).sum();
    if n_gt == 0 {
        return if dets.is_empty() { 1.0 } else { 0.0 };
    }
    let mut ranked: Vec<(usize, &Detection)> = dets.iter().enumerate().collect();
    ranked.sort_by(|(ia, a), (ib, b)| b.confidence.partial_cmp(&a.confidence).unwrap().then(ia.cmp(ib)));

    // (tp, k) for each cutoff k = 1..=n
    let mut points = Vec::new();
    for k in 1..=ranked.len() {
        let mut taken: BTreeMap<&str, Vec<bool>> = gts.iter().map(|(id, v)| (id.as_str(), vec![false; v.len()])).collect();
        let mut tp = 0u64;
        for (_, d) in &ranked[..k] {
            let boxes = &gts[&d.image_id];
            let flags = taken.get_mut(d.image_id.as_str()).unwrap();
            let mut best: Option<(usize, u64, u64)> = None;
            for (j, g) in boxes.iter().enumerate() {
                if flags[j] {
                    continue;
                }
                let (both, either) = lattice_counts(d.bbox.coords(), g.coords());
                // Compare both/either against the current best as fractions.
                let better = match best {
                    None => true,
                    Some((_, bb, be)) => u128::from(both) * u128::from(be) > u128::from(bb) * u128::from(either),
                };
                if better {
                    best = Some((j, both, either));
                }
            }
            if let Some((j, both, either)) = best {
                if either > 0 && both * 100 >= t_percent * either {
                    flags[j] = true;
                    tp += 1;
                }
            }
        }
        points.push((tp, k as u64));
    }

    let mut area = 0.0;
    for i in 0..=100u64 {
        // recall tp/n_gt >= i/100
        let p = points
            .iter()
            .filter(|(tp, _)| tp * 100 >= i * n_gt as u64)
            .map(|&(tp, k)| tp as f64 / k as f64)
            .fold(0.0, f64::max);
        area += p;
    }
    area / 101.0
}

pub struct ApInstance {
    pub dets: Vec<Detection>,
    pub gts: BTreeMap<String, Vec<BBox>>,
}

pub fn random_ap_instance<R: Rng>(rng: &mut R) -> ApInstance {
    let snap = |rng: &mut R| {
        let a = rng.gen_range(0..=20u32) * 50;
        let b = rng.gen_range(0..=20u32) * 50;
        (a.min(b), a.max(b))
    };
    let mut gts = BTreeMap::new();
    let mut dets = Vec::new();
    for img in 0..rng.gen_range(1..=5) {
        let id = format!("img{img}");
        let mut boxes = Vec::new();
        for _ in 0..rng.gen_range(0..=4) {
            let ((x0, x1), (y0, y1)) = (snap(rng), snap(rng));
            boxes.push(BBox::new(x0.into(), y0.into(), x1.into(), y1.into()).unwrap());
        }
        for _ in 0..rng.gen_range(0..=4) {
            let bbox = if !boxes.is_empty() && rng.gen_bool(0.5) {
                // jitter a ground-truth box so IoU lands near the thresholds
                let g = boxes[rng.gen_range(0..boxes.len())];
                let j = |v: u32, rng: &mut R| (i64::from(v) + rng.gen_range(-60..=60)).clamp(0, 1000);
                let (a, b, c, d) = (j(g.xmin(), rng), j(g.ymin(), rng), j(g.xmax(), rng), j(g.ymax(), rng));
                BBox::new(a.min(c), b.min(d), a.max(c), b.max(d)).unwrap()
            } else {
                let ((x0, x1), (y0, y1)) = (snap(rng), snap(rng));
                BBox::new(x0.into(), y0.into(), x1.into(), y1.into()).unwrap()
            };
            let confidence = f64::from(rng.gen_range(1..=5u32)) / 5.0;
            dets.push(Detection { image_id: id.clone(), bbox, confidence });
        }
        gts.insert(id, boxes);
    }
    ApInstance { dets, gts }
}

pub fn check_ap_oracle(instances: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresholds = coco_thresholds();
    let mut worst: f64 = 0.0;
    for n in 0..instances {
        let inst = random_ap_instance(&mut rng);
        let report = visual_ap(&inst.dets, &inst.gts, &thresholds).map_err(|e| e.to_string())?;
        let mut sum = 0.0;
        for i in 0..10u64 {
            let t_percent = 50 + 5 * i;
            let want = oracle_ap(&inst.dets, &inst.gts, t_percent);
            let key = format!("{:.2}", t_percent as f64 / 100.0);
            let got = *report.per_threshold.get(&key).ok_or(format!("missing threshold {key}"))?;
            let dev = (got - want).abs();
            if dev > 1e-9 {
                return Err(format!("instance {n} threshold {key}: visual_ap {got} vs oracle {want}"));
            }
            worst = worst.max(dev);
            sum += want;
        }
        worst = worst.max((report.ap - sum / 10.0).abs());
        worst = worst.max((report.ap50 - oracle_ap(&inst.dets, &inst.gts, 50)).abs());
        worst = worst.max((report.ap75 - oracle_ap(&inst.dets, &inst.gts, 75)).abs());
    }
    if worst > 1e-9 {
        return Err(format!("max deviation {worst:e}"));
    }
    within(start.elapsed(), Duration::from_secs(10), "AP oracle")?;
    Ok(format!("{instances} instances, max deviation {worst:e}, {:?}", start.elapsed()))
}

pub fn check_worked_ap() -> CheckResult {
    let gts = BTreeMap::from([("i".to_string(), vec![BBox::new(0, 0, 100, 100).unwrap()])]);
    let dets = vec![Detection { image_id: "i".into(), bbox: BBox::new(0, 0, 100, 60).unwrap(), confidence: 1.0 }];
    let r = visual_ap(&dets, &gts, &coco_thresholds()).map_err(|e| e.to_string())?;
    if (r.ap, r.ap50, r.ap75) != (0.3, 1.0, 0.0) {
        return Err(format!("AP={} AP50={} AP75={}", r.ap, r.ap50, r.ap75));
    }
    Ok("AP=0.3 AP50=1 AP75=0".into())
}

// ---------------------------------------------------------------- constants

pub fn check_constants() -> CheckResult {
    let cfg = RewardConfig::default();
    let betas = [cfg.beta1, cfg.beta2, cfg.beta3, cfg.beta4, cfg.beta5];
    let ok = DEFAULT_BETAS == [0.05, 0.15, 0.4, 0.4, 0.3]
        && betas == DEFAULT_BETAS
        && DEFAULT_LAMBDA_COORD == 10.0
        && DEFAULT_GROUP_SIZE == 4
        && SimConfig::default().group_size == 4
        && COORD_MAX == 1000
        && BBox::WHOLE_IMAGE.coords() == [0, 0, 1000, 1000]
        && BBox::new(0, 0, 1001, 5).is_err();
    if ok {
        Ok("betas (0.05,0.15,0.4,0.4,0.3), lambda 10, G 4, coords [0,1000]".into())
    } else {
        Err(format!("betas {betas:?} lambda {DEFAULT_LAMBDA_COORD} G {DEFAULT_GROUP_SIZE} max {COORD_MAX}"))
    }
}

// ---------------------------------------------------------------- parser

/// A valid completion with a few random byte edits, so fuzzing also reaches
/// the field and coordinate parsers.
pub fn mutated_completion<R: Rng>(rng: &mut R) -> Vec<u8> {
    let mut bytes = render_response("look at the sign", &random_answer(rng)).into_bytes();
    for _ in 0..rng.gen_range(0..=4) {
        let at = rng.gen_range(0..=bytes.len());
        match rng.gen_range(0..4) {
            0 if at < bytes.len() => bytes[at] = rng.gen(),
            1 if at < bytes.len() => {
                bytes.remove(at);
            }
            2 => bytes.insert(at, b"(),:\"\n0123456789<>/"[rng.gen_range(0..19)]),
            _ => bytes.truncate(at),
        }
    }
    bytes
}

pub fn random_bytes<R: Rng>(rng: &mut R) -> Vec<u8> {
    const PIECES: [&str; 14] = [
        "<Think>", "</Think>", "<Answer>", "</Answer>", "Label:", "Image Objects:", "Text Objects:", "[(", ")]", ",",
        "\"sarcastic\"", "\n", "(0,0,0,0)", "9999999999",
    ];
    let len = rng.gen_range(0..=4096);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        if rng.gen_bool(0.2) {
            out.extend_from_slice(PIECES[rng.gen_range(0..PIECES.len())].as_bytes());
        } else {
            out.push(rng.gen());
        }
    }
    out.truncate(len);
    out
}

pub fn random_answer<R: Rng>(rng: &mut R) -> ParsedAnswer {
    const WORDS: [&str; 8] = ["great", "service", "Lovely", "weather", "so", "fun", "cold", "coffee"];
    let label = if rng.gen_bool(0.5) { Label::Sarcastic } else { Label::NotSarcastic };
    let boxes = (0..rng.gen_range(0..=3))
        .map(|_| loop {
            let b = random_box(rng, COORD_MAX);
            if !b.is_sentinel() {
                break b;
            }
        })
        .collect();
    let phrases: Vec<String> = (0..rng.gen_range(0..=3))
        .map(|_| (0..rng.gen_range(1..=3)).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" "))
        .collect();
    ParsedAnswer { label, boxes, keywords: phrases.join(", ") }
}

pub fn check_parser_fuzz(fuzz: usize, round_trips: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut well_formed = 0usize;
    for _ in 0..fuzz {
        let bytes = if rng.gen_bool(0.5) { random_bytes(&mut rng) } else { mutated_completion(&mut rng) };
        let text = String::from_utf8_lossy(&bytes);
        let outcome = std::panic::catch_unwind(|| parse_response(&text));
        match outcome {
            Ok(r) => well_formed += usize::from(r.format_ok),
            Err(_) => return Err(format!("parser panicked on {:?}", text)),
        }
    }
    for _ in 0..round_trips {
        let a = random_answer(&mut rng);
        let parsed = parse_response(&render_response("reasoning", &a));
        if !parsed.format_ok || parsed.answer != a {
            return Err(format!("round trip failed for {a:?}: {parsed:?}"));
        }
    }
    Ok(format!("{fuzz} fuzz inputs ({well_formed} well-formed), {round_trips} round trips, {:?}", start.elapsed()))
}

// ---------------------------------------------------------------- advantages

pub fn check_advantages(groups: usize, seed: u64) -> CheckResult {
    let eps = RewardConfig::default().epsilon_std;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_mean, mut worst_std): (f64, f64) = (0.0, 0.0);
    let mut tested = 0;
    while tested < groups {
        let g = rng.gen_range(2..=16);
        let totals: Vec<f64> = (0..g).map(|_| rng.gen_range(-0.3..1.0)).collect();
        let n = g as f64;
        let mean = totals.iter().sum::<f64>() / n;
        let std = (totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
        if std < eps {
            continue;
        }
        let adv = group_advantages(&totals, eps);
        let am = adv.iter().sum::<f64>() / n;
        let asd = (adv.iter().map(|a| (a - am).powi(2)).sum::<f64>() / n).sqrt();
        worst_mean = worst_mean.max(am.abs());
        worst_std = worst_std.max((asd - 1.0).abs());
        tested += 1;
    }
    for g in 2..=16 {
        let c = rng.gen_range(-0.3..1.0);
        if group_advantages(&vec![c; g], eps).iter().any(|&a| a != 0.0) {
            return Err(format!("constant group of {g} gave nonzero advantages"));
        }
    }
    if worst_mean >= 1e-9 || worst_std >= 1e-9 {
        return Err(format!("|mean| {worst_mean:e}, |std-1| {worst_std:e}"));
    }
    Ok(format!("{groups} groups, |mean| <= {worst_mean:e}, |std-1| <= {worst_std:e}"))
}

// ---------------------------------------------------------------- loss weights

/// Character-level tokenization with occasional two-character tokens.
fn random_tokens<R: Rng>(rng: &mut R, text: &str) -> Vec<TokenSpan> {
    let n = text.chars().count();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        let len = rng.gen_range(1..=2).min(n - i);
        spans.push(TokenSpan { index: spans.len(), start: i, end: i + len });
        i += len;
    }
    spans
}

pub fn check_loss_identities(cases: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let target = render_response("look at the sign", &random_answer(&mut rng));
        let tokens = random_tokens(&mut rng, &target);
        let logp: Vec<f64> = tokens.iter().map(|_| -rng.gen_range(0.0..8.0)).collect();
        let unweighted: f64 = -logp.iter().sum::<f64>();
        let ones = weight_mask(&target, &tokens, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((weighted_nll(&logp, &ones).map_err(|e| e.to_string())? - unweighted).abs());
        let ones_direct = WeightMask { weights: vec![1.0; tokens.len()] };
        worst = worst.max((weighted_nll(&logp, &ones_direct).unwrap() - unweighted).abs());

        let lambda = rng.gen_range(1.0..20.0);
        let mask = weight_mask(&target, &tokens, lambda).map_err(|e| e.to_string())?;
        let coord_nll: f64 = -logp.iter().zip(&mask.weights).filter(|(_, &w)| w != 1.0).map(|(lp, _)| lp).sum::<f64>();
        let weighted = weighted_nll(&logp, &mask).unwrap();
        let dev = (weighted - (unweighted + (lambda - 1.0) * coord_nll)).abs() / unweighted.max(1.0);
        worst = worst.max(dev);

        let mask2 = weight_mask(&target, &tokens, 2.0 * lambda - 1.0).unwrap();
        let excess2 = weighted_nll(&logp, &mask2).unwrap() - unweighted;
        worst = worst.max((excess2 - 2.0 * (weighted - unweighted)).abs() / unweighted.max(1.0));
    }
    if worst > 1e-12 {
        return Err(format!("max relative deviation {worst:e}"));
    }
    Ok(format!("{cases} random targets, max relative deviation {worst:e}"))
}

// ---------------------------------------------------------------- simulator

pub fn check_gradcheck(instances: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let report = gradcheck(seed, instances).map_err(|e| e.to_string())?;
    if !report.passed || report.max_relative_error >= GRADCHECK_TOLERANCE {
        return Err(format!("max relative error {:e}", report.max_relative_error));
    }
    within(start.elapsed(), Duration::from_secs(30), "gradcheck")?;
    Ok(format!("{instances} instances, max relative error {:e}, {:?}", report.max_relative_error, start.elapsed()))
}

/// Learning rate for the KL-dominated run. Plain gradient ascent on a
/// penalty of weight 1e3 is only stable for steps well below 1/beta.
pub const HIGH_KL_LR: f64 = 0.01;

pub fn check_convergence() -> CheckResult {
    let start = Instant::now();
    let (gt, tables) = toy_task();
    let init = SlotPolicy::uniform(tables).map_err(|e| e.to_string())?;
    let rc = RewardConfig::default();
    let best = max_attainable_total(&init, &gt, &rc).map_err(|e| e.to_string())?;
    let baseline = expected_total(&init, &gt, &rc).map_err(|e| e.to_string())?;

    let cfg = SimConfig { steps: 500, lr: 0.5, seed: 7, ..SimConfig::default() };
    let out = train(&init, &gt, &cfg, &rc).map_err(|e| e.to_string())?;
    let reached = expected_total(&out.final_policy, &gt, &rc).map_err(|e| e.to_string())?;
    let tail: f64 = out.curve[out.curve.len() - 50..].iter().map(|s| s.mean_total).sum::<f64>() / 50.0;
    if reached < 0.9 * best {
        return Err(format!("expected total {reached} < 0.9 x {best}"));
    }

    let kl_cfg = SimConfig { beta_kl: 1e3, lr: HIGH_KL_LR, ..cfg.clone() };
    let kl_out = train(&init, &gt, &kl_cfg, &rc).map_err(|e| e.to_string())?;
    let tv = total_variation(&kl_out.final_policy.logits, &init.logits).map_err(|e| e.to_string())?;
    let tv_max = tv.iter().copied().fold(0.0, f64::max);
    if tv_max > 0.05 {
        return Err(format!("high-KL run drifted to TV {tv:?}"));
    }
    // Without the penalty the same step size does move the policy.
    let free_cfg = SimConfig { beta_kl: 0.0, ..kl_cfg };
    let free = train(&init, &gt, &free_cfg, &rc).map_err(|e| e.to_string())?;
    let free_tv = total_variation(&free.final_policy.logits, &init.logits)
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, f64::max);
    if free_tv <= 0.05 {
        return Err(format!("control run without KL only drifted {free_tv}"));
    }
    within(start.elapsed(), Duration::from_secs(60), "convergence")?;
    Ok(format!(
        "baseline {baseline:.4} -> {reached:.4} of max {best} (trailing mean {tail:.4}); high-KL TV {tv_max:.2e}, control TV {free_tv:.3}, {:?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------- dataset

pub const REFERENCE_SPLIT_COUNTS: [(Split, usize, usize); 3] =
    [(Split::Train, 3500, 3046), (Split::Val, 711, 516), (Split::Test, 729, 513)];

fn fixture_records(split: Split, sarcastic: usize, negative: usize, prefix: &str, origin: &str) -> Vec<Sample> {
    let mut out = Vec::with_capacity(sarcastic + negative);
    for i in 0..sarcastic {
        let boxes = if i % 3 == 0 { vec![] } else { vec![BBox::new(10, 10, 500, 500).unwrap()] };
        let text = if i % 3 == 1 { "" } else { "lovely" };
        let mut s = Sample::new(format!("{prefix}-{}-s{i}", split.as_str()), "what lovely weather", Label::Sarcastic)
            .with_targets(boxes, text)
            .with_split(split);
        s.origin = Some(origin.into());
        out.push(s);
    }
    for i in 0..negative {
        let mut s = Sample::new(format!("{prefix}-{}-n{i}", split.as_str()), "a photo of a dog", Label::NotSarcastic)
            .with_split(split);
        s.origin = Some(origin.into());
        out.push(s);
    }
    out
}

/// Records with the reference per-split counts.
pub fn split_count_fixture() -> DatasetManifest {
    DatasetManifest::Relative(
        REFERENCE_SPLIT_COUNTS.iter().flat_map(|&(split, s, n)| fixture_records(split, s, n, "msti", "msti")).collect(),
    )
}

pub fn check_dataset() -> CheckResult {
    let st = stats(&split_count_fixture()).map_err(|e| e.to_string())?;
    let expect = |s, n| SplitCounts { sarcastic: s, non_sarcastic: n, total: s + n };
    let want = [
        (st.train, expect(3500, 3046)),
        (st.val, expect(711, 516)),
        (st.test, expect(729, 513)),
        (st.total, expect(4940, 4075)),
    ];
    if want.iter().any(|(got, w)| got != w) || st.total.total != 9015 {
        return Err(format!("stats {st:?}"));
    }

    // Sarcastic-only primary plus an augmentation pool, rebalanced to the
    // reference per-split ratios.
    let primary = DatasetManifest::Relative(
        REFERENCE_SPLIT_COUNTS.iter().flat_map(|&(split, s, _)| fixture_records(split, s, 0, "msti", "msti")).collect(),
    );
    let donors = DatasetManifest::Relative(fixture_records(Split::Train, 0, 5000, "pool", "msd"));
    let mut ratios = SplitRatios::uniform(0.0);
    for &(split, s, n) in &REFERENCE_SPLIT_COUNTS {
        ratios = ratios.with(split, n as f64 / (s + n) as f64);
    }
    let mut outputs = Vec::new();
    for seed in [1u64, 1, 2] {
        outputs.push(rebalance(&primary, &donors, &ratios, seed).map_err(|e| e.to_string())?);
    }
    if outputs[0] != outputs[1] {
        return Err("rebalance is not deterministic for a fixed seed".into());
    }
    if outputs[0] == outputs[2] {
        return Err("different seeds picked identical donors".into());
    }
    let st = stats(&outputs[0]).map_err(|e| e.to_string())?;
    for &(split, s, _) in &REFERENCE_SPLIT_COUNTS {
        let c = st.split(split);
        let r = ratios.get(split);
        let target = r * s as f64 / (1.0 - r);
        if (c.non_sarcastic as f64 - target).abs() > 1.0 || c.non_sarcastic != target_negatives(s, r) {
            return Err(format!("{split}: {} non-sarcastic vs target {target}", c.non_sarcastic));
        }
    }
    if st.total != expect(4940, 4075) {
        return Err(format!("rebalanced totals {:?}", st.total));
    }
    Ok("split counts exact; rebalance reproduces them deterministically per seed".into())
}
