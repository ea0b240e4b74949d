//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::ops::Range;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use forge_core::adoption::synthetic::{generate, SyntheticLogSpec};
use forge_core::adoption::{analyze, pearson, AdoptionOptions, BucketKey, Ingested};
use forge_core::config::ForgeConfig;
use forge_core::graph::{
    enumerate_paths, generate_spsr_corpus, CodeGraph, Edge, EdgeKind, GraphNode, PathStrategy,
    SpsrOptions,
};
use forge_core::metrics::{
    exact_match, lcp, lcp_pmf, lcs_len, rouge_lcp, LcpDistributionModel, MetricValue,
};
use forge_core::pipeline::clean::clean_file;
use forge_core::pipeline::{read_input, Language, MinHashConfig, MinHasher, RawFile};
use forge_core::segment::{
    cut_fim_samples_with, greedy_cut_baseline, parse_to_ast, structural_preservation_rate,
    FimOptions, GranularityRange, Segmenter, UnitId, UnitKind,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/mini_repo")
}

fn fixture_sources() -> Vec<RawFile> {
    read_input(&fixture_repo())
        .expect("fixture readable")
        .into_iter()
        .filter(|f| f.language != Language::Other)
        .map(|f| clean_file(&f, &Default::default()).expect("fixture cleans"))
        .collect()
}

// ---------------------------------------------------------------- metrics

fn random_string(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const ALPHABET: [char; 7] = ['a', 'b', 'c', ' ', '(', 'é', '字'];
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
        .collect()
}

fn brute_force_lcs(s: &str, r: &str) -> usize {
    let s: Vec<char> = s.chars().collect();
    let r: Vec<char> = r.chars().collect();
    let is_subseq = |sub: &[char]| {
        let mut it = r.iter();
        sub.iter().all(|c| it.any(|x| x == c))
    };
    (0u32..1 << s.len())
        .filter_map(|mask| {
            let sub: Vec<char> = (0..s.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| s[i])
                .collect();
            is_subseq(&sub).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

fn metric_properties() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut brute = 0;
    for i in 0..10_000 {
        let max_len = if i % 2 == 0 { 8 } else { 40 };
        let mut s = random_string(&mut rng, max_len);
        let r = random_string(&mut rng, max_len);
        if i % 5 == 0 {
            // Force shared prefixes so exact and extension cases occur.
            s = format!("{r}{}", random_string(&mut rng, 3));
        }
        let (ls, lr) = (s.chars().count(), r.chars().count());
        let p = lcp(&s, &r);
        let l = lcs_len(&s, &r);
        ensure(p <= ls.min(lr), || format!("lcp > min len for {s:?} {r:?}"))?;
        ensure(p <= l, || format!("lcp > lcs for {s:?} {r:?}"))?;
        ensure(p == lcp(&r, &s), || {
            format!("lcp asymmetric for {s:?} {r:?}")
        })?;
        ensure(l == lcs_len(&r, &s), || {
            format!("lcs asymmetric for {s:?} {r:?}")
        })?;
        // EM strips trailing whitespace; ROUGE-LCP is compared on the same
        // normalized pair, both through the kernels and the composite.
        let (sn, rn) = (s.trim_end(), r.trim_end());
        if !rn.is_empty() {
            let v = rouge_lcp(sn, rn).map_err(|e| e.to_string())?;
            ensure(exact_match(&s, &r) == (v == 1.0), || {
                format!("em/rouge_lcp disagree for {s:?} {r:?}: {v}")
            })?;
            let mv = MetricValue::compute(&s, &r).map_err(|e| e.to_string())?;
            ensure(
                mv.em == (mv.rouge_lcp == 1.0) && mv.em == exact_match(&s, &r),
                || format!("MetricValue em/rouge_lcp disagree for {s:?} {r:?}: {mv:?}"),
            )?;
        }
        if ls <= 8 && lr <= 8 {
            brute += 1;
            let want = brute_force_lcs(&s, &r);
            ensure(l == want, || {
                format!("lcs {l} != brute {want} for {s:?} {r:?}")
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("10000 pairs, {brute} brute-forced, {elapsed:.2?}"))
}

fn rouge_lcp_cases() -> Check {
    let cases = [
        ("abd", "abc", 2.0 / 3.0, "partial"),
        ("abc", "abc", 1.0, "exact"),
        ("abcXYZ", "abc", 2.0, "extension"),
        ("xyz", "abc", 0.0, "partial, no prefix"),
        ("abcd", "abc", 4.0 / 3.0, "extension by one"),
    ];
    for (s, r, want, label) in cases {
        let got = rouge_lcp(s, r).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("{label}: rouge_lcp({s:?},{r:?}) = {got}, want {want}")
        })?;
    }
    ensure(rouge_lcp("abcXYZ", "abc") == Ok(2.0), || {
        "extension not exactly 2.0".into()
    })?;
    Ok("partial <1, exact =1, extension >1; abcXYZ/abc = 2.0".into())
}

fn pmf_telescoping() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = rng.random_range(1..=64);
        let probs: Vec<f64> = (0..t)
            .map(|_| match rng.random_range(0..10) {
                0 => 1.0,
                1 => 0.0,
                _ => rng.random::<f64>(),
            })
            .collect();
        let model = LcpDistributionModel::new(probs).map_err(|e| e.to_string())?;
        let mut total = model.survival();
        for k in 0..t {
            total += lcp_pmf(&model, k).map_err(|e| e.to_string())?;
        }
        worst = worst.max((total - 1.0).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("100 vectors, max |sum - 1| = {worst:.1e}"))
}

// ------------------------------------------------------ pearson oracle

/// Double-double value `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn quick(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd {
            hi: s,
            lo: b - (s - a),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        Dd::quick(s.hi, s.lo + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::quick(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Dd::quick(q1, q2).add(Dd::from(q3))
    }

    fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::from(0.0);
        }
        let s = Dd::from(self.hi.sqrt());
        // One Newton step doubles the precision.
        s.add(self.sub(s.mul(s)).div(Dd::from(2.0 * s.hi)))
    }

    fn f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn dd_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = Dd::from(xs.len() as f64);
    let sum = |v: &[f64]| v.iter().fold(Dd::from(0.0), |a, &x| a.add(Dd::from(x)));
    let (mx, my) = (sum(xs).div(n), sum(ys).div(n));
    let (mut sxx, mut syy, mut sxy) = (Dd::from(0.0), Dd::from(0.0), Dd::from(0.0));
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = Dd::from(x).sub(mx);
        let dy = Dd::from(y).sub(my);
        sxx = sxx.add(dx.mul(dx));
        syy = syy.add(dy.mul(dy));
        sxy = sxy.add(dx.mul(dy));
    }
    sxy.div(sxx.mul(syy).sqrt()).f64().clamp(-1.0, 1.0)
}

/// Two-tailed Student-t p-value for a correlation with `nu` degrees of
/// freedom, from the finite trigonometric series for integer `nu`.
fn t_series_p(r: f64, nu: usize) -> f64 {
    let a = r.abs();
    let sin = a;
    let cos2 = (Dd::from(1.0).sub(Dd::from(a).mul(Dd::from(a)))).f64();
    let theta = a.asin();
    let inside = if nu % 2 == 1 {
        let mut sum = 0.0;
        if nu > 1 {
            let mut term = cos2.sqrt();
            sum += term;
            for j in 1..=(nu - 3) / 2 {
                term *= (2 * j) as f64 / (2 * j + 1) as f64 * cos2;
                sum += term;
            }
        }
        2.0 / std::f64::consts::PI * (theta + sin * sum)
    } else {
        let mut term = 1.0;
        let mut sum = term;
        for j in 1..=(nu - 2) / 2 {
            term *= (2 * j - 1) as f64 / (2 * j) as f64 * cos2;
            sum += term;
        }
        sin * sum
    };
    (1.0 - inside).max(0.0)
}

fn pearson_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_r, mut worst_p) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        let n = rng.random_range(3..=200);
        let coupling = rng.random_range(-1.5..1.5);
        let scale = 10f64.powi(rng.random_range(-3..4));
        let offset = rng.random_range(-1e3..1e3);
        let xs: Vec<f64> = (0..n)
            .map(|_| offset + scale * rng.random::<f64>())
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| coupling * (x - offset) / scale + rng.random::<f64>())
            .collect();
        let got = pearson(&xs, &ys).map_err(|e| format!("vector {i}: {e}"))?;
        let r = dd_pearson(&xs, &ys);
        let p = t_series_p(r, n - 2);
        worst_r = worst_r.max((got.r - r).abs());
        worst_p = worst_p.max((got.p_value - p).abs());
        ensure((got.r - r).abs() <= 1e-12, || {
            format!("vector {i}: r {} vs {r}", got.r)
        })?;
        ensure((got.p_value - p).abs() <= 1e-12, || {
            format!("vector {i} (n={n}): p {} vs {p}", got.p_value)
        })?;
    }
    let exact = pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).map_err(|e| e.to_string())?;
    ensure(exact.r == -1.0, || {
        format!("(1,2,3)/(6,4,2) gave r = {}", exact.r)
    })?;
    Ok(format!(
        "1000 vectors, max |dr| = {worst_r:.1e}, max |dp| = {worst_p:.1e}; r = -1 exactly"
    ))
}

// ------------------------------------------------------- adoption study

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn synthetic_adoption() -> Check {
    let spec = SyntheticLogSpec::default();
    let entries = generate(&spec);
    let report = analyze(
        &Ingested {
            entries,
            malformed: 0,
        },
        &AdoptionOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let suite = report
        .daily
        .ok_or_else(|| format!("{:?}", report.daily_error))?;
    ensure(suite.days.len() == 30, || {
        format!("{} days", suite.days.len())
    })?;
    let min_n = suite.days.iter().map(|d| d.n).min().unwrap_or(0);
    ensure(min_n >= 200, || format!("smallest day has {min_n} entries"))?;
    let top = suite.strongest().ok_or("no correlations")?;
    ensure(top.metric_name == "LCP", || {
        format!("strongest is {}", top.metric_name)
    })?;
    ensure(top.p_value < 0.05, || format!("LCP p = {}", top.p_value))?;
    let r = |m: &str| -> Result<f64, String> {
        suite
            .get(m)
            .and_then(|c| c.result.as_ref().ok())
            .map(|c| c.r)
            .ok_or_else(|| format!("{m} missing"))
    };
    let (r_rlcp, r_rl) = (r("ROUGE-LCP")?, r("ROUGE-L")?);
    ensure(r_rlcp > r_rl, || {
        format!("ROUGE-LCP r {r_rlcp} <= ROUGE-L r {r_rl}")
    })?;

    // Adoption rate should rise with LCP across buckets that have support.
    let (xs, ys): (Vec<f64>, Vec<f64>) = report
        .lcp_buckets
        .iter()
        .filter(|b| b.count >= 30)
        .map(|b| match b.key {
            BucketKey::Lcp(v) => (v as f64, b.adoption_rate),
            _ => unreachable!(),
        })
        .unzip();
    let rho = pearson(&ranks(&xs), &ranks(&ys)).map_err(|e| e.to_string())?;
    ensure(rho.r > 0.0 && rho.p_value < 0.05, || {
        format!("bucket rank correlation {} (p {})", rho.r, rho.p_value)
    })?;
    Ok(format!(
        "LCP r = {:.4} (p {:.1e}); ROUGE-LCP {r_rlcp:.4} > ROUGE-L {r_rl:.4}; bucket rho {:.3}",
        top.r, top.p_value, rho.r
    ))
}

// ---------------------------------------------------- segmentation

fn ts_language(lang: Language) -> tree_sitter::Language {
    match lang {
        Language::C => tree_sitter_c::LANGUAGE.into(),
        _ => tree_sitter_cpp::LANGUAGE.into(),
    }
}

/// ERROR and MISSING nodes from a fresh parse, ignoring nodes that lie
/// entirely inside `skip`.
fn fresh_error_count(lang: Language, text: &str, skip: Option<&Range<usize>>) -> usize {
    let mut parser = tree_sitter::Parser::new();
    parser
        .set_language(&ts_language(lang))
        .expect("grammar loads");
    let tree = parser.parse(text, None).expect("parse completes");
    let mut cursor = tree.walk();
    let mut count = 0;
    loop {
        let node = cursor.node();
        let inside = skip.is_some_and(|s| node.start_byte() >= s.start && node.end_byte() <= s.end);
        if !inside && (node.is_error() || node.is_missing()) {
            count += 1;
        }
        if !inside && cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                return count;
            }
        }
    }
}

/// Parseable stand-in for a masked unit. The mask itself lives in a comment.
fn stand_in(kind: UnitKind, target: &str) -> String {
    let tag = "/*<mask>*/";
    match kind {
        UnitKind::FunctionDef => tag.to_string(),
        UnitKind::MacroDef if target.ends_with('\n') => format!("{tag}\n"),
        UnitKind::MacroDef => tag.to_string(),
        UnitKind::RecordTypeDef | UnitKind::ClassDef => format!("{tag}__forge_mask"),
        UnitKind::ConditionalBranch | UnitKind::LoopBody => format!("{tag};"),
    }
}

fn segmentation_soundness() -> Check {
    let start = Instant::now();
    let files = fixture_sources();
    let mut seg = Segmenter::new();
    let opts = FimOptions::new(
        GranularityRange::tokens(4, 400).map_err(|e| e.to_string())?,
        11,
    );
    let (mut samples, mut files_cut) = (0, 0);
    for f in &files {
        let Ok(cut) = cut_fim_samples_with(&mut seg, f, &opts) else {
            continue;
        };
        files_cut += 1;
        let before_total = fresh_error_count(f.language, &f.content, None);
        for s in &cut.samples {
            ensure(s.reconstruct() == f.content, || {
                format!("{}: reconstruction", f.path)
            })?;
            let span = s.span();
            let kind = s
                .unit_kind
                .ok_or_else(|| format!("{}: sample without unit", f.path))?;
            let spliced = format!("{}{}{}", s.prefix, stand_in(kind, &s.target), s.suffix);
            let before = fresh_error_count(f.language, &f.content, Some(&span));
            let after = fresh_error_count(f.language, &spliced, None);
            ensure(after <= before, || {
                format!(
                    "{} {:?} at {span:?}: {after} errors after masking, {before} before",
                    f.path, kind
                )
            })?;
            ensure(before <= before_total, || {
                "error count grew when skipping".into()
            })?;
        }
        samples += cut.samples.len();
        let tree = parse_to_ast(f).map_err(|e| e.to_string())?;
        let rs = structural_preservation_rate(&cut.samples, &tree);
        ensure(rs == 1.0, || format!("{}: AST R_s = {rs}", f.path))?;
    }
    ensure(samples > 0, || "no samples".into())?;

    let mut greedy = Vec::new();
    for f in files.iter().filter(|f| f.path.starts_with("kernels/")) {
        let len = forge_core::tokenize::token_count(&f.content);
        ensure(len == 100, || format!("{} has {len} tokens", f.path))?;
        let cuts = greedy_cut_baseline(f, 25, "<mask>").map_err(|e| e.to_string())?;
        let k = cuts.len();
        ensure(k == 4, || format!("{}: {k} windows", f.path))?;
        let tree = parse_to_ast(f).map_err(|e| e.to_string())?;
        let rs = structural_preservation_rate(&cuts, &tree);
        ensure(
            (rs - 1.0 / k as f64).abs() <= 1.0 / k as f64 + 1e-12,
            || format!("{}: greedy R_s = {rs}", f.path),
        )?;
        greedy.push(rs);
    }
    ensure(!greedy.is_empty(), || "no single-function kernels".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    let mean = greedy.iter().sum::<f64>() / greedy.len() as f64;
    Ok(format!(
        "{samples} samples from {files_cut} files sound, AST R_s = 1.0; greedy R_s mean {mean:.3} over {} kernels; {elapsed:.2?}",
        greedy.len()
    ))
}

// -------------------------------------------------------- path oracle

fn dummy_node(i: usize) -> GraphNode {
    let file = format!("f{}.c", i % 3);
    GraphNode {
        id: UnitId::new(&file, &(i * 10..i * 10 + 5)),
        kind: UnitKind::FunctionDef,
        file,
        span: i * 10..i * 10 + 5,
        name: Some(format!("n{i}")),
        aliases: Vec::new(),
        module: String::new(),
        syntax: "function_definition".into(),
        token_count: 5,
    }
}

fn oracle_successors(edges: &[Edge], node: usize, k: usize, strategy: PathStrategy) -> Vec<usize> {
    let mut best: HashMap<usize, (usize, usize)> = HashMap::new();
    for e in edges.iter().filter(|e| e.from == node && e.to != node) {
        let key = (strategy.rank(e.kind), e.site);
        let slot = best.entry(e.to).or_insert(key);
        if key < *slot {
            *slot = key;
        }
    }
    let mut ranked: Vec<(usize, usize, usize)> = best
        .into_iter()
        .map(|(to, (rank, site))| (rank, site, to))
        .collect();
    ranked.sort();
    ranked.into_iter().take(k).map(|(_, _, to)| to).collect()
}

fn dfs(succ: &[Vec<usize>], path: &mut Vec<usize>, depth: usize, out: &mut BTreeSet<Vec<usize>>) {
    out.insert(path.clone());
    if path.len() > depth {
        return;
    }
    let last = *path.last().unwrap();
    for &t in &succ[last] {
        if !path.contains(&t) {
            path.push(t);
            dfs(succ, path, depth, out);
            path.pop();
        }
    }
}

fn path_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0;
    for g in 0..50 {
        let n = rng.random_range(1..=12);
        let m = rng.random_range(0..=n * 4);
        let edges: Vec<Edge> = (0..m)
            .map(|_| Edge {
                from: rng.random_range(0..n),
                to: rng.random_range(0..n),
                kind: *EdgeKind::ALL.choose(&mut rng).unwrap(),
                site: rng.random_range(0..50),
            })
            .collect();
        let graph = CodeGraph::from_parts((0..n).map(dummy_node).collect(), edges.clone());
        let d_max = (0..n)
            .map(|v| {
                edges
                    .iter()
                    .filter(|e| e.from == v && e.to != v)
                    .map(|e| e.to)
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .max()
            .unwrap_or(0);
        let strategy = [
            PathStrategy::ForwardCall,
            PathStrategy::FieldAccess,
            PathStrategy::HeaderInclusion,
        ][g % 3];
        for depth in 0..=3 {
            for k in [1, 2, 4] {
                let got = enumerate_paths(&graph, depth, k, strategy).map_err(|e| e.to_string())?;
                let got_set: BTreeSet<Vec<usize>> = got.iter().map(|p| p.nodes.clone()).collect();
                ensure(got_set.len() == got.len(), || {
                    format!("graph {g}: duplicate paths")
                })?;
                let succ: Vec<Vec<usize>> = (0..n)
                    .map(|v| oracle_successors(&edges, v, k, strategy))
                    .collect();
                let mut want = BTreeSet::new();
                for v in 0..n {
                    dfs(&succ, &mut vec![v], depth, &mut want);
                }
                ensure(got_set == want, || {
                    format!(
                        "graph {g} D={depth} k={k}: {} paths vs oracle {}",
                        got_set.len(),
                        want.len()
                    )
                })?;
                for j in 0..=depth {
                    let at_j = got.iter().filter(|p| p.nodes.len() == j + 1).count();
                    let bound = n as f64 * (d_max as f64).powi(j as i32);
                    ensure(at_j as f64 <= bound, || {
                        format!("graph {g}: {at_j} paths at depth {j} exceed n*d_max^j = {bound}")
                    })?;
                }
                compared += 1;
            }
        }
    }
    Ok(format!(
        "50 graphs, {compared} (D, k) configurations match brute force"
    ))
}

// ------------------------------------------------------- annotations

fn annotation_exactness() -> Check {
    let files = fixture_sources();
    let (mut multi, mut single, mut lines) = (0, 0, 0);
    for opts in [
        SpsrOptions::default(),
        SpsrOptions {
            depth: 2,
            ..SpsrOptions::default()
        },
        SpsrOptions {
            depth: 2,
            dependency_first: true,
            strategy: PathStrategy::HeaderInclusion,
            ..SpsrOptions::default()
        },
    ] {
        let out = generate_spsr_corpus(&files, &opts).map_err(|e| e.to_string())?;
        for s in &out.samples {
            let found: Vec<&str> = s
                .text
                .lines()
                .filter(|l| l.starts_with("/* file:"))
                .collect();
            let crosses = s.files.windows(2).any(|w| w[0] != w[1]);
            if !crosses {
                single += 1;
                ensure(found.is_empty(), || {
                    format!("single-file path annotated: {:?}", s.files)
                })?;
                continue;
            }
            multi += 1;
            let mut want = vec![format!("/* file: {} */", s.files[0])];
            for w in s.files.windows(2) {
                if w[0] != w[1] {
                    want.push(format!("/* file: {} */", w[1]));
                }
            }
            ensure(found == want, || {
                format!("annotations {found:?}, want {want:?}")
            })?;
            lines += found.len();
        }
    }
    ensure(multi > 0 && single > 0, || {
        format!("{multi} multi-file, {single} single-file")
    })?;
    Ok(format!("{multi} multi-file samples, {lines} annotation lines exact; {single} single-file unannotated"))
}

// ----------------------------------------------------------- minhash

fn minhash_statistics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let union = 400;
    let mut notes = Vec::new();
    for j in [0.2, 0.5, 0.8] {
        let shared = (j * union as f64).round() as usize;
        let only = (union - shared) / 2;
        let (mut bias, mut abs_err) = (0.0, 0.0);
        for trial in 0..500u64 {
            let hasher = MinHasher::new(&MinHashConfig {
                num_perms: 256,
                seed: trial,
                ..MinHashConfig::default()
            })
            .map_err(|e| e.to_string())?;
            let mut pool: BTreeSet<u64> = BTreeSet::new();
            while pool.len() < shared + 2 * only {
                pool.insert(rng.random());
            }
            let mut pool: Vec<u64> = pool.into_iter().collect();
            pool.shuffle(&mut rng);
            let (common, rest) = pool.split_at(shared);
            let (a_only, b_only) = rest.split_at(only);
            let a = hasher.signature_from_hashes(common.iter().chain(a_only).copied());
            let b = hasher.signature_from_hashes(common.iter().chain(b_only).copied());
            let est = forge_core::pipeline::estimate_jaccard(&a, &b);
            bias += est - j;
            abs_err += (est - j).abs();
        }
        let (bias, mae) = (bias / 500.0, abs_err / 500.0);
        ensure(bias.abs() < 0.03 && mae < 0.03, || {
            format!("J={j}: mean error {bias:.4}, mean |error| {mae:.4}")
        })?;
        notes.push(format!("J={j}: bias {bias:+.4}, mae {mae:.4}"));
    }
    Ok(notes.join("; "))
}

// ------------------------------------------------------- determinism

fn strip_created_at(path: &Path) -> Result<serde_json::Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v.as_object_mut()
        .ok_or("manifest is not an object")?
        .remove("created_at")
        .ok_or("manifest lacks created_at")?;
    Ok(v)
}

fn end_to_end_determinism() -> Check {
    let defaults = ForgeConfig::default();
    ensure(
        defaults.graph.depth == 1 && defaults.graph.breadth == 4,
        || {
            format!(
                "defaults D={} k={}",
                defaults.graph.depth, defaults.graph.breadth
            )
        },
    )?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let outs = [tmp.path().join("a"), tmp.path().join("b")];
    for out in &outs {
        let status = Command::new(env!("CARGO_BIN_EXE_forge"))
            .args(["--seed", "42", "build", "--in"])
            .arg(fixture_repo())
            .arg("--out")
            .arg(out)
            .env("RUST_LOG", "error")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || {
            format!("forge build exited with {status}")
        })?;
    }
    for name in ["corpus.jsonl", "fim_samples.jsonl", "spsr_samples.jsonl"] {
        let a = fs::read(outs[0].join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = fs::read(outs[1].join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(!a.is_empty(), || format!("{name} is empty"))?;
        ensure(a == b, || format!("{name} differs between runs"))?;
    }
    let (ma, mb) = (
        strip_created_at(&outs[0].join("manifest.json"))?,
        strip_created_at(&outs[1].join("manifest.json"))?,
    );
    ensure(ma == mb, || "manifests differ beyond created_at".into())?;
    Ok("corpus, FIM and SPSR outputs byte-identical; manifests equal; defaults D=1, k=4".into())
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("metric kernel properties", metric_properties),
        ("ROUGE-LCP piecewise cases", rouge_lcp_cases),
        ("LCP pmf telescoping", pmf_telescoping),
        ("Pearson extended-precision oracle", pearson_oracle),
        ("synthetic adoption ordering", synthetic_adoption),
        ("AST segmentation soundness", segmentation_soundness),
        ("SPSR path oracle", path_oracle),
        ("annotation exactness", annotation_exactness),
        ("MinHash Jaccard estimate", minhash_statistics),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
