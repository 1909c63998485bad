//! Built-in verification suites: structural facts the binning design leans
//! on (`lemmas`), the separability oracle cross-check (`oracle`), and the
//! worked reference bin (`figure2`). The acceptance tests call the same
//! functions the CLI command does.

use keybins::adversary::{
    brute_force_best_response, brute_force_oracle, exact_adversary_distortion,
    optimal_reproduction, suffstat_equivalence_check, AtypicalModel, Observe, PosteriorTable,
};
use keybins::caps::EngineCaps;
use keybins::cipher::PadMode;
use keybins::codebook::Codebook;
use keybins::model::{dmax, DistortionMeasure, SourceDistribution, Symbol};
use keybins::types::{
    check_row_types, empirical_type, enumerate_types, sampling_tv_check, type_class_size,
    type_class_size_bound, TypeVector,
};
use num_traits::ToPrimitive;
use std::fmt;
use std::str::FromStr;

/// One named check with its verdict.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Lemmas,
    Oracle,
    Figure2,
}

impl FromStr for SuiteKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "lemmas" => Ok(SuiteKind::Lemmas),
            "oracle" => Ok(SuiteKind::Oracle),
            "figure2" => Ok(SuiteKind::Figure2),
            _ => anyhow::bail!("unknown suite {s:?}; expected lemmas, oracle, or figure2"),
        }
    }
}

pub fn run_suite(suite: SuiteKind) -> Vec<CheckLine> {
    match suite {
        SuiteKind::Lemmas => lemmas_suite(),
        SuiteKind::Oracle => oracle_suite(),
        SuiteKind::Figure2 => figure2_suite(),
    }
}

// ---------------------------------------------------------------------------
// lemmas

/// Structural facts: row composition of type classes, the sampling total
/// variation bound, the class-size lower bound, and pad-garbage equivalence
/// of the two observation modes.
pub fn lemmas_suite() -> Vec<CheckLine> {
    let mut out = Vec::new();
    out.push(row_composition_check(8, 3));
    out.push(sampling_bound_check(8, 3));
    out.push(class_size_bound_check(20, 4));
    let (equal, control) = suffstat_grid_checks();
    out.push(equal);
    out.push(control);
    out
}

/// Every type class with `n <= max_n`, alphabet up to `max_alpha`: the rows
/// of the class-as-columns array carry the class's own type.
pub fn row_composition_check(max_n: usize, max_alpha: usize) -> CheckLine {
    let mut classes = 0usize;
    for n in 1..=max_n {
        for alpha in 2..=max_alpha {
            for t in enumerate_types(n, alpha) {
                match check_row_types(&t, 1 << 20) {
                    Ok(true) => classes += 1,
                    Ok(false) => {
                        return CheckLine::new(
                            "row-composition",
                            false,
                            format!("violated by type {:?}", t.counts()),
                        )
                    }
                    Err(e) => {
                        return CheckLine::new("row-composition", false, format!("error: {e}"))
                    }
                }
            }
        }
    }
    CheckLine::new(
        "row-composition",
        true,
        format!("all {classes} classes with n <= {max_n}, alphabet <= {max_alpha}"),
    )
}

/// Every urn with at most `max_balls` balls over up to `max_labels` labels,
/// every feasible draw count: the without/with replacement total variation
/// gap stays under `labels * draws / balls`. Includes the pinned two-ball
/// two-draw case with tv exactly 1/2.
pub fn sampling_bound_check(max_balls: usize, max_labels: usize) -> CheckLine {
    let pinned = match sampling_tv_check(&[1, 1], 2, 1 << 20) {
        Ok(r) if (r.tv - 0.5).abs() < 1e-15 && r.holds => true,
        _ => false,
    };
    if !pinned {
        return CheckLine::new(
            "sampling-tv-bound",
            false,
            "pinned two-ball two-draw case is not exactly 1/2".into(),
        );
    }
    let mut cases = 0usize;
    for labels in 1..=max_labels {
        // All count vectors over `labels` labels with 1..=max_balls balls.
        let mut counts = vec![0usize; labels];
        loop {
            let balls: usize = counts.iter().sum();
            if balls >= 1 && balls <= max_balls {
                for draws in 1..=balls {
                    match sampling_tv_check(&counts, draws, 1 << 22) {
                        Ok(r) if r.holds => cases += 1,
                        Ok(r) => {
                            return CheckLine::new(
                                "sampling-tv-bound",
                                false,
                                format!(
                                    "urn {counts:?}, draws {draws}: tv {} > bound {}",
                                    r.tv, r.bound
                                ),
                            )
                        }
                        Err(e) => {
                            return CheckLine::new(
                                "sampling-tv-bound",
                                false,
                                format!("error: {e}"),
                            )
                        }
                    }
                }
            }
            // Odometer over count vectors, each coordinate 0..=max_balls.
            let mut done = true;
            for slot in counts.iter_mut() {
                *slot += 1;
                if *slot <= max_balls {
                    done = false;
                    break;
                }
                *slot = 0;
            }
            if done {
                break;
            }
        }
    }
    CheckLine::new(
        "sampling-tv-bound",
        true,
        format!("{cases} urn/draw cases within the bound, plus the pinned 1/2 case"),
    )
}

/// Exact multinomial class size >= `(n+1)^(-|alphabet|) * 2^(n H_2)` for all
/// types with `n <= max_n`, alphabet up to `max_alpha`.
pub fn class_size_bound_check(max_n: usize, max_alpha: usize) -> CheckLine {
    let mut types = 0usize;
    for n in 1..=max_n {
        for alpha in 2..=max_alpha {
            for t in enumerate_types(n, alpha) {
                let size = type_class_size(&t).to_f64().unwrap_or(f64::INFINITY);
                let bound = type_class_size_bound(&t, 2.0);
                if size < bound - 1e-9 {
                    return CheckLine::new(
                        "class-size-bound",
                        false,
                        format!("type {:?}: size {size} < bound {bound}", t.counts()),
                    );
                }
                types += 1;
            }
        }
    }
    CheckLine::new(
        "class-size-bound",
        true,
        format!("all {types} types with n <= {max_n}, alphabet <= {max_alpha}"),
    )
}

/// The pad-independence grid: sources, block lengths, key sizes, and seeds on
/// which the full-message and bin-only exact distortions must agree to
/// 1e-12, plus the pad-off negative control which must break the agreement.
pub fn suffstat_grid_checks() -> (CheckLine, CheckLine) {
    let caps = EngineCaps::default();
    let sources = [
        ("binary(0.75,0.25)", vec![0.75, 0.25]),
        ("ternary(1/2,1/4,1/4)", vec![0.5, 0.25, 0.25]),
    ];
    let mut cells = 0usize;
    let mut max_difference = 0.0f64;
    let mut control_broken = false;
    for (label, probs) in &sources {
        let p = SourceDistribution::new(probs.clone()).expect("valid source");
        let d = DistortionMeasure::hamming(p.alphabet_size());
        for n in [4usize, 6, 8] {
            for k in [2u64, 4, 8] {
                for seed in [1u64, 2, 3] {
                    let cb = match Codebook::build(&p, n, 0.3, k, seed) {
                        Ok(cb) => cb,
                        Err(e) => {
                            return (
                                CheckLine::new(
                                    "pad-garbage-equivalence",
                                    false,
                                    format!("{label} n={n} k={k} seed={seed}: {e}"),
                                ),
                                CheckLine::new("pad-off-control", false, "not run".into()),
                            )
                        }
                    };
                    let r = match suffstat_equivalence_check(&cb, &p, &d, &caps) {
                        Ok(r) => r,
                        Err(e) => {
                            return (
                                CheckLine::new(
                                    "pad-garbage-equivalence",
                                    false,
                                    format!("{label} n={n} k={k} seed={seed}: {e}"),
                                ),
                                CheckLine::new("pad-off-control", false, "not run".into()),
                            )
                        }
                    };
                    if !r.holds {
                        return (
                            CheckLine::new(
                                "pad-garbage-equivalence",
                                false,
                                format!(
                                    "{label} n={n} k={k} seed={seed}: |{} - {}| = {}",
                                    r.full_message, r.bin_only, r.difference
                                ),
                            ),
                            CheckLine::new("pad-off-control", false, "not run".into()),
                        );
                    }
                    max_difference = max_difference.max(r.difference);

                    // Negative control: leak the offset and the full message
                    // must start saying more than the bin.
                    let off = exact_adversary_distortion(
                        &cb,
                        &p,
                        &d,
                        Observe::FullMessage,
                        PadMode::Disabled,
                        AtypicalModel::Exact,
                        &caps,
                    );
                    if let Ok(off) = off {
                        if (off.distortion - r.bin_only).abs() > 1e-9 {
                            control_broken = true;
                        }
                    }
                    cells += 1;
                }
            }
        }
    }
    (
        CheckLine::new(
            "pad-garbage-equivalence",
            true,
            format!("{cells} cells agree; worst difference {max_difference:.3e}"),
        ),
        CheckLine::new(
            "pad-off-control",
            control_broken,
            if control_broken {
                "disabling the pad separates the observation modes".into()
            } else {
                "pad-off run never differed from bin-only".into()
            },
        ),
    )
}

// ---------------------------------------------------------------------------
// oracle

/// Brute-force versus separable exact engine on every small binary instance:
/// n <= 4, key sizes {1, 2, 4}, two partition seeds, two binary sources.
pub fn oracle_suite() -> Vec<CheckLine> {
    let caps = EngineCaps::default();
    let sources = [
        ("uniform", vec![0.5, 0.5]),
        ("skewed(0.75,0.25)", vec![0.75, 0.25]),
    ];
    let mut cells = 0usize;
    let mut worst = 0.0f64;
    for (label, probs) in &sources {
        let p = SourceDistribution::new(probs.clone()).expect("valid source");
        let d = DistortionMeasure::hamming(2);
        for n in 1usize..=4 {
            // Tight typicality empties the family at n=1; widen it there.
            let epsilon = if n == 1 { 0.6 } else { 0.3 };
            for k in [1u64, 2, 4] {
                for seed in [1u64, 2] {
                    let cb = match Codebook::build(&p, n, epsilon, k, seed) {
                        Ok(cb) => cb,
                        Err(e) => {
                            return vec![CheckLine::new(
                                "separability-oracle",
                                false,
                                format!("{label} n={n} k={k} seed={seed}: {e}"),
                            )]
                        }
                    };
                    let exact = exact_adversary_distortion(
                        &cb,
                        &p,
                        &d,
                        Observe::FullMessage,
                        PadMode::OneTimePad,
                        AtypicalModel::Exact,
                        &caps,
                    );
                    let oracle = brute_force_oracle(&cb, &p, &d, &caps);
                    match (exact, oracle) {
                        (Ok(e), Ok(o)) => {
                            let diff = (e.distortion - o.distortion).abs();
                            worst = worst.max(diff);
                            if diff > 1e-12 {
                                return vec![CheckLine::new(
                                    "separability-oracle",
                                    false,
                                    format!(
                                        "{label} n={n} k={k} seed={seed}: exact {} vs oracle {}",
                                        e.distortion, o.distortion
                                    ),
                                )];
                            }
                            cells += 1;
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            return vec![CheckLine::new(
                                "separability-oracle",
                                false,
                                format!("{label} n={n} k={k} seed={seed}: {e}"),
                            )]
                        }
                    }
                }
            }
        }
    }
    vec![CheckLine::new(
        "separability-oracle",
        true,
        format!("{cells} instances agree to 1e-12; worst difference {worst:.3e}"),
    )]
}

// ---------------------------------------------------------------------------
// figure2

/// The worked 8-member reference bin over the skewed ternary source: eight
/// strings of the type with counts (2,1,1), written as the columns of a 4x8
/// array whose every row carries the source law itself.
pub const REFERENCE_BIN: [[Symbol; 4]; 8] = [
    [0, 0, 1, 2],
    [0, 2, 0, 1],
    [1, 0, 2, 0],
    [0, 1, 2, 0],
    [0, 1, 0, 2],
    [1, 2, 0, 0],
    [2, 0, 1, 0],
    [2, 0, 0, 1],
];

/// Checks the reference bin end to end: single-type membership, row
/// composition equal to the source law, exactly uniform posterior, the
/// adversary's reproduction string (0,0,0,0), and expected distortion
/// exactly at the blind-guess ceiling 1/2.
pub fn figure2_suite() -> Vec<CheckLine> {
    let p = SourceDistribution::new(vec![0.5, 0.25, 0.25]).expect("valid source");
    let d = DistortionMeasure::hamming(3);
    let mut out = Vec::new();

    // Structure: distinct strings, one shared type, rows mirroring the law.
    let members: Vec<Vec<Symbol>> = REFERENCE_BIN.iter().map(|x| x.to_vec()).collect();
    let mut distinct = members.clone();
    distinct.sort();
    distinct.dedup();
    let want_type = TypeVector::new(vec![2, 1, 1]);
    let one_type = members
        .iter()
        .all(|x| empirical_type(x, 3) == want_type);
    let mut rows_match = true;
    for i in 0..4 {
        let mut counts = [0usize; 3];
        for x in &members {
            counts[usize::from(x[i])] += 1;
        }
        // 8 columns: the law (1/2, 1/4, 1/4) means counts (4, 2, 2).
        if counts != [4, 2, 2] {
            rows_match = false;
        }
    }
    out.push(CheckLine::new(
        "reference-bin-structure",
        distinct.len() == 8 && one_type && rows_match,
        "8 distinct strings, one type, every row carries the source law".into(),
    ));

    let post = match PosteriorTable::from_bin(members, &p) {
        Ok(post) => post,
        Err(e) => {
            out.push(CheckLine::new(
                "reference-bin-adversary",
                false,
                format!("posterior: {e}"),
            ));
            return out;
        }
    };
    let flat = post.weights().iter().all(|&w| w == post.weights()[0]);
    out.push(CheckLine::new(
        "reference-bin-posterior",
        flat,
        "bin-conditional posterior is exactly uniform".into(),
    ));

    let (_, ceiling) = dmax(&p, &d).expect("matching shapes");
    let z = optimal_reproduction(&post, &d).expect("matching shapes");
    let value = post.expected_distortion(&z, &d).expect("matching shapes");
    let pass_fast = z == vec![0, 0, 0, 0]
        && (value - 0.5).abs() <= 1e-12
        && (value - ceiling).abs() <= 1e-12;
    out.push(CheckLine::new(
        "reference-bin-adversary",
        pass_fast,
        format!("best reproduction {z:?}, expected distortion {value}"),
    ));

    // The full scan over all 3^4 reproduction strings agrees.
    let (zb, vb) = brute_force_best_response(&post, &d, 1 << 12).expect("within cap");
    out.push(CheckLine::new(
        "reference-bin-oracle",
        zb == z && (vb - value).abs() <= 1e-12,
        format!("scan of 81 strings returns {zb:?} at {vb}"),
    ));
    out
}
