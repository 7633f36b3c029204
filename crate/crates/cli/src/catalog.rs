//! Named, self-contained scenarios built from the core reference corpus.
//! Every entry resolves and passes on its own; `find` is the lookup used
//! by scenario files that set `catalog_ref`.

use crate::scenario::{Scenario, Task};
use twistor_core::bipoly::{BiPolyMatrix, CoeffTensor};
use twistor_core::bundle::osculating_flag;
use twistor_core::catalog as corpus;
use twistor_core::sphere::Chart;
use twistor_core::twistor::PresentedBundle;
use twistor_core::ToleranceConfig;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub scenario: Scenario,
}

fn tensor(m: &BiPolyMatrix) -> CoeffTensor {
    m.to_coeff_tensor()
}

fn entry(name: &str, description: &str, scenario: Scenario) -> CatalogEntry {
    CatalogEntry {
        name: name.to_string(),
        description: description.to_string(),
        scenario,
    }
}

fn presentation_tensors(bundle: &PresentedBundle) -> (Vec<CoeffTensor>, Vec<CoeffTensor>) {
    let pieces = bundle
        .pieces()
        .iter()
        .map(|p| tensor(p.frame(Chart::Zero)))
        .collect();
    let perp = bundle
        .perp_pieces()
        .iter()
        .map(|p| tensor(p.frame(Chart::Zero)))
        .collect();
    (pieces, perp)
}

fn split_case_frame(name: &str) -> BiPolyMatrix {
    corpus::split_cases()
        .into_iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("missing split case {name}"))
        .frame
}

fn transition_tensor(name: &str) -> (CoeffTensor, Vec<i64>) {
    let case = corpus::transition_cases()
        .into_iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("missing transition case {name}"));
    (case.transition.inner().to_coeff_tensor(), case.kappas)
}

fn energy_entries(list: &mut Vec<CatalogEntry>) {
    let mut s = Scenario::for_task(Task::Energy);
    s.grid = Some([12, 12]);
    s.inputs.frame = Some(tensor(&corpus::constant_line(3, 0)));
    s.inputs.expected_energy = Some(0.0);
    list.push(entry(
        "energy-constant-line",
        "a constant coordinate line has exactly zero energy",
        s,
    ));
    for d in 1..=4usize {
        let mut s = Scenario::for_task(Task::Energy);
        s.grid = Some([40, 24]);
        s.inputs.degree = Some(d);
        list.push(entry(
            &format!("energy-rational-normal-{d}"),
            &format!("degree {d} rational normal curve integrates to {d} times the line energy"),
            s,
        ));
    }
}

fn splitting_entries(list: &mut Vec<CatalogEntry>) {
    let mut s = Scenario::for_task(Task::Split);
    s.inputs.degree = Some(1);
    s.inputs.expected_exponents = Some(vec![[1, 1]]);
    list.push(entry(
        "tautological-split",
        "the tautological line on the projective line is O(1)",
        s,
    ));

    let mut s = Scenario::for_task(Task::Split);
    s.inputs.frame = Some(tensor(&split_case_frame("mixed-pair")));
    s.inputs.expected_exponents = Some(vec![[2, 1], [0, 1]]);
    list.push(entry(
        "mixed-plane-split",
        "conic plus a constant axis splits as O(2) + O",
        s,
    ));

    let mut s = Scenario::for_task(Task::Split);
    s.inputs.frame = Some(tensor(&split_case_frame("kernel-pair")));
    s.inputs.expected_exponents = Some(vec![[1, 2]]);
    list.push(entry(
        "kernel-pair-split",
        "the rank-2 kernel of the evaluation pairing splits as O(1) + O(1)",
        s,
    ));

    let mut s = Scenario::for_task(Task::Split);
    s.inputs.frame = Some(tensor(&split_case_frame("annihilator-pair")));
    s.inputs.expected_exponents = Some(vec![[1, 1], [0, 1]]);
    list.push(entry(
        "annihilator-pair-split",
        "the rank-2 osculating plane of the conic splits as O(1) + O",
        s,
    ));

    let mut s = Scenario::for_task(Task::Hn);
    s.inputs.frame = Some(tensor(&split_case_frame("mixed-pair")));
    s.inputs.expected_exponents = Some(vec![[2, 1], [0, 1]]);
    list.push(entry(
        "mixed-plane-filtration",
        "destabilizing filtration of the mixed plane, steepest degree first",
        s,
    ));
}

fn harmonic_entries(list: &mut Vec<CatalogEntry>, tol: &ToleranceConfig) {
    let conic_flag = osculating_flag(&corpus::veronese_column(2), tol)
        .expect("conic osculating flag");
    let frames: Vec<CoeffTensor> = conic_flag
        .pieces()
        .iter()
        .map(|p| tensor(p.frame(Chart::Zero)))
        .collect();
    let mut s = Scenario::for_task(Task::HarmonicCheck);
    s.inputs.frames = Some(frames);
    s.inputs.sigma = Some(vec![2]);
    s.inputs.expect_harmonic = Some(true);
    list.push(entry(
        "veronese-middle-harmonic",
        "the middle piece of the conic moving flag (its first Gauss transform) is harmonic",
        s,
    ));

    let bent = corpus::bent_field_corpus(tol).expect("bent corpus");
    let bent_conic = bent
        .iter()
        .find(|(name, _)| name == "bent-conic")
        .expect("bent-conic field");
    let mut s = Scenario::for_task(Task::HarmonicCheck);
    s.inputs.frame = Some(tensor(bent_conic.1.frame(Chart::Zero)));
    s.inputs.expect_harmonic = Some(false);
    list.push(entry(
        "bent-conic-check",
        "a conjugate-perturbed conic fails both harmonicity oracles",
        s,
    ));

    let mut s = Scenario::for_task(Task::HarmonicCheck);
    s.seed = Some(7);
    s.inputs.random_flag = Some(true);
    s.inputs.sigma = Some(vec![1]);
    s.inputs.expect_harmonic = Some(false);
    list.push(entry(
        "random-flag-flatness",
        "a seeded random moving flag satisfies the curvature pairing identity without being harmonic",
        s,
    ));
}

fn twistor_verify_entries(list: &mut Vec<CatalogEntry>) {
    let cases: [(usize, &[usize], &str); 6] = [
        (2, &[2], "conic-flag-middle"),
        (2, &[1, 3], "conic-flag-outer"),
        (3, &[1, 3], "cubic-flag-odd"),
        (3, &[2, 4], "cubic-flag-even"),
        (4, &[1, 3, 5], "quartic-flag-odd"),
        (4, &[2, 4], "quartic-flag-even"),
    ];
    for (degree, sigma, name) in cases {
        let mut s = Scenario::for_task(Task::TwistorVerify);
        s.inputs.degree = Some(degree);
        s.inputs.sigma = Some(sigma.to_vec());
        list.push(entry(
            name,
            &format!(
                "osculating flag of the degree {degree} curve is twisted holomorphic for sigma {sigma:?}"
            ),
            s,
        ));
    }
}

fn birkhoff_entries(list: &mut Vec<CatalogEntry>) {
    for (case, name, description) in [
        (
            "unipotent-shear",
            "shear-clutch-factorization",
            "upper triangular shear factors with powers [1, 0]",
        ),
        (
            "balanced-lower",
            "balanced-clutch-factorization",
            "lower triangular loop factors with the balanced powers [1, 1]",
        ),
        (
            "mixed-clutch",
            "mixed-clutch-factorization",
            "clutching function of the mixed plane factors with powers [0, -2]",
        ),
        (
            "conic-clutch",
            "conic-clutch-factorization",
            "clutching function of the conic tangent line factors with power [-2]",
        ),
    ] {
        let (transition, kappas) = transition_tensor(case);
        let mut s = Scenario::for_task(Task::Birkhoff);
        s.inputs.transition = Some(transition);
        s.inputs.expected_kappas = Some(kappas);
        list.push(entry(name, description, s));
    }
}

fn lift_entries(list: &mut Vec<CatalogEntry>, tol: &ToleranceConfig) {
    let wanted = ["lift-tautological", "lift-conic-middle", "lift-conic-thick-perp"];
    for case in corpus::lift_cases(tol).expect("lift corpus") {
        if !wanted.contains(&case.name) {
            continue;
        }
        let (frames, perp) = presentation_tensors(&case.bundle);
        let mut s = Scenario::for_task(Task::Lift);
        s.inputs.frames = Some(frames);
        if !perp.is_empty() {
            s.inputs.perp_frames = Some(perp);
        }
        s.inputs.expected_sigma = Some(case.sigma.clone());
        s.inputs.expected_deltas =
            Some(case.deltas.iter().map(|&(d, m)| [d, m as i64]).collect());
        list.push(entry(
            case.name,
            "harmonic presentation lifts to a twisted-holomorphic flag with known shape",
            s,
        ));
    }
}

fn reduction_entries(list: &mut Vec<CatalogEntry>, tol: &ToleranceConfig) {
    let wanted = ["outer-pair-conic", "mixed-plane", "block-sum"];
    for case in corpus::reduction_cases(tol).expect("reduction corpus") {
        if !wanted.contains(&case.name) {
            continue;
        }
        let (frames, perp) = presentation_tensors(&case.bundle);
        let mut s = Scenario::for_task(Task::ReduceLength);
        s.inputs.frames = Some(frames);
        if !perp.is_empty() {
            s.inputs.perp_frames = Some(perp);
        }
        s.inputs.max_steps = Some(case.max_steps);
        list.push(entry(
            &format!("{}-reduction", case.name),
            "length-reduction chain reaches a length-zero harmonic bundle",
            s,
        ));
    }
}

fn hs_entries(list: &mut Vec<CatalogEntry>) {
    for family in corpus::truncation_families() {
        let mut s = Scenario::for_task(Task::HsDemo);
        s.inputs.family = Some(family.name.to_string());
        s.inputs.levels = Some(vec![8, 16, 32, 64]);
        s.inputs.expected_virtual_dim = Some(family.virtual_dim);
        list.push(entry(
            &format!("hs-{}", family.name),
            "truncated subspace family with stable virtual dimension and settled cross norm",
            s,
        ));
    }

    let mut s = Scenario::for_task(Task::HsDemo);
    s.inputs.parts = Some(vec![
        vec![2, 3, 4],
        vec![1],
        vec![-1],
        vec![-2, -3, -4],
    ]);
    s.inputs.in_slot = Some(1);
    s.inputs.out_slot = Some(4);
    s.inputs.expected_type = Some(vec![-1, 1, 1, -1]);
    list.push(entry(
        "hs-virtual-flag",
        "orthogonal virtual flag whose type vector sums to zero",
        s,
    ));
}

pub fn entries() -> Vec<CatalogEntry> {
    let tol = ToleranceConfig::default();
    let mut list = Vec::new();
    energy_entries(&mut list);
    splitting_entries(&mut list);
    harmonic_entries(&mut list, &tol);
    twistor_verify_entries(&mut list);
    birkhoff_entries(&mut list);
    lift_entries(&mut list, &tol);
    reduction_entries(&mut list, &tol);
    hs_entries(&mut list);
    list
}

pub fn find(name: &str) -> Option<CatalogEntry> {
    entries().into_iter().find(|e| e.name == name)
}
