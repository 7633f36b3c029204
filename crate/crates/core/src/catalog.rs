//! Built-in corpus of reference objects: rational normal curves and their
//! moving flags, holomorphic subbundles with known splitting type, clutching
//! functions with known factorization powers, presentations that reduce to
//! length zero, lift inputs with known flag shape, and truncated
//! polarized-space families. The command-line runner and the acceptance
//! suite both draw from this module, so every constructor is deterministic.

use crate::bipoly::{cleared_complement, BiPoly, BiPolyMatrix};
use crate::bundle::{osculating_flag, FlagField, SubbundleField};
use crate::error::{Error, Result};
use crate::flags::SigmaSubset;
use crate::hs::{HSSubspacePoint, TruncatedPolarizedSpace, VirtualFlagPoint};
use crate::splitting::{mobius_reparam, HolomorphicSubbundle, LaurentMatrix};
use crate::sphere::Chart;
use crate::tol::ToleranceConfig;
use crate::twistor::PresentedBundle;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Degree-d rational normal curve with the rotation-equivariant
/// normalization: entry k is sqrt(binomial(d, k)) z^k. Its line field is
/// harmonic with energy 2 pi d.
pub fn veronese_column(d: usize) -> BiPolyMatrix {
    assert!(d >= 1, "the curve needs positive degree");
    BiPolyMatrix::from_fn(d + 1, 1, |i, _| {
        BiPoly::monomial(i, 0, re(binomial(d, i).sqrt()))
    })
}

/// Integer-coefficient monomial curve (1, z, ..., z^d), the same point set
/// as the normalized one but convenient for exact-arithmetic cross-checks.
pub fn monomial_curve(d: usize) -> BiPolyMatrix {
    assert!(d >= 1, "the curve needs positive degree");
    BiPolyMatrix::from_fn(d + 1, 1, |i, _| BiPoly::monomial(i, 0, re(1.0)))
}

/// Constant coordinate line in the given ambient dimension.
pub fn constant_line(ambient: usize, axis: usize) -> BiPolyMatrix {
    assert!(axis < ambient);
    BiPolyMatrix::from_fn(ambient, 1, |i, _| {
        if i == axis {
            BiPoly::one()
        } else {
            BiPoly::zero()
        }
    })
}

/// Rank-2 plane spanned by (1, z, z^2) and the middle coordinate axis; the
/// reference example of a harmonic but non-split subbundle of mixed type.
pub fn mixed_plane_frame() -> BiPolyMatrix {
    BiPolyMatrix::from_fn(3, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::one(),
        (1, 0) => BiPoly::monomial(1, 0, re(1.0)),
        (2, 0) => BiPoly::monomial(2, 0, re(1.0)),
        (1, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    })
}

/// Kernel of the row (1, z, z^2): a rank-2 bundle splitting as two equal
/// powers.
pub fn kernel_pair_frame() -> BiPolyMatrix {
    BiPolyMatrix::from_fn(3, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::monomial(1, 0, re(-1.0)),
        (1, 0) => BiPoly::one(),
        (1, 1) => BiPoly::monomial(1, 0, re(-1.0)),
        (2, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    })
}

/// Block-diagonal sum of a cubic line on coordinates (1, 4) and a degree-one
/// line on coordinates (2, 3); harmonic because the blocks never interact.
pub fn block_sum_frame() -> BiPolyMatrix {
    BiPolyMatrix::from_fn(4, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::one(),
        (3, 0) => BiPoly::monomial(3, 0, re(1.0)),
        (1, 1) => BiPoly::one(),
        (2, 1) => BiPoly::monomial(1, 0, re(1.0)),
        _ => BiPoly::zero(),
    })
}

/// Cubic line on coordinates (1, 4) of C^4 together with a constant axis.
pub fn axis_augmented_cubic_frame() -> BiPolyMatrix {
    BiPolyMatrix::from_fn(4, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::one(),
        (3, 0) => BiPoly::monomial(3, 0, re(1.0)),
        (1, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    })
}

fn constant_matrix(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> BiPolyMatrix {
    let mut m = BiPolyMatrix::zeros(rows, cols);
    for &(i, j, v) in entries {
        *m.entry_mut(i, j) = BiPoly::constant(re(v));
    }
    m
}

/// Full holomorphic curves of degree at most 4 in ambient dimension at most
/// 5 whose derivative frames have maximal rank everywhere, so their moving
/// flags are smooth on the whole sphere. Names are unique.
pub fn flag_sweep_curves() -> Vec<(&'static str, BiPolyMatrix)> {
    let shear3 = constant_matrix(
        3,
        3,
        &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (0, 1, 0.4)],
    );
    let shear4 = constant_matrix(
        4,
        4,
        &[
            (0, 0, 1.0),
            (1, 1, 1.0),
            (2, 2, 1.0),
            (3, 3, 1.0),
            (0, 1, 0.3),
            (2, 3, 0.2),
        ],
    );
    let scale3 = constant_matrix(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 2.0)]);
    let scale4 = constant_matrix(4, 4, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 3.0)]);
    let mobius2 = mobius_reparam(&veronese_column(2), re(1.0), re(0.3), re(-0.3), re(1.0))
        .expect("substitution is invertible");
    let mobius3 = mobius_reparam(&veronese_column(3), re(1.0), re(0.2), re(-0.2), re(1.0))
        .expect("substitution is invertible");
    vec![
        ("rational-normal-1", veronese_column(1)),
        ("rational-normal-2", veronese_column(2)),
        ("rational-normal-3", veronese_column(3)),
        ("rational-normal-4", veronese_column(4)),
        ("scaled-conic", scale3.matmul(&veronese_column(2))),
        ("scaled-cubic", scale4.matmul(&veronese_column(3))),
        ("sheared-conic", shear3.matmul(&veronese_column(2))),
        ("sheared-cubic", shear4.matmul(&veronese_column(3))),
        ("mobius-conic", mobius2),
        ("mobius-cubic", mobius3),
    ]
}

/// The two alternating index subsets of 1..=n, the subsets for which the
/// moving flag of a full curve is twisted holomorphic.
pub fn alternating_sigmas(n: usize) -> Vec<Vec<usize>> {
    let odds: Vec<usize> = (1..=n).step_by(2).collect();
    let evens: Vec<usize> = (2..=n).step_by(2).collect();
    if evens.is_empty() {
        vec![odds]
    } else {
        vec![odds, evens]
    }
}

/// A holomorphic frame with its known splitting type. All coefficients are
/// integers so an exact-arithmetic solver can reproduce the section counts.
pub struct SplitCase {
    pub name: &'static str,
    pub frame: BiPolyMatrix,
    /// Exponent pairs (power, multiplicity) in descending power order.
    pub exponents: Vec<(i64, usize)>,
}

pub fn split_cases() -> Vec<SplitCase> {
    let annihilator_pair = BiPolyMatrix::from_fn(3, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::one(),
        (1, 0) => BiPoly::monomial(1, 0, re(1.0)),
        (2, 0) => BiPoly::monomial(2, 0, re(1.0)),
        (1, 1) => BiPoly::one(),
        (2, 1) => BiPoly::monomial(1, 0, re(1.0)),
        _ => BiPoly::zero(),
    });
    let split_sum = BiPolyMatrix::from_fn(3, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::one(),
        (1, 0) => BiPoly::monomial(1, 0, re(1.0)),
        (2, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    });
    let padded_conic = BiPolyMatrix::from_fn(4, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::one(),
        (1, 0) => BiPoly::monomial(1, 0, re(1.0)),
        (2, 0) => BiPoly::monomial(2, 0, re(1.0)),
        (3, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    });
    vec![
        SplitCase {
            name: "tautological-line",
            frame: monomial_curve(1),
            exponents: vec![(1, 1)],
        },
        SplitCase {
            name: "conic-line",
            frame: monomial_curve(2),
            exponents: vec![(2, 1)],
        },
        SplitCase {
            name: "cubic-line",
            frame: monomial_curve(3),
            exponents: vec![(3, 1)],
        },
        SplitCase {
            name: "quartic-line",
            frame: monomial_curve(4),
            exponents: vec![(4, 1)],
        },
        SplitCase {
            name: "mixed-pair",
            frame: mixed_plane_frame(),
            exponents: vec![(2, 1), (0, 1)],
        },
        SplitCase {
            name: "kernel-pair",
            frame: kernel_pair_frame(),
            exponents: vec![(1, 2)],
        },
        SplitCase {
            name: "split-sum",
            frame: split_sum,
            exponents: vec![(1, 1), (0, 1)],
        },
        SplitCase {
            name: "annihilator-pair",
            frame: annihilator_pair,
            exponents: vec![(1, 1), (0, 1)],
        },
        SplitCase {
            name: "padded-conic",
            frame: padded_conic,
            exponents: vec![(2, 1), (0, 1)],
        },
    ]
}

/// Subbundle fields that are harmonic: members of moving flags of rational
/// normal curves, the reference mixed plane, a block sum, a constant axis,
/// and an alternating pair. At least fifteen entries with unique names.
pub fn harmonic_field_corpus(tol: &ToleranceConfig) -> Result<Vec<(String, SubbundleField)>> {
    let mut out: Vec<(String, SubbundleField)> = Vec::new();
    out.push((
        "tautological-line".to_string(),
        SubbundleField::new(veronese_column(1), tol)?,
    ));
    let families = [("conic", 2usize), ("cubic", 3), ("quartic", 4)];
    for (label, d) in families {
        let flag = osculating_flag(&veronese_column(d), tol)?;
        for i in 0..flag.len() {
            out.push((format!("{label}-flag-piece-{}", i + 1), flag.piece(i).clone()));
        }
    }
    out.push((
        "mixed-plane".to_string(),
        SubbundleField::new(mixed_plane_frame(), tol)?,
    ));
    out.push((
        "block-sum".to_string(),
        SubbundleField::new(block_sum_frame(), tol)?,
    ));
    out.push((
        "constant-line".to_string(),
        SubbundleField::new(constant_line(3, 0), tol)?,
    ));
    let conic_flag = osculating_flag(&veronese_column(2), tol)?;
    let outer_pair = BiPolyMatrix::from_columns(&[
        conic_flag.piece(0).frame(Chart::Zero).clone(),
        conic_flag.piece(2).frame(Chart::Zero).clone(),
    ])?;
    out.push((
        "conic-outer-pair".to_string(),
        SubbundleField::new(outer_pair, tol)?,
    ));
    Ok(out)
}

/// Subbundle fields that fail harmonicity by a wide margin: polynomial
/// frames bent by conjugate-variable terms.
pub fn bent_field_corpus(tol: &ToleranceConfig) -> Result<Vec<(String, SubbundleField)>> {
    let bent = |entries: &[(usize, usize, BiPoly)], rows: usize, cols: usize| {
        let mut m = BiPolyMatrix::zeros(rows, cols);
        for (i, j, p) in entries {
            *m.entry_mut(*i, *j) = p.clone();
        }
        m
    };
    let z = BiPoly::monomial(1, 0, re(1.0));
    let z2 = BiPoly::monomial(2, 0, re(1.0));
    let zbar = BiPoly::monomial(0, 1, re(1.0));
    let zbar2 = BiPoly::monomial(0, 2, Complex64::new(0.0, 0.3));
    let cases = vec![
        (
            "bent-tautological",
            bent(
                &[(0, 0, BiPoly::one()), (1, 0, z.add(&zbar.scale(re(0.4))))],
                2,
                1,
            ),
        ),
        (
            "bent-conic",
            bent(
                &[
                    (0, 0, BiPoly::one()),
                    (1, 0, z.add(&zbar.scale(re(0.2)))),
                    (2, 0, z2.clone()),
                ],
                3,
                1,
            ),
        ),
        (
            "bent-conic-top",
            bent(
                &[
                    (0, 0, BiPoly::one()),
                    (1, 0, z.clone()),
                    (2, 0, z2.add(&zbar.scale(re(0.3)))),
                ],
                3,
                1,
            ),
        ),
        (
            "bent-twist",
            bent(
                &[
                    (0, 0, BiPoly::one()),
                    (1, 0, z.add(&zbar2)),
                    (2, 0, z2.clone()),
                ],
                3,
                1,
            ),
        ),
        (
            "bent-plane",
            bent(
                &[
                    (0, 0, BiPoly::one()),
                    (1, 0, z.clone()),
                    (2, 0, z2.add(&zbar.scale(re(0.3)))),
                    (1, 1, BiPoly::one()),
                ],
                3,
                2,
            ),
        ),
    ];
    cases
        .into_iter()
        .map(|(name, frame)| Ok((name.to_string(), SubbundleField::new(frame, tol)?)))
        .collect()
}

/// A clutching function on the equatorial annulus together with the powers
/// of its diagonal middle factor, in descending order. When the function is
/// the chart-change of a holomorphic subbundle's minimal frames, that frame
/// is attached and its splitting exponents are minus the powers.
pub struct TransitionCase {
    pub name: &'static str,
    pub transition: LaurentMatrix,
    pub kappas: Vec<i64>,
    pub associated_frame: Option<BiPolyMatrix>,
}

pub fn transition_cases() -> Vec<TransitionCase> {
    let diag_shift = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::monomial(1, 0, re(1.0)),
        (1, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    });
    let shear = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::monomial(1, 0, re(1.0)),
        (0, 1) => BiPoly::one(),
        (1, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    });
    let balanced = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::monomial(2, 0, re(1.0)),
        (1, 0) => BiPoly::monomial(1, 0, re(1.0)),
        (1, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    });
    let taut_clutch = BiPolyMatrix::from_fn(1, 1, |_, _| BiPoly::monomial(0, 1, re(1.0)));
    let conic_clutch = BiPolyMatrix::from_fn(1, 1, |_, _| BiPoly::monomial(0, 2, re(1.0)));
    let kernel_clutch = BiPolyMatrix::from_fn(2, 2, |i, j| {
        if i == j {
            BiPoly::monomial(0, 1, re(-1.0))
        } else {
            BiPoly::zero()
        }
    });
    let mixed_clutch = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => BiPoly::monomial(0, 2, re(1.0)),
        (1, 0) => BiPoly::monomial(0, 1, re(-1.0)),
        (1, 1) => BiPoly::one(),
        _ => BiPoly::zero(),
    });
    vec![
        TransitionCase {
            name: "identity-pair",
            transition: LaurentMatrix::identity(2),
            kappas: vec![0, 0],
            associated_frame: None,
        },
        TransitionCase {
            name: "diagonal-shift",
            transition: LaurentMatrix::new(diag_shift),
            kappas: vec![1, 0],
            associated_frame: None,
        },
        TransitionCase {
            name: "unipotent-shear",
            transition: LaurentMatrix::new(shear),
            kappas: vec![1, 0],
            associated_frame: None,
        },
        TransitionCase {
            name: "balanced-lower",
            transition: LaurentMatrix::new(balanced),
            kappas: vec![1, 1],
            associated_frame: None,
        },
        TransitionCase {
            name: "tautological-clutch",
            transition: LaurentMatrix::new(taut_clutch),
            kappas: vec![-1],
            associated_frame: Some(monomial_curve(1)),
        },
        TransitionCase {
            name: "conic-clutch",
            transition: LaurentMatrix::new(conic_clutch),
            kappas: vec![-2],
            associated_frame: Some(monomial_curve(2)),
        },
        TransitionCase {
            name: "kernel-clutch",
            transition: LaurentMatrix::new(kernel_clutch),
            kappas: vec![-1, -1],
            associated_frame: Some(kernel_pair_frame()),
        },
        TransitionCase {
            name: "mixed-clutch",
            transition: LaurentMatrix::new(mixed_clutch),
            kappas: vec![0, -2],
            associated_frame: Some(mixed_plane_frame()),
        },
    ]
}

/// A harmonic presented bundle of positive length together with the number
/// of reduction moves it should need and a length-zero certificate for its
/// expected terminal object.
pub struct ReductionCase {
    pub name: &'static str,
    pub bundle: PresentedBundle,
    pub max_steps: usize,
    /// Frame of the outer holomorphic bundle of the terminal certificate.
    pub terminal_outer: BiPolyMatrix,
    /// Frame of the inner bundle, when the terminal form needs one.
    pub terminal_inner: Option<BiPolyMatrix>,
}

fn osc_span_frame(curve: &BiPolyMatrix, order: usize) -> Result<BiPolyMatrix> {
    let mut cols = Vec::with_capacity(order);
    let mut col = curve.clone();
    for _ in 0..order {
        cols.push(col.clone());
        col = col.diff_z();
    }
    BiPolyMatrix::from_columns(&cols)
}

pub fn reduction_cases(tol: &ToleranceConfig) -> Result<Vec<ReductionCase>> {
    let conic_flag = osculating_flag(&veronese_column(2), tol)?;
    let cubic_flag = osculating_flag(&veronese_column(3), tol)?;
    let outer_conic = PresentedBundle::from_flag(&conic_flag, &SigmaSubset::new(vec![1, 3], 3)?, tol)?;
    let outer_cubic = PresentedBundle::from_flag(&cubic_flag, &SigmaSubset::new(vec![1, 3], 4)?, tol)?;
    let mixed = PresentedBundle::from_holomorphic(&HolomorphicSubbundle::new(mixed_plane_frame(), tol)?, tol)?;
    let block = PresentedBundle::from_holomorphic(&HolomorphicSubbundle::new(block_sum_frame(), tol)?, tol)?;
    let augmented = PresentedBundle::from_holomorphic(
        &HolomorphicSubbundle::new(axis_augmented_cubic_frame(), tol)?,
        tol,
    )?;
    Ok(vec![
        ReductionCase {
            name: "outer-pair-conic",
            bundle: outer_conic,
            max_steps: 4,
            terminal_outer: monomial_curve(2),
            terminal_inner: None,
        },
        ReductionCase {
            name: "mixed-plane",
            bundle: mixed,
            max_steps: 4,
            terminal_outer: BiPolyMatrix::identity(3),
            terminal_inner: None,
        },
        ReductionCase {
            name: "outer-pair-cubic",
            bundle: outer_cubic,
            max_steps: 4,
            terminal_outer: osc_span_frame(&monomial_curve(3), 3)?,
            terminal_inner: Some(osc_span_frame(&monomial_curve(3), 2)?),
        },
        ReductionCase {
            name: "block-sum",
            bundle: block,
            max_steps: 4,
            terminal_outer: block_sum_frame().column(0),
            terminal_inner: None,
        },
        ReductionCase {
            name: "axis-augmented-cubic",
            bundle: augmented,
            max_steps: 4,
            terminal_outer: axis_augmented_cubic_frame().column(0),
            terminal_inner: None,
        },
    ])
}

/// A harmonic presented bundle whose flag shape under the lift is known.
pub struct LiftCase {
    pub name: &'static str,
    pub bundle: PresentedBundle,
    pub sigma: Vec<usize>,
    /// Expected (degree, rank) pairs of the merged flag, in ascending degree
    /// order.
    pub deltas: Vec<(i64, usize)>,
}

pub fn lift_cases(tol: &ToleranceConfig) -> Result<Vec<LiftCase>> {
    let conic = osculating_flag(&veronese_column(2), tol)?;
    let cubic = osculating_flag(&veronese_column(3), tol)?;
    let quartic = osculating_flag(&veronese_column(4), tol)?;
    let from = |flag: &FlagField, idx: Vec<usize>| -> Result<PresentedBundle> {
        let sigma = SigmaSubset::new(idx, flag.len())?;
        PresentedBundle::from_flag(flag, &sigma, tol)
    };
    let thick_perp = PresentedBundle::new(
        vec![veronese_column(2)],
        vec![BiPolyMatrix::from_columns(&[
            conic.piece(1).frame(Chart::Zero).clone(),
            conic.piece(2).frame(Chart::Zero).clone(),
        ])?],
        tol,
    )?;
    Ok(vec![
        LiftCase {
            name: "lift-tautological",
            bundle: PresentedBundle::from_holomorphic(
                &HolomorphicSubbundle::new(monomial_curve(1), tol)?,
                tol,
            )?,
            sigma: vec![1],
            deltas: vec![(-1, 1), (1, 1)],
        },
        LiftCase {
            name: "lift-conic-middle",
            bundle: from(&conic, vec![2])?,
            sigma: vec![2],
            deltas: vec![(-2, 1), (0, 1), (2, 1)],
        },
        LiftCase {
            name: "lift-conic-outer",
            bundle: from(&conic, vec![1, 3])?,
            sigma: vec![1, 3],
            deltas: vec![(-2, 1), (0, 1), (2, 1)],
        },
        LiftCase {
            name: "lift-cubic-odd",
            bundle: from(&cubic, vec![1, 3])?,
            sigma: vec![1, 3],
            deltas: vec![(-3, 1), (-1, 1), (1, 1), (3, 1)],
        },
        LiftCase {
            name: "lift-cubic-even",
            bundle: from(&cubic, vec![2, 4])?,
            sigma: vec![2, 4],
            deltas: vec![(-3, 1), (-1, 1), (1, 1), (3, 1)],
        },
        LiftCase {
            name: "lift-quartic-even",
            bundle: from(&quartic, vec![2, 4])?,
            sigma: vec![2, 4],
            deltas: vec![(-4, 1), (-2, 1), (0, 1), (2, 1), (4, 1)],
        },
        LiftCase {
            name: "lift-quartic-odd",
            bundle: from(&quartic, vec![1, 3, 5])?,
            sigma: vec![1, 3, 5],
            deltas: vec![(-4, 1), (-2, 1), (0, 1), (2, 1), (4, 1)],
        },
        LiftCase {
            name: "lift-conic-thick-perp",
            bundle: thick_perp,
            sigma: vec![1],
            deltas: vec![(-2, 1), (1, 2)],
        },
    ])
}

/// A family of subspace points indexed by the truncation level, with the
/// virtual dimension the whole family should report.
pub struct TruncationFamily {
    pub name: &'static str,
    pub virtual_dim: i64,
    builder: fn(usize, &ToleranceConfig) -> Result<HSSubspacePoint>,
}

impl TruncationFamily {
    pub fn at(&self, level: usize, tol: &ToleranceConfig) -> Result<HSSubspacePoint> {
        (self.builder)(level, tol)
    }
}

fn family_positive_half(level: usize, tol: &ToleranceConfig) -> Result<HSSubspacePoint> {
    let space = TruncatedPolarizedSpace::new(level, level)?;
    HSSubspacePoint::positive_half(space, tol)
}

fn family_extended(level: usize, tol: &ToleranceConfig) -> Result<HSSubspacePoint> {
    let space = TruncatedPolarizedSpace::new(level, level)?;
    let mut indices: Vec<i64> = vec![-1];
    indices.extend(1..=level as i64);
    HSSubspacePoint::from_indices(space, &indices, tol)
}

fn family_geometric(level: usize, tol: &ToleranceConfig) -> Result<HSSubspacePoint> {
    let space = TruncatedPolarizedSpace::new(level, level)?;
    let mut frame = crate::numeric::CMatrix::zeros(space.dim(), level);
    for k in 1..=level {
        let col = k - 1;
        frame[(space.row_of(k as i64)?, col)] = re(1.0);
        frame[(space.row_of(-(k as i64))?, col)] = re(0.5f64.powi(k as i32));
    }
    HSSubspacePoint::new(space, frame, tol)
}

pub fn truncation_families() -> Vec<TruncationFamily> {
    vec![
        TruncationFamily {
            name: "positive-half",
            virtual_dim: 0,
            builder: family_positive_half,
        },
        TruncationFamily {
            name: "extended-by-lowest",
            virtual_dim: 1,
            builder: family_extended,
        },
        TruncationFamily {
            name: "geometric-mixing",
            virtual_dim: 0,
            builder: family_geometric,
        },
    ]
}

/// Four-part flag of virtual type (-1, 1, 1, -1) in the truncation with four
/// modes on each side: the designated incoming piece misses one positive
/// mode, the designated outgoing piece misses one negative mode, and two
/// lines carry the leftovers.
pub fn virtual_flag_example(tol: &ToleranceConfig) -> Result<VirtualFlagPoint> {
    let space = TruncatedPolarizedSpace::new(4, 4)?;
    let w_in = HSSubspacePoint::from_indices(space, &[2, 3, 4], tol)?;
    let e2 = HSSubspacePoint::from_indices(space, &[1], tol)?;
    let e3 = HSSubspacePoint::from_indices(space, &[-1], tol)?;
    let w_out = HSSubspacePoint::from_indices(space, &[-2, -3, -4], tol)?;
    VirtualFlagPoint::new(vec![w_in, e2, e3, w_out], 1, 4, tol)
}

fn unit_scale(m: &BiPolyMatrix) -> BiPolyMatrix {
    let n = m.max_coeff_norm();
    if n == 0.0 {
        m.clone()
    } else {
        m.scale(re(1.0 / n))
    }
}

/// Deterministic pseudo-random moving flag on C^3 with polynomial frames:
/// the first piece mixes z and its conjugate with bounded degrees, the
/// remaining pieces are successive cleared complements toward random
/// constant directions. Distinct seeds give distinct flags; the same seed
/// always gives the same flag. Seeds whose frames fail the flag checks are
/// retried with derived seeds.
pub fn random_flag_field(seed: u64, tol: &ToleranceConfig) -> Result<FlagField> {
    for attempt in 0u64..32 {
        let stream = seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let mut coeff = |scale: f64| {
            Complex64::new(
                rng.gen_range(-scale..scale),
                rng.gen_range(-scale..scale),
            )
        };
        let mut first = BiPolyMatrix::zeros(3, 1);
        for i in 0..3 {
            let mut terms = Vec::new();
            for (k, l) in [(0usize, 0usize), (1, 0), (2, 0), (0, 1), (1, 1)] {
                terms.push((k, l, coeff(0.6)));
            }
            if i == 0 {
                terms.push((0, 0, re(1.5)));
            }
            *first.entry_mut(i, 0) = BiPoly::from_terms(&terms);
        }
        let r1 = BiPolyMatrix::from_fn(3, 1, |_, _| BiPoly::constant(coeff(1.0)));
        let r2 = BiPolyMatrix::from_fn(3, 1, |_, _| BiPoly::constant(coeff(1.0)));
        let second = unit_scale(&cleared_complement(&first, &r1).prune_shared(tol.prune_tol));
        let pair = match BiPolyMatrix::from_columns(&[first.clone(), second.clone()]) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let third = unit_scale(&cleared_complement(&pair, &r2).prune_shared(tol.prune_tol));
        match FlagField::new(vec![unit_scale(&first), second, third], tol) {
            Ok(flag) => return Ok(flag),
            Err(_) => continue,
        }
    }
    Err(Error::ProfileInconsistent {
        context: format!("no valid random flag derived from seed {seed}"),
    })
}
