//! Preimage counting for wire gadgets.
//!
//! For Barrett wires the production path is the two-candidate closed form:
//! a mask producing `v` for secret `x` can only be `x - v` (unwrapped branch)
//! or `x - v + r` (wrapped branch), and each counts iff it actually takes the
//! branch it was solved for. Brute-force enumeration over all `q` masks is kept
//! as the oracle and is the only path for non-Barrett gadgets.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::gadgets::{barrett_algebraic_eval, BarrettParams, GadgetError, NatEvaluator, WireGadget};
use crate::modring::{Modulus, ZqElem};

/// Moduli above this default to sampled secrets.
pub const EXHAUSTIVE_PROFILE_LIMIT: u64 = 1 << 16;
pub const DEFAULT_SAMPLE: usize = 16;
pub const DEFAULT_SEED: u64 = 0;

/// Which secrets a sweep visits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SecretScope {
    Exhaustive,
    /// `n` distinct secrets drawn with ChaCha8 from `seed`.
    Sampled {
        seed: u64,
        n: usize,
    },
    Explicit(Vec<u64>),
}

impl SecretScope {
    /// Exhaustive when `q <= limit`, otherwise the default 16-secret sample.
    pub fn default_for(q: Modulus, limit: u64) -> Self {
        if q.get() <= limit {
            SecretScope::Exhaustive
        } else {
            SecretScope::Sampled { seed: DEFAULT_SEED, n: DEFAULT_SAMPLE }
        }
    }

    /// Secrets in ascending order. Explicit values are reduced mod `q` and deduplicated.
    pub fn secrets(&self, q: Modulus) -> Vec<ZqElem> {
        match self {
            SecretScope::Exhaustive => q.elements().collect(),
            SecretScope::Sampled { seed, n } => {
                let len = q.get() as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut picked = index::sample(&mut rng, len, (*n).min(len)).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| q.reduce_u64(i as u64)).collect()
            }
            SecretScope::Explicit(vals) => {
                let mut out: Vec<ZqElem> = vals.iter().map(|&v| q.reduce_u64(v)).collect();
                out.sort_unstable_by_key(|e| e.val());
                out.dedup();
                out
            }
        }
    }
}

/// Counting route for profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountPath {
    /// Closed form for Barrett gadgets, enumeration otherwise.
    Auto,
    /// Always enumerate every mask.
    Oracle,
}

/// `|{m in Z_q : g(x, m) = v}|` by enumerating every mask.
pub fn count_bruteforce(g: &WireGadget, x: ZqElem, v: ZqElem) -> u64 {
    g.modulus().elements().filter(|&m| g.eval(x, m) == v).count() as u64
}

/// The two candidate masks `(x - v, x - v + r)`.
#[inline]
pub fn candidates(p: &BarrettParams, x: ZqElem, v: ZqElem) -> (ZqElem, ZqElem) {
    let a = x - v;
    (a, a + p.offset())
}

/// Barrett preimage size from the two-candidate characterization.
#[inline]
pub fn count_closedform(p: &BarrettParams, x: ZqElem, v: ZqElem) -> u64 {
    if p.offset().val() == 0 {
        return 1;
    }
    let (a, b) = candidates(p, x, v);
    u64::from(a.val() <= x.val()) + u64::from(b.val() > x.val())
}

/// Histogram of preimage sizes over all output values for one secret.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MultiplicityProfile {
    pub q: u64,
    pub secret: u64,
    pub zeros: u64,
    pub ones: u64,
    pub twos: u64,
    /// Values with three or more preimages.
    pub overflow: u64,
    /// Total preimages landing on overflow values.
    pub overflow_mass: u64,
    pub max_count: u64,
    /// Smallest value attaining `max_count`.
    pub argmax: u64,
    pub support_size: u64,
}

impl MultiplicityProfile {
    fn from_counts(q: Modulus, secret: ZqElem, counts: impl Iterator<Item = u64>) -> Self {
        let mut p = MultiplicityProfile {
            q: q.get(),
            secret: secret.val(),
            zeros: 0,
            ones: 0,
            twos: 0,
            overflow: 0,
            overflow_mass: 0,
            max_count: 0,
            argmax: 0,
            support_size: 0,
        };
        for (v, c) in counts.enumerate() {
            match c {
                0 => p.zeros += 1,
                1 => p.ones += 1,
                2 => p.twos += 1,
                _ => {
                    p.overflow += 1;
                    p.overflow_mass += c;
                }
            }
            if c > p.max_count {
                p.max_count = c;
                p.argmax = v as u64;
            }
        }
        p.support_size = p.ones + p.twos + p.overflow;
        p
    }

    /// Every mask lands somewhere: `ones + 2 twos + overflow_mass = q`.
    pub fn masks_conserved(&self) -> bool {
        self.ones + 2 * self.twos + self.overflow_mass == self.q
    }

    /// `zeros = twos` and `ones + 2 twos = q`, which holds whenever no value
    /// has three or more preimages.
    pub fn conservation_holds(&self) -> bool {
        self.overflow == 0 && self.zeros == self.twos && self.ones + 2 * self.twos == self.q
    }

    pub fn within_trichotomy(&self) -> bool {
        self.overflow == 0 && self.max_count <= 2
    }
}

/// Enumerates all `q` masks once and bins the wire values.
pub fn profile_bruteforce(g: &WireGadget, x: ZqElem) -> MultiplicityProfile {
    let q = g.modulus();
    let mut hist = vec![0u32; q.get() as usize];
    for m in q.elements() {
        hist[g.eval(x, m).val() as usize] += 1;
    }
    MultiplicityProfile::from_counts(q, x, hist.into_iter().map(u64::from))
}

pub fn profile_closedform(p: &BarrettParams, x: ZqElem) -> MultiplicityProfile {
    let q = p.modulus();
    MultiplicityProfile::from_counts(q, x, q.elements().map(|v| count_closedform(p, x, v)))
}

pub fn multiplicity_profile(g: &WireGadget, x: ZqElem, path: CountPath) -> MultiplicityProfile {
    match (g.barrett_params(), path) {
        (Some(p), CountPath::Auto) => profile_closedform(p, x),
        _ => profile_bruteforce(g, x),
    }
}

/// Profiles for every secret in scope, in ascending secret order.
pub fn profiles(g: &WireGadget, scope: &SecretScope, path: CountPath) -> Vec<MultiplicityProfile> {
    scope.secrets(g.modulus()).into_par_iter().map(|x| multiplicity_profile(g, x, path)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub secret: u64,
    pub value: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrichotomyReport {
    pub q: u64,
    pub secrets_checked: u64,
    pub pairs_checked: u64,
    pub max_count: u64,
    pub path: CountPath,
    pub pass: bool,
    /// Lowest failing secret, at its most-hit value.
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Copy)]
struct TrichotomyAcc {
    secrets: u64,
    max_count: u64,
    first_bad: Option<Counterexample>,
}

impl TrichotomyAcc {
    const EMPTY: TrichotomyAcc = TrichotomyAcc { secrets: 0, max_count: 0, first_bad: None };

    fn merge(self, other: TrichotomyAcc) -> TrichotomyAcc {
        let first_bad = match (self.first_bad, other.first_bad) {
            (Some(a), Some(b)) => Some(if a.secret <= b.secret { a } else { b }),
            (a, b) => a.or(b),
        };
        TrichotomyAcc {
            secrets: self.secrets + other.secrets,
            max_count: self.max_count.max(other.max_count),
            first_bad,
        }
    }
}

/// Checks that no value has more than two preimages for any secret in scope.
pub fn trichotomy_check_gadget(g: &WireGadget, scope: &SecretScope, path: CountPath) -> TrichotomyReport {
    let q = g.modulus();
    let acc = scope
        .secrets(q)
        .into_par_iter()
        .map(|x| {
            let prof = multiplicity_profile(g, x, path);
            TrichotomyAcc {
                secrets: 1,
                max_count: prof.max_count,
                first_bad: (!prof.within_trichotomy()).then_some(Counterexample {
                    secret: prof.secret,
                    value: prof.argmax,
                    count: prof.max_count,
                }),
            }
        })
        .reduce(|| TrichotomyAcc::EMPTY, TrichotomyAcc::merge);
    TrichotomyReport {
        q: q.get(),
        secrets_checked: acc.secrets,
        pairs_checked: acc.secrets * q.get(),
        max_count: acc.max_count,
        path,
        pass: acc.first_bad.is_none(),
        counterexample: acc.first_bad,
    }
}

pub fn trichotomy_check(p: &BarrettParams, scope: &SecretScope, path: CountPath) -> TrichotomyReport {
    trichotomy_check_gadget(&WireGadget::barrett(*p), scope, path)
}

pub fn support_gap_observed(profile: &MultiplicityProfile) -> u64 {
    profile.zeros
}

/// The published support-gap predictor `min(x + 1, q - r, q - 1 - x)`.
pub fn support_gap_predicted_published(p: &BarrettParams, x: ZqElem) -> u64 {
    let q = p.modulus().get() as i64;
    let x = x.val() as i64;
    let r = p.offset().val() as i64;
    (x + 1).min(q - r).min(q - 1 - x).max(0) as u64
}

/// `min(x + 1, q - 1 - x, r, q - r)`: the published predictor with the
/// plateau capped by `min(r, q - r)` rather than `q - r`.
pub fn support_gap_predicted_extended(p: &BarrettParams, x: ZqElem) -> u64 {
    let q = p.modulus().get() as i64;
    let x = x.val() as i64;
    let r = p.offset().val() as i64;
    (x + 1).min(q - 1 - x).min(r).min(q - r).max(0) as u64
}

/// Observed support gap next to both predictors for one secret.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GapAudit {
    pub secret: u64,
    pub observed: u64,
    pub published: u64,
    pub extended: u64,
    pub published_match: bool,
    pub extended_match: bool,
}

pub fn audit_support_gap(p: &BarrettParams, profile: &MultiplicityProfile) -> GapAudit {
    let x = p.modulus().reduce_u64(profile.secret);
    let observed = support_gap_observed(profile);
    let published = support_gap_predicted_published(p, x);
    let extended = support_gap_predicted_extended(p, x);
    GapAudit {
        secret: profile.secret,
        observed,
        published,
        extended,
        published_match: observed == published,
        extended_match: observed == extended,
    }
}

/// A value hit by two distinct masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub secret: u64,
    pub value: u64,
    pub count: u64,
    pub mask_a: u64,
    pub mask_b: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub found: bool,
    pub witness: Option<Witness>,
}

/// Returns the witness at `(x, v)` when both candidate masks hit `v` under the
/// wire map and are distinct.
pub fn verify_witness(p: &BarrettParams, x: ZqElem, v: ZqElem) -> Option<Witness> {
    let (a, b) = candidates(p, x, v);
    let hits = |m| barrett_algebraic_eval(p, x, m) == v;
    (a != b && hits(a) && hits(b)).then(|| Witness {
        secret: x.val(),
        value: v.val(),
        count: count_closedform(p, x, v),
        mask_a: a.val(),
        mask_b: b.val(),
    })
}

/// First `(x, v)` in ascending order with closed-form count 2.
pub fn tightness_witness_search(p: &BarrettParams) -> WitnessReport {
    if p.offset().val() == 0 {
        return WitnessReport { found: false, witness: None };
    }
    let q = p.modulus();
    let witness = q
        .elements()
        .flat_map(|x| q.elements().map(move |v| (x, v)))
        .find(|&(x, v)| count_closedform(p, x, v) == 2)
        .and_then(|(x, v)| verify_witness(p, x, v));
    WitnessReport { found: witness.is_some(), witness }
}

/// Pair scope for the algebraic/hardware equivalence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairScope {
    Exhaustive,
    Sampled { seed: u64, n: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EquivMismatch {
    pub secret: u64,
    pub mask: u64,
    pub algebraic: u64,
    pub nat: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EquivReport {
    pub q: u64,
    pub s: u32,
    pub pairs_checked: u64,
    pub pass: bool,
    pub first_mismatch: Option<EquivMismatch>,
}

fn earliest(a: Option<EquivMismatch>, b: Option<EquivMismatch>) -> Option<EquivMismatch> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if (a.secret, a.mask) <= (b.secret, b.mask) { a } else { b }),
        (a, b) => a.or(b),
    }
}

/// Compares the two-branch and hardware-faithful evaluators pointwise.
///
/// Fails with a usage error, not a mismatch, when `q > 2^s`.
pub fn equivalence_check(p: &BarrettParams, scope: PairScope) -> Result<EquivReport, GadgetError> {
    equivalence_check_with(p, scope, |x, m| barrett_algebraic_eval(p, x, m))
}

/// [`equivalence_check`] against an arbitrary stand-in for the algebraic map.
pub fn equivalence_check_with<F>(p: &BarrettParams, scope: PairScope, algebraic: F) -> Result<EquivReport, GadgetError>
where
    F: Fn(ZqElem, ZqElem) -> ZqElem + Sync,
{
    let nat = NatEvaluator::new(*p)?;
    let q = p.modulus();
    let compare = |x: ZqElem, m: ZqElem| {
        let (a, n) = (algebraic(x, m), nat.eval(x, m));
        (a != n).then_some(EquivMismatch { secret: x.val(), mask: m.val(), algebraic: a.val(), nat: n.val() })
    };
    let (pairs_checked, first_mismatch) = match scope {
        PairScope::Exhaustive => {
            let bad = q
                .elements()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|x| q.elements().find_map(|m| compare(x, m)))
                .reduce(|| None, earliest);
            (q.get() * q.get(), bad)
        }
        PairScope::Sampled { seed, n } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut bad = None;
            for _ in 0..n {
                let x = q.reduce_u64(rng.gen_range(0..q.get()));
                let m = q.reduce_u64(rng.gen_range(0..q.get()));
                if bad.is_none() {
                    bad = compare(x, m);
                }
            }
            (n, bad)
        }
    };
    Ok(EquivReport { q: q.get(), s: p.shift(), pairs_checked, pass: first_mismatch.is_none(), first_mismatch })
}
