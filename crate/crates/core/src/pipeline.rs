//! Two-stage gadget pipelines under fresh or shared inter-stage masking.
//!
//! Fresh: stage 2 sees `stage1.plain(x)` under an independent mask, so each
//! wire is measured against its own mask only.
//! Shared: stage 2 is fed the still-masked stage-1 wire with the same mask,
//! giving the composed wire `m -> stage2(stage1(x, m), m)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gadgets::WireGadget;
use crate::modring::ZqElem;
use crate::preimage::{multiplicity_profile, CountPath, SecretScope};

/// Moduli above this default to sampled secrets.
pub const EXHAUSTIVE_PIPELINE_LIMIT: u64 = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskingMode {
    Fresh,
    Shared,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("stage moduli differ: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("pipeline is configured for {actual:?} masking, not {expected:?}")]
    WrongMode { expected: MaskingMode, actual: MaskingMode },
}

#[derive(Debug, Clone)]
pub struct PipelineSpec {
    stage1: WireGadget,
    stage2: WireGadget,
    mode: MaskingMode,
}

impl PipelineSpec {
    pub fn new(stage1: WireGadget, stage2: WireGadget, mode: MaskingMode) -> Result<Self, PipelineError> {
        let (a, b) = (stage1.modulus(), stage2.modulus());
        if a != b {
            return Err(PipelineError::ModulusMismatch(a.get(), b.get()));
        }
        Ok(PipelineSpec { stage1, stage2, mode })
    }

    pub fn mode(&self) -> MaskingMode {
        self.mode
    }

    pub fn stages(&self) -> (&WireGadget, &WireGadget) {
        (&self.stage1, &self.stage2)
    }

    fn expect_mode(&self, expected: MaskingMode) -> Result<(), PipelineError> {
        if self.mode == expected {
            Ok(())
        } else {
            Err(PipelineError::WrongMode { expected, actual: self.mode })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CompositionReport {
    pub mode: MaskingMode,
    pub secrets_checked: u64,
    pub k1: u32,
    pub k2: u32,
    pub wire1_max_mult: u64,
    /// Fresh: the stage-2 wire. Shared: the composed feed-through wire.
    pub wire2_max_mult: u64,
    pub pipeline_max_mult: u64,
    pub bound_fresh: u64,
    pub bound_product: u64,
    pub fresh_bound_holds: bool,
    pub product_bound_holds: bool,
}

fn report(spec: &PipelineSpec, secrets: u64, (w1, w2): (u64, u64)) -> CompositionReport {
    let (k1, k2) = (spec.stage1.claimed_max_mult(), spec.stage2.claimed_max_mult());
    let bound_fresh = u64::from(k1.max(k2));
    let bound_product = u64::from(k1) * u64::from(k2);
    let pipeline = w1.max(w2);
    CompositionReport {
        mode: spec.mode,
        secrets_checked: secrets,
        k1,
        k2,
        wire1_max_mult: w1,
        wire2_max_mult: w2,
        pipeline_max_mult: pipeline,
        bound_fresh,
        bound_product,
        fresh_bound_holds: pipeline <= bound_fresh,
        product_bound_holds: pipeline <= bound_product,
    }
}

fn max_pair(a: (u64, u64), b: (u64, u64)) -> (u64, u64) {
    (a.0.max(b.0), a.1.max(b.1))
}

pub fn compose_fresh(spec: &PipelineSpec, scope: &SecretScope) -> Result<CompositionReport, PipelineError> {
    spec.expect_mode(MaskingMode::Fresh)?;
    let secrets = scope.secrets(spec.stage1.modulus());
    let n = secrets.len() as u64;
    let maxes = secrets
        .into_par_iter()
        .map(|x| {
            let w1 = multiplicity_profile(&spec.stage1, x, CountPath::Auto).max_count;
            let carried = spec.stage1.plain(x);
            let w2 = multiplicity_profile(&spec.stage2, carried, CountPath::Auto).max_count;
            (w1, w2)
        })
        .reduce(|| (0, 0), max_pair);
    Ok(report(spec, n, maxes))
}

/// Max preimage count of `m -> stage2(stage1(x, m), m)`, by enumeration.
pub fn shared_wire_max_mult(spec: &PipelineSpec, x: ZqElem) -> u64 {
    let q = spec.stage1.modulus();
    let mut hist = vec![0u32; q.get() as usize];
    for m in q.elements() {
        let v = spec.stage2.eval(spec.stage1.eval(x, m), m);
        hist[v.val() as usize] += 1;
    }
    hist.into_iter().max().map_or(0, u64::from)
}

/// Measures the reused-mask wire. The product bound is reported, never asserted.
pub fn compose_shared(spec: &PipelineSpec, scope: &SecretScope) -> Result<CompositionReport, PipelineError> {
    spec.expect_mode(MaskingMode::Shared)?;
    let secrets = scope.secrets(spec.stage1.modulus());
    let n = secrets.len() as u64;
    let maxes = secrets
        .into_par_iter()
        .map(|x| {
            let w1 = multiplicity_profile(&spec.stage1, x, CountPath::Auto).max_count;
            (w1, shared_wire_max_mult(spec, x))
        })
        .reduce(|| (0, 0), max_pair);
    Ok(report(spec, n, maxes))
}

pub fn compose(spec: &PipelineSpec, scope: &SecretScope) -> CompositionReport {
    let r = match spec.mode {
        MaskingMode::Fresh => compose_fresh(spec, scope),
        MaskingMode::Shared => compose_shared(spec, scope),
    };
    r.expect("mode dispatched to matching simulator")
}
