//! `(secret, mask) -> wire value` maps over `Z_q`.
//!
//! The Barrett internal wire is modelled twice: the two-branch algebraic form
//! used everywhere, and the hardware-faithful unsigned `s`-bit subtraction
//! form, which exists to cross-check the first.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::modring::{branch_offset, Modulus, ZqElem};

/// Widest shift the hardware-faithful evaluator can represent in `u128`.
pub const MAX_NAT_SHIFT: u32 = 120;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("scope condition q <= 2^s violated: q = {q}, s = {s}")]
    ScopeCondition { q: u64, s: u32 },
    #[error("shift {0} exceeds the hardware evaluator's limit of {MAX_NAT_SHIFT}")]
    ShiftTooWide(u32),
    #[error("claimed max multiplicity must be at least 1")]
    ZeroMultiplicity,
}

/// Barrett parameters `(q, s)` with the cached offset `r = 2^s mod q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BarrettParams {
    q: Modulus,
    s: u32,
    r: ZqElem,
}

impl BarrettParams {
    pub fn new(q: Modulus, s: u32) -> Self {
        BarrettParams { q, s, r: branch_offset(q, s) }
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }

    pub fn shift(&self) -> u32 {
        self.s
    }

    pub fn offset(&self) -> ZqElem {
        self.r
    }

    /// `q <= 2^s`.
    pub fn scope_condition_holds(&self) -> bool {
        self.s >= self.q.ceil_log2()
    }
}

/// Barrett internal wire, two-branch form: `x - m` when `m <= x`, else `x - m + r`.
#[inline]
pub fn barrett_algebraic_eval(p: &BarrettParams, x: ZqElem, m: ZqElem) -> ZqElem {
    if m.val() <= x.val() {
        x - m
    } else {
        x - m + p.r
    }
}

/// Hardware-faithful Barrett internal wire: `((x + 2^s - m) mod 2^s) mod q`.
///
/// Only constructible when the scope condition `q <= 2^s` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NatEvaluator {
    params: BarrettParams,
    two_s: u128,
}

impl NatEvaluator {
    pub fn new(params: BarrettParams) -> Result<Self, GadgetError> {
        if !params.scope_condition_holds() {
            return Err(GadgetError::ScopeCondition { q: params.q.get(), s: params.s });
        }
        if params.s > MAX_NAT_SHIFT {
            return Err(GadgetError::ShiftTooWide(params.s));
        }
        Ok(NatEvaluator { params, two_s: 1u128 << params.s })
    }

    pub fn params(&self) -> &BarrettParams {
        &self.params
    }

    #[inline]
    pub fn eval(&self, x: ZqElem, m: ZqElem) -> ZqElem {
        let wide = (x.val() as u128 + self.two_s - m.val() as u128) % self.two_s;
        let q = self.params.q;
        q.reduce_u64((wide % q.get() as u128) as u64)
    }
}

pub fn barrett_nat_eval(ev: &NatEvaluator, x: ZqElem, m: ZqElem) -> ZqElem {
    ev.eval(x, m)
}

/// Arithmetic mask removal `x - m`, the shape of every butterfly output wire.
#[inline]
pub fn identity_mask_eval(x: ZqElem, m: ZqElem) -> ZqElem {
    x - m
}

pub type WireFn = Arc<dyn Fn(ZqElem, ZqElem) -> ZqElem + Send + Sync>;
pub type PlainFn = Arc<dyn Fn(ZqElem) -> ZqElem + Send + Sync>;

#[derive(Clone)]
pub enum GadgetKind {
    Barrett(BarrettParams),
    Identity,
    Custom { eval: WireFn, plain: PlainFn },
}

impl fmt::Debug for GadgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GadgetKind::Barrett(p) => f.debug_tuple("Barrett").field(p).finish(),
            GadgetKind::Identity => f.write_str("Identity"),
            GadgetKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// A masked gadget: its wire map, its logical (unmasked) stage function, and
/// the preimage bound `k` it claims.
#[derive(Debug, Clone)]
pub struct WireGadget {
    name: String,
    q: Modulus,
    kind: GadgetKind,
    claimed_max_mult: u32,
}

impl WireGadget {
    pub fn barrett(p: BarrettParams) -> Self {
        WireGadget { name: "barrett".into(), q: p.q, kind: GadgetKind::Barrett(p), claimed_max_mult: 2 }
    }

    pub fn identity(q: Modulus) -> Self {
        WireGadget { name: "identity".into(), q, kind: GadgetKind::Identity, claimed_max_mult: 1 }
    }

    pub fn custom(
        name: impl Into<String>,
        q: Modulus,
        claimed_max_mult: u32,
        eval: impl Fn(ZqElem, ZqElem) -> ZqElem + Send + Sync + 'static,
        plain: impl Fn(ZqElem) -> ZqElem + Send + Sync + 'static,
    ) -> Result<Self, GadgetError> {
        if claimed_max_mult == 0 {
            return Err(GadgetError::ZeroMultiplicity);
        }
        Ok(WireGadget {
            name: name.into(),
            q,
            kind: GadgetKind::Custom { eval: Arc::new(eval), plain: Arc::new(plain) },
            claimed_max_mult,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }

    pub fn kind(&self) -> &GadgetKind {
        &self.kind
    }

    pub fn claimed_max_mult(&self) -> u32 {
        self.claimed_max_mult
    }

    pub fn barrett_params(&self) -> Option<&BarrettParams> {
        match &self.kind {
            GadgetKind::Barrett(p) => Some(p),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, x: ZqElem, m: ZqElem) -> ZqElem {
        match &self.kind {
            GadgetKind::Barrett(p) => barrett_algebraic_eval(p, x, m),
            GadgetKind::Identity => identity_mask_eval(x, m),
            GadgetKind::Custom { eval, .. } => {
                let v = eval(x, m);
                assert_eq!(v.modulus(), self.q, "gadget {} left Z_{}", self.name, self.q);
                v
            }
        }
    }

    /// Stage function on unmasked values. Reducing a canonical residue is a
    /// no-op, so Barrett's plain function is the identity on `Z_q`.
    #[inline]
    pub fn plain(&self, x: ZqElem) -> ZqElem {
        match &self.kind {
            GadgetKind::Barrett(_) | GadgetKind::Identity => x,
            GadgetKind::Custom { plain, .. } => plain(x),
        }
    }
}

pub fn make_barrett_gadget(p: BarrettParams) -> WireGadget {
    WireGadget::barrett(p)
}

pub fn make_identity_gadget(q: Modulus) -> WireGadget {
    WireGadget::identity(q)
}
