//! Potentials written in transformed coordinates, and the degree bookkeeping
//! that decides whether a polynomial closed form can exist.
//!
//! A potential is given as a pair `(w, u)` of polynomials in `z`, where
//! `w = (dz/dx)²` and `u(z) = U(x)`. When `u` has degree `K` and `w` has degree
//! `L + 1`, a polynomial solution needs `K = L − 1`, and the degree `M₀` of the
//! `p⁰` slice of the numerator must be a positive integer root of
//!
//! ```text
//! M₀² + (L − 1)·M₀ − 4·u_K / a = 0
//! ```
//!
//! with `a` the leading coefficient of `w`. Both signs of the last term are
//! tried; the solver's exact check settles which candidate is real.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::elliptic::{EllipticError, EllipticParams};
use crate::exactalg::{format_rational, parse_rational, rat, to_f64, ParseRationalError, Rational, UniPoly};

pub const DEFAULT_M0_MAX: usize = 12;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("w = (dz/dx)² must not be the zero polynomial")]
    ZeroW,
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("unknown map_id {0:?}")]
    UnknownMap(String),
    #[error("missing parameter {0:?}")]
    MissingParam(String),
    #[error("parameter {0:?} is not used by this potential")]
    UnknownParam(String),
    #[error("parameter {name:?}: {reason}")]
    BadParam { name: String, reason: String },
    #[error("w does not match the {map} map: expected {expected:?}, got {got:?}")]
    MapMismatch {
        map: &'static str,
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    #[error("malformed spec document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}

/// Numeric change of variables `x → z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapId {
    /// `z = x`
    #[serde(rename = "identity")]
    Identity,
    /// `z = cn²(m x; k)`
    #[serde(rename = "cn2")]
    Cn2,
}

impl MapId {
    pub fn name(self) -> &'static str {
        match self {
            MapId::Identity => "identity",
            MapId::Cn2 => "cn2",
        }
    }

    fn parse(s: &str) -> Result<Self, SpecError> {
        match s {
            "identity" => Ok(MapId::Identity),
            "cn2" => Ok(MapId::Cn2),
            other => Err(SpecError::UnknownMap(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum NumericMap {
    Identity,
    Cn2 { m: f64, elliptic: EllipticParams },
}

/// The problem statement: `w(z) = (dz/dx)²`, `u(z)`, and optionally the
/// numeric map used to evaluate things at a point `x`.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    w: UniPoly,
    u: UniPoly,
    map: Option<MapId>,
    params: BTreeMap<String, Rational>,
    numeric: Option<NumericMap>,
    period: Option<f64>,
}

/// `4m²·z(1−z)(1−k²+k²z)`
pub fn cn2_w(m: &Rational, k2: &Rational) -> UniPoly {
    let four_m2 = Rational::from_integer(BigInt::from(4)) * m * m;
    let z = UniPoly::new(vec![Rational::zero(), four_m2]);
    let one_minus_z = UniPoly::from_ints(&[1, -1]);
    let last = UniPoly::new(vec![Rational::one() - k2, k2.clone()]);
    &(&z * &one_minus_z) * &last
}

fn coeff_strings(p: &UniPoly) -> Vec<String> {
    p.coeffs().iter().map(format_rational).collect()
}

impl PotentialSpec {
    pub fn new(
        w: UniPoly,
        u: UniPoly,
        map: Option<MapId>,
        params: BTreeMap<String, Rational>,
    ) -> Result<Self, SpecError> {
        if w.is_zero() {
            return Err(SpecError::ZeroW);
        }
        let (numeric, period) = match map {
            None => (None, None),
            Some(MapId::Identity) => {
                if w != UniPoly::one() {
                    return Err(SpecError::MapMismatch {
                        map: "identity",
                        expected: vec!["1".into()],
                        got: coeff_strings(&w),
                    });
                }
                (Some(NumericMap::Identity), None)
            }
            Some(MapId::Cn2) => {
                let m = params
                    .get("m")
                    .ok_or_else(|| SpecError::MissingParam("m".into()))?;
                let k2 = params
                    .get("k2")
                    .ok_or_else(|| SpecError::MissingParam("k2".into()))?;
                if m.is_zero() {
                    return Err(SpecError::BadParam {
                        name: "m".into(),
                        reason: "must be nonzero".into(),
                    });
                }
                if !k2.is_positive() || k2 >= &Rational::one() {
                    return Err(SpecError::BadParam {
                        name: "k2".into(),
                        reason: "must satisfy 0 < k2 < 1".into(),
                    });
                }
                let expected = cn2_w(m, k2);
                if w != expected {
                    return Err(SpecError::MapMismatch {
                        map: "cn2",
                        expected: coeff_strings(&expected),
                        got: coeff_strings(&w),
                    });
                }
                let elliptic = EllipticParams::new(to_f64(k2))?;
                let m = to_f64(m);
                (
                    Some(NumericMap::Cn2 { m, elliptic }),
                    // cn² has period 2K
                    Some(2.0 * elliptic.quarter_period() / m.abs()),
                )
            }
        };
        Ok(Self {
            w,
            u,
            map,
            params,
            numeric,
            period,
        })
    }

    /// Builds one of the shipped presets. `overrides` replaces defaults and
    /// must not name parameters the preset does not use.
    ///
    /// * `constant`: `U = u0` (default `u0 = 0`), `z = x`.
    /// * `cn2-gap-n`, `n ∈ {1,2,3}`: `U = −n(n+1)m²k²·cn²(mx;k)`
    ///   (defaults `m = 1`, `k2 = 1/2`).
    pub fn preset(name: &str, overrides: &BTreeMap<String, Rational>) -> Result<Self, SpecError> {
        let gap = match name {
            "constant" => None,
            "cn2-gap-1" => Some(1),
            "cn2-gap-2" => Some(2),
            "cn2-gap-3" => Some(3),
            other => return Err(SpecError::UnknownPreset(other.to_string())),
        };
        let mut params: BTreeMap<String, Rational> = match gap {
            None => [("u0".to_string(), Rational::zero())].into(),
            Some(_) => [("m".to_string(), rat(1, 1)), ("k2".to_string(), rat(1, 2))].into(),
        };
        for (k, v) in overrides {
            match params.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => return Err(SpecError::UnknownParam(k.clone())),
            }
        }
        match gap {
            None => {
                let u0 = params["u0"].clone();
                Self::new(UniPoly::one(), UniPoly::constant(u0), Some(MapId::Identity), params)
            }
            Some(n) => {
                let m = &params["m"];
                let k2 = &params["k2"];
                let amp = -Rational::from_integer(BigInt::from(n * (n + 1))) * m * m * k2;
                let u = UniPoly::new(vec![Rational::zero(), amp]);
                Self::new(cn2_w(m, k2), u, Some(MapId::Cn2), params)
            }
        }
    }

    pub fn w(&self) -> &UniPoly {
        &self.w
    }

    pub fn u(&self) -> &UniPoly {
        &self.u
    }

    pub fn map_id(&self) -> Option<MapId> {
        self.map
    }

    pub fn params(&self) -> &BTreeMap<String, Rational> {
        &self.params
    }

    /// The x-period of the potential, when it has one.
    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_constant(&self) -> bool {
        self.u.degree().unwrap_or(0) == 0
    }

    pub fn has_numeric_map(&self) -> bool {
        self.numeric.is_some()
    }

    /// `z(x)` through the numeric map.
    pub fn z_at(&self, x: f64) -> Option<f64> {
        self.numeric.map(|m| match m {
            NumericMap::Identity => x,
            NumericMap::Cn2 { m, elliptic } => {
                let cn = elliptic.cn_sn_dn(m * x).0;
                cn * cn
            }
        })
    }

    /// `U(x) = u(z(x))`.
    pub fn potential_at(&self, x: f64) -> Option<f64> {
        self.z_at(x).map(|z| self.u.eval_f64(z))
    }

    pub fn to_document(&self) -> SpecDocument {
        SpecDocument {
            map_id: self.map.map(|m| m.name().to_string()),
            params: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), format_rational(v)))
                .collect(),
            w: coeff_strings(&self.w),
            u: coeff_strings(&self.u),
        }
    }

    pub fn from_document(doc: &SpecDocument) -> Result<Self, SpecError> {
        let parse_list = |xs: &[String]| -> Result<UniPoly, SpecError> {
            Ok(UniPoly::new(
                xs.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>()?,
            ))
        };
        let map = doc.map_id.as_deref().map(MapId::parse).transpose()?;
        let params = doc
            .params
            .iter()
            .map(|(k, v)| Ok((k.clone(), parse_rational(v)?)))
            .collect::<Result<_, SpecError>>()?;
        Self::new(parse_list(&doc.w)?, parse_list(&doc.u)?, map, params)
    }

    pub fn from_json(s: &str) -> Result<Self, SpecError> {
        Self::from_document(&serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("spec document serialises")
    }

    /// Hex SHA-256 of the canonical (compact) JSON document.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.to_document()).expect("spec document serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// On-disk form of a [`PotentialSpec`]. Coefficient lists are indexed by the
/// power of `z`; every number is a rational string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    #[serde(default)]
    pub map_id: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub w: Vec<String>,
    pub u: Vec<String>,
}

pub const PRESETS: &[(&str, &str)] = &[
    ("constant", "U = u0 (params: u0, default 0); z = x"),
    ("cn2-gap-1", "U = -2 m^2 k^2 cn^2(mx;k) (params: m=1, k2=1/2); z = cn^2"),
    ("cn2-gap-2", "U = -6 m^2 k^2 cn^2(mx;k) (params: m=1, k2=1/2); z = cn^2"),
    ("cn2-gap-3", "U = -12 m^2 k^2 cn^2(mx;k) (params: m=1, k2=1/2); z = cn^2"),
];

/// Degree data of a potential: `K = deg u`, `L = deg w − 1`, `a` = leading
/// coefficient of `w`.
pub fn degrees(spec: &PotentialSpec) -> (usize, i64, Rational) {
    let k = spec.u.degree().unwrap_or(0);
    let l = spec.w.degree().map_or(-1, |d| d as i64 - 1);
    let a = spec.w.leading_coeff().cloned().unwrap_or_else(Rational::zero);
    (k, l, a)
}

/// Positive integers `M₀ ≤ m0_max` solving `M₀² + (L−1)M₀ − 4s·uK_norm = 0`
/// for either sign `s`, ascending and without repeats.
pub fn m0_candidates(l: i64, uk_norm: &Rational, m0_max: usize) -> Vec<usize> {
    let four = Rational::from_integer(BigInt::from(4));
    (1..=m0_max)
        .filter(|&m0| {
            let m = m0 as i64;
            let base = Rational::from_integer(BigInt::from(m * m + (l - 1) * m));
            let t = &four * uk_norm;
            (&base - &t).is_zero() || (&base + &t).is_zero()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("constant potential (K = 0) has no minimal N; use the canonical solution")]
    DegenerateCase,
    #[error("inadmissible potential: {0}")]
    Inadmissible(Rejection),
}

/// Why a potential cannot have a polynomial closed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    KNotLMinusOne { k: usize, l: i64 },
    NoIntegerM0 { uk_norm: Rational, m0_max: usize },
    LBelowOne { k: usize, l: i64 },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::KNotLMinusOne { k, l } => {
                write!(f, "K != L-1 (K = {k}, L = {l})")
            }
            Rejection::NoIntegerM0 { uk_norm, m0_max } => write!(
                f,
                "no integer M0 in 1..={m0_max} (u_K/a = {})",
                format_rational(uk_norm)
            ),
            Rejection::LBelowOne { k, l } => write!(f, "L < 1 with K > 0 (K = {k}, L = {l})"),
        }
    }
}

/// `⌈M₀ / K⌉`.
pub fn n_min(m0: usize, k: usize) -> Result<usize, ClassifyError> {
    if k == 0 {
        return Err(ClassifyError::DegenerateCase);
    }
    Ok(m0.div_ceil(k))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub k: usize,
    pub l: i64,
    pub a: Rational,
    pub uk_norm: Rational,
    /// Smallest candidate.
    pub m0: usize,
    pub n_min: usize,
    /// Every admissible `M₀`, ascending.
    pub m0_candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Admissibility {
    /// `u` is constant.
    ConstantPotential,
    Regular(Classification),
}

pub fn admissible(spec: &PotentialSpec, m0_max: usize) -> Result<Admissibility, ClassifyError> {
    let (k, l, a) = degrees(spec);
    if k == 0 {
        return Ok(Admissibility::ConstantPotential);
    }
    if l < 1 {
        return Err(ClassifyError::Inadmissible(Rejection::LBelowOne { k, l }));
    }
    if k as i64 != l - 1 {
        return Err(ClassifyError::Inadmissible(Rejection::KNotLMinusOne { k, l }));
    }
    let uk = spec.u.leading_coeff().expect("K > 0");
    let uk_norm = uk / &a;
    let candidates = m0_candidates(l, &uk_norm, m0_max);
    let Some(&m0) = candidates.first() else {
        return Err(ClassifyError::Inadmissible(Rejection::NoIntegerM0 { uk_norm, m0_max }));
    };
    Ok(Admissibility::Regular(Classification {
        k,
        l,
        a,
        uk_norm,
        m0,
        n_min: n_min(m0, k)?,
        m0_candidates: candidates,
    }))
}
