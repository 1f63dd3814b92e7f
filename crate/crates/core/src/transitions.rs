//! Sufficient conditions for approximate state transitions under resource morphisms,
//! synthesis of the certifying test-and-prepare channel, and independent verification.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::divergences::{d_max_f_unchecked, d_max_smoothed_unchecked, neyman_pearson};
use crate::error::{check_dims, check_epsilon, Error, Result};
use crate::freesets::{FreeSet, FreeSetKind};
use crate::monotones::{gen_log_robustness, hyp_monotone, log_robustness, HypMonotone, Robustness, OVERLAP_BAND};
use crate::opalg::{half_trace_distance, ChannelChoi, DensityMatrix, HermitianOperator, TOL_CP, TOL_TP};

/// Membership tolerance for images of free states in a passing certificate.
pub const PRESERVATION_TOL: f64 = 1e-7;
/// Allowed excess of the transition error over the budget.
pub const ERROR_TOL: f64 = 1e-6;
/// `M` closer than this to one is treated as one.
pub const DEGENERATE_M: f64 = 1e-9;

/// The rule that decided a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Thm1CaseI,
    Thm1CaseII,
    Thm1CaseIIIa,
    Thm1CaseIIIb,
    CorConstantOverlap,
    CorCompact,
    Thm2,
    Prop1Singleton,
    Inconclusive,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Thm1CaseI => "thm1_case_i",
            Rule::Thm1CaseII => "thm1_case_ii",
            Rule::Thm1CaseIIIa => "thm1_case_iiia",
            Rule::Thm1CaseIIIb => "thm1_case_iiib",
            Rule::CorConstantOverlap => "cor_constant_overlap",
            Rule::CorCompact => "cor_compact",
            Rule::Thm2 => "thm2",
            Rule::Prop1Singleton => "prop1_singleton",
            Rule::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which checker to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleChoice {
    /// The four hypothesis-testing cases, constant overlap, compact, the robustness rule, then the singleton rule.
    Auto,
    Thm1,
    CorConstantOverlap,
    CorCompact,
    Thm2,
    Prop1,
}

impl FromStr for RuleChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => RuleChoice::Auto,
            "thm1" => RuleChoice::Thm1,
            "cor_constant_overlap" | "cor2" => RuleChoice::CorConstantOverlap,
            "cor_compact" | "cor1" => RuleChoice::CorCompact,
            "thm2" => RuleChoice::Thm2,
            "prop1" => RuleChoice::Prop1,
            other => return Err(Error::Parse(format!("unknown rule '{other}'"))),
        })
    }
}

/// Cases of the first theorem, in evaluation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Thm1Case {
    I,
    II,
    IIIa,
    IIIb,
}

/// Optimizers the channel is built from.
#[derive(Clone, Debug, Default)]
pub struct Witnesses {
    pub p_star: Option<HermitianOperator>,
    pub omega_star: Option<DensityMatrix>,
    pub sigma_tilde: Option<DensityMatrix>,
    pub sigma_tilde_plus: Option<DensityMatrix>,
    /// `M = 2^{𝔇_h}`; `+∞` allowed.
    pub m: f64,
    /// Free state prepared on rejection when the test never fires on free inputs.
    pub phi: Option<DensityMatrix>,
}

#[derive(Clone, Debug)]
pub struct TransitionVerdict {
    pub decided_by: Rule,
    pub lhs: f64,
    pub rhs: f64,
    pub eps_total: f64,
    pub witnesses: Witnesses,
    /// Every quantity evaluated on the way to the verdict.
    pub quantities: BTreeMap<String, f64>,
}

impl TransitionVerdict {
    pub fn is_decided(&self) -> bool {
        self.decided_by != Rule::Inconclusive
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preservation {
    pub vertex_certified: bool,
    pub samples_checked: usize,
    pub worst_membership_residual: f64,
}

#[derive(Clone, Debug)]
pub struct MorphismCertificate {
    pub channel: ChannelChoi,
    pub cp_residual: f64,
    pub tp_residual: f64,
    pub error: f64,
    pub eps_budget: f64,
    pub preservation: Preservation,
}

impl MorphismCertificate {
    pub fn pass(&self) -> bool {
        self.cp_residual <= TOL_CP
            && self.tp_residual <= TOL_TP
            && self.error <= self.eps_budget + ERROR_TOL
            && self.preservation.worst_membership_residual <= PRESERVATION_TOL
    }
}

/// `a ≥ b` in the extended reals; finite comparisons are relaxed by `slack`.
pub fn ext_ge(a: f64, b: f64, slack: f64) -> bool {
    if b == f64::INFINITY {
        a == f64::INFINITY
    } else if a == f64::INFINITY {
        true
    } else {
        a + slack >= b
    }
}

/// Threshold on `min_φ Tr[P*φ]` for the free-image condition:
/// `(Λ/M − 1)/(Λ − 1)`, with `Λ = 2^{D_max,F(σ̃‖σ̃₊)}`.
pub fn free_image_threshold(m: f64, dmax_f: f64) -> f64 {
    let lambda = dmax_f.exp2();
    if m == f64::INFINITY {
        return 0.0;
    }
    if lambda == f64::INFINITY {
        return 1.0 / m;
    }
    if lambda <= 1.0 {
        return f64::NEG_INFINITY;
    }
    (lambda / m - 1.0) / (lambda - 1.0)
}

/// The free-image inequality `min_φ Tr[P*φ] + slack ≥ threshold`.
pub fn free_image_condition(min_overlap: f64, threshold: f64, slack: f64) -> bool {
    min_overlap + slack >= threshold
}

/// A transition instance with lazily computed, cached monotones.
#[derive(Debug)]
pub struct Instance {
    pub rho: DensityMatrix,
    pub sigma: DensityMatrix,
    pub free_in: FreeSet,
    pub free_out: FreeSet,
    pub eps1: f64,
    pub eps2: f64,
    pub slack: f64,
    hyp: OnceLock<HypMonotone>,
    overlaps: OnceLock<(f64, f64)>,
    gen: OnceLock<Robustness>,
    gen_dmax_f: OnceLock<f64>,
    std: OnceLock<Robustness>,
}

impl Instance {
    pub fn new(
        rho: DensityMatrix,
        sigma: DensityMatrix,
        free_in: FreeSet,
        free_out: FreeSet,
        eps1: f64,
        eps2: f64,
    ) -> Result<Self> {
        check_dims(free_in.dim(), rho.dim())?;
        check_dims(free_out.dim(), sigma.dim())?;
        check_epsilon(eps1)?;
        check_epsilon(eps2)?;
        Ok(Self {
            rho,
            sigma,
            free_in,
            free_out,
            eps1,
            eps2,
            slack: 0.0,
            hyp: OnceLock::new(),
            overlaps: OnceLock::new(),
            gen: OnceLock::new(),
            gen_dmax_f: OnceLock::new(),
            std: OnceLock::new(),
        })
    }

    pub fn with_slack(mut self, slack: f64) -> Result<Self> {
        if !(slack >= 0.0 && slack.is_finite()) {
            return Err(Error::InvalidParameter(format!("slack must be finite and non-negative, got {slack}")));
        }
        self.slack = slack;
        Ok(self)
    }

    /// `𝔇_h^{ε₁}(ρ)` with its saddle point.
    pub fn hyp(&self) -> &HypMonotone {
        self.hyp
            .get_or_init(|| hyp_monotone(&self.rho, &self.free_in, self.eps1).expect("dimensions validated"))
    }

    /// Certified `(min, max)` of `Tr[P*ω]` over the input free set.
    pub fn overlaps(&self) -> (f64, f64) {
        *self.overlaps.get_or_init(|| {
            let p = self.hyp().p_star.operator().clone();
            let lo = self.free_in.min_linear(&p).expect("dimensions validated").bound;
            let hi = self.free_in.max_linear(&p).expect("dimensions validated").bound;
            (lo.max(0.0), hi.min(1.0))
        })
    }

    /// `𝔇_max^{ε₂}(σ)` with witnesses `(σ̃, σ̃₊)`.
    pub fn gen_robustness(&self) -> &Robustness {
        self.gen
            .get_or_init(|| gen_log_robustness(&self.sigma, &self.free_out, self.eps2).expect("dimensions validated"))
    }

    /// `D_max,F(σ̃‖σ̃₊)` on the generalized witnesses.
    pub fn gen_dmax_f(&self) -> f64 {
        *self.gen_dmax_f.get_or_init(|| {
            let g = self.gen_robustness();
            if g.value == 0.0 {
                return 0.0;
            }
            // D_max,F dominates D_max; the maximum guards the near-free case.
            d_max_f_unchecked(&g.sigma_tilde, &g.sigma_tilde_plus, &self.free_out).value.max(g.value)
        })
    }

    /// `𝔇_max,F^{ε₂}(σ)` with its own witnesses.
    pub fn std_robustness(&self) -> &Robustness {
        self.std
            .get_or_init(|| log_robustness(&self.sigma, &self.free_out, self.eps2).expect("dimensions validated"))
    }

    fn base_quantities(&self) -> BTreeMap<String, f64> {
        let mut q = BTreeMap::new();
        q.insert("eps1".into(), self.eps1);
        q.insert("eps2".into(), self.eps2);
        q.insert("slack".into(), self.slack);
        q
    }

    fn hyp_quantities(&self, q: &mut BTreeMap<String, f64>) {
        let h = self.hyp();
        q.insert("d_h".into(), h.value);
        q.insert("M".into(), h.m());
        q.insert("hyp_gap".into(), h.gap());
    }

    fn thm1_witnesses(&self) -> Witnesses {
        let h = self.hyp();
        let g = self.gen_robustness();
        Witnesses {
            p_star: Some(h.p_star.operator().clone()),
            omega_star: Some(h.omega_star.clone()),
            sigma_tilde: Some(g.sigma_tilde.clone()),
            sigma_tilde_plus: Some(g.sigma_tilde_plus.clone()),
            m: h.m(),
            phi: None,
        }
    }

    fn verdict(&self, rule: Rule, lhs: f64, rhs: f64, witnesses: Witnesses, quantities: BTreeMap<String, f64>) -> TransitionVerdict {
        let eps_total = match rule {
            Rule::Thm1CaseI => self.eps1,
            Rule::Thm1CaseII => self.eps2,
            Rule::Inconclusive => 0.0,
            _ => self.eps1 + self.eps2,
        };
        TransitionVerdict {
            decided_by: rule,
            lhs,
            rhs,
            eps_total,
            witnesses,
            quantities,
        }
    }

    /// One case of the first theorem; inconclusive if its conditions fail.
    pub fn theorem1_case(&self, case: Thm1Case) -> TransitionVerdict {
        let mut q = self.base_quantities();
        match case {
            Thm1Case::I => {
                self.hyp_quantities(&mut q);
                let h = self.hyp();
                let w = Witnesses {
                    p_star: Some(h.p_star.operator().clone()),
                    omega_star: Some(h.omega_star.clone()),
                    sigma_tilde: Some(self.sigma.clone()),
                    sigma_tilde_plus: None,
                    m: h.m(),
                    phi: Some(self.free_out.sample(0)),
                };
                let rule = if h.value == f64::INFINITY { Rule::Thm1CaseI } else { Rule::Inconclusive };
                self.verdict(rule, h.value, f64::INFINITY, w, q)
            }
            Thm1Case::II => {
                let g = self.gen_robustness();
                q.insert("d_max_eps".into(), g.value);
                let rule = if g.value == 0.0 { Rule::Thm1CaseII } else { Rule::Inconclusive };
                let w = Witnesses {
                    sigma_tilde: Some(g.sigma_tilde.clone()),
                    sigma_tilde_plus: Some(g.sigma_tilde_plus.clone()),
                    m: f64::NAN,
                    ..Witnesses::default()
                };
                self.verdict(rule, g.value, 0.0, w, q)
            }
            Thm1Case::IIIa | Thm1Case::IIIb => {
                self.hyp_quantities(&mut q);
                let h = self.hyp();
                let g = self.gen_robustness();
                q.insert("d_max_eps".into(), g.value);
                let dominates = ext_ge(h.value, g.value, self.slack);
                q.insert("dh_dominates_dmax".into(), bool_num(dominates));
                let m = h.m();
                let holds = dominates
                    && if case == Thm1Case::IIIa {
                        let dmf = self.gen_dmax_f();
                        q.insert("dmax_f_witnesses".into(), dmf);
                        let (lo, _) = self.overlaps();
                        let threshold = free_image_threshold(m, dmf);
                        q.insert("min_overlap".into(), lo);
                        q.insert("free_image_threshold".into(), threshold);
                        let free_image = free_image_condition(lo, threshold, self.slack);
                        q.insert("free_image".into(), bool_num(free_image));
                        dmf.is_finite() && free_image
                    } else {
                        let (lo, hi) = self.overlaps();
                        let spread = (hi - lo).max(0.0);
                        q.insert("overlap_spread".into(), spread);
                        let constant = spread <= OVERLAP_BAND;
                        q.insert("constant_overlap".into(), bool_num(constant));
                        constant
                    };
                let rule = match (holds, case) {
                    (false, _) => Rule::Inconclusive,
                    (true, Thm1Case::IIIa) => Rule::Thm1CaseIIIa,
                    (true, _) => Rule::Thm1CaseIIIb,
                };
                self.verdict(rule, h.value, g.value, self.thm1_witnesses(), q)
            }
        }
    }

    /// First theorem, cases in order; the inconclusive verdict merges all quantities.
    pub fn theorem1(&self) -> TransitionVerdict {
        let mut merged = BTreeMap::new();
        let mut last = None;
        for case in [Thm1Case::I, Thm1Case::II, Thm1Case::IIIa, Thm1Case::IIIb] {
            let v = self.theorem1_case(case);
            if v.is_decided() {
                return v;
            }
            merged.extend(v.quantities.clone());
            last = Some(v);
        }
        let mut v = last.expect("four cases evaluated");
        v.quantities = merged;
        v
    }

    pub fn cor_constant_overlap(&self) -> TransitionVerdict {
        let mut q = self.base_quantities();
        self.hyp_quantities(&mut q);
        let h = self.hyp();
        let (lo, hi) = self.overlaps();
        let spread = (hi - lo).max(0.0);
        q.insert("overlap_spread".into(), spread);
        let premise = spread <= OVERLAP_BAND;
        let g = self.gen_robustness();
        q.insert("d_max_eps".into(), g.value);
        let rule = if premise && ext_ge(h.value, g.value, self.slack) {
            Rule::CorConstantOverlap
        } else {
            Rule::Inconclusive
        };
        self.verdict(rule, h.value, g.value, self.thm1_witnesses(), q)
    }

    pub fn cor_compact(&self) -> TransitionVerdict {
        let mut q = self.base_quantities();
        self.hyp_quantities(&mut q);
        let h = self.hyp();
        let g = self.gen_robustness();
        q.insert("d_max_eps".into(), g.value);
        let dmf = self.gen_dmax_f();
        q.insert("dmax_f_witnesses".into(), dmf);
        let rule = if ext_ge(h.value, dmf, self.slack) { Rule::CorCompact } else { Rule::Inconclusive };
        self.verdict(rule, h.value, dmf, self.thm1_witnesses(), q)
    }

    pub fn theorem2(&self) -> TransitionVerdict {
        let mut q = self.base_quantities();
        self.hyp_quantities(&mut q);
        let h = self.hyp();
        let s = self.std_robustness();
        q.insert("d_max_f_eps".into(), s.value);
        let rule = if ext_ge(h.value, s.value, self.slack) { Rule::Thm2 } else { Rule::Inconclusive };
        let w = Witnesses {
            p_star: Some(h.p_star.operator().clone()),
            omega_star: Some(h.omega_star.clone()),
            sigma_tilde: Some(s.sigma_tilde.clone()),
            sigma_tilde_plus: Some(s.sigma_tilde_plus.clone()),
            m: h.m(),
            phi: None,
        };
        self.verdict(rule, h.value, s.value, w, q)
    }

    /// Singleton rule; `None` unless both free sets are singletons.
    pub fn prop1(&self) -> Option<TransitionVerdict> {
        let (FreeSetKind::Singleton(gamma), FreeSetKind::Singleton(gamma_out)) = (self.free_in.kind(), self.free_out.kind())
        else {
            return None;
        };
        let mut q = self.base_quantities();
        let np = neyman_pearson(&self.rho, gamma, self.eps1);
        let overlap = np.test.inner(gamma).clamp(0.0, 1.0);
        let m = if overlap <= 0.0 { f64::INFINITY } else { 1.0 / overlap };
        let smoothed = d_max_smoothed_unchecked(&self.sigma, gamma_out, self.eps2);
        q.insert("d_h".into(), np.value);
        q.insert("M".into(), m);
        q.insert("d_max_eps".into(), smoothed.value);
        let rule = if ext_ge(np.value, smoothed.value, self.slack) {
            Rule::Prop1Singleton
        } else {
            Rule::Inconclusive
        };
        let w = Witnesses {
            p_star: Some(np.test.operator().clone()),
            omega_star: Some(gamma.clone()),
            sigma_tilde: Some(smoothed.witness.clone()),
            sigma_tilde_plus: Some(gamma_out.clone()),
            m,
            phi: None,
        };
        Some(self.verdict(rule, np.value, smoothed.value, w, q))
    }

    pub fn check(&self, choice: RuleChoice) -> TransitionVerdict {
        match choice {
            RuleChoice::Auto => self.auto(),
            RuleChoice::Thm1 => self.theorem1(),
            RuleChoice::CorConstantOverlap => self.cor_constant_overlap(),
            RuleChoice::CorCompact => self.cor_compact(),
            RuleChoice::Thm2 => self.theorem2(),
            RuleChoice::Prop1 => self.prop1().unwrap_or_else(|| {
                let mut q = self.base_quantities();
                q.insert("singleton_free_sets".into(), 0.0);
                self.verdict(Rule::Inconclusive, f64::NAN, f64::NAN, Witnesses::default(), q)
            }),
        }
    }

    /// Every rule in turn; the first decision wins.
    pub fn auto(&self) -> TransitionVerdict {
        let mut merged = BTreeMap::new();
        let mut last = None;
        let candidates: [&dyn Fn() -> Option<TransitionVerdict>; 5] = [
            &|| Some(self.theorem1()),
            &|| Some(self.cor_constant_overlap()),
            &|| Some(self.cor_compact()),
            &|| Some(self.theorem2()),
            &|| self.prop1(),
        ];
        for run in candidates {
            if let Some(v) = run() {
                if v.is_decided() {
                    return v;
                }
                merged.extend(v.quantities.clone());
                last = Some(v);
            }
        }
        let mut v = last.expect("at least one rule evaluated");
        v.quantities = merged;
        v
    }

    pub fn synthesize(&self, verdict: &TransitionVerdict) -> Result<ChannelChoi> {
        synthesize(verdict, &self.rho, &self.sigma, &self.free_out)
    }

    pub fn verify(&self, channel: &ChannelChoi, eps_budget: f64, n_samples: usize, seed: u64) -> Result<MorphismCertificate> {
        verify_morphism(channel, &self.free_in, &self.free_out, &self.rho, &self.sigma, eps_budget, n_samples, seed)
    }
}

fn bool_num(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn missing(what: &str) -> Error {
    Error::PreconditionViolation(format!("verdict lacks witness {what}"))
}

/// Builds the test-and-prepare channel certified by a decided verdict.
pub fn synthesize(verdict: &TransitionVerdict, rho: &DensityMatrix, sigma: &DensityMatrix, free_out: &FreeSet) -> Result<ChannelChoi> {
    check_dims(free_out.dim(), sigma.dim())?;
    let w = &verdict.witnesses;
    let d_in = rho.dim();
    match verdict.decided_by {
        Rule::Inconclusive => Err(Error::PreconditionViolation("cannot synthesize from an inconclusive verdict".into())),
        Rule::Thm1CaseI => {
            let p = w.p_star.as_ref().ok_or_else(|| missing("P*"))?;
            let phi = w.phi.clone().unwrap_or_else(|| free_out.sample(0));
            ChannelChoi::test_and_prepare(p, sigma, &phi)
        }
        Rule::Thm1CaseII => {
            let plus = w.sigma_tilde_plus.as_ref().ok_or_else(|| missing("σ̃₊"))?;
            Ok(ChannelChoi::constant(d_in, plus))
        }
        _ => {
            let p = w.p_star.as_ref().ok_or_else(|| missing("P*"))?;
            let tilde = w.sigma_tilde.as_ref().ok_or_else(|| missing("σ̃"))?;
            let plus = w.sigma_tilde_plus.as_ref().ok_or_else(|| missing("σ̃₊"))?;
            let m = w.m;
            if m == f64::INFINITY {
                ChannelChoi::test_and_prepare(p, tilde, plus)
            } else if m.is_nan() || m <= 1.0 + DEGENERATE_M {
                Ok(ChannelChoi::constant(d_in, plus))
            } else {
                let reject = plus.combine(m / (m - 1.0), tilde, -1.0 / (m - 1.0));
                ChannelChoi::test_and_prepare(p, tilde, &DensityMatrix::assume_valid(reject))
            }
        }
    }
}

/// Independent check that a channel is CPTP, reaches the target within budget and
/// maps free states into the output free set.
#[allow(clippy::too_many_arguments)]
pub fn verify_morphism(
    channel: &ChannelChoi,
    free_in: &FreeSet,
    free_out: &FreeSet,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps_budget: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MorphismCertificate> {
    check_dims(channel.dim_in, free_in.dim())?;
    check_dims(channel.dim_in, rho.dim())?;
    check_dims(channel.dim_out, free_out.dim())?;
    check_dims(channel.dim_out, sigma.dim())?;
    let image = channel.apply_operator(rho)?;
    let error = half_trace_distance(&DensityMatrix::assume_valid(image), sigma)?;
    let residual = |omega: &DensityMatrix| -> Result<f64> { Ok(free_out.membership_residual(&channel.apply_operator(omega)?)) };
    let mut worst: f64 = 0.0;
    let vertices = free_in.vertices();
    let vertex_certified = vertices.is_some();
    for v in vertices.iter().flatten() {
        worst = worst.max(residual(v)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        worst = worst.max(residual(&free_in.sample_with(&mut rng))?);
    }
    Ok(MorphismCertificate {
        channel: channel.clone(),
        cp_residual: channel.cp_residual(),
        tp_residual: channel.tp_residual(),
        error,
        eps_budget,
        preservation: Preservation {
            vertex_certified,
            samples_checked: n_samples,
            worst_membership_residual: worst,
        },
    })
}

/// Proof scalar `t = (1 − Tr[P*φ])/(1 − 2^{−𝔇_h})` for a free input `φ`; `None` when
/// the verdict has no finite `M > 1`.
pub fn proof_scalar(verdict: &TransitionVerdict, phi: &DensityMatrix) -> Option<f64> {
    let m = verdict.witnesses.m;
    let p = verdict.witnesses.p_star.as_ref()?;
    if !(m.is_finite() && m > 1.0 + DEGENERATE_M) {
        return None;
    }
    Some((1.0 - p.inner(phi)) / (1.0 - 1.0 / m))
}

/// First theorem with one free set on both sides.
pub fn check_theorem1(rho: &DensityMatrix, sigma: &DensityMatrix, free: &FreeSet, eps1: f64, eps2: f64) -> Result<TransitionVerdict> {
    Ok(Instance::new(rho.clone(), sigma.clone(), free.clone(), free.clone(), eps1, eps2)?.theorem1())
}

pub fn check_cor_constant_overlap(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    free: &FreeSet,
    eps1: f64,
    eps2: f64,
) -> Result<TransitionVerdict> {
    Ok(Instance::new(rho.clone(), sigma.clone(), free.clone(), free.clone(), eps1, eps2)?.cor_constant_overlap())
}

pub fn check_cor_compact(rho: &DensityMatrix, sigma: &DensityMatrix, free: &FreeSet, eps1: f64, eps2: f64) -> Result<TransitionVerdict> {
    Ok(Instance::new(rho.clone(), sigma.clone(), free.clone(), free.clone(), eps1, eps2)?.cor_compact())
}

pub fn check_theorem2(rho: &DensityMatrix, sigma: &DensityMatrix, free: &FreeSet, eps1: f64, eps2: f64) -> Result<TransitionVerdict> {
    Ok(Instance::new(rho.clone(), sigma.clone(), free.clone(), free.clone(), eps1, eps2)?.theorem2())
}

/// Singleton rule with input `(ρ, γ)` and output `(σ, γ′)` of possibly different dimension.
pub fn check_prop1_singleton(
    rho: &DensityMatrix,
    gamma: &DensityMatrix,
    sigma: &DensityMatrix,
    gamma_out: &DensityMatrix,
    eps1: f64,
    eps2: f64,
) -> Result<TransitionVerdict> {
    let inst = Instance::new(
        rho.clone(),
        sigma.clone(),
        FreeSet::singleton(gamma.clone()),
        FreeSet::singleton(gamma_out.clone()),
        eps1,
        eps2,
    )?;
    Ok(inst.prop1().expect("singleton free sets"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn plus(d: usize) -> DensityMatrix {
        DensityMatrix::max_coherent(d)
    }

    fn diag(v: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal_state(v).unwrap()
    }

    fn end_to_end(inst: &Instance, v: &TransitionVerdict) -> MorphismCertificate {
        let e = inst.synthesize(v).unwrap();
        let cert = inst.verify(&e, v.eps_total, 50, 7).unwrap();
        assert!(cert.pass(), "{:?} cp {} tp {} err {} worst {}", v.decided_by, cert.cp_residual, cert.tp_residual, cert.error, cert.preservation.worst_membership_residual);
        cert
    }

    #[test]
    fn singleton_worked_example() {
        let rho = DensityMatrix::basis(2, 0);
        let gamma = DensityMatrix::maximally_mixed(2);
        let sigma = diag(&[0.75, 0.25]);
        let v = check_prop1_singleton(&rho, &gamma, &sigma, &gamma, 0.0, 0.0).unwrap();
        assert_eq!(v.decided_by, Rule::Prop1Singleton);
        close(v.lhs, 1.0, 1e-12);
        close(v.rhs, 1.5f64.log2(), 1e-9);
        let e = synthesize(&v, &rho, &sigma, &FreeSet::singleton(gamma.clone())).unwrap();
        let desc = e.description.as_ref().unwrap();
        assert!((&desc.on_reject.as_operator().clone() - diag(&[0.25, 0.75]).as_operator()).max_abs_entry() < 1e-9);
        let img_g = e.apply_operator(&gamma).unwrap();
        let img_r = e.apply_operator(&rho).unwrap();
        assert!((&img_g - gamma.as_operator()).max_abs_entry() < 1e-9);
        assert!((&img_r - sigma.as_operator()).max_abs_entry() < 1e-9);
    }

    #[test]
    fn prop1_identity_instance() {
        let gamma = DensityMatrix::maximally_mixed(3);
        let gp = diag(&[0.5, 0.5]);
        let v = check_prop1_singleton(&gamma, &gamma, &gp, &gp, 0.0, 0.0).unwrap();
        assert_eq!(v.decided_by, Rule::Prop1Singleton);
        let gbad = DensityMatrix::basis(2, 0);
        let v = check_prop1_singleton(&gamma, &gamma, &DensityMatrix::basis(2, 1), &gbad, 0.0, 0.0).unwrap();
        assert_eq!(v.decided_by, Rule::Inconclusive);
    }

    #[test]
    fn case_i_for_disjoint_support() {
        let rho = DensityMatrix::basis(2, 0);
        let free = FreeSet::singleton(DensityMatrix::basis(2, 1));
        let sigma = diag(&[0.3, 0.7]);
        let inst = Instance::new(rho, sigma, free.clone(), free, 0.0, 0.0).unwrap();
        let v = inst.theorem1();
        assert_eq!(v.decided_by, Rule::Thm1CaseI);
        assert_eq!(v.eps_total, 0.0);
        end_to_end(&inst, &v);
    }

    #[test]
    fn case_ii_for_free_target() {
        let free = FreeSet::incoherent(2);
        let inst = Instance::new(plus(2), diag(&[0.75, 0.25]), free.clone(), free, 0.0, 0.0).unwrap();
        let v = inst.theorem1();
        assert_eq!(v.decided_by, Rule::Thm1CaseII);
        let cert = end_to_end(&inst, &v);
        assert!(cert.preservation.vertex_certified);
    }

    #[test]
    fn coherence_case_iiib_channel() {
        let free = FreeSet::incoherent(2);
        let sigma = diag(&[0.75, 0.25]);
        let inst = Instance::new(plus(2), sigma.clone(), free.clone(), free, 0.0, 0.0).unwrap();
        let v = inst.theorem1_case(Thm1Case::IIIb);
        assert_eq!(v.decided_by, Rule::Thm1CaseIIIb);
        close(v.witnesses.m, 2.0, 1e-12);
        let e = inst.synthesize(&v).unwrap();
        let img = e.apply_operator(&plus(2)).unwrap();
        assert!((&img - sigma.as_operator()).max_abs_entry() < 1e-12);
        for i in 0..2 {
            let out = e.apply_operator(&DensityMatrix::basis(2, i)).unwrap();
            assert!(out.max_abs_off_diagonal() < 1e-12);
        }
        let cert = inst.verify(&e, 0.0, 200, 3).unwrap();
        assert!(cert.pass());
    }

    #[test]
    fn maximally_coherent_decides_by_constant_overlap() {
        let free = FreeSet::incoherent(3);
        let mut sigma = DensityMatrix::max_coherent(2).as_operator().matrix().clone();
        sigma = sigma.resize(3, 3, num_complex::Complex64::new(0.0, 0.0));
        let sigma = DensityMatrix::from_matrix(sigma).unwrap();
        let inst = Instance::new(plus(3), sigma, free.clone(), free, 0.0, 0.0).unwrap();
        let v = inst.theorem1();
        assert_eq!(v.decided_by, Rule::Thm1CaseIIIb);
        close(v.rhs, 1.0, 1e-6);
        end_to_end(&inst, &v);
        let c = inst.cor_constant_overlap();
        assert_eq!(c.decided_by, Rule::CorConstantOverlap);
        end_to_end(&inst, &c);
    }

    #[test]
    fn non_constant_overlap_is_inconclusive() {
        let free = FreeSet::incoherent(2);
        let rho = DensityMatrix::basis(2, 0).mix(&plus(2), 0.5);
        let inst = Instance::new(rho, plus(2), free.clone(), free, 0.0, 0.0).unwrap();
        assert_eq!(inst.cor_constant_overlap().decided_by, Rule::Inconclusive);
    }

    #[test]
    fn ppt_compact_and_theorem2() {
        let free = FreeSet::ppt(2, 2).unwrap();
        let rho = DensityMatrix::max_entangled(2);
        let sigma = DensityMatrix::isotropic(2, 0.6).unwrap();
        let inst = Instance::new(rho, sigma, free.clone(), free, 0.0, 0.0).unwrap();
        let v = inst.cor_compact();
        assert_eq!(v.decided_by, Rule::CorCompact, "{:?}", v.quantities);
        assert!(v.rhs <= 1.0);
        let cert = end_to_end(&inst, &v);
        assert!(!cert.preservation.vertex_certified);
        let t2 = inst.theorem2();
        assert_eq!(t2.decided_by, Rule::Thm2);
        end_to_end(&inst, &t2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for verdict in [&v, &t2] {
            let m = verdict.witnesses.m;
            for _ in 0..20 {
                let phi = inst.free_in.sample_with(&mut rng);
                let t = proof_scalar(verdict, &phi).unwrap();
                assert!(t >= 1.0 - 1e-9);
                assert!(t <= m / (m - 1.0) + 1e-9);
            }
        }
    }

    #[test]
    fn inconclusive_cannot_be_synthesized() {
        let free = FreeSet::incoherent(2);
        let rho = diag(&[0.5, 0.5]);
        let inst = Instance::new(rho, plus(2), free.clone(), free, 0.0, 0.0).unwrap();
        let v = inst.auto();
        assert_eq!(v.decided_by, Rule::Inconclusive);
        assert!(matches!(inst.synthesize(&v), Err(Error::PreconditionViolation(_))));
    }

    #[test]
    fn verify_identity_and_constant() {
        let free = FreeSet::incoherent(3);
        let id = ChannelChoi::identity(3);
        let rho = plus(3);
        let cert = verify_morphism(&id, &free, &free, &rho, &rho, 0.0, 20, 1).unwrap();
        assert!(cert.pass() && cert.preservation.vertex_certified);
        let ppt = FreeSet::ppt(2, 2).unwrap();
        let c = ChannelChoi::constant(3, &DensityMatrix::maximally_mixed(4));
        let cert = verify_morphism(&c, &free, &ppt, &rho, &DensityMatrix::maximally_mixed(4), 0.0, 20, 1).unwrap();
        assert!(cert.pass());
    }

    #[test]
    fn extended_comparison() {
        assert!(ext_ge(f64::INFINITY, f64::INFINITY, 0.0));
        assert!(!ext_ge(1e300, f64::INFINITY, 1.0));
        assert!(ext_ge(1.0, 1.0 + 1e-10, 1e-9));
        assert!(!ext_ge(1.0, 1.0 + 1e-10, 0.0));
    }
}
