//! The consolidation decision as a mixed-integer linear program.
//!
//! Binaries `S_v_p`, `X_p`, `Y_r`, `F00_p`, `F10_p` carry the mapping and the
//! activity/transition indicators. Continuous auxiliaries hold each cost
//! term (`E_pm_p`, `E_rack`, `E_mig` in Wh, `C_ene`, `C_rel`, `G_rel` in
//! dollars) so that the objective is a three-term weighted sum.
//!
//! The PM energy term `tau (1 - F00 - F10) Power(theta)` is linear as
//! written: `S_v_p <= 1 - F10_p - F00_p` forces every `S_v_p` of a PM that is
//! off to zero, so the utilization part can be expanded over `S` alone.

use std::fmt::{self, Write as _};

use crate::costs::{
    shutdown_cost_hours, Bounds, CostWeights, MigrationCostModel, ReliabilityParams,
};
use crate::domain::{flags_unchecked, DatacenterState, Placement, Resource};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Which part of the formulation a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `F10_p = 0` for a PM offline in `t`.
    OfflineCannotStop,
    /// `F00_p = 0` for a PM online in `t`.
    OnlineCannotStayOff,
    /// `S_v_p <= 1 - (F10_p + F00_p)`.
    HostOnlyIfOn,
    /// `1 - (F10_p + F00_p) <= sum_v S_v_p`.
    OffOnlyIfEmpty,
    Capacity,
    Assignment,
    /// `sum_v S_v_p <= M X_p`.
    PmActivation,
    /// `X_p <= sum_v S_v_p`.
    PmActivityLink,
    /// `sum_{p in r} X_p <= M Y_r`.
    RackActivation,
    /// `Y_r <= sum_{p in r} X_p`.
    RackActivityLink,
    /// Equality defining a continuous cost variable.
    Definition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<T> {
    pub name: String,
    pub family: Family,
    pub terms: Vec<(VarId, T)>,
    pub sense: Sense,
    pub rhs: T,
}

impl<T: Scalar> LinearConstraint<T> {
    pub fn lhs(&self, values: &[T]) -> T {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    pub fn satisfied(&self, values: &[T], tol: T) -> bool {
        let lhs = self.lhs(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs + tol >= self.rhs,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Big-M constants, the smallest values that keep every feasible point.
#[derive(Debug, Clone, PartialEq)]
pub struct BigM<T> {
    /// `|V|`: a PM can host every VM.
    pub pm_activation: T,
    /// Per rack, its PM count.
    pub rack_activation: Vec<T>,
}

/// Positions of each variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    pub n_vms: usize,
    pub n_pms: usize,
    pub n_racks: usize,
}

impl VarIndex {
    pub fn s(&self, vm: usize, pm: usize) -> VarId {
        vm * self.n_pms + pm
    }
    pub fn x(&self, pm: usize) -> VarId {
        self.n_vms * self.n_pms + pm
    }
    pub fn y(&self, rack: usize) -> VarId {
        self.n_vms * self.n_pms + self.n_pms + rack
    }
    pub fn f00(&self, pm: usize) -> VarId {
        self.n_vms * self.n_pms + self.n_pms + self.n_racks + pm
    }
    pub fn f10(&self, pm: usize) -> VarId {
        self.n_vms * self.n_pms + 2 * self.n_pms + self.n_racks + pm
    }
    pub fn n_binary(&self) -> usize {
        self.n_vms * self.n_pms + 3 * self.n_pms + self.n_racks
    }
    pub fn e_pm(&self, pm: usize) -> VarId {
        self.n_binary() + pm
    }
    pub fn e_rack(&self) -> VarId {
        self.n_binary() + self.n_pms
    }
    pub fn e_mig(&self) -> VarId {
        self.e_rack() + 1
    }
    pub fn c_ene(&self) -> VarId {
        self.e_rack() + 2
    }
    pub fn c_rel(&self) -> VarId {
        self.e_rack() + 3
    }
    pub fn g_rel(&self) -> VarId {
        self.e_rack() + 4
    }
    pub fn n_vars(&self) -> usize {
        self.g_rel() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel<T> {
    pub index: VarIndex,
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint<T>>,
    /// Minimized linear objective.
    pub objective: Vec<(VarId, T)>,
    pub big_m: BigM<T>,
    /// Normalization constants baked into the objective coefficients.
    pub bounds: Bounds<T>,
    /// Continuous variables with the row defining each, in evaluation order.
    pub definitions: Vec<(VarId, usize)>,
}

/// Variable and row counts of a built model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelStats {
    pub n_binary: usize,
    pub n_continuous: usize,
    pub n_constraints: usize,
}

impl ModelStats {
    /// Counts for `|V|`, `|P|`, `|R|` and `|U|` packed resource types:
    /// binaries `VP + 3P + R`, continuous `P + 5`,
    /// rows `VP + V + (5 + U)P + 2R + 5`.
    pub fn closed_form(n_vms: usize, n_pms: usize, n_racks: usize, n_packed: usize) -> Self {
        Self {
            n_binary: n_vms * n_pms + 3 * n_pms + n_racks,
            n_continuous: n_pms + 5,
            n_constraints: n_vms * n_pms + n_vms + (5 + n_packed) * n_pms + 2 * n_racks + 5,
        }
    }

    pub const FORMULA: &'static str =
        "binary = V*P + 3P + R; continuous = P + 5; constraints = V*P + V + (5+U)P + 2R + 5";

    pub fn n_variables(&self) -> usize {
        self.n_binary + self.n_continuous
    }
}

impl fmt::Display for ModelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} binary, {} continuous, {} constraints ({})",
            self.n_binary,
            self.n_continuous,
            self.n_constraints,
            Self::FORMULA
        )
    }
}

struct Builder<T> {
    constraints: Vec<LinearConstraint<T>>,
}

impl<T: Scalar> Builder<T> {
    fn push(
        &mut self,
        name: String,
        family: Family,
        terms: Vec<(VarId, T)>,
        sense: Sense,
        rhs: T,
    ) -> usize {
        self.constraints.push(LinearConstraint {
            name,
            family,
            terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }
}

/// Builds the model for the decision out of `dc.current`.
pub fn build_model<T: Scalar>(
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
) -> Result<MilpModel<T>> {
    weights.validate()?;
    params.validate()?;
    mig.validate(dc.n_pms())?;
    for &r in &dc.packed {
        let capacity: T = dc.pms.iter().map(|pm| pm.capacity.get(r)).sum();
        if dc.total_demand(r) > capacity {
            return Err(Error::Infeasible(format!(
                "aggregate {r} demand exceeds datacenter capacity"
            )));
        }
    }
    let bounds = Bounds::compute(dc, &dc.current, weights, params, mig)?;
    let ix = VarIndex {
        n_vms: dc.n_vms(),
        n_pms: dc.n_pms(),
        n_racks: dc.n_racks(),
    };

    let mut variables = Vec::with_capacity(ix.n_vars());
    for v in 0..ix.n_vms {
        for p in 0..ix.n_pms {
            variables.push(binary(format!("S_{v}_{p}")));
        }
    }
    variables.extend((0..ix.n_pms).map(|p| binary(format!("X_{p}"))));
    variables.extend((0..ix.n_racks).map(|r| binary(format!("Y_{r}"))));
    variables.extend((0..ix.n_pms).map(|p| binary(format!("F00_{p}"))));
    variables.extend((0..ix.n_pms).map(|p| binary(format!("F10_{p}"))));
    variables.extend((0..ix.n_pms).map(|p| continuous(format!("E_pm_{p}"))));
    for name in ["E_rack", "E_mig", "C_ene", "C_rel", "G_rel"] {
        variables.push(continuous(name.to_string()));
    }
    debug_assert_eq!(variables.len(), ix.n_vars());

    let one = T::one();
    let mut b = Builder {
        constraints: Vec::new(),
    };

    for p in 0..ix.n_pms {
        if dc.current.is_active(p) {
            b.push(
                format!("c2_p{p}"),
                Family::OnlineCannotStayOff,
                vec![(ix.f00(p), one)],
                Sense::Eq,
                T::zero(),
            );
        } else {
            b.push(
                format!("c1_p{p}"),
                Family::OfflineCannotStop,
                vec![(ix.f10(p), one)],
                Sense::Eq,
                T::zero(),
            );
        }
    }
    for v in 0..ix.n_vms {
        for p in 0..ix.n_pms {
            b.push(
                format!("c3_v{v}_p{p}"),
                Family::HostOnlyIfOn,
                vec![(ix.s(v, p), one), (ix.f10(p), one), (ix.f00(p), one)],
                Sense::Le,
                one,
            );
        }
    }
    for p in 0..ix.n_pms {
        let mut terms: Vec<(VarId, T)> = (0..ix.n_vms).map(|v| (ix.s(v, p), one)).collect();
        terms.push((ix.f10(p), one));
        terms.push((ix.f00(p), one));
        b.push(
            format!("c4_p{p}"),
            Family::OffOnlyIfEmpty,
            terms,
            Sense::Ge,
            one,
        );
    }
    for p in 0..ix.n_pms {
        for &r in &dc.packed {
            let terms = (0..ix.n_vms)
                .filter(|&v| dc.vms[v].demand.get(r) != T::zero())
                .map(|v| (ix.s(v, p), dc.vms[v].demand.get(r)))
                .collect();
            b.push(
                format!("c5_{r}_p{p}"),
                Family::Capacity,
                terms,
                Sense::Le,
                dc.pms[p].capacity.get(r),
            );
        }
    }
    for v in 0..ix.n_vms {
        let terms = (0..ix.n_pms).map(|p| (ix.s(v, p), one)).collect();
        b.push(
            format!("c6_v{v}"),
            Family::Assignment,
            terms,
            Sense::Eq,
            one,
        );
    }
    let m_pm = T::of_usize(ix.n_vms);
    for p in 0..ix.n_pms {
        let mut terms: Vec<(VarId, T)> = (0..ix.n_vms).map(|v| (ix.s(v, p), one)).collect();
        terms.push((ix.x(p), -m_pm));
        b.push(
            format!("c7_p{p}"),
            Family::PmActivation,
            terms,
            Sense::Le,
            T::zero(),
        );
    }
    for p in 0..ix.n_pms {
        let mut terms = vec![(ix.x(p), one)];
        terms.extend((0..ix.n_vms).map(|v| (ix.s(v, p), -one)));
        b.push(
            format!("c7b_p{p}"),
            Family::PmActivityLink,
            terms,
            Sense::Le,
            T::zero(),
        );
    }
    let mut rack_m = Vec::with_capacity(ix.n_racks);
    for rack in &dc.racks {
        let m = T::of_usize(rack.pm_ids.len());
        rack_m.push(m);
        let mut terms: Vec<(VarId, T)> = rack.pm_ids.iter().map(|&p| (ix.x(p), one)).collect();
        terms.push((ix.y(rack.id), -m));
        b.push(
            format!("c8_r{}", rack.id),
            Family::RackActivation,
            terms,
            Sense::Le,
            T::zero(),
        );
    }
    for rack in &dc.racks {
        let mut terms = vec![(ix.y(rack.id), one)];
        terms.extend(rack.pm_ids.iter().map(|&p| (ix.x(p), -one)));
        b.push(
            format!("c8b_r{}", rack.id),
            Family::RackActivityLink,
            terms,
            Sense::Le,
            T::zero(),
        );
    }

    let tau = weights.tau;
    let mut definitions = Vec::new();
    for (p, pm) in dc.pms.iter().enumerate() {
        // E_pm = tau K Pmax (1 - F00 - F10) + tau (1 - K) Pmax / C sum_v R_v S_v_p
        let idle = tau * pm.k_idle * pm.p_max;
        let slope = tau * (one - pm.k_idle) * pm.p_max / pm.capacity.cpu;
        let mut terms = vec![(ix.e_pm(p), one), (ix.f00(p), idle), (ix.f10(p), idle)];
        terms.extend(
            (0..ix.n_vms)
                .filter(|&v| dc.vms[v].demand.cpu != T::zero())
                .map(|v| (ix.s(v, p), -slope * dc.vms[v].demand.cpu)),
        );
        let row = b.push(
            format!("def_epm_p{p}"),
            Family::Definition,
            terms,
            Sense::Eq,
            idle,
        );
        definitions.push((ix.e_pm(p), row));
    }
    {
        let mut terms = vec![(ix.e_rack(), one)];
        terms.extend(dc.racks.iter().map(|r| (ix.y(r.id), -tau * r.power())));
        let row = b.push(
            "def_erack".into(),
            Family::Definition,
            terms,
            Sense::Eq,
            T::zero(),
        );
        definitions.push((ix.e_rack(), row));
    }
    {
        let mut terms = vec![(ix.e_mig(), one)];
        for (v, vm) in dc.vms.iter().enumerate() {
            let src = dc.current.host(v).expect("current mapping validated");
            for p in 0..ix.n_pms {
                let c = mig.cost(vm, src, p);
                if c != T::zero() {
                    terms.push((ix.s(v, p), -c));
                }
            }
        }
        let row = b.push(
            "def_emig".into(),
            Family::Definition,
            terms,
            Sense::Eq,
            T::zero(),
        );
        definitions.push((ix.e_mig(), row));
    }
    {
        let price = weights.rho / T::of(1000.0);
        let mut terms = vec![(ix.c_ene(), one)];
        terms.extend((0..ix.n_pms).map(|p| (ix.e_pm(p), -price)));
        terms.push((ix.e_rack(), -price));
        terms.push((ix.e_mig(), -price));
        let row = b.push(
            "def_cene".into(),
            Family::Definition,
            terms,
            Sense::Eq,
            T::zero(),
        );
        definitions.push((ix.c_ene(), row));
    }
    {
        let mut terms = vec![(ix.c_rel(), one)];
        for (p, pm) in dc.pms.iter().enumerate() {
            if dc.current.is_active(p) {
                let theta_t = dc.load(&dc.current, p, Resource::Cpu) / pm.capacity.cpu;
                let hours = shutdown_cost_hours(pm, theta_t, params)?;
                terms.push((ix.f10(p), -weights.omega * hours));
            }
        }
        let row = b.push(
            "def_crel".into(),
            Family::Definition,
            terms,
            Sense::Eq,
            T::zero(),
        );
        definitions.push((ix.c_rel(), row));
    }
    {
        let per_pm = weights.omega * tau;
        let mut terms = vec![(ix.g_rel(), one)];
        for p in 0..ix.n_pms {
            terms.push((ix.f00(p), -per_pm));
            terms.push((ix.f10(p), -per_pm));
        }
        let row = b.push(
            "def_grel".into(),
            Family::Definition,
            terms,
            Sense::Eq,
            T::zero(),
        );
        definitions.push((ix.g_rel(), row));
    }

    let coef = |w: T, ub: T| if ub > T::zero() { w / ub } else { T::zero() };
    let objective = vec![
        (ix.c_ene(), coef(weights.alpha, bounds.c_ene_ub)),
        (ix.c_rel(), coef(weights.beta, bounds.c_rel_ub)),
        (ix.g_rel(), -coef(weights.gamma, bounds.g_rel_ub)),
    ];

    Ok(MilpModel {
        index: ix,
        variables,
        constraints: b.constraints,
        objective,
        big_m: BigM {
            pm_activation: m_pm,
            rack_activation: rack_m,
        },
        bounds,
        definitions,
    })
}

fn binary(name: String) -> Variable {
    Variable {
        name,
        kind: VarKind::Binary,
    }
}

fn continuous(name: String) -> Variable {
    Variable {
        name,
        kind: VarKind::Continuous,
    }
}

impl<T: Scalar> MilpModel<T> {
    pub fn objective_value(&self, values: &[T]) -> T {
        self.objective.iter().map(|&(v, c)| c * values[v]).sum()
    }

    /// Fills every continuous variable from its defining equality.
    pub fn complete_continuous(&self, values: &mut [T]) {
        for &(var, row) in &self.definitions {
            let c = &self.constraints[row];
            let rest: T = c
                .terms
                .iter()
                .filter(|&&(v, _)| v != var)
                .map(|&(v, k)| k * values[v])
                .sum();
            values[var] = c.rhs - rest;
        }
    }

    /// Rows violated by `values`, by name.
    pub fn violated(&self, values: &[T], tol: T) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .constraints
            .iter()
            .filter(|c| !c.satisfied(values, tol))
            .map(|c| c.name.as_str())
            .collect();
        for (i, var) in self.variables.iter().enumerate() {
            let ok = match var.kind {
                VarKind::Binary => values[i] == T::zero() || values[i] == T::one(),
                VarKind::Continuous => values[i] >= -tol,
            };
            if !ok {
                out.push(var.name.as_str());
            }
        }
        out
    }

    /// Variable assignment encoding `s_next` as the decision out of `dc.current`.
    pub fn encode(&self, dc: &DatacenterState<T>, s_next: &Placement) -> Vec<T> {
        let ix = self.index;
        let flags = flags_unchecked(&dc.current, s_next, dc);
        let bit = |b: bool| if b { T::one() } else { T::zero() };
        let mut values = vec![T::zero(); ix.n_vars()];
        for v in 0..ix.n_vms {
            for p in 0..ix.n_pms {
                values[ix.s(v, p)] = bit(s_next.get(v, p));
            }
        }
        for p in 0..ix.n_pms {
            values[ix.x(p)] = bit(flags.x[p]);
            values[ix.f00(p)] = bit(flags.f00[p]);
            values[ix.f10(p)] = bit(flags.f10[p]);
        }
        for r in 0..ix.n_racks {
            values[ix.y(r)] = bit(flags.y[r]);
        }
        self.complete_continuous(&mut values);
        values
    }

    /// The mapping `S` carried by `values`.
    pub fn decode(&self, values: &[T]) -> Placement {
        let ix = self.index;
        let half = T::of(0.5);
        let mut p = Placement::empty(ix.n_vms, ix.n_pms);
        for v in 0..ix.n_vms {
            for pm in 0..ix.n_pms {
                p.set(v, pm, values[ix.s(v, pm)] > half);
            }
        }
        p
    }

    pub fn constraints_in(&self, family: Family) -> impl Iterator<Item = &LinearConstraint<T>> {
        self.constraints.iter().filter(move |c| c.family == family)
    }
}

pub fn model_stats<T: Scalar>(model: &MilpModel<T>) -> ModelStats {
    ModelStats {
        n_binary: model
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count(),
        n_continuous: model
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Continuous)
            .count(),
        n_constraints: model.constraints.len(),
    }
}

const TERMS_PER_LINE: usize = 8;

fn write_expr<T: Scalar>(out: &mut String, model: &MilpModel<T>, terms: &[(VarId, T)]) {
    if terms.is_empty() {
        out.push_str(" 0 ");
        out.push_str(&model.variables[0].name);
        return;
    }
    for (i, &(v, c)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < T::zero() { '-' } else { '+' };
        let mag = c.abs();
        if mag == T::one() {
            let _ = write!(out, " {sign} {}", model.variables[v].name);
        } else {
            let _ = write!(out, " {sign} {mag} {}", model.variables[v].name);
        }
    }
}

/// Serializes the model in CPLEX LP format.
pub fn export_lp<T: Scalar>(model: &MilpModel<T>) -> String {
    let ix = model.index;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ reliability-aware consolidation: {} VMs, {} PMs, {} racks",
        ix.n_vms, ix.n_pms, ix.n_racks
    );
    out.push_str("Minimize\n obj:");
    write_expr(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        write_expr(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for var in model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Continuous)
    {
        let _ = writeln!(out, " {} >= 0", var.name);
    }
    out.push_str("Binary\n");
    let binaries: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    for chunk in binaries.chunks(TERMS_PER_LINE * 2) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::objective;
    use crate::testkit::{eval_dc, eval_problem};

    #[test]
    fn variable_counts_for_small_instance() {
        let (dc, w, p, m) = eval_problem(&[0, 1, 1, 2, 3], 4, 2);
        let model = build_model(&dc, &w, &p, &m).unwrap();
        let stats = model_stats(&model);
        assert_eq!(stats.n_binary, 34);
        assert_eq!(stats, ModelStats::closed_form(5, 4, 2, 2));
    }

    #[test]
    fn offline_pm_cannot_stop() {
        let (dc, w, p, m) = eval_problem(&[0, 1, 1, 2, 2], 4, 2);
        let model = build_model(&dc, &w, &p, &m).unwrap();
        let rows: Vec<_> = model.constraints_in(Family::OfflineCannotStop).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].terms, vec![(model.index.f10(3), 1.0)]);
        assert_eq!(rows[0].sense, Sense::Eq);
        assert_eq!(model.constraints_in(Family::OnlineCannotStayOff).count(), 3);
    }

    #[test]
    fn encoded_point_is_feasible_and_matches_costs() {
        let (dc, w, p, m) = eval_problem(&[0, 1, 1, 2, 3], 4, 2);
        let model = build_model(&dc, &w, &p, &m).unwrap();
        let next = Placement::from_hosts(&[1, 1, 2, 2, 1], 4).unwrap();
        let values = model.encode(&dc, &next);
        assert!(model.violated(&values, 1e-9).is_empty());
        let (direct, _) = objective(&dc.current, &next, &dc, &w, &p, &m).unwrap();
        assert!((model.objective_value(&values) - direct).abs() < 1e-12);
        assert_eq!(model.decode(&values), next);
    }

    #[test]
    fn big_m_values_are_family_tight() {
        let (dc, w, p, m) = eval_problem(&[0, 1, 2], 4, 2);
        let model = build_model(&dc, &w, &p, &m).unwrap();
        assert_eq!(model.big_m.pm_activation, 3.0);
        assert_eq!(model.big_m.rack_activation, vec![2.0, 2.0]);
    }

    #[test]
    fn infeasible_demand_fails_before_emission() {
        let mut dc = eval_dc(&[0, 1], 2, 1);
        for pm in &mut dc.pms {
            pm.capacity.ram = 500.0;
        }
        let w = CostWeights::default();
        let mig = MigrationCostModel::fat_tree(&dc, 10.0, 2);
        assert!(matches!(
            build_model(&dc, &w, &ReliabilityParams::default(), &mig),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn export_without_vms_has_no_assignment_rows() {
        let (dc, w, p, m) = eval_problem(&[], 4, 2);
        let model = build_model(&dc, &w, &p, &m).unwrap();
        let lp = export_lp(&model);
        assert!(!lp.contains("S_"));
        assert!(lp.starts_with(
            "\\ reliability-aware consolidation: 0 VMs, 4 PMs, 2 racks\nMinimize\n obj:"
        ));
        assert!(lp.ends_with("End\n"));
    }
}
