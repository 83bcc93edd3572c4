//! Model constants, geometry, derived interface weights, the host-growth
//! hypothesis and the interface trace fluxes.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const PI_SQ: f64 = PI * PI;

/// Demographic, diffusion, transmission and interface constants plus the
/// widths of the two habitats. `minus` refers to the infected habitat
/// `[-ell, 0] x [0, 1]`, `plus` to the susceptible habitat `[0, width_s] x [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParameters {
    #[serde(rename = "sigma_J_minus")]
    pub sigma_j_minus: f64,
    #[serde(rename = "sigma_J_plus")]
    pub sigma_j_plus: f64,
    #[serde(rename = "sigma_A_minus")]
    pub sigma_a_minus: f64,
    #[serde(rename = "sigma_A_plus")]
    pub sigma_a_plus: f64,
    #[serde(rename = "sigma_H_minus")]
    pub sigma_h_minus: f64,
    #[serde(rename = "sigma_H_plus")]
    pub sigma_h_plus: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
    #[serde(rename = "f_A_minus")]
    pub fec_a_minus: f64,
    #[serde(rename = "f_A_plus")]
    pub fec_a_plus: f64,
    #[serde(rename = "f_H_minus")]
    pub fec_h_minus: f64,
    #[serde(rename = "f_H_plus")]
    pub fec_h_plus: f64,
    /// Vertical transmission rate per host female.
    pub nu: f64,
    #[serde(rename = "Lambda_J")]
    pub infect_j: f64,
    #[serde(rename = "Lambda_A")]
    pub infect_a: f64,
    #[serde(rename = "Lambda_H")]
    pub infect_h: f64,
    #[serde(rename = "d_J_minus")]
    pub diff_j_minus: f64,
    #[serde(rename = "d_J_plus")]
    pub diff_j_plus: f64,
    #[serde(rename = "d_A_minus")]
    pub diff_a_minus: f64,
    #[serde(rename = "d_A_plus")]
    pub diff_a_plus: f64,
    #[serde(rename = "d_H_minus")]
    pub diff_h_minus: f64,
    #[serde(rename = "d_H_plus")]
    pub diff_h_plus: f64,
    #[serde(rename = "p_J")]
    pub cross_j: f64,
    #[serde(rename = "p_A")]
    pub cross_a: f64,
    #[serde(rename = "p_H")]
    pub cross_h: f64,
    /// Width of the infected habitat.
    pub ell: f64,
    /// Width of the susceptible habitat.
    #[serde(rename = "L")]
    pub width_s: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self::example()
    }
}

impl ModelParameters {
    /// Illustrative parameter set. The values are not field estimates; they
    /// are chosen so every reaction coefficient is positive and the host
    /// hypothesis holds with room to spare.
    pub fn example() -> Self {
        Self {
            sigma_j_minus: 0.6,
            sigma_j_plus: 0.7,
            sigma_a_minus: 0.8,
            sigma_a_plus: 0.85,
            sigma_h_minus: 0.7,
            sigma_h_plus: 0.75,
            tau_minus: 0.2,
            tau_plus: 0.25,
            fec_a_minus: 2.0,
            fec_a_plus: 1.5,
            fec_h_minus: 0.3,
            fec_h_plus: 0.25,
            nu: 0.1,
            infect_j: 0.05,
            infect_a: 0.04,
            infect_h: 0.03,
            diff_j_minus: 0.05,
            diff_j_plus: 0.06,
            diff_a_minus: 0.08,
            diff_a_plus: 0.1,
            diff_h_minus: 0.04,
            diff_h_plus: 0.05,
            cross_j: 0.4,
            cross_a: 0.5,
            cross_h: 0.6,
            ell: 1.0,
            width_s: 1.0,
        }
    }

    /// Pure diffusion: every survival, fecundity, transition and vertical
    /// rate is zero. Infection rates stay at a tiny positive value because
    /// validation demands it; they multiply vanishing traces anyway.
    pub fn pure_diffusion(d: f64, p: f64) -> Self {
        Self {
            sigma_j_minus: 0.0,
            sigma_j_plus: 0.0,
            sigma_a_minus: 0.0,
            sigma_a_plus: 0.0,
            sigma_h_minus: 0.0,
            sigma_h_plus: 0.0,
            tau_minus: 0.0,
            tau_plus: 0.0,
            fec_a_minus: 0.0,
            fec_a_plus: 0.0,
            fec_h_minus: 0.0,
            fec_h_plus: 0.0,
            nu: 0.0,
            infect_j: 1e-3,
            infect_a: 1e-3,
            infect_h: 1e-3,
            diff_j_minus: d,
            diff_j_plus: d,
            diff_a_minus: d,
            diff_a_plus: d,
            diff_h_minus: d,
            diff_h_plus: d,
            cross_j: p,
            cross_a: p,
            cross_h: p,
            ell: 1.0,
            width_s: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let finite = [
            ("sigma_J_minus", self.sigma_j_minus),
            ("sigma_J_plus", self.sigma_j_plus),
            ("sigma_A_minus", self.sigma_a_minus),
            ("sigma_A_plus", self.sigma_a_plus),
            ("sigma_H_minus", self.sigma_h_minus),
            ("sigma_H_plus", self.sigma_h_plus),
            ("tau_minus", self.tau_minus),
            ("tau_plus", self.tau_plus),
            ("f_A_minus", self.fec_a_minus),
            ("f_A_plus", self.fec_a_plus),
            ("f_H_minus", self.fec_h_minus),
            ("f_H_plus", self.fec_h_plus),
            ("nu", self.nu),
            ("Lambda_J", self.infect_j),
            ("Lambda_A", self.infect_a),
            ("Lambda_H", self.infect_h),
            ("d_J_minus", self.diff_j_minus),
            ("d_J_plus", self.diff_j_plus),
            ("d_A_minus", self.diff_a_minus),
            ("d_A_plus", self.diff_a_plus),
            ("d_H_minus", self.diff_h_minus),
            ("d_H_plus", self.diff_h_plus),
            ("p_J", self.cross_j),
            ("p_A", self.cross_a),
            ("p_H", self.cross_h),
            ("ell", self.ell),
            ("L", self.width_s),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} = {v} is not finite"));
            }
        }
        for (name, v) in &finite[0..8] {
            if !(0.0..=1.0).contains(v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        for (name, v) in &finite[8..13] {
            if *v < 0.0 {
                return bad(format!("{name} = {v} must be >= 0"));
            }
        }
        for (name, v) in finite[13..22].iter().chain(&finite[25..27]) {
            if *v <= 0.0 {
                return bad(format!("{name} = {v} must be > 0"));
            }
        }
        for (name, v) in &finite[22..25] {
            if !(*v > 0.0 && *v < 1.0) {
                return bad(format!("{name} = {v} must lie in the open interval (0, 1)"));
            }
        }
        Ok(())
    }

    /// Operands of the host-growth hypothesis, minus side then plus side.
    pub fn host_operands(&self) -> (f64, f64) {
        let minus = (self.sigma_h_minus * (1.0 + self.nu * self.fec_h_minus) - 1.0) / self.diff_h_minus;
        let plus = (self.sigma_h_plus * (1.0 + self.fec_h_plus) - 1.0) / self.diff_h_plus;
        (minus, plus)
    }

    /// `max(operands, 0)` pushed 5% of the way towards `pi^2`; `None` when
    /// no admissible r0 exists.
    pub fn default_r0(&self) -> Option<f64> {
        let (m, p) = self.host_operands();
        let base = m.max(p).max(0.0);
        if base >= PI_SQ {
            None
        } else {
            Some(base + 0.05 * (PI_SQ - base))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Juvenile,
    Adult,
    Host,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Juvenile, Species::Adult, Species::Host];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Species::Juvenile => 'J',
            Species::Adult => 'A',
            Species::Host => 'H',
        }
    }
}

/// Which habitat a quantity lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `[-ell, 0]`
    Infected,
    /// `[0, width_s]`
    Susceptible,
}

impl Side {
    pub fn suffix(self) -> char {
        match self {
            Side::Infected => 'I',
            Side::Susceptible => 'S',
        }
    }
}

/// Per-species diffusion, zeroth-order reaction coefficient and interface
/// weights for the scalar operator `d * Laplacian - c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesCoefficients {
    pub species: Species,
    pub d_minus: f64,
    pub d_plus: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub weight_minus: f64,
    pub weight_plus: f64,
}

pub fn species_coefficients(params: &ModelParameters, species: Species) -> Result<SpeciesCoefficients> {
    params.validate()?;
    Ok(species_coefficients_unchecked(params, species))
}

pub(crate) fn species_coefficients_unchecked(p: &ModelParameters, species: Species) -> SpeciesCoefficients {
    let (d_minus, d_plus, c_minus, c_plus, cross) = match species {
        Species::Juvenile => (
            p.diff_j_minus,
            p.diff_j_plus,
            1.0 - (1.0 - p.tau_minus) * p.sigma_j_minus,
            1.0 - (1.0 - p.tau_plus) * p.sigma_j_plus,
            p.cross_j,
        ),
        Species::Adult => (
            p.diff_a_minus,
            p.diff_a_plus,
            1.0 - p.sigma_a_minus,
            1.0 - p.sigma_a_plus,
            p.cross_a,
        ),
        Species::Host => (
            p.diff_h_minus,
            p.diff_h_plus,
            1.0 - p.sigma_h_minus * (1.0 + p.nu * p.fec_h_minus),
            1.0 - p.sigma_h_plus * (1.0 + p.fec_h_plus),
            p.cross_h,
        ),
    };
    SpeciesCoefficients {
        species,
        d_minus,
        d_plus,
        c_minus,
        c_plus,
        weight_minus: cross * d_minus,
        weight_plus: (1.0 - cross) * d_plus,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub minus_operand: f64,
    pub plus_operand: f64,
    pub r0: f64,
    pub holds: bool,
}

pub fn check_hypothesis(params: &ModelParameters, r0: f64) -> Result<HypothesisReport> {
    params.validate()?;
    if !(r0 > 0.0 && r0 < PI_SQ) {
        return Err(Error::InvalidR0(r0));
    }
    let (minus_operand, plus_operand) = params.host_operands();
    Ok(HypothesisReport {
        minus_operand,
        plus_operand,
        r0,
        holds: minus_operand.max(plus_operand) <= r0,
    })
}

/// Normal derivatives of the six densities at the interface, one y-point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InterfaceDerivatives {
    pub juv_i: f64,
    pub adult_i: f64,
    pub host_i: f64,
    pub juv_s: f64,
    pub adult_s: f64,
    pub host_s: f64,
}

impl InterfaceDerivatives {
    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            juv_i: v[0],
            adult_i: v[1],
            host_i: v[2],
            juv_s: v[3],
            adult_s: v[4],
            host_s: v[5],
        }
    }
}

/// Five trace fluxes generated by crossings of the interface.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TraceFluxes(pub [f64; 5]);

/// Coefficients of the five trace functionals against the derivative vector
/// `[J_I, A_I, H_I, J_S, A_S, H_S]`.
pub fn trace_matrix(p: &ModelParameters) -> [[f64; 6]; 5] {
    let t1a = p.fec_a_minus * p.sigma_a_minus * p.diff_a_minus;
    let t2h = (1.0 - p.nu) * p.fec_h_minus * p.sigma_h_minus * p.diff_h_minus;
    let t3h = p.sigma_h_plus * p.diff_h_plus * (1.0 + p.fec_h_plus);
    let juv_s = p.sigma_j_plus * p.diff_j_plus;
    let adult_s = p.sigma_a_plus * p.diff_a_plus;
    [
        [0.0, t1a, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, t2h, 0.0, 0.0, 0.0],
        [0.0, 0.0, t2h, 0.0, 0.0, t3h],
        [0.0, 0.0, 0.0, p.tau_plus * juv_s, adult_s, 0.0],
        [0.0, t1a, 0.0, (1.0 - p.tau_plus) * juv_s, p.fec_a_plus * adult_s, 0.0],
    ]
}

pub fn trace_fluxes(params: &ModelParameters, der: &InterfaceDerivatives) -> TraceFluxes {
    let p = params;
    let t1 = p.fec_a_minus * p.sigma_a_minus * p.diff_a_minus * der.adult_i;
    let t2 = (1.0 - p.nu) * p.fec_h_minus * p.sigma_h_minus * p.diff_h_minus * der.host_i;
    let t3 = p.sigma_h_plus * p.diff_h_plus * (1.0 + p.fec_h_plus) * der.host_s + t2;
    let t4 = p.tau_plus * p.sigma_j_plus * p.diff_j_plus * der.juv_s + p.sigma_a_plus * p.diff_a_plus * der.adult_s;
    let t5 = (1.0 - p.tau_plus) * p.sigma_j_plus * p.diff_j_plus * der.juv_s
        + p.fec_a_plus * p.sigma_a_plus * p.diff_a_plus * der.adult_s
        + t1;
    TraceFluxes([t1, t2, t3, t4, t5])
}

/// x-constant sources the traces feed into each equation, ordered
/// `[J_I, A_I, H_I, J_S, A_S, H_S]`.
pub fn interface_sources(params: &ModelParameters, t: &TraceFluxes) -> [f64; 6] {
    let [t1, t2, t3, t4, t5] = t.0;
    [
        params.infect_j * t5,
        params.infect_a * t4,
        params.infect_h * t3,
        t1,
        0.0,
        t2,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn host_fixture(sm: f64, nu: f64, fm: f64, dm: f64, sp: f64, fp: f64, dp: f64) -> ModelParameters {
        ModelParameters {
            sigma_h_minus: sm,
            nu,
            fec_h_minus: fm,
            diff_h_minus: dm,
            sigma_h_plus: sp,
            fec_h_plus: fp,
            diff_h_plus: dp,
            ..ModelParameters::example()
        }
    }

    #[test]
    fn nonpositive_numerators_pass_the_hypothesis() {
        let p = host_fixture(0.5, 0.1, 2.0, 1.0, 0.5, 1.0, 1.0);
        let r = check_hypothesis(&p, 1.0).unwrap();
        assert!(r.holds);
        assert!((r.minus_operand - (0.5 * 1.2 - 1.0)).abs() < 1e-15);
        // 0.5 * (1 + 1) - 1 vanishes exactly on the plus side.
        assert_eq!(r.plus_operand, 0.0);
    }

    #[test]
    fn large_plus_fecundity_fails_for_every_r0() {
        let p = host_fixture(0.5, 0.1, 2.0, 1.0, 1.0, 10.0, 1.0);
        for r0 in [0.5, 5.0, PI_SQ - 1e-9] {
            let r = check_hypothesis(&p, r0).unwrap();
            assert!(!r.holds);
            assert_eq!(r.plus_operand, 10.0);
        }
    }

    #[test]
    fn without_vertical_transmission_only_plus_side_binds() {
        let p = host_fixture(0.9, 0.0, 5.0, 1.0, 0.8, 3.0, 0.5);
        let r = check_hypothesis(&p, 4.0).unwrap();
        assert!(r.minus_operand < 0.0);
        assert!((r.plus_operand - 4.4).abs() < 1e-12);
        assert!(!r.holds);
        assert!(check_hypothesis(&p, 4.5).unwrap().holds);
    }

    #[test]
    fn r0_outside_range_is_rejected() {
        let p = ModelParameters::example();
        assert_eq!(check_hypothesis(&p, PI_SQ), Err(Error::InvalidR0(PI_SQ)));
        assert!(check_hypothesis(&p, 0.0).is_err());
    }

    #[test]
    fn crossing_probability_on_the_boundary_is_invalid() {
        let p = ModelParameters { cross_j: 1.0, ..ModelParameters::example() };
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("p_J"));
        assert!(err.to_string().contains("open interval"));
    }

    #[test]
    fn reaction_coefficients_by_species() {
        let p = ModelParameters {
            sigma_h_minus: 0.8,
            nu: 0.5,
            fec_h_minus: 0.5,
            diff_h_minus: 2.0,
            sigma_a_minus: 0.9,
            tau_minus: 0.3,
            sigma_j_minus: 0.5,
            ..ModelParameters::example()
        };
        let h = species_coefficients(&p, Species::Host).unwrap();
        assert!(h.c_minus.abs() < 1e-15);
        let a = species_coefficients(&p, Species::Adult).unwrap();
        assert!((a.c_minus - 0.1).abs() < 1e-15);
        let j = species_coefficients(&p, Species::Juvenile).unwrap();
        assert!((j.c_minus - 0.65).abs() < 1e-15);
    }

    #[test]
    fn interface_weights_reproduce_skew_condition() {
        let p = ModelParameters::example();
        let j = species_coefficients(&p, Species::Juvenile).unwrap();
        assert_eq!(j.weight_minus, p.cross_j * p.diff_j_minus);
        assert_eq!(j.weight_plus, (1.0 - p.cross_j) * p.diff_j_plus);
        let h = species_coefficients(&p, Species::Host).unwrap();
        assert_eq!(h.weight_minus, p.cross_h * p.diff_h_minus);
    }

    #[test]
    fn trace_examples() {
        let p = ModelParameters::example();
        assert_eq!(trace_fluxes(&p, &InterfaceDerivatives::default()).0, [0.0; 5]);

        let q = ModelParameters { nu: 1.0, ..p };
        let der = InterfaceDerivatives { host_i: 7.0, ..Default::default() };
        assert_eq!(trace_fluxes(&q, &der).0[1], 0.0);

        let r = ModelParameters { fec_a_minus: 1.0, sigma_a_minus: 1.0, diff_a_minus: 2.0, ..p };
        let der = InterfaceDerivatives { adult_i: 3.0, ..Default::default() };
        let t = trace_fluxes(&r, &der).0;
        assert_eq!(t[0], 6.0);
        assert_eq!(t[4], 6.0);
    }

    #[test]
    fn trace_matrix_agrees_with_fluxes() {
        let p = ModelParameters::example();
        let v = [0.3, -1.2, 2.5, 0.7, -0.4, 1.1];
        let t = trace_fluxes(&p, &InterfaceDerivatives::from_array(v)).0;
        let m = trace_matrix(&p);
        for i in 0..5 {
            let dot: f64 = (0..6).map(|j| m[i][j] * v[j]).sum();
            assert!((dot - t[i]).abs() < 1e-14 * (1.0 + t[i].abs()));
        }
    }

    #[test]
    fn vanishing_infection_rates_silence_three_sources() {
        let p = ModelParameters { infect_j: 0.0, infect_a: 0.0, infect_h: 0.0, ..ModelParameters::example() };
        let der = InterfaceDerivatives::from_array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s = interface_sources(&p, &trace_fluxes(&p, &der));
        assert_eq!(&s[0..3], &[0.0, 0.0, 0.0]);
        assert!(s[3] != 0.0 && s[5] != 0.0);
    }

    #[test]
    fn default_r0_is_admissible() {
        let p = ModelParameters::example();
        let r0 = p.default_r0().unwrap();
        assert!(r0 > 0.0 && r0 < PI_SQ);
        assert!(check_hypothesis(&p, r0).unwrap().holds);
    }

    proptest! {
        #[test]
        fn trace_fluxes_are_linear(
            u in prop::array::uniform6(-10.0f64..10.0),
            v in prop::array::uniform6(-10.0f64..10.0),
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let p = ModelParameters::example();
            let mut w = [0.0; 6];
            for i in 0..6 { w[i] = a * u[i] + b * v[i]; }
            let tu = trace_fluxes(&p, &InterfaceDerivatives::from_array(u)).0;
            let tv = trace_fluxes(&p, &InterfaceDerivatives::from_array(v)).0;
            let tw = trace_fluxes(&p, &InterfaceDerivatives::from_array(w)).0;
            let m = trace_matrix(&p);
            for i in 0..5 {
                let expect = a * tu[i] + b * tv[i];
                let scale: f64 = (0..6).map(|j| m[i][j].abs() * (a * u[j]).abs().max((b * v[j]).abs())).sum();
                prop_assert!((tw[i] - expect).abs() <= 1e-14 * scale.max(1e-300));
            }
        }

        #[test]
        fn hypothesis_is_monotone_in_r0(
            sm in 0.0f64..1.0, sp in 0.0f64..1.0, fm in 0.0f64..5.0, fp in 0.0f64..5.0,
            nu in 0.0f64..2.0, dm in 0.05f64..3.0, dp in 0.05f64..3.0,
            r1 in 0.01f64..9.8, r2 in 0.01f64..9.8,
        ) {
            let p = host_fixture(sm, nu, fm, dm, sp, fp, dp);
            let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
            if check_hypothesis(&p, lo).unwrap().holds {
                prop_assert!(check_hypothesis(&p, hi).unwrap().holds);
            }
        }
    }
}
