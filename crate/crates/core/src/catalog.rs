//! Built-in examples: algebras, metrics, lattice pairs, morphisms and the
//! claims each pair is expected to satisfy.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{quotient_algebra, LieAlgebra, Metric, QuotientData};
use crate::group::{CongruenceFormula, Lattice};
use crate::linalg::{self, QMat};
use crate::rational::{q, qi, unit, zeros, QVec, Rational};

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn vecq(n: usize, terms: &[(usize, Rational)]) -> QVec {
    let mut v = zeros(n);
    for (i, c) in terms {
        v[*i] += c;
    }
    v
}

/// Basis `X1, X2, Y1, Y2, Z1, Z2, W` with
/// `[X1,Y1] = [X2,Y2] = Z1`, `[X1,Y2] = Z2`, `[X1,Z1] = [X2,Z2] = [Y1,Y2] = W`.
pub fn algebra_i() -> LieAlgebra {
    let n = 7;
    let (x1, x2, y1, y2, z1, z2, w) = (0, 1, 2, 3, 4, 5, 6);
    LieAlgebra::from_brackets(
        labels(&["X1", "X2", "Y1", "Y2", "Z1", "Z2", "W"]),
        &[
            (x1, y1, unit(n, z1)),
            (x2, y2, unit(n, z1)),
            (x1, y2, unit(n, z2)),
            (x1, z1, unit(n, w)),
            (x2, z2, unit(n, w)),
            (y1, y2, unit(n, w)),
        ],
        3,
    )
    .expect("static table")
}

pub fn algebra_iii() -> LieAlgebra {
    algebra_i()
}

/// Same bracket table as [`algebra_i`].
pub fn algebra_v() -> LieAlgebra {
    algebra_i()
}

/// Basis `X1, Y1, Y2, Z, W` with `[X1,Y1] = Z`, `[X1,Z] = [Y1,Y2] = W`.
pub fn algebra_ii() -> LieAlgebra {
    let n = 5;
    LieAlgebra::from_brackets(
        labels(&["X1", "Y1", "Y2", "Z", "W"]),
        &[(0, 1, unit(n, 3)), (0, 3, unit(n, 4)), (1, 2, unit(n, 4))],
        3,
    )
    .expect("static table")
}

pub fn algebra_iv() -> LieAlgebra {
    algebra_ii()
}

/// Orthonormal frame `E1 … E7` for the metric of example V.
pub fn frame_v() -> QMat {
    let n = 7;
    vec![
        vecq(n, &[(0, qi(1)), (1, q(-1, 2)), (3, q(-1, 4))]),
        vecq(n, &[(1, qi(1)), (2, q(-1, 4))]),
        unit(n, 2),
        vecq(n, &[(2, qi(1)), (3, qi(1))]),
        unit(n, 4),
        vecq(n, &[(4, q(1, 2)), (5, qi(1))]),
        unit(n, 6),
    ]
}

pub fn metric_v() -> Metric {
    Metric::from_frame(frame_v()).expect("invertible frame")
}

fn lattice(l: LieAlgebra, gens: QMat) -> Lattice {
    let names = l.labels().to_vec();
    Lattice::new(Arc::new(l), names, gens).expect("built-in lattice")
}

fn scaled_basis(n: usize, scales: &[i128]) -> QMat {
    (0..n).map(|i| linalg::scale(&unit(n, i), &qi(scales[i]))).collect()
}

pub fn lattice_i_1() -> Lattice {
    lattice(algebra_i(), scaled_basis(7, &[2, 2, 1, 1, 1, 1, 1]))
}

/// `Y2` replaced by `Y2 + ½Z2`.
pub fn lattice_i_2() -> Lattice {
    let mut g = scaled_basis(7, &[2, 2, 1, 1, 1, 1, 1]);
    g[3] = vecq(7, &[(3, qi(1)), (5, q(1, 2))]);
    lattice(algebra_i(), g)
}

pub fn lattice_ii_1() -> Lattice {
    lattice(algebra_ii(), scaled_basis(5, &[2, 1, 1, 1, 1]))
}

/// `Y1` replaced by `Y1 + ½Z`.
pub fn lattice_ii_2() -> Lattice {
    let mut g = scaled_basis(5, &[2, 1, 1, 1, 1]);
    g[1] = vecq(5, &[(1, qi(1)), (3, q(1, 2))]);
    lattice(algebra_ii(), g)
}

pub fn lattice_iii_1() -> Lattice {
    lattice(algebra_iii(), scaled_basis(7, &[2, 2, 1, 1, 1, 1, 1]))
}

pub fn lattice_iii_2() -> Lattice {
    lattice(algebra_iii(), scaled_basis(7, &[1, 1, 2, 2, 1, 1, 1]))
}

pub fn lattice_iv_1() -> Lattice {
    lattice(algebra_iv(), scaled_basis(5, &[2, 1, 1, 1, 1]))
}

pub fn lattice_iv_2() -> Lattice {
    lattice(algebra_iv(), scaled_basis(5, &[1, 2, 2, 1, 1]))
}

pub fn lattice_v_1() -> Lattice {
    lattice(algebra_v(), scaled_basis(7, &[2, 2, 1, 1, 1, 1, 1]))
}

/// `Φ(Γ₁)` for the automorphism [`phi_v`].
pub fn lattice_v_2() -> Lattice {
    let phi = phi_v();
    let gens = scaled_basis(7, &[2, 2, 1, 1, 1, 1, 1]).iter().map(|g| linalg::vec_mat(g, &phi, 7)).collect();
    lattice(algebra_v(), gens)
}

pub fn all_lattices() -> Vec<Lattice> {
    vec![
        lattice_i_1(),
        lattice_i_2(),
        lattice_ii_1(),
        lattice_ii_2(),
        lattice_iii_1(),
        lattice_iii_2(),
        lattice_iv_1(),
        lattice_iv_2(),
        lattice_v_1(),
        lattice_v_2(),
    ]
}

/// Rows are images of `X1, X2, Y1, Y2, Z1, Z2, W`.
pub fn phi_v() -> QMat {
    let n = 7;
    vec![
        vecq(n, &[(0, qi(-1)), (1, qi(1)), (2, q(1, 4)), (3, q(1, 2))]),
        vecq(n, &[(1, qi(1)), (2, q(-1, 2)), (4, q(1, 4))]),
        vecq(n, &[(2, qi(-1))]),
        vecq(n, &[(2, qi(2)), (3, qi(1)), (5, qi(1))]),
        vecq(n, &[(4, qi(1)), (6, q(1, 2))]),
        vecq(n, &[(4, qi(-1)), (5, qi(-1)), (6, q(1, 4))]),
        vecq(n, &[(6, qi(-1))]),
    ]
}

/// Isometric factor on the quotient (basis `X̄1, X̄2, Ȳ1, Ȳ2, Z̄1, Z̄2`).
pub fn psi1_v() -> QMat {
    let n = 6;
    vec![
        vecq(n, &[(0, qi(-1)), (1, qi(1)), (2, q(1, 4)), (3, q(1, 2))]),
        vecq(n, &[(1, qi(1)), (2, q(-1, 2))]),
        vecq(n, &[(2, qi(-1))]),
        vecq(n, &[(2, qi(2)), (3, qi(1))]),
        vecq(n, &[(4, qi(1))]),
        vecq(n, &[(4, qi(-1)), (5, qi(-1))]),
    ]
}

/// Almost-inner factor on the quotient.
pub fn psi2_v() -> QMat {
    let mut m = linalg::identity(6);
    m[1] = vecq(6, &[(1, qi(1)), (4, q(1, 4))]);
    m[3] = vecq(6, &[(3, qi(1)), (4, qi(-1)), (5, qi(-1))]);
    m
}

/// Map of the quotient of example I sending `Ȳ2 ↦ Ȳ2 + ½Z̄2`, identity elsewhere.
pub fn relating_map_i() -> QMat {
    let mut m = linalg::identity(6);
    m[3] = vecq(6, &[(3, qi(1)), (5, q(1, 2))]);
    m
}

/// Candidate automorphism of the algebra of example II from the integer
/// family with parameters `h = (h0, h1, h2, h3, h4)` and all signs `+`:
/// `X1 ↦ X1 + ½h3 Y1 + ½h4 Y2`, `Y1 ↦ Y1 + h1 Y2 + (½ + h2) Z`,
/// `Y2 ↦ Y2 − ½h3 Z`, `Z ↦ Z + c W`, `W ↦ W`, with `c` forced by the
/// brackets (`h0` does not enter).
pub fn candidate_ii(h: [i64; 5]) -> QMat {
    let n = 5;
    let h: Vec<Rational> = h.iter().map(|&x| qi(x as i128)).collect();
    let half = q(1, 2);
    let c = half + h[2] + half * h[1] * h[3] - half * h[4];
    vec![
        vecq(n, &[(0, qi(1)), (1, half * h[3]), (2, half * h[4])]),
        vecq(n, &[(1, qi(1)), (2, h[1]), (3, half + h[2])]),
        vecq(n, &[(2, qi(1)), (3, -half * h[3])]),
        vecq(n, &[(3, qi(1)), (4, c)]),
        vecq(n, &[(4, qi(1))]),
    ]
}

/// Isometric factor of the shape forced on the quotient (`X̄1, Ȳ1, Ȳ2, Z̄`)
/// by a marking candidate with parameters `h` and free `z1, z2, z3`.
pub fn isometric_factor_candidate_ii(h: [i64; 5], z: [Rational; 3]) -> QMat {
    let n = 4;
    let half = q(1, 2);
    let hq = |i: usize| qi(h[i] as i128);
    vec![
        vecq(n, &[(0, qi(1)), (1, half * hq(3)), (2, half * hq(4)), (3, z[0])]),
        vecq(n, &[(1, qi(1)), (2, hq(1)), (3, z[1])]),
        vecq(n, &[(2, qi(1)), (3, z[2])]),
        vecq(n, &[(3, qi(1))]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ExampleName {
    I,
    II,
    III,
    IV,
    V,
}

impl ExampleName {
    pub const ALL: [ExampleName; 5] = [Self::I, Self::II, Self::III, Self::IV, Self::V];
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IV => "IV",
            Self::V => "V",
        };
        f.write_str(s)
    }
}

impl FromStr for ExampleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Self::I),
            "II" | "2" => Ok(Self::II),
            "III" | "3" => Ok(Self::III),
            "IV" | "4" => Ok(Self::IV),
            "V" | "5" => Ok(Self::V),
            other => Err(format!("unknown example '{other}' (expected I, II, III, IV or V)")),
        }
    }
}

/// Morphisms shipped with an example.
#[derive(Debug, Clone, PartialEq)]
pub enum MorphismBundle {
    None,
    /// Automorphism of `g` with a factorization of its quotient.
    Marking { phi: QMat, psi1: QMat, psi2: QMat },
    /// Map relating the two quotient lattices.
    QuotientRelating { map: QMat },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedMultiplicity {
    pub lambda: &'static str,
    pub m_prime: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedClaims {
    pub same_length_spectrum: bool,
    pub same_marked_length_spectrum: bool,
    pub multiplicities: Vec<ExpectedMultiplicity>,
}

#[derive(Debug, Clone)]
pub struct ExampleRecord {
    pub name: ExampleName,
    pub algebra: Arc<LieAlgebra>,
    pub metric: Metric,
    pub lattices: [Lattice; 2],
    pub formulas: [Vec<CongruenceFormula>; 2],
    pub morphisms: MorphismBundle,
    pub claims: ExpectedClaims,
    /// Radius of the word-exponent window on `g⁽¹⁾` coordinates.
    pub deep_radius: i64,
    /// Squared lengths swept by comparisons, as λ expressions.
    pub sweep: Vec<&'static str>,
}

impl ExampleRecord {
    pub fn quotient(&self) -> QuotientData {
        quotient_algebra(&self.algebra, &self.metric).expect("3-step")
    }
}

pub fn example(name: ExampleName) -> ExampleRecord {
    use CongruenceFormula::*;
    let sweep_small = vec!["1", "sqrt(2)", "sqrt(3)", "2", "sqrt(5)"];
    match name {
        ExampleName::I => ExampleRecord {
            name,
            algebra: Arc::new(algebra_i()),
            metric: Metric::identity(7),
            lattices: [lattice_i_1(), lattice_i_2()],
            formulas: [vec![], vec![]],
            morphisms: MorphismBundle::QuotientRelating { map: relating_map_i() },
            claims: ExpectedClaims {
                same_length_spectrum: false,
                same_marked_length_spectrum: false,
                multiplicities: vec![],
            },
            deep_radius: 2,
            sweep: sweep_small,
        },
        ExampleName::II => ExampleRecord {
            name,
            algebra: Arc::new(algebra_ii()),
            metric: Metric::identity(5),
            lattices: [lattice_ii_1(), lattice_ii_2()],
            formulas: [vec![IiGamma1], vec![IiGamma2]],
            morphisms: MorphismBundle::None,
            claims: ExpectedClaims {
                same_length_spectrum: true,
                same_marked_length_spectrum: false,
                multiplicities: vec![],
            },
            deep_radius: 3,
            sweep: sweep_small,
        },
        ExampleName::III => ExampleRecord {
            name,
            algebra: Arc::new(algebra_iii()),
            metric: Metric::identity(7),
            lattices: [lattice_iii_1(), lattice_iii_2()],
            formulas: [
                vec![IiiCase1Gamma1, IiiCase2Gamma1, IiiCase3Gamma1],
                vec![IiiCase1Gamma2, IiiCase2Gamma2, IiiCase3Gamma2],
            ],
            morphisms: MorphismBundle::None,
            claims: ExpectedClaims {
                same_length_spectrum: false,
                same_marked_length_spectrum: false,
                multiplicities: vec![ExpectedMultiplicity { lambda: "1", m_prime: (20, 16) }],
            },
            deep_radius: 3,
            sweep: sweep_small,
        },
        ExampleName::IV => ExampleRecord {
            name,
            algebra: Arc::new(algebra_iv()),
            metric: Metric::identity(5),
            lattices: [lattice_iv_1(), lattice_iv_2()],
            formulas: [vec![IiGamma1], vec![IvSevenGamma2]],
            morphisms: MorphismBundle::None,
            claims: ExpectedClaims {
                same_length_spectrum: false,
                same_marked_length_spectrum: false,
                multiplicities: vec![ExpectedMultiplicity {
                    lambda: "sqrt(4*pi*(7-pi))",
                    m_prime: (28, 14),
                }],
            },
            deep_radius: 8,
            sweep: vec!["1", "2", "sqrt(4*pi*(7-pi))"],
        },
        ExampleName::V => ExampleRecord {
            name,
            algebra: Arc::new(algebra_v()),
            metric: metric_v(),
            lattices: [lattice_v_1(), lattice_v_2()],
            formulas: [vec![], vec![]],
            morphisms: MorphismBundle::Marking { phi: phi_v(), psi1: psi1_v(), psi2: psi2_v() },
            claims: ExpectedClaims {
                same_length_spectrum: true,
                same_marked_length_spectrum: true,
                multiplicities: vec![],
            },
            deep_radius: 3,
            sweep: vec!["1", "sqrt(2)", "2"],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_is_well_formed() {
        for name in ExampleName::ALL {
            let ex = example(name);
            let f = ex.algebra.validate().expect("valid");
            assert_eq!(f.step, 3);
            assert!(f.center_is_last_term());
            assert!(ex.algebra.is_strictly_nonsingular(50, 7).passed(), "{name}");
            assert_eq!(ex.metric.dim(), ex.algebra.dim());
            assert!(ex.lattices[0].same_central_intersection(&ex.lattices[1]));
        }
    }

    #[test]
    fn names_round_trip() {
        for name in ExampleName::ALL {
            assert_eq!(name.to_string().parse::<ExampleName>().unwrap(), name);
        }
        assert!("VI".parse::<ExampleName>().is_err());
    }

    #[test]
    fn phi_maps_frame_to_signed_frame_mod_kernel() {
        // Ψ₁(Ē_i) = ±Ē_i on the quotient
        let qd = example(ExampleName::V).quotient();
        let psi1 = psi1_v();
        for e in frame_v().iter().take(6) {
            let eb = qd.project(e);
            let img = linalg::vec_mat(&eb, &psi1, 6);
            let neg: QVec = eb.iter().map(|x| -x).collect();
            assert!(img == eb || img == neg);
        }
    }
}
