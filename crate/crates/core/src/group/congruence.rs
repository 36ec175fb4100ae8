use serde::Serialize;

/// Closed-form action of conjugation `γ ↦ â γ â⁻¹` on word exponents for the
/// built-in lattices, where `â` has word exponents `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CongruenceFormula {
    /// `{2X₁, Y₁, Y₂, Z, W}`, any element.
    IiGamma1,
    /// `{2X₁, Y₁ + ½Z, Y₂, Z, W}`, any element.
    IiGamma2,
    /// `{2X₁, 2X₂, Y₁, Y₂, Z₁, Z₂, W}`, `exp(±Y₂) exp(k₁Z₁) exp(k₂Z₂) exp(jW)`.
    IiiCase1Gamma1,
    /// `{X₁, X₂, 2Y₁, 2Y₂, Z₁, Z₂, W}`, `exp(±X₁) exp(k₁Z₁) exp(k₂Z₂) exp(jW)`.
    IiiCase1Gamma2,
    /// `exp(±Y₁) exp(k₁Z₁) exp(jW)` in the first lattice.
    IiiCase2Gamma1,
    /// `exp(±X₂) exp(k₁Z₁) exp(jW)` in the second lattice.
    IiiCase2Gamma2,
    /// `exp(k₁Z₁) exp(k₂Z₂) exp(jW)` in the first lattice.
    IiiCase3Gamma1,
    /// `exp(k₁Z₁) exp(k₂Z₂) exp(jW)` in the second lattice.
    IiiCase3Gamma2,
    /// `{X₁, 2Y₁, 2Y₂, Z, W}`, `exp(±7Z) exp(jW)`.
    IvSevenGamma2,
}

fn unit_sign(s: i64) -> bool {
    s == 1 || s == -1
}

impl CongruenceFormula {
    pub fn rank(self) -> usize {
        match self {
            Self::IiGamma1 | Self::IiGamma2 | Self::IvSevenGamma2 => 5,
            _ => 7,
        }
    }

    /// Conjugator coordinates that can change the result; the rest are set to 0.
    pub fn conjugator_vars(self) -> &'static [usize] {
        match self {
            Self::IiGamma1 | Self::IiGamma2 => &[0, 1, 2, 3],
            Self::IiiCase1Gamma1 => &[0, 1, 2],
            Self::IiiCase1Gamma2 => &[0, 1, 2, 3, 4],
            Self::IiiCase2Gamma1 => &[0, 3],
            Self::IiiCase2Gamma2 => &[0, 3, 5],
            Self::IiiCase3Gamma1 | Self::IiiCase3Gamma2 => &[0, 1],
            Self::IvSevenGamma2 => &[0],
        }
    }

    pub fn applies_to(self, g: &[i64]) -> bool {
        if g.len() != self.rank() {
            return false;
        }
        match self {
            Self::IiGamma1 | Self::IiGamma2 => true,
            Self::IiiCase1Gamma1 => g[..3] == [0, 0, 0] && unit_sign(g[3]),
            Self::IiiCase1Gamma2 => unit_sign(g[0]) && g[1..4] == [0, 0, 0],
            Self::IiiCase2Gamma1 => {
                g[..2] == [0, 0] && unit_sign(g[2]) && g[3] == 0 && g[5] == 0
            }
            Self::IiiCase2Gamma2 => {
                g[0] == 0 && unit_sign(g[1]) && g[2..4] == [0, 0] && g[5] == 0
            }
            Self::IiiCase3Gamma1 | Self::IiiCase3Gamma2 => g[..4] == [0, 0, 0, 0],
            Self::IvSevenGamma2 => g[..3] == [0, 0, 0] && g[3].abs() == 7,
        }
    }

    /// Word exponents of `â γ â⁻¹`, or `None` outside the formula's family.
    pub fn apply(self, g: &[i64], c: &[i64]) -> Option<Vec<i64>> {
        if !self.applies_to(g) || c.len() != self.rank() {
            return None;
        }
        let mut out = g.to_vec();
        match self {
            Self::IiGamma1 | Self::IiGamma2 => {
                let extra = i64::from(self == Self::IiGamma2);
                let (n1, m1, m2, k) = (g[0], g[1], g[2], g[3]);
                let (bn, bm1, bm2, bk) = (c[0], c[1], c[2], c[3]);
                out[3] = k + 2 * m1 * bn - 2 * n1 * bm1;
                out[4] = g[4] + extra * (m1 * bn - n1 * bm1) + m2 * bm1 - m1 * bm2 + 2 * k * bn
                    - 2 * n1 * bk
                    + 2 * m1 * bn * bn
                    - 4 * n1 * bn * bm1
                    + 2 * n1 * n1 * bm1;
            }
            Self::IiiCase1Gamma1 => {
                let (s, k1, k2) = (g[3], g[4], g[5]);
                out[4] = k1 + 2 * s * c[1];
                out[5] = k2 + 2 * s * c[0];
                out[6] = g[6] + s * c[2] + 2 * k1 * c[0] + 2 * k2 * c[1] + 4 * s * c[0] * c[1];
            }
            Self::IiiCase1Gamma2 => {
                let (s, k1, k2) = (g[0], g[4], g[5]);
                out[4] = k1 - 2 * s * c[2];
                out[5] = k2 - 2 * s * c[3];
                out[6] = g[6] - s * c[4] + c[2] + k1 * c[0] + k2 * c[1]
                    - 2 * s * c[2] * c[0]
                    - 2 * s * c[3] * c[1];
            }
            Self::IiiCase2Gamma1 => {
                let (s, k1) = (g[2], g[4]);
                out[4] = k1 + 2 * s * c[0];
                out[6] = g[6] - s * c[3] + 2 * k1 * c[0] + 2 * s * c[0] * c[0];
            }
            Self::IiiCase2Gamma2 => {
                let (s, k1) = (g[1], g[4]);
                out[4] = k1 - 2 * s * c[3];
                out[6] = g[6] - s * c[5] + k1 * c[0] - 2 * s * c[0] * c[3];
            }
            Self::IiiCase3Gamma1 => {
                out[6] = g[6] + 2 * (g[4] * c[0] + g[5] * c[1]);
            }
            Self::IiiCase3Gamma2 => {
                out[6] = g[6] + g[4] * c[0] + g[5] * c[1];
            }
            Self::IvSevenGamma2 => {
                out[4] = g[4] + g[3] * c[0];
            }
        }
        Some(out)
    }

    /// Searches conjugators with the formula's variables in `[-r, r]`.
    pub fn search(self, g: &[i64], target: &[i64], r: i64) -> Option<Vec<i64>> {
        if !self.applies_to(g) || !self.applies_to(target) {
            return None;
        }
        let vars = self.conjugator_vars();
        let mut c = vec![0i64; self.rank()];
        let total = (2 * r + 1).pow(vars.len() as u32);
        for idx in 0..total {
            let mut t = idx;
            for &v in vars {
                c[v] = t % (2 * r + 1) - r;
                t /= 2 * r + 1;
            }
            if self.apply(g, &c).as_deref() == Some(target) {
                return Some(c);
            }
        }
        None
    }
}
