//! The simulation grids of the three published size/power tables.

use hdlin_core::{Distribution, ScenarioConfig, ScenarioVariant};

const EPS_FULL: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
const EPS_TO_09: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
        }
    }

    pub fn all() -> [Preset; 3] {
        [Preset::Table1, Preset::Table2, Preset::Table3]
    }

    /// Cells in table order: block, then distribution, then `ε`.
    pub fn cells(self, replications: usize, seed: u64) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        for block in self.blocks() {
            for (dist, v0) in [(Distribution::Normal, block.v0_normal), (Distribution::GammaShifted, block.v0_gamma)] {
                for &epsilon in block.epsilons {
                    out.push(ScenarioConfig {
                        replications,
                        seed,
                        ..ScenarioConfig::new(self.variant(), dist, block.p, block.sizes.to_vec(), epsilon, v0)
                    });
                }
            }
        }
        out
    }

    pub fn variant(self) -> ScenarioVariant {
        match self {
            Preset::Table1 => ScenarioVariant::ThreeGroupSum,
            Preset::Table2 => ScenarioVariant::ThreeGroupContrast,
            Preset::Table3 => ScenarioVariant::TwoSample,
        }
    }

    fn blocks(self) -> Vec<Block> {
        let b = |p, sizes, v0_normal, v0_gamma, epsilons| Block {
            p,
            sizes,
            v0_normal,
            v0_gamma,
            epsilons,
        };
        match self {
            Preset::Table1 => vec![
                b(40, &[90, 100, 100][..], 0.4, 0.5, &EPS_FULL[..]),
                b(40, &[180, 200, 200], 0.2, 0.3, &EPS_FULL),
                b(80, &[180, 200, 200], 0.2, 0.4, &EPS_FULL),
                b(120, &[180, 200, 200], 0.3, 0.4, &EPS_FULL),
            ],
            Preset::Table2 => vec![
                b(40, &[90, 100, 100], 0.3, 0.1, &EPS_FULL),
                b(40, &[180, 200, 200], 0.1, 0.1, &EPS_FULL),
                b(80, &[180, 200, 200], 0.2, 0.1, &EPS_FULL),
                b(120, &[180, 200, 200], 0.2, 0.1, &EPS_FULL),
            ],
            Preset::Table3 => vec![
                b(40, &[90, 100], 0.2, 0.2, &EPS_FULL),
                b(40, &[180, 200], 0.1, 0.1, &EPS_TO_09),
                b(80, &[180, 200], 0.1, 0.1, &EPS_FULL),
                b(120, &[180, 200], 0.2, 0.2, &EPS_TO_09),
            ],
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::all()
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset '{s}'"))
    }
}

struct Block {
    p: usize,
    sizes: &'static [usize],
    v0_normal: f64,
    v0_gamma: f64,
    epsilons: &'static [f64],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        for preset in Preset::all() {
            let cells = preset.cells(10, 1);
            assert_eq!(cells.len(), 48, "{}", preset.name());
            for c in &cells {
                c.validate().unwrap();
                assert_eq!(c.variant, preset.variant());
            }
        }
    }

    #[test]
    fn table1_first_block() {
        let cells = Preset::Table1.cells(10, 1);
        let normal: Vec<_> = cells[..6].iter().map(|c| (c.distribution, c.v0, c.epsilon)).collect();
        assert!(normal.iter().all(|&(d, v0, _)| d == Distribution::Normal && v0 == 0.4));
        assert_eq!(normal.iter().map(|x| x.2).collect::<Vec<_>>(), EPS_FULL);
        assert!(cells[6..12].iter().all(|c| c.distribution == Distribution::GammaShifted && c.v0 == 0.5));
        assert_eq!(cells[0].sizes, [90, 100, 100]);
    }

    #[test]
    fn table3_epsilon_ranges() {
        let cells = Preset::Table3.cells(10, 1);
        let max_eps: Vec<f64> = cells.chunks(12).map(|b| b[5].epsilon).collect();
        assert_eq!(max_eps, [1.0, 0.9, 1.0, 0.9]);
        assert!(cells.iter().all(|c| c.sizes.len() == 2));
    }
}
