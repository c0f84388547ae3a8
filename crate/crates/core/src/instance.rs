//! JSON instance files: algebra, weight density, optional group generator and
//! tensor partner. Complex entries are `[re, im]`, matrices row-major.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, Element, FdAlgebra, C64};
use crate::dynamics::OneParamGroup;
use crate::error::{Error, Result};
use crate::random::{derive_seed, random_density, random_hermitian};
use crate::weights::Weight;

pub const SCHEMA_VERSION: u32 = 1;

pub type WireMatrix = Vec<Vec<C64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partner {
    pub algebra: Vec<usize>,
    pub weight: Vec<WireMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub schema_version: u32,
    pub seed: u64,
    pub algebra: Vec<usize>,
    pub weight: Vec<WireMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<WireMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<Partner>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupSpec {
    /// No generator stored; suites use the modular group.
    #[default]
    None,
    /// Random Hermitian generator, generically not leaving the weight invariant.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub blocks: Vec<usize>,
    pub seed: u64,
    pub faithful: bool,
    pub partner: Option<Vec<usize>>,
    pub group: GroupSpec,
}

pub fn to_wire(e: &Element) -> Vec<WireMatrix> {
    e.blocks()
        .iter()
        .map(|b| (0..b.nrows()).map(|r| (0..b.ncols()).map(|c| b[(r, c)]).collect()).collect())
        .collect()
}

pub fn from_wire(alg: &FdAlgebra, blocks: &[WireMatrix]) -> Result<Element> {
    let mats = blocks
        .iter()
        .map(|rows| {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Shape("matrix rows of unequal length".into()));
            }
            Ok(CMat::from_fn(n, n, |r, c| rows[r][c]))
        })
        .collect::<Result<Vec<_>>>()?;
    alg.from_blocks(mats)
}

impl Instance {
    pub fn generate(opts: &GenOptions) -> Result<Self> {
        let alg = FdAlgebra::new(&opts.blocks)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "instance.weight"));
        let weight = to_wire(&random_density(&alg, opts.faithful, &mut rng));
        let generator = match opts.group {
            GroupSpec::None => None,
            GroupSpec::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "instance.generator"));
                Some(to_wire(&random_hermitian(&alg, &mut rng)))
            }
        };
        let partner = match &opts.partner {
            None => None,
            Some(dims) => {
                let b = FdAlgebra::new(dims)?;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "instance.partner"));
                Some(Partner { algebra: dims.clone(), weight: to_wire(&random_density(&b, opts.faithful, &mut rng)) })
            }
        };
        Ok(Self { schema_version: SCHEMA_VERSION, seed: opts.seed, algebra: opts.blocks.clone(), weight, generator, partner })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances serialize") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s).map_err(|e| Error::Instance(e.to_string()))?;
        if inst.schema_version != SCHEMA_VERSION {
            return Err(Error::Instance(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                inst.schema_version
            )));
        }
        inst.resolve()?;
        Ok(inst)
    }

    /// Validated module objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let algebra = FdAlgebra::new(&self.algebra)?;
        let weight = Weight::new(&algebra, from_wire(&algebra, &self.weight)?)?;
        let group = match &self.generator {
            None => None,
            Some(g) => Some(OneParamGroup::new(&algebra, from_wire(&algebra, g)?)?),
        };
        let partner = match &self.partner {
            None => None,
            Some(p) => {
                let b = FdAlgebra::new(&p.algebra)?;
                Some(Weight::new(&b, from_wire(&b, &p.weight)?)?)
            }
        };
        if weight.is_zero() {
            return Err(Error::DegenerateWeight);
        }
        Ok(Resolved { seed: self.seed, weight, group, partner })
    }
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub weight: Weight,
    pub group: Option<OneParamGroup>,
    pub partner: Option<Weight>,
}

impl Resolved {
    /// The stored partner, or the trace on `M_2`.
    pub fn partner_or_default(&self) -> Weight {
        self.partner
            .clone()
            .unwrap_or_else(|| Weight::trace(&FdAlgebra::new(&[2]).expect("valid")))
    }
}
