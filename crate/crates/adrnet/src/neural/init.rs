//! Seeded parameter initialization.

use rand::Rng;

use crate::neural::adam::ParamBlock;
use crate::neural::matrix::Matrix;

/// Initialization scheme for a parameter block.
///
/// `UniformScaled` draws from U(-s, s) with s = sqrt(6 / (fan_in + fan_out));
/// `NormalScaled` draws from N(0, 2 / (fan_in + fan_out)). Fan-in is the row
/// count, fan-out the column count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    UniformScaled,
    NormalScaled,
    Zeros,
}

impl InitScheme {
    pub fn parse(s: &str) -> Option<InitScheme> {
        match s {
            "uniform_scaled" => Some(InitScheme::UniformScaled),
            "normal_scaled" => Some(InitScheme::NormalScaled),
            "zeros" => Some(InitScheme::Zeros),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitScheme::UniformScaled => "uniform_scaled",
            InitScheme::NormalScaled => "normal_scaled",
            InitScheme::Zeros => "zeros",
        }
    }
}

/// Allocates a parameter block and fills its value per the scheme.
/// Gradient and moment buffers start at zero. Fully determined by the rng.
pub fn init_params<R: Rng>(
    name: &str,
    rows: usize,
    cols: usize,
    scheme: InitScheme,
    rng: &mut R,
) -> ParamBlock {
    let mut value = Matrix::zeros(rows, cols);
    match scheme {
        InitScheme::Zeros => {}
        InitScheme::UniformScaled => {
            let s = (6.0 / (rows + cols) as f64).sqrt();
            for v in value.values_mut() {
                *v = rng.gen_range(-s..s);
            }
        }
        InitScheme::NormalScaled => {
            let sd = (2.0 / (rows + cols) as f64).sqrt();
            for v in value.values_mut() {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                *v = sd * z;
            }
        }
    }
    ParamBlock::from_value(name, value)
}
