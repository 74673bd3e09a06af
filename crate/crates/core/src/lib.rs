//! Multi-asset Merton jump-diffusion pricing and calibration.
//!
//! Single assets carry a strike-dependent diffusive vol plus a jump whose
//! size scales with that vol; baskets share one Poisson jump clock across
//! all components. Baskets are priced either by moment matching a shifted
//! lognormal or by a Gaussian copula over the Merton marginals, and the jump
//! tuple is calibrated so the basket skew matches an index skew.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basket;
pub mod black_scholes;
pub mod calibration;
pub mod copula;
pub mod curve;
pub mod error;
pub mod io;
pub mod jump;
pub mod linalg;
pub mod marginal;
pub mod merton;
pub mod normal;
pub mod rng;
pub mod surface;

pub use basket::{basket_moments, merton_basket_call, merton_basket_calls, tm_pricer, BasketSpec};
pub use black_scholes::{bs_call, bs_digital_put, bs_put, bs_vega, implied_vol, OptionQuote};
pub use calibration::{
    calibrate_jump_tuple, diffusive_correlation_for_target, fixed_point_diffusive_vol, total_correlation,
    CalibrationReport, FixedPointConfig, SearchSpace, TupleConfig, TupleProblem,
};
pub use copula::{basket_copula_pricer, merton_copula_basket, CopulaBasket, CopulaPrices, McConfig};
pub use curve::DiffusiveVolCurve;
pub use error::{Error, Result};
pub use jump::JumpParams;
pub use marginal::{marginal_distribution, MarginalDistribution};
pub use merton::{digital_put_dlambda, merton_call, merton_call_extended, merton_digital_put, simulate_merton_paths};
pub use surface::VolSurfaceSlice;
