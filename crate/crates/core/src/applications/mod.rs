//! Applied models: trade routes with a convex cost of links, and the linear
//! response of ensemble averages to weak additional interactions.

mod response;
mod trade;

pub use response::{finite_difference_response, linear_response, perturbed_table, reciprocity};
pub use trade::{
    finite_trade_utility, trade_fixed_point, trade_limit_model, trade_shares_asymptotic, typed_link_shares, zeta_trade,
    TradeModel, TradeSolution, TRADE_BISECTION_WIDTH,
};
