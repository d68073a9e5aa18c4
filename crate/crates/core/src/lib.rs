pub mod error;
pub mod models;
pub mod oracle;
pub mod output;
pub mod ratefn;
pub mod riskmeasures;
pub mod roots;
pub mod sim;
pub mod simplex;

pub use error::{Error, Result};
pub use models::{Law, Mixture};
pub use simplex::SimplexVector;
