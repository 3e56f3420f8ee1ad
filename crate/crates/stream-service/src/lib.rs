//! Live docking sessions streamed to operator consoles.
//!
//! A session runs the black-box controller with the surrogate tree shadowing it,
//! publishes one [`Frame`] per step with the surrogate's attributions, and lets an
//! operator take over, hold an action of their own and hand control back.

mod error;
pub mod protocol;
mod scenario;
mod server;
mod session;

pub use error::ServiceError;
pub use protocol::{parse_command, Command, ErrorCode, Frame, Mode, Reply, RewardBlock, PROTOCOL_VERSION};
pub use scenario::{LoadedScenario, ScenarioConfig};
pub use server::{serve, serve_on, spawn_session, SessionLoop};
pub use session::{Session, MAX_SPEED};
