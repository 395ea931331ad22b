use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("placement infeasible: {0}")]
    PlacementInfeasible(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("no free cell left to respawn resource {0}")]
    NoFreeCell(u32),
    #[error("resource {0} cannot be respawned: {1}")]
    RespawnPrecondition(u32, &'static str),
}
