use serde::Serialize;

/// Summary of one solve, printed as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub structure: String,
    pub solver: String,
    /// `optimal`, `infeasible`, `unsupported`, `budget_exceeded` or `error`.
    pub status: String,
    /// Present iff the status is `optimal`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    pub wall_time_ms: f64,
    pub cells_enumerated: u64,
    pub cells_solved: u64,
    pub nodes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunReport {
    pub fn new(structure: &str, solver: &str, status: &str) -> Self {
        RunReport {
            structure: structure.into(),
            solver: solver.into(),
            status: status.into(),
            objective: None,
            wall_time_ms: 0.0,
            cells_enumerated: 0,
            cells_solved: 0,
            nodes: 0,
            message: None,
        }
    }

    pub fn print(&self) {
        eprintln!("{}", serde_json::to_string_pretty(self).expect("report serializes"));
    }
}
