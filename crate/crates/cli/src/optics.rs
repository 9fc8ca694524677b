use std::fmt::Write;
use std::path::Path;

use qsteer::optics::{builtin_network, solve_angles, verify_network, OpticalNetwork, Target, Verification, BUILTIN_NETWORKS};

/// Random starts used when a network leaves angles open.
pub const SOLVE_STARTS: usize = 16;

#[derive(Clone, Debug)]
pub struct OpticsOutcome {
    pub source: String,
    /// Solved angles when the network had open slots.
    pub solved: Option<Vec<f64>>,
    pub result: Result<Verification, String>,
}

impl OpticsOutcome {
    pub fn passed(&self) -> bool {
        self.result.as_ref().is_ok_and(|v| v.passed)
    }
}

/// Resolves `source` as a built-in network name, else as a file path.
pub fn load_network(source: &str) -> Result<OpticalNetwork, String> {
    if let Ok(net) = builtin_network(source) {
        return Ok(net);
    }
    let text = std::fs::read_to_string(Path::new(source)).map_err(|e| format!("{source}: {e}"))?;
    text.parse::<OpticalNetwork>().map_err(|e| format!("{source}: {e}"))
}

pub fn run_optics_verify(source: &str, seed: u64) -> OpticsOutcome {
    let mut solved = None;
    let result = load_network(source).and_then(|net| {
        if net.free_slots() > 0 {
            let (angles, v) = solve_angles(&net, SOLVE_STARTS, seed).map_err(|e| e.to_string())?;
            solved = Some(angles);
            Ok(v)
        } else {
            verify_network(&net).map_err(|e| e.to_string())
        }
    });
    OpticsOutcome {
        source: source.to_string(),
        solved,
        result,
    }
}

/// Every shipped network, in catalogue order.
pub fn builtin_sources() -> Vec<String> {
    BUILTIN_NETWORKS.iter().map(|(name, _)| name.to_string()).collect()
}

pub fn format_outcome(o: &OpticsOutcome) -> String {
    let mut s = String::new();
    match &o.result {
        Err(e) => {
            let _ = writeln!(s, "{}: error: {e}", o.source);
        }
        Ok(v) => {
            let target = match v.target {
                Target::Mub { d, setting } => format!("mub d={d} setting={setting}"),
                Target::Bell { d } => format!("bell d={d}"),
            };
            let _ = writeln!(
                s,
                "{} [{}] {target}: distance {:.3e} (tolerance {:.1e}) {}",
                o.source,
                v.name,
                v.distance,
                v.tolerance,
                if v.passed { "PASS" } else { "FAIL" }
            );
            let per: Vec<String> = v.distances.iter().map(|d| format!("{d:.3e}")).collect();
            let _ = writeln!(s, "  outcome distances: {}", per.join(" "));
            let _ = writeln!(s, "  completeness defect: {:.3e}", v.completeness_defect);
            if let Some(p) = v.success_probability {
                let _ = writeln!(s, "  success probability: {p:.6}");
            }
            if let Some(a) = &o.solved {
                let a: Vec<String> = a.iter().map(|x| format!("{x:.4}")).collect();
                let _ = writeln!(s, "  solved angles: {}", a.join(" "));
            }
        }
    }
    s
}
