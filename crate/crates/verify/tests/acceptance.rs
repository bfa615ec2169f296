//! Runs every preset once and judges the thirteen acceptance criteria from
//! the declared checks, printing one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use hartree_cli::{execute, preset_jobs, RunOptions, RunSummary};

/// Checks a criterion needs: `(preset, check)`; `*` as the preset means every
/// run that declares the check.
struct Criterion {
    id: u32,
    title: &'static str,
    checks: &'static [(&'static str, &'static str)],
    /// Reported alongside the verdict without deciding it.
    context: &'static [(&'static str, &'static str)],
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "free dispersive law, d = 1, 2, 3",
        checks: &[
            ("free_decay_1d", "dispersive_law"),
            ("free_decay_2d", "dispersive_law"),
            ("free_decay_3d", "dispersive_law"),
        ],
        context: &[],
    },
    Criterion {
        id: 2,
        title: "free decay exponent d/2 +/- 0.1, r^2 >= 0.999",
        checks: &[
            ("free_decay_1d", "decay_exponent"),
            ("free_decay_1d", "decay_r_squared"),
            ("free_decay_2d", "decay_exponent"),
            ("free_decay_2d", "decay_r_squared"),
            ("free_decay_3d", "decay_exponent"),
            ("free_decay_3d", "decay_r_squared"),
        ],
        context: &[],
    },
    Criterion {
        id: 3,
        title: "small-data Hartree decay in d = 3",
        checks: &[
            ("small_data_hartree", "smallness"),
            ("small_data_hartree", "sup_exponent"),
            ("small_data_hartree", "running_m_monotone"),
            ("small_data_hartree", "running_m_below_c0"),
            ("small_data_hartree", "continuity_trap"),
        ],
        context: &[],
    },
    Criterion {
        id: 4,
        title: "time-derivative decay in d = 3",
        checks: &[("small_data_hartree", "dt_exponent")],
        context: &[],
    },
    Criterion {
        id: 5,
        title: "mass conservation and dt^2 energy drift",
        checks: &[("*", "mass_drift"), ("small_data_cubic", "energy_drift_ratio")],
        context: &[],
    },
    Criterion {
        id: 6,
        title: "Duhamel residual",
        checks: &[("derivative_decay", "duhamel_order"), ("derivative_decay", "duhamel_residual")],
        context: &[],
    },
    Criterion {
        id: 7,
        title: "bootstrap function structure",
        checks: &[
            ("bootstrap_sweep", "two_components"),
            ("bootstrap_sweep", "stationary_identity_displayed"),
            ("bootstrap_sweep", "root_agreement"),
            ("bootstrap_sweep", "random_root_agreement"),
        ],
        context: &[
            ("bootstrap_sweep", "stationary_identity_exact"),
            ("bootstrap_sweep", "stationary_inequality"),
        ],
    },
    Criterion {
        id: 8,
        title: "kernel integral bounded, max/min <= 2, d = 2 rejected",
        checks: &[
            ("inequality_suite", "kernel_bounded"),
            ("inequality_suite", "kernel_ratio"),
            ("inequality_suite", "kernel_d2_rejected"),
        ],
        context: &[],
    },
    Criterion {
        id: 9,
        title: "Kato-Ponce ratio, reseeding, scale invariance",
        checks: &[
            ("inequality_suite", "kato_ponce_bounded"),
            ("inequality_suite", "kato_ponce_reseed_stability"),
            ("inequality_suite", "kato_ponce_scale_invariance"),
        ],
        context: &[],
    },
    Criterion {
        id: 10,
        title: "equivalent norm",
        checks: &[
            ("inequality_suite", "equivalent_norm_ratios"),
            ("inequality_suite", "free_equivalence_bound"),
        ],
        context: &[],
    },
    Criterion {
        id: 11,
        title: "cubic limit of mollified Hartree",
        checks: &[
            ("cubic_limit", "errors_decreasing"),
            ("cubic_limit", "bound_n1"),
            ("cubic_limit", "bound_n2"),
            ("cubic_limit", "bound_n4"),
            ("cubic_limit", "bound_n8"),
        ],
        context: &[],
    },
    Criterion {
        id: 12,
        title: "Gronwall large-data bound",
        checks: &[
            ("large_data_gronwall", "beta_quadrature"),
            ("large_data_gronwall", "beta_quadrature_reference"),
            ("large_data_gronwall", "n_below_gronwall_bound"),
        ],
        context: &[],
    },
    Criterion {
        id: 13,
        title: "integrator convergence and reversibility",
        checks: &[
            ("small_data_cubic", "convergence_slope"),
            ("small_data_cubic", "reversibility"),
            ("linear_dispersive", "reversibility"),
        ],
        context: &[],
    },
];

/// Verdict and the lines explaining it.
fn judge(c: &Criterion, runs: &BTreeMap<String, Result<RunSummary, String>>) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut notes = Vec::new();
    for &(preset, check) in c.checks {
        let targets: Vec<&String> = if preset == "*" {
            runs.keys().collect()
        } else {
            runs.keys().filter(|k| k.as_str() == preset).collect()
        };
        let mut found = false;
        for label in targets {
            match &runs[label] {
                Ok(s) => {
                    if let Some(x) = s.find(check) {
                        found = true;
                        ok &= x.passed;
                        if !x.passed {
                            notes.push(format!("{label}/{check}: {}", x.detail));
                        }
                    }
                }
                Err(e) => {
                    found = true;
                    ok = false;
                    notes.push(format!("{label}: {e}"));
                }
            }
        }
        if !found {
            ok = false;
            notes.push(format!("{preset}/{check}: not reported"));
        }
    }
    (ok, notes)
}

fn main() -> ExitCode {
    let jobs = preset_jobs(&RunOptions::default()).expect("presets parse");
    let mut runs = BTreeMap::new();
    for job in &jobs {
        let start = Instant::now();
        let r = execute(job, None).map_err(|e| e.to_string());
        eprintln!("ran {} in {:.1} s", job.label, start.elapsed().as_secs_f64());
        runs.insert(job.label.clone(), r);
    }

    let mut failed = 0;
    for c in CRITERIA {
        let (ok, notes) = judge(c, &runs);
        println!("criterion {:>2} {}  {}", c.id, if ok { "PASS" } else { "FAIL" }, c.title);
        for n in notes {
            println!("              {n}");
        }
        for &(preset, check) in c.context {
            if let Some(Ok(s)) = runs.get(preset) {
                if let Some(x) = s.find(check) {
                    let verdict = if x.passed { "holds" } else { "fails" };
                    println!("              (context) {preset}/{check} {verdict}: {}", x.detail);
                }
            }
        }
        failed += usize::from(!ok);
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
