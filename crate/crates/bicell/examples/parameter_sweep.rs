//! Runs a small parameter sweep over the kinetic rate b and the coupling D1
//! from a single config document with `sweep.<key>` axes, then prints the
//! per-cell outcomes and the aggregate CSV. Cells run in parallel and one
//! bad cell cannot take down the rest.

use bicell::experiment_runner::sweep;

fn main() -> bicell::Result<()> {
    let dir = tempfile::tempdir()?;

    // Axes replace same-named scalar keys per cell; everything else is the
    // shared base. Checks beyond decay/absorption are off to keep this quick.
    let text = "\
count_x = 48
d1 = 0.1
d2 = 0.1
a = 1
D1 = 1
D2 = 1
preset = random
amplitude = 1
seed = 2
t_end = 3
dt = 0.002
snapshot_stride = 0
check_windows = false
check_tails = false
check_truncated_h1 = false
sweep.b = 0.5, 1, 2
sweep.D1 = 0.5, 1
";

    let report = sweep(text, Some(dir.path()), None, 0)?;
    for row in &report.rows {
        let assigns: Vec<String> =
            row.assignments.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        println!(
            "run {:04} [{}]: {}{}",
            row.index,
            assigns.join(", "),
            row.status.name(),
            if row.detail.is_empty() { String::new() } else { format!(" ({})", row.detail) }
        );
    }

    println!("\naggregate ({}):", report.aggregate_path.display());
    print!("{}", std::fs::read_to_string(&report.aggregate_path)?);
    println!("\nexit code = {}", report.exit_code());

    std::process::exit(report.exit_code());
}
