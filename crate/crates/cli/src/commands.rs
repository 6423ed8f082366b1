use latdec::analysis::{
    count_primitive_vectors, diversity_slope, dmt_reference, estimate_ser_point, short_vector_curve, DmtKind,
    MonteCarlo, RARE_EVENT_FLOOR,
};
use latdec::channel::SnrPoint;
use latdec::stcodes::code_by_kind;
use latdec::Error;

use crate::config::{Command, ExperimentConfig};
use crate::output::{Cell, Footer, Table};
use crate::CliError;

pub fn run(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    match cfg.command {
        Command::ShortVectorScaling => short_vector_scaling(cfg),
        Command::SerSweep => ser_sweep(cfg),
        Command::DmtCurves => dmt_curves(cfg),
        Command::PrimitiveCount => primitive_count(cfg),
    }
}

fn monte_carlo(cfg: &ExperimentConfig) -> MonteCarlo {
    MonteCarlo::new(cfg.trials, cfg.seed).with_max_trials(cfg.max_trials)
}

fn insufficient(footer: Footer, err: Error) -> Result<Footer, CliError> {
    match err {
        Error::InsufficientData(msg) => Ok(footer.with("status", "insufficient-data").with("detail", msg.replace(',', ";"))),
        other => Err(other.into()),
    }
}

fn short_vector_scaling(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let code = code_by_kind(cfg.code, cfg.m, cfg.t, cfg.qam, 1.0)?;
    eprintln!(
        "short-vector-scaling: M={} N={} T={} code={} trials={}",
        cfg.m, cfg.n, cfg.t, cfg.code, cfg.trials
    );
    let curve = short_vector_curve(cfg.m, cfg.n, cfg.t, code.lattice(), &cfg.eps, &monte_carlo(cfg))?;
    let mut table = Table::new(cfg.command.as_str(), &["epsilon", "prob", "ci_low", "ci_high", "trials"]);
    for (eps, e) in &curve.points {
        table.push(vec![(*eps).into(), e.value.into(), e.ci_low.into(), e.ci_high.into(), e.trials.into()]);
    }
    let fit = Footer::new("slope");
    table.footers.push(match curve.slope() {
        Ok(f) => fit.with("slope", f.slope).with("residual", f.residual).with("points", f.points.len() as u64),
        Err(e) => insufficient(fit, e)?,
    });
    let (m, n) = (cfg.m as u64, cfg.n as u64);
    table.footers.push(
        Footer::new("reference_exponents").with("full_diversity", 2 * m * (n - m + 1)).with("lattice", 2 * m),
    );
    Ok(table)
}

fn ser_sweep(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let code = code_by_kind(cfg.code, cfg.m, cfg.t, cfg.qam, 1.0)?;
    let mc = monte_carlo(cfg);
    let mut table = Table::new(cfg.command.as_str(), &["snr_db", "decoder", "ser", "ci_low", "ci_high", "trials"]);
    let mut curves = vec![Vec::new(); cfg.decoders.len()];
    for &db in &cfg.snr_db {
        let snr = SnrPoint::from_db(db, cfg.m);
        let ests = estimate_ser_point(&code, cfg.n, &cfg.decoders, snr, &mc)?;
        for ((id, e), curve) in cfg.decoders.iter().zip(&ests).zip(&mut curves) {
            eprintln!("ser-sweep: {db} dB {id}: {} errors in {} trials", e.successes, e.trials);
            table.push(vec![
                db.into(),
                id.as_str().into(),
                e.value.into(),
                e.ci_low.into(),
                e.ci_high.into(),
                e.trials.into(),
            ]);
            curve.push((snr, *e));
        }
    }
    for (id, curve) in cfg.decoders.iter().zip(&curves) {
        let footer = Footer::new("diversity_slope").with("decoder", id.as_str());
        table.footers.push(match diversity_slope(curve) {
            Ok(f) => footer.with("slope", f.slope).with("residual", f.residual).with("points", f.points.len() as u64),
            Err(e) => insufficient(footer, e)?,
        });
    }
    table.footers.push(Footer::new("rare_event_floor").with("errors", RARE_EVENT_FLOOR));
    Ok(table)
}

fn dmt_curves(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let curves = [DmtKind::Optimal, DmtKind::NldBound, DmtKind::VBlast]
        .map(|k| dmt_reference(cfg.m, cfg.n, k, &cfg.r_grid));
    let [optimal, nld, vblast] = curves;
    let (optimal, nld, vblast) = (optimal?, nld?, vblast?);
    let mut table = Table::new(cfg.command.as_str(), &["r", "optimal", "nld_bound", "vblast"]);
    for i in 0..cfg.r_grid.len() {
        table.push(vec![
            cfg.r_grid[i].into(),
            optimal.points[i].1.into(),
            nld.points[i].1.into(),
            vblast.points[i].1.into(),
        ]);
    }
    Ok(table)
}

fn primitive_count(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut table = Table::new(cfg.command.as_str(), &["k", "count", "bound", "pass"]);
    // The bound 2^{2kM} is asserted only in even dimension 2M with M >= 2.
    let asserted = cfg.dim >= 4 && cfg.dim % 2 == 0;
    for k in cfg.k_min..=cfg.k_max {
        eprintln!("primitive-count: dim={} k={k}", cfg.dim);
        let count = count_primitive_vectors(cfg.dim, k, cfg.budget)?;
        let exp = k as u64 * cfg.dim as u64;
        let bound: Cell = if exp < 128 { Cell::Int(1u128 << exp) } else { Cell::Text(format!("2^{exp}")) };
        let pass = if !asserted {
            "n/a"
        } else if exp < 128 && count as u128 >= 1u128 << exp {
            "pass"
        } else {
            "fail"
        };
        table.push(vec![(k as u64).into(), count.into(), bound, pass.into()]);
    }
    Ok(table)
}
