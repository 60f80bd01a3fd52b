//! Scan hierarchy depths for a scenario and report how much the physical
//! trajectory still moves when the depth increases by two — a quick way to
//! pick a safe truncation for production runs.
//!
//! Usage:
//!   depth_scan <topology> <lambda> <gamma> <t_max> <dt> <depth1,depth2,...>
//!
//! Example:
//!   cargo run --release --example depth_scan -- independent 2.0 0.2 30 0.01 10,12,14,16

use qcorr_core::heom::{integrate, sample_grid, HeomGenerator};
use qcorr_core::measures::concurrence;
use qcorr_core::model::{build_initial, BathSpec, InitialStateSpec, SystemSpec, Topology};
use qcorr_core::operators::frobenius_norm;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 7 {
        eprintln!("usage: depth_scan <independent|common> <lambda> <gamma> <t_max> <dt> <n1,n2,...>");
        std::process::exit(1);
    }
    let topology = match args[1].as_str() {
        "independent" => Topology::Independent,
        "common" => Topology::Common,
        other => {
            eprintln!("unknown topology {other}");
            std::process::exit(1);
        }
    };
    let lambda: f64 = args[2].parse().expect("lambda");
    let gamma: f64 = args[3].parse().expect("gamma");
    let t_max: f64 = args[4].parse().expect("t_max");
    let dt: f64 = args[5].parse().expect("dt");
    let depths: Vec<usize> = args[6].split(',').map(|s| s.parse().expect("depth")).collect();

    let sys = SystemSpec::default();
    let bath = BathSpec::new(lambda, gamma, 1.0, topology).expect("bath");
    let rho0 = build_initial(&InitialStateSpec::BellPhi {
        alpha: 1.0 / 2.0_f64.sqrt(),
    })
    .expect("initial");
    let grid = sample_grid(t_max, 301);

    let mut prev: Option<(usize, qcorr_core::heom::Trajectory)> = None;
    for &depth in &depths {
        let gen = match topology {
            Topology::Independent => HeomGenerator::independent(&sys, &bath, &bath, depth),
            Topology::Common => HeomGenerator::common(&sys, &bath, depth),
        }
        .expect("generator");
        let started = std::time::Instant::now();
        let traj = match integrate(&gen, &rho0, &grid, dt) {
            Ok(t) => t,
            Err(e) => {
                println!("depth {depth:2}: FAILED ({e})");
                prev = None;
                continue;
            }
        };
        let wall = started.elapsed().as_secs_f64();
        match &prev {
            Some((pd, pt)) => {
                let mut dstate = 0.0f64;
                let mut dconc = 0.0f64;
                for (a, b) in pt.states.iter().zip(&traj.states) {
                    dstate = dstate.max(frobenius_norm(&(a - b)));
                    dconc = dconc.max(
                        (concurrence(a).unwrap() - concurrence(b).unwrap()).abs(),
                    );
                }
                println!(
                    "depth {depth:2} ({:5} ADOs, {wall:6.2} s): vs depth {pd:2} — state {dstate:.3e}, concurrence {dconc:.3e}",
                    gen.layout().len()
                );
            }
            None => println!(
                "depth {depth:2} ({:5} ADOs, {wall:6.2} s): baseline",
                gen.layout().len()
            ),
        }
        prev = Some((depth, traj));
    }
}
