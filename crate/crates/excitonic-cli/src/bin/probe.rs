use std::time::Instant;

use excitonic::{
    build, diagonalize, max_power, run_ensemble, run_local, EnergyProblem, GroupProblem, Method,
    ModelParams, Objective, RatePieces,
};

fn reading_at(params: &ModelParams) {
    let basis = diagonalize(&build(&params.chain));
    let pieces = RatePieces::new(params, &basis);
    match max_power(params, &basis, &pieces) {
        Ok(r) => println!(
            "    load_rate={:.4e} power={:.6e} flat={}",
            r.load_rate, r.power, r.flat_objective
        ),
        Err(e) => println!("    reading failed: {e}"),
    }
}

fn main() {
    // P16: does the N=40 grouped optimum's basin exist at N=60?
    let t0 = Instant::now();

    let base40 = ModelParams::reference(40);
    let p40 = EnergyProblem::grouped(GroupProblem::new(4, 40), base40, Objective::Power).unwrap();
    let lin40 = p40.evaluate(&p40.start_coordinates()).unwrap();
    let runs40 = run_ensemble(&p40, 51, 888, &[Method::Sequential]);
    let best40 = &runs40[0];
    let e40 = &best40.final_energies;
    let x40 = vec![e40[1], e40[2], e40[3], e40[4], e40[5], e40[38]];
    println!(
        "P16 N=40 ens51: best={:.6e} enh={:.2} coords={:?}",
        best40.final_objective,
        best40.final_objective / lin40,
        x40
    );
    let s40 = p40.start_coordinates();
    println!("P16 N=40 start coords: {s40:?}");

    let base60 = ModelParams::reference(60);
    let p60 = EnergyProblem::grouped(GroupProblem::new(4, 60), base60, Objective::Power).unwrap();
    let s60 = p60.start_coordinates();
    let lin60 = p60.evaluate(&s60).unwrap();
    println!("P16 N=60 lin={lin60:.6e}");

    let mut x60 = x40.clone();
    x60[5] = s60[5] + (x40[5] - s40[5]);
    let transplanted = p60.evaluate(&x60);
    println!(
        "P16 N=60 transplant eval: {:?} enh={:?}",
        transplanted,
        transplanted.map(|v| v / lin60)
    );

    let polished = run_local(&p60, 0, &x60, Method::Sequential, 0);
    println!(
        "P16 N=60 transplant polished: {:.6e} enh={:.2} err={:?}",
        polished.final_objective,
        polished.final_objective / lin60,
        polished.error
    );
    println!("P16 N=60 polished coords offsets from start:");
    let e60 = &polished.final_energies;
    let px = [e60[1], e60[2], e60[3], e60[4], e60[5], e60[58]];
    for (i, (p, s)) in px.iter().zip(&s60).enumerate() {
        println!("    x[{i}] = {p:.4} (offset {:+.4})", p - s);
    }

    println!("P16 N=60 best-found (ens51) reading:");
    let found = run_ensemble(&p60, 51, 888, &[Method::Sequential]);
    reading_at(&p60.params_for(&[
        found[0].final_energies[1],
        found[0].final_energies[2],
        found[0].final_energies[3],
        found[0].final_energies[4],
        found[0].final_energies[5],
        found[0].final_energies[58],
    ]));
    println!("P16 N=60 polished-transplant reading:");
    reading_at(&p60.params_for(&px));

    println!("P16 elapsed {:.1}s", t0.elapsed().as_secs_f64());
}
