// Development probe: discover the figure-eight relator and longitude word
// from the SL(2,C) parabolic pair, for freezing into fixtures.
// (Not part of the deliverable surface; run with `cargo run --example dev_discover`.)

use nalgebra::Complex;
use projcell::group::{enumerate_elements, invert_word, Representation};
use projcell::linalg::{lorentz_embedding_complex, SquareMatrix};
use projcell::ToleranceConfig;

type C64 = Complex<f64>;

fn main() {
    let cfg = ToleranceConfig::default();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);

    for (label, omega) in [
        ("e^{i pi/3}", C64::new(0.5, 3.0_f64.sqrt() / 2.0)),
        ("e^{2 i pi/3}", C64::new(-0.5, 3.0_f64.sqrt() / 2.0)),
    ] {
        println!("=== omega = {} = {:?}", label, omega);
        let a = lorentz_embedding_complex(&[[one, one], [zero, one]], &cfg).unwrap();
        let b = lorentz_embedding_complex(&[[one, zero], [-omega, one]], &cfg).unwrap();
        let rep = Representation::new(
            4,
            vec![('a', a.clone()), ('b', b.clone())],
            vec![],
            vec![],
            &cfg,
        )
        .unwrap();

        // Relator search: BFS with a plain word list (no dedup), looking for
        // pairs of words with the same matrix -> relator u v^{-1}.
        let mut words: Vec<(String, SquareMatrix)> =
            vec![(String::new(), SquareMatrix::identity(4))];
        let mut frontier = words.clone();
        let mut relator: Option<String> = None;
        'outer: for _depth in 0..6 {
            let mut next = Vec::new();
            for (w, m) in &frontier {
                for letter in ['a', 'A', 'b', 'B'] {
                    // no immediate backtrack
                    if let Some(last) = w.chars().last() {
                        if last != letter && last.eq_ignore_ascii_case(&letter) {
                            continue;
                        }
                    }
                    let mut nw = w.clone();
                    nw.push(letter);
                    let nm = m.compose(rep.letter(letter).unwrap());
                    for (ow, om) in &words {
                        if nm.approx_eq_projective(om, 1e-6 * nm.frobenius().max(1.0)) {
                            let rel = projcell::group::free_reduce(&format!(
                                "{}{}",
                                nw,
                                invert_word(ow)
                            ));
                            if !rel.is_empty() {
                                relator = Some(rel);
                                break 'outer;
                            }
                        }
                    }
                    words.push((nw.clone(), nm.clone()));
                    next.push((nw, nm));
                }
            }
            frontier = next;
            println!("  depth done, words = {}", words.len());
        }
        match &relator {
            Some(r) => {
                println!("  relator candidate: {} (length {})", r, r.len());
                let m = rep.evaluate_word(r).unwrap();
                println!(
                    "  |rel - id| = {:.3e}",
                    m.max_abs_diff(&SquareMatrix::identity(4))
                );
            }
            None => println!("  no relator found up to depth 6"),
        }

        // Longitude search: elements commuting with a, parabolic, not a
        // power of a.
        let elements = enumerate_elements(&rep, 8, Some(1e4), &cfg).unwrap();
        println!("  enumerated {} elements to length 8", elements.len());
        let amat = rep.generator('a').unwrap();
        let mut found = 0;
        for e in &elements {
            if e.word.is_empty() {
                continue;
            }
            let comm = e.matrix.compose(amat);
            let comm2 = amat.compose(&e.matrix);
            if comm.approx_eq(&comm2, 1e-7 * comm.frobenius().max(1.0)) {
                // Skip powers of a: those fix the same 2-plane pointwise...
                // recognize by word content after reduction.
                let red = projcell::group::free_reduce(&e.word);
                if red.chars().all(|c| c.eq_ignore_ascii_case(&'a')) {
                    continue;
                }
                if projcell::group::is_parabolic(&e.matrix, &cfg) {
                    println!("  longitude candidate: {}", e.word);
                    found += 1;
                    if found >= 6 {
                        break;
                    }
                }
            }
        }
    }
}
