// Development probe: run the orbit-hull pipeline pieces on the modular
// once-punctured torus and print diagnostics.

use nalgebra::DVector;
use projcell::group::{
    boundary_directions, enumerate_elements, orbit, validate_cusp, CuspSpec, Representation,
};
use projcell::hull::{incremental_hull, stable_facets};
use projcell::linalg::lorentz_embedding_real;
use projcell::ToleranceConfig;

fn main() {
    let cfg = ToleranceConfig::default();
    let a = lorentz_embedding_real(&[[1.0, 1.0], [1.0, 2.0]], &cfg).unwrap();
    let b = lorentz_embedding_real(&[[1.0, -1.0], [-1.0, 2.0]], &cfg).unwrap();
    let rep = Representation::new(
        3,
        vec![('a', a), ('b', b)],
        vec![],
        vec![CuspSpec {
            name: "cusp".into(),
            words: vec!["abAB".into()],
            expected_fixed_point: None,
        }],
        &cfg,
    )
    .unwrap();

    let report = validate_cusp(&rep, &rep.cusps[0], &cfg).unwrap();
    println!("cusp validation passed: {}", report.passed);
    let p = report.fixed_point.clone().unwrap();
    println!("fixed point: {:?}", p.coords().as_slice());

    // Cone-side lift.
    let mut lift: DVector<f64> = p.coords().clone();
    let spatial = lift.rows(0, 2).norm();
    if lift[2] < spatial {
        lift = -lift;
    }
    println!("lift: {:?}", lift.as_slice());

    for word_length in [6usize, 8] {
        let t0 = std::time::Instant::now();
        let elements = enumerate_elements(&rep, word_length, Some(1e3), &cfg).unwrap();
        println!(
            "L={}: {} elements ({:?})",
            word_length,
            elements.len(),
            t0.elapsed()
        );
        let pts_w = orbit(&lift, &elements, &cfg).unwrap();
        println!("  orbit points: {}", pts_w.len());

        // Slope recovery sanity: points should be (p²−q², 2pq, p²+q²).
        let mut int_ok = 0;
        for o in &pts_w {
            let (u, v, w) = (o.vector[0], o.vector[1], o.vector[2]);
            let p2 = (w + u) / 2.0;
            let q2 = (w - u) / 2.0;
            let pq = v / 2.0;
            if (p2 - p2.round()).abs() < 1e-6
                && (q2 - q2.round()).abs() < 1e-6
                && (pq - pq.round()).abs() < 1e-6
            {
                int_ok += 1;
            }
        }
        println!("  integer-coordinate points: {}/{}", int_ok, pts_w.len());

        let points: Vec<DVector<f64>> = pts_w.iter().map(|o| o.vector.clone()).collect();
        let t1 = std::time::Instant::now();
        let hull = incremental_hull(&points, cfg.eps_geom).unwrap();
        println!("  hull: {} facets ({:?})", hull.facets.len(), t1.elapsed());
        let positive: Vec<usize> = (0..hull.facets.len())
            .filter(|&i| hull.facets[i].offset > 0.0)
            .collect();
        println!("  K>0 facets: {}", positive.len());

        let samples: Vec<DVector<f64>> = boundary_directions(&elements, &cfg)
            .into_iter()
            .map(|u| if u[2] >= 0.0 { u } else { -u })
            .collect();
        println!("  boundary samples: {}", samples.len());
        // Frontier radius: smallest orbit-point norm among full-length words.
        let frontier: Vec<f64> = pts_w
            .iter()
            .filter(|o| o.word.chars().count() == word_length)
            .map(|o| o.vector.norm())
            .collect();
        let r_used = frontier.iter().fold(f64::INFINITY, |a, &b| a.min(b)) * 0.9;
        println!("  r_used = {:.3}", r_used);
        let certs = stable_facets(&hull, &samples, r_used).unwrap();
        let stable: Vec<usize> = certs
            .iter()
            .filter(|c| c.stable)
            .map(|c| c.facet)
            .collect();
        println!("  certified facets: {}", stable.len());

        // Facet size histogram and slopes of a few certified facets.
        for &fi in stable.iter().take(5) {
            let f = &hull.facets[fi];
            let slopes: Vec<String> = f
                .vertices
                .iter()
                .map(|&vi| {
                    let o = &points[vi];
                    let (u, v, w) = (o[0], o[1], o[2]);
                    let p2 = ((w + u) / 2.0).max(0.0);
                    let q2 = ((w - u) / 2.0).max(0.0);
                    let p = p2.sqrt().round() as i64;
                    let q = q2.sqrt().round() as i64;
                    let sign = if v < 0.0 { -1 } else { 1 };
                    format!("{}/{}", sign * p, q)
                })
                .collect();
            println!("    facet {} vertices {:?} slopes {:?}", fi, f.vertices.len(), slopes);
        }
    }
}
