//! Browser bindings. The computations live in [`api`], which is plain Rust
//! and tested natively; the exported functions return its results as JSON.

use wasm_bindgen::prelude::*;

pub mod api {
    use hj_inverse::catalog::{self, Role};
    use hj_inverse::envelope::semiconcave_envelope;
    use hj_inverse::inverse_set::Inversion;
    use hj_inverse::reachability::full_report;
    use hj_inverse::{hopflax, Grid, GridFn, Hamiltonian};
    use serde::Serialize;

    pub const MIN_RES: usize = 101;
    pub const MAX_RES: usize = 2001;
    pub const MAX_T: f64 = 2.0;

    #[derive(Debug, Serialize)]
    pub struct Series {
        pub name: String,
        pub values: Vec<f64>,
    }

    /// Curves sampled on a common set of abscissae, plus a short summary line.
    #[derive(Debug, Serialize)]
    pub struct Plot {
        pub x: Vec<f64>,
        pub series: Vec<Series>,
        /// Intervals to shade, e.g. where initial data are free.
        pub bands: Vec<(f64, f64)>,
        pub summary: String,
    }

    fn series(name: &str, f: &GridFn) -> Series {
        Series { name: name.into(), values: f.values().to_vec() }
    }

    fn check_args(t: f64, res: usize) -> Result<Grid, String> {
        if !(t > 0.0 && t <= MAX_T) {
            return Err(format!("T must lie in (0, {MAX_T}], got {t}"));
        }
        if !(MIN_RES..=MAX_RES).contains(&res) {
            return Err(format!("resolution must lie in [{MIN_RES}, {MAX_RES}], got {res}"));
        }
        Grid::line(-4.0, 4.0, res).map_err(|e| e.to_string())
    }

    fn one_dimensional(example: &str) -> Result<catalog::CatalogEntry, String> {
        let e = catalog::entry(example).map_err(|e| e.to_string())?;
        if e.spec.dimension != 1 {
            return Err(format!("{example} is two-dimensional; the page plots 1D examples only"));
        }
        Ok(e)
    }

    /// Forward or backward Hopf-Lax transform of a 1D example on `[-4, 4]`.
    pub fn transform(example: &str, backward: bool, t: f64, res: usize) -> Result<Plot, String> {
        let roi = check_args(t, res)?;
        let e = one_dimensional(example)?;
        let h = Hamiltonian::isotropic(1);
        let run = || -> hj_inverse::Result<Plot> {
            let pass = if backward { h.reflected() } else { h.clone() };
            let lip = e.spec.analytic_lipschitz();
            let u = e.spec.sample(&catalog::initial_grid_for(&pass, &roi, lip, t)?)?;
            let out = if backward { hopflax::backward(&h, &u, t)? } else { hopflax::forward(&h, &u, t)? };
            let out = out.restrict(&roi)?;
            let input = u.restrict(&roi)?;
            let label = if backward { "backward" } else { "forward" };
            Ok(Plot {
                x: (0..roi.len()).map(|k| roi.point(k)[0]).collect(),
                series: vec![series(example, &input), series(label, &out)],
                bands: vec![],
                summary: format!("{label} transform of {example} at T = {t}, range [{:.4}, {:.4}]", out.min(), out.max()),
            })
        };
        run().map_err(|e| e.to_string())
    }

    /// Target, backward-forward projection and semiconcave envelope.
    pub fn envelope(example: &str, t: f64, res: usize) -> Result<Plot, String> {
        let roi = check_args(t, res)?;
        let e = one_dimensional(example)?;
        if e.role != Role::Target {
            return Err(format!("{example} is an initial datum; choose u3 or u4"));
        }
        let h = Hamiltonian::isotropic(1);
        let run = || -> hj_inverse::Result<Plot> {
            let cells = hopflax::round_trip_cells(&h, &roi, e.spec.analytic_lipschitz(), t)?;
            let wide = roi.grow(&cells.iter().map(|&c| c as i64).collect::<Vec<_>>())?;
            let ut = e.spec.sample(&wide)?;
            let proj = hopflax::compose_project(&h, &ut, t)?.restrict(&roi)?;
            let env = semiconcave_envelope(&h, &ut, t)?.restrict(&roi)?;
            let report = full_report(&h, &ut, t)?;
            Ok(Plot {
                x: (0..roi.len()).map(|k| roi.point(k)[0]).collect(),
                series: vec![series(example, &ut.restrict(&roi)?), series("projection", &proj), series("envelope", &env)],
                bands: vec![],
                summary: format!(
                    "{example} at T = {t}: {:?}, fixed-point residual {:.3e}, projection and envelope differ by {:.1e}",
                    report.verdict,
                    report.fixedpoint_residual,
                    proj.sup_norm_diff(&env)?
                ),
            })
        };
        run().map_err(|e| e.to_string())
    }

    /// The first example pushed forward to `t`: target, minimal initial datum
    /// and the intervals where initial data may be raised freely.
    pub fn xset(t: f64, res: usize) -> Result<Plot, String> {
        let roi = check_args(t, res)?;
        let e = one_dimensional("u1")?;
        let h = Hamiltonian::isotropic(1);
        let run = || -> hj_inverse::Result<Plot> {
            let lip = e.spec.analytic_lipschitz();
            let cells = hopflax::round_trip_cells(&h, &roi, lip, t)?;
            let wide = roi.grow(&cells.iter().map(|&c| c as i64).collect::<Vec<_>>())?;
            let u0 = e.spec.sample(&catalog::initial_grid_for(&h, &wide, lip, t)?)?;
            let ut = hopflax::forward(&h, &u0, t)?.restrict(&wide)?;
            let inv = Inversion::new(&h, &ut, t)?;
            let mask = inv.xset_gradient(None)?;
            let bands = mask
                .complement_intervals()?
                .into_iter()
                .filter(|(a, b)| *b > roi.axis(0).lo() && *a < roi.axis(0).hi())
                .collect::<Vec<_>>();
            let pinned = GridFn::new(
                roi.clone(),
                (0..roi.len()).map(|k| if mask.at_lattice(roi.lattice_index(k)).unwrap_or(false) { 1.0 } else { 0.0 }).collect(),
            )?;
            let intervals: Vec<String> = bands.iter().map(|(a, b)| format!("({a:.3}, {b:.3})")).collect();
            Ok(Plot {
                x: (0..roi.len()).map(|k| roi.point(k)[0]).collect(),
                series: vec![
                    series("u1", &u0.restrict(&roi)?),
                    series("target", &ut.restrict(&roi)?),
                    series("minimal datum", &inv.minimal.restrict(&roi)?),
                    series("pinned", &pinned),
                ],
                summary: format!("T = {t}: initial data are free on {}", if intervals.is_empty() { "no interval".into() } else { intervals.join(" ∪ ") }),
                bands,
            })
        };
        run().map_err(|e| e.to_string())
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn forward_of_first_example_peaks_below_one() {
            let p = transform("u1", false, 0.5, 401).unwrap();
            assert_eq!(p.x.len(), 401);
            let out = &p.series[1].values;
            assert!(out.iter().cloned().fold(f64::MIN, f64::max) <= 1.0);
            let b = transform("u3", true, 1.0, 401).unwrap();
            assert_eq!(b.series[1].name, "backward");
        }

        #[test]
        fn envelope_values_at_known_points() {
            let p = envelope("u3", 1.0, 801).unwrap();
            let k = p.x.iter().position(|x| x.abs() < 1e-9).unwrap();
            assert!(p.series[2].values[k].abs() <= 0.02);
            assert!(p.summary.contains("NotReachable"));
            assert!(envelope("u1", 0.5, 801).is_err());
        }

        #[test]
        fn free_intervals_of_first_example() {
            let p = xset(0.5, 1001).unwrap();
            assert_eq!(p.bands.len(), 2);
            assert!((p.bands[1].0 - 0.5).abs() <= 0.024 && (p.bands[1].1 - 1.5).abs() <= 0.024);
        }

        #[test]
        fn bad_arguments_are_rejected() {
            assert!(transform("u1", false, 0.0, 401).is_err());
            assert!(transform("u1", false, 0.5, 5).is_err());
            assert!(transform("u2", false, 0.5, 401).is_err());
        }
    }
}

fn to_js(r: Result<api::Plot, String>) -> Result<String, JsError> {
    let plot = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&plot).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn transform_json(example: &str, backward: bool, t: f64, res: usize) -> Result<String, JsError> {
    to_js(api::transform(example, backward, t, res))
}

#[wasm_bindgen]
pub fn envelope_json(example: &str, t: f64, res: usize) -> Result<String, JsError> {
    to_js(api::envelope(example, t, res))
}

#[wasm_bindgen]
pub fn xset_json(t: f64, res: usize) -> Result<String, JsError> {
    to_js(api::xset(t, res))
}
