//! Browser bindings: supertile pictures, shifted two-adic distances and
//! sampled densities. The plain functions are usable from Rust as well.

use wasm_bindgen::prelude::*;

use delone::ergodic::{density_curve, WeightFunctionSpec};
use delone::geom::{Aabb, Isometry, Point, Q};
use delone::metrics::local_rubber_distance;
use delone::pointset::{realize, GeneratorSpec, TrigPoly};
use delone::render::{render_svg, Scene, Style};
use delone::subst::{builtin_rule, substitute_n, Tile};

/// σ^level of prototile 0 as SVG.
pub fn supertile(rule: &str, level: u32, width: f64) -> Result<String, String> {
    if level > 6 {
        return Err("level is capped at 6".into());
    }
    let r = builtin_rule(rule).map_err(|e| e.to_string())?;
    let tiles: Vec<Tile<f64>> = substitute_n(
        &r,
        &[Tile {
            proto: 0,
            g: Isometry::identity(),
        }],
        level,
    )
    .iter()
    .map(|t| Tile {
        proto: t.proto,
        g: t.g.to_f64(),
    })
    .collect();
    let rule = r.to_f64();
    Ok(render_svg(
        &Scene::Tiling {
            rule: &rule,
            tiles: &tiles,
        },
        &Style {
            width,
            ..Style::default()
        },
    ))
}

/// Exact d_LR(P, P + num/den) for the two-adic set P realized on [-half, half].
pub fn twoadic_shift_distance(num: i64, den: i64, half: i64) -> Result<f64, String> {
    if den <= 0 || half <= 0 {
        return Err("den and half must be positive".into());
    }
    let h = Q::from_integer(half as i128);
    let p = realize(&GeneratorSpec::TwoAdic, &Aabb::interval(-h, h)).map_err(|e| e.to_string())?;
    let q = p.translate(Point::on_line(Q::new(num as i128, den as i128)));
    Ok(local_rubber_distance(&p, &q).value)
}

/// Density bounds of a smoothed count as CSV, for `z`, `twoadic`, `bohr` or `defect`.
pub fn density(set: &str, half: f64, us: &[f64], seed: u64) -> Result<String, String> {
    let spec = match set {
        "z" => GeneratorSpec::IntegerLattice { dim: 1 },
        "twoadic" => GeneratorSpec::TwoAdic,
        "bohr" => GeneratorSpec::BohrModulated { f: TrigPoly::golden() },
        "defect" => GeneratorSpec::HalfLineDefect,
        other => return Err(format!("unknown set {other}")),
    };
    let p = realize(&spec, &Aabb::interval(-half, half)).map_err(|e| e.to_string())?;
    let f = WeightFunctionSpec::SmoothedCount { w: 0.25, b: 0.2 };
    Ok(density_curve(&f, &p, us, 16, seed).map_err(|e| e.to_string())?.to_csv())
}

#[wasm_bindgen(js_name = supertileSvg)]
pub fn supertile_svg(rule: &str, level: u32, width: f64) -> Result<String, JsError> {
    supertile(rule, level, width).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = twoadicShiftDistance)]
pub fn twoadic_shift_distance_js(num: i32, den: i32, half: i32) -> Result<f64, JsError> {
    twoadic_shift_distance(num.into(), den.into(), half.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = densityCsv)]
pub fn density_csv(set: &str, half: f64, us: Vec<f64>, seed: u32) -> Result<String, JsError> {
    density(set, half, &us, seed.into()).map_err(|e| JsError::new(&e))
}
