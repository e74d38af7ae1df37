use crate::geometry::{voxelize_in, CsgSolid, KernelError};

/// Volumetric IoU on one grid spanning the padded union of both bounding
/// boxes. Returns 0 when the union is empty or both solids lack bounds.
pub fn iou(a: &CsgSolid, b: &CsgSolid, resolution: usize) -> Result<f64, KernelError> {
    let bounds = match (a.bounding_box(), b.bounding_box()) {
        (Some(x), Some(y)) => x.union(&y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => return Ok(0.0),
    };
    let bounds = bounds.padded_for_grid(resolution.max(crate::geometry::MIN_RESOLUTION));
    let ga = voxelize_in(a, &bounds, resolution)?;
    let gb = voxelize_in(b, &bounds, resolution)?;
    let (mut inter, mut uni) = (0usize, 0usize);
    for (&x, &y) in ga.cells().iter().zip(gb.cells()) {
        inter += (x && y) as usize;
        uni += (x || y) as usize;
    }
    Ok(if uni == 0 { 0.0 } else { inter as f64 / uni as f64 })
}
