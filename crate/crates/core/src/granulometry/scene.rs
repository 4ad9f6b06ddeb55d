//! Grain scenes: sampling disjoint placements and rasterizing them.

use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, Gamma};

use super::image::BinaryImage;
use super::SizingModel;
use crate::{Error, Result};

/// Unit-area canonical shapes: an equilateral triangle with horizontal base
/// and apex up, and a vertical rod five times as tall as it is wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Triangle,
    Rod,
}

impl Primitive {
    pub fn index(self) -> usize {
        match self {
            Primitive::Triangle => 0,
            Primitive::Rod => 1,
        }
    }

    /// Width and height of the shape scaled to area `r^2`.
    pub fn extent(self, r: f64) -> (f64, f64) {
        match self {
            Primitive::Triangle => (2.0 * r / 3f64.powf(0.25), 3f64.powf(0.25) * r),
            Primitive::Rod => (r / 5f64.sqrt(), r * 5f64.sqrt()),
        }
    }
}

/// One grain; `radius` and the centroid `(cx, cy)` are in pixels, with `y`
/// growing downwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grain {
    pub primitive: Primitive,
    pub radius: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Grain {
    /// Pixel-aligned bounding box `(x0, y0, x1, y1)`, inclusive, clipped at 0.
    fn bbox(&self) -> (i64, i64, i64, i64) {
        let (w, h) = self.primitive.extent(self.radius);
        let (top, bottom) = match self.primitive {
            Primitive::Triangle => (self.cy - 2.0 * h / 3.0, self.cy + h / 3.0),
            Primitive::Rod => (self.cy - h / 2.0, self.cy + h / 2.0),
        };
        let x0 = (self.cx - w / 2.0 - 0.5).floor() as i64;
        let x1 = (self.cx + w / 2.0 - 0.5).ceil() as i64;
        (
            (x0),
            (top - 0.5).floor() as i64,
            x1,
            (bottom - 0.5).ceil() as i64,
        )
    }

    /// Whether the pixel centre `(px + 0.5, py + 0.5)` lies in the grain.
    pub fn contains(&self, px: i64, py: i64) -> bool {
        let x = px as f64 + 0.5;
        let y = py as f64 + 0.5;
        let (w, h) = self.primitive.extent(self.radius);
        match self.primitive {
            Primitive::Rod => (x - self.cx).abs() <= w / 2.0 && (y - self.cy).abs() <= h / 2.0,
            Primitive::Triangle => {
                let apex = self.cy - 2.0 * h / 3.0;
                let depth = y - apex;
                depth >= 0.0 && depth <= h && (x - self.cx).abs() <= w / 2.0 * depth / h
            }
        }
    }

    /// Pixels covered by the grain.
    pub fn pixels(&self) -> Vec<(i64, i64)> {
        let (x0, y0, x1, y1) = self.bbox();
        let mut out = Vec::new();
        for py in y0..=y1 {
            for px in x0..=x1 {
                if self.contains(px, py) {
                    out.push((px, py));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrainScene {
    pub width: usize,
    pub height: usize,
    pub grains: Vec<Grain>,
}

impl GrainScene {
    pub fn radii(&self, p: Primitive) -> Vec<f64> {
        self.grains
            .iter()
            .filter(|g| g.primitive == p)
            .map(|g| g.radius)
            .collect()
    }
}

/// Rasterizes a scene; grains that leave the image or share a pixel are errors.
pub fn render_scene(scene: &GrainScene) -> Result<BinaryImage> {
    let mut img = BinaryImage::new(scene.width, scene.height)?;
    for (i, g) in scene.grains.iter().enumerate() {
        for (px, py) in g.pixels() {
            if px < 0 || py < 0 || px >= scene.width as i64 || py >= scene.height as i64 {
                return Err(Error::invalid(format!("grain {i} leaves the image")));
            }
            let (x, y) = (px as usize, py as usize);
            if img.get(x, y) {
                return Err(Error::Overlap { x, y });
            }
            img.set(x, y, true);
        }
    }
    Ok(img)
}

/// Parameters of a random scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub n_grains: usize,
    /// Proportion of triangles; rods make up the rest.
    pub triangle_fraction: f64,
    pub sizing: SizingModel,
    pub width: usize,
    pub height: usize,
    /// Pixels per unit of radius.
    pub px_per_unit: f64,
    /// Radii below this many pixels are redrawn.
    pub min_radius_px: f64,
    pub max_attempts: usize,
}

impl SceneSpec {
    pub fn new(
        n_grains: usize,
        triangle_fraction: f64,
        sizing: SizingModel,
        width: usize,
        height: usize,
    ) -> Self {
        SceneSpec {
            n_grains,
            triangle_fraction,
            sizing,
            width,
            height,
            px_per_unit: 10.0,
            min_radius_px: 8.0,
            max_attempts: 10_000,
        }
    }
}

/// Grain counts for `n` grains with the given triangle fraction, rounded.
pub fn grain_counts(n: usize, triangle_fraction: f64) -> (usize, usize) {
    let n1 = ((n as f64) * triangle_fraction)
        .round()
        .clamp(0.0, n as f64) as usize;
    (n1, n - n1)
}

/// Draws radii (in units) for `n` grains of primitive `p`.
pub fn sample_radii(
    sizing: &SizingModel,
    p: Primitive,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    let g = Gamma::new(sizing.alpha[p.index()], sizing.beta)
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok((0..n).map(|_| g.sample(rng)).collect())
}

/// Samples a scene of disjoint grains separated by at least one background
/// pixel, placed largest first by rejection sampling.
pub fn sample_scene(spec: &SceneSpec, rng: &mut dyn RngCore) -> Result<GrainScene> {
    if !(0.0..=1.0).contains(&spec.triangle_fraction) {
        return Err(Error::invalid("triangle fraction must lie in [0, 1]"));
    }
    let gamma_of = |p: Primitive| Gamma::new(spec.sizing.alpha[p.index()], spec.sizing.beta);
    let (n1, n2) = grain_counts(spec.n_grains, spec.triangle_fraction);
    let mut todo = Vec::with_capacity(spec.n_grains);
    for (p, count) in [(Primitive::Triangle, n1), (Primitive::Rod, n2)] {
        let g = gamma_of(p).map_err(|e| Error::Domain(e.to_string()))?;
        for _ in 0..count {
            let mut r = g.sample(rng) * spec.px_per_unit;
            for _ in 0..1000 {
                if r >= spec.min_radius_px {
                    break;
                }
                r = g.sample(rng) * spec.px_per_unit;
            }
            todo.push((p, r.max(spec.min_radius_px)));
        }
    }
    todo.sort_by(|a, b| b.1.total_cmp(&a.1));

    let (w, h) = (spec.width as i64, spec.height as i64);
    let mut occupied = BinaryImage::new(spec.width, spec.height)?;
    let mut grains = Vec::with_capacity(todo.len());
    for (k, &(primitive, radius)) in todo.iter().enumerate() {
        let (gw, gh) = primitive.extent(radius);
        if gw + 2.0 >= spec.width as f64 || gh + 2.0 >= spec.height as f64 {
            return Err(Error::Packing {
                grain: k,
                attempts: 0,
            });
        }
        let mut placed = false;
        for _ in 0..spec.max_attempts {
            let cx = rng.random_range(gw / 2.0 + 1.0..spec.width as f64 - gw / 2.0 - 1.0);
            let cy = match primitive {
                Primitive::Triangle => {
                    rng.random_range(2.0 * gh / 3.0 + 1.0..spec.height as f64 - gh / 3.0 - 1.0)
                }
                Primitive::Rod => {
                    rng.random_range(gh / 2.0 + 1.0..spec.height as f64 - gh / 2.0 - 1.0)
                }
            };
            let g = Grain {
                primitive,
                radius,
                cx,
                cy,
            };
            let pixels = g.pixels();
            let free = pixels.iter().all(|&(px, py)| {
                (px - 1..=px + 1).all(|x| {
                    (py - 1..=py + 1).all(|y| {
                        x < 0 || y < 0 || x >= w || y >= h || !occupied.get(x as usize, y as usize)
                    })
                }) && px >= 0
                    && py >= 0
                    && px < w
                    && py < h
            });
            if free {
                for (px, py) in pixels {
                    occupied.set(px as usize, py as usize, true);
                }
                grains.push(g);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Packing {
                grain: k,
                attempts: spec.max_attempts,
            });
        }
    }
    Ok(GrainScene {
        width: spec.width,
        height: spec.height,
        grains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn rendered_area_is_radius_squared() {
        for p in [Primitive::Triangle, Primitive::Rod] {
            for r in [10.0, 25.0, 60.0] {
                let g = Grain {
                    primitive: p,
                    radius: r,
                    cx: 100.3,
                    cy: 110.7,
                };
                let scene = GrainScene {
                    width: 220,
                    height: 240,
                    grains: vec![g],
                };
                let area = render_scene(&scene).unwrap().area() as f64;
                // Boundary pixels decide the error: at most about one perimeter.
                let (w, h) = p.extent(r);
                assert!(
                    (area - r * r).abs() <= w + h + 1.0,
                    "{p:?} r={r} area={area}"
                );
                if r >= 40.0 {
                    assert!(
                        (area / (r * r) - 1.0).abs() < 0.03,
                        "{p:?} r={r} area={area}"
                    );
                }
            }
        }
    }

    #[test]
    fn empty_scene_and_overlap() {
        let empty = GrainScene {
            width: 10,
            height: 10,
            grains: vec![],
        };
        assert_eq!(render_scene(&empty).unwrap().area(), 0);
        let g = Grain {
            primitive: Primitive::Rod,
            radius: 10.0,
            cx: 20.0,
            cy: 20.0,
        };
        let twice = GrainScene {
            width: 50,
            height: 50,
            grains: vec![g, g],
        };
        assert!(matches!(render_scene(&twice), Err(Error::Overlap { .. })));
    }

    #[test]
    fn adjacent_grains_add_area() {
        let a = Grain {
            primitive: Primitive::Rod,
            radius: 10.0,
            cx: 10.0,
            cy: 20.0,
        };
        let b = Grain {
            primitive: Primitive::Rod,
            radius: 10.0,
            cx: 16.0,
            cy: 20.0,
        };
        let one = |g| {
            render_scene(&GrainScene {
                width: 40,
                height: 40,
                grains: vec![g],
            })
            .unwrap()
            .area()
        };
        let both = render_scene(&GrainScene {
            width: 40,
            height: 40,
            grains: vec![a, b],
        })
        .unwrap()
        .area();
        assert_eq!(both, one(a) + one(b));
    }

    #[test]
    fn sampled_scene_is_disjoint_and_reproducible() {
        let sizing = SizingModel::new([1.95, 1.97], 2.0).unwrap();
        let spec = SceneSpec::new(30, 1.0, sizing, 400, 400);
        let a = sample_scene(&spec, &mut seeded(4)).unwrap();
        assert!(a.grains.iter().all(|g| g.primitive == Primitive::Triangle));
        assert_eq!(a, sample_scene(&spec, &mut seeded(4)).unwrap());
        let img = render_scene(&a).unwrap();
        let total: usize = a.grains.iter().map(|g| g.pixels().len()).sum();
        assert_eq!(img.area() as usize, total);
    }

    #[test]
    fn packing_failure_is_reported() {
        let sizing = SizingModel::new([1.95, 1.97], 2.0).unwrap();
        let mut spec = SceneSpec::new(200, 0.5, sizing, 120, 120);
        spec.max_attempts = 50;
        assert!(matches!(
            sample_scene(&spec, &mut seeded(1)),
            Err(Error::Packing { .. })
        ));
    }
}
