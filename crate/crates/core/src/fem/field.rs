use super::assembly::{l2_and_grad_sq, p1_gradient};
use crate::error::{Error, Result};
use crate::geometry::{fmt17, MeshDomain, Point};
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Potential,
    Corrector,
    GreenRemainder,
}

/// P1 nodal field on a mesh.
#[derive(Debug, Clone)]
pub struct FemField {
    pub mesh: Arc<MeshDomain>,
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl FemField {
    pub fn new(mesh: Arc<MeshDomain>, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite field value at node {i}")));
        }
        Ok(FemField { mesh, values, kind })
    }

    pub fn eval(&self, x: Point) -> Option<f64> {
        self.mesh.interpolate(&self.values, x)
    }

    pub fn gradient(&self, t: usize) -> [f64; 2] {
        let tri = self.mesh.triangles()[t];
        p1_gradient(self.mesh.triangle_points(t), [self.values[tri[0]], self.values[tri[1]], self.values[tri[2]]])
    }

    /// `field N` followed by one value per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("field {}\n", self.values.len());
        for v in &self.values {
            let _ = writeln!(s, "{}", fmt17(*v));
        }
        s
    }

    pub fn from_text(text: &str, mesh: Arc<MeshDomain>, kind: FieldKind) -> Result<Self> {
        let mut tokens = text.lines().filter(|l| !l.trim_start().starts_with('#')).flat_map(str::split_whitespace);
        if tokens.next() != Some("field") {
            return Err(Error::Parse("field file must start with `field`".into()));
        }
        let n: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("missing field length".into()))?;
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{t}`"))))
            .collect::<Result<_>>()?;
        if values.len() != n {
            return Err(Error::Parse(format!("expected {n} values, found {}", values.len())));
        }
        Self::new(mesh, values, kind)
    }

    /// `node_id,x,y,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node_id,x,y,value\n");
        for (i, (p, v)) in self.mesh.vertices().iter().zip(&self.values).enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*v));
        }
        s
    }
}

/// `√(∫ u² + |∇u|²)` over all triangles or a subset.
pub fn h1_norm(field: &FemField, region: Option<&[usize]>) -> f64 {
    let (m, k) = match region {
        Some(r) => l2_and_grad_sq(&field.mesh, &field.values, r.iter().copied()),
        None => l2_and_grad_sq(&field.mesh, &field.values, 0..field.mesh.n_triangles()),
    };
    (m + k).sqrt()
}

pub fn l2_norm(field: &FemField, region: Option<&[usize]>) -> f64 {
    let (m, _) = match region {
        Some(r) => l2_and_grad_sq(&field.mesh, &field.values, r.iter().copied()),
        None => l2_and_grad_sq(&field.mesh, &field.values, 0..field.mesh.n_triangles()),
    };
    m.sqrt()
}

/// `(∫ |∇u|^q)^{1/q}` over a triangle subset.
pub fn grad_lq_norm(field: &FemField, region: &[usize], q: f64) -> f64 {
    region
        .iter()
        .map(|&t| {
            let g = field.gradient(t);
            field.mesh.triangle_area(t) * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * q)
        })
        .sum::<f64>()
        .powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};

    fn square() -> Arc<MeshDomain> {
        Arc::new(generate_mesh(Shape::UnitSquare, 0.1, GammaSpec::square_top()).unwrap())
    }

    #[test]
    fn text_round_trip_ignores_header_lines() {
        let m = square();
        let vals: Vec<f64> = m.vertices().iter().map(|p| p[0].sin() + p[1] / 3.0).collect();
        let f = FemField::new(m.clone(), vals, FieldKind::Corrector).unwrap();
        let text = format!("# header\n{}", f.to_text());
        let back = FemField::from_text(&text, m, FieldKind::Corrector).unwrap();
        assert_eq!(back.values, f.values);
        assert!(f.to_csv().starts_with("node_id,x,y,value\n0,"));
    }

    #[test]
    fn rejects_bad_lengths_and_values() {
        let m = square();
        assert!(FemField::new(m.clone(), vec![0.0; 3], FieldKind::Potential).is_err());
        let mut v = vec![0.0; m.n_vertices()];
        v[2] = f64::NAN;
        assert!(FemField::new(m.clone(), v, FieldKind::Potential).is_err());
        assert!(FemField::from_text("field 2\n1\n", m, FieldKind::Potential).is_err());
    }

    #[test]
    fn norms_of_a_linear_field() {
        let m = square();
        let vals: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        let f = FemField::new(m.clone(), vals, FieldKind::Potential).unwrap();
        assert!((l2_norm(&f, None) - (1.0f64 / 3.0).sqrt()).abs() < 1e-3);
        assert!((h1_norm(&f, None) - (4.0f64 / 3.0).sqrt()).abs() < 1e-3);
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        assert!((grad_lq_norm(&f, &all, 3.0) - 1.0).abs() < 1e-12);
        assert!((f.eval([0.3, 0.7]).unwrap() - 0.3).abs() < 1e-12);
    }
}
