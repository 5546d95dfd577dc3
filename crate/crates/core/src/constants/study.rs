//! Constants across a sequence of refined meshes.

use super::{
    derived_bounds, korn_constant_irrotational, korn_constant_standard, maxwell_constant, poincare_constant,
    ConstantsError, ConstantsOptions, KornMode,
};
use crate::hodge::HodgeContext;
use crate::mesh::{Mesh, TAG_T};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyLevel {
    pub level: usize,
    /// Longest edge.
    pub h: f64,
    pub c_p: f64,
    pub c_k_s: f64,
    pub c_k_irrot: f64,
    pub c_m_grad: f64,
    pub c_m_coexact: f64,
    pub c_m: f64,
    pub c_hat: Option<f64>,
    pub harmonic_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub levels: Vec<StudyLevel>,
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

impl StudyReport {
    fn column(&self, f: impl Fn(&StudyLevel) -> f64) -> Vec<f64> {
        self.levels.iter().map(f).collect()
    }

    /// Per constant, whether it is nondecreasing under refinement.
    pub fn monotonicity(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("c_p", nondecreasing(&self.column(|l| l.c_p))),
            ("c_k_s", nondecreasing(&self.column(|l| l.c_k_s))),
            ("c_k_irrot", nondecreasing(&self.column(|l| l.c_k_irrot))),
            ("c_m_coexact", nondecreasing(&self.column(|l| l.c_m_coexact))),
            ("c_m", nondecreasing(&self.column(|l| l.c_m))),
        ]
    }

    /// Whether the harmonic dimension is the same on every level.
    pub fn harmonic_dim_constant(&self) -> bool {
        self.levels.windows(2).all(|w| w[0].harmonic_dim == w[1].harmonic_dim)
    }

    /// One row per level, then `# nondecreasing <name>: <bool>` lines and
    /// `# constant harmonic_dim: <bool>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,h,c_p,c_k_s,c_k_irrot,c_m_grad,c_m_coexact,c_m,c_hat,harmonic_dim\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                l.level,
                l.h,
                l.c_p,
                l.c_k_s,
                l.c_k_irrot,
                l.c_m_grad,
                l.c_m_coexact,
                l.c_m,
                l.c_hat.map_or(String::new(), |c| format!("{c:.16e}")),
                l.harmonic_dim
            ));
        }
        for (name, ok) in self.monotonicity() {
            out.push_str(&format!("# nondecreasing {name}: {ok}\n"));
        }
        out.push_str(&format!("# constant harmonic_dim: {}\n", self.harmonic_dim_constant()));
        out
    }
}

fn longest_edge(mesh: &Mesh) -> f64 {
    let x = mesh.vertices();
    mesh.edges()
        .iter()
        .map(|&[a, b]| (0..3).map(|k| (x[b][k] - x[a][k]).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Constants on each mesh of a refinement sequence, coarsest first.
pub fn refinement_study(meshes: &[Mesh], opts: &ConstantsOptions) -> Result<StudyReport, ConstantsError> {
    let mut levels = Vec::with_capacity(meshes.len());
    for (level, mesh) in meshes.iter().enumerate() {
        let ctx = HodgeContext::new(mesh, Some(TAG_T), &opts.eig)?;
        let c_p = poincare_constant(mesh, opts)?.value;
        let c_k_s = korn_constant_standard(mesh, opts)?.record.value;
        let c_k_irrot = korn_constant_irrotational(mesh, &ctx, KornMode::Global, opts)?.value;
        let mx = maxwell_constant(mesh, &ctx, opts)?;
        levels.push(StudyLevel {
            level,
            h: longest_edge(mesh),
            c_p,
            c_k_s,
            c_k_irrot,
            c_m_grad: mx.grad.value,
            c_m_coexact: mx.coexact.value,
            c_m: mx.record.value,
            c_hat: derived_bounds(c_k_irrot, mx.record.value).ok().map(|b| b.0),
            harmonic_dim: ctx.harmonic.dim(),
        });
        log::info!("study level {level}: c_p = {c_p}, c_m_coexact = {}", mx.coexact.value);
    }
    Ok(StudyReport { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive};

    #[test]
    fn poincare_grows_under_refinement() {
        let meshes: Vec<Mesh> = [1, 2].iter().map(|&n| generate_primitive(Primitive::SlabMixed, n)).collect();
        let s = refinement_study(&meshes, &ConstantsOptions::default()).unwrap();
        assert_eq!(s.levels.len(), 2);
        assert!(s.levels[1].h < s.levels[0].h);
        let csv = s.to_csv();
        assert!(csv.lines().next().unwrap().starts_with("level,h,c_p"));
        assert!(csv.contains("# nondecreasing c_p: true"));
        assert!(csv.contains("# constant harmonic_dim: true"));
    }
}
