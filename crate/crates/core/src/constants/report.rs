//! The constants report and its JSON and CSV forms.

use super::certify::{run_certification, ChainConstants};
use super::{
    derived_bound_weighted, derived_bounds, direct_main_constant, korn_constant_irrotational, korn_constant_standard,
    korn_constant_tangential, korn_constant_weighted, maxwell_constant, poincare_constant, ConstantRecord,
    ConstantsError, ConstantsOptions, KornMode, CERTIFY_SLACK,
};
use crate::fem::MatrixCoefficient;
use crate::hodge::HodgeContext;
use crate::mesh::{Mesh, TAG_N, TAG_T};
use serde_json::{Map, Number, Value};
use std::collections::BTreeMap;

/// Slack of the ordering checks between constants.
const ORDER_SLACK: f64 = 1e-10;

/// What to compute besides the always-present constants.
#[derive(Debug, Clone, Default)]
pub struct ReportRequest {
    pub mesh_name: String,
    /// Human-readable description of how Γ_t was chosen.
    pub tags: String,
    pub direct: bool,
    /// Also compute the per-slice Korn constant when Γ_t = ∅.
    pub slices: bool,
    pub weighted: Option<MatrixCoefficient>,
    pub certify_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstantsReport {
    pub mesh_name: String,
    pub mesh_summary: BTreeMap<&'static str, usize>,
    pub tags: String,
    pub gamma_t_triangles: usize,
    pub gamma_n_triangles: usize,
    pub records: Vec<ConstantRecord>,
    /// Derived values and other scalars by key.
    pub values: BTreeMap<&'static str, Option<f64>>,
    pub harmonic_dim: Option<usize>,
    pub sym_kernel_dim: Option<usize>,
    pub verdicts: BTreeMap<String, bool>,
    pub margins: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// 17 significant digits, so the value round-trips.
pub fn format_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let s = if x == 0.0 { "0.0".to_string() } else { format!("{x:.16e}") };
    Value::Number(s.parse::<Number>().expect("formatted float parses as a JSON number"))
}

fn opt_number(x: Option<f64>) -> Value {
    x.map_or(Value::Null, format_number)
}

const KEYS: [&str; 12] = [
    "c_p",
    "c_k_s",
    "c_k_t",
    "c_k_irrot",
    "c_m",
    "c_m_grad",
    "c_m_coexact",
    "c_hat",
    "c_tilde",
    "c_direct",
    "c_F",
    "c_hat_F",
];

impl ConstantsReport {
    pub fn record(&self, name: &str) -> Option<&ConstantRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// A value by key, `None` when it was not computed.
    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied().flatten()
    }

    pub fn all_verdicts_hold(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }

    pub fn to_json_value(&self) -> Value {
        let mut root = Map::new();
        for key in KEYS {
            root.insert(key.into(), opt_number(self.value(key)));
        }
        for (k, v) in &self.values {
            root.entry(k.to_string()).or_insert_with(|| opt_number(*v));
        }
        root.insert("harmonic_dim".into(), self.harmonic_dim.map_or(Value::Null, Value::from));
        root.insert("sym_kernel_dim".into(), self.sym_kernel_dim.map_or(Value::Null, Value::from));
        let mut mesh = Map::new();
        mesh.insert("name".into(), Value::from(self.mesh_name.clone()));
        for (k, v) in &self.mesh_summary {
            mesh.insert(k.to_string(), Value::from(*v));
        }
        root.insert("mesh".into(), Value::Object(mesh));
        let mut tags = Map::new();
        tags.insert("selector".into(), Value::from(self.tags.clone()));
        tags.insert("gamma_t_triangles".into(), Value::from(self.gamma_t_triangles));
        tags.insert("gamma_n_triangles".into(), Value::from(self.gamma_n_triangles));
        root.insert("tags".into(), Value::Object(tags));
        let records = self
            .records
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("name".into(), Value::from(r.name.clone()));
                m.insert("value".into(), format_number(r.value));
                m.insert("eigenvalue".into(), format_number(r.eigenvalue));
                m.insert("residual".into(), format_number(r.residual));
                m.insert("dim".into(), Value::from(r.dim));
                m.insert("note".into(), r.note.clone().map_or(Value::Null, Value::from));
                Value::Object(m)
            })
            .collect();
        root.insert("records".into(), Value::Array(records));
        root.insert(
            "verdicts".into(),
            Value::Object(self.verdicts.iter().map(|(k, v)| (k.clone(), Value::Bool(*v))).collect()),
        );
        root.insert(
            "margins".into(),
            Value::Object(self.margins.iter().map(|(k, v)| (k.clone(), format_number(*v))).collect()),
        );
        root.insert("notes".into(), Value::from(self.notes.clone()));
        Value::Object(root)
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes");
        s.push('\n');
        s
    }

    /// `key,value,eigenvalue,residual,dim` rows: records first, then the
    /// derived values with empty eigenvalue columns, then verdicts.
    pub fn to_csv(&self) -> String {
        let num = |x: f64| if x.is_finite() { format!("{x:.16e}") } else { String::new() };
        let mut out = String::from("key,value,eigenvalue,residual,dim\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{},{}\n", r.name, num(r.value), num(r.eigenvalue), num(r.residual), r.dim));
        }
        for (k, v) in &self.values {
            if self.record(k).is_none() {
                out.push_str(&format!("{k},{},,,\n", v.map_or(String::new(), num)));
            }
        }
        for (k, v) in &self.verdicts {
            out.push_str(&format!("verdict:{k},{v},,,\n"));
        }
        out
    }
}

fn leq(a: f64, b: f64, slack: f64) -> bool {
    a <= b + slack * b.abs()
}

/// Computes every constant on one mesh with its stored tags.
pub fn compute_report(
    mesh: &Mesh,
    req: &ReportRequest,
    opts: &ConstantsOptions,
) -> Result<ConstantsReport, ConstantsError> {
    let mut rep = ConstantsReport {
        mesh_name: req.mesh_name.clone(),
        mesh_summary: mesh.summary(),
        tags: req.tags.clone(),
        gamma_t_triangles: mesh.btags().iter().filter(|&&t| t == TAG_T).count(),
        gamma_n_triangles: mesh.btags().iter().filter(|&&t| t == TAG_N).count(),
        ..Default::default()
    };
    let free = !mesh.has_tag(TAG_T);
    let ctx = HodgeContext::new(mesh, Some(TAG_T), &opts.eig)?;
    rep.harmonic_dim = Some(ctx.harmonic.dim());

    let c_p = poincare_constant(mesh, opts)?;
    let ks = korn_constant_standard(mesh, opts)?;
    rep.sym_kernel_dim = ks.sym_kernel_dim;
    if let Some(d) = ks.sym_kernel_dim {
        rep.verdicts.insert("sym_kernel_is_rigid_motions".into(), d == 6);
    }
    let kt = if free {
        rep.notes.push("c_k_t: undefined for empty Γ_t".into());
        None
    } else {
        Some(korn_constant_tangential(mesh, opts)?)
    };
    let kirr = korn_constant_irrotational(mesh, &ctx, KornMode::Global, opts)?;
    let kslices = if free && req.slices && mesh.num_slices() > 1 {
        Some(korn_constant_irrotational(mesh, &ctx, KornMode::PerSlice, opts)?)
    } else {
        None
    };
    let mx = maxwell_constant(mesh, &ctx, opts)?;

    let set = |rep: &mut ConstantsReport, k: &'static str, v: Option<f64>| {
        rep.values.insert(k, v);
    };
    set(&mut rep, "c_p", Some(c_p.value));
    set(&mut rep, "c_k_s", Some(ks.record.value));
    set(&mut rep, "c_k_t", kt.as_ref().map(|r| r.value));
    set(&mut rep, "c_k_irrot", Some(kirr.value));
    set(&mut rep, "c_m", Some(mx.record.value));
    set(&mut rep, "c_m_grad", Some(mx.grad.value));
    set(&mut rep, "c_m_coexact", Some(mx.coexact.value));
    rep.records.extend([c_p.clone(), ks.record.clone()]);
    rep.records.extend(kt.clone());
    rep.records.push(kirr.clone());
    if let Some(r) = &kslices {
        set(&mut rep, "c_k_irrot_slices", Some(r.value));
        rep.records.push(r.clone());
    }
    rep.records.extend([mx.grad.clone(), mx.coexact.clone(), mx.record.clone()]);
    for r in &rep.records {
        if let Some(n) = &r.note {
            rep.notes.push(format!("{}: {n}", r.name));
        }
    }

    let bounds = derived_bounds(kirr.value, mx.record.value);
    let (c_hat, c_tilde) = match &bounds {
        Ok((h, t)) => (Some(*h), Some(*t)),
        Err(e) => {
            rep.notes.push(format!("derived bounds: {e}"));
            (None, None)
        }
    };
    set(&mut rep, "c_hat", c_hat);
    set(&mut rep, "c_tilde", c_tilde);
    if let (Some(r), Ok(_)) = (&kslices, &bounds) {
        set(&mut rep, "c_tilde_slices", derived_bounds(r.value, mx.record.value).ok().map(|b| b.1));
    }

    if !free {
        if let (Some(kt), Some(h)) = (&kt, c_hat) {
            rep.verdicts.insert("c_k_s_le_c_k_t".into(), leq(ks.record.value, kt.value, ORDER_SLACK));
            rep.verdicts.insert("c_k_t_le_c_k_irrot".into(), leq(kt.value, kirr.value, ORDER_SLACK));
            rep.verdicts.insert("c_k_irrot_le_c_hat".into(), leq(kirr.value, h, ORDER_SLACK));
        }
        if rep.gamma_n_triangles == 0 {
            rep.verdicts.insert("c_k_s_le_sqrt2".into(), leq(ks.record.value, std::f64::consts::SQRT_2, ORDER_SLACK));
        }
    }
    if let (Some(h), Some(t)) = (c_hat, c_tilde) {
        rep.verdicts.insert("c_tilde_ge_c_hat".into(), t >= h);
    }

    if req.direct {
        match direct_main_constant(mesh, &ctx, opts) {
            Ok((rec, eq)) => {
                set(&mut rep, "c_direct", Some(rec.value));
                set(&mut rep, "h_curl_equivalence", Some(eq));
                if let Some(h) = c_hat {
                    set(&mut rep, "tightness", Some(rec.value / h));
                    rep.verdicts.insert("c_direct_le_c_hat".into(), leq(rec.value, h, CERTIFY_SLACK));
                }
                rep.records.push(rec);
            }
            Err(ConstantsError::Kernel { name, eigenvalue, dim }) => {
                set(&mut rep, "c_direct", None);
                rep.notes.push(format!("{name}: kernel of dimension {dim} not deflated (eigenvalue {eigenvalue:e})"));
                rep.verdicts.insert("c_direct_le_c_hat".into(), false);
            }
            Err(e) => return Err(e),
        }
    }

    if let Some(f) = &req.weighted {
        let w = korn_constant_weighted(mesh, &ctx, f, opts)?;
        set(&mut rep, "c_F", Some(w.c_f));
        set(&mut rep, "mu_observed", Some(w.mu_observed));
        set(&mut rep, "c_k_F", Some(w.record.value));
        set(&mut rep, "c_hat_F", derived_bound_weighted(w.record.value, mx.record.value, w.c_f).ok());
        rep.records.push(w.record);
    }

    if req.certify_samples > 0 && c_hat.is_some() {
        let consts = ChainConstants {
            c_k: kirr.value,
            c_m: mx.record.value,
            c_coexact: mx.coexact.value,
            c_k_slices: kslices.as_ref().map(|r| r.value),
        };
        let run = run_certification(mesh, &ctx, consts, req.certify_samples, req.seed, opts)?;
        rep.margins.extend(run.margins);
        rep.verdicts.insert("certify".into(), run.all_hold);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive};

    #[test]
    fn numbers_keep_17_digits() {
        let v = format_number(0.1);
        assert_eq!(v.to_string(), "1.0000000000000001e-1");
        assert_eq!(v.to_string().parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_number(f64::INFINITY), Value::Null);
    }

    #[test]
    fn empty_report_is_valid_json() {
        let s = ConstantsReport::default().to_json();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["records"], Value::Array(vec![]));
        assert_eq!(v["c_p"], Value::Null);
    }

    #[test]
    fn report_on_slab() {
        let m = generate_primitive(Primitive::SlabMixed, 1);
        let req = ReportRequest { direct: true, certify_samples: 3, ..Default::default() };
        let rep = compute_report(&m, &req, &ConstantsOptions::default()).unwrap();
        assert!(rep.all_verdicts_hold(), "{:?}", rep.verdicts);
        for r in &rep.records {
            assert!((r.value - 1.0 / r.eigenvalue.sqrt()).abs() <= 1e-14 * r.value, "{r:?}");
        }
        let v: Value = serde_json::from_str(&rep.to_json()).unwrap();
        for k in KEYS.iter().chain(&["harmonic_dim", "verdicts", "margins", "mesh", "tags", "records"]) {
            assert!(v.get(*k).is_some(), "missing {k}");
        }
        assert_eq!(rep.to_json(), compute_report(&m, &req, &ConstantsOptions::default()).unwrap().to_json());
        assert!(rep.to_csv().starts_with("key,value"));
    }
}
