//! One function per subcommand. Each returns whether every verdict held.

use crate::{
    CertifyArgs, ConstantsArgs, DecomposeArgs, Failure, Format, GenArgs, HarmonicsArgs, IdentitiesArgs, MeshArgs,
    OutputArgs, SolverArgs, StudyArgs,
};
use kornlab::constants::{
    chain_constants, compute_report, derived_bounds, format_number, matrix_coefficient_norm, refinement_study,
    run_certification, weighted_quad_order, ConstantsOptions, ReportRequest,
};
use kornlab::hodge::HodgeContext;
use kornlab::identities::{run_identity_suite, SuiteOptions};
use kornlab::linalg::EigOptions;
use kornlab::mesh::{
    boundary_components, format_mesh, generate_primitive, read_mesh, refine_uniform, Mesh, TagSelector, TAG_N, TAG_T,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::path::Path;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn options(s: &SolverArgs) -> ConstantsOptions {
    let mut eig = EigOptions::default();
    if let Some(t) = s.eig_tol {
        eig.tol = t;
    }
    ConstantsOptions { eig, quad_order: s.quad_order }
}

/// The mesh with the selected tags and a name for reports.
fn load(args: &MeshArgs) -> Result<(Mesh, String), Failure> {
    let (mesh, name) = match (&args.mesh, args.primitive) {
        (Some(path), _) => (read_mesh(path)?, path.display().to_string()),
        (None, Some(p)) => {
            if args.n == 0 {
                return Err(Failure::usage("--n must be positive"));
            }
            (generate_primitive(p, args.n), format!("{}_n{}", p.name(), args.n))
        }
        (None, None) => return Err(Failure::usage("either --mesh or --primitive is required")),
    };
    Ok((args.gamma_t.apply(&mesh)?, name))
}

fn tags_label(args: &MeshArgs) -> String {
    match &args.gamma_t {
        TagSelector::Keep => "keep".into(),
        TagSelector::All => "all".into(),
        TagSelector::None => "none".into(),
        TagSelector::Complement => "complement".into(),
        TagSelector::Faces(planes) => {
            let items: Vec<String> = planes.iter().map(|(axis, v)| format!("{}={v}", ["x", "y", "z"][*axis])).collect();
            format!("faces {}", items.join(","))
        }
        TagSelector::File(p) => format!("file {}", p.display()),
    }
}

fn format_of(o: &OutputArgs, default: Format) -> Format {
    o.format.unwrap_or(default)
}

pub fn gen(a: GenArgs) -> Result<bool, Failure> {
    if a.n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    let mut mesh = generate_primitive(a.primitive, a.n);
    for _ in 0..a.refine {
        mesh = refine_uniform(&mesh);
    }
    let mesh = a.gamma_t.apply(&mesh)?;
    emit(a.out.as_deref(), &format_mesh(&mesh))?;
    Ok(true)
}

pub fn validate(a: MeshArgs) -> Result<bool, Failure> {
    let (mesh, name) = load(&a)?;
    let summary: Map<String, Value> = mesh.summary().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let v = json!({
        "mesh": name,
        "valid": true,
        "summary": summary,
        "gamma_t_triangles": mesh.btags().iter().filter(|&&t| t == TAG_T).count(),
        "gamma_n_triangles": mesh.btags().iter().filter(|&&t| t == TAG_N).count(),
        "gamma_t_components": boundary_components(&mesh, TAG_T).count,
        "gamma_n_components": boundary_components(&mesh, TAG_N).count,
        "volume": format_number(mesh.total_volume()),
        "warnings": mesh.warnings(),
    });
    emit(None, &to_json_text(&v))?;
    Ok(true)
}

pub fn constants(a: ConstantsArgs) -> Result<bool, Failure> {
    let (mesh, name) = load(&a.mesh)?;
    let opts = options(&a.solver);
    if let Some(f) = &a.coefficient {
        matrix_coefficient_norm(&mesh, f, weighted_quad_order(f, opts.quad_order))?;
    }
    let req = ReportRequest {
        mesh_name: name,
        tags: tags_label(&a.mesh),
        direct: a.direct,
        slices: a.slices,
        weighted: a.coefficient.clone(),
        certify_samples: a.samples,
        seed: a.seed,
    };
    let rep = compute_report(&mesh, &req, &opts)?;
    let text = match format_of(&a.output, Format::Json) {
        Format::Json => rep.to_json(),
        Format::Csv => rep.to_csv(),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(rep.all_verdicts_hold())
}

pub fn harmonics(a: HarmonicsArgs) -> Result<bool, Failure> {
    let (mesh, name) = load(&a.mesh)?;
    let opts = options(&a.solver);
    let ctx = HodgeContext::new(&mesh, Some(TAG_T), &opts.eig)?;
    let h = &ctx.harmonic;
    let text = match format_of(&a.output, Format::Json) {
        Format::Json => to_json_text(&json!({
            "mesh": name,
            "tags": tags_label(&a.mesh),
            "harmonic_dim": h.dim(),
            "curl_residual": format_number(h.curl_residual),
            "gradient_residual": format_number(h.gradient_residual),
        })),
        Format::Csv => {
            let mut s = String::from("dof");
            for l in 0..h.dim() {
                s.push_str(&format!(",d{l}"));
            }
            s.push('\n');
            for i in 0..h.fields.nrows() {
                s.push_str(&i.to_string());
                for l in 0..h.dim() {
                    s.push_str(&format!(",{:.16e}", h.fields[(i, l)]));
                }
                s.push('\n');
            }
            s
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(true)
}

fn read_field(source: &str, n: usize, seed: u64) -> Result<Vec<f64>, Failure> {
    if source == "random" {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let path = source.strip_prefix("file").map(|p| p.trim_start_matches([' ', ':', '=']).trim()).unwrap_or(source);
    let text = std::fs::read_to_string(path)?;
    let v: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse).collect();
    let v = v.map_err(|_| Failure::validation(format!("{path}: expected whitespace-separated numbers")))?;
    if v.len() != n {
        return Err(Failure::validation(format!("{path}: expected {n} values, got {}", v.len())));
    }
    Ok(v)
}

pub fn decompose(a: DecomposeArgs) -> Result<bool, Failure> {
    let (mesh, name) = load(&a.mesh)?;
    let opts = options(&a.solver);
    let ctx = HodgeContext::new(&mesh, Some(TAG_T), &opts.eig)?;
    let v = read_field(&a.field, ctx.edge.num_free(), a.seed)?;
    let split = ctx.split(&v)?;
    let norm = |x: &[f64]| format_number(ctx.mass.quad_form(x).max(0.0).sqrt());
    let sum_residual = v
        .iter()
        .enumerate()
        .map(|(i, x)| (x - split.grad_part[i] - split.harmonic_part[i] - split.coexact_part[i]).abs())
        .fold(0.0, f64::max);
    let orthogonal = split.orthogonality.iter().all(|&o| o <= 1e-10);
    let text = match format_of(&a.output, Format::Json) {
        Format::Json => to_json_text(&json!({
            "mesh": name,
            "tags": tags_label(&a.mesh),
            "dofs": v.len(),
            "harmonic_dim": ctx.harmonic.dim(),
            "norms": {
                "field": norm(&v),
                "grad": norm(&split.grad_part),
                "harmonic": norm(&split.harmonic_part),
                "coexact": norm(&split.coexact_part),
            },
            "orthogonality": {
                "grad_harmonic": format_number(split.orthogonality[0]),
                "grad_coexact": format_number(split.orthogonality[1]),
                "harmonic_coexact": format_number(split.orthogonality[2]),
            },
            "sum_residual": format_number(sum_residual),
            "verdicts": { "orthogonal": orthogonal },
        })),
        Format::Csv => split.to_csv(),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(orthogonal)
}

pub fn certify(a: CertifyArgs) -> Result<bool, Failure> {
    let (mesh, name) = load(&a.mesh)?;
    let opts = options(&a.solver);
    let ctx = HodgeContext::new(&mesh, Some(TAG_T), &opts.eig)?;
    let consts = chain_constants(&mesh, &ctx, true, &opts)?;
    let (c_hat, c_tilde) = derived_bounds(consts.c_k, consts.c_m)?;
    let run = run_certification(&mesh, &ctx, consts, a.samples, a.seed, &opts)?;
    let text = match format_of(&a.output, Format::Json) {
        Format::Json => {
            let certs: Vec<Value> = run
                .certificates
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let links: Map<String, Value> =
                        c.links.iter().map(|l| (l.name.to_string(), format_number(l.margin))).collect();
                    json!({
                        "index": i,
                        "verdict": c.verdict,
                        "min_margin": format_number(c.min_margin()),
                        "violated": c.violated,
                        "margins": links,
                    })
                })
                .collect();
            let margins: Map<String, Value> = run.margins.iter().map(|(k, v)| (k.clone(), format_number(*v))).collect();
            to_json_text(&json!({
                "mesh": name,
                "tags": tags_label(&a.mesh),
                "samples": a.samples,
                "seed": a.seed,
                "c_k_irrot": format_number(consts.c_k),
                "c_k_irrot_slices": consts.c_k_slices.map_or(Value::Null, format_number),
                "c_m": format_number(consts.c_m),
                "c_m_coexact": format_number(consts.c_coexact),
                "c_hat": format_number(c_hat),
                "c_tilde": format_number(c_tilde),
                "certificates": certs,
                "margins": margins,
                "verdicts": { "certify": run.all_hold },
            }))
        }
        Format::Csv => {
            let mut s = String::from("sample,verdict,min_margin,violated\n");
            for (i, c) in run.certificates.iter().enumerate() {
                s.push_str(&format!("{i},{},{:.16e},{}\n", c.verdict, c.min_margin(), c.violated.unwrap_or("")));
            }
            s
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(run.all_hold)
}

pub fn identities(a: IdentitiesArgs) -> Result<bool, Failure> {
    let suite = run_identity_suite(&SuiteOptions {
        fields: a.fields,
        max_degree: a.max_degree,
        alphas: a.alphas,
        seed: a.seed,
    });
    emit(a.out.as_deref(), &suite.to_csv())?;
    Ok(suite.all_pass())
}

pub fn study(a: StudyArgs) -> Result<bool, Failure> {
    let meshes: Vec<Mesh> = match (&a.mesh, a.primitive) {
        (Some(path), _) => {
            if a.refinements < 1 {
                return Err(Failure::usage("a study needs at least two levels (--refinements ≥ 1)"));
            }
            let mut m = a.gamma_t.apply(&read_mesh(path)?)?;
            let mut out = vec![m.clone()];
            for _ in 0..a.refinements {
                m = refine_uniform(&m);
                out.push(m.clone());
            }
            out
        }
        (None, Some(p)) => {
            if a.levels.len() < 2 || a.levels.contains(&0) {
                return Err(Failure::usage("a study needs at least two positive --levels"));
            }
            let meshes: Result<Vec<Mesh>, _> =
                a.levels.iter().map(|&n| a.gamma_t.apply(&generate_primitive(p, n))).collect();
            meshes?
        }
        (None, None) => return Err(Failure::usage("either --mesh or --primitive is required")),
    };
    let report = refinement_study(&meshes, &options(&a.solver))?;
    emit(a.out.as_deref(), &report.to_csv())?;
    Ok(true)
}
