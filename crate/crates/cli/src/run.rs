//! Subcommand dispatch: builds the model objects from a [`RunConfig`], runs
//! one operation and collects the files it produces.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;

use sfwm_core::constants::omega_from_wavelength;
use sfwm_core::design::{design_report, phasematch_solve, DesignOverrides, TransitionTarget};
use sfwm_core::dispersion::{Fiber, FiberSpec};
use sfwm_core::error::Error;
use sfwm_core::flux::{
    flux_cw, flux_pulsed, flux_ratio_sweep, geom_model, FluxOptions, FluxResult, GeomConfig, GeomModelInputs,
};
use sfwm_core::grid::{fmt_f64, Axis, Grid};
use sfwm_core::spectral::{
    intensity_fwhm_factor, jsa, jsi, mode_spacing, mode_width, resonance_spacing, CavitySpec, FilterSpec,
    JsaQuadrature, Mirror, Mode, PumpSpec, SpectralOutput,
};
use sfwm_core::temporal::{
    jta_numeric, jti_closed_form_grid, mode_amplitudes, rotate_to_sum_diff, round_trip_time,
    time_difference_marginal, ClosedFormParams,
};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, DispersionMode, FilterSection, RunConfig};

pub const SUBCOMMANDS: [&str; 11] = [
    "jsi", "jta", "jti", "jti-closed", "marginal", "modes", "flux", "cw-flux", "flux-sweep", "geom", "design",
];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: {error}")]
    Core { stage: &'static str, error: Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 2,
            RunError::Core { error, .. } => match error {
                Error::Domain { .. } | Error::Contract(_) => 2,
                Error::Numerical { .. } | Error::ModeCutoff { .. } => 3,
                Error::Infeasible(_) => 4,
            },
            RunError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "numerical",
            4 => "infeasible",
            _ => "io",
        }
    }

    /// Single-line, machine-readable form written to stderr.
    pub fn error_line(&self, subcommand: &str) -> String {
        format!(
            "error kind={} exit={} subcommand={subcommand} message={:?}",
            self.kind(),
            self.exit_code(),
            self.to_string()
        )
    }
}

fn at(stage: &'static str) -> impl Fn(Error) -> RunError {
    move |error| RunError::Core { stage, error }
}

type Result<T> = std::result::Result<T, RunError>;

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub diagnostics: Vec<(String, String)>,
}

impl Outcome {
    fn file(&mut self, name: &str, body: String) {
        self.artifacts.push(Artifact { name: name.into(), body });
    }

    fn diag(&mut self, key: &str, value: impl ToString) {
        self.diagnostics.push((key.into(), value.to_string()));
    }

    fn num(&mut self, key: &str, value: f64) {
        self.diag(key, fmt_f64(value));
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    format!("{:x}", Sha256::digest(config.to_ini().as_bytes()))
}

struct Context<'a> {
    cfg: &'a RunConfig,
    fiber: Fiber,
    pump: PumpSpec,
    center_s: f64,
    center_i: f64,
    cavity: CavitySpec,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig, out: &mut Outcome) -> Result<Self> {
        let f = &cfg.fiber;
        let spec = FiberSpec::new(f.core_radius_m, f.air_fill_fraction, f.length_m, f.gamma)
            .map(|s| s.with_gamma(f.gamma, f.gamma_fwm).with_model(f.cladding, f.mode_equation))
            .map_err(at("fiber"))?;
        let fiber = match f.dispersion {
            DispersionMode::Tabulated => Fiber::tabulated(spec),
            DispersionMode::Exact => Fiber::exact(spec),
        }
        .map_err(at("fiber"))?;

        let p = &cfg.pump;
        let omega0 = omega_from_wavelength(p.wavelength_m);
        let pump = match p.peak_power_w {
            Some(peak) => PumpSpec::new(
                omega0,
                p.sigma_i / intensity_fwhm_factor(),
                peak,
                p.avg_power_w,
                p.rep_rate_hz,
            ),
            None => PumpSpec::pulsed(omega0, p.sigma_i, p.avg_power_w, p.rep_rate_hz),
        }
        .map_err(at("pump"))?;
        out.num("pump.omega0_rad_per_s", pump.omega0);
        out.num("pump.peak_power_W", pump.peak_power);

        let g = &cfg.grid;
        let (center_s, center_i) = match (g.center_s, g.center_i) {
            (Some(s), Some(i)) => (s, i),
            (Some(s), None) => (s, 2.0 * omega0 - s),
            (None, Some(i)) => (2.0 * omega0 - i, i),
            (None, None) => {
                let pair = phasematch_solve(&fiber, &pump).map_err(at("phasematch"))?;
                out.num("phasematch.residual_rad_per_m", pair.residual);
                (pair.omega_s, pair.omega_i)
            }
        };
        out.num("center_s_rad_per_s", center_s);
        out.num("center_i_rad_per_s", center_i);

        let c = &cfg.cavity;
        let mirror = |r2: f64, t2: Option<f64>, phases: (f64, f64)| Mirror {
            r2_mag: r2,
            t2_mag: t2.unwrap_or((1.0 - r2 * r2).sqrt()),
            delta1: phases.0,
            delta2: phases.1,
        };
        let mut cavity = CavitySpec::new(
            c.resonant_s.then(|| mirror(c.r2_s, c.t2_s, c.phases_s)),
            c.resonant_i.then(|| mirror(c.r2_i, c.t2_i, c.phases_i)),
            c.topology,
        )
        .map_err(at("cavity"))?;
        if c.tune {
            cavity = cavity.tuned(&fiber, center_s, center_i).map_err(at("cavity"))?;
        }
        out.diag("configuration", cavity.configuration().label());

        Ok(Self {
            cfg,
            fiber,
            pump,
            center_s,
            center_i,
            cavity,
        })
    }

    fn topology(&self) -> sfwm_core::spectral::Topology {
        self.cfg.cavity.topology
    }

    fn filter(&self) -> Result<Option<FilterSpec>> {
        let f = match &self.cfg.filter {
            None => return Ok(None),
            Some(FilterSection::Modes(n)) => {
                FilterSpec::around_modes(&self.fiber, self.topology(), self.center_s, self.center_i, *n)
            }
            Some(FilterSection::Widths { width_s, width_i }) => {
                FilterSpec::new(self.center_s, self.center_i, *width_s, *width_i)
            }
        };
        f.map(Some).map_err(at("filter"))
    }

    /// The configured filter, or one resonance spacing around each centre.
    fn flux_filter(&self, out: &mut Outcome) -> Result<FilterSpec> {
        match self.filter()? {
            Some(f) => Ok(f),
            None => {
                out.diag("filter", "single-mode default");
                FilterSpec::around_modes(&self.fiber, self.topology(), self.center_s, self.center_i, 1)
                    .map_err(at("filter"))
            }
        }
    }

    /// Equal-step axes around the centres covering the larger span.
    fn axes(&self, filter: Option<&FilterSpec>, out: &mut Outcome) -> Result<(Axis, Axis)> {
        let g = &self.cfg.grid;
        let span = |given: Option<f64>, width: Option<f64>, center: f64| -> Result<f64> {
            match given.or(width) {
                Some(s) => Ok(s),
                None => Ok(5.0 * resonance_spacing(&self.fiber, self.topology(), center).map_err(at("grid"))?),
            }
        };
        let span_s = span(g.span_s, filter.map(|f| f.width_s), self.center_s)?;
        let span_i = span(g.span_i, filter.map(|f| f.width_i), self.center_i)?;
        let step = span_s.max(span_i) / (g.points - 1) as f64;
        out.num("grid.step_rad_per_s", step);
        let axis_s = Axis::centered(self.center_s, step, g.points).map_err(at("grid"))?;
        let axis_i = Axis::centered(self.center_i, step, g.points).map_err(at("grid"))?;
        Ok((axis_s, axis_i))
    }

    fn jsa_quadrature(&self) -> JsaQuadrature {
        JsaQuadrature {
            nodes: self.cfg.grid.jsa_nodes,
            half_width: self.cfg.grid.jsa_half_width,
        }
    }

    fn flux_options(&self) -> FluxOptions {
        let f = &self.cfg.flux;
        FluxOptions {
            jsa: JsaQuadrature {
                nodes: f.jsa_nodes,
                half_width: self.cfg.grid.jsa_half_width,
            },
            nodes_per_panel: f.nodes_per_panel,
            ladder_factor: f.ladder_factor,
            rel_tol: f.rel_tol,
            max_doublings: f.max_doublings,
        }
    }

    /// The resonant mode used for widths (signal first) and its centre.
    fn resonant_mode(&self) -> Option<(Mode, f64)> {
        if self.cavity.resonant_s {
            Some((Mode::Signal, self.center_s))
        } else if self.cavity.resonant_i {
            Some((Mode::Idler, self.center_i))
        } else {
            None
        }
    }

    fn spectral_amplitude(&self, out: &mut Outcome) -> Result<SpectralOutput<Complex64>> {
        let filter = self.filter()?;
        let (axis_s, axis_i) = self.axes(filter.as_ref(), out)?;
        let g = jsa(
            axis_s,
            axis_i,
            &self.fiber,
            &self.pump,
            &self.cavity,
            filter.as_ref(),
            self.jsa_quadrature(),
        )
        .map_err(at("jsa"))?;
        out.num("jsa.relative_change", g.quadrature.relative_change);
        out.diag("jsa.converged", g.quadrature.converged);
        Ok(g)
    }

    fn jti(&self, out: &mut Outcome) -> Result<Grid<f64>> {
        let g = self.spectral_amplitude(out)?;
        let jta = jta_numeric(&g.grid, self.cfg.grid.pad_factor).map_err(at("jta"))?;
        out.num("time.step_s", jta.axis_0.step());
        Ok(jta.intensity())
    }
}

/// Keeps |t| ≤ `window` on both axes.
fn crop<T: Clone>(grid: &Grid<T>, window: Option<f64>) -> Result<Grid<T>> {
    let Some(w) = window else {
        return Ok(grid.clone());
    };
    let range = |a: &Axis| {
        let idx: Vec<usize> = (0..a.len()).filter(|&i| a.value(i).abs() <= w).collect();
        (idx.first().copied(), idx.last().copied())
    };
    let (Some(i0), Some(i1)) = range(&grid.axis_0) else {
        return Err(RunError::Usage(format!("temporal.window_s = {w:e} s selects no samples")));
    };
    let (Some(j0), Some(j1)) = range(&grid.axis_1) else {
        return Err(RunError::Usage(format!("temporal.window_s = {w:e} s selects no samples")));
    };
    let axis = |a: &Axis, lo: usize, hi: usize| Axis::from_step(a.value(lo), a.step(), hi - lo + 1);
    let values = grid.values.slice(ndarray::s![i0..=i1, j0..=j1]).to_owned();
    Grid::new(
        axis(&grid.axis_0, i0, i1).map_err(at("crop"))?,
        axis(&grid.axis_1, j0, j1).map_err(at("crop"))?,
        values,
    )
    .map_err(at("crop"))
}

fn flux_report(r: &FluxResult, out: &mut Outcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rate_pairs_per_s={}", fmt_f64(r.rate));
    let _ = writeln!(s, "rate_nc_pairs_per_s={}", fmt_f64(r.reference_rate_nc));
    let _ = writeln!(s, "ratio={}", fmt_f64(r.ratio));
    let q = &r.quadrature;
    out.num("quadrature.window_s_lo_rad_per_s", q.window_s.0);
    out.num("quadrature.window_s_hi_rad_per_s", q.window_s.1);
    out.num("quadrature.window_i_lo_rad_per_s", q.window_i.0);
    out.num("quadrature.window_i_hi_rad_per_s", q.window_i.1);
    out.diag("quadrature.outer_panels", q.outer_panels);
    out.diag("quadrature.inner_panels", q.inner_panels);
    out.diag("quadrature.nodes_per_panel", q.nodes_per_panel);
    out.diag("quadrature.jsa_nodes", q.jsa_nodes);
    out.num("quadrature.jsa_relative_change", q.jsa_relative_change);
    out.diag("quadrature.doublings", q.doublings);
    out.num("quadrature.relative_change", q.relative_change);
    out.num("quadrature.relative_change_nc", q.relative_change_nc);
    out.diag("quadrature.evaluations", q.evaluations);
    s
}

/// Runs `name` and returns the files to write; nothing touches the disk.
pub fn run_subcommand(name: &str, cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let ctx = Context::new(cfg, &mut out)?;
    let window = cfg.temporal.window_s;
    match name {
        "jsi" => {
            let filter = ctx.filter()?;
            let (axis_s, axis_i) = ctx.axes(filter.as_ref(), &mut out)?;
            let s = jsi(
                axis_s,
                axis_i,
                &ctx.fiber,
                &ctx.pump,
                &ctx.cavity,
                filter.as_ref(),
                ctx.jsa_quadrature(),
            )
            .map_err(at("jsi"))?;
            out.num("jsa.relative_change", s.quadrature.relative_change);
            out.diag("jsa.converged", s.quadrature.converged);
            out.diag("filtered", s.filtered);
            out.file("jsi.csv", s.grid.to_csv(["omega_s_rad_per_s", "omega_i_rad_per_s"]));
        }
        "jta" => {
            let g = ctx.spectral_amplitude(&mut out)?;
            let jta = jta_numeric(&g.grid, cfg.grid.pad_factor).map_err(at("jta"))?;
            out.num("time.step_s", jta.axis_0.step());
            out.file("jta.csv", crop(&jta, window)?.to_csv(["t_s_s", "t_i_s"]));
        }
        "jti" => {
            let jti = ctx.jti(&mut out)?;
            let rotated = rotate_to_sum_diff(&jti).map_err(at("rotate"))?;
            out.file("jti.csv", crop(&jti, window)?.to_csv(["t_s_s", "t_i_s"]));
            out.file("jti_rotated.csv", crop(&rotated, window)?.to_csv(["t_plus_s", "t_minus_s"]));
        }
        "jti-closed" => {
            let Some((mode, center)) = ctx.resonant_mode() else {
                return Err(RunError::Usage("jti-closed needs a resonant mode in [cavity]".into()));
            };
            let width = mode_width(&ctx.fiber, &ctx.cavity, mode, center).map_err(at("mode_width"))?;
            let spacing = mode_spacing(&ctx.fiber, ctx.topology(), center).map_err(at("mode_spacing"))?;
            let p = ClosedFormParams::new(width, spacing, ctx.pump.sigma, cfg.temporal.closed_form_m)
                .map_err(at("jti_closed"))?;
            let span = cfg.temporal.time_span_s.unwrap_or(8.0 * PI / spacing);
            let n = cfg.temporal.time_points;
            let axis = Axis::centered(0.0, span / (n - 1) as f64, n).map_err(at("jti_closed"))?;
            out.num("delta_omega_rad_per_s", width);
            out.num("Delta_omega_rad_per_s", spacing);
            out.num("tau_c_s", p.tau_c());
            out.num("tau_s", p.tau());
            out.file(
                "jti_closed.csv",
                crop(&jti_closed_form_grid(axis, axis, &p), window)?.to_csv(["t_s_s", "t_i_s"]),
            );
        }
        "marginal" => {
            let jti = ctx.jti(&mut out)?;
            let m = time_difference_marginal(&rotate_to_sum_diff(&jti).map_err(at("rotate"))?);
            let t = round_trip_time(&ctx.fiber, ctx.topology(), ctx.center_s).map_err(at("round_trip"))?;
            let peaks = m.peaks(cfg.temporal.peak_threshold);
            out.num("round_trip_time_s", t);
            out.diag("peaks", peaks.len());
            if peaks.len() > 1 {
                out.num("mean_peak_spacing_s", (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64);
            }
            out.file("marginal.csv", m.to_csv());
        }
        "modes" => {
            let jti = ctx.jti(&mut out)?;
            let t = round_trip_time(&ctx.fiber, ctx.topology(), ctx.center_s).map_err(at("round_trip"))?;
            let m = mode_amplitudes(&jti, t, cfg.temporal.cutoff).map_err(at("modes"))?;
            out.num("round_trip_time_s", t);
            out.num("single_row_fraction", m.single_row_fraction());
            out.diag("modes_above_cutoff", m.count_above(cfg.temporal.cutoff));
            let mut csv = String::from("i,j,weight\n");
            for ((i, j), v) in m.values.indexed_iter() {
                let _ = writeln!(csv, "{i},{j},{}", fmt_f64(*v));
            }
            out.file("modes.csv", csv);
        }
        "flux" => {
            let filter = ctx.flux_filter(&mut out)?;
            let r = flux_pulsed(&ctx.fiber, &ctx.pump, &ctx.cavity, &filter, &ctx.flux_options())
                .map_err(at("flux"))?;
            let body = flux_report(&r, &mut out);
            out.file("flux.txt", body);
        }
        "cw-flux" => {
            let filter = ctx.flux_filter(&mut out)?;
            let r = flux_cw(
                &ctx.fiber,
                ctx.pump.omega0,
                ctx.pump.avg_power,
                &ctx.cavity,
                &filter,
                &ctx.flux_options(),
            )
            .map_err(at("cw_flux"))?;
            let body = flux_report(&r, &mut out);
            out.file("cw_flux.txt", body);
        }
        "flux-sweep" => {
            let filter = ctx.flux_filter(&mut out)?;
            let sigmas = match &cfg.flux.sigma_list {
                Some(list) => list.clone(),
                None => default_sweep(&ctx)?,
            };
            let sweep = flux_ratio_sweep(&ctx.fiber, &ctx.pump, &ctx.cavity, &sigmas, &filter, &ctx.flux_options())
                .map_err(at("flux_sweep"))?;
            out.num("zone_boundary_narrow_rad_per_s", sweep.boundaries.0);
            out.num("zone_boundary_broad_rad_per_s", sweep.boundaries.1);
            let mut zones = String::from("sigma_I_rad_per_s,zone,status\n");
            for p in &sweep.points {
                let status = match &p.result {
                    Ok(_) => "ok".to_string(),
                    Err(e) => format!("{:?}", e.to_string()),
                };
                let _ = writeln!(zones, "{},{},{status}", fmt_f64(p.sigma_i), p.zone.label());
            }
            if let Some(Err(e)) = sweep.points.iter().map(|p| &p.result).find(|r| r.is_err()) {
                if sweep.points.iter().all(|p| p.result.is_err()) {
                    return Err(RunError::Core {
                        stage: "flux_sweep",
                        error: e.clone(),
                    });
                }
            }
            out.file("flux_sweep.csv", sweep.to_csv());
            out.file("flux_sweep_zones.csv", zones);
        }
        "geom" => {
            let Some((mode, center)) = ctx.resonant_mode() else {
                return Err(RunError::Usage("geom needs a resonant mode in [cavity]".into()));
            };
            let config = match (cfg.geom.config, ctx.cavity.resonant_s && ctx.cavity.resonant_i) {
                (Some(c), _) => c,
                (None, true) => GeomConfig::Csi,
                (None, false) => GeomConfig::Cs,
            };
            let inputs = GeomModelInputs {
                r2_mag: ctx.cavity.mirror(mode).r2_mag,
                delta_omega: mode_width(&ctx.fiber, &ctx.cavity, mode, center).map_err(at("mode_width"))?,
                mode_spacing: mode_spacing(&ctx.fiber, ctx.topology(), center).map_err(at("mode_spacing"))?,
                sigma_i: cfg.geom.sigma_i.unwrap_or(cfg.pump.sigma_i),
                config,
            };
            out.num("delta_omega_rad_per_s", inputs.delta_omega);
            out.num("Delta_omega_rad_per_s", inputs.mode_spacing);
            let g = geom_model(&inputs).map_err(at("geom"))?;
            out.file("geom.txt", g.to_key_value());
        }
        "design" => {
            let Some(d) = &cfg.design else {
                return Err(RunError::Usage("design needs a [design] section".into()));
            };
            let target = TransitionTarget::new(omega_from_wavelength(d.target_wavelength_m), d.linewidth)
                .map_err(at("design"))?;
            let overrides = DesignOverrides {
                r2: d.r2,
                sigma_i: d.sigma_i,
                skip_flux: d.skip_flux,
            };
            let length = d.length_m.unwrap_or(cfg.fiber.length_m);
            let report =
                design_report(&ctx.fiber, &ctx.pump, &target, length, overrides).map_err(at("design"))?;
            out.file("design.txt", report.to_key_value());
        }
        other => {
            return Err(RunError::Usage(format!(
                "unknown subcommand `{other}`; expected one of {}",
                SUBCOMMANDS.join(", ")
            )))
        }
    }
    Ok(out)
}

/// Log-spaced σ_I from 0.3·δω to 3·√2·Δω.
fn default_sweep(ctx: &Context) -> Result<Vec<f64>> {
    let spacing = mode_spacing(&ctx.fiber, ctx.topology(), ctx.center_s).map_err(at("mode_spacing"))?;
    let width = match ctx.resonant_mode() {
        Some((mode, center)) => mode_width(&ctx.fiber, &ctx.cavity, mode, center).map_err(at("mode_width"))?,
        None => 1e-3 * spacing,
    };
    let (lo, hi) = (0.3 * width, 3.0 * SQRT_2 * spacing);
    let n = ctx.cfg.flux.sweep_points;
    Ok((0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .rev()
        .collect())
}

/// Sidecar text for `artifact`.
pub fn metadata(subcommand: &str, artifact: &str, cfg: &RunConfig, defaults: &[String], out: &Outcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "subcommand={subcommand}");
    let _ = writeln!(s, "file={artifact}");
    let _ = writeln!(s, "config_sha256={}", config_hash(cfg));
    let _ = writeln!(s, "tool=sfwm {}", env!("CARGO_PKG_VERSION"));
    s.push_str("\n[defaults]\n");
    for d in defaults {
        let _ = writeln!(s, "{d}");
    }
    s.push_str("\n[diagnostics]\n");
    for (k, v) in &out.diagnostics {
        let _ = writeln!(s, "{k}={v}");
    }
    s.push_str("\n[config]\n");
    s.push_str(&cfg.to_ini());
    s
}

/// Writes every artifact and its `.meta` sidecar into `dir`, each through a
/// temporary file renamed into place.
pub fn write_outputs(
    dir: &Path,
    subcommand: &str,
    cfg: &RunConfig,
    defaults: &[String],
    out: &Outcome,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for a in &out.artifacts {
        let name = format!("{}{}", cfg.output.prefix, a.name);
        let meta = metadata(subcommand, &name, cfg, defaults, out);
        for (file, body) in [(name.clone(), &a.body), (format!("{name}.meta"), &meta)] {
            let path = dir.join(&file);
            write_atomic(&path, body.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(io)?;
    }
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
