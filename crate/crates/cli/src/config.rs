//! Flat `key = value` run configuration validated against a fixed schema.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Float,
    Positive,
    /// Lower bound on an integer value.
    Count(usize),
    Choice(&'static [&'static str]),
    Path,
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: &'static str,
    help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Key {
    Key { name, kind, default, help }
}

const SHAPES: &[&str] = &["none", "cosine", "sine", "dipole"];

static SCHEMA: &[Key] = &[
    key("grid.L", Kind::Positive, "6.283185307179586", "domain length"),
    key("grid.M", Kind::Count(8), "64", "grid points (interior points on a box)"),
    key("grid.boundary", Kind::Choice(&["periodic", "dirichlet"]), "periodic", "boundary condition"),
    key("grid.origin", Kind::Float, "0", "left end of the domain"),
    key("time.T", Kind::Positive, "1", "time horizon"),
    key("time.steps", Kind::Count(1), "200", "number of time steps"),
    key("time.sampling", Kind::Choice(&["left", "midpoint"]), "left", "where the potential is frozen within a step"),
    key("system.particles", Kind::Choice(&["1", "2"]), "1", "particle number"),
    key("system.interaction.strength", Kind::Float, "0", "soft-core strength λ (0 disables the interaction)"),
    key("system.interaction.softening", Kind::Positive, "1", "soft-core softening a"),
    key("potential.form", Kind::Choice(&["zero", "cosine", "harmonic", "file"]), "cosine", "static part of v"),
    key("potential.amplitude", Kind::Float, "1", "amplitude of the cosine form"),
    key("potential.wavenumber", Kind::Float, "1", "wavenumber of the cosine form"),
    key("potential.omega", Kind::Positive, "1", "frequency of the harmonic form"),
    key("potential.center", Kind::Float, "0", "center of the harmonic form"),
    key("potential.drive.shape", Kind::Choice(SHAPES), "none", "spatial shape of the drive"),
    key("potential.drive.amplitude", Kind::Float, "0", "drive amplitude ε in ε sin(Ωt) shape(x)"),
    key("potential.drive.frequency", Kind::Float, "1", "drive frequency Ω"),
    key("potential.drive.wavenumber", Kind::Float, "1", "wavenumber of cosine and sine drive shapes"),
    key("potential.file", Kind::Path, "", "DPMF potential: [M] static or [steps+1, M] trajectory"),
    key("state.form", Kind::Choice(&["ground", "constant", "gaussian", "file"]), "ground", "initial state"),
    key("state.center", Kind::Float, "0", "Gaussian center"),
    key("state.width", Kind::Positive, "1", "Gaussian width σ in e^{-(x-x₀)²/2σ²}"),
    key("state.momentum", Kind::Float, "0", "Gaussian momentum"),
    key("state.file", Kind::Path, "", "DPMF complex state of shape [M] or [M, M]"),
    key("propagate.method", Kind::Choice(&["stepwise", "neumann", "spectral"]), "stepwise", "propagator"),
    key("propagate.order", Kind::Count(0), "4", "Neumann series order"),
    key("spectrum.count", Kind::Count(1), "8", "number of eigenpairs"),
    key("inversion.target", Kind::Choice(&["generate", "file"]), "generate", "target density source"),
    key("inversion.density_file", Kind::Path, "", "DPMF target density [steps+1, M]"),
    key("inversion.initial", Kind::Choice(&["static", "zero"]), "static", "initial guess of the fixed-point iteration"),
    key("inversion.mixing", Kind::Positive, "1", "mixing α in (0, 1]"),
    key("inversion.tolerance", Kind::Positive, "1e-8", "tolerance on the sup-over-time L² change"),
    key("inversion.max_iterations", Kind::Count(1), "200", "iteration cap per window"),
    key("inversion.restart_steps", Kind::Count(0), "0", "restart window in steps (0: whole horizon)"),
    key("inversion.weight", Kind::Choice(&["arithmetic", "bond"]), "bond", "half-grid weight"),
    key("inversion.degeneracy", Kind::Choice(&["fail", "clamp"]), "fail", "policy for vanishing weights"),
    key("inversion.floor", Kind::Positive, "1e-8", "clamp floor"),
    key("inversion.scheme", Kind::Choice(&["continuum", "grid_exact"]), "continuum", "Hamilton–Jacobi scheme"),
    key("inversion.order", Kind::Count(0), "2", "Taylor order K (at most 8)"),
    key("inversion.taylor_step", Kind::Positive, "0.01", "time step of the density derivative stencil"),
    key("inversion.potential_file", Kind::Path, "", "DPMF potential to verify (default: the configured one)"),
    key("response.mode", Kind::Choice(&["lehmann", "kick", "kubo"]), "lehmann", "response calculation"),
    key("response.count", Kind::Count(2), "4", "eigenpairs in the Lehmann sum"),
    key("response.broadening", Kind::Positive, "0.01", "Lorentzian broadening γ"),
    key("response.omega_points", Kind::Count(2), "401", "frequency samples"),
    key("response.x0", Kind::Float, "0.25", "kick position"),
    key("response.probe", Kind::Float, "0.3", "observation position"),
    key("response.kappa", Kind::Positive, "0.001", "kick strength"),
    key("response.perturbation", Kind::Choice(&["cosine", "sine", "dipole"]), "dipole", "Kubo perturbation shape"),
    key("response.observable", Kind::Choice(&["position", "density", "cosine"]), "position", "Kubo observable"),
    key("density.form", Kind::Choice(&["uniform_ball", "gaussian"]), "uniform_ball", "radial density"),
    key("density.R", Kind::Positive, "1", "ball radius or radial extent"),
    key("density.N", Kind::Positive, "1", "particle number"),
    key("density.points", Kind::Count(2), "2000", "radial samples"),
    key("density.scale", Kind::Positive, "2", "factor c of the homogeneity check"),
    key("diagnose.exponent", Kind::Positive, "1", "exponent s of the ∫n^{-s} weight condition"),
    key("io.outdir", Kind::Path, "out", "output directory"),
];

fn lookup(name: &str) -> Option<&'static Key> {
    SCHEMA.iter().find(|k| k.name == name)
}

fn check(key: &Key, value: &str) -> Result<(), CliError> {
    let bad = |why: &str| CliError::Validation(format!("{} = {value:?}: {why}", key.name));
    match key.kind {
        Kind::Float => match value.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(()),
            _ => Err(bad("expected a finite number")),
        },
        Kind::Positive => match value.parse::<f64>() {
            Ok(x) if x.is_finite() && x > 0.0 => Ok(()),
            _ => Err(bad("expected a positive number")),
        },
        Kind::Count(min) => match value.parse::<usize>() {
            Ok(n) if n >= min => Ok(()),
            _ => Err(bad(&format!("expected an integer ≥ {min}"))),
        },
        Kind::Choice(options) if options.contains(&value) => Ok(()),
        Kind::Choice(options) => Err(bad(&format!("expected one of {}", options.join(", ")))),
        Kind::Path => Ok(()),
    }
}

/// Schema listing for `--help`-style documentation.
pub fn schema_table() -> String {
    let mut out = String::new();
    for k in SCHEMA {
        let _ = writeln!(out, "{:<30} {:<20} {}", k.name, k.default, k.help);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { values: SCHEMA.iter().map(|k| (k.name, k.default.to_string())).collect() }
    }
}

impl RunConfig {
    /// Defaults, then the file, then `key=value` overrides in order.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("--set expects key=value, got {item:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        let key = lookup(name).ok_or_else(|| CliError::Validation(format!("unknown configuration key {name:?}")))?;
        check(key, value)?;
        self.values.insert(key.name, value.to_string());
        Ok(())
    }

    fn raw(&self, name: &str) -> &str {
        self.values.get(name).map(String::as_str).unwrap_or_else(|| panic!("key {name} missing from the schema"))
    }

    pub fn float(&self, name: &str) -> f64 {
        self.raw(name).parse().expect("validated on insertion")
    }

    pub fn count(&self, name: &str) -> usize {
        self.raw(name).parse().expect("validated on insertion")
    }

    pub fn choice(&self, name: &str) -> &str {
        self.raw(name)
    }

    /// `None` for an empty path.
    pub fn path(&self, name: &str) -> Option<PathBuf> {
        Some(self.raw(name)).filter(|p| !p.is_empty()).map(PathBuf::from)
    }

    /// Resolved configuration, one `key = value` line per key in sorted order.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
