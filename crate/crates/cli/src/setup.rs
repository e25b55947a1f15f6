//! Grids, potentials, Hamiltonians and states built from a run configuration.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use densmap::dpmf::{DpmfArray, DpmfData};
use densmap::{
    ground_state, Boundary, Gauge, Grid, HamiltonianSpec, PotentialSampling, PotentialTrajectory, SoftCore, Symmetry,
    TimeGrid, WaveFunction,
};
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::error::CliError;

pub fn grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    let boundary = match cfg.choice("grid.boundary") {
        "periodic" => Boundary::Periodic,
        _ => Boundary::Dirichlet,
    };
    Ok(Grid::new(cfg.float("grid.L"), cfg.count("grid.M"), boundary)?.with_origin(cfg.float("grid.origin")))
}

pub fn time(cfg: &RunConfig) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::new(cfg.float("time.T"), cfg.count("time.steps"))?)
}

pub fn sampling(cfg: &RunConfig) -> PotentialSampling {
    match cfg.choice("time.sampling") {
        "midpoint" => PotentialSampling::Midpoint,
        _ => PotentialSampling::LeftEndpoint,
    }
}

pub fn read_dpmf(path: &Path) -> Result<DpmfArray, CliError> {
    let file = File::open(path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    DpmfArray::read_from(BufReader::new(file)).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn real_data(array: &DpmfArray, what: &str) -> Result<Vec<f64>, CliError> {
    match array.data() {
        DpmfData::Real(v) => Ok(v.clone()),
        DpmfData::Complex(_) => Err(CliError::Validation(format!("{what} must be real"))),
    }
}

/// Rows of a rank-2 `[rows, width]` real array.
pub fn real_rows(array: &DpmfArray, width: usize, what: &str) -> Result<Vec<Vec<f64>>, CliError> {
    match array.dims() {
        [_, w] if *w == width => Ok(real_data(array, what)?.chunks(width).map(<[f64]>::to_vec).collect()),
        dims => Err(CliError::Validation(format!("{what} has shape {dims:?}, expected [_, {width}]"))),
    }
}

/// Node closest to `x`.
pub fn nearest_node(grid: &Grid, x: f64) -> usize {
    let m = grid.points();
    (0..m).min_by(|a, b| (grid.x(*a) - x).abs().total_cmp(&(grid.x(*b) - x).abs())).expect("grid has nodes")
}

fn shape(grid: &Grid, name: &str, k: f64) -> Vec<f64> {
    grid.coordinates()
        .iter()
        .map(|x| match name {
            "cosine" => (k * x).cos(),
            "sine" => (k * x).sin(),
            "dipole" => *x,
            _ => 0.0,
        })
        .collect()
}

/// External potential: analytic `base(x) + ε sin(Ωt) shape(x)` or a file.
#[derive(Debug, Clone)]
pub enum PotentialModel {
    Analytic { base: Vec<f64>, shape: Vec<f64>, amplitude: f64, frequency: f64 },
    Tabulated(PotentialTrajectory),
}

impl PotentialModel {
    pub fn from_config(cfg: &RunConfig, grid: &Grid, time: &TimeGrid) -> Result<Self, CliError> {
        let xs = grid.coordinates();
        let base: Vec<f64> = match cfg.choice("potential.form") {
            "zero" => vec![0.0; grid.points()],
            "cosine" => {
                let (a, k) = (cfg.float("potential.amplitude"), cfg.float("potential.wavenumber"));
                xs.iter().map(|x| a * (k * x).cos()).collect()
            }
            "harmonic" => {
                let (w, c) = (cfg.float("potential.omega"), cfg.float("potential.center"));
                xs.iter().map(|x| 0.5 * w * w * (x - c).powi(2)).collect()
            }
            _ => {
                let path = cfg
                    .path("potential.file")
                    .ok_or_else(|| CliError::Validation("potential.form = file needs potential.file".into()))?;
                return PotentialModel::from_file(&path, grid, time);
            }
        };
        Ok(PotentialModel::Analytic {
            base,
            shape: shape(grid, cfg.choice("potential.drive.shape"), cfg.float("potential.drive.wavenumber")),
            amplitude: cfg.float("potential.drive.amplitude"),
            frequency: cfg.float("potential.drive.frequency"),
        })
    }

    pub fn from_file(path: &Path, grid: &Grid, time: &TimeGrid) -> Result<Self, CliError> {
        let array = read_dpmf(path)?;
        let m = grid.points();
        let values = match array.dims() {
            [w] if *w == m => vec![real_data(&array, "potential")?; time.nodes()],
            [n, _] if *n == time.nodes() => real_rows(&array, m, "potential")?,
            dims => {
                return Err(CliError::Validation(format!(
                    "potential file has shape {dims:?}, expected [{m}] or [{}, {m}]",
                    time.nodes()
                )))
            }
        };
        Ok(PotentialModel::Tabulated(PotentialTrajectory::new(*grid, *time, values, Gauge::Raw)?))
    }

    /// Potential at an arbitrary time; tabulated potentials only at `t = 0`.
    pub fn at(&self, t: f64) -> Result<Vec<f64>, CliError> {
        match self {
            PotentialModel::Analytic { base, shape, amplitude, frequency } => {
                let s = amplitude * (frequency * t).sin();
                Ok(base.iter().zip(shape).map(|(b, f)| b + s * f).collect())
            }
            PotentialModel::Tabulated(v) if t == 0.0 => Ok(v.at(0).to_vec()),
            PotentialModel::Tabulated(_) => {
                Err(CliError::Validation("a tabulated potential is only known on its time grid".into()))
            }
        }
    }

    pub fn initial(&self) -> Vec<f64> {
        self.at(0.0).expect("t = 0 is always available")
    }

    pub fn trajectory(&self, grid: &Grid, time: &TimeGrid) -> Result<PotentialTrajectory, CliError> {
        match self {
            PotentialModel::Analytic { .. } => {
                let values = time.times().iter().map(|t| self.at(*t)).collect::<Result<Vec<_>, _>>()?;
                Ok(PotentialTrajectory::new(*grid, *time, values, Gauge::Raw)?)
            }
            PotentialModel::Tabulated(v) => Ok(v.clone()),
        }
    }
}

pub fn hamiltonian(cfg: &RunConfig, grid: &Grid, v_static: Vec<f64>) -> Result<HamiltonianSpec, CliError> {
    let strength = cfg.float("system.interaction.strength");
    let interaction =
        if strength != 0.0 { Some(SoftCore::new(strength, cfg.float("system.interaction.softening"))?) } else { None };
    let particles = cfg.count("system.particles");
    Ok(HamiltonianSpec::new(*grid, v_static, interaction, particles)?)
}

pub fn initial_state(cfg: &RunConfig, spec: &HamiltonianSpec) -> Result<WaveFunction, CliError> {
    let grid = *spec.grid();
    let orbital = match cfg.choice("state.form") {
        "ground" => return Ok(ground_state(spec)?.state),
        "constant" => WaveFunction::from_fn(grid, |_| Complex64::new(1.0, 0.0))?,
        "gaussian" => {
            let (c, s, k) = (cfg.float("state.center"), cfg.float("state.width"), cfg.float("state.momentum"));
            WaveFunction::from_fn(grid, |x| Complex64::from_polar((-(x - c).powi(2) / (2.0 * s * s)).exp(), k * x))?
        }
        _ => {
            let path = cfg
                .path("state.file")
                .ok_or_else(|| CliError::Validation("state.form = file needs state.file".into()))?;
            let array = read_dpmf(&path)?;
            let amps: Vec<Complex64> = match array.data() {
                DpmfData::Real(v) => v.iter().map(|x| Complex64::new(*x, 0.0)).collect(),
                DpmfData::Complex(v) => v.clone(),
            };
            let psi = WaveFunction::new(grid, array.dims().len(), amps)?;
            spec.check_state(&psi)?;
            return Ok(psi.normalize()?);
        }
    };
    let orbital = orbital.normalize()?;
    if spec.particles() == 2 {
        Ok(WaveFunction::build_two_particle(&orbital, &orbital, Symmetry::Symmetric)?)
    } else {
        Ok(orbital)
    }
}

/// Everything a dynamical command needs.
pub struct System {
    pub grid: Grid,
    pub time: TimeGrid,
    pub sampling: PotentialSampling,
    pub model: PotentialModel,
    pub potential: PotentialTrajectory,
    pub spec: HamiltonianSpec,
    pub psi0: WaveFunction,
}

impl System {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, CliError> {
        let grid = grid(cfg)?;
        let time = time(cfg)?;
        let model = PotentialModel::from_config(cfg, &grid, &time)?;
        let potential = model.trajectory(&grid, &time)?;
        let spec = hamiltonian(cfg, &grid, model.initial())?;
        let psi0 = initial_state(cfg, &spec)?;
        Ok(System { grid, time, sampling: sampling(cfg), model, potential, spec, psi0 })
    }
}
