"""Spectral simulator and analysis toolkit for parametric (Faraday)
excitations in harmonically trapped two-component condensates."""

from .units import UnitSystem, DEFAULT_UNITS, SODIUM_HBAR_OVER_M, BOHR_RADIUS_UM
from .grids import Grid, GridError
from .model import (BinaryField, DerivedDensities, FieldError, ModelError,
                    PhysicalSetup, coupling_from_scattering, densities)
from .groundstate import (ConvergenceError, GroundStateConfig, NoiseInjection,
                          gaussian_profile, imaginary_time_solve, inject_noise,
                          thomas_fermi_mu, thomas_fermi_profile, thomas_fermi_radii)
from .evolution import (ConfigError, EvolutionConfig, ModulationProtocol,
                        TimeSeries, evolve, scattering_schedule,
                        trap_modulation_schedule)
from .lintheory import (ChannelError, DispersionInput, MathieuResult,
                        SoundAndHealing, bogoliubov_omega,
                        dispersion_input_from_field, mathieu_stability,
                        nbar_from_central_density, resonance_k, sound_and_healing)
from .analysis import (AnalysisError, GrowthReport, ModeLabel, Profile1D,
                       SidePeaks, SpectralDecomposition, SubharmonicResult,
                       bessel_decompose, bessel_total_power, growth_report,
                       integrate_profile, integrated_axis_profile, label_mode,
                       mode_amplitude, polar_resample, power_spectrum_1d,
                       profile_power, profile_spectrum, side_peaks,
                       subharmonic_check)
from .snapshots import (FormatError, ManifestError, RunManifest,
                        read_decomposition, read_snapshot, write_decomposition,
                        write_snapshot)
from .config import ExperimentConfig, build_config, config_hash, load_config

__version__ = "0.1.0"
