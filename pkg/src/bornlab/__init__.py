"""bornlab: a numerical laboratory for Born-rule probability on grids.

The package treats a wavefunction as nothing more than the density of a
probability measure plus a family of random variables (drift velocity,
osmotic velocity, pointwise energy, angular momentum), and provides the
machinery to test how far that measure-theoretic description carries:
expectation identities, hydrodynamic residuals, moment comparisons, and a
double-slit experiment driver.
"""

from .catalog import (CatalogState, Model, Potential, coulomb_model,
                      double_slit_model, free_gaussian_state, free_model,
                      gaussian_packet, harmonic_eigenstate, harmonic_model,
                      hydrogen_radial_state, hydrogen_state, superpose)
from .experiments import (DetectorHistogram, DoubleSlitResult, MomentTable,
                          UncertaintyReport, count_fringes,
                          default_double_slit_config, mirror_l1,
                          moment_divergence_report, run_double_slit,
                          uncertainty_report)
from .grid import (ComplexField, Grid, RealField, gradient, inner_product,
                   l2_normalize, laplacian, make_grid)
from .kernels import backend, use_backend
from .observables import (angular_momentum, apply_hamiltonian, coordinate_rv,
                          drift_velocity, energy_rv, madelung_energy,
                          node_mask, osmotic_velocity, qm_energy_expect,
                          qm_momentum_expect, quantum_potential)
from .probability import (Event, ProbabilityMeasure, RandomVariable,
                          born_measure, condition, expectation, marginal,
                          prob, sample)
from .propagate import EvolutionRecord, analytic_evolve, split_step
from .residuals import (ConvergenceStudy, ResidualReport, continuity_residual,
                        convergence_study, force_residual, vorticity_residual)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CatalogState", "Model", "Potential", "coulomb_model",
    "double_slit_model", "free_gaussian_state", "free_model",
    "gaussian_packet", "harmonic_eigenstate", "harmonic_model",
    "hydrogen_radial_state", "hydrogen_state", "superpose",
    "DetectorHistogram", "DoubleSlitResult", "MomentTable",
    "UncertaintyReport", "count_fringes", "default_double_slit_config",
    "mirror_l1", "moment_divergence_report", "run_double_slit",
    "uncertainty_report",
    "ComplexField", "Grid", "RealField", "gradient", "inner_product",
    "l2_normalize", "laplacian", "make_grid",
    "backend", "use_backend",
    "angular_momentum", "apply_hamiltonian", "coordinate_rv",
    "drift_velocity", "energy_rv", "madelung_energy", "node_mask",
    "osmotic_velocity", "qm_energy_expect", "qm_momentum_expect",
    "quantum_potential",
    "Event", "ProbabilityMeasure", "RandomVariable", "born_measure",
    "condition", "expectation", "marginal", "prob", "sample",
    "EvolutionRecord", "analytic_evolve", "split_step",
    "ConvergenceStudy", "ResidualReport", "continuity_residual",
    "convergence_study", "force_residual", "vorticity_residual",
]
