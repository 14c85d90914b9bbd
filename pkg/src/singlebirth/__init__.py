"""Poisson-equation machinery and classification criteria for upwardly
skip-free continuous-time Markov chains on the nonnegative integers."""

from .criteria import (AnalysisOptions, AnalysisReport, LimitEstimate,
                       MomentVector, Status, Verdict, analyze, decay_profile,
                       exp_moment_return, hitting_moment, kummer_test,
                       laplace_return, lifetime_moment, lifetime_transforms,
                       mean_return_time, mz_sufficient_condition, recurrence,
                       return_probability, uniqueness)
from .errors import (AllCapped, ConditionViolated, DegenerateBoundary,
                     DomainError, FeasibilityViolated, HorizonExceeded,
                     InconclusiveSeries, ModelSpecError, NotExplosive,
                     NotRecurrent, NumericOverflow, PreviousOrderInfinite,
                     RateBoundViolated, SingleBirthError, StructureError)
from .model import (RateRow, SingleBirthModel, SingleDeathModel, SingleDeathRow,
                    build_tabulated, model_birth_death, model_constant_column,
                    model_uniform_catastrophe)
from .modelspec import build_model, compile_rate_expression, load_model_file
from .poisson import (PoissonProblem, PoissonSolution, TriangularSystem,
                      gamma_full, gamma_table, poisson_residual, solve_poisson,
                      solve_poisson_finite, solve_poisson_single_death_finite,
                      solve_triangular)
from .scaled import ScaledReal
from .sequences import (CoefficientVector, SequenceTable, compute_sequences,
                        d_sequence, f_column, f_table, m_sequence,
                        partial_row_sums)
from .simulator import (EstimateWithError, FirstHit, FirstReturnTo, LevelCap,
                        TimeHorizon, Trajectory, estimate_return_time_moment,
                        estimate_transform, simulate)

__version__ = "0.1.0"
