"""Neyman-Pearson tests, their ROC, and the evidence carried by decisions and P-values.

The main entry points:

* ``models``: one-sample normal, two-sample pooled t and the two tea-tasting models
* ``engine``: most powerful rules, the P-functional and ROC evaluation
* ``belief``: Bayesian updating on data, decisions or P-values, and profile grids
* ``sequential`` / ``bias``: accumulation of evidence across studies, with or without publication filtering
* ``los``: choosing the level of significance and the sample size
"""

__version__ = "0.1.0"

from .belief import (Belief, Decision, LogLikelihoodRatio, PValue, RawLikelihoodRatio, contour_grid, l_D_profile,
                     l_P_profile, lambda_D, log_lambda_D, p_expectation, update)
from .bias import (DecisionGate, PValueGate, biased_expected_logrho, biased_expected_V, biased_size,
                   run_biased_sequential, slope_crossing)
from .engine import DecisionRule, Hypothesis, RocCurve, build_rule, decide, p_functional, roc, roc_curve, roc_deriv
from .errors import DomainError, SolverError
from .los import (CostMatrix, LosSolution, discrimination, risk_curves, sample_size, solve_bayes,
                  solve_discrimination, solve_minimax, table1)
from .models import (NormalFamily, OneSampleNormal, TeaBinomialFamily, TeaFisherFamily, TeaTastingBinomial,
                     TeaTastingFisher, TwoSampleFamily, TwoSampleT)
from .rng import RngStream
from .sequential import (ReplicationResult, SequentialConfig, Trajectory, lemma_condition_check,
                         run_replication_study, run_sequential)

__all__ = [
    "Belief", "Decision", "LogLikelihoodRatio", "PValue", "RawLikelihoodRatio", "contour_grid", "l_D_profile",
    "l_P_profile", "lambda_D", "log_lambda_D", "p_expectation", "update",
    "DecisionGate", "PValueGate", "biased_expected_logrho", "biased_expected_V", "biased_size",
    "run_biased_sequential", "slope_crossing",
    "DecisionRule", "Hypothesis", "RocCurve", "build_rule", "decide", "p_functional", "roc", "roc_curve", "roc_deriv",
    "DomainError", "SolverError",
    "CostMatrix", "LosSolution", "discrimination", "risk_curves", "sample_size", "solve_bayes",
    "solve_discrimination", "solve_minimax", "table1",
    "NormalFamily", "OneSampleNormal", "TeaBinomialFamily", "TeaFisherFamily", "TeaTastingBinomial",
    "TeaTastingFisher", "TwoSampleFamily", "TwoSampleT",
    "RngStream",
    "ReplicationResult", "SequentialConfig", "Trajectory", "lemma_condition_check", "run_replication_study",
    "run_sequential",
    "__version__",
]
