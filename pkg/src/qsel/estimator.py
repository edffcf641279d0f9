"""scikit-learn style front end to the solvers."""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .model import penalty
from .reduce import evaluate
from .solve import DEFAULT_ENUMERATION_CAP, Algorithm, Objective, SolverConfig, Status, solve
from .validation import check_cutoff, check_instance, check_lambda, with_lambda


class ServiceSelector(BaseEstimator):
    """Selects one concrete candidate per abstract operation.

    ``fit`` solves the instance; the chosen binding is exposed as
    ``assignment_`` (op -> candidate index) and ``predict`` returns concrete
    candidate ids.

    Parameters
    ----------
    algorithm : {'exh', 'p', 'pm'}
        Exhaustive search, backtracking with the reduction-driven order, or
        backtracking with the min-domain-first sort on top.
    objective : {'opt', 'feas', 'all'}
    cutoff_ms : float or None
        Wall-time budget; the best assignment found so far is kept.
    seed : int or None
        Shuffles candidate order (and min-domain ties) when set.
    lam : float or None
        Overrides the instance's penalty weight.
    """

    def __init__(self, algorithm="pm", objective="opt", cutoff_ms=None, seed=None, lam=None,
                 enumeration_cap=DEFAULT_ENUMERATION_CAP):
        self.algorithm = algorithm
        self.objective = objective
        self.cutoff_ms = cutoff_ms
        self.seed = seed
        self.lam = lam
        self.enumeration_cap = enumeration_cap

    def _config(self) -> SolverConfig:
        return SolverConfig(Algorithm(self.algorithm), Objective(self.objective),
                            check_cutoff(self.cutoff_ms), self.seed, self.enumeration_cap)

    def fit(self, X, y=None):
        instance = check_instance(X)
        if self.lam is not None:
            instance = with_lambda(instance, check_lambda(self.lam))
        report = solve(instance, self._config())
        self.instance_ = instance
        self.report_ = report
        self.status_ = report.status
        self.assignment_ = report.best
        self.opt_penalty_ = report.opt_penalty
        self.qos_ = report.best_qos
        return self

    def predict(self, X=None):
        """Concrete candidate ids of the fitted binding (None when nothing was found).

        ``X`` may be another instance over the same operations and candidate
        lists; ids are then read from it.
        """
        check_is_fitted(self, "report_")
        instance = self.instance_ if X is None else check_instance(X)
        if self.assignment_ is None:
            return None
        return {op: instance.domains[op].candidates[i].id for op, i in self.assignment_.items()}

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()

    def score(self, X=None, y=None):
        """Negative penalty of the fitted binding on ``X``; -inf if infeasible there."""
        check_is_fitted(self, "report_")
        instance = self.instance_ if X is None else check_instance(X)
        if self.lam is not None:
            instance = with_lambda(instance, self.lam)
        if self.assignment_ is None or self.status_ is Status.INFEASIBLE:
            return -math.inf
        q = evaluate(instance, self.assignment_)
        if not instance.sla.satisfied_by(q):
            return -math.inf
        return -penalty(q, instance.sla.lam)
