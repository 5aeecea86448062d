"""scikit-learn style wrappers around the solvers and checkers.

An "X" here is a single instance rather than a feature matrix, so these
estimators follow the fit/predict/get_params conventions without taking part
in sklearn pipelines.
"""
from __future__ import annotations

from collections.abc import Mapping
from fractions import Fraction

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import solvers
from .fairness import NOTIONS, FairnessReport, full_report
from .model import (
    Allocation,
    Instance,
    SchemaError,
    allocation_from_dict,
    instance_from_dict,
    normalize_allocation,
    parse_allocation,
    parse_instance,
)


def check_instance(instance) -> Instance:
    """Accept an Instance, a parsed document or its JSON text."""
    if isinstance(instance, Instance):
        return instance
    if isinstance(instance, (str, bytes)):
        return parse_instance(instance)
    if isinstance(instance, Mapping):
        return instance_from_dict(instance)
    raise SchemaError(f"expected an instance, got {type(instance).__name__}")


def check_allocation(inst: Instance, allocation) -> Allocation:
    if isinstance(allocation, Allocation):
        return normalize_allocation(inst, allocation)
    if isinstance(allocation, (str, bytes)):
        return parse_allocation(inst, allocation)
    if isinstance(allocation, Mapping):
        return allocation_from_dict(inst, allocation)
    raise SchemaError(f"expected an allocation, got {type(allocation).__name__}")


def _check_fitted(est, attr="result_"):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class _Allocator(BaseEstimator):
    def _solve(self, inst):
        raise NotImplementedError

    def fit(self, X, y=None):
        self.instance_ = check_instance(X)
        self.result_ = self._solve(self.instance_)
        self.allocation_ = self.result_.allocation
        self.utilities_ = self.result_.utilities
        return self

    def predict(self, X=None) -> Allocation:
        _check_fitted(self)
        if X is not None and check_instance(X) != self.instance_:
            return self._solve(check_instance(X)).allocation
        return self.allocation_

    def fit_predict(self, X, y=None) -> Allocation:
        return self.fit(X).allocation_


class PhiFairAllocator(_Allocator):
    """Exact Φ-fair allocation of a binary linear instance."""

    def __init__(self, objective="phi:sq"):
        self.objective = objective

    def _solve(self, inst):
        return solvers.solve_phi_fair(inst, self.objective)


class MNWAllocator(_Allocator):
    def __init__(self, mode="exact", tol=1e-9):
        self.mode = mode
        self.tol = tol

    def _solve(self, inst):
        return solvers.solve_mnw(inst, self.mode, self.tol)


class LeximinAllocator(_Allocator):
    def __init__(self, mode="exact", scope="uo", tol=1e-9):
        self.mode = mode
        self.scope = scope
        self.tol = tol

    def _solve(self, inst):
        return solvers.solve_leximin(inst, self.mode, self.scope, self.tol)


class EF1MAllocator(_Allocator):
    """Envy-cycle elimination on goods plus perfect partitions of every cake."""

    def _solve(self, inst):
        return solvers.construct_ef1m(inst)


class FairnessChecker(BaseEstimator):
    """Binds an instance; ``predict`` maps an allocation to its report."""

    def __init__(self, slack=0, notions=NOTIONS):
        self.slack = slack
        self.notions = notions

    def fit(self, X, y=None):
        self.instance_ = check_instance(X)
        self.slack_ = Fraction(self.slack)
        return self

    def predict(self, allocation) -> FairnessReport:
        _check_fitted(self, "instance_")
        alloc = check_allocation(self.instance_, allocation)
        return full_report(self.instance_, alloc, self.slack_, tuple(self.notions))

    def score(self, allocation) -> float:
        """Fraction of requested notions that hold (not-applicable ones excluded)."""
        report = self.predict(allocation)
        verdicts = [v for v in report.verdicts().values() if v != "not-applicable"]
        return sum(v == "holds" for v in verdicts) / len(verdicts) if verdicts else 1.0
