"""scikit-learn style wrappers.

The estimators take the usual ``fit(X, y)`` pair: ``X`` holds the observed
values (1-d or one column) and ``y`` the group label of every row. The smaller
label is group a. Fitted results are exposed as trailing-underscore
attributes, and ``get_params``/``set_params``/``clone`` work as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._rng import DEFAULT_SEED
from ._validation import check_two_sample
from .aux_tests import median_test_exact, sharp_permutation_test
from .calibrate import auto_calibration_spec, calibrate_alpha
from .iu_test import run_iu_test
from .perm_engine import PermutationPlan
from .transform import MarginPair, TransformKind, apply_transform


def _seed(random_state):
    if random_state is None:
        return int(np.random.SeedSequence().entropy) % 2**64
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**63))
    return int(random_state)


class MeasurementTransformer(TransformerMixin, BaseEstimator):
    """Column-wise pooled scale transform (identity, log, sqrt or mid-rank).

    Stateless: ``fit`` only validates the parameters.
    """

    def __init__(self, kind="midrank"):
        self.kind = kind

    def fit(self, X, y=None):
        self.kind_ = TransformKind(self.kind)
        X = check_array(X, ensure_2d=False)
        self.n_features_in_ = 1 if X.ndim == 1 else X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "kind_")
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 1:
            return apply_transform(X, self.kind_)
        return np.column_stack([apply_transform(col, self.kind_) for col in X.T])


class IUEquivalenceTest(BaseEstimator):
    """Intersection-union permutation test of equivalence.

    Parameters
    ----------
    eps_lower, eps_upper : float
        Non-inferiority and non-superiority margins in observation units.
    alpha : float, default=0.05
    transform : {'identity', 'log', 'sqrt', 'midrank'}, default='identity'
    n_permutations : int, default=100_000
    exhaustive : bool, default=False
    include_identity : bool, default=False
    alpha_c : {'naive', 'auto'} or float, default='auto'
        Partial level. ``'auto'`` calibrates under a normal working model.
    sigma : float, optional
        Working-model sd for calibration; pooled sd of the data when None.
    mc_replicates, permutations_per_replicate : int
        Calibration simulation sizes.
    random_state : int, optional

    Attributes
    ----------
    result_ : IuTestResult
    lambda_lower_, lambda_upper_, lambda_global_ : float
    alpha_c_ : float
    decision_ : Decision
    classes_ : ndarray of shape (2,)
    """

    def __init__(self, eps_lower=0.0, eps_upper=0.0, alpha=0.05, transform="identity",
                 n_permutations=100_000, exhaustive=False, include_identity=False,
                 alpha_c="auto", sigma=None, mc_replicates=5000,
                 permutations_per_replicate=2500, random_state=DEFAULT_SEED):
        self.eps_lower = eps_lower
        self.eps_upper = eps_upper
        self.alpha = alpha
        self.transform = transform
        self.n_permutations = n_permutations
        self.exhaustive = exhaustive
        self.include_identity = include_identity
        self.alpha_c = alpha_c
        self.sigma = sigma
        self.mc_replicates = mc_replicates
        self.permutations_per_replicate = permutations_per_replicate
        self.random_state = random_state

    def fit(self, X, y=None):
        data, self.classes_ = check_two_sample(X, y)
        plan = PermutationPlan(
            self.n_permutations, self.exhaustive, _seed(self.random_state), self.include_identity
        )
        cal_kwargs = {
            "sigma": self.sigma,
            "mc_replicates": self.mc_replicates,
            "permutations_per_replicate": self.permutations_per_replicate,
        }
        self.result_ = run_iu_test(
            data, MarginPair(self.eps_lower, self.eps_upper), self.alpha, self.transform, plan,
            self.alpha_c, calibration_kwargs=cal_kwargs,
        )
        self.lambda_lower_ = self.result_.pvalues.lambda_lower
        self.lambda_upper_ = self.result_.pvalues.lambda_upper
        self.lambda_global_ = self.result_.t_global
        self.alpha_c_ = self.result_.alpha_c
        self.decision_ = self.result_.decision
        return self

    @property
    def equivalent_(self):
        check_is_fitted(self, "result_")
        return self.result_.equivalent

    def decision_function(self):
        """Global statistic ``max(lambda_lower, lambda_upper)``; small values favour equivalence."""
        check_is_fitted(self, "result_")
        return self.lambda_global_


class BoundaryCalibrator(BaseEstimator):
    """Estimate ``alpha_c`` for the group sizes and spread of a dataset."""

    def __init__(self, eps_lower=0.0, eps_upper=0.0, alpha=0.05, sigma=None, transform="identity",
                 mc_replicates=5000, permutations_per_replicate=2500, boundaries="auto", random_state=DEFAULT_SEED):
        self.eps_lower = eps_lower
        self.eps_upper = eps_upper
        self.alpha = alpha
        self.sigma = sigma
        self.transform = transform
        self.mc_replicates = mc_replicates
        self.permutations_per_replicate = permutations_per_replicate
        self.boundaries = boundaries
        self.random_state = random_state

    def fit(self, X, y=None):
        data, self.classes_ = check_two_sample(X, y)
        spec = auto_calibration_spec(
            data, MarginPair(self.eps_lower, self.eps_upper), self.alpha, self.transform,
            seed=_seed(self.random_state), sigma=self.sigma, mc_replicates=self.mc_replicates,
            permutations_per_replicate=self.permutations_per_replicate, boundaries=self.boundaries,
        )
        self.calibration_ = calibrate_alpha(spec)
        self.sigma_ = spec.sigma
        self.alpha_c_ = self.calibration_.alpha_c
        return self


class SharpPermutationTest(BaseEstimator):
    """Sharp-null two-sample test: permutation on mean difference, or exact median test."""

    def __init__(self, sidedness="two_sided", method="permutation", n_permutations=100_000,
                 exhaustive=False, random_state=DEFAULT_SEED):
        self.sidedness = sidedness
        self.method = method
        self.n_permutations = n_permutations
        self.exhaustive = exhaustive
        self.random_state = random_state

    def fit(self, X, y=None):
        data, self.classes_ = check_two_sample(X, y)
        if self.method == "permutation":
            plan = PermutationPlan(self.n_permutations, self.exhaustive, _seed(self.random_state))
            self.result_ = sharp_permutation_test(data, self.sidedness, plan)
        elif self.method == "median":
            self.result_ = median_test_exact(data, self.sidedness)
        else:
            raise ValueError(f"method must be 'permutation' or 'median', got {self.method!r}")
        self.pvalue_ = self.result_.pvalue
        self.statistic_ = self.result_.statistic_observed
        return self
