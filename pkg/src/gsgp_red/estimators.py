"""scikit-learn compatible regressors wrapping the three engines."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .expr import semantics, to_infix
from .gp import GpConfig, evolve_gp
from .gsgp import GsgpConfig, ReconstructionRefused, evolve_gsgp, pointer_semantics, reconstruct
from .red import evolve_red, red_semantics, term_table, to_expression


def _seed(random_state) -> int:
    if random_state is None:
        return int(np.random.SeedSequence().generate_state(1)[0])
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(2**31 - 1))
    return int(random_state)


class _SymbolicRegressorMixin(RegressorMixin, BaseEstimator):
    _min_samples = 1

    def _validate_fit(self, X, y) -> Dataset:
        X, y = check_X_y(X, y, y_numeric=True, dtype=float)
        if X.shape[0] < self._min_samples:
            raise ValueError(
                f"n_samples={X.shape[0]}; {type(self).__name__} needs at least "
                f"{self._min_samples} samples to set the mutation step"
            )
        self.n_features_in_ = X.shape[1]
        return Dataset(X, y, type(self).__name__)

    def _validate_predict(self, X) -> np.ndarray:
        check_is_fitted(self, "best_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input"
            )
        return X


class GPRegressor(_SymbolicRegressorMixin):
    """Tree-based GP with subtree crossover and mutation.

    Parameters
    ----------
    population_size, generations, tournament_size : int
    p_crossover : float
        Probability of crossover; mutation happens otherwise.
    max_depth : int
        Depth bound for ramped half-and-half initialization and for the
        subtrees grown by mutation.
    erc_range : tuple of float
        Interval for ephemeral random constants.
    random_state : int, RandomState or None
    """

    def __init__(
        self,
        population_size: int = 1000,
        generations: int = 250,
        tournament_size: int = 7,
        p_crossover: float = 0.9,
        max_depth: int = 6,
        erc_range: tuple[float, float] = (-1.0, 1.0),
        random_state=None,
    ):
        self.population_size = population_size
        self.generations = generations
        self.tournament_size = tournament_size
        self.p_crossover = p_crossover
        self.max_depth = max_depth
        self.erc_range = erc_range
        self.random_state = random_state

    def fit(self, X, y):
        train = self._validate_fit(X, y)
        config = GpConfig(
            pop_size=self.population_size,
            generations=self.generations,
            tournament_size=self.tournament_size,
            p_crossover=self.p_crossover,
            p_mutation=1.0 - self.p_crossover,
            max_init_depth=self.max_depth,
            erc_range=tuple(self.erc_range),
            seed=_seed(self.random_state),
        )
        result = evolve_gp(config, train)
        self.best_ = result.best
        self.report_ = result.report
        self.train_rmse_trace_ = list(result.report.train_rmse_trace)
        self.expression_ = to_infix(result.best)
        return self

    def predict(self, X):
        X = self._validate_predict(X)
        return semantics(self.best_, X, check=False)


class _GeometricRegressor(_SymbolicRegressorMixin):
    _min_samples = 2

    def __init__(
        self,
        population_size: int = 1000,
        generations: int = 250,
        tournament_size: int = 10,
        p_crossover: float = 0.5,
        max_depth: int = 6,
        random_tree_depth: int = 6,
        erc_range: tuple[float, float] = (-1.0, 1.0),
        ms_fraction: float = 0.1,
        random_state=None,
    ):
        self.population_size = population_size
        self.generations = generations
        self.tournament_size = tournament_size
        self.p_crossover = p_crossover
        self.max_depth = max_depth
        self.random_tree_depth = random_tree_depth
        self.erc_range = erc_range
        self.ms_fraction = ms_fraction
        self.random_state = random_state

    def _config(self) -> GsgpConfig:
        return GsgpConfig(
            pop_size=self.population_size,
            generations=self.generations,
            tournament_size=self.tournament_size,
            p_crossover=self.p_crossover,
            p_mutation=1.0 - self.p_crossover,
            max_init_depth=self.max_depth,
            random_tree_depth=self.random_tree_depth,
            erc_range=tuple(self.erc_range),
            ms_fraction=self.ms_fraction,
            seed=_seed(self.random_state),
        )


class GSGPRegressor(_GeometricRegressor):
    """Pointer-based geometric semantic GP.

    The fitted individual is a lineage DAG (``best_``); ``exact_size_`` holds
    its node count as an exact integer. Predictions replay the lineage on the
    new inputs without building the tree.
    """

    def fit(self, X, y):
        train = self._validate_fit(X, y)
        result = evolve_gsgp(self._config(), train)
        self.best_ = result.best
        self.report_ = result.report
        self.delta_ = result.delta
        self.exact_size_ = result.best.exact_size
        self.train_rmse_trace_ = list(result.report.train_rmse_trace)
        return self

    def predict(self, X):
        X = self._validate_predict(X)
        return pointer_semantics(self.best_, X)

    def expression(self, node_budget: int = 10_000) -> str:
        """Infix text of the full tree; raises ``ReconstructionRefused`` over budget."""
        check_is_fitted(self, "best_")
        return to_infix(reconstruct(self.best_, node_budget))


class GSGPRedRegressor(_GeometricRegressor):
    """Geometric semantic GP over aggregated linear combinations of trees.

    Same search as :class:`GSGPRegressor` under the same ``random_state``,
    but the fitted model is a compact table of ``coefficient * tree`` terms.
    """

    def fit(self, X, y):
        train = self._validate_fit(X, y)
        result = evolve_red(self._config(), train)
        self.best_ = result.best
        self.report_ = result.report
        self.delta_ = result.delta
        self.n_terms_ = result.best.term_count
        self.train_rmse_trace_ = list(result.report.train_rmse_trace)
        return self

    def predict(self, X):
        X = self._validate_predict(X)
        return red_semantics(self.best_, X)

    def expression(self) -> str:
        check_is_fitted(self, "best_")
        return to_infix(to_expression(self.best_))

    def terms(self) -> list[dict]:
        check_is_fitted(self, "best_")
        return term_table(self.best_)


__all__ = ["GPRegressor", "GSGPRegressor", "GSGPRedRegressor", "ReconstructionRefused"]
