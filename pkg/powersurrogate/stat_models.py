"""
Synthetic datasets drawn from column distributions, the three model families, and the hypothesis
tests whose rejection rates define power.
"""
import dataclasses
import itertools as it
import logging
import numpy as np
from scipy import special
import typing
from .special_math import as_generator, chisq_cdf, f_cdf, Rng, sample_categorical, \
    sample_normal, t_cdf


LOGGER = logging.getLogger(__name__)
FAMILIES = ("REG", "LOGIT", "RMANOVA")
TESTS_BY_FAMILY = {
    "REG": ("partial_F", "t", "wald"),
    "LOGIT": ("wald",),
    "RMANOVA": ("rm_anova_F",),
}
EFFECTS = ("A", "B", "AB")
# Logistic regression draws from the alternative feature distribution.
DEFAULT_DESIGNS = {"REG": "D_O", "LOGIT": "D_A", "RMANOVA": "D_O"}


class SpecificationError(ValueError):
    """
    A design, hypothesis, or model family is inconsistent.
    """


class SingularFitError(np.linalg.LinAlgError):
    """
    The design matrix of a least squares fit is rank-deficient.
    """


class DegenerateTestError(ValueError):
    """
    The covariance block of a Wald test cannot be inverted.
    """


class NonConvergenceError(RuntimeError):
    """
    Iteratively reweighted least squares did not converge, e.g. due to separation.
    """


@dataclasses.dataclass(frozen=True)
class ColumnSpec:
    """
    Distribution of a single predictor column.

    Args:
        kind: One of :code:`normal`, :code:`categorical`, or :code:`product`.
        mu: Mean of a normal column.
        sigma: Standard deviation of a normal column.
        levels: Values a categorical column takes with equal probability.
        factors: Pair of 1-based indices of earlier columns whose elementwise product this
            column is.
    """
    kind: typing.Literal["normal", "categorical", "product"]
    mu: float = 0.0
    sigma: float = 1.0
    levels: tuple[float, ...] = ()
    factors: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == "normal":
            if self.sigma < 0:
                raise SpecificationError(f"normal column needs sigma >= 0 but got {self.sigma}")
        elif self.kind == "categorical":
            if not self.levels:
                raise SpecificationError("categorical column needs at least one level")
            object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))
        elif self.kind == "product":
            if len(self.factors) != 2:
                raise SpecificationError(f"product column needs two factors but got "
                                         f"{self.factors}")
            object.__setattr__(self, "factors", tuple(int(x) for x in self.factors))
        else:
            raise SpecificationError(f"unknown column kind {self.kind}")

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0) -> "ColumnSpec":
        return cls("normal", mu=mu, sigma=sigma)

    @classmethod
    def categorical(cls, levels: typing.Sequence[float]) -> "ColumnSpec":
        return cls("categorical", levels=tuple(levels))

    @classmethod
    def product(cls, i: int, j: int) -> "ColumnSpec":
        return cls("product", factors=(i, j))

    def sample(self, columns: list[np.ndarray], n: int, rng: Rng) -> np.ndarray:
        """
        Draw `n` values given the previously generated columns.
        """
        if self.kind == "normal":
            return sample_normal(self.mu, self.sigma, n, rng)
        elif self.kind == "categorical":
            return sample_categorical(self.levels, n, rng)
        i, j = self.factors
        return columns[i - 1] * columns[j - 1]

    def to_dict(self) -> dict:
        if self.kind == "normal":
            return {"kind": "normal", "mu": self.mu, "sigma": self.sigma}
        elif self.kind == "categorical":
            return {"kind": "categorical", "levels": list(self.levels)}
        return {"kind": "product", "of": list(self.factors)}

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnSpec":
        data = dict(data)
        kind = data.pop("kind", None)
        try:
            if kind == "normal":
                return cls.normal(**data)
            elif kind == "categorical":
                return cls.categorical(**data)
            elif kind == "product":
                return cls.product(*data.pop("of"), **data)
        except TypeError as ex:
            raise SpecificationError(f"invalid {kind} column {data}: {ex}") from ex
        raise SpecificationError(f"unknown column kind {kind}")


@dataclasses.dataclass(frozen=True)
class DesignSpec:
    """
    Ordered column distributions of a design matrix with `k` predictors.
    """
    columns: tuple[ColumnSpec, ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        for position, column in enumerate(self.columns, 1):
            if column.kind == "product" and \
                    not all(1 <= factor < position for factor in column.factors):
                raise SpecificationError(
                    f"product column {position} must reference earlier columns but got "
                    f"{column.factors}"
                )

    @property
    def num_predictors(self) -> int:
        return len(self.columns)

    def truncate(self, k: int) -> "DesignSpec":
        """
        Select the first `k` predictors, preserving column order.
        """
        if not 1 <= k <= self.num_predictors:
            raise SpecificationError(f"cannot select {k} of {self.num_predictors} predictors")
        return DesignSpec(self.columns[:k], self.name)

    def factor_dependencies(self, index: int) -> frozenset[str]:
        """
        Within-subject factors (:code:`A` for column 1, :code:`B` for column 2) the 1-based
        column `index` depends on, following product references.
        """
        if index == 1:
            return frozenset("A")
        elif index == 2:
            return frozenset("B")
        column = self.columns[index - 1]
        if column.kind != "product":
            return frozenset()
        return frozenset().union(*(self.factor_dependencies(i) for i in column.factors))

    def to_dict(self) -> dict:
        return {"name": self.name, "columns": [column.to_dict() for column in self.columns]}

    @classmethod
    def from_dict(cls, data: dict) -> "DesignSpec":
        return cls(tuple(ColumnSpec.from_dict(column) for column in data["columns"]),
                   data.get("name", "custom"))


N, C, P = ColumnSpec.normal, ColumnSpec.categorical, ColumnSpec.product
D_O = DesignSpec((
    C([-1, 1]), N(0, 1), P(1, 2), N(0, 2), P(4, 2),
    C([0, 1, 2]), N(0, 2), P(6, 7), N(0, 1), P(2, 6),
    N(0, 3), N(0, 1), P(1, 11), N(0, 2), P(11, 12),
    N(0, 2), N(0, 2), P(11, 14), N(0, 1), P(6, 16),
), "D_O")
D_A = DesignSpec((
    N(0, 1), C([-1, 1]), N(0, 1), N(0, 1), P(2, 1),
    P(2, 3), P(2, 4), N(0, 1), N(0, 1), P(2, 8),
    N(0, 3), N(0, 1), P(1, 11), N(0, 2), P(11, 12),
    N(0, 2), N(0, 2), P(11, 14), N(0, 1), P(6, 16),
), "D_A")
del N, C, P
DESIGN_SPECS = {"D_O": D_O, "D_A": D_A}
DEFAULT_ERROR = ColumnSpec.normal(0, 1)


def get_design_spec(name: str, num_predictors: int) -> DesignSpec:
    """
    Look up a named design (:code:`D_O` or :code:`D_A`) truncated to the first predictors.
    """
    try:
        spec = DESIGN_SPECS[name]
    except KeyError:
        raise SpecificationError(f"unknown design {name}; choose one of {list(DESIGN_SPECS)}")
    return spec.truncate(num_predictors)


@dataclasses.dataclass(frozen=True)
class Hypothesis:
    """
    Null hypothesis that the coefficients at the 1-based `tested_indices` are zero.
    """
    tested_indices: tuple[int, ...]
    test: typing.Literal["partial_F", "wald", "rm_anova_F", "t"]

    def __post_init__(self):
        indices = tuple(sorted(set(int(i) for i in self.tested_indices)))
        if not indices:
            raise SpecificationError("hypothesis must test at least one coefficient")
        if self.test not in {"partial_F", "wald", "rm_anova_F", "t"}:
            raise SpecificationError(f"unknown test {self.test}")
        if self.test == "t" and len(indices) != 1:
            raise SpecificationError(f"t test needs a single coefficient but got {indices}")
        object.__setattr__(self, "tested_indices", indices)

    def validate(self, num_predictors: int) -> None:
        if not all(1 <= i <= num_predictors for i in self.tested_indices):
            raise SpecificationError(f"tested indices {self.tested_indices} exceed the "
                                     f"{num_predictors} predictors")

    def to_dict(self) -> dict:
        return {"tested_indices": list(self.tested_indices), "test": self.test}

    @classmethod
    def from_dict(cls, data: dict) -> "Hypothesis":
        return cls(tuple(data["tested_indices"]), data["test"])


# Hypotheses used throughout: H_O tests coefficients 1 and 3, the alternative 1, 7, and 8.
H_O_INDICES = (1, 3)
H_O_PRIME_INDICES = (1, 7, 8)


@dataclasses.dataclass(frozen=True)
class ModelFamily:
    """
    Model family with its test, and the two within-subject factor levels for RMANOVA.
    """
    tag: typing.Literal["REG", "LOGIT", "RMANOVA"]
    rmanova_layout: tuple[int, int] = (2, 2)

    def __post_init__(self):
        if self.tag not in FAMILIES:
            raise SpecificationError(f"unknown model family {self.tag}")
        layout = tuple(int(x) for x in self.rmanova_layout)
        if len(layout) != 2 or min(layout) < 2:
            raise SpecificationError(f"RMANOVA needs two within-subject factors with at least "
                                     f"two levels each but got {layout}")
        object.__setattr__(self, "rmanova_layout", layout)

    @property
    def default_test(self) -> str:
        return TESTS_BY_FAMILY[self.tag][0]

    @property
    def default_design(self) -> str:
        return DEFAULT_DESIGNS[self.tag]

    @property
    def num_conditions(self) -> int:
        a, b = self.rmanova_layout
        return a * b

    def hypothesis(self, tested_indices: typing.Sequence[int], test: str = None) -> Hypothesis:
        return Hypothesis(tuple(tested_indices), test or self.default_test)

    def validate(self, spec: DesignSpec, hypothesis: Hypothesis) -> None:
        """
        Check that the hypothesis can be tested for this family and design.
        """
        hypothesis.validate(spec.num_predictors)
        if hypothesis.test not in TESTS_BY_FAMILY[self.tag]:
            raise SpecificationError(f"{self.tag} does not support the {hypothesis.test} test; "
                                     f"choose one of {TESTS_BY_FAMILY[self.tag]}")
        if self.tag == "RMANOVA":
            within_subject_effects(spec, hypothesis)

    def to_dict(self) -> dict:
        return {"tag": self.tag, "rmanova_layout": list(self.rmanova_layout)}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelFamily":
        return cls(data["tag"], tuple(data.get("rmanova_layout", (2, 2))))


def generate_design(spec: DesignSpec, n: int, rng: Rng) -> np.ndarray:
    """
    Draw a design matrix with one row per sample and one column per predictor.

    Args:
        spec: Column distributions.
        n: Number of samples.
        rng: Random number stream or generator; columns are drawn in order.

    Returns:
        design: Matrix with shape `(n, k)`.
    """
    if n < 0:
        raise ValueError(f"number of samples must be non-negative but got {n}")
    generator = as_generator(rng)
    columns = []
    for column in spec.columns:
        columns.append(column.sample(columns, n, generator))
    return np.column_stack(columns) if columns else np.empty((n, 0))


def factor_codes(levels: int) -> np.ndarray:
    """
    Equally spaced codes in [-1, 1] for the levels of a within-subject factor.
    """
    return np.linspace(-1, 1, levels)


def condition_design(spec: DesignSpec, design: np.ndarray, layout: tuple[int, int]) \
        -> np.ndarray:
    """
    Evaluate each subject's design row under every condition of a two-factor within-subject
    layout: the first two columns take the factor-level codes and product columns are recomputed.

    Args:
        spec: Column distributions of the subject-level design.
        design: Subject-level design with shape `(n, k)`.
        layout: Number of levels of factors A and B.

    Returns:
        design: Array with shape `(n, a * b, k)`; conditions are ordered with factor A varying
            slowest.
    """
    n, k = design.shape
    a, b = layout
    result = np.repeat(design[:, None, :], a * b, axis=1)
    for c, (code_a, code_b) in enumerate(it.product(factor_codes(a), factor_codes(b))):
        for index, code in [(1, code_a), (2, code_b)][:k]:
            result[:, c, index - 1] = code
        for index, column in enumerate(spec.columns, 1):
            if column.kind == "product":
                i, j = column.factors
                result[:, c, index - 1] = result[:, c, i - 1] * result[:, c, j - 1]
    return result


def generate_response(family: ModelFamily, design: np.ndarray, beta: np.ndarray, rng: Rng,
                      error: ColumnSpec = None, spec: DesignSpec = None) -> np.ndarray:
    """
    Draw responses for a design under one of the model families.

    Args:
        family: Model family.
        design: Design matrix with shape `(n, k)`.
        beta: Coefficients with length `k`.
        rng: Random number stream or generator; noise is the first draw.
        error: Distribution of the additive error (defaults to standard normal).
        spec: Column distributions, required for RMANOVA to evaluate condition designs.

    Returns:
        response: Vector of length `n` for REG and LOGIT, and matrix with shape `(n, a * b)` for
            RMANOVA.
    """
    design = np.asarray(design, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if design.ndim != 2 or design.shape[1] != beta.size:
        raise ValueError(f"design with shape {design.shape} does not match {beta.size} "
                         "coefficients")
    error = error or DEFAULT_ERROR
    if error.kind == "product":
        raise SpecificationError("error distribution cannot be a product column")
    generator = as_generator(rng)
    n = design.shape[0]

    if family.tag == "REG":
        return design @ beta + error.sample([], n, generator)
    elif family.tag == "LOGIT":
        proba = special.expit(design @ beta)
        return (generator.random(n) < proba).astype(float)
    elif family.tag == "RMANOVA":
        if spec is None:
            raise ValueError("RMANOVA responses require the design spec")
        conditions = condition_design(spec, design, family.rmanova_layout)
        m = conditions.shape[1]
        noise = error.sample([], n * m, generator).reshape(n, m)
        subject = sample_normal(0, 1, n, generator)
        return conditions @ beta + subject[:, None] + noise
    raise NotImplementedError(family.tag)


@dataclasses.dataclass
class OlsFit:
    """
    Ordinary least squares fit with intercept. Parameters are ordered intercept first so the
    1-based coefficient index `i` is at position `i`.
    """
    params: np.ndarray
    covariance: np.ndarray
    rss: float
    df_residual: int

    @property
    def intercept(self) -> float:
        return self.params[0]

    @property
    def coefficients(self) -> np.ndarray:
        return self.params[1:]

    @property
    def residual_variance(self) -> float:
        return self.rss / self.df_residual


def fit_ols(design: np.ndarray, response: np.ndarray) -> OlsFit:
    """
    Fit a linear regression model with intercept by least squares.

    Args:
        design: Design matrix with shape `(n, k)`; `k` may be zero for an intercept-only model.
        response: Response vector with length `n`.

    Returns:
        fit: Coefficients, their covariance, residual sum of squares and degrees of freedom.
    """
    response = np.asarray(response, dtype=float)
    n = response.size
    design = np.asarray(design, dtype=float).reshape(n, -1)
    k = design.shape[1]
    if n <= k + 1:
        raise ValueError(f"need more than {k + 1} samples to fit {k} predictors and an intercept "
                         f"but got {n}")
    features = np.column_stack([np.ones(n), design])
    params, _, rank, _ = np.linalg.lstsq(features, response, rcond=None)
    if rank < k + 1:
        raise SingularFitError(f"design has rank {rank} but {k + 1} parameters")
    residuals = response - features @ params
    rss = float(residuals @ residuals)
    df_residual = n - k - 1
    covariance = rss / df_residual * np.linalg.inv(features.T @ features)
    return OlsFit(params, covariance, rss, df_residual)


def partial_f_test(full_fit: OlsFit, reduced_fit: OlsFit, num_samples: int = None) -> float:
    """
    Nested-model F test of the full model against a reduced model without the tested predictors.

    Args:
        full_fit: Fit of the full model.
        reduced_fit: Fit of the model with the tested predictors removed.
        num_samples: Number of samples, checked against the degrees of freedom if given.

    Returns:
        pvalue: Probability of an F statistic at least as large under the null hypothesis.
    """
    q = full_fit.params.size - reduced_fit.params.size
    if q < 0:
        raise ValueError("reduced model has more parameters than the full model")
    if num_samples is not None and num_samples != full_fit.df_residual + full_fit.params.size:
        raise ValueError(f"{num_samples} samples are inconsistent with the full fit")
    improvement = reduced_fit.rss - full_fit.rss
    if q == 0 or improvement <= 0:
        return 1.0
    if full_fit.rss == 0:
        return 0.0
    statistic = (improvement / q) / full_fit.residual_variance
    return float(1 - f_cdf(statistic, q, full_fit.df_residual))


def t_test(fit: OlsFit, index: int) -> float:
    """
    Two-sided t test that the coefficient at the 1-based `index` is zero.
    """
    estimate = fit.params[index]
    se = np.sqrt(fit.covariance[index, index])
    if estimate == 0:
        return 1.0
    if se == 0:
        return 0.0
    return float(2 * t_cdf(-abs(estimate / se), fit.df_residual))


@dataclasses.dataclass
class LogisticFit:
    """
    Logistic regression fit with intercept first, see :class:`OlsFit`.
    """
    params: np.ndarray
    covariance: typing.Optional[np.ndarray]
    converged: bool
    num_iterations: int

    @property
    def intercept(self) -> float:
        return self.params[0]

    @property
    def coefficients(self) -> np.ndarray:
        return self.params[1:]


def fit_logistic_irls(design: np.ndarray, response: np.ndarray, max_iter: int = 50,
                      tol: float = 1e-8) -> LogisticFit:
    """
    Fit a logistic regression model with intercept by iteratively reweighted least squares.

    Args:
        design: Design matrix with shape `(n, k)`.
        response: Binary response vector with length `n`.
        max_iter: Maximum number of Newton steps.
        tol: Convergence threshold for the largest absolute parameter update.

    Returns:
        fit: Coefficients, covariance (inverse Fisher information at the optimum), and whether the
            iterations converged. Separated data are reported as not converged.
    """
    response = np.asarray(response, dtype=float)
    n = response.size
    if not np.all((response == 0) | (response == 1)):
        raise ValueError("logistic regression requires a binary response")
    design = np.asarray(design, dtype=float).reshape(n, -1)
    features = np.column_stack([np.ones(n), design])
    params = np.zeros(features.shape[1])
    converged = False
    iteration = 0

    # A single observed class is perfectly separated by the intercept alone.
    if 0 < response.sum() < n:
        for iteration in range(1, max_iter + 1):
            proba = special.expit(features @ params)
            weights = proba * (1 - proba)
            hessian = features.T @ (weights[:, None] * features)
            try:
                step = np.linalg.solve(hessian, features.T @ (response - proba))
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(step)):
                break
            params = params + step
            if np.max(np.abs(step)) < tol:
                converged = True
                break

    covariance = None
    if converged:
        proba = special.expit(features @ params)
        weights = proba * (1 - proba)
        try:
            covariance = np.linalg.inv(features.T @ (weights[:, None] * features))
        except np.linalg.LinAlgError:
            converged = False
    return LogisticFit(params, covariance, converged, iteration)


def wald_test(coefficients: np.ndarray, covariance: np.ndarray,
              tested_indices: typing.Sequence[int]) -> float:
    """
    Wald chi-square test that a subset of coefficients is zero.

    Args:
        coefficients: Parameter vector with the intercept first.
        covariance: Covariance of the parameter vector.
        tested_indices: 1-based indices of the tested coefficients.

    Returns:
        pvalue: Chi-square tail probability of the Wald statistic.
    """
    index = np.asarray(tested_indices, dtype=int)
    estimate = np.asarray(coefficients)[index]
    block = np.asarray(covariance)[np.ix_(index, index)]
    if not np.any(estimate):
        return 1.0
    if not np.all(np.isfinite(block)) or np.linalg.cond(block) > 1 / np.finfo(float).eps:
        raise DegenerateTestError(f"covariance of coefficients {tuple(tested_indices)} is "
                                  "singular")
    statistic = float(estimate @ np.linalg.solve(block, estimate))
    return float(1 - chisq_cdf(statistic, index.size))


def rmanova_table(responses: np.ndarray, layout: tuple[int, int]) -> dict[str, dict]:
    """
    Classical two-factor within-subjects decomposition. Each effect is tested against its
    interaction with subjects.

    Args:
        responses: Matrix with shape `(n, a * b)` with factor A varying slowest over columns.
        layout: Number of levels of factors A and B.

    Returns:
        table: Mapping from effect (:code:`A`, :code:`B`, :code:`AB`) to sums of squares, degrees
            of freedom, F statistic and p-value.
    """
    responses = np.asarray(responses, dtype=float)
    a, b = layout
    n, m = responses.shape
    if m != a * b:
        raise ValueError(f"expected {a * b} conditions for layout {layout} but got {m}")
    if n < 2:
        raise ValueError(f"need at least two subjects but got {n}")
    y = responses.reshape(n, a, b)

    grand = y.mean()
    subject = y.mean(axis=(1, 2))
    mean_a = y.mean(axis=(0, 2))
    mean_b = y.mean(axis=(0, 1))
    mean_ab = y.mean(axis=0)
    mean_sa = y.mean(axis=2)
    mean_sb = y.mean(axis=1)

    residual_a = mean_sa - subject[:, None] - mean_a + grand
    residual_b = mean_sb - subject[:, None] - mean_b + grand
    residual_ab = y - mean_sa[:, :, None] - mean_sb[:, None, :] - mean_ab \
        + subject[:, None, None] + mean_a[:, None] + mean_b - grand
    interaction = mean_ab - mean_a[:, None] - mean_b + grand
    sums = {
        "A": (n * b * np.sum((mean_a - grand) ** 2), b * np.sum(residual_a ** 2), a - 1),
        "B": (n * a * np.sum((mean_b - grand) ** 2), a * np.sum(residual_b ** 2), b - 1),
        "AB": (n * np.sum(interaction ** 2), np.sum(residual_ab ** 2), (a - 1) * (b - 1)),
    }

    tiny = 1e-12 * np.sum((y - grand) ** 2)
    table = {}
    for effect, (ss, ss_error, df) in sums.items():
        df_error = df * (n - 1)
        if ss <= tiny:
            statistic, pvalue = 0.0, 1.0
        elif ss_error <= tiny:
            statistic, pvalue = np.inf, 0.0
        else:
            statistic = (ss / df) / (ss_error / df_error)
            pvalue = float(1 - f_cdf(statistic, df, df_error))
        table[effect] = {"ss": ss, "ss_error": ss_error, "df": df, "df_error": df_error,
                         "F": statistic, "p": pvalue}
    return table


def rmanova_f_test(responses: np.ndarray, layout: tuple[int, int]) -> dict[str, float]:
    """
    P-values of the within-subject effects :code:`A`, :code:`B`, and :code:`AB`.
    """
    return {effect: row["p"] for effect, row in rmanova_table(responses, layout).items()}


def within_subject_effects(spec: DesignSpec, hypothesis: Hypothesis) -> list[str]:
    """
    Within-subject effects targeted by a hypothesis. Tested columns that depend on neither
    factor do not vary across conditions and carry no within-subject effect.
    """
    effects = set()
    for index in hypothesis.tested_indices:
        dependencies = spec.factor_dependencies(index)
        if dependencies == {"A", "B"}:
            effects.add("AB")
        elif dependencies:
            effects.update(dependencies)
    if not effects:
        raise SpecificationError(f"coefficients {hypothesis.tested_indices} do not vary across "
                                 "within-subject conditions")
    return [effect for effect in EFFECTS if effect in effects]


def evaluate_p_value(family: ModelFamily, spec: DesignSpec, hypothesis: Hypothesis,
                     design: np.ndarray, response: np.ndarray) -> float:
    """
    Fit the family's model and test the hypothesis.

    Raises:
        SingularFitError: If a least squares design is rank-deficient.
        NonConvergenceError: If the logistic fit does not converge.
        DegenerateTestError: If the Wald covariance block is singular.
    """
    indices = hypothesis.tested_indices
    if family.tag == "REG":
        full = fit_ols(design, response)
        if hypothesis.test == "partial_F":
            reduced = fit_ols(np.delete(design, np.asarray(indices) - 1, axis=1), response)
            return partial_f_test(full, reduced)
        elif hypothesis.test == "t":
            return t_test(full, indices[0])
        return wald_test(full.params, full.covariance, indices)
    elif family.tag == "LOGIT":
        fit = fit_logistic_irls(design, response)
        if not fit.converged:
            raise NonConvergenceError(f"logistic fit did not converge after "
                                      f"{fit.num_iterations} iterations")
        return wald_test(fit.params, fit.covariance, indices)
    elif family.tag == "RMANOVA":
        effects = within_subject_effects(spec, hypothesis)
        pvalues = rmanova_f_test(response, family.rmanova_layout)
        # Bonferroni correction over the targeted effects.
        return min(1.0, len(effects) * min(pvalues[effect] for effect in effects))
    raise NotImplementedError(family.tag)
