"""
Deterministic random streams and the distribution functions the hypothesis tests depend on.
"""
import dataclasses
import numpy as np
from scipy import integrate, special, stats
import typing


MAX_SEED = 2 ** 64
Rng = typing.Union["RngStream", np.random.Generator]


@dataclasses.dataclass(frozen=True)
class RngStream:
    """
    Value-type handle for a random number stream identified by a master seed and a path of
    indices. Streams are backed by the counter-based Philox generator keyed through
    :class:`numpy.random.SeedSequence`, so any stream can be reconstructed independently of all
    others, e.g. in a different process.

    Args:
        master_seed: Unsigned 64-bit master seed.
        path: Sequence of non-negative indices identifying a substream.
    """
    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < MAX_SEED:
            raise ValueError(f"master seed must be a 64-bit unsigned integer but got "
                             f"{self.master_seed}")
        path = tuple(int(index) for index in self.path)
        if any(not 0 <= index < MAX_SEED for index in path):
            raise ValueError(f"stream path indices must be 64-bit unsigned integers but got {path}")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        object.__setattr__(self, "path", path)

    def spawn(self, *indices: int) -> "RngStream":
        """
        Derive a substream by appending indices to the path.
        """
        return RngStream(self.master_seed, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        """
        Create a fresh generator positioned at the start of this stream.
        """
        seed_sequence = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seed_sequence))

    def integer_seed(self) -> int:
        """
        Draw a 31-bit integer seed from the stream for libraries that expect an integer.
        """
        return int(self.generator().integers(2 ** 31 - 1))


def as_generator(rng: Rng) -> np.random.Generator:
    """
    Obtain a generator from a stream or pass a generator through unchanged so consecutive draws
    continue the same sequence.
    """
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected an RngStream or numpy Generator but got {type(rng)}")


def sample_normal(mu: float, sigma: float, n: int, rng: Rng) -> np.ndarray:
    """
    Draw independent samples from a normal distribution.

    Args:
        mu: Mean of the distribution.
        sigma: Standard deviation of the distribution; zero yields the constant `mu`.
        n: Number of samples.
        rng: Random number stream or generator.

    Returns:
        samples: Vector of `n` samples.
    """
    if sigma < 0:
        raise ValueError(f"standard deviation must be non-negative but got {sigma}")
    if n < 0:
        raise ValueError(f"number of samples must be non-negative but got {n}")
    generator = as_generator(rng)
    if sigma == 0:
        return np.full(n, float(mu))
    return generator.normal(mu, sigma, n)


def sample_categorical(levels: typing.Sequence[float], n: int, rng: Rng) -> np.ndarray:
    """
    Draw uniformly from a set of levels, e.g. :code:`[-1, 1]` draws each value with probability
    one half.

    Args:
        levels: Non-empty sequence of values.
        n: Number of samples.
        rng: Random number stream or generator.

    Returns:
        samples: Vector of `n` samples.
    """
    levels = np.asarray(levels, dtype=float)
    if levels.size == 0:
        raise ValueError("categorical distribution requires at least one level")
    if n < 0:
        raise ValueError(f"number of samples must be non-negative but got {n}")
    generator = as_generator(rng)
    return levels[generator.integers(levels.size, size=n)]


def _check_df(**dfs: float) -> None:
    for name, df in dfs.items():
        if not np.all(np.asarray(df) > 0):
            raise ValueError(f"degrees of freedom {name} must be positive but got {df}")


def _maybe_scalar(x: np.ndarray) -> typing.Union[float, np.ndarray]:
    return x.item() if x.ndim == 0 else x


def t_cdf(x: float, df: float) -> float:
    """
    Cumulative distribution function of Student's t distribution, evaluated through the
    regularized incomplete beta function.
    """
    _check_df(df=df)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        z = df / (df + x ** 2)
    tail = special.betainc(df / 2, 0.5, z) / 2
    return _maybe_scalar(np.where(x < 0, tail, 1 - tail))


def f_cdf(x: float, df1: float, df2: float) -> float:
    """
    Cumulative distribution function of the F distribution, evaluated through the regularized
    incomplete beta function.
    """
    _check_df(df1=df1, df2=df2)
    x = np.clip(np.asarray(x, dtype=float), 0, None)
    with np.errstate(invalid="ignore"):
        z = np.where(np.isinf(x), 1.0, df1 * x / (df1 * x + df2))
    return _maybe_scalar(special.betainc(df1 / 2, df2 / 2, z))


def chisq_cdf(x: float, df: float) -> float:
    """
    Cumulative distribution function of the chi-square distribution, evaluated through the
    regularized lower incomplete gamma function.
    """
    _check_df(df=df)
    x = np.clip(np.asarray(x, dtype=float), 0, None)
    return _maybe_scalar(special.gammainc(df / 2, x / 2))


def _noncentral_f_sf_series(x: float, df1: float, df2: float, noncentrality: float) -> float:
    # Poisson mixture of central F tail probabilities, truncated far in the Poisson tails.
    half = noncentrality / 2
    spread = 12 * np.sqrt(half) + 12
    j = np.arange(max(0, int(np.floor(half - spread))), int(np.ceil(half + spread)) + 1)
    if half == 0:
        weights = (j == 0).astype(float)
    else:
        weights = np.exp(j * np.log(half) - half - special.gammaln(j + 1))
    z = df1 * x / (df1 * x + df2)
    tails = 1 - special.betainc(df1 / 2 + j, df2 / 2, z)
    return float(np.sum(weights * tails))


def _noncentral_f_sf_quadrature(x: float, df1: float, df2: float, noncentrality: float) -> float:
    # Condition on the denominator chi-square and integrate the noncentral chi-square tail.
    if noncentrality == 0:
        numerator = stats.chi2(df1)
    else:
        numerator = stats.ncx2(df1, noncentrality)
    denominator = stats.chi2(df2)

    def integrand(v):
        return denominator.pdf(v) * numerator.sf(x * df1 * v / df2)

    value, _ = integrate.quad(integrand, 0, np.inf, epsabs=1e-12, epsrel=1e-10, limit=500)
    return value


def analytic_power_oracle(test: typing.Literal["t", "F"], df1: int, df2: int,
                          noncentrality: float, alpha: float,
                          method: typing.Literal["series", "quadrature"] = "series") -> float:
    """
    Evaluate the exact rejection probability of a test under its noncentral distribution.

    Args:
        test: Two-sided :code:`t` test or :code:`F` test.
        df1: Numerator degrees of freedom (must be one for the t test).
        df2: Denominator degrees of freedom (degrees of freedom of the t test).
        noncentrality: Noncentrality parameter :math:`\\delta` of the t statistic or
            :math:`\\lambda` of the F statistic.
        alpha: Significance level.
        method: Poisson-mixture :code:`series` expansion or adaptive :code:`quadrature` over
            the denominator chi-square.

    Returns:
        power: Probability of rejecting the null hypothesis.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"significance level must be in (0, 1) but got {alpha}")
    if noncentrality < 0:
        raise ValueError(f"noncentrality must be non-negative but got {noncentrality}")
    _check_df(df1=df1, df2=df2)
    if test == "t":
        if df1 != 1:
            raise ValueError(f"t test has one numerator degree of freedom but got {df1}")
        # A two-sided t test rejects iff the squared statistic exceeds the F(1, df) quantile.
        noncentrality = noncentrality ** 2
    elif test != "F":
        raise ValueError(f"unknown test {test}")
    if np.isinf(noncentrality):
        return 1.0

    critical = special.fdtri(df1, df2, 1 - alpha)
    if method == "series":
        power = _noncentral_f_sf_series(critical, df1, df2, noncentrality)
    elif method == "quadrature":
        power = _noncentral_f_sf_quadrature(critical, df1, df2, noncentrality)
    else:
        raise ValueError(f"unknown method {method}")
    return float(np.clip(power, 0, 1))
