"""Maximum-likelihood fitting and forecast-quality metrics.

For the independent-Poisson families the log likelihood separates into a
home and an away regression, each maximised by a safeguarded Newton
iteration with analytic gradient and Hessian.  The bivariate family is
maximised jointly (L-BFGS warm start, Newton polish) with the covariance
kept positive through a log reparameterisation.  Convergence always
means: 2-norm of the log-likelihood gradient below the tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .domain import MAX_GOALS, Outcome, Score, outcome
from .errors import (
    BootstrapUnstableError,
    InvalidInputError,
    InvalidParameterError,
    UnsupportedFamilyError,
)
from .model import (
    FAMILY_BASELINE,
    FAMILY_BIVARIATE,
    FOUR_PARAM_FAMILIES,
    SIX_PARAM_FAMILIES,
    BaselineTable,
    ModelParams,
    baseline_pmf,
    score_pmf,
)

DEFAULT_TOLERANCE = 1e-8
_MAX_NEWTON_ITER = 500


@dataclass(frozen=True)
class MatchObservation:
    season: str
    home_rating: float
    away_rating: float
    score: Score

    def __post_init__(self) -> None:
        if self.home_rating <= 0 or self.away_rating <= 0:
            raise InvalidInputError("ratings must be positive")
        if self.score.home_goals > MAX_GOALS or self.score.away_goals > MAX_GOALS:
            raise InvalidInputError(f"goals above the {MAX_GOALS} cap")


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    log_likelihood: float
    converged: bool
    iterations: int
    gradient_norm: float
    bootstrap_ci: Mapping[str, tuple[float, float]] | None = None


def param_names(family: str) -> tuple[str, ...]:
    """Free-parameter layout used by gradients and bootstrap intervals."""
    if family in FOUR_PARAM_FAMILIES:
        return ("alpha_h", "alpha_a", "beta_h", "beta_a")
    if family in SIX_PARAM_FAMILIES:
        return ("alpha_h", "alpha_a", "beta_h", "beta_a", "gamma_h", "gamma_a")
    if family == FAMILY_BIVARIATE:
        return ("alpha_h", "alpha_a", "beta_h", "beta_a", "gamma_h", "gamma_a", "c")
    raise UnsupportedFamilyError(f"family {family!r} has no free parameters")


def _arrays(data: Sequence[MatchObservation]):
    rh = np.array([o.home_rating for o in data])
    ra = np.array([o.away_rating for o in data])
    h = np.array([o.score.home_goals for o in data], dtype=np.int64)
    a = np.array([o.score.away_goals for o in data], dtype=np.int64)
    return rh, ra, h, a


def log_likelihood(p: ModelParams, data: Sequence[MatchObservation]) -> float:
    """Sum of log score probabilities; -inf if any observation has mass 0."""
    if not data:
        raise InvalidInputError("log likelihood needs at least one observation")
    total = 0.0
    for o in data:
        prob = score_pmf(p, o.home_rating, o.away_rating, o.score)
        if prob <= 0.0 or math.isnan(prob):
            return -math.inf
        total += math.log(prob)
    return total


def _bivariate_ek(h, a, lam_h, lam_a, c):
    """Posterior mean of the shared component, elementwise over matches."""
    ek = np.zeros_like(lam_h)
    for i in range(len(ek)):
        kmax = min(h[i], a[i])
        if kmax == 0 or c == 0.0:
            continue
        ks = np.arange(kmax + 1)
        logt = (
            (h[i] - ks) * math.log(lam_h[i])
            + (a[i] - ks) * math.log(lam_a[i])
            + ks * math.log(c)
            - gammaln(h[i] - ks + 1)
            - gammaln(a[i] - ks + 1)
            - gammaln(ks + 1)
        )
        wts = np.exp(logt - logt.max())
        ek[i] = float((ks * wts).sum() / wts.sum())
    return ek


def log_likelihood_gradient(p: ModelParams, data: Sequence[MatchObservation]) -> np.ndarray:
    """Analytic gradient of :func:`log_likelihood` in ``param_names`` order."""
    names = param_names(p.family)
    rh, ra, h, a = _arrays(data)
    xh = rh - p.gamma_h * ra
    xa = ra - p.gamma_a * rh
    lam_h = np.exp(p.alpha_h + p.beta_h * xh)
    lam_a = np.exp(p.alpha_a + p.beta_a * xa)

    if p.family == FAMILY_BIVARIATE:
        ek = _bivariate_ek(h, a, lam_h, lam_a, p.c)
        res_h = (h - ek) / lam_h - 1.0
        res_a = (a - ek) / lam_a - 1.0
        dl_h = res_h * lam_h
        dl_a = res_a * lam_a
        if p.c > 0.0:
            dc = float(np.sum(ek / p.c - 1.0))
        else:
            dc = float(np.sum(h * a / (lam_h * lam_a) - 1.0))
    else:
        dl_h = h - lam_h
        dl_a = a - lam_a
        dc = 0.0

    grad = {
        "alpha_h": float(dl_h.sum()),
        "alpha_a": float(dl_a.sum()),
        "beta_h": float((dl_h * xh).sum()),
        "beta_a": float((dl_a * xa).sum()),
        "gamma_h": float((dl_h * (-p.beta_h * ra)).sum()),
        "gamma_a": float((dl_a * (-p.beta_a * rh)).sum()),
        "c": dc,
    }
    return np.array([grad[n] for n in names])


def _side_ll_grad_hess(theta, y, r_own, r_opp, six_param):
    if six_param:
        alpha, beta, gamma = theta
    else:
        alpha, beta = theta
        gamma = 1.0
    x = r_own - gamma * r_opp
    eta = alpha + beta * x
    lam = np.exp(np.clip(eta, -700, 60))
    ll = float((y * eta - lam).sum())
    res = y - lam
    if six_param:
        grads = np.stack([np.ones_like(x), x, -beta * r_opp])
    else:
        grads = np.stack([np.ones_like(x), x])
    g = grads @ res
    hess = -(grads * lam) @ grads.T
    if six_param:
        # eta has the single mixed second derivative d2/(d beta d gamma) = -r_opp
        cross = float((res * (-r_opp)).sum())
        hess[1, 2] += cross
        hess[2, 1] += cross
    return ll, g, hess


def _newton_maximize(f, theta0, tol, max_iter=_MAX_NEWTON_ITER):
    """Safeguarded Newton ascent on f -> (value, grad, hess)."""
    theta = np.asarray(theta0, dtype=float)
    ll, g, hess = f(theta)
    it = 0
    while it < max_iter:
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol:
            return theta, ll, gnorm, it, True
        try:
            step = np.linalg.solve(hess, -g)
        except np.linalg.LinAlgError:
            step = g / max(1.0, np.linalg.norm(g))
        if not np.all(np.isfinite(step)):
            step = g / max(1.0, np.linalg.norm(g))
        # backtracking line search on the objective
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            ll_new, g_new, h_new = f(cand)
            if math.isfinite(ll_new) and ll_new >= ll - 1e-12:
                theta, ll, g, hess = cand, ll_new, g_new, h_new
                break
            t *= 0.5
        else:
            break  # no ascent direction left
        it += 1
    return theta, ll, float(np.linalg.norm(g)), it, float(np.linalg.norm(g)) < tol


def _fit_independent(data, family, tol):
    rh, ra, h, a = _arrays(data)
    six = family in SIX_PARAM_FAMILIES

    def start(y):
        return math.log(max(float(y.mean()), 1e-4))

    theta_h0 = [start(h), 0.0, 1.0][: 3 if six else 2]
    theta_a0 = [start(a), 0.0, 1.0][: 3 if six else 2]
    th, _, gh, ih, ch = _newton_maximize(
        lambda t: _side_ll_grad_hess(t, h, rh, ra, six), theta_h0, tol / math.sqrt(2)
    )
    ta, _, ga, ia, ca = _newton_maximize(
        lambda t: _side_ll_grad_hess(t, a, ra, rh, six), theta_a0, tol / math.sqrt(2)
    )
    params = ModelParams(
        family=family,
        alpha_h=float(th[0]),
        alpha_a=float(ta[0]),
        beta_h=float(th[1]),
        beta_a=float(ta[1]),
        gamma_h=float(th[2]) if six else 1.0,
        gamma_a=float(ta[2]) if six else 1.0,
    )
    return params, math.hypot(gh, ga), ih + ia, ch and ca


def _theta_to_params(theta) -> ModelParams:
    return ModelParams(
        family=FAMILY_BIVARIATE,
        alpha_h=float(theta[0]),
        alpha_a=float(theta[1]),
        beta_h=float(theta[2]),
        beta_a=float(theta[3]),
        gamma_h=float(theta[4]),
        gamma_a=float(theta[5]),
        c=float(math.exp(theta[6])),
    )


def _fit_bivariate(data, tol):
    # warm start from the separable six-parameter fit
    p0, _, it0, _ = _fit_independent(data, SIX_PARAM_FAMILIES[0], 1e-6)

    def negll_and_grad(theta):
        p = _theta_to_params(theta)
        ll = log_likelihood(p, data)
        g = log_likelihood_gradient(p, data)
        g[6] *= p.c  # chain rule for the log reparameterisation
        return -ll, -g

    x0 = np.array([p0.alpha_h, p0.alpha_a, p0.beta_h, p0.beta_a,
                   p0.gamma_h, p0.gamma_a, math.log(0.05)])
    res = minimize(negll_and_grad, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-10})

    def f(theta):
        nll, ng = negll_and_grad(theta)
        # numerical Hessian of the negative log likelihood from the gradient
        k = len(theta)
        hess = np.zeros((k, k))
        eps = 1e-5
        for i in range(k):
            dt = np.zeros(k)
            dt[i] = eps
            _, gp = negll_and_grad(theta + dt)
            _, gm = negll_and_grad(theta - dt)
            hess[:, i] = (gp - gm) / (2 * eps)
        hess = 0.5 * (hess + hess.T)
        return -nll, -ng, -hess

    theta, ll, gnorm, it, conv = _newton_maximize(f, res.x, tol, max_iter=60)
    return _theta_to_params(theta), gnorm, it0 + int(res.nit) + it, conv


def fit_mle(
    data: Sequence[MatchObservation],
    family: str,
    tolerance: float = DEFAULT_TOLERANCE,
) -> FitResult:
    """Maximum-likelihood parameters for one family."""
    if family == FAMILY_BASELINE:
        raise UnsupportedFamilyError("the baseline family is a frequency table, not fitted")
    if len(data) < 50:
        raise InvalidInputError(f"need at least 50 observations, got {len(data)}")
    if family == FAMILY_BIVARIATE:
        params, gnorm, iters, conv = _fit_bivariate(data, tolerance)
    else:
        params, gnorm, iters, conv = _fit_independent(data, family, tolerance)
    return FitResult(
        params=params,
        log_likelihood=log_likelihood(params, data),
        converged=conv,
        iterations=iters,
        gradient_norm=gnorm,
    )


def bootstrap_ci(
    data: Sequence[MatchObservation],
    family: str,
    B: int = 1000,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
) -> dict[str, tuple[float, float]]:
    """Percentile 95% intervals from ``B`` resamples with replacement.

    Non-convergent resamples are dropped; more than 10% drops raise
    :class:`BootstrapUnstableError`.  Resample ``b`` draws its indices
    from an independent stream keyed by ``(seed, b)``.
    """
    if B < 100:
        raise InvalidInputError("need at least 100 bootstrap resamples")
    names = param_names(family)
    n = len(data)
    estimates = []
    dropped = 0
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        idx = rng.integers(0, n, size=n)
        resample = [data[i] for i in idx]
        result = fit_mle(resample, family, tolerance)
        if not result.converged:
            dropped += 1
            continue
        estimates.append([getattr(result.params, name) for name in names])
    if dropped > 0.1 * B:
        raise BootstrapUnstableError(f"{dropped} of {B} bootstrap refits failed to converge")
    arr = np.array(estimates)
    lo = np.percentile(arr, 2.5, axis=0)
    hi = np.percentile(arr, 97.5, axis=0)
    return {name: (float(lo[k]), float(hi[k])) for k, name in enumerate(names)}


# ---------------------------------------------------------------------------
# forecast-quality metrics

Predictor = Callable[[MatchObservation, Score], float]


def model_predictor(params: ModelParams) -> Predictor:
    return lambda obs, s: score_pmf(params, obs.home_rating, obs.away_rating, s)


def baseline_predictor(table: BaselineTable) -> Predictor:
    return lambda obs, s: baseline_pmf(table, s)


def avg_hit_probability(predictor: Predictor, data: Sequence[MatchObservation]) -> float:
    """Mean model probability of the realised exact scores."""
    if not data:
        raise InvalidInputError("no observations")
    return sum(predictor(o, o.score) for o in data) / len(data)


def _check_pi(pi: float) -> None:
    if not 0.5 < pi < 1.0:
        raise InvalidParameterError(f"pi must lie strictly between 1/2 and 1, got {pi}")


def score_distance(r1: Score, r2: Score, pi: float) -> float:
    """Quadratic-form distance between two scores.

    Adding one goal to both sides costs ``sqrt(2 - 2*pi)``, less than the
    unit cost of one goal for one side, so same-outcome scores stay close.
    """
    _check_pi(pi)
    dh = r1.home_goals - r2.home_goals
    da = r1.away_goals - r2.away_goals
    return math.sqrt(dh * dh + da * da - 2.0 * pi * dh * da)


def _outcome_penalty(o1: Outcome, o2: Outcome) -> int:
    if o1 is o2:
        return 0
    if Outcome.DRAW in (o1, o2):
        return 1
    return 2


def outcome_distance(r1: Score, r2: Score, pi: float) -> float:
    """Score distance plus 0/1/2 for matching / draw-vs-decisive / opposite outcomes."""
    return score_distance(r1, r2, pi) + _outcome_penalty(outcome(r1), outcome(r2))


METRIC_SCORE = "score"
METRIC_SCORE_AND_OUTCOME = "score-and-outcome"


def avg_distance(
    predictor: Predictor,
    data: Sequence[MatchObservation],
    metric: str,
    pi: float,
    max_goals: int = 10,
) -> float:
    """Mean expected distance between realised scores and the forecast.

    The forecast is the model's full distribution truncated at
    ``max_goals`` per side and renormalised.
    """
    _check_pi(pi)
    if metric == METRIC_SCORE:
        dist = score_distance
    elif metric == METRIC_SCORE_AND_OUTCOME:
        dist = outcome_distance
    else:
        raise InvalidInputError(f"unknown metric {metric!r}")
    if not data:
        raise InvalidInputError("no observations")

    grid = [Score(h, a) for h in range(max_goals + 1) for a in range(max_goals + 1)]
    total = 0.0
    for o in data:
        mass = 0.0
        acc = 0.0
        for s in grid:
            p = predictor(o, s)
            if p > 0.0:
                mass += p
                acc += p * dist(o.score, s, pi)
        if mass <= 0.0:
            raise InvalidInputError("forecast has no mass on the truncated score grid")
        total += acc / mass
    return total / len(data)


def group_by_season(data: Iterable[MatchObservation]) -> dict[str, list[MatchObservation]]:
    groups: dict[str, list[MatchObservation]] = {}
    for o in data:
        groups.setdefault(o.season, []).append(o)
    return groups
