"""Regression families for the downstream analyses.

Three estimators: a logistic model fit by iteratively reweighted least
squares (fractional responses in [0, 1] are allowed and treated as
quasi-binomial with unit weights), a multinomial logit fit by
Newton-Raphson on the full likelihood with category 0 as reference, and
a two-way fixed-effects panel OLS using the within estimator (alternating
demeaning over the two factors).  Inference is Wald throughout; model
comparison uses the likelihood-ratio chi-square against the
intercept-only fit (or the F statistic for the panel model).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special, stats

from .errors import DataError, NumericError, UndefinedMeasureError

logger = logging.getLogger("citepref.regress")

_SCORE_TOL = 1e-8
_MAX_ITER = 100
_BETA_BOUND = 50.0
_Z95 = 1.959963984540054


@dataclass
class DesignMatrix:
    names: tuple  # feature names, intercept excluded
    matrix: np.ndarray  # n x k float array
    log_transformed: frozenset
    standardized: dict  # name -> bool

    @property
    def n_obs(self):
        return self.matrix.shape[0]


@dataclass
class RegressionFit:
    model: str
    names: tuple  # coefficient names in matrix order
    beta: dict
    std_errors: dict
    statistics: dict  # z or t per coefficient
    p_values: dict
    ci_low: dict
    ci_high: dict
    statistic_label: str  # "z" | "t"
    log_likelihood: float | None
    null_log_likelihood: float | None
    pseudo_r2: float | None
    r2: float | None
    model_test: tuple  # (label, statistic, dof, p)
    n_obs: int
    max_score: float
    dropped: tuple = ()


def _is_binary(values):
    return set(np.unique(values)).issubset({0.0, 1.0})


def build_design(columns, log10_plus1=(), log10_plain=(), standardize=False):
    """Assemble a design matrix from named columns.

    ``log10_plus1`` features become log10(x + 1) (count-like, zeros
    allowed); ``log10_plain`` features become log10(x) and must be
    positive.  With ``standardize`` true (or a set of names), non-binary
    features are scaled to sample mean 0 and sample sd 1; binary features
    are never standardized.
    """
    names = tuple(columns)
    cols = []
    standardized = {}
    log_transformed = set()
    for name in names:
        x = np.asarray(columns[name], dtype=float)
        if not np.all(np.isfinite(x)):
            raise DataError(f"feature {name!r} contains non-finite values")
        if name in log10_plus1:
            if np.any(x < 0):
                raise DataError(f"feature {name!r}: negative value under log10(1+x)")
            x = np.log10(1.0 + x)
            log_transformed.add(name)
        elif name in log10_plain:
            if np.any(x <= 0):
                raise DataError(f"feature {name!r}: non-positive value under log10")
            x = np.log10(x)
            log_transformed.add(name)
        wanted = standardize is True or (standardize and name in standardize)
        if wanted and not _is_binary(x):
            sd = x.std(ddof=1)
            if sd == 0:
                raise NumericError(f"feature {name!r} is constant; cannot standardize")
            x = (x - x.mean()) / sd
            standardized[name] = True
        else:
            standardized[name] = False
        cols.append(x)
    if not cols:
        raise DataError("design matrix needs at least one feature")
    lengths = {len(c) for c in cols}
    if len(lengths) != 1:
        raise DataError(f"feature columns differ in length: {sorted(lengths)}")
    return DesignMatrix(names, np.column_stack(cols), frozenset(log_transformed),
                        standardized)


def _check_rank(x, names):
    _, r, pivot = linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(x.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    bad = [names[pivot[i]] for i in range(len(diag)) if diag[i] <= tol]
    if x.shape[1] > len(diag):
        bad.extend(names[pivot[i]] for i in range(len(diag), x.shape[1]))
    if bad:
        raise NumericError(f"design matrix is rank deficient; collinear columns: "
                           f"{sorted(bad)}")


def _with_intercept(design, n_obs):
    """Prepend the intercept column; ``design=None`` is intercept-only."""
    if design is None:
        return ("intercept",), np.ones((n_obs, 1)), ()
    if design.n_obs != n_obs:
        raise DataError("response length does not match design")
    x = np.column_stack([np.ones(design.n_obs), design.matrix])
    return ("intercept",) + tuple(design.names), x, design.names


def logistic_loglik(x, y, beta, weights=None):
    """Bernoulli-form (quasi-)log-likelihood at ``beta``."""
    eta = x @ beta
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def _wald_tables(names, beta, cov, label, dof=None):
    se = np.sqrt(np.diag(cov))
    if label == "t":
        crit = stats.t.ppf(0.975, dof)
        stat = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
        p = 2.0 * stats.t.sf(np.abs(stat), dof)
    else:
        crit = _Z95
        stat = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
        p = 2.0 * stats.norm.sf(np.abs(stat))
    return (
        dict(zip(names, map(float, beta))),
        dict(zip(names, map(float, se))),
        dict(zip(names, map(float, stat))),
        dict(zip(names, map(float, p))),
        dict(zip(names, map(float, beta - crit * se))),
        dict(zip(names, map(float, beta + crit * se))),
    )


def fit_logistic(design, response, weights=None):
    """Logistic regression by IRLS; fractional responses allowed.

    Convergence requires max |score| < 1e-8; a diverging coefficient
    norm is reported as separation.
    """
    y = np.asarray(response, dtype=float)
    if np.any(y < 0) or np.any(y > 1):
        raise DataError("logistic response values must lie in [0, 1]")
    names, x, feature_names = _with_intercept(design, len(y))
    if x.shape[0] <= x.shape[1]:
        raise DataError(
            f"{x.shape[0]} rows cannot identify {x.shape[1]} parameters"
        )
    _check_rank(x, names)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)

    beta = np.zeros(x.shape[1])
    loglik = logistic_loglik(x, y, beta, w)
    max_score = math.inf
    for _ in range(_MAX_ITER):
        mu = special.expit(x @ beta)
        score = x.T @ (w * (y - mu))
        max_score = float(np.max(np.abs(score)))
        if max_score < _SCORE_TOL:
            break
        info = x.T @ (x * (w * mu * (1.0 - mu))[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise NumericError(
                f"singular information matrix (separation?); max|beta|="
                f"{np.max(np.abs(beta)):.3g}"
            )
        new_beta = beta + step
        new_loglik = logistic_loglik(x, y, new_beta, w)
        halvings = 0
        while new_loglik < loglik and halvings < 30:
            step /= 2.0
            new_beta = beta + step
            new_loglik = logistic_loglik(x, y, new_beta, w)
            halvings += 1
        beta, loglik = new_beta, new_loglik
        if np.max(np.abs(beta)) > _BETA_BOUND:
            raise NumericError(
                f"coefficients diverging (max|beta|={np.max(np.abs(beta)):.3g}); "
                "perfect separation suspected"
            )
    else:
        raise NumericError(f"IRLS did not converge in {_MAX_ITER} iterations; "
                           f"max|score|={max_score:.3g}")

    mu = special.expit(x @ beta)
    info = x.T @ (x * (w * mu * (1.0 - mu))[:, None])
    cov = np.linalg.inv(info)
    tables = _wald_tables(names, beta, cov, "z")

    # Intercept-only reference: closed form through the mean response.
    ybar = float(np.average(y, weights=w))
    if 0.0 < ybar < 1.0:
        eta0 = np.full(len(y), math.log(ybar / (1.0 - ybar)))
        null_loglik = float(np.sum(w * (y * eta0 - np.logaddexp(0.0, eta0))))
    else:
        null_loglik = 0.0
    dof = len(feature_names)
    llr = 2.0 * (loglik - null_loglik)
    model_test = ("llr_chi2", float(llr), dof,
                  float(stats.chi2.sf(llr, dof)) if dof else 1.0)
    pseudo = 1.0 - loglik / null_loglik if null_loglik != 0.0 else 0.0
    return RegressionFit(
        model="logistic", names=names,
        beta=tables[0], std_errors=tables[1], statistics=tables[2],
        p_values=tables[3], ci_low=tables[4], ci_high=tables[5],
        statistic_label="z", log_likelihood=loglik,
        null_log_likelihood=null_loglik, pseudo_r2=float(pseudo), r2=None,
        model_test=model_test, n_obs=len(y), max_score=max_score,
    )


def multinomial_loglik(x, y, beta_blocks, categories):
    """Log-likelihood of the multinomial logit; ``beta_blocks`` is a
    (n_categories - 1) x k array for the non-reference categories in
    ``categories`` order."""
    eta = x @ np.asarray(beta_blocks).T  # n x S
    denom = np.logaddexp(0.0, special.logsumexp(eta, axis=1))
    total = -float(np.sum(denom))
    for s, cat in enumerate(categories):
        mask = y == cat
        total += float(np.sum(eta[mask, s]))
    return total


def fit_multinomial(design, response, reference=0):
    """Multinomial logit with Newton-Raphson; returns one RegressionFit
    per non-reference category (shared likelihood and model test)."""
    y = np.asarray(response)
    observed = sorted(set(int(v) for v in np.unique(y)))
    if not set(observed).issubset({-1, 0, 1}):
        raise DataError(f"response categories must be in -1/0/+1, got {observed}")
    if reference not in observed:
        raise DataError(f"reference category {reference} not observed")
    if len(observed) < 2:
        raise DataError("multinomial fit needs at least two observed categories")
    non_ref = [c for c in observed if c != reference]
    names, x, feature_names = _with_intercept(design, len(y))
    n, k = x.shape
    n_blocks = len(non_ref)
    if n <= k * n_blocks:
        raise DataError(f"{n} rows cannot identify {k * n_blocks} parameters")
    _check_rank(x, names)

    indicators = np.column_stack([(y == c).astype(float) for c in non_ref])
    theta = np.zeros(n_blocks * k)
    loglik = multinomial_loglik(x, y, theta.reshape(n_blocks, k), non_ref)
    max_score = math.inf
    for _ in range(_MAX_ITER):
        blocks = theta.reshape(n_blocks, k)
        eta = x @ blocks.T
        denom = np.logaddexp(0.0, special.logsumexp(eta, axis=1))
        probs = np.exp(eta - denom[:, None])  # n x S
        score = ((indicators - probs).T @ x).ravel()
        max_score = float(np.max(np.abs(score)))
        if max_score < _SCORE_TOL:
            break
        hess = np.zeros((n_blocks * k, n_blocks * k))
        for s in range(n_blocks):
            for t in range(n_blocks):
                wst = probs[:, s] * ((1.0 if s == t else 0.0) - probs[:, t])
                hess[s * k:(s + 1) * k, t * k:(t + 1) * k] = x.T @ (x * wst[:, None])
        try:
            step = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError:
            raise NumericError(
                f"singular Hessian (separation?); max|beta|="
                f"{np.max(np.abs(theta)):.3g}"
            )
        new_theta = theta + step
        new_loglik = multinomial_loglik(x, y, new_theta.reshape(n_blocks, k),
                                        non_ref)
        halvings = 0
        while new_loglik < loglik and halvings < 30:
            step /= 2.0
            new_theta = theta + step
            new_loglik = multinomial_loglik(x, y, new_theta.reshape(n_blocks, k),
                                            non_ref)
            halvings += 1
        theta, loglik = new_theta, new_loglik
        if np.max(np.abs(theta)) > _BETA_BOUND:
            raise NumericError(
                f"coefficients diverging (max|beta|={np.max(np.abs(theta)):.3g}); "
                "perfect separation suspected"
            )
    else:
        raise NumericError(f"Newton-Raphson did not converge in {_MAX_ITER} "
                           f"iterations; max|score|={max_score:.3g}")

    blocks = theta.reshape(n_blocks, k)
    eta = x @ blocks.T
    denom = np.logaddexp(0.0, special.logsumexp(eta, axis=1))
    probs = np.exp(eta - denom[:, None])
    hess = np.zeros((n_blocks * k, n_blocks * k))
    for s in range(n_blocks):
        for t in range(n_blocks):
            wst = probs[:, s] * ((1.0 if s == t else 0.0) - probs[:, t])
            hess[s * k:(s + 1) * k, t * k:(t + 1) * k] = x.T @ (x * wst[:, None])
    cov = np.linalg.inv(hess)

    counts = {c: int(np.sum(y == c)) for c in observed}
    null_loglik = sum(v * math.log(v / n) for v in counts.values() if v > 0)
    dof = len(feature_names) * n_blocks
    llr = 2.0 * (loglik - null_loglik)
    model_test = ("llr_chi2", float(llr), dof,
                  float(stats.chi2.sf(llr, dof)) if dof else 1.0)
    pseudo = 1.0 - loglik / null_loglik if null_loglik != 0.0 else 0.0

    fits = {}
    for s, cat in enumerate(non_ref):
        sub_cov = cov[s * k:(s + 1) * k, s * k:(s + 1) * k]
        tables = _wald_tables(names, blocks[s], sub_cov, "z")
        fits[cat] = RegressionFit(
            model=f"multinomial[{cat:+d} vs {reference}]", names=names,
            beta=tables[0], std_errors=tables[1], statistics=tables[2],
            p_values=tables[3], ci_low=tables[4], ci_high=tables[5],
            statistic_label="z", log_likelihood=loglik,
            null_log_likelihood=float(null_loglik), pseudo_r2=float(pseudo),
            r2=None, model_test=model_test, n_obs=n, max_score=max_score,
        )
    return fits


def _twoway_demean(values, c_idx, t_idx, n_c, n_t, tol=1e-12, max_sweeps=1000):
    v = values.astype(float).copy()
    for _ in range(max_sweeps):
        before = v.copy()
        means_c = np.bincount(c_idx, weights=v, minlength=n_c) / np.bincount(
            c_idx, minlength=n_c)
        v -= means_c[c_idx]
        means_t = np.bincount(t_idx, weights=v, minlength=n_t) / np.bincount(
            t_idx, minlength=n_t)
        v -= means_t[t_idx]
        if np.max(np.abs(v - before)) < tol:
            return v
    raise NumericError("two-way demeaning did not converge")


def fit_twoway_fe(design, response, groups, times):
    """Two-way fixed-effects OLS (within estimator).

    Group and time intercepts are absorbed by alternating demeaning;
    features that become constant after demeaning are dropped with a
    warning.  Residual dof is n - k - (C-1) - (T-1) - 1 and inference is
    t-based.  R^2 is the within variant.
    """
    y = np.asarray(response, dtype=float)
    groups = np.asarray(groups)
    times = np.asarray(times)
    n = len(y)
    if not (n == len(groups) == len(times) == design.n_obs):
        raise DataError("panel columns differ in length")
    u_groups, c_idx = np.unique(groups, return_inverse=True)
    u_times, t_idx = np.unique(times, return_inverse=True)
    n_c, n_t = len(u_groups), len(u_times)

    y_dm = _twoway_demean(y, c_idx, t_idx, n_c, n_t)
    kept_names, kept_cols = [], []
    dropped = []
    for j, name in enumerate(design.names):
        col = _twoway_demean(design.matrix[:, j], c_idx, t_idx, n_c, n_t)
        if np.max(np.abs(col)) < 1e-10:
            dropped.append(name)
            logger.warning("feature %r is constant within the two-way demeaned "
                           "space; dropped", name)
        else:
            kept_names.append(name)
            kept_cols.append(col)
    if not kept_cols:
        raise DataError("no identifiable features after demeaning")
    x_dm = np.column_stack(kept_cols)
    k = x_dm.shape[1]
    dof = n - k - (n_c - 1) - (n_t - 1) - 1
    if dof <= 0:
        raise DataError(f"{n} rows cannot identify {k} features plus "
                        f"{n_c}+{n_t} fixed effects")
    _check_rank(x_dm, tuple(kept_names))

    xtx = x_dm.T @ x_dm
    beta = np.linalg.solve(xtx, x_dm.T @ y_dm)
    resid = y_dm - x_dm @ beta
    rss = float(resid @ resid)
    tss = float(y_dm @ y_dm)
    sigma2 = rss / dof
    cov = sigma2 * np.linalg.inv(xtx)
    tables = _wald_tables(tuple(kept_names), beta, cov, "t", dof=dof)
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    if k > 0 and r2 < 1.0:
        f_stat = (r2 / k) / ((1.0 - r2) / dof)
        f_p = float(stats.f.sf(f_stat, k, dof))
    else:
        f_stat, f_p = math.inf, 0.0
    return RegressionFit(
        model="twoway_fe", names=tuple(kept_names),
        beta=tables[0], std_errors=tables[1], statistics=tables[2],
        p_values=tables[3], ci_low=tables[4], ci_high=tables[5],
        statistic_label="t", log_likelihood=None, null_log_likelihood=None,
        pseudo_r2=None, r2=float(r2),
        model_test=("F", float(f_stat), (k, dof), f_p),
        n_obs=n, max_score=0.0, dropped=tuple(dropped),
    )


def wald_test(fit, feature):
    """z = beta/SE with a two-sided normal p-value."""
    se = fit.std_errors[feature]
    if se == 0:
        raise UndefinedMeasureError(f"standard error of {feature!r} is zero")
    z = fit.beta[feature] / se
    return float(z), float(2.0 * stats.norm.sf(abs(z)))


def mcfadden_r2(fit, null_fit):
    """1 - L/L0 against an intercept-only fit."""
    l0 = null_fit.log_likelihood
    if l0 == 0.0:
        raise UndefinedMeasureError("null log-likelihood is zero")
    return float(1.0 - fit.log_likelihood / l0)
