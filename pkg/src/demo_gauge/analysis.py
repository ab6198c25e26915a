"""Statistical linkage between consistency features and success.

Pearson correlation matrices, standardized OLS with interaction/quadratic
terms, bidirectional stepwise selection and one-way ANOVA.  Predictors are
reported with compact x-indices (x1..xK in dataset column order, the
consistency flag last) alongside their readable names.

The t and F tail probabilities are computed from a regularized incomplete
beta implemented here with Lentz's continued fraction, so the package has no
runtime dependency on a stats library; the test suite cross-checks the
values against scipy and against tabulated quantiles.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularDesignError, ValidationError

log = logging.getLogger(__name__)

_BETA_EPS = 1e-15
_BETA_FPMIN = 1e-300
_BETA_MAXIT = 500


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ValidationError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def incomplete_beta_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValidationError("incomplete beta needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t."""
    if df <= 0:
        raise ValidationError("t distribution needs df > 0")
    if math.isinf(t):
        return 0.0
    return incomplete_beta_reg(df / 2.0, 0.5, df / (df + t * t))


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail probability of the F distribution."""
    if d1 <= 0 or d2 <= 0:
        raise ValidationError("F distribution needs positive dofs")
    if math.isinf(f):
        return 0.0
    if f <= 0.0:
        return 1.0
    return incomplete_beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


# ---------------------------------------------------------------------------
# dataset and terms


@dataclass(frozen=True)
class Dataset:
    """One row per demonstration set: predictors plus success outcomes.

    Predictor order fixes the x-index naming (column i is x{i+1}); the
    binary consistency flag, when present, is by convention the last
    predictor.
    """

    set_ids: tuple[str, ...]
    predictor_names: tuple[str, ...]
    predictors: np.ndarray
    outcome_names: tuple[str, ...]
    outcomes: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.predictors, dtype=float)
        Y = np.asarray(self.outcomes, dtype=float)
        object.__setattr__(self, "predictors", P)
        object.__setattr__(self, "outcomes", Y)
        object.__setattr__(self, "set_ids", tuple(self.set_ids))
        object.__setattr__(self, "predictor_names", tuple(self.predictor_names))
        object.__setattr__(self, "outcome_names", tuple(self.outcome_names))
        n = len(self.set_ids)
        if P.shape != (n, len(self.predictor_names)):
            raise ValidationError(f"predictors shape {P.shape} inconsistent with names/ids")
        if Y.shape != (n, len(self.outcome_names)):
            raise ValidationError(f"outcomes shape {Y.shape} inconsistent with names/ids")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(Y))):
            raise ValidationError("dataset contains non-finite cells")
        if "consistency" in self.predictor_names:
            col = P[:, self.predictor_names.index("consistency")]
            if not np.all(np.isin(col, (0.0, 1.0))):
                raise ValidationError("consistency column must be binary 0/1")

    @property
    def n_rows(self) -> int:
        return len(self.set_ids)

    def x_label(self, i: int) -> str:
        return f"x{i + 1}"

    def outcome(self, name: str) -> np.ndarray:
        try:
            j = self.outcome_names.index(name)
        except ValueError:
            raise ValidationError(
                f"unknown outcome {name!r}; have {self.outcome_names}"
            ) from None
        return self.outcomes[:, j]


@dataclass(frozen=True)
class TermSpec:
    """One regression term over dataset predictor columns (0-based indices)."""

    kind: str  # "linear" | "interaction" | "quadratic"
    i: int
    j: int | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "interaction", "quadratic"):
            raise ValidationError(f"unknown term kind {self.kind!r}")
        if self.i < 0:
            raise ValidationError("term index must be >= 0")
        if self.kind == "interaction":
            if self.j is None or self.j < 0:
                raise ValidationError("interaction needs a second index")
            if self.j == self.i:
                raise ValidationError("interaction indices must differ")
        elif self.j is not None:
            raise ValidationError(f"{self.kind} term takes a single index")

    def label(self) -> str:
        if self.kind == "linear":
            return f"x{self.i + 1}"
        if self.kind == "quadratic":
            return f"x{self.i + 1}^2"
        a, b = sorted((self.i, self.j))
        return f"x{a + 1}:x{b + 1}"

    def readable(self, names: tuple[str, ...]) -> str:
        if self.kind == "linear":
            return names[self.i]
        if self.kind == "quadratic":
            return f"{names[self.i]}^2"
        a, b = sorted((self.i, self.j))
        return f"{names[a]} x {names[b]}"

    def column(self, P: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return P[:, self.i]
        if self.kind == "quadratic":
            return P[:, self.i] ** 2
        return P[:, self.i] * P[:, self.j]


def parse_term(text: str, n_predictors: int) -> TermSpec:
    """Parse "x2", "x2:x5" / "x2*x5", "x4^2" into a TermSpec."""

    def idx(tok: str) -> int:
        tok = tok.strip()
        if not tok.startswith("x"):
            raise ValidationError(f"bad term token {tok!r}")
        try:
            k = int(tok[1:])
        except ValueError:
            raise ValidationError(f"bad term token {tok!r}") from None
        if not 1 <= k <= n_predictors:
            raise ValidationError(f"term index {tok!r} out of range 1..{n_predictors}")
        return k - 1

    s = text.strip()
    for sep in (":", "*"):
        if sep in s:
            a, b = s.split(sep, 1)
            return TermSpec("interaction", idx(a), idx(b))
    if s.endswith("^2"):
        return TermSpec("quadratic", idx(s[:-2]))
    return TermSpec("linear", idx(s))


def full_candidate_terms(d: Dataset) -> tuple[TermSpec, ...]:
    """Every linear, pairwise-interaction and quadratic term.

    Quadratics of binary columns are omitted (the square of a 0/1 column
    duplicates it).  Order is deterministic: linears, then interactions in
    (i, j) order, then quadratics; stepwise tie-breaks follow this order.
    """
    K = len(d.predictor_names)
    terms = [TermSpec("linear", i) for i in range(K)]
    terms += [TermSpec("interaction", i, j) for i in range(K) for j in range(i + 1, K)]
    for i in range(K):
        col = d.predictors[:, i]
        if not np.all(np.isin(col, (0.0, 1.0))):
            terms.append(TermSpec("quadratic", i))
    return tuple(terms)


# ---------------------------------------------------------------------------
# design matrix and OLS


@dataclass(frozen=True)
class DesignMatrix:
    """Standardized term columns plus outcome; intercept column appended last."""

    X: np.ndarray
    y: np.ndarray
    terms: tuple[TermSpec, ...]
    dropped: tuple[TermSpec, ...]
    term_mean: np.ndarray
    term_sigma: np.ndarray
    outcome_name: str
    outcome_mean: float
    outcome_sigma: float


def build_design_matrix(
    d: Dataset, terms: list[TermSpec] | tuple[TermSpec, ...], outcome: str
) -> DesignMatrix:
    """Raw term values first (products, squares), then z-score terms and outcome.

    Standardization uses the population sigma.  Zero-variance term columns
    are dropped with a warning; a zero-variance outcome standardizes to
    all-zeros (its sigma is recorded as 0).
    """
    K = len(d.predictor_names)
    for t in terms:
        hi = max(t.i, t.j if t.j is not None else 0)
        if hi >= K:
            raise ValidationError(f"term {t.label()} references a missing predictor")
    y_raw = d.outcome(outcome)
    n = y_raw.shape[0]
    kept: list[TermSpec] = []
    dropped: list[TermSpec] = []
    cols: list[np.ndarray] = []
    means: list[float] = []
    sigmas: list[float] = []
    for t in terms:
        raw = t.column(d.predictors)
        mu = float(raw.mean())
        sd = float(raw.std())
        if sd == 0.0:
            log.warning("dropping zero-variance term %s", t.label())
            dropped.append(t)
            continue
        kept.append(t)
        cols.append((raw - mu) / sd)
        means.append(mu)
        sigmas.append(sd)
    y_mu = float(y_raw.mean())
    y_sd = float(y_raw.std())
    y = (y_raw - y_mu) / y_sd if y_sd > 0.0 else np.zeros(n)
    X = np.column_stack(cols + [np.ones(n)]) if cols else np.ones((n, 1))
    return DesignMatrix(
        X=X,
        y=y,
        terms=tuple(kept),
        dropped=tuple(dropped),
        term_mean=np.asarray(means),
        term_sigma=np.asarray(sigmas),
        outcome_name=outcome,
        outcome_mean=y_mu,
        outcome_sigma=y_sd,
    )


@dataclass(frozen=True)
class FittedModel:
    """OLS result in standardized units, mirroring a regression table."""

    outcome_name: str
    terms: tuple[TermSpec, ...]
    term_labels: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    intercept: float
    intercept_se: float
    r_squared: float
    adj_r_squared: float
    f_stat: float
    f_p_value: float
    n_obs: int
    dof: int
    rmse: float
    outcome_mean: float
    outcome_sigma: float
    note: str = ""


def _check_rank(X: np.ndarray, labels: list[str]) -> None:
    """Raise SingularDesignError naming the dependent columns."""
    R = np.linalg.qr(X, mode="r")
    diag = np.abs(np.diag(R))
    thresh = max(X.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    bad = np.flatnonzero(diag <= thresh)
    if bad.size:
        names = [labels[i] if i < len(labels) else "intercept" for i in bad]
        raise SingularDesignError(names)


def ols_fit(dm: DesignMatrix) -> FittedModel:
    """Least squares on a prepared design matrix.

    Coefficients come from a numerically stable lstsq solve; standard errors
    from (X^T X)^-1 sigma^2; p-values are two-sided t tails.  R^2 is taken
    against the constant model, so with the intercept present it lands in
    [0, 1] up to rounding.
    """
    X, y = dm.X, dm.y
    n, p = X.shape
    if n <= p:
        raise ValidationError(f"need more observations than parameters ({n} <= {p})")
    labels = [t.label() for t in dm.terms]
    _check_rank(X, labels)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    dof = n - p
    sigma2 = ssr / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.clip(np.diag(xtx_inv) * sigma2, 0.0, None))

    t_stats = np.empty(p)
    p_vals = np.empty(p)
    for i in range(p):
        if se[i] > 0.0:
            t_stats[i] = beta[i] / se[i]
            p_vals[i] = t_sf_two_sided(t_stats[i], dof)
        else:
            t_stats[i] = math.inf if beta[i] != 0.0 else 0.0
            p_vals[i] = 0.0 if beta[i] != 0.0 else 1.0

    sst = float(((y - y.mean()) ** 2).sum())
    k = p - 1
    if sst > 0.0:
        r2 = min(1.0, max(0.0, 1.0 - ssr / sst))
    else:
        r2 = 0.0
    if k > 0 and sst > 0.0:
        if ssr > 0.0:
            f_stat = ((sst - ssr) / k) / (ssr / dof)
            f_p = f_sf(f_stat, k, dof)
        else:
            f_stat = math.inf
            f_p = 0.0
        adj = 1.0 - (1.0 - r2) * (n - 1) / dof
    else:
        f_stat = 0.0
        f_p = 1.0
        adj = r2
    return FittedModel(
        outcome_name=dm.outcome_name,
        terms=dm.terms,
        term_labels=tuple(labels),
        coefficients=beta[:k].copy(),
        standard_errors=se[:k].copy(),
        t_stats=t_stats[:k].copy(),
        p_values=p_vals[:k].copy(),
        intercept=float(beta[-1]),
        intercept_se=float(se[-1]),
        r_squared=r2,
        adj_r_squared=adj,
        f_stat=f_stat,
        f_p_value=f_p,
        n_obs=n,
        dof=dof,
        rmse=math.sqrt(sigma2),
        outcome_mean=dm.outcome_mean,
        outcome_sigma=dm.outcome_sigma,
    )


def stepwise_fit(
    d: Dataset,
    candidate_terms: list[TermSpec] | tuple[TermSpec, ...],
    p_enter: float = 0.05,
    p_remove: float = 0.10,
    outcome: str = "task_rate",
) -> FittedModel:
    """Bidirectional stepwise selection by p-value.

    Each round adds the candidate with the smallest p-value below p_enter
    (candidate order breaks ties), then removes included terms whose
    p-value exceeds p_remove, until a fixed point.  Candidates whose
    addition would make the design singular are skipped (rank guard).  If
    nothing ever enters, the constant-only model is returned with a note.
    """
    if not candidate_terms:
        raise ValidationError("stepwise_fit needs a nonempty candidate list")
    if not (0.0 < p_enter <= 1.0 and 0.0 < p_remove <= 1.0):
        raise ValidationError("p_enter and p_remove must lie in (0, 1]")
    base = build_design_matrix(d, tuple(candidate_terms), outcome)
    candidates = list(base.terms)  # zero-variance ones already dropped
    col_of = {t: base.X[:, i] for i, t in enumerate(candidates)}
    y = base.y
    n = y.shape[0]
    ones = np.ones(n)

    def fit_subset(sel: list[TermSpec]) -> FittedModel:
        X = np.column_stack([col_of[t] for t in sel] + [ones]) if sel else ones[:, None]
        dm = DesignMatrix(
            X=X,
            y=y,
            terms=tuple(sel),
            dropped=base.dropped,
            term_mean=np.asarray([]),
            term_sigma=np.asarray([]),
            outcome_name=outcome,
            outcome_mean=base.outcome_mean,
            outcome_sigma=base.outcome_sigma,
        )
        return ols_fit(dm)

    selected: list[TermSpec] = []
    max_rounds = 4 * len(candidates) + 8
    for _ in range(max_rounds):
        changed = False
        # forward step
        best_p = None
        best_t = None
        for t in candidates:
            if t in selected:
                continue
            if len(selected) + 2 >= n:
                break  # no residual dof left for another term
            try:
                trial = fit_subset(selected + [t])
            except SingularDesignError:
                continue
            p_t = float(trial.p_values[-1])
            if p_t < p_enter and (best_p is None or p_t < best_p):
                best_p = p_t
                best_t = t
        if best_t is not None:
            selected.append(best_t)
            changed = True
        # backward sweep
        while selected:
            current = fit_subset(selected)
            worst_i = None
            worst_p = p_remove
            for i in range(len(selected)):
                if float(current.p_values[i]) > worst_p:
                    worst_p = float(current.p_values[i])
                    worst_i = i
            if worst_i is None:
                break
            del selected[worst_i]
            changed = True
        if not changed:
            break

    final = fit_subset(selected)
    if not selected:
        final = dataclasses.replace(
            final, note="no candidate term reached p_enter; constant model"
        )
    return final


# ---------------------------------------------------------------------------
# correlation and ANOVA


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]
    r: np.ndarray
    undefined: tuple[str, ...]  # zero-variance columns; their r entries are NaN


def pearson_matrix(d: Dataset, columns: list[str] | None = None) -> CorrelationMatrix:
    """Pairwise Pearson r over the named dataset columns.

    The binary consistency column needs no special casing (point-biserial
    correlation is Pearson on 0/1 codes).  Zero-variance columns are
    flagged and their rows/columns filled with NaN.
    """
    all_names = list(d.predictor_names) + list(d.outcome_names)
    mat = np.column_stack([d.predictors, d.outcomes])
    if columns is None:
        names = all_names
    else:
        for c in columns:
            if c not in all_names:
                raise ValidationError(f"unknown column {c!r}")
        names = list(columns)
    idx = [all_names.index(c) for c in names]
    M = mat[:, idx]
    mu = M.mean(axis=0)
    sd = M.std(axis=0)
    zero = sd == 0.0
    Z = (M - mu) / np.where(zero, 1.0, sd)
    R = (Z.T @ Z) / M.shape[0]
    R = np.clip(R, -1.0, 1.0)
    R[zero, :] = np.nan
    R[:, zero] = np.nan
    np.fill_diagonal(R, np.where(zero, np.nan, 1.0))
    return CorrelationMatrix(
        names=tuple(names),
        r=R,
        undefined=tuple(n for n, z in zip(names, zero) if z),
    )


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float
    group_means: tuple[float, ...]
    group_ses: tuple[float | None, ...]
    group_sizes: tuple[int, ...]


def anova_oneway(groups: list) -> AnovaResult:
    """Classical one-way ANOVA over ≥ 2 groups of values.

    Degenerate cases follow fixed conventions: all values identical across
    all groups gives F = 0, p = 1; perfect separation with zero
    within-group variance gives F = inf, p = 0.
    """
    if len(groups) < 2:
        raise ValidationError("ANOVA needs at least two groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for g in arrays:
        if g.size < 1:
            raise ValidationError("every ANOVA group needs at least one value")
        if not np.all(np.isfinite(g)):
            raise ValidationError("ANOVA groups contain non-finite values")
    n_total = sum(g.size for g in arrays)
    k = len(arrays)
    if n_total <= k:
        raise ValidationError("ANOVA needs more values than groups")
    grand = float(np.concatenate(arrays).mean())
    ssb = sum(g.size * (float(g.mean()) - grand) ** 2 for g in arrays)
    ssw = sum(float(((g - g.mean()) ** 2).sum()) for g in arrays)
    df_b = k - 1
    df_w = n_total - k
    means = tuple(float(g.mean()) for g in arrays)
    ses = tuple(
        float(g.std(ddof=1) / math.sqrt(g.size)) if g.size > 1 else None for g in arrays
    )
    sizes = tuple(int(g.size) for g in arrays)
    if ssw == 0.0:
        if ssb == 0.0:
            f_stat, p = 0.0, 1.0
        else:
            f_stat, p = math.inf, 0.0
    else:
        f_stat = (ssb / df_b) / (ssw / df_w)
        p = f_sf(f_stat, df_b, df_w)
    return AnovaResult(f_stat, df_b, df_w, p, means, ses, sizes)
