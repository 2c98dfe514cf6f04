"""Price-function families, their Jacobians, and efficiency constants.

Three families are supported:

* ``LinearPrice``: p(y) = C y with a (nominally symmetric positive definite)
  matrix C acting on all time slots at once.
* ``MonomialPrice``: p_t(y) = alpha * y_t**k componentwise, alpha > 0, k > 0.
* ``HeterogeneousPrice``: p_t(y) = l_t(y_t) with one nondecreasing scalar
  price l_t per slot (constant / affine / monomial building blocks, possibly
  laid out by an hourly schedule).

Jacobian convention (frozen here to avoid transpose bugs): ``jacobian(p, y)``
returns J with J[i, j] = d p_j / d y_i, the gradient-of-components layout.
For the componentwise families J is diagonal; for the linear family J = C^T,
which equals C whenever the family's symmetry requirement holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SpecValidationError

__all__ = [
    "ScalarPrice",
    "ConstantPrice",
    "AffinePrice",
    "MonomialScalarPrice",
    "PiecewiseSchedule",
    "PriceFunction",
    "LinearPrice",
    "MonomialPrice",
    "HeterogeneousPrice",
    "ConstantsEstimate",
    "AssumptionReport",
    "evaluate",
    "jacobian",
    "validate_assumptions",
    "is_strongly_monotone",
    "estimate_constants",
    "anarchy_value",
    "beta_value",
    "class_members",
    "social_gradient_lipschitz",
]

# Dense grids used when no closed form exists; constants feed upper bounds,
# so overestimating Lipschitz moduli (and underestimating the monotonicity
# constant) by the safety factor is safe.
SAMPLING_POINTS = 10_000
SAFETY_FACTOR = 10.0


# ---------------------------------------------------------------------------
# scalar price building blocks
# ---------------------------------------------------------------------------

class ScalarPrice:
    """A nonnegative, nondecreasing scalar price y -> l(y) on [0, inf)."""

    def value(self, y):
        raise NotImplementedError

    def derivative(self, y):
        """Right-hand derivative at y (the variants here are smooth)."""
        raise NotImplementedError

    def beta_closed_form(self):
        """Exact beta contribution sup_v (max_w (l(v)-l(w))w)/(v l(v)), or None."""
        return None


@dataclass(frozen=True)
class ConstantPrice(ScalarPrice):
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise SpecValidationError(f"constant price must be >= 0, got {self.c}")

    def value(self, y):
        return np.full_like(np.asarray(y, dtype=float), self.c)

    def derivative(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def beta_closed_form(self):
        return 0.0


@dataclass(frozen=True)
class AffinePrice(ScalarPrice):
    """l(y) = a*y + b with a, b >= 0."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise SpecValidationError("affine price needs a >= 0 and b >= 0")

    def value(self, y):
        return self.a * np.asarray(y, dtype=float) + self.b

    def derivative(self, y):
        return np.full_like(np.asarray(y, dtype=float), self.a)

    def beta_closed_form(self):
        # max_w a(v-w)w = a v^2/4; ratio a v / (4(av+b)) has sup 1/4 (b -> 0).
        return 0.0 if self.a == 0 else 0.25


@dataclass(frozen=True)
class MonomialScalarPrice(ScalarPrice):
    """l(y) = alpha * y**k with alpha > 0, k > 0."""

    alpha: float
    k: float

    def __post_init__(self):
        if self.alpha <= 0 or self.k <= 0:
            raise SpecValidationError("monomial price needs alpha > 0 and k > 0")

    def value(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise DomainError("monomial price evaluated at a negative argument")
        return self.alpha * np.power(y, self.k)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or (self.k < 1 and np.any(y == 0)):
            raise DomainError("monomial derivative undefined at this point")
        return self.alpha * self.k * np.power(y, self.k - 1.0)

    def beta_closed_form(self):
        # argmax_w (v^k - w^k)w is w = v/(k+1)^(1/k); the ratio is v-free.
        k = self.k
        return k * (k + 1.0) ** (-(k + 1.0) / k)


@dataclass(frozen=True)
class PiecewiseSchedule:
    """Hourly layout of scalar prices: list of ((t_lo, t_hi), ScalarPrice).

    Slot ranges are 1-based and inclusive; together they must cover 1..n with
    no overlap. Evaluation is by hour index (the §-free way to say: the
    schedule picks which scalar price a slot uses, it is not piecewise in y).
    """

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((tuple(rng), sp) for rng, sp in self.entries))
        for (lo, hi), sp in self.entries:
            if lo > hi or lo < 1:
                raise SpecValidationError(f"bad slot range ({lo}, {hi})")
            if not isinstance(sp, ScalarPrice):
                raise SpecValidationError("schedule entries must hold ScalarPrice values")

    def at_slot(self, t):
        """Scalar price for 1-based slot t."""
        for (lo, hi), sp in self.entries:
            if lo <= t <= hi:
                return sp
        raise SpecValidationError(f"slot {t} not covered by the schedule")

    def expand(self, n):
        return [self.at_slot(t) for t in range(1, n + 1)]

    def members(self):
        """Distinct scalar prices appearing in the schedule."""
        seen = []
        for _, sp in self.entries:
            if sp not in seen:
                seen.append(sp)
        return seen


# ---------------------------------------------------------------------------
# vector price families
# ---------------------------------------------------------------------------

class PriceFunction:
    """Base for the three price families; instances are immutable."""

    def value(self, y):
        raise NotImplementedError

    def jac(self, y):
        raise NotImplementedError


@dataclass(frozen=True)
class LinearPrice(PriceFunction):
    """p(y) = C y. Validity requires C symmetric positive definite."""

    C: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.shape[0] != C.shape[1]:
            raise SpecValidationError("price matrix must be square")
        object.__setattr__(self, "C", C)
        self.C.setflags(write=False)

    @property
    def n(self):
        return self.C.shape[0]

    def value(self, y):
        return self.C @ np.asarray(y, dtype=float)

    def jac(self, y):
        # paper convention J[i, j] = d p_j / d y_i
        return self.C.T.copy()


@dataclass(frozen=True)
class MonomialPrice(PriceFunction):
    """p_t(y) = alpha * y_t**k on every slot, alpha > 0, k > 0."""

    alpha: float
    k: float

    def __post_init__(self):
        if self.alpha <= 0 or self.k <= 0:
            raise SpecValidationError("monomial price needs alpha > 0 and k > 0")

    @property
    def scalar(self):
        return MonomialScalarPrice(self.alpha, self.k)

    def value(self, y):
        return self.scalar.value(y)

    def jac(self, y):
        return np.diag(self.scalar.derivative(y))


@dataclass(frozen=True)
class HeterogeneousPrice(PriceFunction):
    """p_t(y) = l_t(y_t) with one nondecreasing scalar price per slot."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise SpecValidationError("heterogeneous price needs >= 1 component")
        for sp in comps:
            if not isinstance(sp, ScalarPrice):
                raise SpecValidationError("components must be ScalarPrice values")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_schedule(cls, schedule: PiecewiseSchedule, n: int):
        return cls(tuple(schedule.expand(n)))

    @property
    def n(self):
        return len(self.components)

    def value(self, y):
        y = np.asarray(y, dtype=float)
        return np.array([sp.value(y[t]) for t, sp in enumerate(self.components)])

    def jac(self, y):
        y = np.asarray(y, dtype=float)
        return np.diag([sp.derivative(y[t]) for t, sp in enumerate(self.components)])


def evaluate(price: PriceFunction, y) -> np.ndarray:
    """p(y), componentwise for the scalar families, C@y for the linear one."""
    return price.value(y)


def jacobian(price: PriceFunction, y) -> np.ndarray:
    """Jacobian of p at y in the [d p_j / d y_i] layout (see module docstring)."""
    return price.jac(y)


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    """Pass/fail per assumption; `passed` aggregates the family's own checks.

    `info` holds observations that do not gate validity (e.g. whether a
    heterogeneous price happens to be strongly monotone, which Assumption 5
    does not require but the solvers want to know).
    """

    family: str
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(ok for ok, _ in self.checks.values())

    def check(self, name):
        return self.checks[name][0]

    def add(self, name, ok, detail=""):
        self.checks[name] = (bool(ok), detail)

    def note(self, name, ok, detail=""):
        self.info[name] = (bool(ok), detail)

    def summary(self):
        lines = [f"price family: {self.family}"]
        for name, (ok, detail) in self.checks.items():
            lines.append(f"  [{'pass' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
        for name, (ok, detail) in self.info.items():
            lines.append(f"  [{'yes' if ok else 'no'}] {name}" + (f" ({detail})" if detail else ""))
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def validate_assumptions(price: PriceFunction, domain_box=(0.0, 10.0), grid=512) -> AssumptionReport:
    """Check the family's structural assumptions, report-valued (never raises).

    Linear: symmetry and positive definiteness of the symmetric part.
    Monomial: alpha > 0, k > 0 hold by construction (analytic pass).
    Heterogeneous: nonnegative and nondecreasing on a sample grid over
    domain_box, with strict slope reported as the strong-monotonicity check.
    """
    lo, hi = float(domain_box[0]), float(domain_box[1])
    if isinstance(price, LinearPrice):
        rep = AssumptionReport("linear")
        C = price.C
        sym_err = float(np.max(np.abs(C - C.T))) if C.size else 0.0
        scale = max(1.0, float(np.max(np.abs(C)))) if C.size else 1.0
        rep.add("symmetric", sym_err <= 1e-10 * scale, f"max |C - C^T| = {sym_err:.3e}")
        lam_min = float(np.linalg.eigvalsh((C + C.T) / 2.0).min())
        rep.add("positive_definite", lam_min > 0, f"lambda_min(sym part) = {lam_min:.6g}")
        rep.add("strongly_monotone", lam_min > 0, "equals positive_definite for linear p")
        return rep
    if isinstance(price, MonomialPrice):
        rep = AssumptionReport("monomial")
        rep.add("alpha_positive", price.alpha > 0, f"alpha = {price.alpha}")
        rep.add("k_positive", price.k > 0, f"k = {price.k}")
        # f'(y) = alpha k y^(k-1) > 0 on y > 0, so monotonicity is analytic
        rep.add("strongly_monotone", price.alpha > 0 and price.k > 0,
                "analytic: f'(y) > 0 for y > 0")
        return rep
    if isinstance(price, HeterogeneousPrice):
        rep = AssumptionReport("heterogeneous")
        ys = np.linspace(max(lo, 0.0), hi, grid)
        h = ys[1] - ys[0]
        nonneg = True
        nondec = True
        min_slope = math.inf
        for sp in price.components:
            vals = np.asarray(sp.value(ys), dtype=float)
            nonneg &= bool(np.all(vals >= -1e-12))
            diffs = np.diff(vals)
            nondec &= bool(np.all(diffs >= -1e-12 * max(1.0, np.max(np.abs(vals)))))
            min_slope = min(min_slope, float(np.min(diffs)) / h)
        rep.add("nonnegative", nonneg)
        rep.add("nondecreasing", nondec)
        # strong monotonicity is not required by this family, note it only
        rep.note("strongly_monotone", min_slope > 1e-12,
                 f"min sampled slope = {min_slope:.3e}")
        return rep
    raise SpecValidationError(f"unknown price family {type(price).__name__}")


def is_strongly_monotone(price: PriceFunction, domain_box=(0.0, 10.0)) -> bool:
    """Solver precheck: strict increase of z -> p(z+d) on the given range."""
    rep = validate_assumptions(price, domain_box)
    if "strongly_monotone" in rep.checks:
        return rep.check("strongly_monotone")
    return rep.info["strongly_monotone"][0]


# ---------------------------------------------------------------------------
# constants for the finite-population bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantsEstimate:
    """Constants feeding the 1 + c/(J_hat sqrt(M)) efficiency bound.

    R bounds the norm of every feasible action, l_price and l_social are
    Lipschitz constants of the price map and of the social cost, alpha_mono
    is the monotonicity constant of z -> p(z+d). c = R * l_social *
    sqrt(2 * l_price / alpha_mono). With j_hat == 0 the estimate still
    certifies the additive cost gap, but no PoA ratio bound (cost_gap_only).
    """

    R: float
    l_price: float
    alpha_mono: float
    l_social: float
    j_hat: float
    c: float
    cost_gap_only: bool = False

    def __post_init__(self):
        for name in ("R", "l_price", "alpha_mono", "l_social"):
            if getattr(self, name) <= 0 or not math.isfinite(getattr(self, name)):
                raise SpecValidationError(f"constant {name} must be finite and > 0")
        expected = self.R * self.l_social * math.sqrt(2.0 * self.l_price / self.alpha_mono)
        if not math.isclose(self.c, expected, rel_tol=1e-12):
            raise SpecValidationError("c inconsistent with R*L_S*sqrt(2*L_p/alpha)")


def _sampled_derivative_range(fn, lo, hi, points=SAMPLING_POINTS):
    """(min, max) of a scalar derivative over [lo, hi], log-spaced dense grid."""
    lo = max(lo, 0.0)
    if hi <= lo:
        hi = lo + 1.0
    if lo <= 0:
        ys = np.concatenate(([0.0], np.geomspace(max(hi * 1e-12, 1e-300), hi, points - 1)))
    else:
        ys = np.geomspace(lo, hi, points)
    vals = np.asarray(fn(ys), dtype=float)
    return float(np.min(vals)), float(np.max(vals))


def estimate_constants(price: PriceFunction, R: float, d, j_hat: float) -> ConstantsEstimate:
    """Estimate (L_p, alpha, L_S) over the reachable range and assemble c.

    Closed forms: linear -> spectral norm / smallest symmetric eigenvalue;
    monomial -> extrema of f' over [min d, R + max d]. The heterogeneous
    family is sampled on a dense grid with a documented safety factor
    (Lipschitz constants inflated, monotonicity constant deflated).
    """
    if R <= 0:
        raise SpecValidationError("R must be > 0")
    if j_hat < 0:
        raise SpecValidationError("j_hat must be >= 0")
    d = np.asarray(d, dtype=float)
    n = d.size
    y_lo = float(np.min(d))
    y_hi = R + float(np.max(d))

    if isinstance(price, LinearPrice):
        C = price.C
        l_price = float(np.linalg.norm(C, 2))
        alpha = float(np.linalg.eigvalsh((C + C.T) / 2.0).min())
        if alpha <= 0:
            raise SpecValidationError("linear price not strongly monotone (lambda_min <= 0)")
        # grad J_S = (C + C^T)(z + d), |z + d| <= R + |d|
        l_social = float(np.linalg.norm(C + C.T, 2)) * (R + float(np.linalg.norm(d)))
    elif isinstance(price, MonomialPrice):
        a, k = price.alpha, price.k
        fprime = lambda y: a * k * np.power(y, k - 1.0)
        if k >= 1:
            l_price = fprime(y_hi) if k > 1 else a
            alpha = fprime(y_lo) if k > 1 else a
        else:
            if y_lo <= 0:
                raise SpecValidationError("monomial with k < 1 needs min(d) > 0 for a finite L_p")
            l_price = fprime(y_lo)
            alpha = fprime(y_hi)
        if alpha <= 0:
            raise SpecValidationError("monotonicity constant vanished (min(d) = 0 with k > 1?)")
        # d/dy [alpha y^(k+1)] = alpha (k+1) y^k, nondecreasing in y
        l_social = math.sqrt(n) * a * (k + 1.0) * y_hi ** k
    elif isinstance(price, HeterogeneousPrice):
        l_p = 0.0
        alpha = math.inf
        l_s = 0.0
        for sp in price.components:
            mn, mx = _sampled_derivative_range(lambda y: sp.derivative(y), y_lo, y_hi)
            l_p = max(l_p, mx)
            alpha = min(alpha, mn)
            # slope of y -> l(y) * y is l'(y) y + l(y)
            _, gs = _sampled_derivative_range(
                lambda y: np.asarray(sp.derivative(y)) * y + np.asarray(sp.value(y)), y_lo, y_hi)
            l_s = max(l_s, gs)
        l_price = l_p * SAFETY_FACTOR
        alpha = alpha / SAFETY_FACTOR
        l_social = math.sqrt(n) * l_s * SAFETY_FACTOR
        if alpha <= 0:
            raise SpecValidationError("heterogeneous price not strongly monotone on the range")
    else:
        raise SpecValidationError(f"unknown price family {type(price).__name__}")

    c = R * l_social * math.sqrt(2.0 * l_price / alpha)
    return ConstantsEstimate(R=R, l_price=l_price, alpha_mono=alpha, l_social=l_social,
                             j_hat=j_hat, c=c, cost_gap_only=(j_hat == 0.0))


def social_gradient_lipschitz(price: PriceFunction, R: float, d) -> float:
    """Upper bound on the Lipschitz modulus of z -> F_S(z), for step sizing."""
    d = np.asarray(d, dtype=float)
    y_lo, y_hi = float(np.min(d)), R + float(np.max(d))
    if isinstance(price, LinearPrice):
        return float(np.linalg.norm(price.C + price.C.T, 2))
    if isinstance(price, MonomialPrice):
        a, k = price.alpha, price.k
        y_ref = y_hi if k >= 1 else max(y_lo, 1e-12)
        return a * (k + 1.0) * k * y_ref ** abs(k - 1.0) if k != 1 else 2.0 * a
    # componentwise F_S,t = l_t(y) + l_t'(y) y; bound its slope by sampling
    worst = 0.0
    for sp in price.components:
        ys = np.linspace(max(y_lo, 1e-9), max(y_hi, y_lo + 1.0), 512)
        g = np.asarray(sp.derivative(ys)) * ys + np.asarray(sp.value(ys))
        slopes = np.abs(np.diff(g) / np.diff(ys))
        worst = max(worst, float(np.max(slopes)) if slopes.size else 0.0)
    return max(worst * 2.0, 1e-9)


# ---------------------------------------------------------------------------
# anarchy value
# ---------------------------------------------------------------------------

def _beta_numeric(sp: ScalarPrice, v_cap=1e6, v_grid=200, w_grid=512):
    """beta contribution of one member: sup_v (max_w (l(v)-l(w))w) / (v l(v)).

    The inner max over w >= 0 is attained on [0, v] (l nondecreasing makes the
    integrand nonpositive for w > v); grid plus golden refinement. Points with
    v*l(v) = 0 are excluded from the outer sup (0/0 guard).
    """
    vs = np.geomspace(1e-6, v_cap, v_grid)
    best = 0.0
    for v in vs:
        lv = float(np.asarray(sp.value(v)))
        denom = v * lv
        if denom <= 0:
            continue
        ws = np.linspace(0.0, v, w_grid)
        gains = (lv - np.asarray(sp.value(ws), dtype=float)) * ws
        j = int(np.argmax(gains))
        lo = ws[max(j - 1, 0)]
        hi = ws[min(j + 1, w_grid - 1)]
        # golden-section refine on [lo, hi]
        phi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        f = lambda w: (lv - float(np.asarray(sp.value(w)))) * w
        for _ in range(60):
            m1 = b - phi * (b - a)
            m2 = a + phi * (b - a)
            if f(m1) >= f(m2):
                b = m2
            else:
                a = m1
        inner = max(float(np.max(gains)), f((a + b) / 2.0))
        best = max(best, inner / denom)
    return best


def class_members(class_spec) -> list:
    """Normalize a class description into scalar-price members.

    Accepts a list of ScalarPrice values, a PiecewiseSchedule (its distinct
    members), a HeterogeneousPrice, or a parametric string: "affine",
    "constant", or "monomial:k" for pure degree-k monomials.
    """
    if isinstance(class_spec, str):
        name = class_spec.strip().lower()
        if name == "affine":
            # b = 0 attains the supremum over {a y + b}; scale a is immaterial
            return [AffinePrice(1.0, 0.0)]
        if name == "constant":
            return [ConstantPrice(1.0)]
        if name.startswith("monomial"):
            try:
                k = float(name.split(":", 1)[1])
            except (IndexError, ValueError):
                raise SpecValidationError("parametric monomial class must be 'monomial:<k>'")
            return [MonomialScalarPrice(1.0, k)]
        raise SpecValidationError(f"unknown parametric class {class_spec!r}")
    if isinstance(class_spec, PiecewiseSchedule):
        return class_spec.members()
    if isinstance(class_spec, HeterogeneousPrice):
        members = []
        for sp in class_spec.components:
            if sp not in members:
                members.append(sp)
        return members
    members = list(class_spec)
    if not members:
        raise SpecValidationError("empty price class")
    return members


def anarchy_value(class_spec, v_cap=1e6, eps=1e-9) -> float:
    """alpha(L) = 1/(1 - beta(L)) for a class of nondecreasing scalar prices.

    beta(L) is the worst relative gain a unilateral load shift can extract
    against a fixed price level, maximized over class members; +inf when
    beta reaches 1. Closed forms are used for constant/affine/monomial
    members, a (v, w) search otherwise.
    """
    members = class_members(class_spec)
    beta = 0.0
    for sp in members:
        if not isinstance(sp, ScalarPrice):
            raise SpecValidationError("class members must be ScalarPrice values")
        cf = sp.beta_closed_form()
        beta_m = cf if cf is not None else _beta_numeric(sp, v_cap=v_cap)
        if beta_m < -1e-12:
            raise SpecValidationError("negative beta, member is decreasing?")
        beta = max(beta, beta_m)
    if beta >= 1.0 - eps:
        return math.inf
    return 1.0 / (1.0 - beta)


def beta_value(class_spec, v_cap=1e6) -> float:
    """beta(L) alone (see anarchy_value)."""
    members = class_members(class_spec)
    vals = []
    for sp in members:
        cf = sp.beta_closed_form()
        vals.append(cf if cf is not None else _beta_numeric(sp, v_cap=v_cap))
    return max(vals)
