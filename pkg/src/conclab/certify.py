"""Concentration certificates: hypothesis quantities, exponential moments, verdicts.

Every certificate records the hypothesis values it computed, whether each
hypothesis holds, the claimed constant, the measured quantity (exact or Monte
Carlo with a 99% normal confidence interval) and a verdict.  Hypothesis
failures give ``not_applicable``; they never turn into a pass.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import diffops
from .hoeffding import decompose, first_order, low_order_sizes, remainder, LOW_ORDER_TOL
from .product_space import (
    GridFunction,
    SpaceError,
    entropy,
    evaluate_at,
    expectation,
    sample_digits,
)

PASS, FAIL, NOT_APPLICABLE, INCONCLUSIVE = "pass", "fail", "not_applicable", "inconclusive"
Z99 = 2.5758293035489004  # two-sided 99% normal quantile
HYP_TOL = 1e-10
CMP_TOL = 1e-10
EXP_LIMIT = 700.0
DEFAULT_SAMPLES = 10 ** 6

THEOREMS = (
    "prop_1_1", "thm_zentral", "cor_bernoulli", "cor_plus", "thm_hoeffding1",
    "thm_einfachere", "prop_bernoulli2", "ineq_A", "lemma_B", "prop_4_2",
    "mlsi", "gradient_hesse",
)


class CertifyError(ValueError):
    pass


@dataclass
class Measurement:
    value: float
    method: str = "exact"
    samples: int | None = None
    seed: int | None = None
    ci: float = 0.0

    def to_json(self) -> dict:
        out = {"name": self.method}
        if self.method == "monte_carlo":
            out.update(samples=self.samples, seed=self.seed, ci=self.ci)
        return out


@dataclass
class Certificate:
    theorem_id: str
    hypothesis_values: dict = field(default_factory=dict)
    hypothesis_ok: dict = field(default_factory=dict)
    bound_constant: float | None = None
    bound: float | None = None
    measured: float | None = None
    method: dict = field(default_factory=lambda: {"name": "exact"})
    verdict: str = NOT_APPLICABLE
    slack: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def ci(self) -> float:
        return float(self.method.get("ci", 0.0))

    def to_json(self) -> dict:
        return asdict(self)

    def csv_fields(self) -> list:
        """theorem, c, bound, measured, ci, verdict, slack."""
        return [self.theorem_id, self.bound_constant, self.bound, self.measured, self.ci, self.verdict, self.slack]


@dataclass
class InequalityReport:
    """Outcome of a pointwise or integral proof-step inequality lhs <= rhs."""

    name: str
    lhs: float
    rhs: float
    residual: float
    ok: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _finish(cert: Certificate, tol: float = 0.0) -> Certificate:
    """Set verdict and slack from measured vs bound."""
    if cert.measured is not None and cert.bound is not None:
        cert.slack = cert.bound - cert.measured
    if not all(cert.hypothesis_ok.values()):
        cert.verdict = NOT_APPLICABLE
    elif cert.measured is None:
        cert.verdict = NOT_APPLICABLE
    elif cert.measured <= cert.bound + cert.ci + tol:
        cert.verdict = PASS
    else:
        cert.verdict = FAIL
    return cert


def _require_dense(f: GridFunction) -> GridFunction:
    if not f.space.is_dense_ok:
        raise CertifyError("hypothesis quantities need exact enumeration; space exceeds the dense cap")
    return f.dense()


def _sup_abs_bound(f: GridFunction) -> float:
    if f.is_dense or f.space.is_dense_ok:
        return f.sup_norm()
    return math.fsum(abs(a) for a in f.walsh.values())


# ---------------------------------------------------------------------------
# hypothesis quantities
# ---------------------------------------------------------------------------

def b_squared(f: GridFunction) -> float:
    """E ||D^(2) f||_HS^2 = E sum_{i != j} (D_ij f)^2."""
    f = _require_dense(f)
    return expectation(diffops.hess_hs2(f, "D2"))


def B1_B2(f: GridFunction) -> tuple[float, float]:
    """(sup ||d^(2) f||_HS, max_i sup |d_i f|)."""
    f = _require_dense(f)
    b1 = math.sqrt(max(0.0, float(np.max(diffops.hess_hs2(f, "d2").values))))
    b2 = max(float(np.max(diffops.d_i(f, i).values)) for i in range(f.space.n))
    return b1, b2


def sup_iterated_d(f: GridFunction) -> float:
    return float(np.max(diffops.iterated_d(_require_dense(f)).values))


def sup_iterated_dplus(f: GridFunction) -> float:
    return float(np.max(diffops.iterated_dplus(_require_dense(f)).values))


def default_sigma2(space, kind: str = "d") -> float:
    """A modified log-Sobolev constant that holds on ``space``.

    For d: 2 in general, 1 when every factor is an equal-weight two-point
    measure.  Biased two-point factors violate the inequality at 1 (small
    perturbations with skewed third moment), so they get 2.
    For d+: 4 in general, 2 for two-point factors.
    """
    if kind == "d":
        fair = all(f.size == 2 and f.probs[0] == f.probs[1] for f in space.factors)
        return 1.0 if fair else 2.0
    two = space.is_two_point
    if kind == "dplus":
        return 2.0 if two else 4.0
    raise ValueError(f"unknown gradient kind {kind!r}")


# ---------------------------------------------------------------------------
# exponential moments
# ---------------------------------------------------------------------------

def exp_moment(
    f: GridFunction,
    c: float,
    method: str = "exact",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    signed: bool = False,
) -> Measurement:
    """E exp(c |f|) (or E exp(c f) with ``signed``)."""
    if c < 0:
        raise CertifyError("c must be nonnegative")
    if c * _sup_abs_bound(f) > EXP_LIMIT:
        raise CertifyError(f"c * sup|f| exceeds {EXP_LIMIT}; exponential would overflow")

    def integrand(v):
        return np.exp(c * (v if signed else np.abs(v)))

    if method == "exact":
        f = _require_dense(f)
        return Measurement(expectation(f.map(integrand)))
    if method in ("mc", "monte_carlo"):
        if samples < 2:
            raise CertifyError("Monte Carlo needs at least 2 samples")
        digits = sample_digits(f.space, seed, samples)
        vals = integrand(evaluate_at(f, digits))
        mean = float(np.mean(vals))
        ci = Z99 * float(np.std(vals, ddof=1)) / math.sqrt(samples)
        return Measurement(mean, "monte_carlo", samples, seed, ci)
    raise CertifyError(f"unknown method {method!r}")


def tail_probabilities(f: GridFunction, ts, method="exact", samples=DEFAULT_SAMPLES, seed=0):
    """mu(|f - E f| >= t) on a grid, with 99% CIs for Monte Carlo."""
    f = _require_dense(f)
    dev = np.abs(f.values - expectation(f))
    scale = max(1.0, float(np.max(dev)))
    if method == "exact":
        w = f.space.weights
        return [float(np.sum(w[dev >= t - 1e-12 * scale])) for t in ts], [0.0] * len(ts)
    digits = sample_digits(f.space, seed, samples)
    d = np.abs(evaluate_at(f, digits) - expectation(f))
    ps = [float(np.mean(d >= t - 1e-12 * scale)) for t in ts]
    cis = [Z99 * math.sqrt(p * (1 - p) / samples) for p in ps]
    return ps, cis


# ---------------------------------------------------------------------------
# main theorems
# ---------------------------------------------------------------------------

def _low_order(f: GridFunction, values: dict, ok: dict, need_f1: bool = True):
    f0, f1 = low_order_sizes(f)
    bound = LOW_ORDER_TOL * max(1.0, f.sup_norm())
    values["abs_f0"] = f0
    ok["f0_vanishes"] = f0 <= bound
    if need_f1:
        values["sup_abs_f1"] = f1
        ok["f1_vanishes"] = f1 <= bound


def _rescaled(f: GridFunction, s: float, rescale: bool) -> tuple[GridFunction, float]:
    if rescale and s > 0:
        lam = 1.0 / s
        return f * lam, lam
    return f, 1.0


def _exp_certificate(cert, f, c, method, samples, seed):
    cert.bound_constant = c
    cert.bound = 2.0
    try:
        m = exp_moment(f, c, method, samples, seed)
    except CertifyError as exc:
        cert.details["measure_error"] = str(exc)
        return _finish(cert)
    cert.measured = m.value
    cert.method = m.to_json()
    return _finish(cert)


def _zentral_family(theorem_id, f, method, samples, seed, rescale):
    f = _require_dense(f)
    cert = Certificate(theorem_id)
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    plus = theorem_id == "cor_plus"
    sup_fn = sup_iterated_dplus if plus else sup_iterated_d
    f, lam = _rescaled(f, sup_fn(f), rescale)
    hv["lambda"] = lam
    _low_order(f, hv, ok)
    key = "sup_iterated_dplus" if plus else "sup_iterated_d"
    hv[key] = sup_fn(f)
    ok[key + "_le_1"] = hv[key] <= 1.0 + HYP_TOL
    b2 = b_squared(f)
    hv["b2"] = b2
    if theorem_id == "cor_bernoulli":
        ok["two_point_factors"] = f.space.is_two_point
        c = 1.0 / (3.0 + 2.0 * b2)
    elif plus:
        c = 1.0 / (2.0 * (4.0 + b2))
    else:
        c = 1.0 / (2.0 * (3.0 + b2))
    return _exp_certificate(cert, f, c, method, samples, seed)


def _hoeffding1(f, method, samples, seed, rescale):
    f = _require_dense(f)
    cert = Certificate("thm_hoeffding1")
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    f, lam = _rescaled(f, sup_iterated_d(remainder(f)), rescale)
    hv["lambda"] = lam
    _low_order(f, hv, ok, need_f1=False)
    rf = remainder(f)
    hv["b0"] = float(np.max(diffops.grad_norm(first_order(f), "d").values))
    hv["sup_iterated_d_Rf"] = sup_iterated_d(rf)
    ok["sup_iterated_d_Rf_le_1"] = hv["sup_iterated_d_Rf"] <= 1.0 + HYP_TOL
    hv["b2"] = b_squared(f)
    c = 1.0 / (12.0 + 4.0 * hv["b2"] + 7.0 * hv["b0"])
    return _exp_certificate(cert, f, c, method, samples, seed)


def _einfachere(f, method, samples, seed):
    f = _require_dense(f)
    cert = Certificate("thm_einfachere")
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    _low_order(f, hv, ok)
    b1, b2 = B1_B2(f)
    hv["B1"], hv["B2"] = b1, b2
    hv["two_point"] = float(f.space.is_two_point)
    k = 1.0 / 7.0 if f.space.is_two_point else 1.0 / 11.0
    c = k / (b1 + b2) if b1 + b2 > 0 else 0.0
    return _exp_certificate(cert, f, c, method, samples, seed)


def _bernoulli2(f, method, samples, seed):
    f = _require_dense(f)
    cert = Certificate("prop_bernoulli2")
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    ok["uniform_cube"] = f.space.is_uniform_cube
    _low_order(f, hv, ok)
    big_b = math.sqrt(max(0.0, float(np.max(diffops.hess_hs2(f, "D2").values))))
    hv["B"] = big_b
    c = 1.0 / (5.0 * big_b) if big_b > 0 else 0.0
    return _exp_certificate(cert, f, c, method, samples, seed)


def _prop_1_1(f, method, samples, seed, rescale):
    f = _require_dense(f)
    cert = Certificate("prop_1_1")
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    f, lam = _rescaled(f, float(np.max(diffops.grad_norm(f, "d").values)), rescale)
    hv["lambda"] = lam
    hv["sup_grad_d"] = float(np.max(diffops.grad_norm(f, "d").values))
    ok["sup_grad_d_le_1"] = hv["sup_grad_d"] <= 1.0 + HYP_TOL
    mean = expectation(f)
    sd = math.sqrt(max(0.0, expectation((f - mean) * (f - mean))))
    ts = [0.25 * k * sd for k in range(17)]
    tails, cis = tail_probabilities(f, ts, "exact" if method == "exact" else "mc", samples, seed)
    bounds = [2.0 * math.exp(-t * t / 4.0) for t in ts]
    slacks = [b + ci - p for p, b, ci in zip(tails, bounds, cis)]
    worst = int(np.argmin(slacks))
    cert.bound_constant = 0.25
    cert.bound = bounds[worst]
    cert.measured = tails[worst]
    cert.method = {"name": "exact"} if method == "exact" else Measurement(
        tails[worst], "monte_carlo", samples, seed, cis[worst]).to_json()
    cert.details = {"t": ts, "tail": tails, "bound": bounds, "ci": cis}
    return _finish(cert)


def certify(
    theorem_id: str,
    f: GridFunction,
    method: str = "exact",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    rescale: bool = False,
    **options,
) -> Certificate:
    """Certify one concentration statement for ``f``.

    ``rescale`` replaces f by lambda f with lambda the largest factor meeting the
    normalization hypothesis (sup of the relevant iterated difference = 1).
    Extra ``options`` feed the auxiliary checks (sigma2, sigma2t, t, gamma).
    """
    if theorem_id in ("thm_zentral", "cor_bernoulli", "cor_plus"):
        return _zentral_family(theorem_id, f, method, samples, seed, rescale)
    if theorem_id == "thm_hoeffding1":
        return _hoeffding1(f, method, samples, seed, rescale)
    if theorem_id == "thm_einfachere":
        return _einfachere(f, method, samples, seed)
    if theorem_id == "prop_bernoulli2":
        return _bernoulli2(f, method, samples, seed)
    if theorem_id == "prop_1_1":
        return _prop_1_1(f, method, samples, seed, rescale)
    if theorem_id == "mlsi":
        return mlsi_check(f, options.get("gamma", "d"), options.get("sigma2"))
    if theorem_id == "ineq_A":
        return ineq_A_check(f, options.get("sigma2"))
    if theorem_id == "lemma_B":
        return lemma_B_check(f, options.get("t", 0.1), options.get("sigma2t"))
    if theorem_id == "prop_4_2":
        return prop_4_2_check(f, options.get("sigma2"), options.get("sigma2t"))
    if theorem_id == "gradient_hesse":
        return gradient_hesse_check(f)
    raise CertifyError(f"unknown theorem id {theorem_id!r}; expected one of {', '.join(THEOREMS)}")


# ---------------------------------------------------------------------------
# functional inequalities behind the theorems
# ---------------------------------------------------------------------------

def _compare(cert: Certificate, lhs: float, rhs: float) -> Certificate:
    cert.measured, cert.bound = lhs, rhs
    return _finish(cert, CMP_TOL * max(1.0, abs(lhs), abs(rhs)))


def mlsi_check(f: GridFunction, gamma_kind: str = "d", sigma2: float | None = None) -> Certificate:
    """Ent(e^f) <= sigma2/2 * E |Gamma f|^2 e^f."""
    f = _require_dense(f)
    if sigma2 is None:
        sigma2 = default_sigma2(f.space, gamma_kind)
    cert = Certificate("mlsi", bound_constant=sigma2)
    cert.hypothesis_values.update(sigma2=sigma2, gamma=gamma_kind)
    if f.sup_norm() > EXP_LIMIT:
        raise CertifyError(f"sup|f| exceeds {EXP_LIMIT}; exponential would overflow")
    ef = f.map(np.exp)
    g2 = diffops.grad_norm(f, gamma_kind).map(np.square)
    return _compare(cert, entropy(ef), 0.5 * sigma2 * expectation(g2 * ef))


def _mean_zero(f, cert):
    m = expectation(f)
    cert.hypothesis_values["mean"] = m
    cert.hypothesis_ok["mean_zero"] = abs(m) <= LOW_ORDER_TOL * max(1.0, f.sup_norm())


def ineq_A_check(f: GridFunction, sigma2: float | None = None) -> Certificate:
    """E e^f <= E e^{sigma2 |d f|^2} for mean-zero f."""
    f = _require_dense(f)
    sigma2 = default_sigma2(f.space) if sigma2 is None else sigma2
    cert = Certificate("ineq_A", bound_constant=sigma2)
    cert.hypothesis_values["sigma2"] = sigma2
    _mean_zero(f, cert)
    g2 = diffops.grad_norm(f, "d").map(np.square)
    if max(f.sup_norm(), sigma2 * g2.sup_norm()) > EXP_LIMIT:
        raise CertifyError("exponent exceeds overflow guard")
    return _compare(cert, expectation(f.map(np.exp)), expectation((sigma2 * g2).map(np.exp)))


def lemma_B_check(f: GridFunction, t: float, sigma2t: float | None = None) -> Certificate:
    """E e^{t f^2} <= exp(t / (1 - 2 sigma2t t) * E f^2) when |d|f|| <= 1."""
    f = _require_dense(f)
    sigma2t = default_sigma2(f.space, "dplus") if sigma2t is None else sigma2t
    cert = Certificate("lemma_B", bound_constant=sigma2t)
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    hv.update(t=t, sigma2t=sigma2t)
    hv["sup_grad_d_abs_f"] = float(np.max(diffops.grad_norm(abs(f), "d").values))
    ok["sup_grad_d_abs_f_le_1"] = hv["sup_grad_d_abs_f"] <= 1.0 + HYP_TOL
    ok["t_in_range"] = 0.0 <= t < 1.0 / (2.0 * sigma2t)
    if not ok["t_in_range"]:
        return _finish(cert)
    f2 = f * f
    if t * f2.sup_norm() > EXP_LIMIT:
        raise CertifyError("exponent exceeds overflow guard")
    rhs = math.exp(t / (1.0 - 2.0 * sigma2t * t) * expectation(f2))
    return _compare(cert, expectation((t * f2).map(np.exp)), rhs)


def prop_4_2_check(f: GridFunction, sigma2: float | None = None, sigma2t: float | None = None) -> Certificate:
    """E exp(f / (2 sigma sigma~)) <= exp(E |d f|^2 / (2 sigma~^2)) for mean-zero f with |d|d f|| <= 1."""
    f = _require_dense(f)
    sigma2 = default_sigma2(f.space, "d") if sigma2 is None else sigma2
    sigma2t = default_sigma2(f.space, "dplus") if sigma2t is None else sigma2t
    cert = Certificate("prop_4_2", bound_constant=1.0 / (2.0 * math.sqrt(sigma2 * sigma2t)))
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    hv.update(sigma2=sigma2, sigma2t=sigma2t)
    _mean_zero(f, cert)
    hv["sup_iterated_d"] = sup_iterated_d(f)
    ok["sup_iterated_d_le_1"] = hv["sup_iterated_d"] <= 1.0 + HYP_TOL
    lam = cert.bound_constant
    if lam * f.sup_norm() > EXP_LIMIT:
        raise CertifyError("exponent exceeds overflow guard")
    energy = expectation(diffops.grad_norm(f, "d").map(np.square))
    return _compare(cert, expectation((lam * f).map(np.exp)), math.exp(energy / (2.0 * sigma2t)))


def gradient_hesse_check(f: GridFunction) -> Certificate:
    """E |d f|^2 <= E ||D^(2) f||_HS^2 / (d - 1) for lowest Hoeffding degree d >= 2."""
    f = _require_dense(f)
    cert = Certificate("gradient_hesse")
    hv, ok = cert.hypothesis_values, cert.hypothesis_ok
    _low_order(f, hv, ok)
    norms = decompose(f).degree_norms2()
    present = [d for d in range(2, f.space.n + 1) if norms[d] > 0.0]
    grad2 = expectation(diffops.grad_norm(f, "d").map(np.square))
    hess2 = b_squared(f)
    hv.update(grad_energy=grad2, hessian_energy=hess2)
    if not present:
        # f vanishes identically (up to the low-order tolerance): 0 <= 0
        cert.bound_constant = None
        return _compare(cert, grad2, hess2)
    d = present[0]
    hv["lowest_degree"] = d
    cert.bound_constant = 1.0 / (d - 1)
    ratio = grad2 / hess2
    cert.details["single_degree"] = len(present) == 1
    if len(present) == 1:
        cert.details["equality_residual"] = abs(ratio - cert.bound_constant)
        cert.details["equality_ok"] = cert.details["equality_residual"] <= 1e-9 * cert.bound_constant
    cert.measured, cert.bound = ratio, cert.bound_constant
    return _finish(cert, 1e-9 * cert.bound_constant)


# ---------------------------------------------------------------------------
# proof-step inequalities
# ---------------------------------------------------------------------------

def bernoulli2_key_inequality(f: GridFunction) -> InequalityReport:
    """Pointwise |d|d f|| <= ||d^(2) f||_HS on the uniform cube."""
    f = _require_dense(f)
    if not f.space.is_uniform_cube:
        raise SpaceError("the key inequality is stated on the uniform cube")
    lhs = diffops.iterated_d(f).values
    rhs = np.sqrt(diffops.hess_hs2(f, "d2").values)
    diff = lhs - rhs
    worst = int(np.argmax(diff))
    scale = max(1.0, float(np.max(rhs)))
    return InequalityReport(
        "bernoulli2_key", float(lhs[worst]), float(rhs[worst]), float(diff[worst]),
        bool(diff[worst] <= CMP_TOL * scale),
    )


def einfachere_intermediate(f: GridFunction) -> InequalityReport:
    """sup |d|d f|| <= sqrt(2) B1 + B2 and E ||D^(2) f||_HS^2 <= 4 B1^2."""
    f = _require_dense(f)
    if not (0 <= low_order_sizes(f)[1] <= LOW_ORDER_TOL * max(1.0, f.sup_norm())):
        raise CertifyError("f must have vanishing first-order Hoeffding term")
    b1, b2 = B1_B2(f)
    s = sup_iterated_d(f)
    rhs = math.sqrt(2.0) * b1 + b2
    hb2 = b_squared(f)
    scale = max(1.0, rhs)
    ok1 = s <= rhs + CMP_TOL * scale
    ok2 = hb2 <= 4.0 * b1 * b1 + CMP_TOL * max(1.0, 4.0 * b1 * b1)
    return InequalityReport(
        "einfachere_intermediate", s, rhs, s - rhs, bool(ok1 and ok2),
        {"B1": b1, "B2": b2, "b2": hb2, "four_B1_sq": 4.0 * b1 * b1, "hessian_ok": bool(ok2), "sup_ok": bool(ok1)},
    )


def chain_rule_imitation(f: GridFunction) -> InequalityReport:
    """|d+ f^2| <= 2 |f| pointwise, provided |d+ |f|| <= 1."""
    f = _require_dense(f)
    hyp = float(np.max(diffops.grad_norm(abs(f), "dplus").values))
    if hyp > 1.0 + HYP_TOL:
        raise CertifyError(f"hypothesis |d+|f|| <= 1 fails (sup = {hyp!r})")
    lhs = diffops.grad_norm(f * f, "dplus").values
    rhs = 2.0 * np.abs(f.values)
    diff = lhs - rhs
    worst = int(np.argmax(diff))
    return InequalityReport(
        "chain_rule_imitation", float(lhs[worst]), float(rhs[worst]), float(diff[worst]),
        bool(diff[worst] <= CMP_TOL * max(1.0, float(np.max(rhs)))), {"sup_dplus_abs_f": hyp},
    )
