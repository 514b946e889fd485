"""A quick internal invariant suite run by ``conclab selftest``."""
from __future__ import annotations

import math

import numpy as np

from . import certify, diffops, generators, laplacian
from .hoeffding import decompose
from .product_space import ProductSpace, expectation, from_walsh, monomial, to_walsh


def _worked_numbers():
    s = ProductSpace.cube(2)
    cert = certify.certify("cor_bernoulli", monomial(s, [0, 1]))
    ok = cert.verdict == certify.PASS and abs(cert.measured - math.exp(1 / 7)) <= 1e-9
    s3 = ProductSpace.cube(3)
    f3 = monomial(s3, [0, 1, 2])
    ok = ok and abs(certify.b_squared(f3) - 6.0) <= 1e-12
    rows = laplacian.spectrum(f3).rows
    return ok and rows[0]["eigenvalue"] == 6 and rows[0]["residual"] <= 1e-9, cert.measured


def _walsh_round_trip(rng):
    f = generators.random_function(ProductSpace.cube(6), rng)
    err = float(np.max(np.abs(from_walsh(to_walsh(f, 0.0)).values - f.values)))
    return err <= 1e-12, err


def _spectrum(rng):
    worst = 0.0
    for kind in ("cube", "mixed", "two_point"):
        space = generators.random_space(rng, 4, kind)
        rep = laplacian.spectrum(generators.random_function(space, rng))
        if not rep.ok:
            return False, rep.to_json()
        worst = max(worst, max(r["residual"] for r in rep.rows))
    return True, worst


def _decomposition_sums_back(rng):
    space = generators.random_space(rng, 4, "mixed")
    f = generators.random_function(space, rng)
    dec = decompose(f)
    total = sum(dec.degree(d).values for d in range(space.n + 1))
    err = float(np.max(np.abs(total - f.values)))
    return err <= 1e-12 * max(1.0, f.sup_norm()), err


def _gradient_hessian_identity(rng):
    space = generators.random_space(rng, 5, "mixed")
    worst = 0.0
    for k in (2, 3, 4):
        f = generators.random_pure_degree(space, k, rng)
        ef2 = expectation(f * f)
        g = expectation(diffops.grad_norm(f, "d").map(np.square)) / (k * ef2)
        h = certify.b_squared(f) / (k * (k - 1) * ef2)
        worst = max(worst, abs(g - 1), abs(h - 1))
    return worst <= 1e-9, worst


def _mlsi(rng):
    for kind, sigma2 in (("mixed", 2.0), ("two_point", 1.0)):
        space = generators.random_space(rng, 3, kind)
        for _ in range(20):
            cert = certify.mlsi_check(generators.random_function(space, rng), "d", sigma2)
            if cert.verdict != certify.PASS:
                return False, cert.to_json()
    return True, None


def _key_inequality(rng):
    space = ProductSpace.cube(5)
    for _ in range(20):
        rep = certify.bernoulli2_key_inequality(generators.random_chaos(space, (2, 3), rng, terms=4))
        if not rep.ok:
            return False, rep.to_json()
    return True, None


def _mc_agrees(rng):
    space = ProductSpace.cube(8)
    f = generators.random_chaos(space, (2,), rng, terms=5)
    c = 0.1 / max(1.0, f.sup_norm())
    exact = certify.exp_moment(f, c).value
    mc = certify.exp_moment(f, c, "mc", 20000, 7)
    return abs(mc.value - exact) <= mc.ci, abs(mc.value - exact)


CHECKS = (
    ("worked_numbers", lambda rng: _worked_numbers()),
    ("walsh_round_trip", _walsh_round_trip),
    ("decomposition_sums_back", _decomposition_sums_back),
    ("laplacian_spectrum", _spectrum),
    ("gradient_hessian_identity", _gradient_hessian_identity),
    ("modified_lsi", _mlsi),
    ("cube_key_inequality", _key_inequality),
    ("monte_carlo_vs_exact", _mc_agrees),
)


def run(seed: int = 20240601) -> list[dict]:
    """Run every check with its own generator; returns one row per check."""
    rows = []
    for k, (name, check) in enumerate(CHECKS):
        ok, detail = check(np.random.default_rng([seed, k]))
        rows.append({"check": name, "ok": bool(ok), "detail": detail})
    return rows
