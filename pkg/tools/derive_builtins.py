"""Derive the closed-form ingredients of the built-in models.

Run once with sympy available; the output module is committed and the
library never imports sympy::

    python tools/derive_builtins.py > src/hypocontrast/builtins/_closed_forms.py

For each model this emits plain-arithmetic functions for

* the drift and the rough diffusion column,
* generator iterates  L^{k-1} mu_block,
* directional terms   L_1 mu_S  (class I),  L_1 mu_S2, L_1 L mu_S1  (class II),
* covariance matrices Sigma_j of the standardised increment, j = 0..K.

Sigma_j comes from the formal moment series
E[phi(X_h)] = sum_k h^k / k! L^k phi(x): the coefficient of h^k in
Cov(X_a, X_b) is L^k(x_a x_b)/k! - sum_{i+j=k} L^i x_a L^j x_b / (i! j!).
Scaling component a by h^{-s_a/2} shifts that series by (s_a + s_b)/2, so
[Sigma_j]_{ab} is the coefficient of h^{(s_a+s_b)/2 + j}.  Lower coefficients
must vanish; the script asserts it.
"""
from __future__ import annotations

import sys
from math import factorial

import sympy as sp


class ModelDef:
    def __init__(self, name, states, params, consts, drift, diff, blocks, scales, mean_orders, n_corr):
        self.name = name
        self.states = states
        self.params = params
        self.consts = consts
        self.drift = drift
        self.diff = diff  # full N-vector of the single noise column
        self.blocks = blocks  # block name -> list of state indices
        self.scales = scales  # variance exponent per state index
        self.mean_orders = mean_orders  # block -> highest k of L^{k-1} mu needed
        self.n_corr = n_corr


def generator(mdef, phi):
    x = mdef.states
    out = sum(mu * sp.diff(phi, xi) for mu, xi in zip(mdef.drift, x))
    a = [[mdef.diff[i] * mdef.diff[j] for j in range(len(x))] for i in range(len(x))]
    for i in range(len(x)):
        for j in range(len(x)):
            if a[i][j] != 0:
                out += sp.Rational(1, 2) * a[i][j] * sp.diff(phi, x[i], x[j])
    return sp.expand(out)


def directional(mdef, phi):
    return sp.expand(sum(ai * sp.diff(phi, xi) for ai, xi in zip(mdef.diff, mdef.states)))


def iterate(mdef, phi, k):
    out = [sp.expand(phi)]
    for _ in range(k):
        out.append(generator(mdef, out[-1]))
    return out


def covariance_series(mdef, a, b, kmax):
    xa, xb = mdef.states[a], mdef.states[b]
    prod = iterate(mdef, xa * xb, kmax)
    la = iterate(mdef, xa, kmax)
    lb = iterate(mdef, xb, kmax)
    coeffs = []
    for k in range(kmax + 1):
        c = prod[k] / factorial(k)
        for i in range(k + 1):
            c -= la[i] * lb[k - i] / (factorial(i) * factorial(k - i))
        coeffs.append(sp.simplify(sp.expand(c)))
    return coeffs


def derive(mdef):
    n = len(mdef.states)
    out = {}
    out["drift"] = list(mdef.drift)
    out["diffusion"] = list(mdef.diff)
    for block, idx in mdef.blocks.items():
        for k in range(1, mdef.mean_orders[block] + 1):
            exprs = []
            for i in idx:
                exprs.append(iterate(mdef, mdef.drift[i], k - 1)[-1])
            out[f"gen_mu_{block}_{k}"] = exprs
    # directional terms used by the leading covariance blocks
    if "S" in mdef.blocks:
        out["dir_mu_S"] = [directional(mdef, mdef.drift[i]) for i in mdef.blocks["S"]]
    else:
        out["dir_mu_S2"] = [directional(mdef, mdef.drift[i]) for i in mdef.blocks["S2"]]
        out["dir_mu_S1"] = [
            directional(mdef, generator(mdef, mdef.drift[i])) for i in mdef.blocks["S1"]
        ]
    for j in range(mdef.n_corr + 1):
        out[f"cov_{j}"] = []
    for a in range(n):
        for b in range(a, n):
            e = (mdef.scales[a] + mdef.scales[b]) // 2
            series = covariance_series(mdef, a, b, e + mdef.n_corr)
            for k in range(e):
                assert sp.simplify(series[k]) == 0, (mdef.name, a, b, k, series[k])
            for j in range(mdef.n_corr + 1):
                out[f"cov_{j}"].append(series[e + j])
    return out


def emit_function(name, mdef, exprs):
    lines = [f"def {name}(x, th, k):"]
    lines.append(f"    {', '.join(str(s) for s in mdef.states)}, = x")
    lines.append(f"    {', '.join(str(s) for s in mdef.params)}, = th")
    if mdef.consts:
        lines.append(f"    {', '.join(str(s) for s in mdef.consts)}, = k")
    reps, reduced = sp.cse([sp.factor_terms(e) for e in exprs], symbols=sp.numbered_symbols("t"))
    for sym, val in reps:
        lines.append(f"    {sym} = {sp.sstr(val)}")
    lines.append(f"    return ({''.join(sp.sstr(e) + ', ' for e in reduced)})")
    return "\n".join(lines)


def main():
    q, p, s, x, y = sp.symbols("q p s x y")
    gamma, sigma, D, lam, alpha, eps, s_c = sp.symbols("gamma sigma D lam alpha eps s_c")

    defs = []
    for tag, grad_u in (("langevin_quad", D * q), ("langevin_dw", q**3 - D * q)):
        defs.append(
            ModelDef(
                tag,
                [q, p],
                [gamma, sigma],
                [D],
                [p, -grad_u + gamma * p],
                [0, sigma],
                {"S": [0], "R": [1]},
                [3, 1],
                {"S": 3, "R": 2},
                2,
            )
        )
    for tag, grad_u in (("qgle_quad", D * q), ("qgle_dw", q**3 - D * q)):
        defs.append(
            ModelDef(
                tag,
                [q, p, s],
                [D, lam, alpha, sigma],
                [],
                [p, -grad_u + lam * s, -lam * p - alpha * s],
                [0, 0, sigma],
                {"S1": [0], "S2": [1], "R": [2]},
                [5, 3, 1],
                {"S1": 3, "S2": 2, "R": 1},
                1,
            )
        )
    defs.append(
        ModelDef(
            "fhn",
            [x, y],
            [eps, gamma, alpha, sigma],
            [s_c],
            [(x - x**3 - y - s_c) / eps, gamma * x - y + alpha],
            [0, sigma],
            {"S": [0], "R": [1]},
            [3, 1],
            {"S": 3, "R": 2},
            2,
        )
    )

    out = [
        '"""Closed-form ingredients of the built-in models.',
        "",
        "Generated by tools/derive_builtins.py; do not edit by hand.",
        "Every function maps (state components, parameters, constants) to a tuple",
        "of plain-arithmetic expressions, so it evaluates on floats, numpy arrays",
        "and jax tracers alike.  cov_j functions return the upper triangle of the",
        "standardised covariance coefficient Sigma_j in row-major order.",
        '"""',
        "# fmt: off",
        "# flake8: noqa",
        "",
    ]
    for mdef in defs:
        print(f"deriving {mdef.name}", file=sys.stderr)
        derived = derive(mdef)
        for key, exprs in derived.items():
            out.append("")
            out.append(emit_function(f"{mdef.name}_{key}", mdef, exprs))
            out.append("")
    print("\n".join(out))


if __name__ == "__main__":
    main()
