"""Command-line interface: figure data as CSV and end-to-end bound checks.

Exit codes: 0 success, 1 invalid arguments, 2 runtime failure,
3 at least one bound check failed.
"""

import argparse
import ast
import csv
import io
import math
import operator
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import asm, bounds, exp_analysis
from .distributions import Gaussian, ProductExponential, UniformBox
from .errors import (
    EvaluationError,
    GammaRangeError,
    InvalidInputError,
    NoConvergenceError,
    UnsupportedConditionalError,
)
from .rng import stream

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_FAIL = 0, 1, 2, 3

DEFAULT_THETA_GRID = np.linspace(-math.pi / 2, math.pi / 2, 32, endpoint=False)
DEFAULT_THETA_EPS = (0.5, 1.0, 2.0)
DEFAULT_VAR_THETAS = (-math.pi / 4, 0.0, 0.2, 0.5, 0.78, math.pi / 4)
DEFAULT_Y_GRID = np.round(np.arange(1, 51) * 0.1, 12)
DEFAULT_EPS_THETAS = (-math.pi / 4, 0.0, 0.3, 0.6, math.pi / 4)
DEFAULT_EPS_GRID = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
DEFAULT_CEPS_N = (2, 5, 10, 20)
DEFAULT_CEPS_EPS = (0.02, 0.05, 0.1, 0.2)
CASES = ("gaussian", "box", "exp2d-pi4", "expn")

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def parse_number(text):
    """Evaluate a numeric literal or arithmetic expression in ``pi``, e.g. ``-pi/4``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def number_list(text):
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return [parse_number(t) for t in items]


def int_list(text):
    values = number_list(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected integers: {text!r}")
    return [int(v) for v in values]


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def _require(cond, message):
    if not cond:
        raise InvalidInputError(message)


def _check_eps(eps_list):
    _require(all(e > 0 for e in eps_list), "eps values must be positive")


def cmd_fig_theta_curves(eps_list, theta_grid, out):
    _check_eps(eps_list)
    _require(
        all(-math.pi / 2 <= t < math.pi / 2 for t in theta_grid),
        "theta values must lie in [-pi/2, pi/2)",
    )
    rows = [(t, e, exp_analysis.q_eps(t, e)) for e in eps_list for t in theta_grid]
    write_csv(out, ["theta", "eps", "q_eps"], rows)
    return rows


def cmd_fig_var_curves(theta_list, y_grid, out):
    _require(all(y >= 0 for y in y_grid), "y values must be nonnegative")
    rows = []
    for t in theta_list:
        r = exp_analysis.reduce_theta(t)
        for y in y_grid:
            rows.append((t, y, exp_analysis.var_z_given_y(r, y), y * y / 3.0))
    write_csv(out, ["theta", "y", "var_z_given_y", "y2_over_3"], rows)
    return rows


def cmd_fig_eps_curves(theta_list, eps_grid, out):
    _check_eps(eps_grid)
    rows = [(t, e, exp_analysis.q_eps(t, e)) for t in theta_list for e in eps_grid]
    write_csv(out, ["theta", "eps", "q_eps"], rows)
    return rows


def cmd_fig_ceps(n_grid, eps_grid, k, out):
    _check_eps(eps_grid)
    rows = [(n, e, exp_analysis.c_eps(n, k, e)) for n in n_grid for e in eps_grid]
    write_csv(out, ["n", "eps", "c_eps"], rows)
    return rows


@dataclass(frozen=True)
class Case:
    name: str
    description: str
    distribution: object
    objective: object
    k: int


def _ridge_basis_3():
    return np.column_stack(
        [
            np.ones(3) / math.sqrt(3.0),
            np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0),
            np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0),
        ]
    )


def build_case(name):
    """Built-in test problems; each gradient bound ``L`` is certified analytically."""
    if name == "gaussian":
        # |grad|^2 = cos^2(x1) + 0.04 cos^2(2 x2) <= 1.04.  A linear inactive
        # part would attain the Gaussian constant and leave no room for noise.
        f = asm.ObjectiveFunction(
            lambda x: np.sin(x[:, 0]) + 0.1 * np.sin(2 * x[:, 1]),
            2,
            gradient=lambda x: np.column_stack([np.cos(x[:, 0]), 0.2 * np.cos(2 * x[:, 1])]),
            grad_bound=1.04,
        )
        return Case(name, "sin(x1) + 0.1 sin(2 x2) on N(0, I2)", Gaussian.standard(2), f, 1)
    if name == "box":
        # |grad|^2 = 4 cos^2(2 x1) + 0.01 <= 4.01
        f = asm.ObjectiveFunction(
            lambda x: np.sin(2 * x[:, 0]) + 0.1 * x[:, 1],
            2,
            gradient=lambda x: np.column_stack([2 * np.cos(2 * x[:, 0]), np.full(len(x), 0.1)]),
            grad_bound=4.01,
            lower=[0.0, 0.0],
            upper=[1.0, 1.0],
        )
        return Case(name, "sin(2 x1) + 0.1 x2 on U([0,1]^2)", UniformBox([0, 0], [1, 1]), f, 1)
    if name == "exp2d-pi4":
        b = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2.0)

        def value(x):
            c = x @ b
            return np.tanh(c[:, 0]) + 0.1 * np.sin(c[:, 1])

        def grad(x):
            c = x @ b
            d = np.column_stack([1.0 / np.cosh(c[:, 0]) ** 2, 0.1 * np.cos(c[:, 1])])
            return d @ b.T

        # |grad|^2 = sech^4(u) + 0.01 cos^2(v) <= 1.01
        f = asm.ObjectiveFunction(value, 2, gradient=grad, grad_bound=1.01, lower=[0, 0])
        desc = "tanh(u) + 0.1 sin(v), u = (x1+x2)/sqrt2, v = (x2-x1)/sqrt2, unit exponentials"
        return Case(name, desc, ProductExponential.unit(2), f, 1)
    if name == "expn":
        b = _ridge_basis_3()
        amp = np.array([1.0, 0.5, 0.1])

        def value(x):
            c = x @ b
            return np.tanh(c[:, 0]) + 0.5 * np.sin(c[:, 1]) + 0.1 * np.sin(c[:, 2])

        def grad(x):
            c = x @ b
            d = np.column_stack([1.0 / np.cosh(c[:, 0]) ** 2, np.cos(c[:, 1]), np.cos(c[:, 2])])
            return (d * amp) @ b.T

        # |grad|^2 <= 1 + 0.25 + 0.01
        f = asm.ObjectiveFunction(value, 3, gradient=grad, grad_bound=1.26, lower=[0, 0, 0])
        desc = "tanh(u) + 0.5 sin(v) + 0.1 sin(w) on an orthonormal basis, unit exponentials in 3-D"
        return Case(name, desc, ProductExponential.unit(3), f, 2)
    raise InvalidInputError(f"unknown case {name!r}")


def _regime(case, model, eps):
    L = case.objective.grad_bound
    if case.name == "gaussian":
        return bounds.GaussianExact(case.distribution.cov)
    if case.name == "box":
        d = case.distribution
        return bounds.CompactConvex(d.diameter, 1.0 / d.volume, 1.0 / d.volume)
    if case.name == "exp2d-pi4":
        cvar = exp_analysis.cvar_w_2d(model.split.W, eps)
        return bounds.GeneralizedEps.from_cvar(L, eps, 2, 1, cvar)
    n, k = case.distribution.dim, case.k
    return bounds.GeneralizedEps(eps, exp_analysis.c_expn(n, k, eps, L))


@dataclass(frozen=True)
class CheckResult:
    case: str
    description: str
    L: float
    eps: float
    eigenvalues: tuple
    mse: float
    stderr: float
    plugin: float
    report: object

    @property
    def passed(self):
        return self.mse - 3.0 * self.stderr <= self.report.rhs


def run_bound_check(name, samples, inner_samples, eps, seed, workers=1):
    case = build_case(name)
    gen = stream(seed, worker=CASES.index(name))
    r_c, r_mse = gen.spawn(2)
    C = asm.estimate_C(case.objective, case.distribution, samples, r_c, workers=workers)
    model = asm.active_subspace(C, case.k, case.distribution, inner_samples)
    est = asm.mse_estimate(model, case.objective, samples, r_mse, workers=workers)
    report = bounds.bound_rhs(_regime(case, model, eps), model.inactive_trace)
    return CheckResult(
        name,
        case.description,
        case.objective.grad_bound,
        eps,
        tuple(float(v) for v in model.eigenvalues),
        est.mse,
        est.stderr,
        est.plugin,
        report,
    )


def cmd_bound_check(cases, samples, inner_samples, eps, seed, out, workers=1):
    results = [run_bound_check(c, samples, inner_samples, eps, seed, workers) for c in cases]
    header = [
        "case", "L", "eps", "regime", "mse", "stderr", "constant",
        "exponent", "inactive_trace", "rhs", "status",
    ]
    rows = [
        (
            r.case, r.L, r.eps, r.report.regime, r.mse, r.stderr, r.report.constant,
            r.report.exponent, r.report.inactive_trace, r.report.rhs,
            "PASS" if r.passed else "FAIL",
        )
        for r in results
    ]
    print(f"{'case':<10} {'mse':>12} {'stderr':>10} {'constant':>12} {'exp':>6} {'rhs':>12}  status")
    for r in results:
        print(
            f"{r.case:<10} {r.mse:12.5g} {r.stderr:10.3g} {r.report.constant:12.5g} "
            f"{r.report.exponent:6.3f} {r.report.rhs:12.5g}  {'PASS' if r.passed else 'FAIL'}"
        )
        print(f"  f = {r.description}; L = {r.L}")
    if out is not None:
        write_csv(out, header, rows)
    return results


def _demo_function(n):
    a = np.arange(1, n + 1, dtype=float)
    a /= np.linalg.norm(a)
    c = 0.05 / math.sqrt(n)

    def value(x):
        return np.exp(0.7 * (x @ a)) + c * np.sum(np.sin(x), axis=1)

    def grad(x):
        return 0.7 * np.exp(0.7 * (x @ a))[:, None] * a + c * np.cos(x)

    return asm.ObjectiveFunction(value, n, gradient=grad)


def cmd_asm_demo(n, k, samples, inner_samples, seed, out):
    _require(n >= 2 and 1 <= k <= n - 1, "need n >= 2 and 1 <= k <= n - 1")
    f = _demo_function(n)
    dist = Gaussian.standard(n)
    r_c, r_mse = stream(seed).spawn(2)
    C = asm.estimate_C(f, dist, samples, r_c)
    model = asm.active_subspace(C, k, dist, inner_samples)
    est = asm.mse_estimate(model, f, samples, r_mse)
    lam = model.eigenvalues
    print(f"near-ridge exp(0.7 a.x) + small sines on N(0, I{n}); k = {k}")
    for i, v in enumerate(lam, 1):
        print(f"  lambda_{i:<3d} {v:.6e}")
    print(f"inactive trace {model.inactive_trace:.6e}")
    print(f"mse {est.mse:.6e} +- {est.stderr:.2e} (plug-in {est.plugin:.6e})")
    if out is not None:
        write_csv(out, ["index", "eigenvalue"], [(i, v) for i, v in enumerate(lam, 1)])
    return lam, est


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="asmbounds", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("fig-theta", help="Q_eps over theta")
    s.add_argument("--eps", type=number_list, default=list(DEFAULT_THETA_EPS))
    s.add_argument("--theta", type=number_list, default=list(DEFAULT_THETA_GRID))
    s.add_argument("--out")

    s = sub.add_parser("fig-var", help="Var(Z | Y = y) over y")
    s.add_argument("--theta", type=number_list, default=list(DEFAULT_VAR_THETAS))
    s.add_argument("--y", type=number_list, default=list(DEFAULT_Y_GRID))
    s.add_argument("--out")

    s = sub.add_parser("fig-eps", help="Q_eps over eps")
    s.add_argument("--theta", type=number_list, default=list(DEFAULT_EPS_THETAS))
    s.add_argument("--eps", type=number_list, default=list(DEFAULT_EPS_GRID))
    s.add_argument("--out")

    s = sub.add_parser("fig-ceps", help="C_eps(n, k) over eps")
    s.add_argument("--n", type=int_list, default=list(DEFAULT_CEPS_N))
    s.add_argument("--eps", type=number_list, default=list(DEFAULT_CEPS_EPS))
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--out")

    s = sub.add_parser("bound-check", help="measured MSE against the bound")
    s.add_argument("--case", choices=CASES + ("all",), default="all")
    s.add_argument("--samples", type=int, default=asm.DEFAULT_OUTER)
    s.add_argument("--inner-samples", type=int, default=asm.DEFAULT_INNER)
    s.add_argument("--eps", type=parse_number, default=2.0)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")

    s = sub.add_parser("asm-demo", help="eigenvalue decay on a near-ridge function")
    s.add_argument("--n", type=int, default=5)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--samples", type=int, default=asm.DEFAULT_OUTER)
    s.add_argument("--inner-samples", type=int, default=asm.DEFAULT_INNER)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fig-theta":
            cmd_fig_theta_curves(args.eps, args.theta, args.out)
        elif args.command == "fig-var":
            cmd_fig_var_curves(args.theta, args.y, args.out)
        elif args.command == "fig-eps":
            cmd_fig_eps_curves(args.theta, args.eps, args.out)
        elif args.command == "fig-ceps":
            cmd_fig_ceps(args.n, args.eps, args.k, args.out)
        elif args.command == "bound-check":
            _require(args.samples >= 2 and args.inner_samples >= 2, "sample counts must be >= 2")
            _require(args.workers >= 1, "workers must be >= 1")
            cases = CASES if args.case == "all" else (args.case,)
            t0 = time.perf_counter()
            results = cmd_bound_check(
                cases, args.samples, args.inner_samples, args.eps, args.seed, args.out, args.workers
            )
            print(f"elapsed {time.perf_counter() - t0:.1f} s")
            if not all(r.passed for r in results):
                return EXIT_FAIL
        elif args.command == "asm-demo":
            cmd_asm_demo(args.n, args.k, args.samples, args.inner_samples, args.seed, args.out)
    except InvalidInputError as exc:
        print(f"asmbounds: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        OSError,
        EvaluationError,
        GammaRangeError,
        NoConvergenceError,
        UnsupportedConditionalError,
    ) as exc:
        print(f"asmbounds: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
