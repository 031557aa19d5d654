"""Single-hidden-layer ReLU approximation of the flat input map.

The network maps zeta = (z, v) to an approximation of flat_input(z, v).
Training is full-batch gradient descent with momentum on a uniform grid,
deterministically seeded, so identical seeds give bit-identical weights.
Input/output standardization is folded back into the weights after
training; the error bound is then estimated on the folded network, which
keeps the bound meaningful for the exact object used downstream.

Coordinates the input map provably does not depend on (mask
``model.flat_input_deps``) keep zero first-layer columns: their grid
value is pinned to zero during training, so their gradient vanishes and
the zero initialization survives.  The error grid skips those axes for
the same reason.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EpsilonTooLarge, FormatError, NonFinite
from .flat_models import Box, FlatModel

logger = logging.getLogger(__name__)

_FILE_MAGIC = "flatinv-net"
_FILE_VERSION = 1


@dataclass(eq=False)
class ReluNet:
    """Weights of sigma(W1 zeta + b1) -> W2 h + b2 with scalar output."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=float)
        self.b1 = np.asarray(self.b1, dtype=float)
        self.W2 = np.asarray(self.W2, dtype=float).reshape(1, -1)
        self.b2 = float(self.b2)
        n1, n0 = self.W1.shape
        if self.b1.shape != (n1,) or self.W2.shape != (1, n1):
            raise ValueError("network weight shapes inconsistent")
        for arr in (self.W1, self.b1, self.W2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("network weights must be finite")
        if not np.isfinite(self.b2):
            raise ValueError("network weights must be finite")

    @property
    def n0(self) -> int:
        return self.W1.shape[1]

    @property
    def n1(self) -> int:
        return self.W1.shape[0]


@dataclass(frozen=True)
class ApproxCert:
    """Grid-estimated error bound eps, inflated by margin_factor.

    eps = margin_factor * max grid deviation; the estimate is not a formal
    certificate, the margin absorbs inter-grid deviation.
    """

    eps: float
    grid_points_per_dim: int
    workspace: Box
    margin_factor: float

    def __post_init__(self):
        if self.eps < 0 or self.margin_factor < 1.0 or self.grid_points_per_dim < 2:
            raise ValueError("invalid approximation certificate")


def eval_net(net: ReluNet, zeta: np.ndarray) -> np.ndarray:
    """Forward pass; accepts (..., n0) batches and returns (...)."""
    zeta = np.asarray(zeta, dtype=float)
    pre = zeta @ net.W1.T + net.b1
    hid = np.maximum(pre, 0.0)
    return hid @ net.W2[0] + net.b2


def _dependent_grid(model: FlatModel, points_per_dim: int) -> np.ndarray:
    """Uniform grid over the coordinates the input map depends on."""
    deps = model.flat_input_deps
    lo, hi = model.workspace.lo, model.workspace.hi
    axes = [
        np.linspace(lo[i], hi[i], points_per_dim) if deps[i] else np.zeros(1)
        for i in range(model.zeta_dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def train_net(
    model: FlatModel,
    n1: int,
    grid: int,
    epochs: int,
    seed: int,
    learning_rate: float = 0.2,
    momentum: float = 0.9,
) -> ReluNet:
    """Fit the input map on a uniform grid; deterministic in ``seed``.

    The learning rate halves at 50%, 75% and 90% of the epoch budget.
    Raises NonFinite when the loss diverges (reduce the learning rate).
    """
    if n1 < 1 or grid < 2 or epochs < 1:
        raise ValueError("n1 >= 1, grid >= 2 and epochs >= 1 required")
    zeta = _dependent_grid(model, grid)
    y = model.flat_input(zeta[:, :-1], zeta[:, -1])

    deps = model.flat_input_deps
    s_in = np.where(deps, np.maximum(model.workspace.hi, -model.workspace.lo), 1.0)
    c_out = float(np.mean(y))
    s_out = max(float(np.max(np.abs(y - c_out))), 1e-30)
    Xs = zeta / s_in
    ys = (y - c_out) / s_out

    rng = np.random.default_rng(seed)
    W1 = rng.normal(0.0, np.sqrt(2.0 / model.zeta_dim), size=(n1, model.zeta_dim))
    W1[:, ~deps] = 0.0
    b1 = rng.uniform(-0.5, 0.5, size=n1)
    W2 = rng.normal(0.0, np.sqrt(1.0 / n1), size=(1, n1))
    b2 = 0.0

    vW1 = np.zeros_like(W1)
    vb1 = np.zeros_like(b1)
    vW2 = np.zeros_like(W2)
    vb2 = 0.0
    m = Xs.shape[0]
    drops = {int(epochs * f) for f in (0.5, 0.75, 0.9)}
    lr = learning_rate
    for epoch in range(epochs):
        if epoch in drops:
            lr *= 0.5
        pre = Xs @ W1.T + b1
        hid = np.maximum(pre, 0.0)
        out = hid @ W2[0] + b2
        err = out - ys
        loss = float(np.mean(err**2))
        if not np.isfinite(loss):
            raise NonFinite(f"training loss diverged at epoch {epoch}")
        gout = (2.0 / m) * err
        gW2 = (gout @ hid)[None, :]
        gb2 = float(np.sum(gout))
        ghid = np.outer(gout, W2[0])
        ghid[pre <= 0.0] = 0.0
        gW1 = ghid.T @ Xs
        gb1 = ghid.sum(axis=0)
        vW1 = momentum * vW1 - lr * gW1
        vb1 = momentum * vb1 - lr * gb1
        vW2 = momentum * vW2 - lr * gW2
        vb2 = momentum * vb2 - lr * gb2
        W1 += vW1
        b1 += vb1
        W2 += vW2
        b2 += vb2

    # fold standardization into the weights
    W1_raw = W1 / s_in
    b1_raw = b1
    W2_raw = s_out * W2
    b2_raw = s_out * b2 + c_out
    net = ReluNet(W1_raw, b1_raw, W2_raw, b2_raw)
    final = float(np.mean((eval_net(net, zeta) - y) ** 2))
    logger.info(
        "trained %s net: n1=%d grid=%d epochs=%d seed=%d training-grid MSE=%.6e",
        model.name,
        n1,
        grid,
        epochs,
        seed,
        final,
    )
    return net


def estimate_error_bound(
    net: ReluNet,
    model: FlatModel,
    grid: int,
    margin_factor: float = 1.2,
    chunk: int = 200_000,
) -> ApproxCert:
    """Grid estimate of sup |flat_input - net| over the workspace.

    The maximum is reduced chunk-wise (order independent), multiplied by
    margin_factor.  Raises EpsilonTooLarge when the result meets the
    input bound, since the tightened constraint set would be empty.
    """
    if grid < 2 or margin_factor < 1.0:
        raise ValueError("grid >= 2 and margin_factor >= 1 required")
    if net.n0 != model.zeta_dim:
        raise FormatError(
            f"network input size {net.n0} does not match model {model.name}"
        )
    zeta = _dependent_grid(model, grid)
    worst = 0.0
    for start in range(0, zeta.shape[0], chunk):
        part = zeta[start : start + chunk]
        resid = np.abs(
            model.flat_input(part[:, :-1], part[:, -1]) - eval_net(net, part)
        )
        worst = max(worst, float(np.max(resid)))
    eps = margin_factor * worst
    if eps >= model.u_bound:
        raise EpsilonTooLarge(
            f"estimated bound {eps:.6g} >= input bound {model.u_bound:.6g}"
        )
    return ApproxCert(
        eps=eps,
        grid_points_per_dim=grid,
        workspace=model.workspace,
        margin_factor=margin_factor,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_row(row) -> str:
    return " ".join(_fmt(v) for v in np.atleast_1d(row))


def save_net(path, net: ReluNet, cert: ApproxCert) -> None:
    """Versioned plain-text weight file; round trips byte-exactly."""
    lines = [
        f"{_FILE_MAGIC} v{_FILE_VERSION}",
        f"n0 {net.n0}",
        f"n1 {net.n1}",
        "W1",
    ]
    lines += [_fmt_row(r) for r in net.W1]
    lines.append("b1")
    lines.append(_fmt_row(net.b1))
    lines.append("W2")
    lines.append(_fmt_row(net.W2[0]))
    lines.append("b2")
    lines.append(_fmt(net.b2))
    lines.append("cert")
    lines.append(f"eps {_fmt(cert.eps)}")
    lines.append(f"grid {cert.grid_points_per_dim}")
    lines.append(f"margin {_fmt(cert.margin_factor)}")
    lines.append("workspace_lo " + _fmt_row(cert.workspace.lo))
    lines.append("workspace_hi " + _fmt_row(cert.workspace.hi))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_net(path, expect_n0: int | None = None) -> tuple[ReluNet, ApproxCert]:
    """Parse a weight file; FormatError on any schema mismatch."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read weight file {path}: {exc}") from exc

    def fail(msg):
        raise FormatError(f"{path}: {msg}")

    it = iter(lines)

    def next_line():
        try:
            return next(it)
        except StopIteration:
            fail("unexpected end of file")

    head = next_line().split()
    if head != [_FILE_MAGIC, f"v{_FILE_VERSION}"]:
        fail(f"bad header {head}")
    try:
        n0 = int(next_line().split()[1])
        n1 = int(next_line().split()[1])
    except (IndexError, ValueError):
        fail("bad dimension header")
    if expect_n0 is not None and n0 != expect_n0:
        fail(f"input size {n0} does not match expected {expect_n0}")

    def parse_row(line, count):
        vals = line.split()
        if len(vals) != count:
            fail(f"expected {count} values, got {len(vals)}")
        try:
            return np.array([float(v) for v in vals])
        except ValueError:
            fail("non-numeric value")

    def expect_tag(tag):
        ln = next_line()
        if ln != tag:
            fail(f"expected section {tag!r}, got {ln!r}")

    expect_tag("W1")
    W1 = np.stack([parse_row(next_line(), n0) for _ in range(n1)])
    expect_tag("b1")
    b1 = parse_row(next_line(), n1)
    expect_tag("W2")
    W2 = parse_row(next_line(), n1)[None, :]
    expect_tag("b2")
    b2 = float(parse_row(next_line(), 1)[0])
    expect_tag("cert")
    kv = {}
    for key in ("eps", "grid", "margin"):
        parts = next_line().split()
        if len(parts) != 2 or parts[0] != key:
            fail(f"expected cert field {key}")
        kv[key] = parts[1]
    lo_line = next_line().split()
    hi_line = next_line().split()
    if lo_line[0] != "workspace_lo" or hi_line[0] != "workspace_hi":
        fail("expected workspace bounds")
    lo = parse_row(" ".join(lo_line[1:]), n0)
    hi = parse_row(" ".join(hi_line[1:]), n0)
    try:
        cert = ApproxCert(
            eps=float(kv["eps"]),
            grid_points_per_dim=int(kv["grid"]),
            workspace=Box(lo, hi),
            margin_factor=float(kv["margin"]),
        )
        net = ReluNet(W1, b1, W2, b2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return net, cert
