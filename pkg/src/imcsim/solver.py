"""DC solver for G-input crossbar columns.

Each column is a ladder: the BL is driven from the top through ``r_driver``,
the SL drains at the bottom through ``r_sink`` into the ADC virtual ground,
and adjacent rows are joined by one wire segment on each line. Columns do not
interact, so a whole array is solved as one block-diagonal system.

Row 0 is the top of the column (next to the driver), row N-1 the bottom
(next to the ADC).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .cells import CellState, CellTechnology, cell_currents

if TYPE_CHECKING:
    from .mvm import CrossbarInstance

RESIDUAL_TOL = 1e-13  # A
MAX_ITERS = 100
MAX_HALVINGS = 8


class SolverError(RuntimeError):
    def __init__(self, msg: str, column: int | None = None, residual: float | None = None):
        self.column = column
        self.residual = residual
        if column is not None:
            msg = f"column {column}: {msg}"
        super().__init__(msg)


class NonConvergence(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


@dataclass
class ColumnNetwork:
    """One column: per-row cell description plus the shared parasitics."""

    n_rows: int
    r_segment: float
    r_driver: float
    r_sink: float
    cells: list[CellState]
    v_g: np.ndarray
    v_bl: float

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if len(self.cells) != self.n_rows or len(self.v_g) != self.n_rows:
            raise ValueError("one cell and one gate voltage per row required")
        if min(self.r_segment, self.r_driver, self.r_sink) < 0:
            raise ValueError("parasitic resistances must be non-negative")
        self.v_g = np.asarray(self.v_g, dtype=float)

    @classmethod
    def from_bits(cls, input_bits, weight_bits, *, r_segment, r_driver, r_sink, v_bl, v_wl,
                  variation=None) -> "ColumnNetwork":
        input_bits = np.asarray(input_bits, dtype=int)
        weight_bits = np.asarray(weight_bits, dtype=int)
        mult = np.ones(len(input_bits)) if variation is None else np.asarray(variation, float)
        cells = [CellState(int(i), int(w), float(m)) for i, w, m in zip(input_bits, weight_bits, mult)]
        return cls(len(cells), r_segment, r_driver, r_sink, cells, np.where(input_bits == 1, v_wl, 0.0), v_bl)

    def arrays(self, tech: CellTechnology):
        inp = np.array([c.input_bit for c in self.cells])
        w = np.array([c.weight_bit for c in self.cells])
        mult = np.array([c.variation_mult for c in self.cells], dtype=float)
        on = (inp == 1) & (w == 1)
        g_leak = np.where(on, 0.0, tech.leakage[inp, w])
        return on, g_leak, mult


@dataclass
class ColumnSolution:
    bl_voltages: np.ndarray
    sl_voltages: np.ndarray
    i_out: float
    newton_iters: int
    max_residual: float
    i_in: float = 0.0
    cell_currents: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class BatchSolution:
    """Solutions for C independent columns, node arrays shaped (n_rows, C)."""

    bl: np.ndarray
    sl: np.ndarray
    i_out: np.ndarray
    i_in: np.ndarray
    cell_currents: np.ndarray
    newton_iters: np.ndarray
    max_residual: np.ndarray

    def column(self, c: int) -> ColumnSolution:
        return ColumnSolution(
            bl_voltages=self.bl[:, c].copy(),
            sl_voltages=self.sl[:, c].copy(),
            i_out=float(self.i_out[c]),
            newton_iters=int(self.newton_iters[c]),
            max_residual=float(self.max_residual[c]),
            i_in=float(self.i_in[c]),
            cell_currents=self.cell_currents[:, c].copy(),
        )

    def columns(self) -> list[ColumnSolution]:
        return [self.column(c) for c in range(self.i_out.shape[0])]


class _Ladder:
    """Residual/Jacobian of the reduced node system for a batch of columns.

    With a zero segment resistance every row shares one BL node and one SL
    node. A zero driver (sink) resistance pins the top BL (bottom SL) node.
    """

    def __init__(self, tech, on, g_leak, mult, v_g, r_segment, r_driver, r_sink, v_bl):
        self.tech = tech
        self.on, self.g_leak, self.mult, self.v_g = on, g_leak, mult, v_g
        self.n_rows, self.n_cols = on.shape
        self.merged = r_segment == 0
        self.m = 1 if self.merged else self.n_rows
        self.gw = 0.0 if self.merged else 1.0 / r_segment
        self.pin_top = r_driver == 0
        self.pin_bottom = r_sink == 0
        self.gd = 0.0 if self.pin_top else 1.0 / r_driver
        self.gs = 0.0 if self.pin_bottom else 1.0 / r_sink
        self.v_bl = v_bl
        gmax = max(self.gw, self.gd, self.gs, 1e-3)
        self.tol = max(RESIDUAL_TOL, 64 * np.finfo(float).eps * gmax * v_bl)

    def expand(self, node_v):
        return np.broadcast_to(node_v, (self.n_rows, self.n_cols)) if self.merged else node_v

    def cells(self, b, s):
        i, dd, ds = cell_currents(self.tech, self.on, self.g_leak, self.mult, self.v_g,
                                  self.expand(b), self.expand(s))
        if self.merged:
            return i, i.sum(0, keepdims=True), dd.sum(0, keepdims=True), ds.sum(0, keepdims=True)
        return i, i, dd, ds

    def wire_currents(self, b, s):
        """Current leaving each BL / SL node through wires, driver and sink."""
        fb = np.zeros_like(b)
        fs = np.zeros_like(s)
        if self.m > 1:
            db = self.gw * (b[:-1] - b[1:])
            ds = self.gw * (s[:-1] - s[1:])
            fb[:-1] += db
            fb[1:] -= db
            fs[:-1] += ds
            fs[1:] -= ds
        fb[0] += self.gd * (b[0] - self.v_bl)
        fs[-1] += self.gs * s[-1]
        return fb, fs

    def residual(self, b, s):
        _, inode, _, _ = self.cells(b, s)
        fb, fs = self.wire_currents(b, s)
        rb = fb + inode
        rs = fs - inode
        if self.pin_top:
            rb[0] = 0.0
        if self.pin_bottom:
            rs[-1] = 0.0
        return rb, rs

    def max_abs(self, rb, rs):
        return np.maximum(np.abs(rb).max(0), np.abs(rs).max(0))

    def jacobian_banded(self, b, s):
        """Banded (l=u=2) Jacobian over interleaved [b0, s0, b1, s1, ...] per column."""
        _, _, dd, ds = self.cells(b, s)
        m, c = self.m, self.n_cols
        diag_w = np.full(m, 2 * self.gw)
        if m > 1:
            diag_w[0] = diag_w[-1] = self.gw
        else:
            diag_w[0] = 0.0
        jbb = diag_w[:, None] + dd
        jss = diag_w[:, None] - ds
        jbb[0] += self.gd
        jss[-1] += self.gs
        jbs = ds.copy()  # dF_b/ds
        jsb = -dd  # dF_s/db

        n = 2 * m
        ab = np.zeros((5, c, n))
        # ab[2 + i - j, j] = A[i, j]
        ab[2, :, 0::2] = jbb.T
        ab[2, :, 1::2] = jss.T
        ab[1, :, 1::2] = jbs.T  # (b_k, s_k): i - j = -1
        ab[3, :, 0::2] = jsb.T  # (s_k, b_k): i - j = +1
        if m > 1:
            ab[0, :, 2::2] = -self.gw  # (b_k, b_k+1)
            ab[0, :, 3::2] = -self.gw  # (s_k, s_k+1)
            ab[4, :, 0:-2:2] = -self.gw  # (b_k+1, b_k)
            ab[4, :, 1:-2:2] = -self.gw  # (s_k+1, s_k)
        if self.pin_top:
            # row b_0 -> identity
            ab[2, :, 0] = 1.0
            ab[1, :, 1] = 0.0
            if m > 1:
                ab[0, :, 2] = 0.0
        if self.pin_bottom:
            j = n - 1
            ab[2, :, j] = 1.0
            ab[3, :, j - 1] = 0.0
            if m > 1:
                ab[4, :, j - 2] = 0.0
        return ab.reshape(5, c * n)

    def terminal_currents(self, b, s, icell):
        """(current supplied by the driver, current delivered to the sink)."""
        fb, fs = self.wire_currents(b, s)
        if self.pin_top:
            i_in = fb[0] - self.gd * (b[0] - self.v_bl) + icell_node(icell, self.merged, 0)
        else:
            i_in = self.gd * (self.v_bl - b[0])
        if self.pin_bottom:
            i_out = -(fs[-1] - self.gs * s[-1]) + icell_node(icell, self.merged, -1)
        else:
            i_out = self.gs * s[-1]
        return i_in, i_out


def icell_node(icell, merged, k):
    return icell.sum(0) if merged else icell[k]


def _newton(lad: _Ladder) -> BatchSolution:
    m, c = lad.m, lad.n_cols
    b = np.full((m, c), float(lad.v_bl))
    s = np.zeros((m, c))
    rb, rs = lad.residual(b, s)
    norm = lad.max_abs(rb, rs)
    iters = np.zeros(c, dtype=int)
    active = norm > lad.tol
    it = 0
    while active.any():
        if it >= MAX_ITERS:
            col = int(np.flatnonzero(active)[0])
            raise NonConvergence(f"no convergence after {MAX_ITERS} iterations, residual {norm[col]:.3e} A",
                                 column=col, residual=float(norm[col]))
        it += 1
        cols = np.flatnonzero(active)
        sub = _subset(lad, cols)
        bb, ss = b[:, cols], s[:, cols]
        ab = sub.jacobian_banded(bb, ss)
        rhs = np.empty((len(cols), 2 * m))
        rhs[:, 0::2] = rb[:, cols].T
        rhs[:, 1::2] = rs[:, cols].T
        try:
            step = solve_banded((2, 2), ab, -rhs.reshape(-1), check_finite=False)
        except (LinAlgError, ValueError) as exc:
            raise SingularJacobian(f"singular Jacobian: {exc}", column=int(cols[0])) from exc
        step = step.reshape(len(cols), 2 * m)
        db, ds = step[:, 0::2].T, step[:, 1::2].T
        if not (np.isfinite(db).all() and np.isfinite(ds).all()):
            raise SingularJacobian("non-finite Newton step", column=int(cols[0]))

        old = norm[cols]
        scale = np.ones(len(cols))
        nb, ns = bb + db, ss + ds
        nrb, nrs = sub.residual(nb, ns)
        nnorm = sub.max_abs(nrb, nrs)
        for _ in range(MAX_HALVINGS):
            worse = ~(nnorm < old)
            if not worse.any():
                break
            scale = np.where(worse, scale * 0.5, scale)
            nb, ns = bb + scale * db, ss + scale * ds
            nrb, nrs = sub.residual(nb, ns)
            nnorm = sub.max_abs(nrb, nrs)

        b[:, cols], s[:, cols] = nb, ns
        rb[:, cols], rs[:, cols] = nrb, nrs
        norm[cols] = nnorm
        iters[cols] += 1
        active = norm > lad.tol

    # one extra full step drives residuals to roundoff so that node residuals
    # do not accumulate in the sink-vs-cells balance; not counted in iters
    if it > 0:
        try:
            step = solve_banded((2, 2), lad.jacobian_banded(b, s),
                                -np.stack([rb, rs], axis=-1).transpose(1, 0, 2).reshape(-1),
                                check_finite=False).reshape(c, 2 * m)
            pb, ps = b + step[:, 0::2].T, s + step[:, 1::2].T
            prb, prs = lad.residual(pb, ps)
            pnorm = lad.max_abs(prb, prs)
            keep = pnorm <= norm
            b, s = np.where(keep, pb, b), np.where(keep, ps, s)
            norm = np.where(keep, pnorm, norm)
        except (LinAlgError, ValueError):
            pass

    icell, _, _, _ = lad.cells(b, s)
    i_in, i_out = lad.terminal_currents(b, s, icell)
    return BatchSolution(
        bl=np.array(lad.expand(b)),
        sl=np.array(lad.expand(s)),
        i_out=i_out,
        i_in=i_in,
        cell_currents=icell,
        newton_iters=iters,
        max_residual=norm,
    )


def _subset(lad: _Ladder, cols: np.ndarray) -> _Ladder:
    if len(cols) == lad.n_cols:
        return lad
    sub = object.__new__(_Ladder)
    sub.__dict__.update(lad.__dict__)
    sub.on, sub.g_leak = lad.on[:, cols], lad.g_leak[:, cols]
    sub.mult, sub.v_g = lad.mult[:, cols], lad.v_g[:, cols]
    sub.n_cols = len(cols)
    return sub


def solve_batch(tech: CellTechnology, on, g_leak, mult, v_g, *, r_segment: float, r_driver: float,
                r_sink: float, v_bl: float) -> BatchSolution:
    """Solve C columns at once; cell arrays are shaped (n_rows, C)."""
    on = np.asarray(on, dtype=bool)
    if on.ndim != 2 or on.shape[0] < 1:
        raise ValueError("cell arrays must be (n_rows, n_cols) with n_rows >= 1")
    shape = on.shape
    g_leak = np.broadcast_to(np.asarray(g_leak, float), shape)
    mult = np.broadcast_to(np.asarray(mult, float), shape)
    v_g = np.broadcast_to(np.asarray(v_g, float), shape)
    if min(r_segment, r_driver, r_sink) < 0:
        raise ValueError("parasitic resistances must be non-negative")
    lad = _Ladder(tech, on, g_leak, mult, v_g, r_segment, r_driver, r_sink, v_bl)
    return _newton(lad)


def solve_column(net: ColumnNetwork, tech: CellTechnology) -> ColumnSolution:
    on, g_leak, mult = net.arrays(tech)
    sol = solve_batch(tech, on[:, None], g_leak[:, None], mult[:, None], net.v_g[:, None],
                      r_segment=net.r_segment, r_driver=net.r_driver, r_sink=net.r_sink, v_bl=net.v_bl)
    return sol.column(0)


def solve_array(xbar: "CrossbarInstance") -> list[ColumnSolution]:
    """Solve every column of a crossbar; results follow the weight column order."""
    return xbar.solve().columns()


# --------------------------------------------------------------------------
# dense reference solver (tests only)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def oracle_solve(net: ColumnNetwork, tech: CellTechnology) -> ColumnSolution:
    """Netlist-style Newton solve with a dense Jacobian and full LU.

    Zero-ohm resistors merge their end nodes; the driver source and ground
    are fixed-voltage nodes.
    """
    n = net.n_rows
    if n > 256:
        raise ValueError("oracle is limited to 256 rows")
    resistors: list[tuple] = [("src", ("bl", 0), net.r_driver), (("sl", n - 1), "gnd", net.r_sink)]
    for i in range(n - 1):
        resistors.append((("bl", i), ("bl", i + 1), net.r_segment))
        resistors.append((("sl", i), ("sl", i + 1), net.r_segment))

    uf = _UnionFind()
    for node in ["src", "gnd"] + [(k, i) for i in range(n) for k in ("bl", "sl")]:
        uf.find(node)
    for a, b, r in resistors:
        if r == 0:
            uf.union(a, b)
    fixed = {uf.find("src"): net.v_bl, uf.find("gnd"): 0.0}
    if len(fixed) < 2:
        raise SingularJacobian("driver shorted to ground")
    roots = sorted({uf.find(x) for x in uf.parent} - set(fixed), key=repr)
    index = {r: k for k, r in enumerate(roots)}
    links = [(uf.find(a), uf.find(b), 1.0 / r) for a, b, r in resistors if r > 0]
    cell_nodes = [(uf.find(("bl", i)), uf.find(("sl", i))) for i in range(n)]
    on, g_leak, mult = net.arrays(tech)

    v = np.array([net.v_bl if r[0] == "bl" else 0.0 for r in roots])

    def volt(node, v):
        return fixed[node] if node in fixed else v[index[node]]

    def assemble(v):
        f = np.zeros(len(roots))
        jac = np.zeros((len(roots), len(roots)))
        for a, b, g in links:
            i_ab = g * (volt(a, v) - volt(b, v))
            for node, sign in ((a, 1.0), (b, -1.0)):
                if node in index:
                    f[index[node]] += sign * i_ab
                    for other, s2 in ((a, 1.0), (b, -1.0)):
                        if other in index:
                            jac[index[node], index[other]] += sign * s2 * g
        icells = np.zeros(n)
        for i, (d, s) in enumerate(cell_nodes):
            ic, gd, gs = cell_currents(tech, on[i], g_leak[i], mult[i], net.v_g[i], volt(d, v), volt(s, v))
            ic, gd, gs = float(ic), float(gd), float(gs)
            icells[i] = ic
            for node, sign in ((d, 1.0), (s, -1.0)):
                if node in index:
                    f[index[node]] += sign * ic
                    if d in index:
                        jac[index[node], index[d]] += sign * gd
                    if s in index:
                        jac[index[node], index[s]] += sign * gs
        return f, jac, icells

    f, jac, icells = assemble(v)
    norm = np.abs(f).max() if len(f) else 0.0
    it = 0
    while norm > RESIDUAL_TOL:
        if it >= MAX_ITERS:
            raise NonConvergence(f"oracle: no convergence, residual {norm:.3e} A", residual=norm)
        it += 1
        try:
            dv = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            nf, njac, nic = assemble(v + t * dv)
            if np.abs(nf).max() < norm:
                break
            t *= 0.5
        v = v + t * dv
        f, jac, icells = nf, njac, nic
        norm = np.abs(f).max()

    # refine to round-off so the oracle is tighter than the solver it checks
    for _ in range(4):
        if norm == 0:
            break
        try:
            cand = v + np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        nf, njac, nic = assemble(cand)
        if np.abs(nf).max() >= 0.5 * norm:
            break
        v, f, jac, icells = cand, nf, njac, nic
        norm = np.abs(f).max()

    bl = np.array([volt(uf.find(("bl", i)), v) for i in range(n)])
    sl = np.array([volt(uf.find(("sl", i)), v) for i in range(n)])
    i_in = net.v_bl - bl[0]
    i_in = i_in / net.r_driver if net.r_driver > 0 else float(icells.sum())
    i_out = sl[-1] / net.r_sink if net.r_sink > 0 else float(icells.sum())
    return ColumnSolution(bl, sl, float(i_out), it, float(norm), float(i_in), icells)


__all__ = [
    "BatchSolution", "ColumnNetwork", "ColumnSolution", "NonConvergence", "SingularJacobian",
    "SolverError", "oracle_solve", "solve_array", "solve_batch", "solve_column", "RESIDUAL_TOL",
]
