"""Local de Rham sequences: operator matrices, exactness audits and
divergence preimages."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from . import bernstein as bb
from .linalg import numerical_rank
from .mesh import MacroSplit
from .poly import (PiecewisePolynomial, div_matrix, divergence, factor_out_mu, mu_power,
                   rot_matrix)
from .spaces import FESpace, MembershipError, build_space, check_membership, dimension_formula

log = logging.getLogger(__name__)


class ContainmentError(ValueError):
    """The image of a source basis function is not in the target space."""


class PreimageError(ValueError):
    pass


def elevation_block(n_sub: int, ncomp: int, r: int, k: int):
    if k == 0:
        return sps.identity(n_sub * ncomp * bb.dim(r), format="csr")
    return sps.kron(sps.identity(n_sub * ncomp), sps.csr_matrix(bb.elevation_matrix(r, k)), format="csr")


def image_matrix(op: str, src: FESpace) -> tuple[np.ndarray, int]:
    """Coefficients of ``op`` applied to the basis of ``src`` and their degree."""
    r = src.degree
    if op == "rot":
        if src.ncomp != 1:
            raise ValueError("rot acts on scalar spaces")
        d = rot_matrix(src.tris, r, sparse=True)
    elif op == "div":
        if src.ncomp != 2:
            raise ValueError("div acts on vector spaces")
        d = div_matrix(src.tris, r, sparse=True)
    else:
        raise ValueError(f"unknown operator {op!r}")
    return d @ src.basis, max(r - 1, 0)


@dataclass(frozen=True)
class OperatorMatrix:
    op: str
    src: FESpace
    dst: FESpace
    matrix: np.ndarray = field(repr=False)   # (dim dst, dim src)
    rank: int
    nullity: int
    fit_residual: float

    def to_json(self) -> dict:
        return {"op": self.op, "source": self.src.name, "target": self.dst.name,
                "dim_source": self.src.dim, "dim_target": self.dst.dim, "rank": self.rank,
                "nullity": self.nullity, "fit_residual": self.fit_residual}


def operator_matrix(op: str, src: FESpace, dst: FESpace, rtol: float = 1e-10) -> OperatorMatrix:
    img, deg = image_matrix(op, src)
    if deg > dst.degree:
        raise ContainmentError(f"{op} of {src.name} has degree {deg} > {dst.name}")
    img = elevation_block(6, dst.ncomp, deg, dst.degree - deg) @ img
    coords = dst.basis.T @ img
    resid = img - dst.basis @ coords
    col_res = np.linalg.norm(resid, axis=0)
    scale = max(np.linalg.norm(img), 1.0)
    if col_res.size and col_res.max() > rtol * scale:
        j = int(np.argmax(col_res))
        raise ContainmentError(f"{op} of basis function {j} of {src.name} leaves {dst.name} "
                               f"(residual {col_res[j]:.3e})")
    rank = numerical_rank(coords, what=f"{op}: {src.name} -> {dst.name}") if coords.size else 0
    return OperatorMatrix(op, src, dst, coords, rank, src.dim - rank,
                          float(col_res.max()) if col_res.size else 0.0)


# ---------------------------------------------------------------------------
# sequences

SEQUENCES = {
    "L-V-V": (("L0", "V1", "V2"), False),
    "S-L-V": (("S0", "L1", "V2"), False),
    "S-S-L": (("S0", "S1", "L2"), False),
    "ring L-V-V": (("L0", "V1", "V2"), True),
    "ring S-L-calV": (("S0", "L1", "calV2"), True),
    "ring S-S-L": (("S0", "S1", "L2"), True),
}


@dataclass
class SequenceReport:
    chain: str
    r: int
    dims: tuple
    rank_rot: int
    rank_div: int
    kernel_rot: int
    expected_kernel_rot: int
    kernel_div: int
    composition: float
    deficit: int
    exact: bool
    links: dict

    def to_json(self) -> dict:
        return {k: (v if not isinstance(v, tuple) else list(v)) for k, v in self.__dict__.items()}


def verify_sequence(split: MacroSplit, chain: str, r: int, final: str | None = None) -> SequenceReport:
    """Audit one of the six local sequences at top degree ``r``.

    ``final`` replaces the last family (used for negative controls).
    """
    (f0, f1, f2), ring = SEQUENCES[chain]
    if final is not None:
        f2 = final
    s0 = build_space(split, f0, ring, r)
    s1 = build_space(split, f1, ring, r - 1)
    s2 = build_space(split, f2, ring, r - 2)
    rot = operator_matrix("rot", s0, s1)
    div = operator_matrix("div", s1, s2)
    comp = float(np.abs(div.matrix @ rot.matrix).max()) if rot.matrix.size and div.matrix.size else 0.0
    expected_kernel = 0 if ring else 1
    deficit = s2.dim - div.rank
    links = {
        "kernel_rot_ok": rot.nullity == expected_kernel,
        "kernel_div_equals_range_rot": div.nullity == rot.rank and comp <= 1e-9,
        "div_surjective": deficit == 0,
    }
    return SequenceReport(chain if final is None else f"{chain} (final {f2})", r,
                          (s0.dim, s1.dim, s2.dim), rot.rank, div.rank, rot.nullity,
                          expected_kernel, div.nullity, comp, deficit, all(links.values()), links)


def rank_nullity_check(split: MacroSplit, r: int, k: int) -> dict:
    """``dim S_r^k = dim L_{r-1}^{k+1} + dim L_r^k - dim V_{r-1}^{k+1}``."""
    fam_s, fam_l1, fam_l0, fam_v = (("S0", "L1", "L0", "V1") if k == 0 else ("S1", "L2", "L1", "V2"))
    ds = build_space(split, fam_s, False, r).dim
    rhs = (build_space(split, fam_l1, False, r - 1).dim + build_space(split, fam_l0, False, r).dim
           - build_space(split, fam_v, False, r - 1).dim)
    return {"k": k, "r": r, "dim_S": ds, "rhs": rhs, "formula": dimension_formula(fam_s, False, r),
            "ok": ds == rhs}


# ---------------------------------------------------------------------------
# preimages


def div_preimage_algebraic(p: PiecewisePolynomial, src: FESpace, dst: FESpace,
                           rtol: float = 1e-10) -> PiecewisePolynomial:
    """Minimal-norm coordinate preimage of ``p`` under div: src -> dst."""
    om = operator_matrix("div", src, dst)
    mem = check_membership(p, dst)
    if not mem.member:
        raise MembershipError(f"input is not in {dst.name} (residual {mem.residual:.3e})")
    x, *_ = np.linalg.lstsq(om.matrix, mem.coords, rcond=None)
    res = np.linalg.norm(om.matrix @ x - mem.coords)
    if res > rtol * max(np.linalg.norm(mem.coords), 1e-300):
        raise PreimageError(f"input is outside div({src.name}) (residual {res:.3e})")
    return src.element(x)


def rot_preimage(v: PiecewisePolynomial, split: MacroSplit, ring: bool) -> PiecewisePolynomial:
    """Scalar ``z`` with ``rot z = v`` from the continuous space one degree up."""
    src = build_space(split, "L0", ring, v.degree + 1)
    dst = build_space(split, "V1", ring, v.degree)
    om = operator_matrix("rot", src, dst)
    mem = check_membership(v, dst)
    if not mem.member:
        raise MembershipError(f"input is not in {dst.name}")
    x, *_ = np.linalg.lstsq(om.matrix, mem.coords, rcond=None)
    if np.linalg.norm(om.matrix @ x - mem.coords) > 1e-10 * max(np.linalg.norm(mem.coords), 1e-300):
        raise PreimageError("input is not divergence free")
    return src.element(x)


def _per_sub(vecs3: np.ndarray) -> np.ndarray:
    """Repeat one row per fan to one row per subtriangle."""
    return np.repeat(vecs3, 2, axis=0)


def _vertex_value(q: PiecewisePolynomial, sub: int, local_vertex: int) -> float:
    idx = bb.index_of(q.degree)
    a = [0, 0, 0]
    a[local_vertex] = q.degree
    return float(q.coeffs[sub, 0, idx[tuple(a)]])


def edge_correction(split: MacroSplit, theta: PiecewisePolynomial, s: int) -> dict:
    """Remove the split-point jumps of ``theta`` with hat functions.

    Returns ``psi`` (continuous, degree one, tangential on each fan) and
    ``gamma = theta - div psi`` continuous at the split points; then
    ``mu^s theta = div(mu^s psi) + mu^s gamma``.
    """
    tris = split.tris
    c = np.zeros((6, 2, 3))
    amps = []
    for k in range(3):
        a, b = split.edge_endpoints(k)
        pa, pm, pb = split.points[a], split.points[4 + k], split.points[b]
        z = pm
        jmp = float(theta.evaluate_at(z, 2 * k)[0, 0] - theta.evaluate_at(z, 2 * k + 1)[0, 0])
        amp = jmp / (1.0 / np.linalg.norm(pm - pa) + 1.0 / np.linalg.norm(pb - pm))
        amps.append(amp)
        t = split.tangents[k]
        # hat function at z_{4+k}: vertex 2 of sub 2k, vertex 1 of sub 2k+1
        c[2 * k, :, 2] += amp * t
        c[2 * k + 1, :, 1] += amp * t
    psi = PiecewisePolynomial(tris, 1, c)
    gamma = theta - divergence(psi)
    return {"theta": theta, "amplitudes": np.array(amps), "psi": psi, "gamma": gamma}


def mu_step(split: MacroSplit, q: PiecewisePolynomial, s: int) -> dict:
    """Split ``mu^s q = div(mu^{s+1} w) + mu^{s+1} g`` for ``q`` continuous at
    the split points; ``w`` is continuous of the degree of ``q``."""
    d = q.degree
    if d < 1:
        raise PreimageError("the mu step needs degree >= 1")
    tris = split.tris
    al = bb.multi_indices(d)
    on_edge = al[:, 0] == 0
    grad_mu = split.grad_mu()
    gnorm = np.linalg.norm(grad_mu, axis=1)
    b_end = np.zeros((3, 2))
    a_coeffs = np.zeros((6, 1, bb.dim(d)))
    for k in range(3):
        a, b = split.edge_endpoints(k)
        qa = _vertex_value(q, 2 * k, 1)
        qb = _vertex_value(q, 2 * k + 1, 2)
        b_end[k] = qa, qb
        frac = np.linalg.norm(split.points[4 + k] - split.points[a]) / np.linalg.norm(
            split.points[b] - split.points[a])
        bm = qa + (qb - qa) * frac
        lin = np.zeros((6, 1, 3))
        lin[2 * k, 0] = [0.0, qa, bm]
        lin[2 * k + 1, 0] = [0.0, bm, qb]
        blin = PiecewisePolynomial(tris, 1, lin).elevate(d - 1)
        for sub in (2 * k, 2 * k + 1):
            a_coeffs[sub, 0, on_edge] = q.coeffs[sub, 0, on_edge] - blin.coeffs[sub, 0, on_edge]
    # w1 in [P1]^2 with (s+1) w1 . grad mu_k = b_k at both ends of edge k
    rows, rhs = [], []
    for k in range(3):
        a, b = split.edge_endpoints(k)
        n = split.normals[k]
        for j, x in enumerate((split.points[a], split.points[b])):
            # w1(x) = A x + c0, unknowns (A00, A01, A10, A11, c0x, c0y)
            rows.append([n[0] * x[0], n[0] * x[1], n[1] * x[0], n[1] * x[1], n[0], n[1]])
            rhs.append(-b_end[k, j] / ((s + 1) * gnorm[k]))
    coef = np.linalg.solve(np.array(rows), np.array(rhs))
    A = coef[:4].reshape(2, 2)
    c0 = coef[4:]
    w1 = PiecewisePolynomial.interpolate_affine(tris, lambda x: x @ A.T + c0, ncomp=2)
    a_field = PiecewisePolynomial(tris, d, a_coeffs)
    ell = grad_mu / gnorm[:, None] ** 2
    w2 = (1.0 / (s + 1)) * a_field.times_constant_vector(_per_sub(ell))
    w = w1 + w2
    defect = (s + 1) * w.dot_constant(_per_sub(grad_mu)) - q
    v = factor_out_mu(defect, rtol=1e-9)
    g = -(divergence(w) + v)
    return {"q": q, "s": s, "b": b_end, "a": a_field, "w1": w1, "w2": w2, "w": w, "v": v, "g": g}


def _mu_identity_residual(split, s, q, w, rest) -> float:
    """``|mu^s q - div(mu^{s+1} w) - mu^{s+1} rest|``, relative to ``|q|``."""
    tris = split.tris
    lhs = mu_power(tris, s) * q if s > 0 else q
    rhs = divergence(w * mu_power(tris, s + 1)) + mu_power(tris, s + 1) * rest
    return (lhs - rhs).norm() / max(q.norm(), 1e-300)


@dataclass
class PreimageResult:
    v: PiecewisePolynomial
    residual: float
    boundary_trace: float
    steps: list
    base: dict


def div_preimage_constructive(p: PiecewisePolynomial, split: MacroSplit, step_tol: float = 1e-10,
                              tol: float = 1e-8) -> PreimageResult:
    """Continuous ``v`` vanishing on the boundary with ``div v = p``.

    Builds ``v = mu w_r + mu^2 w_{r-1} + ... + mu^{r+1} w_0`` by repeatedly
    splitting off one power of the bubble (an edge correction followed by
    a jump correction), then solving for a constant ``w_0``.
    """
    r = p.degree
    target = build_space(split, "calV2", True, r)
    mem = check_membership(p, target)
    if not mem.member:
        raise MembershipError(f"input is not in {target.name} (residual {mem.residual:.3e})")
    tris = split.tris
    scale = max(p.norm(), 1e-300)
    steps = []
    ws = []
    pj = p
    for ell in range(r):
        s = ell
        two = mu_step(split, pj, s)
        one = edge_correction(split, two["g"], s + 1)
        w = two["w"] + one["psi"]
        nxt = one["gamma"]
        res = _mu_identity_residual(split, s, pj, w, nxt) * pj.norm() / scale
        steps.append({"ell": ell, "s": s, "p": pj, "w": w, "next": nxt, "residual": res,
                      "mu_step": two, "jump_step": one})
        log.debug("preimage step %d: residual %.3e", ell, res)
        if res > step_tol:
            trail = ", ".join(f"{st['residual']:.2e}" for st in steps)
            raise PreimageError(f"step {ell}: residual {res:.3e} exceeds {step_tol:.1e} "
                                f"(per-step residuals: {trail})")
        ws.append(w)
        pj = nxt
    # lowest order: (r+1) grad mu_k . w0 = p0 on fan k
    p0 = pj
    vals = p0.coeffs[:, 0, 0]
    fan_vals = 0.5 * (vals[0::2] + vals[1::2])
    grad_mu = split.grad_mu()
    w0, *_ = np.linalg.lstsq((r + 1) * grad_mu, fan_vals, rcond=None)
    base_res = float(np.max(np.abs((r + 1) * grad_mu @ w0 - fan_vals), initial=0.0))
    fan_spread = float(np.max(np.abs(vals[0::2] - vals[1::2]), initial=0.0))
    base = {"p0": p0, "w0": w0, "residual": base_res / scale, "fan_spread": fan_spread / scale}
    if base["residual"] > step_tol or base["fan_spread"] > step_tol:
        raise PreimageError(f"lowest-order solve failed (residual {base['residual']:.3e}, "
                            f"fan spread {base['fan_spread']:.3e})")
    v = PiecewisePolynomial.constant(tris, w0, 0) * mu_power(tris, r + 1)
    for j, w in enumerate(ws):
        v = v + w * mu_power(tris, j + 1)
    v = v.elevate(r + 1 - v.degree)
    residual = (divergence(v) - p).norm() / scale
    on_bnd = bb.multi_indices(v.degree)[:, 0] == 0
    trace = float(np.max(np.abs(v.coeffs[:, :, on_bnd]), initial=0.0))
    if residual > tol:
        raise PreimageError(f"final residual {residual:.3e} exceeds {tol:.1e}")
    return PreimageResult(v, residual, trace, steps, base)
