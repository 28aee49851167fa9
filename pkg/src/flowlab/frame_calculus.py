"""Frame-component tensor calculus for diagonal left-invariant 3-metrics.

Everything is computed from the bracket table and the metric alone: the
Levi-Civita connection via the Koszul formula, curvature from the connection,
and the Cotton / Cotton-York tensors from covariant derivatives of Ricci.
Tabulated per-geometry component formulas (see `closed_forms`) are check
targets for this oracle, never inputs to it.

Frame components of left-invariant tensors are constant, so covariant
derivatives are purely algebraic contractions with the connection
coefficients.  All tensors are dense numpy arrays; all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DiagonalMetric, StructureTriple, structure_constants

MAX_DERIVATIVE_RANK = 4  # one covariant derivative of rank-3 input; enough for Laplacians


@dataclass(frozen=True)
class ConnectionCoefficients:
    """Levi-Civita coefficients gamma[i,j,k] = <nabla_{F_i} F_j, F_k>.

    `gamma_up[i,j,m]` is the index-raised version: nabla_{F_i} F_j = gamma_up[i,j,m] F_m.
    """

    gamma: np.ndarray
    gamma_up: np.ndarray


@dataclass(frozen=True)
class EpsilonTensor:
    """Volume-normalized alternating tensor, up and down index versions."""

    up: np.ndarray
    down: np.ndarray
    orientation: int


@dataclass(frozen=True)
class InvariantScalars:
    """The curvature scalars entering the Cotton-York evolution equations."""

    c2_sq: float               # |C2|^2
    grad_c2_sq: float          # |nabla C2|^2
    ric_c2sq: float            # <Ric, C2^2>
    ric2_div_c3: float         # <Ric^2, div C3>
    ric_div_d: float           # <Ric, div D>, D_ijk = C_ijp g^{pq} R_qk
    grad_r_divdiv_c3: float    # <grad R, div div C3>; exactly 0 on homogeneous inputs
    scalar: float              # scalar curvature R
    c3_sq: float               # |C3|^2
    second_div_residual: float  # | div div C3 + C3 : Ric | (identity check)


def _eta() -> np.ndarray:
    eta = np.zeros((3, 3, 3))
    for (i, j, k), s in (
        ((0, 1, 2), 1.0), ((1, 2, 0), 1.0), ((2, 0, 1), 1.0),
        ((0, 2, 1), -1.0), ((2, 1, 0), -1.0), ((1, 0, 2), -1.0),
    ):
        eta[i, j, k] = s
    return eta


_ETA = _eta()


def connection(metric: DiagonalMetric, sc: np.ndarray) -> ConnectionCoefficients:
    """Koszul formula for a left-invariant frame with constant metric coefficients.

    gamma_ijk = ( <[F_i,F_j],F_k> - <[F_i,F_k],F_j> - <[F_j,F_k],F_i> ) / 2.
    """
    gd = metric.diag
    gamma = 0.5 * (
        sc * gd[None, None, :]
        - sc.transpose(0, 2, 1) * gd[None, :, None]
        - sc.transpose(2, 0, 1) * gd[:, None, None]
    )
    gamma_up = gamma / gd[None, None, :]
    return ConnectionCoefficients(gamma=gamma, gamma_up=gamma_up)


def covariant_derivative(
    tensor: np.ndarray,
    conn: ConnectionCoefficients,
    contravariant: bool = False,
) -> np.ndarray:
    """Covariant derivative of a constant-frame-component tensor.

    Returns the rank k+1 tensor (nabla T)[i, j1..jk] = (nabla_{F_i} T)(F_j1,..,F_jk);
    the derivative slot comes first.  For contravariant=True the input is
    treated as all-upper and the connection contributes with opposite sign
    arrangement.  Input rank above MAX_DERIVATIVE_RANK is rejected.
    """
    t = np.asarray(tensor, dtype=float)
    if t.ndim > MAX_DERIVATIVE_RANK:
        raise ValueError(
            f"covariant derivative of rank-{t.ndim} tensors unsupported "
            f"(maximum input rank {MAX_DERIVATIVE_RANK})"
        )
    out = np.zeros((3,) + t.shape)
    for s in range(t.ndim):
        ts = np.moveaxis(t, s, 0)
        if contravariant:
            term = np.einsum("imj,m...->ij...", conn.gamma_up, ts)
        else:
            term = -np.einsum("ijm,m...->ij...", conn.gamma_up, ts)
        out += np.moveaxis(term, 1, s + 1)
    return out


def laplacian(tensor: np.ndarray, conn: ConnectionCoefficients, metric: DiagonalMetric) -> np.ndarray:
    """Rough Laplacian g^{pq} nabla_p nabla_q T (covariant slots)."""
    second = covariant_derivative(covariant_derivative(tensor, conn), conn)
    return np.einsum("pq,pq...->...", metric.inverse, second)


def ricci(metric: DiagonalMetric, sc: np.ndarray) -> tuple[np.ndarray, float]:
    """Ricci tensor (frame components) and scalar curvature from the connection.

    Curvature convention: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z
    - nabla_[X,Y] Z and Ric(Y,Z) = trace(X -> R(X,Y)Z), which makes the round
    sphere positively curved.
    """
    conn = connection(metric, sc)
    gu = conn.gamma_up
    riem = (
        np.einsum("jkl,ilm->ijkm", gu, gu)
        - np.einsum("ikl,jlm->ijkm", gu, gu)
        - np.einsum("ijl,lkm->ijkm", sc, gu)
    )
    ric = np.einsum("ijki->jk", riem)
    scalar = float(np.einsum("jk,jk->", metric.inverse, ric))
    return ric, scalar


def scalar_gradient(metric: DiagonalMetric) -> np.ndarray:
    """Frame gradient of any curvature scalar; identically zero here.

    Curvature scalars of a left-invariant metric are constant on the group,
    so every F_i-derivative vanishes.  Kept as an explicit term so the
    evolution formulas below stay structurally complete.
    """
    del metric
    return np.zeros(3)


def epsilon_tensor(metric: DiagonalMetric, orientation: int = 1) -> EpsilonTensor:
    """Alternating tensor eps^{klm} = eta^{klm}/sqrt(det g), eps_klm = eta_klm*sqrt(det g)."""
    if orientation not in (1, -1):
        raise ValueError(f"orientation must be +1 or -1, got {orientation}")
    sq = metric.sqrt_det
    return EpsilonTensor(up=orientation * _ETA / sq, down=orientation * _ETA * sq,
                         orientation=orientation)


def cotton(metric: DiagonalMetric, sc: np.ndarray) -> np.ndarray:
    """Cotton tensor C_ijk = nabla_i R_jk - nabla_j R_ik - (nabla_i R g_jk - nabla_j R g_ik)/4.

    The scalar-gradient terms vanish on left-invariant metrics but are kept in
    the assembly.  Antisymmetric in (i,j), cyclic-free, and totally trace-free.
    """
    conn = connection(metric, sc)
    ric, _ = ricci(metric, sc)
    nric = covariant_derivative(ric, conn)
    grad_r = scalar_gradient(metric)
    g = metric.matrix
    c3 = nric - nric.transpose(1, 0, 2)
    c3 -= 0.25 * (np.einsum("i,jk->ijk", grad_r, g) - np.einsum("j,ik->ijk", grad_r, g))
    return c3


def cotton_york(metric: DiagonalMetric, sc: np.ndarray, orientation: int = 1) -> np.ndarray:
    """Cotton-York tensor C_ij = g_ik eps^{klm} C_lmj / 2.

    Symmetric, trace-free and divergence-free; vanishes exactly when the
    metric is conformally flat.
    """
    c3 = cotton(metric, sc)
    eps = epsilon_tensor(metric, orientation)
    return 0.5 * np.einsum("ik,klm,lmj->ij", metric.matrix, eps.up, c3)


def raise_all(tensor: np.ndarray, metric: DiagonalMetric) -> np.ndarray:
    """Raise every slot of an all-lower tensor with the diagonal metric."""
    out = np.asarray(tensor, dtype=float).copy()
    w = 1.0 / metric.diag
    for ax in range(out.ndim):
        shape = [1] * out.ndim
        shape[ax] = 3
        out = out * w.reshape(shape)
    return out


def tensor_inner(a: np.ndarray, b: np.ndarray, metric: DiagonalMetric) -> float:
    """g-inner product of two all-lower tensors of equal rank."""
    a = np.asarray(a, dtype=float)
    if a.shape != np.shape(b):
        raise ValueError(f"rank mismatch: {a.shape} vs {np.shape(b)}")
    return float(np.sum(a * raise_all(b, metric)))


def tensor_norm_sq(a: np.ndarray, metric: DiagonalMetric) -> float:
    return tensor_inner(a, a, metric)


def divergence(tensor: np.ndarray, conn: ConnectionCoefficients, metric: DiagonalMetric) -> np.ndarray:
    """div T = nabla^i T_{i...}: contract the derivative slot with the first tensor slot."""
    grad = covariant_derivative(tensor, conn)
    return np.einsum("ab,ab...->...", metric.inverse, grad)


def invariant_scalars(metric: DiagonalMetric, sc: np.ndarray, orientation: int = 1) -> InvariantScalars:
    """All scalar ingredients of the Cotton-York norm evolution, plus identity residuals."""
    conn = connection(metric, sc)
    gi = metric.inverse
    ric, scalar = ricci(metric, sc)
    c3 = cotton(metric, sc)
    c2 = cotton_york(metric, sc, orientation)

    c2_sq = tensor_norm_sq(c2, metric)
    c3_sq = tensor_norm_sq(c3, metric)
    grad_c2_sq = tensor_norm_sq(covariant_derivative(c2, conn), metric)

    c2_sq_tensor = np.einsum("ik,kl,lj->ij", c2, gi, c2)
    ric_c2sq = tensor_inner(ric, c2_sq_tensor, metric)

    div_c3 = divergence(c3, conn, metric)
    ric2 = np.einsum("ik,kl,lj->ij", ric, gi, ric)
    ric2_div_c3 = tensor_inner(ric2, div_c3, metric)

    d = np.einsum("ijp,pq,qk->ijk", c3, gi, ric)
    ric_div_d = tensor_inner(ric, divergence(d, conn, metric), metric)

    grad_r = scalar_gradient(metric)
    divdiv_c3 = divergence(div_c3, conn, metric)
    grad_r_divdiv_c3 = tensor_inner(grad_r, divdiv_c3, metric)

    ric_up = np.einsum("lp,pq,qm->lm", gi, ric, gi)
    second_div_residual = float(
        np.linalg.norm(divdiv_c3 + np.einsum("klm,lm->k", c3, ric_up))
    )

    return InvariantScalars(
        c2_sq=c2_sq,
        grad_c2_sq=grad_c2_sq,
        ric_c2sq=ric_c2sq,
        ric2_div_c3=ric2_div_c3,
        ric_div_d=ric_div_d,
        grad_r_divdiv_c3=grad_r_divdiv_c3,
        scalar=scalar,
        c3_sq=c3_sq,
        second_div_residual=second_div_residual,
    )


def frame_data(geometry_or_triple) -> np.ndarray:
    """Bracket table for a Geometry value or StructureTriple."""
    if isinstance(geometry_or_triple, StructureTriple):
        return structure_constants(geometry_or_triple)
    return structure_constants(StructureTriple.for_geometry(geometry_or_triple))


def dump_components(name: str, tensor: np.ndarray) -> str:
    """Plain-text dump, one component per line: name[i][j] = value (17 significant digits)."""
    arr = np.asarray(tensor, dtype=float)
    lines = []
    for idx in np.ndindex(arr.shape):
        subscript = "".join(f"[{i}]" for i in idx)
        lines.append(f"{name}{subscript} = {arr[idx]:.17g}")
    return "\n".join(lines) + "\n"
