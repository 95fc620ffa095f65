"""Dense third-order tensor algebra and incremental subspace models.

Tensors are plain numpy arrays of shape (I1, I2, I3). Modes are 1-based.
The n-mode unfolding A(n) has I_n rows; its columns run over the remaining
indices with the lower-numbered mode varying fastest, i.e. for a tensor of
shape (I1, I2, I3):

    A(1)[i1, i2 + I2*i3] = t[i1, i2, i3]
    A(2)[i2, i1 + I1*i3] = t[i1, i2, i3]
    A(3)[i3, i1 + I1*i2] = t[i1, i2, i3]

Mode-1/2 bases come from eigendecompositions of the unfolding covariances;
the mode-3 row-space basis comes from right singular vectors and can be
grown one row at a time with a sequential Karhunen-Loeve update.

Image patches are treated as I1 x I2 x 1 tensors throughout; a patch enters
mode-3 machinery as its column-major (Fortran) vectorization, matching the
mode-3 column ordering above.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError

# eigenvalues below this fraction of the largest are treated as rank noise
RANK_TOL = 1e-12

Tensor3 = np.ndarray


def _require_mode(mode: int) -> None:
    if mode not in (1, 2, 3):
        raise DataError(f"invalid mode {mode}; expected 1, 2, or 3")


def unfold(tensor: Tensor3, mode: int) -> np.ndarray:
    """Matricize along `mode`; see module docstring for the column order."""
    _require_mode(mode)
    t = np.asarray(tensor)
    if t.ndim != 3:
        raise DataError(f"expected a third-order tensor, got ndim={t.ndim}")
    return np.reshape(np.moveaxis(t, mode - 1, 0), (t.shape[mode - 1], -1), order="F")


def fold(matrix: np.ndarray, mode: int, shape: tuple[int, int, int]) -> Tensor3:
    """Inverse of unfold for a tensor of the given shape."""
    _require_mode(mode)
    rest = tuple(s for i, s in enumerate(shape) if i != mode - 1)
    t = np.reshape(matrix, (matrix.shape[0],) + rest, order="F")
    return np.moveaxis(t, 0, mode - 1)


def mode_product(tensor: Tensor3, matrix: np.ndarray, mode: int) -> Tensor3:
    """n-mode product: contract `mode` of the tensor with the matrix rows."""
    _require_mode(mode)
    t = np.asarray(tensor)
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[1] != t.shape[mode - 1]:
        raise DataError(
            f"mode-{mode} product needs a matrix with {t.shape[mode - 1]} "
            f"columns, got shape {m.shape}"
        )
    new_shape = list(t.shape)
    new_shape[mode - 1] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, tuple(new_shape))


def vectorize_patch(patch: np.ndarray) -> np.ndarray:
    """Mode-3 row of an I1 x I2 patch (column-major flattening)."""
    return np.asarray(patch, dtype=np.float64).reshape(-1, order="F")


def _as_patch(patch: np.ndarray) -> np.ndarray:
    """Accept an (I1, I2) or (I1, I2, 1) array and return the 2D view."""
    p = np.asarray(patch, dtype=np.float64)
    if p.ndim == 3:
        if p.shape[2] != 1:
            raise DataError(f"patch must have I3=1, got shape {p.shape}")
        p = p[:, :, 0]
    if p.ndim != 2:
        raise DataError(f"patch must be 2D or (I1, I2, 1), got shape {p.shape}")
    return p


@dataclass(frozen=True)
class SubspaceBasis:
    """Per-mode orthonormal bases of a stacked-patch tensor.

    u1: I1 x P1, u2: I2 x P2, u3: (I1*I2) x P3 (row-space basis of the
    mode-3 unfolding). mode3_singular_values carries the SKL state.
    """

    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    mode3_singular_values: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.u1.shape[1], self.u2.shape[1], self.u3.shape[1])


def _top_eigvecs(cov: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading eigenvectors of a PSD matrix, rank-capped, descending order."""
    evals, evecs = np.linalg.eigh(cov)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    largest = max(evals[0], 0.0) if evals.size else 0.0
    rank = int(np.sum(evals > largest * RANK_TOL)) if largest > 0.0 else 0
    k = min(p, rank)
    return evecs[:, :k], evals[:k]


def compute_basis(tensor: Tensor3, dims: tuple[int, int, int]) -> SubspaceBasis:
    """Single-pass subspace extraction of a stacked tensor.

    Modes 1 and 2 take the top eigenvectors of A(n) A(n)^T; mode 3 takes the
    leading right singular vectors of A(3). Each requested dimension is
    capped at the numerical rank of its unfolding.
    """
    t = np.asarray(tensor, dtype=np.float64)
    if t.ndim != 3:
        raise DataError(f"expected a third-order tensor, got ndim={t.ndim}")
    if not np.any(t):
        raise DataError("all-zero tensor has no subspace")
    p1, p2, p3 = dims
    a1 = unfold(t, 1)
    a2 = unfold(t, 2)
    u1, _ = _top_eigvecs(a1 @ a1.T, p1)
    u2, _ = _top_eigvecs(a2 @ a2.T, p2)

    a3 = unfold(t, 3)
    _, sv, vt = np.linalg.svd(a3, full_matrices=False)
    if sv.size and sv[0] > 0.0:
        rank3 = int(np.sum(sv > sv[0] * np.sqrt(RANK_TOL)))
    else:
        rank3 = 0
    k3 = min(p3, rank3)
    return SubspaceBasis(
        u1=u1, u2=u2, u3=vt[:k3].T, mode3_singular_values=sv[:k3].copy()
    )


# ---------------------------------------------------------------------------
# Sequential Karhunen-Loeve update of the mode-3 row space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mode3State:
    """Truncated row-space SVD state: u3 columns orthonormal, sigma descending."""

    dim: int
    max_rank: int
    u3: np.ndarray = None
    sigma: np.ndarray = None

    def __post_init__(self):
        if self.u3 is None:
            object.__setattr__(self, "u3", np.zeros((self.dim, 0)))
        if self.sigma is None:
            object.__setattr__(self, "sigma", np.zeros(0))

    @property
    def rank(self) -> int:
        return self.u3.shape[1]


def skl_append(state: Mode3State, new_row: np.ndarray) -> Mode3State:
    """Fold one row into the truncated row-space SVD.

    The augmented factorization [A; x^T] is rotated through the small
    (r+1)-sized core matrix, then truncated back to max_rank. Rows already
    inside the span leave the subspace unchanged; an all-zero row is a no-op.
    """
    x = np.asarray(new_row, dtype=np.float64).ravel()
    if x.size != state.dim:
        raise DataError(f"row length {x.size} does not match state dim {state.dim}")
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        return state
    if state.rank == 0:
        return replace(state, u3=(x / norm)[:, None], sigma=np.array([norm]))

    v = state.u3
    s = state.sigma
    p = v.T @ x
    resid = x - v @ p
    rho = float(np.linalg.norm(resid))
    scale = max(float(s[0]), norm)

    if rho > np.sqrt(RANK_TOL) * scale:
        r = s.size
        core = np.zeros((r + 1, r + 1))
        core[:r, :r] = np.diag(s)
        core[r, :r] = p
        core[r, r] = rho
        basis = np.column_stack([v, resid / rho])
    else:
        r = s.size
        core = np.zeros((r + 1, r))
        core[:r, :r] = np.diag(s)
        core[r, :] = p
        basis = v

    _, new_s, vt = np.linalg.svd(core, full_matrices=False)
    keep = int(np.sum(new_s > new_s[0] * np.sqrt(RANK_TOL)))
    keep = min(keep, state.max_rank)
    new_v = basis @ vt[:keep].T
    return replace(state, u3=new_v, sigma=new_s[:keep].copy())


def max_principal_sine(a: np.ndarray, b: np.ndarray) -> float:
    """Largest sine of the principal angles between two column spans."""
    if a.shape[1] == 0 or b.shape[1] == 0:
        return 1.0 if a.shape[1] != b.shape[1] else 0.0
    ga = np.linalg.norm(b - a @ (a.T @ b), 2)
    gb = np.linalg.norm(a - b @ (b.T @ a), 2)
    return float(max(ga, gb))


# ---------------------------------------------------------------------------
# Reconstruction errors
# ---------------------------------------------------------------------------


def _patch_residuals(
    patch2d: np.ndarray,
    u1: np.ndarray | None,
    u2: np.ndarray | None,
    u3: np.ndarray | None,
    modes: tuple,
) -> float:
    """Sum of squared per-mode projection residuals of one I3=1 patch."""
    total = 0.0
    if 1 in modes:
        if u1 is None or u1.shape[0] != patch2d.shape[0]:
            raise DataError("mode-1 basis does not match patch height")
        resid = patch2d - u1 @ (u1.T @ patch2d)
        total += float(np.sum(resid * resid))
    if 2 in modes:
        if u2 is None or u2.shape[0] != patch2d.shape[1]:
            raise DataError("mode-2 basis does not match patch width")
        resid = patch2d - (patch2d @ u2) @ u2.T
        total += float(np.sum(resid * resid))
    if 3 in modes:
        vec = patch2d.reshape(-1, order="F")
        if u3 is None or u3.shape[0] != vec.size:
            raise DataError("mode-3 basis does not match patch size")
        resid = vec - u3 @ (vec @ u3)
        total += float(np.sum(resid * resid))
    return total


def reconstruction_error(
    patch_s: np.ndarray,
    patch_c: np.ndarray | None,
    basis_s: SubspaceBasis,
    basis_c: SubspaceBasis | None,
    lam_s: float = 1.0,
    lam_c: float = 1.0,
    modes: tuple = (1, 2, 3),
) -> float:
    """Weighted projection residual of a patch pair against learned bases.

    e = sum_{n in modes among {1,2}} sum_M lam_M ||M - M x_n (U_n U_n^T)||_F^2
        + [3 in modes] * sum_M lam_M ||M(3) - M(3) U3 U3^T||_F^2

    The contrast channel is skipped entirely when its basis or patch is
    absent. Classification uses the unweighted form (lam_s = lam_c = 1).
    """
    ps = _as_patch(patch_s)
    e = lam_s * _patch_residuals(ps, basis_s.u1, basis_s.u2, basis_s.u3, modes)
    if patch_c is not None and basis_c is not None:
        pc = _as_patch(patch_c)
        if pc.shape != ps.shape:
            raise DataError(
                f"amplitude and contrast patches differ: {ps.shape} vs {pc.shape}"
            )
        e += lam_c * _patch_residuals(pc, basis_c.u1, basis_c.u2, basis_c.u3, modes)
    return e


# ---------------------------------------------------------------------------
# Growing stacks of patches with incrementally maintained subspaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelState:
    """One texture channel of a growing tensor.

    Mode-1/2 unfolding covariances are accumulated exactly (they are only
    I1 x I1 and I2 x I2) and re-eigendecomposed on demand; the mode-3 row
    space is maintained by skl_append. Instances are immutable: extending
    returns a new state, which makes trial extensions trivially rollbackable.
    """

    cov1: np.ndarray
    cov2: np.ndarray
    mode3: Mode3State
    count: int

    @classmethod
    def from_patch(cls, patch: np.ndarray, max_rank3: int) -> "ChannelState":
        m = _as_patch(patch)
        empty = Mode3State(dim=m.size, max_rank=max_rank3)
        return cls(
            cov1=m @ m.T,
            cov2=m.T @ m,
            mode3=skl_append(empty, vectorize_patch(m)),
            count=1,
        )

    def extended(self, patch: np.ndarray) -> "ChannelState":
        m = _as_patch(patch)
        return ChannelState(
            cov1=self.cov1 + m @ m.T,
            cov2=self.cov2 + m.T @ m,
            mode3=skl_append(self.mode3, vectorize_patch(m)),
            count=self.count + 1,
        )

    def basis(self, dims: tuple[int, int, int], modes: tuple = (1, 2, 3)) -> SubspaceBasis:
        p1, p2, _ = dims
        u1 = u2 = np.zeros((0, 0))
        if 1 in modes:
            u1, _ = _top_eigvecs(self.cov1, p1)
        if 2 in modes:
            u2, _ = _top_eigvecs(self.cov2, p2)
        return SubspaceBasis(
            u1=u1,
            u2=u2,
            u3=self.mode3.u3,
            mode3_singular_values=self.mode3.sigma,
        )


@dataclass(frozen=True)
class TensorPair:
    """Amplitude + contrast patch stacks with their incremental subspaces.

    Mirrors the classified texture tensors: both channels grow in lockstep,
    one patch pair at a time. `extended` leaves the original untouched so a
    rejected trial extension costs nothing to roll back.
    """

    dims: tuple
    use_contrast: bool
    amp: ChannelState
    con: ChannelState | None
    amp_patches: tuple = field(default_factory=tuple)
    con_patches: tuple = field(default_factory=tuple)

    @classmethod
    def start(
        cls,
        s_patch: np.ndarray,
        c_patch: np.ndarray | None,
        dims: tuple,
        use_contrast: bool = True,
    ) -> "TensorPair":
        s2 = _as_patch(s_patch)
        con = None
        con_patches = ()
        if use_contrast:
            if c_patch is None:
                raise DataError("contrast patch required when use_contrast is set")
            c2 = _as_patch(c_patch)
            if c2.shape != s2.shape:
                raise DataError("amplitude/contrast patch shapes differ")
            con = ChannelState.from_patch(c2, dims[2])
            con_patches = (c2,)
        return cls(
            dims=tuple(dims),
            use_contrast=use_contrast,
            amp=ChannelState.from_patch(s2, dims[2]),
            con=con,
            amp_patches=(s2,),
            con_patches=con_patches,
        )

    @property
    def member_count(self) -> int:
        return self.amp.count

    def extended(self, s_patch: np.ndarray, c_patch: np.ndarray | None) -> "TensorPair":
        s2 = _as_patch(s_patch)
        con = self.con
        con_patches = self.con_patches
        if self.use_contrast:
            if c_patch is None:
                raise DataError("contrast patch required when use_contrast is set")
            c2 = _as_patch(c_patch)
            con = self.con.extended(c2)
            con_patches = self.con_patches + (c2,)
        return TensorPair(
            dims=self.dims,
            use_contrast=self.use_contrast,
            amp=self.amp.extended(s2),
            con=con,
            amp_patches=self.amp_patches + (s2,),
            con_patches=con_patches,
        )

    def amplitude_tensor(self) -> Tensor3:
        return np.stack(self.amp_patches, axis=2)

    def contrast_tensor(self) -> Tensor3:
        if not self.use_contrast:
            raise DataError("pair carries no contrast channel")
        return np.stack(self.con_patches, axis=2)

    def patch_error(
        self,
        s_patch: np.ndarray,
        c_patch: np.ndarray | None,
        lam_s: float = 1.0,
        lam_c: float = 1.0,
        modes: tuple = (1, 2, 3),
    ) -> float:
        basis_s = self.amp.basis(self.dims, modes)
        basis_c = None
        cp = None
        if self.use_contrast and lam_c != 0.0:
            basis_c = self.con.basis(self.dims, modes)
            cp = c_patch
        return reconstruction_error(
            s_patch, cp, basis_s, basis_c, lam_s=lam_s, lam_c=lam_c, modes=modes
        )
