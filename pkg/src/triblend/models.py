"""Hyperbolic models: fluxes, directional Jacobians, wave speeds.

Every model exposes the same informal interface over arrays whose last axis
(or last two axes for matrices) carries the conserved variables:

    nvars                   -- number of conserved variables
    flux(u, xy)             -- (..., nvars, 2) flux tensor
    flux_normal(u, n, xy)   -- (..., nvars) normal flux f(u) . n
    jac_normal(u, n, xy)    -- (..., nvars, nvars) Jacobian of f . n
    sign_jac_normal(...)    -- matrix sign of the above
    max_wavespeed(u, n, xy) -- (...,) spectral bound for |n| = 1 scaling;
                               the value scales linearly with |n|

`xy` carries physical coordinates for models with space-dependent flux;
models that do not need it ignore the argument.  Leading dimensions
broadcast everywhere.
"""

from __future__ import annotations

import numpy as np

# ---------------------------------------------------------------------------
# scalar models
# ---------------------------------------------------------------------------


class LinearAdvection:
    """u_t + div(a(x) u) = 0 with divergence-free velocity a."""

    nvars = 1

    def __init__(self, velocity):
        """velocity: (2,) constant or callable xy -> (..., 2)."""
        if callable(velocity):
            self._vel = velocity
        else:
            a = np.asarray(velocity, dtype=float)
            self._vel = lambda xy: np.broadcast_to(a, xy.shape[:-1] + (2,))

    def velocity_at(self, xy):
        return self._vel(np.asarray(xy))

    def flux(self, u, xy):
        a = self.velocity_at(xy)
        return u[..., :, None] * a[..., None, :]

    def flux_normal(self, u, n, xy):
        an = np.sum(self.velocity_at(xy) * n, axis=-1)
        return u * an[..., None]

    def jac_normal(self, u, n, xy):
        an = np.sum(self.velocity_at(xy) * n, axis=-1)
        return an[..., None, None] * np.ones_like(u[..., None])

    def sign_jac_normal(self, u, n, xy):
        return np.sign(self.jac_normal(u, n, xy))

    def max_wavespeed(self, u, n, xy):
        return np.abs(np.sum(self.velocity_at(xy) * n, axis=-1)) * np.ones(
            u.shape[:-1]
        )

    def jac_apply(self, u, w, xy):
        """sum_d A_d(u) w[..., d] for the gradient-like tensor w (..., 1, 2)."""
        a = self.velocity_at(xy)
        return np.sum(a[..., None, :] * w, axis=-1)


class KPP:
    """The rotating non-convex scalar flux f(u) = (sin u, cos u)."""

    nvars = 1

    def flux(self, u, xy=None):
        out = np.empty(u.shape + (2,))
        out[..., 0] = np.sin(u)
        out[..., 1] = np.cos(u)
        return out

    def flux_normal(self, u, n, xy=None):
        return np.sin(u) * n[..., 0:1] + np.cos(u) * n[..., 1:2]

    def jac_normal(self, u, n, xy=None):
        j = np.cos(u) * n[..., 0:1] - np.sin(u) * n[..., 1:2]
        return j[..., None]

    def sign_jac_normal(self, u, n, xy=None):
        return np.sign(self.jac_normal(u, n, xy))

    def max_wavespeed(self, u, n, xy=None):
        # |f'(u) . n| <= |n| for every state: use the global bound, which is
        # what the dissipation argument for this non-convex flux needs.
        return np.linalg.norm(n, axis=-1) * np.ones(u.shape[:-1])

    def jac_apply(self, u, w, xy=None):
        return np.cos(u) * w[..., 0] - np.sin(u) * w[..., 1]


# ---------------------------------------------------------------------------
# compressible Euler
# ---------------------------------------------------------------------------


class Euler:
    """2D compressible Euler with ideal-gas law, u = (rho, mx, my, E)."""

    nvars = 4

    def __init__(self, gamma: float = 1.4):
        self.gamma = float(gamma)

    # -- thermodynamics ----------------------------------------------------

    def pressure(self, u):
        rho = u[..., 0]
        ke = 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / rho
        return (self.gamma - 1.0) * (u[..., 3] - ke)

    def sound_speed(self, u):
        return np.sqrt(self.gamma * self.pressure(u) / u[..., 0])

    def conserved(self, rho, vx, vy, p):
        """Build conserved variables from primitives (broadcasting)."""
        rho, vx, vy, p = np.broadcast_arrays(
            *(np.asarray(a, dtype=float) for a in (rho, vx, vy, p))
        )
        E = p / (self.gamma - 1.0) + 0.5 * rho * (vx**2 + vy**2)
        return np.stack([rho, rho * vx, rho * vy, E], axis=-1)

    def primitives(self, u):
        rho = u[..., 0]
        vx = u[..., 1] / rho
        vy = u[..., 2] / rho
        return rho, vx, vy, self.pressure(u)

    # -- fluxes ------------------------------------------------------------

    def flux(self, u, xy=None):
        rho, vx, vy, p = self.primitives(u)
        out = np.empty(u.shape + (2,))
        out[..., 0, 0] = u[..., 1]
        out[..., 0, 1] = u[..., 2]
        out[..., 1, 0] = u[..., 1] * vx + p
        out[..., 1, 1] = u[..., 1] * vy
        out[..., 2, 0] = u[..., 2] * vx
        out[..., 2, 1] = u[..., 2] * vy + p
        out[..., 3, 0] = (u[..., 3] + p) * vx
        out[..., 3, 1] = (u[..., 3] + p) * vy
        return out

    def flux_normal(self, u, n, xy=None):
        rho, vx, vy, p = self.primitives(u)
        vn = vx * n[..., 0] + vy * n[..., 1]
        out = np.empty_like(u)
        out[..., 0] = rho * vn
        out[..., 1] = u[..., 1] * vn + p * n[..., 0]
        out[..., 2] = u[..., 2] * vn + p * n[..., 1]
        out[..., 3] = (u[..., 3] + p) * vn
        return out

    def max_wavespeed(self, u, n, xy=None):
        rho, vx, vy, p = self.primitives(u)
        nn = np.linalg.norm(n, axis=-1)
        vn = vx * n[..., 0] + vy * n[..., 1]
        return np.abs(vn) + self.sound_speed(u) * nn

    # -- eigenstructure in a unit direction ---------------------------------

    def _eig_rotated(self, u, n):
        """Eigen-data of d(f.n)/du for |n| = 1.

        Returns (lam, R, L, T, Tinv): eigenvalues (..., 4) and the factors of
        d(f.n)/du = Tinv @ R @ diag(lam) @ L @ T, where T rotates momentum
        into the (n, t) frame, t = (-ny, nx).
        """
        g = self.gamma
        nx, ny = n[..., 0], n[..., 1]
        rho, vx, vy, p = self.primitives(u)
        un = vx * nx + vy * ny
        ut = -vx * ny + vy * nx
        c = np.sqrt(g * p / rho)
        q2 = vx**2 + vy**2
        H = (u[..., 3] + p) / rho

        shape = u.shape[:-1]
        lam = np.stack([un - c, un, un, un + c], axis=-1)

        R = np.zeros(shape + (4, 4))
        R[..., 0, 0] = 1.0
        R[..., 0, 1] = 1.0
        R[..., 0, 3] = 1.0
        R[..., 1, 0] = un - c
        R[..., 1, 1] = un
        R[..., 1, 3] = un + c
        R[..., 2, 0] = ut
        R[..., 2, 1] = ut
        R[..., 2, 2] = 1.0
        R[..., 2, 3] = ut
        R[..., 3, 0] = H - un * c
        R[..., 3, 1] = 0.5 * q2
        R[..., 3, 2] = ut
        R[..., 3, 3] = H + un * c

        b1 = (g - 1.0) / c**2
        b2 = 0.5 * b1 * q2
        L = np.zeros(shape + (4, 4))
        L[..., 0, 0] = 0.5 * (b2 + un / c)
        L[..., 0, 1] = -0.5 * (b1 * un + 1.0 / c)
        L[..., 0, 2] = -0.5 * b1 * ut
        L[..., 0, 3] = 0.5 * b1
        L[..., 1, 0] = 1.0 - b2
        L[..., 1, 1] = b1 * un
        L[..., 1, 2] = b1 * ut
        L[..., 1, 3] = -b1
        L[..., 2, 0] = -ut
        L[..., 2, 2] = 1.0
        L[..., 3, 0] = 0.5 * (b2 - un / c)
        L[..., 3, 1] = -0.5 * (b1 * un - 1.0 / c)
        L[..., 3, 2] = -0.5 * b1 * ut
        L[..., 3, 3] = 0.5 * b1

        T = np.zeros(shape + (4, 4))
        T[..., 0, 0] = 1.0
        T[..., 1, 1] = nx
        T[..., 1, 2] = ny
        T[..., 2, 1] = -ny
        T[..., 2, 2] = nx
        T[..., 3, 3] = 1.0
        Tinv = np.swapaxes(T, -1, -2)  # rotation block is orthogonal

        return lam, R, L, T, Tinv

    def _apply_eig_function(self, u, n, fn):
        """Matrix function fn applied to d(f.n)/du for |n| = 1: (..., 4, 4)."""
        lam, R, L, T, Tinv = self._eig_rotated(u, n)
        g = fn(lam, u, n)
        M = np.einsum("...ik,...k,...kj->...ij", R, g, L)
        return np.einsum("...ik,...kj,...jl->...il", Tinv, M, T)

    def jac_normal(self, u, n, xy=None):
        nn = np.linalg.norm(n, axis=-1)
        nhat = n / nn[..., None]
        A = self._apply_eig_function(u, nhat, lambda lam, u_, n_: lam)
        return A * nn[..., None, None]

    def sign_jac_normal(self, u, n, xy=None):
        # Eigenvalues within round-off of zero get sign 0 so that stagnation
        # and sonic points do not flip erratically between +1 and -1.
        nn = np.linalg.norm(n, axis=-1)
        nhat = n / nn[..., None]

        def signfn(lam, u_, n_):
            scale = self.max_wavespeed(u_, n_)[..., None]
            s = np.sign(lam)
            s[np.abs(lam) <= 1e-12 * scale] = 0.0
            return s

        return self._apply_eig_function(u, nhat, signfn)

    def jac_apply(self, u, w, xy=None):
        """A_x(u) w_x + A_y(u) w_y for gradient-like w (..., 4, 2)."""
        g = self.gamma
        rho, vx, vy, p = self.primitives(u)
        q2 = vx**2 + vy**2
        phi2 = 0.5 * (g - 1.0) * q2
        H = (u[..., 3] + p) / rho
        wx = w[..., 0]
        wy = w[..., 1]
        out = np.empty_like(wx)
        # x-direction Jacobian applied to wx
        out[..., 0] = wx[..., 1]
        out[..., 1] = (
            (phi2 - vx**2) * wx[..., 0]
            + (3.0 - g) * vx * wx[..., 1]
            - (g - 1.0) * vy * wx[..., 2]
            + (g - 1.0) * wx[..., 3]
        )
        out[..., 2] = -vx * vy * wx[..., 0] + vy * wx[..., 1] + vx * wx[..., 2]
        out[..., 3] = (
            vx * (phi2 - H) * wx[..., 0]
            + (H - (g - 1.0) * vx**2) * wx[..., 1]
            - (g - 1.0) * vx * vy * wx[..., 2]
            + g * vx * wx[..., 3]
        )
        # y-direction Jacobian applied to wy
        out[..., 0] += wy[..., 2]
        out[..., 1] += -vx * vy * wy[..., 0] + vy * wy[..., 1] + vx * wy[..., 2]
        out[..., 2] += (
            (phi2 - vy**2) * wy[..., 0]
            - (g - 1.0) * vx * wy[..., 1]
            + (3.0 - g) * vy * wy[..., 2]
            + (g - 1.0) * wy[..., 3]
        )
        out[..., 3] += (
            vy * (phi2 - H) * wy[..., 0]
            - (g - 1.0) * vx * vy * wy[..., 1]
            + (H - (g - 1.0) * vy**2) * wy[..., 2]
            + g * vy * wy[..., 3]
        )
        return out

    def flux_normal_split(self, u, n, side: int, xy=None):
        """Steger-Warming split flux f^+/-(u) . n (side = +1 or -1).

        Uses homogeneity of degree one of the Euler flux: f(u).n = A_n u, so
        the split flux is A_n^{+/-} u.
        """
        nn = np.linalg.norm(n, axis=-1)
        nhat = n / nn[..., None]

        def split(lam, u_, n_):
            if side > 0:
                return 0.5 * (lam + np.abs(lam))
            return 0.5 * (lam - np.abs(lam))

        A = self._apply_eig_function(u, nhat, split)
        return np.einsum("...ij,...j->...i", A, u) * nn[..., None]
