# -*- coding: utf-8 -*-
# Copyright (C) 2024 The flowloc developers
#
# This program is free software; you can redistribute it and/or modify it under
# the terms of the GNU General Public License as published by the Free Software
# Foundation; version 3.
#
# This program is distributed in the hope that it will be useful, but WITHOUT
# ANY WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS
# FOR A PARTICULAR PURPOSE.  See the GNU General Public License for more
# details.
#
# You should have received a copy of the GNU General Public License along with
# this program; if not, write to the Free Software Foundation, Inc.,
# 51 Franklin Street, Fifth Floor, Boston, MA 02110-1301 USA

"""Joint refinement of two adjacent frame poses under consistency and reprojection energies"""

from dataclasses import dataclass, field
import logging
import numpy as np
from flowloc import settings
from flowloc.backend import Term, jacobian_rank, levenberg_marquardt, robust_energy
from flowloc.backend.pnp import reprojection_residuals, reprojection_term
from flowloc.flow import anchor_owners
from flowloc.geometry import h_project_jacobian, project_points, transform_point
from flowloc.tools import ConfigError, EmptyResidualError, stride_subsample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyConfig:

    w_consist: float = 1.0
    w_reproj: float = 1.0
    huber_delta: float = settings.DEFAULT_HUBER_DELTA
    max_iters: int = settings.DEFAULT_ENERGY_MAX_ITERS
    rel_tol: float = settings.DEFAULT_REL_TOL
    lambda0: float = settings.DEFAULT_LAMBDA0

    def __post_init__(self):
        if self.w_consist < 0 or self.w_reproj < 0:
            raise ConfigError("energy.w_consist" if self.w_consist < 0 else "energy.w_reproj", "must be non-negative")
        if self.w_consist == 0 and self.w_reproj == 0:
            raise ConfigError("energy", "w_consist and w_reproj can't both be zero")
        if self.max_iters < 1:
            raise ConfigError("energy.max_iters", "must be >= 1")
        if not self.huber_delta > 0:
            raise ConfigError("energy.huber_delta", "must be positive")
        if not self.rel_tol > 0 or not self.lambda0 > 0:
            raise ConfigError("energy", "rel_tol and lambda0 must be positive")


@dataclass
class JointResult:

    T_cur_star: object
    T_next_star: object
    initial_energy: float
    final_energy: float
    iterations: int
    converged: bool
    degenerate: bool = False
    trace: list = field(default_factory=list)
    gradient: np.ndarray = None


class ConsistencyPoints:
    """World points with their frozen current to next image flow samples"""

    def __init__(self, points=None, flows=None):
        self.points = np.zeros((0, 3)) if points is None else np.asarray(points, dtype=np.float64).reshape(-1, 3)
        self.flows = np.zeros((0, 2)) if flows is None else np.asarray(flows, dtype=np.float64).reshape(-1, 2)
        if len(self.points) != len(self.flows):
            raise ValueError("{} points but {} flow samples".format(len(self.points), len(self.flows)))

    def __len__(self):
        return len(self.points)


def sample_consistency_points(depth, cloud, K, T_init, T_cur0, f_c2n, candidates=None,
                              cap=settings.DEFAULT_CONSISTENCY_CAP):
    """Freeze the image flow sample of the points of depth seen from T_cur0

    Every valid depth pixel q is anchored at round(q + h(P, T_cur0) - h(P, T_init)) with first-in-raster-order
    ownership; owners of an anchor valid in f_c2n keep the sample stored there. candidates optionally restricts the
    kept pixels (boolean depth-sized mask). At most cap points are kept by stride subsampling.
    """
    v, u = np.nonzero(depth.valid)
    if len(v) == 0:
        return ConsistencyPoints()
    points = cloud.lookup(depth.source_id[v, u])
    uv_init, front_init = project_points(K, transform_point(T_init, points))
    uv_cur, front_cur = project_points(K, transform_point(T_cur0, points))
    usable = front_init & front_cur
    pixels = np.stack([u, v], axis=1)[usable]
    points = points[usable]
    anchors, owns = anchor_owners(pixels, (uv_cur - uv_init)[usable], depth.shape)
    au, av = anchors[:, 0].clip(0, depth.width - 1), anchors[:, 1].clip(0, depth.height - 1)
    keep = owns & f_c2n.valid[av, au]
    if candidates is not None:
        keep &= candidates[pixels[:, 1], pixels[:, 0]]
    kept = np.flatnonzero(keep)[stride_subsample(int(keep.sum()), cap)]
    flows = np.stack([f_c2n.du[av[kept], au[kept]], f_c2n.dv[av[kept], au[kept]]], axis=1)
    return ConsistencyPoints(points[kept], flows)


def consistency_residuals(K, T_cur, T_next, pts):
    """(residuals, visible, J_cur, J_next) of h(K, T_next, P) - h(K, T_cur, P) - f_c2n(P)"""
    uv_cur, front_cur, j_cur = h_project_jacobian(K, T_cur, pts.points)
    uv_next, front_next, j_next = h_project_jacobian(K, T_next, pts.points)
    visible = front_cur & front_next
    residuals = np.where(visible[:, None], uv_next - uv_cur - pts.flows, 0.0)
    return residuals, visible, j_cur, j_next


def e_consist(T_cur, T_next, pts, K):
    """Consistency residual vectors of the points visible from both poses"""
    residuals, visible, _, _ = consistency_residuals(K, T_cur, T_next, pts)
    if not visible.any():
        raise EmptyResidualError("No consistency point is visible from both poses")
    return residuals[visible]


def e_reproj(T, corrs, K):
    """(reprojection residual vectors of the points in front of the camera, count of dropped points)"""
    if len(corrs) == 0:
        raise EmptyResidualError("No correspondence")
    residuals, in_front, _ = reprojection_residuals(K, T, corrs)
    return residuals[in_front], int((~in_front).sum())


def consistency_term(K, T_cur, T_next, pts, weight, fix_cur=False):
    residuals, visible, j_cur, j_next = consistency_residuals(K, T_cur, T_next, pts)
    if fix_cur:
        jacobian = j_next[visible]
    else:
        jacobian = np.concatenate([-j_cur[visible], j_next[visible]], axis=2)
    return Term(residuals[visible], jacobian, weight, int((~visible).sum()))


def pair_terms(K, T_cur, T_next, corrs_cur, corrs_next, pts, cfg, fix_cur=False):
    """Residual terms of the (T_cur, T_next) state, or of (T_next,) alone with fix_cur"""
    blocks = 1 if fix_cur else 2
    next_block = 0 if fix_cur else 1
    terms = []
    if not fix_cur and corrs_cur is not None and len(corrs_cur):
        terms.append(reprojection_term(K, T_cur, corrs_cur, cfg.w_reproj, 0, blocks))
    if corrs_next is not None and len(corrs_next):
        terms.append(reprojection_term(K, T_next, corrs_next, cfg.w_reproj, next_block, blocks))
    if pts is not None and len(pts):
        terms.append(consistency_term(K, T_cur, T_next, pts, cfg.w_consist, fix_cur))
    return terms


def energy(K, T_cur, T_next, corrs_cur, corrs_next, pts, cfg):
    """Robust weighted energy of a pose pair"""
    return robust_energy(pair_terms(K, T_cur, T_next, corrs_cur, corrs_next, pts, cfg), cfg.huber_delta)


def optimize_pair(T_cur0, T_next0, corrs_cur, corrs_next, consist_pts, K, cfg=EnergyConfig(), fix_cur=False):
    """Levenberg-Marquardt over the stacked local parameters of both poses

    With fix_cur, T_cur0 is held and only T_next moves. A Jacobian without full rank at the start returns the
    inputs with converged False and degenerate True.
    """
    dimension = 6 if fix_cur else 12

    def evaluate(state):
        T_cur, T_next = (T_cur0, state[0]) if fix_cur else state
        return pair_terms(K, T_cur, T_next, corrs_cur, corrs_next, consist_pts, cfg, fix_cur)

    state = (T_next0,) if fix_cur else (T_cur0, T_next0)
    terms = evaluate(state)
    rank = jacobian_rank(terms, dimension)
    if rank < dimension:
        initial = robust_energy(terms, cfg.huber_delta)
        logger.debug("Degenerate pair problem: Jacobian rank {} < {}".format(rank, dimension))
        return JointResult(T_cur0, T_next0, initial, initial, 0, False, degenerate=True, trace=[initial])

    result = levenberg_marquardt(evaluate, state, huber_delta=cfg.huber_delta, max_iters=cfg.max_iters,
                                 rel_tol=cfg.rel_tol, lambda0=cfg.lambda0)
    T_cur, T_next = (T_cur0, result.state[0]) if fix_cur else result.state
    logger.debug("Pair optimized in {} iterations: energy {:.6g} -> {:.6g}".format(
        result.iterations, result.initial_energy, result.final_energy))
    return JointResult(T_cur, T_next, result.initial_energy, result.final_energy, result.iterations,
                       result.converged, trace=result.trace, gradient=result.gradient)
