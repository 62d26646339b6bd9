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


"""Pose back-end: robust Levenberg-Marquardt over 2D pixel residual terms

A problem state is a tuple of poses updated on the right, T <- T.exp(xi). A problem is described by an evaluate
callable returning its residual terms for a state.
"""

from collections import namedtuple
import logging
import numpy as np
from flowloc import settings
from flowloc.geometry import retract

logger = logging.getLogger(__name__)

# residuals (N, 2); jacobian (N, 2, 6 * free poses); weight of the term; dropped: count of residuals
# which left the camera domain (charged the BEHIND_CAMERA_PENALTY cost)
Term = namedtuple("Term", ["residuals", "jacobian", "weight", "dropped"])

LMResult = namedtuple("LMResult", ["state", "initial_energy", "final_energy", "iterations", "converged", "trace",
                                   "gradient"])

BEHIND_CAMERA_PENALTY = 1e4  # pixels
MAX_LAMBDA = 1e10
MIN_ENERGY = 1e-18


def huber_rho(norms, delta):
    """Huber cost of residual norms, the squared norm below delta; plain squares when delta is None"""
    norms = np.asarray(norms, dtype=np.float64)
    if delta is None:
        return norms ** 2
    return np.where(norms <= delta, norms ** 2, 2 * delta * norms - delta ** 2)


def huber_weights(norms, delta):
    """Iteratively reweighted least squares weights of huber_rho"""
    norms = np.asarray(norms, dtype=np.float64)
    if delta is None:
        return np.ones_like(norms)
    with np.errstate(divide="ignore"):
        return np.where(norms <= delta, 1.0, delta / norms)


def robust_energy(terms, huber_delta):
    energy = 0.0
    for term in terms:
        if term.weight == 0:
            continue
        norms = np.linalg.norm(term.residuals, axis=1)
        penalty = term.dropped * huber_rho(BEHIND_CAMERA_PENALTY, huber_delta)
        energy += term.weight * (float(np.sum(huber_rho(norms, huber_delta))) + float(penalty))
    return energy


def normal_equations(terms, huber_delta, dimension):
    """Gauss-Newton system (H, g) of the reweighted terms"""
    H = np.zeros((dimension, dimension))
    g = np.zeros(dimension)
    for term in terms:
        if term.weight == 0 or len(term.residuals) == 0:
            continue
        weights = term.weight * huber_weights(np.linalg.norm(term.residuals, axis=1), huber_delta)
        H += np.einsum("n,nid,nie->de", weights, term.jacobian, term.jacobian)
        g += np.einsum("n,nid,ni->d", weights, term.jacobian, term.residuals)
    return H, g


def jacobian_rank(terms, dimension):
    """Rank of the stacked Jacobian of the terms with a non-zero weight"""
    blocks = [term.jacobian.reshape(-1, dimension) for term in terms if term.weight > 0 and len(term.residuals)]
    if not blocks:
        return 0
    return int(np.linalg.matrix_rank(np.concatenate(blocks)))


def retract_state(state, delta):
    return tuple(retract(pose, delta[6 * i:6 * i + 6]) for i, pose in enumerate(state))


def levenberg_marquardt(evaluate, state, huber_delta=settings.DEFAULT_HUBER_DELTA,
                        max_iters=settings.DEFAULT_ENERGY_MAX_ITERS, rel_tol=settings.DEFAULT_REL_TOL,
                        lambda0=settings.DEFAULT_LAMBDA0):
    """Minimize the robust energy of evaluate(state) with Marquardt damping H + lambda diag(H)

    Only steps decreasing the energy are accepted, so trace (the accepted energies) is non-increasing.
    Converged when an accepted step decreases the energy by less than rel_tol, when the gradient vanishes or when
    no damping produces a descent step any more.
    """
    state = tuple(state)
    dimension = 6 * len(state)
    terms = evaluate(state)
    energy = robust_energy(terms, huber_delta)
    initial_energy = energy
    trace = [energy]
    damping = lambda0
    converged = False
    iterations = 0
    H, g = normal_equations(terms, huber_delta, dimension)
    while iterations < max_iters:
        if energy <= MIN_ENERGY or np.max(np.abs(g)) < 1e-12:
            converged = True
            break
        iterations += 1
        try:
            step = -np.linalg.solve(H + damping * np.diag(np.diag(H)), g)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and np.all(np.isfinite(step)):
            candidate = retract_state(state, step)
            candidate_terms = evaluate(candidate)
            candidate_energy = robust_energy(candidate_terms, huber_delta)
            if candidate_energy < energy:
                decrease = (energy - candidate_energy) / energy
                state, terms, energy = candidate, candidate_terms, candidate_energy
                trace.append(energy)
                H, g = normal_equations(terms, huber_delta, dimension)
                damping /= settings.LAMBDA_DOWN
                logger.debug("LM iteration {}: energy {:.6g}, lambda {:.3g}".format(iterations, energy, damping))
                if decrease < rel_tol:
                    converged = True
                    break
                continue
        damping *= settings.LAMBDA_UP
        if damping > MAX_LAMBDA:
            converged = True
            break
    return LMResult(state, initial_energy, energy, iterations, converged, trace, g)
