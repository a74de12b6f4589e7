"""Curvature-driven motion, adaptive timestep, and polyline refinement.

Interior nodes move by the discrete curvature force: for a node with
vectors v1, v2 to its chain neighbors,

    dp/dt = 2 m gamma (v1_hat + v2_hat) / (|v1| + |v2|),

which approximates normal velocity m*gamma*kappa once exterior angles
are kept small.  Junctions either move with a finite mobility,

    dq/dt = M gamma (w1_hat + w2_hat + w3_hat),

or, in the von Neumann-Mullins mode, are projected each step onto the
local force-balance point where the three unit vectors sum to zero
(infinite-mobility limit, giving 2pi/3 junction angles exactly).  The
projection iterates the Weiszfeld fixed point of the force-balance
condition with damping via the displacement tolerance.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from cellcloth.grainsim.network import Network2D, mic

__all__ = [
    "node_velocities",
    "junction_velocities",
    "adaptive_timestep",
    "step_finite_mobility",
    "step_vnm",
    "refine",
    "total_boundary_length",
]

log = logging.getLogger(__name__)

MAX_EXT_ANGLE = math.pi / 10.0
MIN_EXT_ANGLE = math.pi / 40.0
MAX_SEG = 0.25
_EPS = 1e-300


def _node_frame(net: Network2D):
    ids = net.node_ids()
    b = net.pt_b[ids]
    prv = net.prv[ids]
    nxt = net.nxt[ids]
    prev_pt = np.where(prv >= 0, prv, net.b_j1[b])
    next_pt = np.where(nxt >= 0, nxt, net.b_j2[b])
    p = net.pts[ids]
    v1 = mic(net.pts[prev_pt] - p)
    v2 = mic(net.pts[next_pt] - p)
    return ids, v1, v2


def node_velocities(net: Network2D):
    """(node ids, velocity array) under the discrete curvature force."""
    ids, v1, v2 = _node_frame(net)
    l1 = np.hypot(v1[:, 0], v1[:, 1])
    l2 = np.hypot(v2[:, 0], v2[:, 1])
    unit_sum = v1 / np.maximum(l1, _EPS)[:, None] + v2 / np.maximum(l2, _EPS)[:, None]
    vel = (2.0 * net.m * net.gamma) * unit_sum / np.maximum(l1 + l2, _EPS)[:, None]
    return ids, vel


def junction_velocities(net: Network2D):
    """(junction ids, velocity array) under the finite-mobility force."""
    jids = net.junction_ids()
    if not len(jids):
        return jids, np.zeros((0, 2))
    anchors = net.junction_anchor_ids(jids)
    q = net.pts[jids][:, None, :]
    w = mic(net.pts[anchors] - q)
    norms = np.maximum(np.hypot(w[..., 0], w[..., 1]), _EPS)
    vel = net.M * net.gamma * (w / norms[..., None]).sum(axis=1)
    return jids, vel


def adaptive_timestep(net: Network2D, cfl: float, eqs: str, dt_max: float = 1.0):
    """dt capping the fastest predicted displacement at cfl x min segment.

    Junction speeds participate only in finite-mobility mode; the
    projection of the von Neumann-Mullins mode is unconditionally
    stable.
    """
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl fraction must lie in (0, 1)")
    _, nvel = node_velocities(net)
    vmax = float(np.hypot(nvel[:, 0], nvel[:, 1]).max()) if len(nvel) else 0.0
    if eqs == "finiteMobility":
        _, jvel = junction_velocities(net)
        if len(jvel):
            vmax = max(vmax, float(np.hypot(jvel[:, 0], jvel[:, 1]).max()))
    if vmax <= 0.0:
        return dt_max
    return min(dt_max, cfl * net.min_segment_length() / vmax)


def local_timestep(net: Network2D, cfl: float, eqs: str, dt_max: float = 1.0,
                   quantile: float = 0.0):
    """dt capping every point's displacement at cfl x its own local scale.

    Unlike `adaptive_timestep`, a point is compared with its own
    adjacent segment lengths, so one short slow segment somewhere does
    not throttle the whole network.  Points cannot overrun their
    neighbors for cfl below one half.

    With a nonzero `quantile`, dt is set by that quantile of the local
    ratios instead of the minimum; the step functions then clamp the few
    faster displacements to their local bound.  Those are the doomed
    sub-threshold features awaiting surgery, so the bulk dynamics is
    unaffected while dt grows by orders of magnitude.
    """
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl fraction must lie in (0, 1)")
    ids, v1, v2 = _node_frame(net)
    dt = dt_max
    if len(ids):
        l1 = np.hypot(v1[:, 0], v1[:, 1])
        l2 = np.hypot(v2[:, 0], v2[:, 1])
        unit_sum = v1 / np.maximum(l1, _EPS)[:, None] + v2 / np.maximum(l2, _EPS)[:, None]
        speed = (2.0 * net.m * net.gamma) * np.hypot(unit_sum[:, 0], unit_sum[:, 1]) \
            / np.maximum(l1 + l2, _EPS)
        ratio = np.minimum(l1, l2) / np.maximum(speed, _EPS)
        pick = float(np.quantile(ratio, quantile)) if quantile > 0 else float(ratio.min())
        dt = min(dt, cfl * pick)
        if quantile > 0:
            # bulk-scale cap so a freshly generated network (mostly zero
            # curvature, unbounded ratios) cannot take one huge first step
            ml = float((l1 + l2).mean())
            dt = min(dt, cfl * ml**2 / (2.0 * net.m * net.gamma))
    if eqs == "finiteMobility":
        jids, jvel = junction_velocities(net)
        if len(jids):
            anchors = net.junction_anchor_ids(jids)
            w = mic(net.pts[anchors] - net.pts[jids][:, None, :])
            dmin = np.hypot(w[..., 0], w[..., 1]).min(axis=1)
            speed = np.hypot(jvel[:, 0], jvel[:, 1])
            ratio = dmin / np.maximum(speed, _EPS)
            pick = float(np.quantile(ratio, quantile)) if quantile > 0 else float(ratio.min())
            dt = min(dt, cfl * pick)
    return dt


def _clamped_displacement(net: Network2D, ids, v1, v2, vel, dt, cfl):
    """Per-node displacement, limited to cfl x the shorter adjacent segment."""
    disp = vel * dt
    lim = cfl * np.minimum(
        np.hypot(v1[:, 0], v1[:, 1]), np.hypot(v2[:, 0], v2[:, 1])
    )
    norm = np.hypot(disp[:, 0], disp[:, 1])
    scale = np.minimum(1.0, lim / np.maximum(norm, _EPS))
    return disp * scale[:, None]


def step_finite_mobility(net: Network2D, dt: float, clamp_cfl: float = None):
    """Explicit Euler: all nodes and junctions move simultaneously.

    With `clamp_cfl`, each point's displacement is limited to that
    fraction of its local scale (see `local_timestep`).
    """
    ids, v1, v2 = _node_frame(net)
    l1 = np.hypot(v1[:, 0], v1[:, 1])
    l2 = np.hypot(v2[:, 0], v2[:, 1])
    unit_sum = v1 / np.maximum(l1, _EPS)[:, None] + v2 / np.maximum(l2, _EPS)[:, None]
    nvel = (2.0 * net.m * net.gamma) * unit_sum / np.maximum(l1 + l2, _EPS)[:, None]
    jids, jvel = junction_velocities(net)
    if clamp_cfl is None:
        ndisp = dt * nvel
        jdisp = dt * jvel
    else:
        ndisp = _clamped_displacement(net, ids, v1, v2, nvel, dt, clamp_cfl)
        jdisp = dt * jvel
        if len(jids):
            anchors = net.junction_anchor_ids(jids)
            w = mic(net.pts[anchors] - net.pts[jids][:, None, :])
            dmin = np.hypot(w[..., 0], w[..., 1]).min(axis=1)
            norm = np.hypot(jdisp[:, 0], jdisp[:, 1])
            scale = np.minimum(1.0, clamp_cfl * dmin / np.maximum(norm, _EPS))
            jdisp = jdisp * scale[:, None]
    net.pts[ids] = (net.pts[ids] + ndisp) % 1.0
    if len(jids):
        net.pts[jids] = (net.pts[jids] + jdisp) % 1.0
    net.step_index += 1


def step_vnm(net: Network2D, dt: float, tol_factor: float = 1e-10, max_iter: int = 200,
             mean_len: float = None, clamp_cfl: float = None):
    """Nodes move by the curvature force; junctions snap to force balance.

    The balance point (where the three incident unit vectors cancel) is
    found by damped fixed-point iteration to a displacement tolerance of
    `tol_factor` times the mean boundary length.  Junctions without an
    interior balance point (an anchor angle of 2pi/3 or wider) or whose
    iteration does not converge take one finite-mobility displacement
    instead; the return value counts these fallbacks.
    """
    ids, v1, v2 = _node_frame(net)
    l1 = np.hypot(v1[:, 0], v1[:, 1])
    l2 = np.hypot(v2[:, 0], v2[:, 1])
    unit_sum = v1 / np.maximum(l1, _EPS)[:, None] + v2 / np.maximum(l2, _EPS)[:, None]
    nvel = (2.0 * net.m * net.gamma) * unit_sum / np.maximum(l1 + l2, _EPS)[:, None]
    if clamp_cfl is None:
        ndisp = dt * nvel
    else:
        ndisp = _clamped_displacement(net, ids, v1, v2, nvel, dt, clamp_cfl)
    net.pts[ids] = (net.pts[ids] + ndisp) % 1.0

    jids = net.junction_ids()
    fallback = 0
    if len(jids):
        if mean_len is None:
            mean_len = net.mean_boundary_length()
        tol = tol_factor * mean_len
        anchors = net.junction_anchor_ids(jids)
        apos = net.pts[anchors]  # (J,3,2), fixed during the projection
        # warm start from the current position (usually 1-2 iterations);
        # lanes sitting exactly on an anchor restart from the centroid
        q = net.pts[jids].copy()
        w0 = mic(apos - q[:, None, :])
        d0 = np.hypot(w0[..., 0], w0[..., 1])
        stuck = d0.min(axis=1) < 1e-12
        if stuck.any():
            q[stuck] = (q[stuck] + w0[stuck].mean(axis=1)) % 1.0
        active = np.ones(len(jids), dtype=bool)
        for it in range(max_iter):
            if not active.any():
                break
            w = mic(apos[active] - q[active][:, None, :])
            d = np.maximum(np.hypot(w[..., 0], w[..., 1]), 1e-15)
            inv = 1.0 / d
            if it < 2:
                # damped fixed-point (Weiszfeld) steps bring the iterate
                # into the Newton basin
                shift = (w * inv[..., None]).sum(axis=1) / inv.sum(axis=1)[:, None]
            else:
                # Newton on F(q) = sum of unit vectors: quadratic tail
                u = w * inv[..., None]
                force = u.sum(axis=1)
                j11 = ((1.0 - u[..., 0] ** 2) * inv).sum(axis=1)
                j22 = ((1.0 - u[..., 1] ** 2) * inv).sum(axis=1)
                j12 = ((-u[..., 0] * u[..., 1]) * inv).sum(axis=1)
                det = j11 * j22 - j12 * j12
                ok = det > 1e-300
                shift = np.empty_like(force)
                shift[:, 0] = (j22 * force[:, 0] - j12 * force[:, 1])
                shift[:, 1] = (-j12 * force[:, 0] + j11 * force[:, 1])
                shift /= np.where(ok, det, 1.0)[:, None]
                # trust region: fall back to a fixed-point step when Newton
                # overshoots the anchor scale
                wstep = (w * inv[..., None]).sum(axis=1) / inv.sum(axis=1)[:, None]
                too_far = np.hypot(shift[:, 0], shift[:, 1]) > 0.5 * d.min(axis=1)
                bad_n = ~ok | too_far
                shift[bad_n] = wstep[bad_n]
            qa = (q[active] + shift) % 1.0
            moved = np.hypot(shift[:, 0], shift[:, 1])
            q[active] = qa
            still = moved > tol
            idx = np.nonzero(active)[0]
            active[idx[~still]] = False
        net.pts[jids] = q

        # residual force after projection: pinned or unconverged junctions
        w = mic(apos - q[:, None, :])
        d = np.maximum(np.hypot(w[..., 0], w[..., 1]), 1e-15)
        fres = (w / d[..., None]).sum(axis=1)
        fmag = np.hypot(fres[:, 0], fres[:, 1])
        bad = sorted(
            set(np.nonzero(active)[0].tolist())
            | set(np.nonzero(fmag > 1e-3)[0].tolist())
        )
        for lane in bad:
            # finite-mobility displacement, capped well inside the anchor
            # scale; the junction-anchor gap is cleaned up by refine
            fallback += 1
            j = int(jids[lane])
            q0 = net.pts[j]
            f = fres[lane]
            fm = max(float(fmag[lane]), 1e-15)
            step_len = min(1e3 * net.m * net.gamma * fm * dt, 0.2 * float(d[lane].min()))
            net.pts[j] = (q0 + f / fm * step_len) % 1.0
        if bad:
            log.debug("vnm projection: %d unbalanced junctions, %d fallbacks",
                      len(bad), fallback)
        # junctions whose balance could not be realized this step (no
        # interior solution or non-convergence); deviation measurements
        # may exclude them since they were not projected
        net.vnm_unbalanced = [int(jids[lane]) for lane in bad]
    net.step_index += 1
    return fallback


def total_boundary_length(net: Network2D):
    seg, _ = net.segment_lengths()
    return float(seg.sum())


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def _exterior_angles(net: Network2D):
    """(node ids, exterior angle at each interior node)."""
    ids, v1, v2 = _node_frame(net)
    l1 = np.maximum(np.hypot(v1[:, 0], v1[:, 1]), _EPS)
    l2 = np.maximum(np.hypot(v2[:, 0], v2[:, 1]), _EPS)
    # angle between incoming (-v1) and outgoing (v2)
    cosang = -(v1 * v2).sum(axis=1) / (l1 * l2)
    return ids, np.arccos(np.clip(cosang, -1.0, 1.0))


def _neighbors_of(net: Network2D, i: int):
    b = int(net.pt_b[i])
    p = int(net.prv[i]) if net.prv[i] >= 0 else int(net.b_j1[b])
    n = int(net.nxt[i]) if net.nxt[i] >= 0 else int(net.b_j2[b])
    return p, n


def _exterior_angle_at(net: Network2D, i: int):
    p, n = _neighbors_of(net, i)
    v1 = mic(net.pts[p] - net.pts[i])
    v2 = mic(net.pts[n] - net.pts[i])
    l1 = math.hypot(v1[0], v1[1])
    l2 = math.hypot(v2[0], v2[1])
    if l1 < 1e-300 or l2 < 1e-300:
        return 0.0
    c = -(v1[0] * v2[0] + v1[1] * v2[1]) / (l1 * l2)
    return math.acos(max(-1.0, min(1.0, c)))


def _arc_point(a, p, b):
    """Midpoint of the minor circumcircle arc between `a` and `p`.

    The circle interpolates (a, p, b); the returned point bulges away
    from the circumcenter, so it always lies near the a-p chord and can
    never fold back across the curve.  Falls back to the chord midpoint
    for nearly collinear or degenerate input.
    """
    ax, ay = a
    px, py = p
    bx, by = b
    mx, my = (ax + px) / 2.0, (ay + py) / 2.0
    chord = math.hypot(px - ax, py - ay)
    dd = 2.0 * (ax * (py - by) + px * (by - ay) + bx * (ay - py))
    if chord < 1e-12 or abs(dd) < 1e-9 * chord * chord:
        return (mx, my)
    a2 = ax * ax + ay * ay
    p2 = px * px + py * py
    b2 = bx * bx + by * by
    ox = (a2 * (py - by) + p2 * (by - ay) + b2 * (ay - py)) / dd
    oy = (a2 * (bx - px) + p2 * (ax - bx) + b2 * (px - ax)) / dd
    r = math.hypot(ax - ox, ay - oy)
    vx, vy = mx - ox, my - oy
    vn = math.hypot(vx, vy)
    if vn < 1e-15 * r:
        return (mx, my)
    return (ox + r * vx / vn, oy + r * vy / vn)


def _insert_node(net: Network2D, before: int, after: int, b: int, coord):
    """Insert an interior node between two consecutive polyline points."""
    i = net.new_point(np.asarray(coord) % 1.0, kind=2)
    net.pt_b[i] = b
    before_is_node = net.kind[before] == 2 and net.pt_b[before] == b
    after_is_node = net.kind[after] == 2 and net.pt_b[after] == b
    net.prv[i] = before if before_is_node else -1
    net.nxt[i] = after if after_is_node else -1
    if before_is_node:
        net.nxt[before] = i
    else:
        net.b_first[b] = i
    if after_is_node:
        net.prv[after] = i
    else:
        net.b_last[b] = i
    return i


def _remove_node(net: Network2D, i: int):
    b = int(net.pt_b[i])
    p, n = int(net.prv[i]), int(net.nxt[i])
    if p >= 0:
        net.nxt[p] = n
    else:
        net.b_first[b] = n
    if n >= 0:
        net.prv[n] = p
    else:
        net.b_last[b] = p
    # loops have no junction ends, so the representative first/last markers
    # must be moved off the removed node explicitly
    if net.b_first[b] == i:
        net.b_first[b] = n
    if net.b_last[b] == i:
        net.b_last[b] = p
    net.kill_point(i)


def refine(net: Network2D, max_angle=MAX_EXT_ANGLE, min_angle=MIN_EXT_ANGLE,
           max_seg=MAX_SEG, coarsen: bool = True):
    """Subdivide until every exterior angle is below `max_angle`, then
    coarsen nodes whose angle is below `min_angle` when removal is safe.

    Subdivision inserts the two circular-arc midpoints around a sharp
    node (interpolating the circumcircle through it and its neighbors),
    which halves the angles involved, so the pass terminates.  Removal
    keeps at least one interior node per boundary (four on loops), the
    neighbors' post-removal angles below `max_angle`, and the merged
    segment below `max_seg`.
    """
    # merge truly degenerate (collided) nodes first: their angles are noise
    _drop_degenerate_nodes(net)
    # junctions that have crept onto their first node absorb it and carry
    # on with the next one (a junction physically sliding along a boundary)
    _absorb_reached_anchors(net)

    # the absolute mesh floor anchors all relative limits: without it,
    # runaway insertion lowers a boundary's own mean segment, which lowers
    # the floor, which admits more insertion
    mean_len_net = net.mean_boundary_length()
    floor_abs = 0.01 * mean_len_net

    guard = 0
    while True:
        inserted = _insertion_pass(net, max_angle, floor_abs)
        if not inserted:
            break
        guard += 1
        if guard > 64:
            raise RuntimeError("refinement failed to converge")

    # coarsening: drop a node when the polyline stays smooth without it.
    # Clause one is the flat-node rule (angle below `min_angle`, neighbors
    # stay below `max_angle`); clause two removes over-resolved nodes with
    # a hysteresis margin (all angles well below the insertion threshold);
    # clause three prunes tangentially clustered nodes whose segments are
    # far shorter than their boundary's mean segment, before they collide
    # and throttle the timestep.  Passes repeat until stable: refine is
    # idempotent.
    if not coarsen:
        return net
    while _coarsen_pass(net, max_angle, min_angle, max_seg, floor_abs):
        pass
    return net


def _vec_angle_at(net, center, before, after):
    u = mic(net.pts[center] - net.pts[before])
    w = mic(net.pts[after] - net.pts[center])
    lu = np.hypot(u[:, 0], u[:, 1])
    lw = np.hypot(w[:, 0], w[:, 1])
    c = (u * w).sum(axis=1) / np.maximum(lu * lw, 1e-280)
    return np.arccos(np.clip(c, -1.0, 1.0))


def _arc_points_vec(A, P, B):
    """Vectorized minor-arc midpoints between columns of A and P.

    The circle interpolates (A, P, B) rowwise in an unwrapped local
    frame; falls back to chord midpoints for degenerate rows.
    """
    ax, ay = A[:, 0], A[:, 1]
    px, py = P[:, 0], P[:, 1]
    bx, by = B[:, 0], B[:, 1]
    mx, my = (ax + px) / 2.0, (ay + py) / 2.0
    chord = np.hypot(px - ax, py - ay)
    dd = 2.0 * (ax * (py - by) + px * (by - ay) + bx * (ay - py))
    good = (chord >= 1e-12) & (np.abs(dd) >= 1e-9 * chord * chord)
    dd = np.where(good, dd, 1.0)
    a2 = ax * ax + ay * ay
    p2 = px * px + py * py
    b2 = bx * bx + by * by
    ox = (a2 * (py - by) + p2 * (by - ay) + b2 * (ay - py)) / dd
    oy = (a2 * (bx - px) + p2 * (ax - bx) + b2 * (px - ax)) / dd
    r = np.hypot(ax - ox, ay - oy)
    vx, vy = mx - ox, my - oy
    vn = np.hypot(vx, vy)
    good &= vn >= 1e-15 * r
    out = np.empty_like(A)
    scale = np.where(good, r / np.maximum(vn, _EPS), 0.0)
    out[:, 0] = np.where(good, ox + scale * vx, mx)
    out[:, 1] = np.where(good, oy + scale * vy, my)
    return out


def _insertion_pass(net: Network2D, max_angle, floor_abs):
    """One vectorized subdivision pass; returns the number of split nodes.

    Only a chain-independent subset (no two adjacent) is processed per
    pass, so all linked-list updates are disjoint scatters; the rest is
    picked up by the next pass.  Splitting below the resolution floor is
    withheld: garbage circumcircles at that scale feed runaway
    insertion, and the dynamics smooths sub-floor kinks instead.
    """
    ids, v1, v2 = _node_frame(net)
    if not len(ids):
        return 0
    l1 = np.hypot(v1[:, 0], v1[:, 1])
    l2 = np.hypot(v2[:, 0], v2[:, 1])
    cosang = -(v1 * v2).sum(axis=1) / np.maximum(l1 * l2, _EPS)
    ang = np.arccos(np.clip(cosang, -1.0, 1.0))
    blen = net.boundary_lengths()
    ncnt = np.bincount(net.pt_b[ids], minlength=net.n_b)
    floor_b = np.maximum(
        0.25 * (blen / np.maximum(ncnt + 1, 1)), floor_abs
    )[net.pt_b[ids]]
    min_adj = np.minimum(l1, l2)
    bad = (ang >= max_angle) & (min_adj >= floor_b) & (min_adj >= 1e-12)
    if not bad.any():
        return 0
    cand = ids[bad]
    in_cand = np.zeros(net.n_pts, dtype=bool)
    in_cand[cand] = True
    b = net.pt_b[cand]
    pv = np.where(net.prv[cand] >= 0, net.prv[cand], net.b_j1[b])
    nx = np.where(net.nxt[cand] >= 0, net.nxt[cand], net.b_j2[b])
    conflict = (in_cand[pv] & (pv < cand)) | (in_cand[nx] & (nx < cand))
    keep = ~conflict
    cand, b, pv, nx = cand[keep], b[keep], pv[keep], nx[keep]
    if not len(cand):
        return 0

    pi = net.pts[cand]
    A = pi + mic(net.pts[pv] - pi)
    B = pi + mic(net.pts[nx] - pi)
    m1 = _arc_points_vec(A, pi, B)
    m2 = _arc_points_vec(B, pi, A)
    k = len(cand)
    new1 = net.alloc_points(m1, kind=2)
    new2 = net.alloc_points(m2, kind=2)
    net.pt_b[new1] = b
    net.pt_b[new2] = b

    pv_node = net.kind[pv] == 2
    nx_node = net.kind[nx] == 2
    # m1 between pv and cand
    net.prv[new1] = np.where(pv_node, pv, -1)
    net.nxt[new1] = cand
    net.prv[cand] = new1
    net.nxt[pv[pv_node]] = new1[pv_node]
    net.b_first[b[~pv_node]] = new1[~pv_node]
    # m2 between cand and nx
    net.nxt[new2] = np.where(nx_node, nx, -1)
    net.prv[new2] = cand
    net.nxt[cand] = new2
    net.prv[nx[nx_node]] = new2[nx_node]
    net.b_last[b[~nx_node]] = new2[~nx_node]
    return k


def _coarsen_pass(net: Network2D, max_angle, min_angle, max_seg, floor_abs):
    """One vectorized coarsening pass; returns the number removed.

    Candidates further than two chain positions apart are independent:
    their removal conditions, evaluated in bulk on the unmodified state,
    equal the sequential ones, so no rollback is needed.
    """
    ids, v1, v2 = _node_frame(net)
    if not len(ids):
        return 0
    l1 = np.hypot(v1[:, 0], v1[:, 1])
    l2 = np.hypot(v2[:, 0], v2[:, 1])
    min_adj = np.minimum(l1, l2)
    cosang = -(v1 * v2).sum(axis=1) / np.maximum(l1 * l2, _EPS)
    own = np.arccos(np.clip(cosang, -1.0, 1.0))
    blen = net.boundary_lengths()
    ncnt_b = np.bincount(net.pt_b[ids], minlength=net.n_b)
    mean_seg_b = (blen / np.maximum(ncnt_b + 1, 1))[net.pt_b[ids]]

    clus_own = (min_adj < 0.1 * mean_seg_b) | (min_adj < 0.5 * floor_abs)
    pre = (own < max_angle / 1.2) | clus_own
    if not pre.any():
        return 0
    cand = ids[pre]
    own = own[pre]
    min_adj = min_adj[pre]
    mean_seg_c = mean_seg_b[pre]
    clus_own = clus_own[pre]

    b = net.pt_b[cand]
    pv = np.where(net.prv[cand] >= 0, net.prv[cand], net.b_j1[b])
    nx = np.where(net.nxt[cand] >= 0, net.nxt[cand], net.b_j2[b])
    pv_b = net.pt_b[pv]
    pv_far = np.where(
        net.kind[pv] == 2,
        np.where(net.prv[pv] >= 0, net.prv[pv], net.b_j1[pv_b]),
        pv,
    )
    nx_b = net.pt_b[nx]
    nx_far = np.where(
        net.kind[nx] == 2,
        np.where(net.nxt[nx] >= 0, net.nxt[nx], net.b_j2[nx_b]),
        nx,
    )
    post_p = np.where(net.kind[pv] == 2, _vec_angle_at(net, pv, pv_far, nx), 0.0)
    post_n = np.where(net.kind[nx] == 2, _vec_angle_at(net, nx, pv, nx_far), 0.0)
    post = np.maximum(post_p, post_n)
    gap = mic(net.pts[nx] - net.pts[pv])
    gap_ok = np.hypot(gap[:, 0], gap[:, 1]) <= max_seg
    not_pair_loop = pv != nx

    flat = (own < min_angle) & (post < max_angle)
    hyst = (own < max_angle / 2.2) & (post < max_angle / 2.2)
    clus = clus_own & (post < max_angle)
    sub = (min_adj < 0.02 * mean_seg_c) | (min_adj < 0.5 * floor_abs)
    mask = (gap_ok & (flat | hyst | clus)) | sub
    mask &= not_pair_loop
    if not mask.any():
        return 0
    cand, b, pv, nx = cand[mask], b[mask], pv[mask], nx[mask]
    pv_far, nx_far = pv_far[mask], nx_far[mask]

    # independence: no other selected candidate within two chain positions
    # (a shared neighbor would change its post-removal angles)
    in_sel = np.zeros(net.n_pts, dtype=bool)
    in_sel[cand] = True
    near = np.stack([pv, nx, pv_far, nx_far], axis=1)
    conflict = np.zeros(len(cand), dtype=bool)
    for col in range(4):
        w = near[:, col]
        conflict |= in_sel[w] & (w < cand)
    cand, b, pv, nx = cand[~conflict], b[~conflict], pv[~conflict], nx[~conflict]
    if not len(cand):
        return 0

    # per-boundary quota keeps the minimum node counts (one; four on loops)
    min_nodes = np.where(net.b_j1[b] < 0, 4, 1)
    order = np.lexsort((cand, b))
    b_sorted = b[order]
    group_start = np.flatnonzero(
        np.concatenate(([True], b_sorted[1:] != b_sorted[:-1]))
    )
    ranks = np.arange(len(b_sorted)) - np.repeat(
        group_start, np.diff(np.concatenate((group_start, [len(b_sorted)])))
    )
    quota = ncnt_b[b_sorted] - min_nodes[order]
    allowed = np.zeros(len(cand), dtype=bool)
    allowed[order] = ranks < quota
    cand, b, pv, nx = cand[allowed], b[allowed], pv[allowed], nx[allowed]
    if not len(cand):
        return 0

    pv_node = net.kind[pv] == 2
    nx_node = net.kind[nx] == 2
    # chain terminators: a junction neighbor appears as -1 in the links
    nx_link = np.where(nx_node, nx, -1)
    pv_link = np.where(pv_node, pv, -1)
    net.nxt[pv[pv_node]] = nx_link[pv_node]
    net.b_first[b[~pv_node]] = nx[~pv_node]
    net.prv[nx[nx_node]] = pv_link[nx_node]
    net.b_last[b[~nx_node]] = pv[~nx_node]
    # move loop first/last markers off removed nodes
    was_first = net.b_first[b] == cand
    net.b_first[b[was_first]] = nx[was_first]
    was_last = net.b_last[b] == cand
    net.b_last[b[was_last]] = pv[was_last]
    net.kind[cand] = 0
    net.pt_b[cand] = -1
    net.prv[cand] = -1
    net.nxt[cand] = -1
    return len(cand)


def _boundary_node_count(net: Network2D, b: int):
    count = 0
    i = int(net.b_first[b])
    stop = int(net.b_last[b])
    while i >= 0:
        count += 1
        if i == stop:
            break
        i = int(net.nxt[i])
    return count


def _absorb_reached_anchors(net: Network2D, frac: float = 0.25):
    """Absorb boundary end nodes that their junction has nearly reached.

    The end segment shorter than `frac` of the boundary's mean segment
    carries no resolution; with one interior node left, the node is
    recentered instead so the invariant of at least one node holds while
    the junction keeps consuming the boundary (surgery takes over once
    the boundary is short).
    """
    alive = net.alive_boundaries()
    bids = alive[net.b_j1[alive] >= 0]
    if not len(bids):
        return
    blen = net.boundary_lengths()
    ncnt = np.bincount(net.pt_b[net.node_ids()], minlength=net.n_b)
    mean_seg = blen[bids] / (ncnt[bids] + 1)
    g1 = mic(net.pts[net.b_first[bids]] - net.pts[net.b_j1[bids]])
    g2 = mic(net.pts[net.b_last[bids]] - net.pts[net.b_j2[bids]])
    d1 = np.hypot(g1[:, 0], g1[:, 1])
    d2 = np.hypot(g2[:, 0], g2[:, 1])
    flagged = bids[(d1 < frac * mean_seg) | (d2 < frac * mean_seg)]
    for b in flagged.tolist():
        nodes = _boundary_node_count(net, b)
        ms = blen[b] / (nodes + 1)
        for j_id, end_node in (
            (int(net.b_j1[b]), int(net.b_first[b])),
            (int(net.b_j2[b]), int(net.b_last[b])),
        ):
            gap = mic(net.pts[end_node] - net.pts[j_id])
            if math.hypot(gap[0], gap[1]) >= frac * ms:
                continue
            if _boundary_node_count(net, b) >= 2:
                _remove_node(net, end_node)
            else:
                j1, j2 = int(net.b_j1[b]), int(net.b_j2[b])
                p1 = net.pts[j1]
                net.pts[end_node] = (p1 + mic(net.pts[j2] - p1) / 2.0) % 1.0
                break


def _drop_degenerate_nodes(net: Network2D, eps: float = 1e-11):
    """Remove interior nodes sitting on top of a chain neighbor.

    Tangential drift can collide nodes; a coincident node carries no
    shape information and its angle estimate is numerical noise, so it
    is merged into the neighbor unconditionally (subject to the minimum
    node count per boundary).
    """
    ids, v1, v2 = _node_frame(net)
    l1 = np.hypot(v1[:, 0], v1[:, 1])
    l2 = np.hypot(v2[:, 0], v2[:, 1])
    degmask = np.minimum(l1, l2) < eps
    for i in ids[degmask].tolist():
        if net.kind[i] != 2:
            continue
        b = int(net.pt_b[i])
        min_nodes = 4 if net.is_loop(b) else 1
        if _boundary_node_count(net, b) > min_nodes:
            _remove_node(net, i)
