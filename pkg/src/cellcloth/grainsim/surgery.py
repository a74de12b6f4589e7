"""Topological surgeries: edge flips, digon deletions, and their
degenerate relatives.

A boundary shorter than the flip threshold whose junctions are distinct
and share no second boundary is flipped: the boundary rotates a quarter
turn about its midpoint and the four outer boundaries re-pair so as to
minimize the sum of the two angles opposite the flipped boundary
(junction, boundary, and grain counts are unchanged).  A two-sided
grain whose boundaries come within the digon threshold is deleted: one
boundary is removed and the other is merged with the two adjacent
boundaries ((V, E, F) changes by (-2, -3, -1)).

Two rare degenerate shapes are handled so collapse cascades stay valid:
a digon whose outer boundaries meet at one junction merges into a
self-loop boundary (same deltas), and a small self-loop (one-sided
grain) later unzips: the loop, its junction, and its stem boundary go,
and the stem's far junction is demoted into the merged remaining
boundary (again (-2, -3, -1)).  Loops with no junctions are deleted
outright when their enclosed area falls below the square of the digon
threshold; they sit outside the Euler bookkeeping.

All scans run in ascending boundary id; ties resolve to the lowest id.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from cellcloth.grainsim.network import Network2D, NetworkError, mic

__all__ = [
    "detect_events",
    "apply_events",
    "flip_edge",
    "delete_digon",
    "delete_monogon",
    "delete_loop",
    "PreconditionError",
]

log = logging.getLogger(__name__)

FLIP_COOLDOWN_STEPS = 10
# below this fraction of the flip threshold a boundary is flipped even if
# the opposite-angle criterion does not favor it, so the timestep cannot
# grind to nothing against an unresolved junction collision
FORCED_FLIP_FRACTION = 0.25


class PreconditionError(ValueError):
    """Surgery requested on a configuration that does not admit it."""


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def _third_slot(net, j, b1, b2):
    for b, end in net.junction_slots(j):
        if b != b1 and b != b2:
            return b, end
    raise NetworkError(f"junction {j} carries only boundaries {b1},{b2}")


def _face_from(net, b, direction, cap=64):
    """Boundary ids around the face left of directed (b, direction)."""
    face = []
    cur, d = int(b), int(direction)
    for _ in range(cap):
        face.append(cur)
        j_to = int(net.b_j2[cur] if d == 0 else net.b_j1[cur])
        rot = net._rotation(j_to)
        k = rot.index((cur, 1 - d))
        cur, d = rot[(k - 1) % 3]
        if (cur, d) == (int(b), int(direction)):
            return face
    return None


def _is_digon_face(net, b1, b2):
    for d in (0, 1):
        face = _face_from(net, b1, d)
        if face is not None and len(face) == 2 and set(face) == {int(b1), int(b2)}:
            return True
    return False


def _digon_diameter(net, b1, b2):
    """Greatest distance between any two points of the two boundaries."""
    jA = int(net.b_j1[b1])
    pts = []
    for b in (b1, b2):
        coords = net.polyline_coords(b)
        if int(net.b_j1[b]) != jA:
            coords = coords[::-1]
        pts.append(coords - coords[0])  # both anchored at the shared junction
    allpts = np.concatenate(pts)
    d = allpts[:, None, :] - allpts[None, :, :]
    return float(np.hypot(d[..., 0], d[..., 1]).max())


def _flip_angle_sums(net, b):
    """(current, best-flip) sums of the two angles opposite boundary `b`."""
    j1, j2 = int(net.b_j1[b]), int(net.b_j2[b])
    out1 = sorted((bb, ee) for bb, ee in net.junction_slots(j1) if bb != b)
    out2 = sorted((bb, ee) for bb, ee in net.junction_slots(j2) if bb != b)
    p1 = net.pts[j1]
    d = mic(net.pts[j2] - p1)
    mid = (p1 + d / 2.0) % 1.0

    def direction(slot):
        bb, ee = slot
        a = net.slot_anchor(bb, ee)
        v = mic(net.pts[a] - mid)
        n = math.hypot(v[0], v[1])
        return v / n if n > 0 else np.array([1.0, 0.0])

    dirs = {s: direction(s) for s in out1 + out2}

    def ang(sa, sb):
        c = float(np.clip(np.dot(dirs[sa], dirs[sb]), -1.0, 1.0))
        return math.acos(c)

    (a1, a2), (b1s, b2s) = out1, out2
    current = ang(a1, a2) + ang(b1s, b2s)
    best = min(
        ang(a1, b1s) + ang(a2, b2s),
        ang(a1, b2s) + ang(a2, b1s),
    )
    return current, best


def detect_events(net: Network2D, flip_threshold: float, digon_threshold: float):
    """Deterministic surgery schedule for the current state.

    Digon deletions take precedence over flips on the same elements; a
    flip fires when it reduces the opposite-angle sum, or regardless of
    angles once the boundary drops far below the threshold; every
    surgery re-validates its preconditions when applied.
    """
    events = []
    consumed_b = set()
    consumed_j = set()
    lengths = net.boundary_lengths()
    alive = net.alive_boundaries()
    loop_mask = net.b_j1[alive] < 0

    # loops first: they are independent of the junction network
    for b in alive[loop_mask].tolist():
        if abs(net.loop_area(b)) < digon_threshold**2:
            events.append(("loop", b))
            consumed_b.add(b)

    # digons: boundary pairs sharing both junctions (vectorized grouping)
    nl = alive[~loop_mask]
    j1a = net.b_j1[nl]
    j2a = net.b_j2[nl]
    distinct = j1a != j2a
    self_loops = nl[~distinct]
    nl, j1a, j2a = nl[distinct], j1a[distinct], j2a[distinct]
    if len(nl):
        key = np.minimum(j1a, j2a) * np.int64(net.n_pts) + np.maximum(j1a, j2a)
        order = np.lexsort((nl, key))
        key_s, nl_s = key[order], nl[order]
        run_start = 0
        for i in range(1, len(nl_s) + 1):
            if i == len(nl_s) or key_s[i] != key_s[run_start]:
                if i - run_start >= 2:
                    b1, b2 = int(nl_s[run_start]), int(nl_s[run_start + 1])
                    pair = {int(net.b_j1[b1]), int(net.b_j2[b1])}
                    if not (consumed_j & pair) and _is_digon_face(net, b1, b2):
                        if _digon_diameter(net, b1, b2) < digon_threshold:
                            events.append(("digon", b1, b2))
                            consumed_b.update(int(x) for x in nl_s[run_start:i])
                            consumed_j.update(pair)
                run_start = i

    # self-loop (one-sided) grains
    for b in self_loops.tolist():
        if b in consumed_b:
            continue
        j1 = int(net.b_j1[b])
        if lengths[b] < flip_threshold and j1 not in consumed_j:
            events.append(("monogon", b))
            consumed_b.add(b)
            consumed_j.add(j1)

    # flips (a short side of a non-deletable digon pinches off instead)
    short = nl[lengths[nl] < flip_threshold]
    for b in short.tolist():
        if b in consumed_b:
            continue
        j1, j2 = int(net.b_j1[b]), int(net.b_j2[b])
        if j1 == j2 or j1 in consumed_j or j2 in consumed_j:
            continue
        if net.step_index - int(net.b_created[b]) < FLIP_COOLDOWN_STEPS:
            continue
        current, best = _flip_angle_sums(net, b)
        if best >= current - 1e-12 and lengths[b] >= FORCED_FLIP_FRACTION * flip_threshold:
            continue  # reconnection does not relieve the configuration yet
        others1 = {bb for bb, _ in net.junction_slots(j1) if bb != b}
        others2 = {bb for bb, _ in net.junction_slots(j2) if bb != b}
        kind = "pinch" if (others1 & others2) else "flip"
        events.append((kind, b))
        consumed_b.add(b)
        consumed_j.update((j1, j2))
    return events


def apply_events(net: Network2D, events):
    """Apply surgeries in order; each re-validates its preconditions."""
    applied = []
    for ev in events:
        try:
            if ev[0] == "flip":
                flip_edge(net, ev[1])
            elif ev[0] == "pinch":
                flip_edge(net, ev[1], allow_shared=True)
            elif ev[0] == "digon":
                delete_digon(net, ev[1], ev[2])
            elif ev[0] == "monogon":
                delete_monogon(net, ev[1])
            elif ev[0] == "loop":
                delete_loop(net, ev[1])
            else:
                raise ValueError(f"unknown event {ev!r}")
        except PreconditionError as exc:
            log.debug("skipping stale event %r: %s", ev, exc)
            continue
        applied.append(ev)
    return applied


# ---------------------------------------------------------------------------
# the surgeries
# ---------------------------------------------------------------------------

def flip_edge(net: Network2D, b: int, allow_shared: bool = False):
    """Quarter-turn reconnection of a short boundary (Euler counts fixed).

    With `allow_shared`, the flip may run even though the junctions
    share a second boundary: that is the pinch-off of a lens-shaped
    digon too extended to delete, and it turns the shared boundary into
    a one-sided grain handled later by the self-loop surgery.
    """
    b = int(b)
    if not net.b_alive[b] or net.is_loop(b):
        raise PreconditionError(f"boundary {b} cannot flip")
    j1, j2 = int(net.b_j1[b]), int(net.b_j2[b])
    if j1 == j2:
        raise PreconditionError("self-loop boundaries do not flip")
    out1 = sorted((bb, ee) for bb, ee in net.junction_slots(j1) if bb != b)
    out2 = sorted((bb, ee) for bb, ee in net.junction_slots(j2) if bb != b)
    if not allow_shared and {bb for bb, _ in out1} & {bb for bb, _ in out2}:
        raise PreconditionError("junctions share a second boundary (digon case)")

    p1, p2 = net.pts[j1], net.pts[j2]
    d = mic(p2 - p1)
    length = math.hypot(d[0], d[1])
    mid = (p1 + d / 2.0) % 1.0
    if length < 1e-12:
        axis = np.array([1.0, 0.0])
    else:
        axis = d / length
    normal = np.array([-axis[1], axis[0]])

    def direction(slot):
        bb, ee = slot
        a = net.slot_anchor(bb, ee)
        v = mic(net.pts[a] - mid)
        n = math.hypot(v[0], v[1])
        return v / n if n > 0 else np.array([1.0, 0.0])

    dirs = {s: direction(s) for s in out1 + out2}

    def opp_angle(sa, sb):
        c = float(np.clip(np.dot(dirs[sa], dirs[sb]), -1.0, 1.0))
        return math.acos(c)

    (a1, a2), (b1s, b2s) = out1, out2
    pairing_x = ((a1, b1s), (a2, b2s))
    pairing_y = ((a1, b2s), (a2, b1s))
    sum_x = opp_angle(*pairing_x[0]) + opp_angle(*pairing_x[1])
    sum_y = opp_angle(*pairing_y[0]) + opp_angle(*pairing_y[1])
    pairing = pairing_x if sum_x <= sum_y else pairing_y

    # junction j1 keeps the pair containing its lowest outer slot (a1);
    # it moves to whichever side of the rotated edge that pair points to
    pair1, pair2 = pairing
    side1 = float(np.dot(dirs[pair1[0]] + dirs[pair1[1]], normal))
    half = (length / 2.0) * normal
    q1 = (mid + half) % 1.0 if side1 >= 0 else (mid - half) % 1.0
    q2 = (mid - half) % 1.0 if side1 >= 0 else (mid + half) % 1.0

    # drop the old interior chain of b, reseed a single midpoint node
    for i in net.boundary_nodes(b):
        net.kill_point(i)
    node = net.new_point(mid, kind=2)
    net.b_first[b] = net.b_last[b] = node
    net.pt_b[node] = b
    net.prv[node] = net.nxt[node] = -1

    net.pts[j1] = q1
    net.pts[j2] = q2
    net.j_slot_b[j1] = [b, pair1[0][0], pair1[1][0]]
    net.j_slot_end[j1] = [0, pair1[0][1], pair1[1][1]]
    net.j_slot_b[j2] = [b, pair2[0][0], pair2[1][0]]
    net.j_slot_end[j2] = [1, pair2[0][1], pair2[1][1]]
    for (bb, ee), j in ((pair1[0], j1), (pair1[1], j1), (pair2[0], j2), (pair2[1], j2)):
        if ee == 0:
            net.b_j1[bb] = j
        else:
            net.b_j2[bb] = j
    net.b_created[b] = net.step_index


def _oriented_nodes(net, b, from_j):
    """Interior node ids of `b` ordered walking away from junction `from_j`."""
    nodes = net.boundary_nodes(b)
    if int(net.b_j1[b]) == from_j:
        return nodes
    return nodes[::-1]


def delete_digon(net: Network2D, b1: int, b2: int):
    """Remove a two-sided grain: (V, E, F) change by (-2, -3, -1)."""
    b1, b2 = int(min(b1, b2)), int(max(b1, b2))
    if not (net.b_alive[b1] and net.b_alive[b2]):
        raise PreconditionError("digon boundary already gone")
    jA = int(net.b_j1[b1])
    jB = int(net.b_j2[b1])
    pair = {jA, jB}
    if {int(net.b_j1[b2]), int(net.b_j2[b2])} != pair or jA == jB:
        raise PreconditionError("boundaries no longer bound a digon")
    if not _is_digon_face(net, b1, b2):
        raise PreconditionError("boundary pair no longer encloses a face")
    jA, jB = min(pair), max(pair)

    bA, _ = _third_slot(net, jA, b1, b2)
    bB, _ = _third_slot(net, jB, b1, b2)
    if bA == bB:
        # would merge into a floating loop: only possible when the cluster
        # is an island, which connected initial conditions never produce
        raise NetworkError("theta collapse: digon cluster disconnected from network")

    jX = int(net.b_j1[bA]) if int(net.b_j2[bA]) == jA else int(net.b_j2[bA])
    jY = int(net.b_j1[bB]) if int(net.b_j2[bB]) == jB else int(net.b_j2[bB])

    keep, drop = b1, b2
    merged_nodes = (
        _oriented_nodes(net, bA, jX)
        + [jA]
        + _oriented_nodes(net, keep, jA)
        + [jB]
        + _oriented_nodes(net, bB, jB)
    )

    net.kill_boundary(drop)
    # reuse node ids: deactivate without killing their points
    for bb in (bA, keep, bB):
        net.b_alive[bb] = False
        net.b_first[bb] = net.b_last[bb] = -1
        net.b_j1[bb] = net.b_j2[bb] = -1
    net.j_slot_b[jA] = -1
    net.j_slot_b[jB] = -1

    bn = net.new_boundary(jX, jY, merged_nodes)
    net.replace_slot(jX, *_find_slot(net, jX, bA), new_b=bn, new_end=0)
    net.replace_slot(jY, *_find_slot(net, jY, bB), new_b=bn, new_end=1)
    net.n_grains -= 1


def _find_slot(net, j, b):
    for bb, ee in net.junction_slots(j):
        if bb == b:
            return bb, ee
    raise NetworkError(f"junction {j} lacks a slot for boundary {b}")


def delete_monogon(net: Network2D, b: int):
    """Unzip a one-sided grain: the self-loop, its junction, and the stem
    boundary vanish; the stem's far junction is demoted ((-2, -3, -1))."""
    b = int(b)
    if not net.b_alive[b]:
        raise PreconditionError("monogon boundary already gone")
    jX = int(net.b_j1[b])
    if jX != int(net.b_j2[b]) or jX < 0:
        raise PreconditionError("boundary is not a self-loop")
    c, _ = _third_slot(net, jX, b, b)
    jZ = int(net.b_j1[c]) if int(net.b_j2[c]) == jX else int(net.b_j2[c])
    slots_z = [(bb, ee) for bb, ee in net.junction_slots(jZ) if bb != c]
    (d1, e1), (d2, e2) = sorted(slots_z)
    if d1 == d2:
        raise NetworkError("double lollipop: stem junction carries a self-loop")

    far1 = int(net.b_j1[d1]) if e1 == 1 else int(net.b_j2[d1])
    far2 = int(net.b_j1[d2]) if e2 == 1 else int(net.b_j2[d2])

    merged = (
        _oriented_nodes(net, d1, far1)
        + [jZ]
        + _oriented_nodes(net, d2, jZ)
    )
    net.kill_boundary(b)
    net.kill_boundary(c)
    net.kill_point(jX)
    for bb in (d1, d2):
        net.b_alive[bb] = False
        net.b_first[bb] = net.b_last[bb] = -1
        net.b_j1[bb] = net.b_j2[bb] = -1
    net.j_slot_b[jZ] = -1

    bn = net.new_boundary(far1, far2, merged)
    net.replace_slot(far1, *_find_slot(net, far1, d1), new_b=bn, new_end=0)
    net.replace_slot(far2, *_find_slot(net, far2, d2), new_b=bn, new_end=1)
    net.n_grains -= 1


def delete_loop(net: Network2D, b: int):
    """Remove a junction-free loop (outside Euler bookkeeping)."""
    b = int(b)
    if not net.b_alive[b] or not net.is_loop(b):
        raise PreconditionError(f"boundary {b} is not a loop")
    net.kill_boundary(b)
