"""2D grain-boundary network state on the unit torus.

The network is a set of polygonal curves: boundaries are chains of
interior nodes (degree 2) joining triple junctions (degree 3), all
positions in [0,1)^2 with periodic wrapping.  Closed curves without
junctions (loops) are supported for shrinkage tests and as transient
states; they are excluded from the adjacency-graph export and from
Euler bookkeeping.

Storage is struct-of-arrays so the motion steps vectorize: every point
(junction or interior node) lives in one coordinate array, interior
nodes form doubly linked chains, and junctions carry three (boundary,
end) slots.  Dead entries are masked and occasionally compacted; ids
are never reused between compactions, keeping scan order deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cellcloth.graphcore import AdjacencyGraph

__all__ = ["Network2D", "NetworkError", "ExportInfo", "mic", "save_network", "load_network"]

TWO_THIRDS_PI = 2.0 * math.pi / 3.0


class NetworkError(RuntimeError):
    """Structural invariant breach in the simulation state."""


def mic(d):
    """Minimum-image displacement on the unit torus (componentwise)."""
    return d - np.round(d)


@dataclass
class ExportInfo:
    graph: AdjacencyGraph
    junction_ids: list
    boundary_ids: list
    loops_excluded: int
    self_loops_excluded: int


class Network2D:
    """Mutable simulation state; see module docstring for layout."""

    def __init__(self, m=1.0, gamma=1.0, M=1.0, cap_pts=64, cap_b=16):
        self.m = float(m)
        self.gamma = float(gamma)
        self.M = float(M)
        # points
        self.pts = np.zeros((cap_pts, 2))
        self.kind = np.zeros(cap_pts, dtype=np.int8)  # 0 dead, 1 junction, 2 node
        self.nxt = np.full(cap_pts, -1, dtype=np.int64)
        self.prv = np.full(cap_pts, -1, dtype=np.int64)
        self.pt_b = np.full(cap_pts, -1, dtype=np.int64)
        self.j_slot_b = np.full((cap_pts, 3), -1, dtype=np.int64)
        self.j_slot_end = np.zeros((cap_pts, 3), dtype=np.int8)
        self.n_pts = 0
        # boundaries
        self.b_j1 = np.full(cap_b, -1, dtype=np.int64)
        self.b_j2 = np.full(cap_b, -1, dtype=np.int64)
        self.b_first = np.full(cap_b, -1, dtype=np.int64)
        self.b_last = np.full(cap_b, -1, dtype=np.int64)
        self.b_alive = np.zeros(cap_b, dtype=bool)
        self.b_created = np.zeros(cap_b, dtype=np.int64)  # step of creation
        self.n_b = 0
        # face count of the junction network, maintained through surgeries
        self.n_grains = 0
        self.step_index = 0
        # junction ids whose last balance projection did not converge
        self.vnm_unbalanced = []

    # -- allocation --------------------------------------------------------

    def _grow_pts(self, need):
        cap = len(self.kind)
        if self.n_pts + need <= cap:
            return
        new = max(cap * 2, self.n_pts + need)
        self.pts = np.resize(self.pts, (new, 2))
        for name in ("kind",):
            arr = np.zeros(new, dtype=np.int8)
            arr[:cap] = getattr(self, name)
            setattr(self, name, arr)
        for name in ("nxt", "prv", "pt_b"):
            arr = np.full(new, -1, dtype=np.int64)
            arr[:cap] = getattr(self, name)
            setattr(self, name, arr)
        jsb = np.full((new, 3), -1, dtype=np.int64)
        jsb[:cap] = self.j_slot_b
        self.j_slot_b = jsb
        jse = np.zeros((new, 3), dtype=np.int8)
        jse[:cap] = self.j_slot_end
        self.j_slot_end = jse

    def _grow_b(self, need):
        cap = len(self.b_alive)
        if self.n_b + need <= cap:
            return
        new = max(cap * 2, self.n_b + need)
        for name in ("b_j1", "b_j2", "b_first", "b_last"):
            arr = np.full(new, -1, dtype=np.int64)
            arr[:cap] = getattr(self, name)
            setattr(self, name, arr)
        alive = np.zeros(new, dtype=bool)
        alive[:cap] = self.b_alive
        self.b_alive = alive
        created = np.zeros(new, dtype=np.int64)
        created[:cap] = self.b_created
        self.b_created = created

    def new_point(self, xy, kind):
        self._grow_pts(1)
        i = self.n_pts
        self.pts[i] = np.asarray(xy) % 1.0
        self.kind[i] = kind
        self.nxt[i] = -1
        self.prv[i] = -1
        self.pt_b[i] = -1
        self.n_pts += 1
        return i

    def alloc_points(self, coords, kind):
        """Bulk allocation; returns the new contiguous id range as an array."""
        k = len(coords)
        self._grow_pts(k)
        ids = np.arange(self.n_pts, self.n_pts + k, dtype=np.int64)
        self.pts[ids] = np.asarray(coords) % 1.0
        self.kind[ids] = kind
        self.nxt[ids] = -1
        self.prv[ids] = -1
        self.pt_b[ids] = -1
        self.n_pts += k
        return ids

    def new_boundary(self, j1, j2, node_ids):
        """Create a boundary with a prelinked chain of interior node ids."""
        self._grow_b(1)
        b = self.n_b
        self.n_b += 1
        self.b_j1[b] = j1
        self.b_j2[b] = j2
        self.b_alive[b] = True
        self.b_created[b] = self.step_index
        if not node_ids:
            raise NetworkError("boundaries must carry at least one interior node")
        self.b_first[b] = node_ids[0]
        self.b_last[b] = node_ids[-1]
        prev = -1
        for i in node_ids:
            self.kind[i] = 2
            self.pt_b[i] = b
            self.prv[i] = prev
            if prev >= 0:
                self.nxt[prev] = i
            prev = i
        self.nxt[prev] = -1
        if j1 < 0:  # loop: close the chain
            self.nxt[node_ids[-1]] = node_ids[0]
            self.prv[node_ids[0]] = node_ids[-1]
        return b

    def kill_boundary(self, b):
        i = int(self.b_first[b])
        stop = int(self.b_last[b])
        while i >= 0:
            nxt = int(self.nxt[i])
            self.kind[i] = 0
            self.pt_b[i] = -1
            self.nxt[i] = -1
            self.prv[i] = -1
            if i == stop:
                break
            i = nxt
        self.b_alive[b] = False
        self.b_first[b] = self.b_last[b] = -1
        self.b_j1[b] = self.b_j2[b] = -1

    def kill_point(self, i):
        self.kind[i] = 0
        self.pt_b[i] = -1
        self.nxt[i] = -1
        self.prv[i] = -1
        self.j_slot_b[i] = -1

    # -- structure queries --------------------------------------------------

    def alive_boundaries(self):
        return np.nonzero(self.b_alive)[0]

    def is_loop(self, b):
        return self.b_j1[b] < 0

    def junction_ids(self):
        return np.nonzero(self.kind == 1)[0]

    def node_ids(self):
        return np.nonzero(self.kind == 2)[0]

    @property
    def n_junctions(self):
        return int(np.count_nonzero(self.kind == 1))

    @property
    def n_boundaries(self):
        """Alive non-loop boundaries (the Euler edge count)."""
        alive = self.alive_boundaries()
        return int(np.count_nonzero(self.b_j1[alive] >= 0))

    @property
    def n_loops(self):
        alive = self.alive_boundaries()
        return int(np.count_nonzero(self.b_j1[alive] < 0))

    def boundary_nodes(self, b):
        """Interior node ids in chain order."""
        out = []
        i = int(self.b_first[b])
        stop = int(self.b_last[b])
        while i >= 0:
            out.append(i)
            if i == stop:
                break
            i = int(self.nxt[i])
        return out

    def boundary_points(self, b):
        """Point ids along the full polyline, junctions included."""
        nodes = self.boundary_nodes(b)
        if self.is_loop(b):
            return nodes
        return [int(self.b_j1[b])] + nodes + [int(self.b_j2[b])]

    def polyline_coords(self, b):
        """Unwrapped coordinates along the boundary, starting at its first point."""
        ids = self.boundary_points(b)
        out = np.empty((len(ids), 2))
        out[0] = self.pts[ids[0]]
        for k in range(1, len(ids)):
            out[k] = out[k - 1] + mic(self.pts[ids[k]] - self.pts[ids[k - 1]])
        return out

    def junction_slots(self, j):
        return [
            (int(self.j_slot_b[j, k]), int(self.j_slot_end[j, k])) for k in range(3)
        ]

    def slot_anchor(self, b, end):
        """First interior node encountered entering boundary `b` from `end`."""
        return int(self.b_first[b]) if end == 0 else int(self.b_last[b])

    def set_slot(self, j, k, b, end):
        self.j_slot_b[j, k] = b
        self.j_slot_end[j, k] = end

    def replace_slot(self, j, old_b, old_end, new_b, new_end):
        for k in range(3):
            if self.j_slot_b[j, k] == old_b and self.j_slot_end[j, k] == old_end:
                self.j_slot_b[j, k] = new_b
                self.j_slot_end[j, k] = new_end
                return k
        raise NetworkError(f"junction {j} has no slot ({old_b},{old_end})")

    # -- vectorized geometry ------------------------------------------------

    def segment_arrays(self):
        """(src, dst) point ids of every segment, plus the owning boundary."""
        nodes = self.node_ids()
        b = self.pt_b[nodes]
        nxt = self.nxt[nodes]
        dst = np.where(nxt >= 0, nxt, self.b_j2[b])
        srcs = [nodes]
        dsts = [dst]
        owners = [b]
        alive = self.alive_boundaries()
        nonloop = alive[self.b_j1[alive] >= 0]
        if len(nonloop):
            srcs.append(self.b_j1[nonloop])
            dsts.append(self.b_first[nonloop])
            owners.append(nonloop)
        return (
            np.concatenate(srcs),
            np.concatenate(dsts),
            np.concatenate(owners),
        )

    def segment_lengths(self):
        src, dst, owners = self.segment_arrays()
        d = mic(self.pts[dst] - self.pts[src])
        return np.hypot(d[:, 0], d[:, 1]), owners

    def boundary_lengths(self):
        """Array over boundary ids (dead ids hold 0)."""
        seg, owners = self.segment_lengths()
        return np.bincount(owners, weights=seg, minlength=self.n_b)

    def mean_boundary_length(self):
        lengths = self.boundary_lengths()
        alive = self.alive_boundaries()
        if not len(alive):
            raise NetworkError("network has no boundaries")
        return float(lengths[alive].mean())

    def min_segment_length(self):
        seg, _ = self.segment_lengths()
        return float(seg.min()) if len(seg) else math.inf

    def junction_anchor_ids(self, jids):
        """(J,3) anchor node ids for the given junctions."""
        sb = self.j_slot_b[jids]
        se = self.j_slot_end[jids]
        return np.where(se == 0, self.b_first[sb], self.b_last[sb])

    # -- angles --------------------------------------------------------------

    def junction_angles(self, jids=None):
        """(J,3) angles between cyclically consecutive boundary directions."""
        if jids is None:
            jids = self.junction_ids()
        if not len(jids):
            return np.zeros((0, 3))
        anchors = self.junction_anchor_ids(jids)
        q = self.pts[jids][:, None, :]
        w = mic(self.pts[anchors] - q)
        theta = np.arctan2(w[..., 1], w[..., 0])
        theta.sort(axis=1)
        gaps = np.empty_like(theta)
        gaps[:, 0] = theta[:, 1] - theta[:, 0]
        gaps[:, 1] = theta[:, 2] - theta[:, 1]
        gaps[:, 2] = 2.0 * math.pi - theta[:, 2] + theta[:, 0]
        return gaps

    def angle_deviation(self, exclude=()):
        """Mean |angle - 2pi/3| over all junctions and all three angles.

        `exclude` drops specific junction ids, e.g. those whose balance
        projection did not converge on the measuring step.
        """
        jids = self.junction_ids()
        if len(exclude):
            jids = jids[~np.isin(jids, np.asarray(list(exclude), dtype=np.int64))]
        gaps = self.junction_angles(jids)
        if gaps.size == 0:
            return 0.0
        return float(np.abs(gaps - TWO_THIRDS_PI).mean())

    # -- faces and areas -----------------------------------------------------

    def _rotation(self, j):
        """Slots of junction `j` sorted counterclockwise by direction."""
        slots = self.junction_slots(j)
        q = self.pts[j]
        keyed = []
        for b, end in slots:
            a = self.slot_anchor(b, end)
            d = mic(self.pts[a] - q)
            keyed.append((math.atan2(d[1], d[0]), b, end))
        keyed.sort()
        return [(b, end) for _, b, end in keyed]

    def trace_faces(self):
        """Faces of the junction network as lists of directed (b, entry end).

        A directed boundary (b, 0) runs j1 -> j2.  At each junction the
        walk turns to the next slot clockwise from the reversal of the
        arrival direction, which traverses every face once
        counterclockwise.  Loops are not part of any face.
        """
        rotations = {int(j): self._rotation(int(j)) for j in self.junction_ids()}
        faces = []
        seen = set()
        alive = self.alive_boundaries()
        nonloop = alive[self.b_j1[alive] >= 0]
        for b0 in nonloop:
            for dir0 in (0, 1):
                if (int(b0), dir0) in seen:
                    continue
                face = []
                b, d = int(b0), dir0
                while (b, d) not in seen:
                    seen.add((b, d))
                    face.append((b, d))
                    j_to = int(self.b_j2[b] if d == 0 else self.b_j1[b])
                    rot = rotations[j_to]
                    # the reversed arrival edge is slot (b, other end)
                    k = rot.index((b, 1 - d))
                    nb, ne = rot[(k - 1) % 3]
                    b, d = nb, ne
                if face[0] != (int(b0), dir0):
                    raise NetworkError("face trace failed to close")
                faces.append(face)
        return faces

    def face_area(self, face):
        """Signed area of one traced face (unwrapped through images)."""
        area = 0.0
        x = y = 0.0
        closure = np.zeros(2)
        for b, d in face:
            ids = self.boundary_points(b)
            if d == 1:
                ids = ids[::-1]
            for k in range(len(ids) - 1):
                step = mic(self.pts[ids[k + 1]] - self.pts[ids[k]])
                nx, ny = x + step[0], y + step[1]
                area += x * ny - nx * y
                x, y = nx, ny
                closure += step
        if abs(closure[0]) > 1e-6 or abs(closure[1]) > 1e-6:
            raise NetworkError(f"face does not close (residual {closure})")
        return 0.5 * area

    def loop_area(self, b):
        """Enclosed area of a loop boundary."""
        coords = self.polyline_coords(b)
        x, y = coords[:, 0], coords[:, 1]
        x2, y2 = np.roll(x, -1), np.roll(y, -1)
        return 0.5 * float(np.sum(x * y2 - x2 * y))

    def grain_areas(self):
        """Areas of all junction-network faces; loop interiors reported apart.

        Returns (list of (face, area), {loop id: |area|}).  Face areas
        are positive and sum to 1 on a pure junction network.
        """
        faces = self.trace_faces()
        areas = []
        total = 0.0
        for face in faces:
            a = self.face_area(face)
            if a <= 0:
                raise NetworkError("face traced with non-positive area")
            areas.append((face, a))
            total += a
        if faces and abs(total - 1.0) > 1e-9:
            raise NetworkError(f"face areas sum to {total}, expected 1")
        loops = {}
        alive = self.alive_boundaries()
        for b in alive[self.b_j1[alive] < 0]:
            loops[int(b)] = abs(self.loop_area(int(b)))
        return areas, loops

    # -- validation -----------------------------------------------------------

    def euler_check(self):
        """V - E + F = 0 for the junction network (skipped while no junctions)."""
        v = self.n_junctions
        if v == 0:
            return
        e = self.n_boundaries
        f = self.n_grains
        if v - e + f != 0:
            raise NetworkError(f"Euler violation: V={v} E={e} F={f}")

    def validate(self, deep=False):
        """Structural invariants; `deep` also retraces faces against n_grains."""
        alive = self.alive_boundaries()
        for b in alive:
            b = int(b)
            nodes = self.boundary_nodes(b)
            if not nodes:
                raise NetworkError(f"boundary {b} has no interior nodes")
            if self.is_loop(b):
                if len(nodes) < 3:
                    raise NetworkError(f"loop {b} has fewer than 3 nodes")
                continue
            j1, j2 = int(self.b_j1[b]), int(self.b_j2[b])
            for j, end in ((j1, 0), (j2, 1)):
                if self.kind[j] != 1:
                    raise NetworkError(f"boundary {b} endpoint {j} is not a junction")
                if (b, end) not in self.junction_slots(j):
                    raise NetworkError(f"junction {j} lacks slot ({b},{end})")
            if self.prv[nodes[0]] != -1 or self.nxt[nodes[-1]] != -1:
                raise NetworkError(f"boundary {b} chain is not terminated")
        for j in self.junction_ids():
            j = int(j)
            for b, end in self.junction_slots(j):
                if b < 0 or not self.b_alive[b]:
                    raise NetworkError(f"junction {j} references dead boundary {b}")
                jj = int(self.b_j1[b] if end == 0 else self.b_j2[b])
                if jj != j:
                    raise NetworkError(f"slot mismatch at junction {j}")
        self.euler_check()
        if deep and self.n_junctions:
            f = len(self.trace_faces())
            if f != self.n_grains:
                raise NetworkError(
                    f"face trace found {f} grains, counter says {self.n_grains}"
                )

    # -- compaction ------------------------------------------------------------

    def compact(self):
        """Densify arrays, preserving relative id order (deterministic)."""
        old_pts = np.nonzero(self.kind != 0)[0]
        pmap = np.full(self.n_pts, -1, dtype=np.int64)
        pmap[old_pts] = np.arange(len(old_pts))
        old_b = np.nonzero(self.b_alive)[0]
        bmap = np.full(self.n_b, -1, dtype=np.int64)
        bmap[old_b] = np.arange(len(old_b))

        def remap_pt(arr):
            out = arr.copy()
            mask = out >= 0
            out[mask] = pmap[out[mask]]
            return out

        def remap_b(arr):
            out = arr.copy()
            mask = out >= 0
            out[mask] = bmap[out[mask]]
            return out

        self.pts = self.pts[old_pts].copy()
        self.kind = self.kind[old_pts].copy()
        self.nxt = remap_pt(self.nxt[old_pts])
        self.prv = remap_pt(self.prv[old_pts])
        self.pt_b = remap_b(self.pt_b[old_pts])
        self.j_slot_b = remap_b(self.j_slot_b[old_pts].reshape(-1)).reshape(-1, 3)
        self.j_slot_end = self.j_slot_end[old_pts].copy()
        self.n_pts = len(old_pts)

        self.b_j1 = remap_pt(self.b_j1[old_b])
        self.b_j2 = remap_pt(self.b_j2[old_b])
        self.b_first = remap_pt(self.b_first[old_b])
        self.b_last = remap_pt(self.b_last[old_b])
        self.b_alive = self.b_alive[old_b].copy()
        self.b_created = self.b_created[old_b].copy()
        self.n_b = len(old_b)

    # -- export ------------------------------------------------------------------

    def export_graph(self) -> ExportInfo:
        """Typed adjacency graph: 0-cell per junction, 1-cell per boundary.

        Loop boundaries (no junctions) and self-loop boundaries (both
        ends on one junction, which a simple graph cannot carry) are
        excluded and counted in the export metadata; surgeries remove
        such configurations as they shrink.
        """
        jids = [int(j) for j in self.junction_ids()]
        jpos = {j: i for i, j in enumerate(jids)}
        alive = [int(b) for b in self.alive_boundaries()]
        loops = 0
        self_loops = 0
        bids = []
        for b in alive:
            if self.is_loop(b):
                loops += 1
            elif self.b_j1[b] == self.b_j2[b]:
                self_loops += 1
            else:
                bids.append(b)
        nv = len(jids)
        ctypes = [0] * nv + [1] * len(bids)
        edges = []
        for k, b in enumerate(bids):
            edges.append((jpos[int(self.b_j1[b])], nv + k))
            edges.append((jpos[int(self.b_j2[b])], nv + k))
        return ExportInfo(
            graph=AdjacencyGraph(ctypes, edges),
            junction_ids=jids,
            boundary_ids=bids,
            loops_excluded=loops,
            self_loops_excluded=self_loops,
        )


# ---------------------------------------------------------------------------
# checkpoint files
# ---------------------------------------------------------------------------

def save_network(net: Network2D, path) -> None:
    """Write a `net2d v1` checkpoint (ids densified, floats exact repr)."""
    jids = [int(j) for j in net.junction_ids()]
    jpos = {j: i for i, j in enumerate(jids)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"net2d v1 m={net.m!r} gamma={net.gamma!r} M={net.M!r} "
            f"grains={net.n_grains}\n"
        )
        for j in jids:
            fh.write(f"j {jpos[j]} {float(net.pts[j][0])!r} {float(net.pts[j][1])!r}\n")
        k = 0
        for b in net.alive_boundaries():
            b = int(b)
            coords = " ".join(
                f"{float(net.pts[i][0])!r} {float(net.pts[i][1])!r}"
                for i in net.boundary_nodes(b)
            )
            if net.is_loop(b):
                fh.write(f"l {k} {coords}\n")
            else:
                fh.write(
                    f"b {k} {jpos[int(net.b_j1[b])]} {jpos[int(net.b_j2[b])]} {coords}\n"
                )
            k += 1


def load_network(path) -> Network2D:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:2] != ["net2d", "v1"]:
            raise NetworkError(f"{path}: not a net2d v1 file")
        meta = dict(kv.split("=") for kv in header[2:])
        net = Network2D(m=float(meta["m"]), gamma=float(meta["gamma"]), M=float(meta["M"]))
        jxref = {}
        pending = []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "j":
                jid = int(parts[1])
                jxref[jid] = net.new_point((float(parts[2]), float(parts[3])), kind=1)
            elif parts[0] in ("b", "l"):
                pending.append(parts)
            else:
                raise NetworkError(f"{path}: unknown record {parts[0]!r}")
        for parts in pending:
            if parts[0] == "b":
                j1, j2 = jxref[int(parts[2])], jxref[int(parts[3])]
                coords = [float(x) for x in parts[4:]]
                nodes = [
                    net.new_point((coords[2 * i], coords[2 * i + 1]), kind=2)
                    for i in range(len(coords) // 2)
                ]
                b = net.new_boundary(j1, j2, nodes)
                for j, end in ((j1, 0), (j2, 1)):
                    for k in range(3):
                        if net.j_slot_b[j, k] < 0:
                            net.set_slot(j, k, b, end)
                            break
                    else:
                        raise NetworkError(f"{path}: junction with more than 3 boundaries")
            else:
                coords = [float(x) for x in parts[2:]]
                nodes = [
                    net.new_point((coords[2 * i], coords[2 * i + 1]), kind=2)
                    for i in range(len(coords) // 2)
                ]
                net.new_boundary(-1, -1, nodes)
        net.n_grains = int(meta.get("grains", 0))
        net.validate()
        return net
