"""Convex polytope meshes in halfspace representation.

A cell is the intersection of finitely many halfspaces {x : w @ x + b >= 0};
a mesh is a list of such cells with pairwise disjoint interiors. Simplex
cells may instead be given by their vertex lists, from which inward facet
halfspaces are derived. The directed-hyperplane registry canonicalizes all
facets of a mesh, merges the ones that are positive multiples of each other,
and classifies the underlying hyperplanes as interior or boundary.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import docio, lp
from .errors import DocumentError, MeshError

DEDUP_TOL = 1e-9


@dataclass
class Halfspace:
    """One closed halfspace {x : normal @ x + offset >= 0}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=float).reshape(-1)
        self.offset = float(self.offset)
        if not np.all(np.isfinite(self.normal)) or not np.isfinite(self.offset):
            raise MeshError("halfspace data must be finite")
        if np.linalg.norm(self.normal) <= 0.0:
            raise MeshError("halfspace normal must have positive length")

    def value(self, x):
        return float(self.normal @ np.asarray(x, dtype=float) + self.offset)


def _facet_normal(points: np.ndarray) -> np.ndarray:
    """Vector orthogonal to the affine hull of n points in R^n.

    Uses closed forms for n <= 3 so that exact zero coordinates in the
    input propagate exactly (important for facets lying on box faces);
    higher dimensions fall back to an SVD nullspace.
    """
    n = points.shape[1]
    if n == 1:
        return np.array([1.0])
    edges = points[1:] - points[0]
    if n == 2:
        d = edges[0]
        return np.array([-d[1], d[0]])
    if n == 3:
        return np.cross(edges[0], edges[1])
    _, _, vt = np.linalg.svd(edges)
    return vt[-1]


def _simplex_halfspaces(vertices: np.ndarray):
    """Inward facet halfspaces of a nondegenerate simplex."""
    n = vertices.shape[1]
    if vertices.shape[0] != n + 1:
        raise MeshError(f"simplex in R^{n} needs {n + 1} vertices, got {len(vertices)}")
    W = np.zeros((n + 1, n))
    b = np.zeros(n + 1)
    for k in range(n + 1):
        facet = np.delete(vertices, k, axis=0)
        # sort facet points so both cells sharing this facet see identical input
        order = np.lexsort(facet.T[::-1])
        facet = facet[order]
        w = _facet_normal(facet)
        if np.linalg.norm(w) <= 0.0:
            raise MeshError("degenerate simplex facet")
        off = -float(w @ facet[0])
        # orient inward: the omitted vertex must be strictly on the >= side
        side = float(w @ vertices[k] + off)
        if side < 0.0:
            w, off, side = -w, -off, -side
        if side == 0.0:
            raise MeshError("degenerate simplex (flat)")
        W[k] = w
        b[k] = off
    return W, b


class ConvexCell:
    """Closed convex polytope given by facet normals W and offsets b.

    The cell is {x : W @ x + b >= 0}. Simplex cells keep their vertex
    array as well, which enables exact volumes and nodal interpolation.
    """

    def __init__(self, W, b, vertices=None):
        self.W = np.atleast_2d(np.asarray(W, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.W.shape[0] != self.b.shape[0]:
            raise MeshError("normal/offset count mismatch")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise MeshError("cell halfspace data must be finite")
        norms = np.linalg.norm(self.W, axis=1)
        if np.any(norms <= 0.0):
            raise MeshError("cell has a zero facet normal")
        self.norms = norms
        self.vertices = None if vertices is None else np.asarray(vertices, dtype=float)
        self._cheb = None
        self._bbox = None

    @classmethod
    def from_halfspaces(cls, halfspaces):
        W = np.array([h.normal for h in halfspaces], dtype=float)
        b = np.array([h.offset for h in halfspaces], dtype=float)
        return cls(W, b)

    @classmethod
    def from_simplex(cls, vertices):
        vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        W, b = _simplex_halfspaces(vertices)
        return cls(W, b, vertices=vertices)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    @property
    def halfspaces(self):
        return [Halfspace(self.W[i].copy(), self.b[i]) for i in range(self.m)]

    def facet_values(self, X):
        """h_i(x) for every facet, shape (S, m)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.W.T + self.b

    def contains(self, X, tol=1e-12):
        return np.min(self.facet_values(X), axis=1) >= -tol

    def boundary_distance(self, X):
        """min_i (w_i @ x + b_i)/|w_i|; equals d(x, boundary) inside the cell."""
        return np.min(self.facet_values(X) / self.norms, axis=1)

    def shrink(self, epsilon: float) -> "ConvexCell":
        if epsilon < 0:
            raise MeshError("epsilon must be >= 0")
        return ConvexCell(self.W.copy(), self.b - epsilon * self.norms)

    def chebyshev(self):
        """(incenter, inradius); inradius <= 0 flags an empty interior."""
        if self._cheb is None:
            res = lp.chebyshev_center(self.W, self.b)
            if res is None:
                raise MeshError("Chebyshev LP failed (cell unbounded or malformed)")
            self._cheb = res
        return self._cheb

    def inradius(self) -> float:
        return float(self.chebyshev()[1])

    def is_bounded(self) -> bool:
        return lp.is_bounded(self.W, self.b)

    def bounding_box(self):
        if self._bbox is None:
            if self.vertices is not None:
                lo = self.vertices.min(axis=0)
                hi = self.vertices.max(axis=0)
            else:
                n = self.dim
                lo = np.empty(n)
                hi = np.empty(n)
                for j in range(n):
                    e = np.zeros(n)
                    e[j] = 1.0
                    lo[j] = lp.linear_minimum(self.W, self.b, e)[0]
                    hi[j] = -lp.linear_minimum(self.W, self.b, -e)[0]
            self._bbox = (lo, hi)
        return self._bbox

    def polygon_vertices(self):
        """Vertex cycle of a 2D cell from its H-representation."""
        if self.dim != 2:
            raise MeshError("polygon_vertices requires a 2D cell")
        pts = []
        for i, j in itertools.combinations(range(self.m), 2):
            A = self.W[[i, j]]
            if abs(np.linalg.det(A)) < 1e-12 * (self.norms[i] * self.norms[j]):
                continue
            x = np.linalg.solve(A, -self.b[[i, j]])
            if np.min(self.facet_values(x)[0] / self.norms) >= -1e-9:
                pts.append(x)
        if len(pts) < 3:
            raise MeshError("2D cell has fewer than 3 vertices")
        pts = np.array(pts)
        # dedup coincident intersection points
        keep = []
        for p in pts:
            if not any(np.linalg.norm(p - q) < 1e-10 for q in keep):
                keep.append(p)
        pts = np.array(keep)
        center = pts.mean(axis=0)
        ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
        return pts[np.argsort(ang)]

    def volume(self) -> float:
        if self.vertices is not None and self.vertices.shape[0] == self.dim + 1:
            edges = self.vertices[1:] - self.vertices[0]
            return abs(float(np.linalg.det(edges))) / float(math.factorial(self.dim))
        if self.dim == 1:
            lo, hi = self.bounding_box()
            return max(float(hi[0] - lo[0]), 0.0)
        if self.dim == 2:
            pts = self.polygon_vertices()
            x, y = pts[:, 0], pts[:, 1]
            return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
        raise MeshError("exact volume only available for simplices, 1D and 2D cells")

    def prune_redundant(self, tol=1e-9) -> "ConvexCell":
        """Drop halfspaces that do not support a facet of the cell."""
        keep = list(range(self.m))
        # first remove positive multiples inside the cell, keeping the tightest
        i = 0
        while i < len(keep):
            j = i + 1
            while j < len(keep):
                a, c = keep[i], keep[j]
                ua = self.W[a] / self.norms[a]
                uc = self.W[c] / self.norms[c]
                if np.max(np.abs(ua - uc)) <= tol:
                    # same direction: tighter offset wins
                    if self.b[a] / self.norms[a] <= self.b[c] / self.norms[c]:
                        keep.pop(j)
                        continue
                    keep.pop(i)
                    j = i + 1
                    continue
                j += 1
            i += 1
        # then LP-prune non-supporting halfspaces; an unbounded test LP means
        # the candidate is essential for boundedness, hence not redundant
        changed = True
        while changed:
            changed = False
            for idx in list(keep):
                others = [k for k in keep if k != idx]
                if len(others) < self.dim + 1:
                    continue
                res = lp.linear_minimum_raw(self.W[others], self.b[others], self.W[idx])
                if res.success and res.fun + self.b[idx] >= -tol:
                    keep.remove(idx)
                    changed = True
        return ConvexCell(self.W[keep], self.b[keep], vertices=self.vertices)

    def to_doc(self) -> dict:
        if self.vertices is not None and self.vertices.shape[0] == self.dim + 1:
            return {"vertices": self.vertices}
        return {"halfspaces": [{"w": self.W[i], "b": self.b[i]} for i in range(self.m)]}

    @classmethod
    def from_doc(cls, doc: dict, dimension: int) -> "ConvexCell":
        if "vertices" in doc:
            verts = docio.as_float_array(doc["vertices"], "vertices")
            if verts.ndim != 2 or verts.shape[1] != dimension:
                raise DocumentError("cell vertices have wrong shape")
            return cls.from_simplex(verts)
        if "halfspaces" in doc:
            hs = doc["halfspaces"]
            if not isinstance(hs, list) or not hs:
                raise DocumentError("field 'halfspaces' must be a non-empty list")
            W = np.zeros((len(hs), dimension))
            b = np.zeros(len(hs))
            for i, h in enumerate(hs):
                W[i] = docio.as_float_array(docio.get(h, "w"), "w", (dimension,))
                b[i] = float(docio.get(h, "b", (int, float)))
            return cls(W, b)
        raise DocumentError("cell needs either 'vertices' or 'halfspaces'")


def shrink_cell(cell: ConvexCell, epsilon: float) -> ConvexCell:
    """Offsets b_i -> b_i - epsilon * |w_i|; normals unchanged."""
    return cell.shrink(epsilon)


@dataclass
class RegistryEntry:
    """One directed hyperplane in canonical (unit-normal) coordinates.

    `rep_normal`/`rep_offset` keep the raw data of the first facet mapped
    here, so merged network neurons can reuse those exact floats.
    """

    unit_normal: np.ndarray
    unit_offset: float
    rep_normal: np.ndarray
    rep_offset: float
    undirected_id: int = -1
    interior: bool = False


class DirectedHyperplaneRegistry:
    """Canonical list of the directed hyperplanes supporting mesh facets."""

    def __init__(self, tol=DEDUP_TOL):
        self.tol = tol
        self.entries: list[RegistryEntry] = []
        self.facet_entry: dict[tuple[int, int], int] = {}
        self.facet_scale: dict[tuple[int, int], float] = {}
        self._units = np.zeros((0, 0))
        self._offsets = np.zeros(0)
        self.interior_count = 0
        self.boundary_count = 0

    @property
    def size(self) -> int:
        return len(self.entries)

    def _find(self, u: np.ndarray, beta: float) -> int:
        if not self.entries:
            return -1
        d = np.max(np.abs(self._units - u), axis=1)
        mask = (d <= self.tol) & (np.abs(self._offsets - beta) <= self.tol)
        hits = np.nonzero(mask)[0]
        return int(hits[0]) if hits.size else -1

    def _add(self, u, beta, w, b) -> int:
        self.entries.append(RegistryEntry(u, beta, w.copy(), float(b)))
        if self._units.size == 0:
            self._units = u[None, :].copy()
        else:
            self._units = np.vstack([self._units, u])
        self._offsets = np.append(self._offsets, beta)
        return len(self.entries) - 1

    def insert_facet(self, key: tuple[int, int], w: np.ndarray, b: float) -> int:
        nw = float(np.linalg.norm(w))
        u = w / nw
        beta = b / nw
        idx = self._find(u, beta)
        if idx < 0:
            idx = self._add(u, beta, w, b)
            scale = 1.0
        else:
            entry = self.entries[idx]
            if w.shape == entry.rep_normal.shape and np.array_equal(w, entry.rep_normal) \
                    and b == entry.rep_offset:
                scale = 1.0
            else:
                scale = nw / float(np.linalg.norm(entry.rep_normal))
        self.facet_entry[key] = idx
        self.facet_scale[key] = scale
        return idx

    def classify(self):
        """Pair each entry with its reversed orientation; set interior flags."""
        undirected = -np.ones(len(self.entries), dtype=int)
        next_id = 0
        for i, e in enumerate(self.entries):
            if undirected[i] >= 0:
                continue
            undirected[i] = next_id
            j = self._find(-e.unit_normal, -e.unit_offset)
            if j >= 0 and j != i and undirected[j] < 0:
                undirected[j] = next_id
                e.interior = True
                self.entries[j].interior = True
            next_id += 1
        for i, e in enumerate(self.entries):
            e.undirected_id = int(undirected[i])
        ids_interior = {e.undirected_id for e in self.entries if e.interior}
        ids_all = {e.undirected_id for e in self.entries}
        self.interior_count = len(ids_interior)
        self.boundary_count = len(ids_all) - len(ids_interior)

    @classmethod
    def build(cls, mesh: "PolytopeMesh", tol=DEDUP_TOL) -> "DirectedHyperplaneRegistry":
        reg = cls(tol=tol)
        for ci, cell in enumerate(mesh.cells):
            for fi in range(cell.m):
                reg.insert_facet((ci, fi), cell.W[fi], float(cell.b[fi]))
        reg.classify()
        return reg


def build_registry(mesh: "PolytopeMesh", tol=DEDUP_TOL) -> DirectedHyperplaneRegistry:
    """Canonicalize and dedup all mesh facets; size equals 2*H_i + H_b."""
    return DirectedHyperplaneRegistry.build(mesh, tol=tol)


class PolytopeMesh:
    """A list of convex cells with disjoint interiors covering the domain."""

    def __init__(self, dimension: int, cells, domain_hull: ConvexCell | None = None):
        if dimension < 1:
            raise MeshError("dimension must be >= 1")
        cells = list(cells)
        if not cells:
            raise MeshError("mesh needs at least one cell")
        for i, c in enumerate(cells):
            if c.dim != dimension:
                raise MeshError(f"cell {i} has dimension {c.dim}, expected {dimension}")
        self.dimension = dimension
        self.cells = cells
        self.domain_hull = domain_hull
        self._registry = None
        self._vertex_table = None

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def registry(self, rebuild=False) -> DirectedHyperplaneRegistry:
        if self._registry is None or rebuild:
            self._registry = build_registry(self)
        return self._registry

    def counts(self):
        """(H_interior, H_boundary, N_cells)."""
        reg = self.registry()
        return reg.interior_count, reg.boundary_count, self.n_cells

    def is_simplicial(self) -> bool:
        return all(
            c.vertices is not None and c.vertices.shape[0] == self.dimension + 1
            for c in self.cells
        )

    def vertex_table(self):
        """Global vertex array plus per-cell vertex indices (simplicial meshes).

        Vertices are matched exactly (bit for bit); generators and the file
        round trip produce identical floats for shared vertices.
        """
        if self._vertex_table is None:
            if not self.is_simplicial():
                raise MeshError("vertex table requires a simplicial mesh")
            index: dict[bytes, int] = {}
            verts: list[np.ndarray] = []
            cell_ids = []
            for c in self.cells:
                ids = []
                for v in c.vertices:
                    key = v.tobytes()
                    if key not in index:
                        index[key] = len(verts)
                        verts.append(v.copy())
                    ids.append(index[key])
                cell_ids.append(ids)
            self._vertex_table = (np.array(verts), cell_ids)
        return self._vertex_table

    def bounding_box(self):
        los, his = zip(*(c.bounding_box() for c in self.cells))
        return np.min(los, axis=0), np.max(his, axis=0)

    def volume(self) -> float:
        return float(sum(c.volume() for c in self.cells))

    def locate(self, X, tol=1e-12):
        """First containing cell index per point, -1 when outside the mesh."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = -np.ones(X.shape[0], dtype=int)
        todo = np.arange(X.shape[0])
        for ci, cell in enumerate(self.cells):
            if todo.size == 0:
                break
            inside = cell.contains(X[todo], tol=tol)
            hit = todo[inside]
            out[hit] = ci
            todo = todo[~inside]
        return out

    def to_doc(self) -> dict:
        doc = {
            "dimension": self.dimension,
            "cells": [c.to_doc() for c in self.cells],
        }
        if self.domain_hull is not None:
            hull_doc = self.domain_hull.to_doc()
            if "vertices" in hull_doc:
                hull_doc = {
                    "halfspaces": [
                        {"w": self.domain_hull.W[i], "b": self.domain_hull.b[i]}
                        for i in range(self.domain_hull.m)
                    ]
                }
            doc["domain_hull"] = hull_doc
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "PolytopeMesh":
        dim = docio.get(doc, "dimension", int)
        if dim < 1:
            raise DocumentError("field 'dimension' must be >= 1")
        cell_docs = docio.get(doc, "cells", list)
        if not cell_docs:
            raise DocumentError("field 'cells' must be non-empty")
        cells = [ConvexCell.from_doc(cd, dim) for cd in cell_docs]
        hull = None
        if doc.get("domain_hull") is not None:
            hull = ConvexCell.from_doc(doc["domain_hull"], dim)
        return cls(dim, cells, domain_hull=hull)

    def save(self, path):
        docio.save(self.to_doc(), path)

    @classmethod
    def load(cls, path) -> "PolytopeMesh":
        return cls.from_doc(docio.load(path))

    def content_hash(self) -> str:
        return hashlib.sha256(docio.dumps(self.to_doc()).encode()).hexdigest()


def freudenthal_mesh(n: int, N: int) -> PolytopeMesh:
    """Standard simplicial mesh of [0,1]^n with grid step 1/N.

    Every grid subcube is split into n! simplices, one per coordinate
    ordering; the mesh has N^n * n! cells.
    """
    if n < 1 or N < 1:
        raise MeshError("freudenthal_mesh requires n >= 1 and N >= 1")
    cells = []
    perms = list(itertools.permutations(range(n)))
    for idx in itertools.product(range(N), repeat=n):
        for sigma in perms:
            verts = np.zeros((n + 1, n))
            steps = np.zeros(n, dtype=int)
            verts[0] = [idx[d] / N for d in range(n)]
            for k in range(n):
                steps[sigma[k]] += 1
                verts[k + 1] = [(idx[d] + steps[d]) / N for d in range(n)]
            W = np.zeros((n + 1, n))
            b = np.zeros(n + 1)
            W[0, sigma[0]] = -1.0
            b[0] = (idx[sigma[0]] + 1) / N
            for k in range(n - 1):
                W[k + 1, sigma[k]] = 1.0
                W[k + 1, sigma[k + 1]] = -1.0
                b[k + 1] = -((idx[sigma[k]] - idx[sigma[k + 1]]) / N)
            W[n, sigma[n - 1]] = 1.0
            b[n] = -(idx[sigma[n - 1]] / N)
            cells.append(ConvexCell(W, b, vertices=verts))
    hull_W = np.vstack([np.eye(n), -np.eye(n)])
    hull_b = np.concatenate([np.zeros(n), np.ones(n)])
    hull = ConvexCell(hull_W, hull_b)
    return PolytopeMesh(n, cells, domain_hull=hull)


def _cell_rng(seed: int, cell_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(cell_index),))
    return np.random.Generator(np.random.Philox(ss))


def _rejection_sample(cell: ConvexCell, epsilon: float, quota: int,
                      rng: np.random.Generator, max_rounds: int = 400):
    """Uniform points of the epsilon-shrunk cell via bounding-box rejection."""
    lo, hi = cell.bounding_box()
    thresholds = epsilon * cell.norms
    got = []
    total = 0
    for _ in range(max_rounds):
        draw = rng.uniform(lo, hi, size=(max(4 * quota, 64), cell.dim))
        vals = cell.facet_values(draw)
        ok = np.all(vals - thresholds >= 0.0, axis=1)
        pts = draw[ok]
        if pts.shape[0]:
            got.append(pts)
            total += pts.shape[0]
        if total >= quota:
            break
    if not got:
        return np.zeros((0, cell.dim))
    return np.vstack(got)[:quota]


def sample_shrunk_domain(mesh: PolytopeMesh, epsilon: float, count: int, seed: int):
    """Uniform samples of the union of epsilon-shrunk cells, tagged by cell.

    Returns (points, cell_indices). Cells whose shrunk interior is empty
    contribute nothing; if every cell is empty the epsilon is too large.
    """
    if epsilon <= 0:
        raise MeshError("epsilon must be > 0")
    if count < 1:
        raise MeshError("count must be >= 1")
    alive = []
    for ci, c in enumerate(mesh.cells):
        cheb = lp.chebyshev_center(c.W, c.b - epsilon * c.norms)
        if cheb is not None and cheb[1] > 0.0:
            alive.append(ci)
    if not alive:
        raise MeshError("epsilon too large: every shrunk cell is empty")
    base, extra = divmod(count, len(alive))
    points = []
    tags = []
    for pos, ci in enumerate(alive):
        quota = base + (1 if pos < extra else 0)
        if quota == 0:
            continue
        pts = _rejection_sample(mesh.cells[ci], epsilon, quota, _cell_rng(seed, ci))
        points.append(pts)
        tags.append(np.full(pts.shape[0], ci, dtype=int))
    points = np.vstack(points)
    tags = np.concatenate(tags)
    if points.shape[0] == 0:
        raise MeshError("epsilon too large: no sample survived rejection")
    return points, tags


def sample_cells(mesh: PolytopeMesh, per_cell: int, seed: int, epsilon: float = 0.0):
    """Per-cell uniform samples (optionally of the shrunk cells), tagged."""
    points = []
    tags = []
    for ci, cell in enumerate(mesh.cells):
        pts = _rejection_sample(cell, epsilon, per_cell, _cell_rng(seed, ci))
        points.append(pts)
        tags.append(np.full(pts.shape[0], ci, dtype=int))
    return np.vstack(points), np.concatenate(tags)


@dataclass
class ValidationReport:
    """Outcome of the structural and Monte-Carlo mesh checks."""

    bounded: list[bool]
    inradius: list[float]
    overlap_fraction: float
    union_volume_estimate: float
    cell_volume_sum: float | None
    hull_uncovered_fraction: float | None
    samples: int
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_mesh(mesh: PolytopeMesh, samples: int = 100_000, seed: int = 0
                  ) -> ValidationReport:
    """Check boundedness, nonempty interiors, disjointness and coverage.

    Unbounded or empty-interior cells raise MeshError naming the cell;
    overlap/coverage findings are reported for the caller to judge.
    """
    if samples < 1:
        raise MeshError("samples must be >= 1")
    bounded = []
    inradius = []
    for ci, cell in enumerate(mesh.cells):
        if not cell.is_bounded():
            raise MeshError(f"cell {ci} is unbounded")
        bounded.append(True)
        r = cell.inradius()
        if not r > 1e-10:
            raise MeshError(f"cell {ci} has empty interior (inradius {r:.3e})")
        inradius.append(r)

    lo, hi = mesh.bounding_box()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=int(seed))))
    X = rng.uniform(lo, hi, size=(samples, mesh.dimension))
    inside_count = np.zeros(samples, dtype=int)
    for cell in mesh.cells:
        inside_count += np.min(cell.facet_values(X), axis=1) > 1e-12
    box_vol = float(np.prod(hi - lo))
    overlap_fraction = float(np.mean(inside_count >= 2))
    union_vol = float(np.mean(inside_count >= 1)) * box_vol

    try:
        vol_sum = mesh.volume()
    except MeshError:
        vol_sum = None

    hull_uncovered = None
    if mesh.domain_hull is not None:
        in_hull = mesh.domain_hull.contains(X, tol=-1e-9)
        n_hull = int(np.sum(in_hull))
        if n_hull:
            hull_uncovered = float(np.mean(inside_count[in_hull] == 0))

    issues = []
    mc_sigma = 1.0 / np.sqrt(samples)
    if overlap_fraction > 3 * mc_sigma + 1e-4:
        issues.append(f"cell interiors overlap on ~{overlap_fraction:.2%} of the box")
    if vol_sum is not None and box_vol > 0:
        rel = abs(union_vol - vol_sum) / max(vol_sum, 1e-300)
        if rel > 5 * mc_sigma * box_vol / max(vol_sum, 1e-300) + 1e-3:
            issues.append(
                f"union volume {union_vol:.6g} vs summed cell volumes {vol_sum:.6g}"
            )
    if hull_uncovered is not None and hull_uncovered > 3 * mc_sigma + 1e-3:
        issues.append(f"domain hull not covered on ~{hull_uncovered:.2%} of its samples")

    return ValidationReport(
        bounded=bounded,
        inradius=inradius,
        overlap_fraction=overlap_fraction,
        union_volume_estimate=union_vol,
        cell_volume_sum=vol_sum,
        hull_uncovered_fraction=hull_uncovered,
        samples=samples,
        issues=issues,
    )


def min_inradius(mesh: PolytopeMesh) -> float:
    return min(cell.inradius() for cell in mesh.cells)
