"""Network containers, exact ReLU forward evaluation, and file round trips.

Two architectures live here: the two-hidden-layer fully connected net
(dense first layer, sparse second layer stored as triplets) and the
rank-r tensor network made of per-axis one-hidden-layer branches whose
outputs multiply across axes and sum over the rank index.
"""

from __future__ import annotations

import numpy as np

from . import docio
from .errors import DocumentError


def relu(x):
    return np.maximum(x, 0.0)


class ReluNet2:
    """x -> w3 @ relu(W2 @ relu(W1 @ x + b1) + b2) (+ output_bias).

    W2 is kept as (row, col, value) triplets. Rows are summed in triplet
    storage order (grouped by row, original order within a row), which
    keeps evaluation bit-stable under serialization and under the
    duplicate-neuron merge.
    """

    def __init__(self, W1, b1, W2_triplets, b2, w3, output_bias=None,
                 provenance=None):
        self.W1 = np.atleast_2d(np.asarray(W1, dtype=float))
        self.b1 = np.asarray(b1, dtype=float).reshape(-1)
        self.b2 = np.asarray(b2, dtype=float).reshape(-1)
        self.w3 = np.asarray(w3, dtype=float).reshape(-1)
        self.output_bias = None if output_bias is None else float(output_bias)
        self.provenance = provenance or {}
        rows, cols, vals = [], [], []
        for r, c, v in W2_triplets:
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
        rows = np.asarray(rows, dtype=int)
        order = np.argsort(rows, kind="stable") if rows.size else np.zeros(0, int)
        self.W2_rows = rows[order]
        self.W2_cols = np.asarray(cols, dtype=int)[order]
        self.W2_vals = np.asarray(vals, dtype=float)[order]
        self._validate()
        # segment boundaries for the ordered row sums
        if self.W2_rows.size:
            change = np.flatnonzero(np.diff(self.W2_rows)) + 1
            self._seg_starts = np.concatenate([[0], change])
            self._seg_rows = self.W2_rows[self._seg_starts]
        else:
            self._seg_starts = np.zeros(0, dtype=int)
            self._seg_rows = np.zeros(0, dtype=int)

    def _validate(self):
        if self.h1 < 1 or self.h2 < 1:
            raise DocumentError("hidden layers must be non-empty")
        if self.b1.shape[0] != self.h1:
            raise DocumentError("b1 length does not match W1")
        if self.w3.shape[0] != self.h2:
            raise DocumentError("w3 length does not match b2")
        arrays = [self.W1, self.b1, self.b2, self.w3, self.W2_vals]
        if any(not np.all(np.isfinite(a)) for a in arrays):
            raise DocumentError("network weights must be finite")
        if self.W2_rows.size:
            if self.W2_rows.min() < 0 or self.W2_rows.max() >= self.h2:
                raise DocumentError("W2 triplet row out of range")
            if self.W2_cols.min() < 0 or self.W2_cols.max() >= self.h1:
                raise DocumentError("W2 triplet column out of range")

    @property
    def n(self) -> int:
        return self.W1.shape[1]

    @property
    def h1(self) -> int:
        return self.W1.shape[0]

    @property
    def h2(self) -> int:
        return self.b2.shape[0]

    def W2_dense(self):
        M = np.zeros((self.h2, self.h1))
        np.add.at(M, (self.W2_rows, self.W2_cols), self.W2_vals)
        return M

    def _second_layer(self, Z1):
        out = np.zeros((Z1.shape[0], self.h2))
        if self.W2_vals.size:
            terms = Z1[:, self.W2_cols] * self.W2_vals
            sums = np.add.reduceat(terms, self._seg_starts, axis=1)
            out[:, self._seg_rows] = sums
        return out

    def forward_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise DocumentError(f"input dimension {X.shape[1]}, expected {self.n}")
        out = np.empty(X.shape[0])
        # chunk so the (chunk, nnz) temporary stays small
        chunk = max(1, int(2 ** 23 // max(self.W2_vals.size, 1)))
        for lo in range(0, X.shape[0], chunk):
            Xc = X[lo:lo + chunk]
            Z1 = relu(Xc @ self.W1.T + self.b1)
            Z2 = relu(self._second_layer(Z1) + self.b2)
            out[lo:lo + chunk] = Z2 @ self.w3
        if self.output_bias is not None:
            out = out + self.output_bias
        return out

    def forward(self, x) -> float:
        return float(self.forward_batch(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def __call__(self, X):
        return self.forward_batch(X)

    def to_doc(self) -> dict:
        # triplets written in storage order so reloaded nets sum rows
        # identically (bit-for-bit evaluation after a round trip)
        doc = {
            "arch": "fnn2",
            "n": self.n,
            "h1": self.h1,
            "h2": self.h2,
            "W1": self.W1,
            "b1": self.b1,
            "W2": [[int(self.W2_rows[i]), int(self.W2_cols[i]),
                    float(self.W2_vals[i])] for i in range(self.W2_vals.size)],
            "b2": self.b2,
            "w3": self.w3,
            "output_bias": self.output_bias,
            "provenance": docio.jsonable(self.provenance),
        }
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "ReluNet2":
        if docio.get(doc, "arch", str) != "fnn2":
            raise DocumentError("field 'arch' must be 'fnn2'")
        n = docio.get(doc, "n", int)
        h1 = docio.get(doc, "h1", int)
        h2 = docio.get(doc, "h2", int)
        W1 = docio.as_float_array(docio.get(doc, "W1"), "W1", (h1, n))
        b1 = docio.as_float_array(docio.get(doc, "b1"), "b1", (h1,))
        b2 = docio.as_float_array(docio.get(doc, "b2"), "b2", (h2,))
        w3 = docio.as_float_array(docio.get(doc, "w3"), "w3", (h2,))
        trip = docio.get(doc, "W2", list)
        for t in trip:
            if not (isinstance(t, list) and len(t) == 3):
                raise DocumentError("W2 triplets must be [row, col, value]")
        ob = doc.get("output_bias")
        net = cls(W1, b1, trip, b2, w3,
                  output_bias=None if ob is None else float(ob),
                  provenance=doc.get("provenance") or {})
        return net


class TensorNet:
    """Sum over the rank index of products of per-axis branch nets.

    Branch k holds (W_k, b_k, weights_k); its contribution for rank p is
    weights_k[p] @ relu(W_k * x_k + b_k).
    """

    def __init__(self, branches, provenance=None):
        self.branches = []
        rank = None
        for W, b, weights in branches:
            W = np.asarray(W, dtype=float).reshape(-1, 1)
            b = np.asarray(b, dtype=float).reshape(-1)
            weights = np.atleast_2d(np.asarray(weights, dtype=float))
            if W.shape[0] != b.shape[0] or weights.shape[1] != W.shape[0]:
                raise DocumentError("inconsistent branch shapes")
            if rank is None:
                rank = weights.shape[0]
            elif weights.shape[0] != rank:
                raise DocumentError("all branches must share the rank")
            self.branches.append((W, b, weights))
        if not self.branches:
            raise DocumentError("tensor net needs at least one branch")
        self.rank = int(rank)
        self.provenance = provenance or {}

    @property
    def n(self) -> int:
        return len(self.branches)

    @property
    def widths(self):
        return [W.shape[0] for W, _, _ in self.branches]

    def forward_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise DocumentError(f"input dimension {X.shape[1]}, expected {self.n}")
        prod = np.ones((X.shape[0], self.rank))
        for k, (W, b, weights) in enumerate(self.branches):
            Z = relu(X[:, k:k + 1] @ W.T + b)
            prod *= Z @ weights.T
        return prod.sum(axis=1)

    def forward(self, x) -> float:
        return float(self.forward_batch(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def __call__(self, X):
        return self.forward_batch(X)

    def to_doc(self) -> dict:
        doc = {"arch": "tnn", "rank": self.rank, "n": self.n,
               "provenance": docio.jsonable(self.provenance)}
        for k, (W, b, weights) in enumerate(self.branches):
            doc[f"branch_{k + 1}"] = {"W": W.reshape(-1), "b": b, "weights": weights}
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "TensorNet":
        if docio.get(doc, "arch", str) != "tnn":
            raise DocumentError("field 'arch' must be 'tnn'")
        rank = docio.get(doc, "rank", int)
        n = docio.get(doc, "n", int)
        branches = []
        for k in range(n):
            bd = docio.get(doc, f"branch_{k + 1}", dict)
            W = docio.as_float_array(docio.get(bd, "W"), "W")
            b = docio.as_float_array(docio.get(bd, "b"), "b", (W.shape[0],))
            weights = docio.as_float_array(docio.get(bd, "weights"), "weights",
                                           (rank, W.shape[0]))
            branches.append((W, b, weights))
        return cls(branches, provenance=doc.get("provenance") or {})


def fnn_forward(net: ReluNet2, x) -> float:
    """Exact forward pass of the two-hidden-layer net at a single point."""
    return net.forward(x)


def tnn_forward(net: TensorNet, x) -> float:
    """Exact forward pass of the tensor net at a single point."""
    return net.forward(x)


def serialize(net) -> str:
    """Render a network as its JSON document text."""
    return docio.dumps(net.to_doc())


def deserialize(text: str):
    """Inverse of serialize; dispatches on the 'arch' field."""
    doc = docio.loads(text)
    arch = docio.get(doc, "arch", str)
    if arch == "fnn2":
        return ReluNet2.from_doc(doc)
    if arch == "tnn":
        return TensorNet.from_doc(doc)
    raise DocumentError(f"unknown arch '{arch}'")


def save(net, path):
    with open(path, "w") as fh:
        fh.write(serialize(net))


def load(path):
    with open(path) as fh:
        return deserialize(fh.read())
