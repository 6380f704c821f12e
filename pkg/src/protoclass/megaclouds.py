"""Merging of neighbouring same-class clouds, rule text, and viz exports.

Two clouds are neighbours when their areas of influence overlap, i.e. the
distance between their prototypes is at most the sum of their radii.  The
adjacency graph is built over all clouds; merging then only follows edges
whose endpoints share a class, so every mega cloud is class-homogeneous and
the mega clouds partition the cloud set.

Rule text grammar (one rule per class, one line per rule):

    IF (I ~ <ref>) OR (I ~ <ref>) ... THEN (class <id>)

where each ``<ref>`` is the source reference of one member cloud's prototype,
kept inside the angle brackets so the line parses back losslessly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .density import typicality
from .errors import DataError, FormatError, StateError
from .learner import Model


@dataclass(frozen=True)
class MegaCloud:
    id: int
    class_id: int
    member_cloud_ids: frozenset[int]
    representative_refs: tuple[str, ...]


@dataclass(frozen=True)
class Rule:
    class_id: int
    antecedent_refs: tuple[str, ...]
    rendered_text: str


@dataclass(frozen=True)
class CloudGraph:
    """Undirected adjacency over all clouds, indexed globally.

    ``nodes[g]`` gives the (class_id, local index) behind global id g.
    """

    nodes: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]


def _global_nodes(model: Model) -> list[tuple[int, int]]:
    nodes = []
    for cid in model.class_ids:
        nodes.extend((cid, j) for j in range(model.classes[cid].n_clouds))
    return nodes


def build_adjacency(model: Model) -> CloudGraph:
    """Edge (i, j) iff ||p_i - p_j|| <= r_i + r_j, across all classes."""
    clouds = model.all_clouds()
    if not clouds:
        raise StateError("model has no clouds")
    protos = np.stack([c.prototype for c in clouds])
    radii = np.sqrt(np.array([c.radius_sq for c in clouds]))

    sq_norms = (protos * protos).sum(axis=1)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (protos @ protos.T)
    np.clip(d2, 0.0, None, out=d2)
    dist = np.sqrt(d2)
    reach = radii[:, None] + radii[None, :]

    n = len(clouds)
    iu, ju = np.triu_indices(n, k=1)
    hit = dist[iu, ju] <= reach[iu, ju]
    edges = tuple(zip(iu[hit].tolist(), ju[hit].tolist()))
    return CloudGraph(nodes=tuple(_global_nodes(model)), edges=edges)


def merge_megaclouds(model: Model, graph: CloudGraph) -> list[MegaCloud]:
    """Connected components over same-class edges; one mega cloud each."""
    n = len(graph.nodes)
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in graph.edges:
        if graph.nodes[i][0] == graph.nodes[j][0]:
            parent[find(i)] = find(j)

    groups: dict[int, list[int]] = {}
    for g in range(n):
        groups.setdefault(find(g), []).append(g)

    refs = [c.source_ref for c in model.all_clouds()]
    components = sorted(groups.values(), key=min)
    out = []
    for mc_id, members in enumerate(components):
        members = sorted(members)
        class_id = graph.nodes[members[0]][0]
        out.append(
            MegaCloud(
                id=mc_id,
                class_id=class_id,
                member_cloud_ids=frozenset(members),
                representative_refs=tuple(refs[g] for g in members),
            )
        )
    return out


_RULE_RE = re.compile(r"^IF \(I ~ <([^<>]*)>\)((?: OR \(I ~ <[^<>]*>\))*) THEN \(class (-?\d+)\)$")
_TERM_RE = re.compile(r"\(I ~ <([^<>]*)>\)")


def render_rule(class_id: int, refs) -> str:
    refs = list(refs)
    if not refs:
        raise StateError(f"class {class_id} has no antecedent references")
    for ref in refs:
        if "<" in ref or ">" in ref or "\n" in ref:
            raise DataError(f"source ref {ref!r} cannot be rendered in rule text")
    terms = " OR ".join(f"(I ~ <{ref}>)" for ref in refs)
    return f"IF {terms} THEN (class {class_id})"


def parse_rule(text: str) -> Rule:
    """Inverse of render_rule; raises FormatError on any deviation."""
    m = _RULE_RE.match(text)
    if m is None:
        raise FormatError(f"line does not match the rule grammar: {text!r}")
    refs = tuple(_TERM_RE.findall(text))
    return Rule(class_id=int(m.group(3)), antecedent_refs=refs, rendered_text=text)


def generate_rules(model: Model, megaclouds: list[MegaCloud]) -> list[Rule]:
    """One disjunctive rule per class, built from its mega clouds' members."""
    if not megaclouds:
        raise StateError("no mega clouds to generate rules from")
    rules = []
    for cid in model.class_ids:
        refs: list[str] = []
        for mc in sorted((m for m in megaclouds if m.class_id == cid), key=lambda m: m.id):
            refs.extend(mc.representative_refs)
        text = render_rule(cid, refs)
        rules.append(Rule(class_id=cid, antecedent_refs=tuple(refs), rendered_text=text))
    return rules


def write_rules(rules: list[Rule], path) -> None:
    from .model_io import atomic_write_text

    atomic_write_text(path, "".join(r.rendered_text + "\n" for r in rules))


# -- visualization data ----------------------------------------------------


def projection_dims(model: Model) -> tuple[int, int]:
    """The two dimensions with the highest support-weighted prototype spread."""
    clouds = model.all_clouds()
    protos = np.stack([c.prototype for c in clouds])
    if protos.shape[1] < 2:
        return 0, 0
    w = np.array([c.support for c in clouds], dtype=np.float64)
    w /= w.sum()
    center = w @ protos
    var = w @ (protos - center) ** 2
    order = np.argsort(-var, kind="stable")
    return int(order[0]), int(order[1])


@dataclass(frozen=True)
class VizExport:
    prototypes_table: str
    typicality_table: str | None


def export_viz(model: Model, megaclouds: list[MegaCloud], grid=None,
               delimiter: str = "\t") -> VizExport:
    """Tabular snapshots of the trained structure.

    The prototype table has one row per cloud (coordinates projected onto
    the two highest-variance dimensions); the optional typicality table has
    one row per (class, grid point), each class's weights summing to 1.
    """
    clouds = model.all_clouds()
    mc_of = {}
    for mc in megaclouds:
        for g in mc.member_cloud_ids:
            mc_of[g] = mc.id

    dx, dy = projection_dims(model)
    header = ["cloud_id", "class_id", "megacloud_id", "support", "radius_sq",
              f"coord{dx}", f"coord{dy}"]
    lines = [delimiter.join(header)]
    for g, c in enumerate(clouds):
        lines.append(delimiter.join([
            str(g), str(c.class_id), str(mc_of[g]), str(c.support),
            repr(c.radius_sq), repr(float(c.prototype[dx])), repr(float(c.prototype[dy])),
        ]))
    proto_table = "\n".join(lines) + "\n"

    typ_table = None
    if grid is not None:
        G = np.asarray(grid, dtype=np.float64)
        if G.ndim == 1:
            G = G[:, np.newaxis]
        tlines = [delimiter.join(["class_id", f"grid{dx}", f"grid{dy}", "weight"])]
        for cid in model.class_ids:
            w = typicality(model.classes[cid].clouds(), G)
            for k in range(G.shape[0]):
                tlines.append(delimiter.join([
                    str(cid), repr(float(G[k, dx])), repr(float(G[k, dy])), repr(float(w[k])),
                ]))
        typ_table = "\n".join(tlines) + "\n"

    return VizExport(prototypes_table=proto_table, typicality_table=typ_table)


def build_projection_grid(model: Model, resolution: int = 25) -> np.ndarray:
    """A grid spanning [0, 1] in the two projection dimensions.

    The remaining coordinates are pinned at the support-weighted prototype
    mean, so the grid slices the space through the populated region.
    """
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    clouds = model.all_clouds()
    protos = np.stack([c.prototype for c in clouds])
    w = np.array([c.support for c in clouds], dtype=np.float64)
    w /= w.sum()
    center = w @ protos
    axis = np.linspace(0.0, 1.0, resolution)
    if model.dim == 1:
        return axis[:, np.newaxis]
    dx, dy = projection_dims(model)
    xs, ys = np.meshgrid(axis, axis, indexing="ij")
    grid = np.tile(center, (resolution * resolution, 1))
    grid[:, dx] = xs.ravel()
    grid[:, dy] = ys.ravel()
    return grid
