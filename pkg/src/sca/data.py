"""Datasets, CSV ingestion and the Gaussian-cluster generator."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ProtocolError

ROLES = ("source", "target")
SYNTH_FORMAT_VERSION = 1


class AuditedLabels:
    """Ground-truth labels of target domains, sealed behind an access log.

    Pipelines may only read these through :meth:`reveal`; every read is
    recorded so tests can check that nothing looked at target labels before
    final scoring.
    """

    def __init__(self, labels_by_domain):
        self._labels = {d: tuple(v) for d, v in labels_by_domain.items()}
        self.access_log = []

    def __contains__(self, domain):
        return domain in self._labels

    def domains(self):
        return tuple(self._labels)

    def reveal(self, domain, purpose):
        if domain not in self._labels:
            raise KeyError(domain)
        self.access_log.append((domain, purpose))
        return self._labels[domain]

    def subset(self, domains):
        """New container over ``domains``; the access log is shared."""
        sub = AuditedLabels({d: self._labels[d] for d in domains if d in self._labels})
        sub.access_log = self.access_log
        return sub

    def __repr__(self):
        return f"AuditedLabels(domains={list(self._labels)}, reads={len(self.access_log)})"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with contiguous domain blocks, sources before targets.

    ``labels`` holds the labels visible to training (``None`` = unlabeled).
    Target ground truth, when known, lives in ``held_out``.
    """

    X: np.ndarray
    domains: tuple
    labels: tuple
    roles: dict
    held_out: AuditedLabels | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise DataError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("X contains non-finite values")
        X = X.copy()
        X.setflags(write=False)
        domains = tuple(str(d) for d in self.domains)
        labels = tuple(self.labels)
        n = X.shape[0]
        if len(domains) != n or len(labels) != n:
            raise DataError(f"{n} rows but {len(domains)} domain ids and {len(labels)} labels")
        roles = dict(self.roles)
        order = []
        for i, d in enumerate(domains):
            if i == 0 or d != domains[i - 1]:
                if d in order:
                    raise DataError(f"domain {d!r} is not a contiguous block")
                order.append(d)
        for d in order:
            if roles.get(d) not in ROLES:
                raise DataError(f"domain {d!r} has no valid role (got {roles.get(d)!r})")
        kinds = [roles[d] for d in order]
        if "target" in kinds and "source" in kinds[kinds.index("target") :]:
            raise DataError("source domains must precede target domains")
        for d, y in zip(domains, labels):
            if roles[d] == "source" and y is None:
                raise DataError(f"unlabeled sample in source domain {d!r}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "domains", domains)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "roles", {d: roles[d] for d in order})

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def domain_order(self):
        return tuple(self.roles)

    @property
    def source_domains(self):
        return tuple(d for d, r in self.roles.items() if r == "source")

    @property
    def target_domains(self):
        return tuple(d for d, r in self.roles.items() if r == "target")

    def mask(self, domains):
        domains = set(domains)
        return np.array([d in domains for d in self.domains])

    def rows(self, domain):
        return self.X[self.mask([domain])]

    def visible_labels(self, domain):
        return tuple(y for d, y in zip(self.domains, self.labels) if d == domain)

    def has_visible_target_labels(self):
        return any(y is not None for d, y in zip(self.domains, self.labels) if self.roles[d] == "target")

    def select(self, domains, roles=None):
        """Dataset restricted to ``domains`` (blocks re-ordered sources-first).

        ``roles`` optionally re-tags domains, e.g. to turn a source into a target.
        Re-tagging a labeled source as target moves its labels into ``held_out``.
        """
        roles = {**self.roles, **(roles or {})}
        missing = [d for d in domains if d not in self.roles]
        if missing:
            raise DataError(f"unknown domains {missing}")
        ordered = [d for d in domains if roles[d] == "source"] + [d for d in domains if roles[d] == "target"]
        idx = np.concatenate([np.flatnonzero(self.mask([d])) for d in ordered])
        labels = [self.labels[i] for i in idx]
        sealed = {}
        for d in ordered:
            if roles[d] == "target" and self.roles[d] == "source":
                sealed[d] = self.visible_labels(d)
        for j, i in enumerate(idx):
            if self.domains[i] in sealed:
                labels[j] = None
        held = None
        if self.held_out is not None or sealed:
            base = self.held_out.subset(ordered) if self.held_out is not None else AuditedLabels({})
            base._labels.update(sealed)
            held = base
        return Dataset(
            X=self.X[idx],
            domains=tuple(self.domains[i] for i in idx),
            labels=tuple(labels),
            roles={d: roles[d] for d in ordered},
            held_out=held,
        )

    def subset_rows(self, idx):
        """Rows ``idx`` (must keep each domain block contiguous and ordered)."""
        idx = np.asarray(idx, dtype=int)
        doms = tuple(self.domains[i] for i in idx)
        present = dict.fromkeys(doms)
        return Dataset(
            X=self.X[idx],
            domains=doms,
            labels=tuple(self.labels[i] for i in idx),
            roles={d: self.roles[d] for d in present},
            held_out=self.held_out.subset(present) if self.held_out is not None else None,
        )


# -- CSV ---------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    feature_columns: tuple | None = None  # None: every column named f<int>, in index order
    label_column: str | None = "label"
    domain_column: str = "domain"
    role_column: str = "role"
    known_domains: tuple | None = None
    seal_target_labels: bool = True


def _feature_columns(header, schema):
    if schema.feature_columns is not None:
        cols = list(schema.feature_columns)
        absent = [c for c in cols if c not in header]
        if absent:
            raise DataError(f"line 1: missing feature columns {absent}")
        return cols
    cols = [c for c in header if len(c) > 1 and c[0] == "f" and c[1:].isdigit()]
    if not cols:
        raise DataError("line 1: no feature columns (expected f0, f1, ...)")
    return sorted(cols, key=lambda c: int(c[1:]))


def load_csv(path, schema: CsvSchema = CsvSchema()) -> Dataset:
    """Read a comma-separated feature file with a header row.

    Rows are grouped into contiguous domain blocks (sources first, each group
    in order of first appearance) without reordering samples inside a domain.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        fcols = _feature_columns(header, schema)
        for col in (schema.domain_column, schema.role_column):
            if col not in header:
                raise DataError(f"line 1: missing column {col!r}")
        fidx = [header.index(c) for c in fcols]
        didx = header.index(schema.domain_column)
        ridx = header.index(schema.role_column)
        lidx = header.index(schema.label_column) if schema.label_column in header else None

        rows, roles = [], {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                x = [float(rec[i]) for i in fidx]
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric feature value") from None
            dom, role = rec[didx], rec[ridx]
            if schema.known_domains is not None and dom not in schema.known_domains:
                raise DataError(f"line {lineno}: unknown domain {dom!r}")
            if role not in ROLES:
                raise DataError(f"line {lineno}: unknown role {role!r}")
            if roles.setdefault(dom, role) != role:
                raise DataError(f"line {lineno}: domain {dom!r} tagged both {roles[dom]} and {role}")
            label = rec[lidx] if lidx is not None and rec[lidx] != "" else None
            if role == "source" and label is None:
                raise DataError(f"line {lineno}: missing label in source domain {dom!r}")
            rows.append((x, dom, label))
    if not rows:
        raise DataError(f"{path}: no data rows")

    order = [d for d in roles if roles[d] == "source"] + [d for d in roles if roles[d] == "target"]
    grouped = [r for d in order for r in rows if r[1] == d]
    X = np.array([r[0] for r in grouped])
    doms = tuple(r[1] for r in grouped)
    labels = [r[2] for r in grouped]
    held = None
    if schema.seal_target_labels:
        sealed = {}
        for d in order:
            if roles[d] == "target":
                ys = [labels[i] for i, dd in enumerate(doms) if dd == d]
                if all(y is not None for y in ys):
                    sealed[d] = tuple(ys)
        labels = [None if roles[d] == "target" else y for d, y in zip(doms, labels)]
        held = AuditedLabels(sealed) if sealed else None
    return Dataset(X=X, domains=doms, labels=tuple(labels), roles={d: roles[d] for d in order}, held_out=held)


def save_csv(data: Dataset, path) -> None:
    """Write ``data`` in the format read by :func:`load_csv` (17 significant digits)."""
    truth = {}
    if data.held_out is not None:
        for d in data.held_out.domains():
            truth[d] = iter(data.held_out.reveal(d, "export"))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(data.p)] + ["label", "domain", "role"])
        for x, d, y in zip(data.X, data.domains, data.labels):
            if y is None and d in truth:
                y = next(truth[d])
            w.writerow([format(v, ".17g") for v in x] + ["" if y is None else y, d, data.roles[d]])


# -- synthetic Gaussian clusters --------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Isotropic 2-D Gaussian clusters, each owned by one class and one domain."""

    means: tuple
    stds: tuple
    cluster_class: tuple
    cluster_domain: tuple
    roles: dict = field(default_factory=dict)
    samples_per_cluster: int = 100
    seed: int = 0

    def __post_init__(self):
        means = tuple(tuple(float(v) for v in m) for m in self.means)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", tuple(float(s) for s in self.stds))
        object.__setattr__(self, "cluster_class", tuple(str(c) for c in self.cluster_class))
        object.__setattr__(self, "cluster_domain", tuple(str(d) for d in self.cluster_domain))
        c = len(means)
        if not (len(self.stds) == len(self.cluster_class) == len(self.cluster_domain) == c):
            raise DataError("means, stds, cluster_class and cluster_domain must have equal length")
        if len({len(m) for m in means}) != 1:
            raise DataError("cluster means must share one dimension")
        if any(s <= 0 for s in self.stds):
            raise DataError("cluster standard deviations must be positive")
        if self.samples_per_cluster < 1:
            raise DataError("samples_per_cluster must be positive")
        if self.clusters < self.classes:
            raise DataError("need at least as many clusters as classes")
        classes = set(self.cluster_class)
        for d in dict.fromkeys(self.cluster_domain):
            owned = {k for k, dd in zip(self.cluster_class, self.cluster_domain) if dd == d}
            if owned != classes:
                raise DataError(f"domain {d!r} does not own a cluster of every class")
        roles = {d: self.roles.get(d, "source") for d in dict.fromkeys(self.cluster_domain)}
        object.__setattr__(self, "roles", roles)

    @property
    def clusters(self):
        return len(self.means)

    @property
    def classes(self):
        return len(set(self.cluster_class))

    def to_dict(self):
        return {"format_version": SYNTH_FORMAT_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        version = d.pop("format_version", SYNTH_FORMAT_VERSION)
        if version != SYNTH_FORMAT_VERSION:
            raise DataError(f"unsupported synthetic spec version {version}")
        return cls(**d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def shifted_grid_spec(
    n_domains=2,
    spacing=2.0,
    shift=(0.0, 2.0),
    std=0.5,
    samples_per_cluster=100,
    seed=0,
    classes=3,
    target=True,
) -> SynthSpec:
    """One row of ``classes`` clusters per domain, each row translated by ``shift``.

    Domain ``d`` sits at offset ``d * shift``. With ``target=True`` the last
    domain is tagged as the target.
    """
    means, stds, cls, doms, roles = [], [], [], [], {}
    for d in range(n_domains):
        name = f"d{d}"
        roles[name] = "target" if target and d == n_domains - 1 else "source"
        for c in range(classes):
            means.append((c * spacing + d * shift[0], d * shift[1]))
            stds.append(std)
            cls.append(str(c))
            doms.append(name)
    return SynthSpec(
        means=tuple(means),
        stds=tuple(stds),
        cluster_class=tuple(cls),
        cluster_domain=tuple(doms),
        roles=roles,
        samples_per_cluster=samples_per_cluster,
        seed=seed,
    )


def replica_target_spec(spec: SynthSpec, of: str, name: str = "t") -> SynthSpec:
    """Copy of ``spec`` with an extra target domain ``name`` drawn like domain ``of``.

    Every existing domain becomes a source. The replica clusters get their own
    seed streams, so the target is a fresh sample from the same distribution.
    """
    if of not in spec.roles:
        raise DataError(f"unknown domain {of!r}")
    if name in spec.roles:
        raise DataError(f"domain {name!r} already exists")
    idx = [i for i, d in enumerate(spec.cluster_domain) if d == of]
    return SynthSpec(
        means=spec.means + tuple(spec.means[i] for i in idx),
        stds=spec.stds + tuple(spec.stds[i] for i in idx),
        cluster_class=spec.cluster_class + tuple(spec.cluster_class[i] for i in idx),
        cluster_domain=spec.cluster_domain + (name,) * len(idx),
        roles={**{d: "source" for d in spec.roles}, name: "target"},
        samples_per_cluster=spec.samples_per_cluster,
        seed=spec.seed,
    )


def gen_synthetic(spec: SynthSpec) -> Dataset:
    """Draw ``samples_per_cluster`` points per cluster; each cluster has its own seed stream."""
    n = spec.samples_per_cluster
    blocks = []
    for i, (mu, sd) in enumerate(zip(spec.means, spec.stds)):
        rng = np.random.default_rng([spec.seed, i])
        blocks.append(np.asarray(mu) + sd * rng.standard_normal((n, len(mu))))
    order = [d for d, r in spec.roles.items() if r == "source"] + [d for d, r in spec.roles.items() if r == "target"]
    X, doms, labels = [], [], []
    for d in order:
        for i, dd in enumerate(spec.cluster_domain):
            if dd == d:
                X.append(blocks[i])
                doms += [d] * n
                labels += [spec.cluster_class[i]] * n
    held = {}
    for d in order:
        if spec.roles[d] == "target":
            held[d] = tuple(y for y, dd in zip(labels, doms) if dd == d)
    labels = [None if spec.roles[d] == "target" else y for d, y in zip(doms, labels)]
    return Dataset(
        X=np.vstack(X),
        domains=tuple(doms),
        labels=tuple(labels),
        roles={d: spec.roles[d] for d in order},
        held_out=AuditedLabels(held) if held else None,
    )


def require_unlabeled_targets(data: Dataset):
    if data.has_visible_target_labels():
        raise ProtocolError("target rows carry visible labels")
