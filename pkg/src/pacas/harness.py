"""Synthetic data, error injection and parameter sweeps.

The generator produces a curated relation whose (GEN, AGE) groups carry a
controlled spread of sensitive-value diversity, a consistent FD mapping of
(GEN, DIAG) to MED, and bushy value hierarchies, so pricing, privacy gating
and repair quality all have room to move across the sweep grids.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from . import metrics
from .anonymity import AnonymitySpec
from .cleaner import safe_clean
from .errors import RateInfeasible, UnknownValue
from .hierarchy import HierarchySet, load_hierarchy
from .pricing import build_support_set
from .protocol import EmbeddedProvider
from .provider import ProviderSession
from .relation import FD, MD, DependencyConfig, GeneralizedRelation, Row, Schema, violations
from .rng import child_rng

# ---------------------------------------------------------------------------
# synthetic master generation

_MED_MAP = (0, 1, 2, 0, 1, 2, 3, 4, 3, 4)  # diag index -> med index (per gender)
_AGES = ("21", "22", "23", "24")
_N_DIAGS = 10


def _med_hierarchy() -> dict:
    nodes = [{"value": "*", "level": 4, "parent": None}]
    for b in range(2):
        nodes.append({"value": f"br{b}", "level": 3, "parent": "*"})
    for c in range(4):
        nodes.append({"value": f"cls{c}", "level": 2, "parent": f"br{c // 2}"})
    for s in range(8):
        nodes.append({"value": f"sub{s}", "level": 1, "parent": f"cls{s // 2}"})
    for m in range(16):
        nodes.append({"value": f"med{m:02d}", "level": 0, "parent": f"sub{m // 2}"})
    return {"attribute": "MED", "levels": 5, "nodes": nodes}


def _diag_hierarchy() -> dict:
    nodes = [{"value": "*", "level": 2, "parent": None},
             {"value": "dgrpA", "level": 1, "parent": "*"},
             {"value": "dgrpB", "level": 1, "parent": "*"}]
    for d in range(_N_DIAGS):
        parent = "dgrpA" if d < 5 else "dgrpB"
        nodes.append({"value": f"diag{d}", "level": 0, "parent": parent})
    return {"attribute": "DIAG", "levels": 3, "nodes": nodes}


def _age_hierarchy() -> dict:
    nodes = [{"value": "*", "level": 2, "parent": None},
             {"value": "[21,22]", "level": 1, "parent": "*"},
             {"value": "[23,24]", "level": 1, "parent": "*"}]
    for a in _AGES:
        parent = "[21,22]" if a in ("21", "22") else "[23,24]"
        nodes.append({"value": a, "level": 0, "parent": parent})
    return {"attribute": "AGE", "levels": 3, "nodes": nodes}


def _gen_hierarchy() -> dict:
    return {
        "attribute": "GEN",
        "levels": 2,
        "nodes": [
            {"value": "*", "level": 1, "parent": None},
            {"value": "male", "level": 0, "parent": "*"},
            {"value": "female", "level": 0, "parent": "*"},
        ],
    }


@dataclass
class SyntheticBundle:
    master: GeneralizedRelation
    truth: GeneralizedRelation
    hierarchies: HierarchySet
    config: DependencyConfig
    spec_x: tuple[str, ...] = ("GEN", "AGE")
    spec_y: tuple[str, ...] = ("MED",)


def generate_master(seed: int = 0, group_size: int = 6) -> SyntheticBundle:
    """Deterministic curated relation of 2 genders x 4 age groups.

    Each (GEN, AGE) group samples a window of diagnoses whose FD-mapped
    medications give per-group sensitive diversities of 3 to 5 distinct
    values, keeping the relation FD-consistent and (X,Y)-anonymous at k=3.
    """
    hierarchies = HierarchySet()
    for doc in (_gen_hierarchy(), _age_hierarchy(), _diag_hierarchy(), _med_hierarchy()):
        h = load_hierarchy(doc)
        hierarchies[h.attribute] = h
    rng = child_rng(seed, "master")
    schema = Schema(
        attributes=("GEN", "AGE", "DIAG", "MED"),
        qi=("GEN", "AGE"),
        sensitive=("MED",),
        key="ID",
    )
    rows: list[Row] = []
    n = 0
    for g, gender in enumerate(("male", "female")):
        for a, age in enumerate(_AGES):
            window = [(2 * a + i) % _N_DIAGS for i in range(group_size)]
            rng.shuffle(window)
            for j in window:
                n += 1
                med = f"med{_MED_MAP[j] + 8 * g:02d}"
                rows.append(
                    Row(f"m{n}", {"GEN": gender, "AGE": age, "DIAG": f"diag{j}", "MED": med})
                )
    master = GeneralizedRelation(schema=schema, rows=rows, hierarchies=hierarchies)
    truth = GeneralizedRelation(
        schema=schema,
        rows=[Row(f"t{i + 1}", dict(r.values)) for i, r in enumerate(rows)],
        hierarchies=hierarchies,
    )
    config = DependencyConfig(
        qi=("GEN", "AGE"),
        sensitive=("MED",),
        fds=(FD(lhs=("GEN", "DIAG"), rhs=("MED",)),),
        mds=(MD(match=(("GEN", "GEN"), ("AGE", "AGE"), ("DIAG", "DIAG")), target=("MED", "MED")),),
    )
    return SyntheticBundle(master=master, truth=truth, hierarchies=hierarchies, config=config)


# ---------------------------------------------------------------------------
# error injection

@dataclass(frozen=True)
class InjectionPlan:
    rate: float
    mix: tuple[float, float] = (0.5, 0.5)  # (constraint_induced, random)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.rate <= 1:
            raise RateInfeasible(f"error rate {self.rate} outside (0, 1]")
        if abs(sum(self.mix) - 1.0) > 1e-9:
            raise RateInfeasible("error mix must sum to 1")


def inject_errors(
    truth: GeneralizedRelation, plan: InjectionPlan, fds: Sequence[FD]
) -> tuple[GeneralizedRelation, dict]:
    """Corrupt a seeded fraction of tuples inside the FD attributes.

    Constraint-induced errors perturb one RHS cell of a tuple pair sharing an
    FD LHS; random errors redraw any FD-attribute cell. At most one error per
    tuple; the manifest round-trips the dirty relation from the truth.
    """
    if not truth.is_ground():
        raise UnknownValue("truth relation must be ground before injection")
    if violations(truth, fds):
        raise UnknownValue("truth relation must satisfy the FDs before injection")
    rng = child_rng(plan.seed, "inject")
    n_total = max(1, round(plan.rate * len(truth.rows)))
    dirty = truth.copy()
    used: set[str] = set()
    entries: list[dict] = []

    domains = {
        a: sorted({row.values[a] for row in truth.rows})
        for a in truth.schema.attributes
    }

    def corrupt(tid: str, attr: str, kind: str) -> None:
        row = dirty.row(tid)
        old = row.values[attr]
        choices = [v for v in domains[attr] if v != old]
        if not choices:
            raise RateInfeasible(f"attribute {attr!r} has a single-value domain")
        new = rng.choice(choices)
        row.values[attr] = new
        used.add(tid)
        entries.append({"tuple_id": tid, "attr": attr, "old": old, "new": new, "kind": kind})

    fd_attrs = sorted({a for fd in fds for a in fd.lhs + fd.rhs})
    # interleave the two kinds deterministically so a higher rate corrupts a
    # superset of what a lower rate corrupts under the same seed
    ci_done = 0
    for i in range(n_total):
        if round(plan.mix[0] * (i + 1)) > ci_done:
            ci_done += 1
            fd = fds[rng.randrange(len(fds))]
            groups: dict[tuple, list[str]] = {}
            for row in truth.rows:
                if row.tid in used:
                    continue
                key = tuple(row.values[a] for a in fd.lhs)
                groups.setdefault(key, []).append(row.tid)
            pairs = sorted(k for k, tids in groups.items() if len(tids) >= 2)
            if not pairs:
                raise RateInfeasible(
                    "not enough LHS-sharing pairs left for constraint-induced errors"
                )
            key = pairs[rng.randrange(len(pairs))]
            tid = rng.choice(groups[key])
            corrupt(tid, rng.choice(fd.rhs), "constraint_induced")
        else:
            candidates = [row.tid for row in truth.rows if row.tid not in used]
            if not candidates:
                raise RateInfeasible("fewer tuples than requested errors")
            tid = rng.choice(candidates)
            corrupt(tid, rng.choice(fd_attrs), "random")

    manifest = {"seed": plan.seed, "rate": plan.rate, "entries": entries}
    return dirty, manifest


def apply_manifest(truth: GeneralizedRelation, manifest: dict) -> GeneralizedRelation:
    dirty = truth.copy()
    for entry in manifest["entries"]:
        dirty.row(entry["tuple_id"]).values[entry["attr"]] = entry["new"]
    return dirty


# ---------------------------------------------------------------------------
# parameter sweeps

@dataclass
class SweepConfig:
    budget_grid: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    support_grid: tuple[int, ...] = (6, 8, 10, 12, 14)
    level_grid: tuple[int, ...] = (0, 1, 2, 3, 4)
    k_grid: tuple[int, ...] = (1, 2, 3, 4, 5)
    error_grid: tuple[float, ...] = (0.05, 0.1, 0.15, 0.2, 0.25)
    default_budget: float = 0.8
    default_support: int = 10
    default_level: int = 2
    default_k: int = 3
    default_error: float = 0.1
    repetitions: int = 3
    base_seed: int = 7
    group_size: int = 6
    error_mix: tuple[float, float] = (0.8, 0.2)

    @classmethod
    def from_json(cls, source: str | Path | dict) -> "SweepConfig":
        doc = source if isinstance(source, dict) else json.loads(Path(source).read_text())
        kwargs = {}
        for name in cls.__dataclass_fields__:
            if name in doc:
                value = doc[name]
                kwargs[name] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)


def run_point(
    budget_frac: float,
    support_size: int,
    l_max: int,
    k: int,
    error_rate: float,
    seed: int,
    group_size: int = 6,
    error_mix: tuple[float, float] = (0.8, 0.2),
) -> dict:
    """One full inject + clean cycle against an embedded provider."""
    bundle = generate_master(seed=seed, group_size=group_size)
    plan = InjectionPlan(rate=error_rate, mix=error_mix, seed=seed)
    dirty, _ = inject_errors(bundle.truth, plan, bundle.config.fds)
    support = build_support_set(bundle.master, support_size, seed)
    spec = AnonymitySpec(x=bundle.spec_x, y=bundle.spec_y, levels=(0,), k=k)
    session = ProviderSession(
        master=bundle.master, support=support, spec=spec, mds=bundle.config.mds
    )
    budget = Fraction(str(budget_frac)) * support.total_weight
    started = time.perf_counter()
    repaired, report = safe_clean(
        dirty,
        EmbeddedProvider(session),
        bundle.config.fds,
        budget,
        l_max=l_max,
        truth=bundle.truth,
        metric_ctx=metrics.MetricContext(bundle.master),
    )
    wall = time.perf_counter() - started
    return {
        "repair_error": report.repair_error,
        "violations_before": report.violations_before,
        "violations_after": report.violations_after,
        "repairs": len(report.iterations),
        "purchases": sum(1 for it in report.iterations if it.get("outcome") == "repaired"),
        "buckets": report.buckets,
        "wall_time_s": wall,
    }


_AXES = ("budget", "support", "level", "k", "error")


def _axis_values(config: SweepConfig, axis: str) -> tuple:
    return {
        "budget": config.budget_grid,
        "support": config.support_grid,
        "level": config.level_grid,
        "k": config.k_grid,
        "error": config.error_grid,
    }[axis]


def run_axis(config: SweepConfig, axis: str) -> tuple[list[dict], list[dict]]:
    """Averaged rows plus per-repetition timing rows for one sweep axis."""
    rows: list[dict] = []
    timing: list[dict] = []
    for value in _axis_values(config, axis):
        params = {
            "budget": config.default_budget,
            "support": config.default_support,
            "level": config.default_level,
            "k": config.default_k,
            "error": config.default_error,
        }
        params[axis] = value
        reps = []
        for rep in range(config.repetitions):
            # one seed per repetition, shared across the axis values, so grid
            # points compare paired datasets and support sets
            seed = child_rng(config.base_seed, f"{axis}:{rep}").getrandbits(31)
            point = run_point(
                budget_frac=params["budget"],
                support_size=int(params["support"]),
                l_max=int(params["level"]),
                k=int(params["k"]),
                error_rate=params["error"],
                seed=seed,
                group_size=config.group_size,
                error_mix=config.error_mix,
            )
            reps.append(point)
            timing.append({"axis": axis, "value": value, "rep": rep,
                           "wall_time_s": point["wall_time_s"]})
        row = {
            "axis": axis,
            "value": value,
            "repair_error": sum(p["repair_error"] for p in reps) / len(reps),
            "violations_before": sum(p["violations_before"] for p in reps) / len(reps),
            "violations_after": sum(p["violations_after"] for p in reps) / len(reps),
            "purchases": sum(p["purchases"] for p in reps) / len(reps),
        }
        for bucket in metrics.BUCKETS:
            row[f"bucket_{bucket}"] = sum(p["buckets"][bucket] for p in reps) / len(reps)
        rows.append(row)
    return rows, timing


def run_sweep(config: SweepConfig, outdir: str | Path, axes: Iterable[str] = _AXES) -> dict:
    """Write one CSV per axis plus a timing file; results are seed-determined
    and byte-identical across reruns (timings live in their own file)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    all_rows: dict[str, list[dict]] = {}
    all_timing: list[dict] = []
    for axis in axes:
        rows, timing = run_axis(config, axis)
        all_rows[axis] = rows
        all_timing.extend(timing)
        _write_csv(outdir / f"{axis}.csv", rows)
    _write_csv(outdir / "timing.csv", all_timing)
    summary = {axis: rows for axis, rows in all_rows.items()}
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    path.write_text(out.getvalue())


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)
