"""Scenario runs with machine-readable reports.

Every check records its inputs so a failure can be replayed; report assembly
is order-deterministic and the timestamp is the only field excluded from
comparisons.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Sequence

from .cover import ball_cover, canonical_map, nerve, p_sharp, proximity_cover, spanier_generators
from .group import is_trivial, multiply, presentation, reduce
from .limitsys import (
    InverseSystem,
    Thread,
    level_model,
    psi,
    sample_kernel_element,
    tail_bound,
)
from .models import cylinder_model
from .rational import Q
from .rho import (
    DEFAULT_BUDGET,
    IN,
    OUT,
    Budget,
    ball_membership,
    metric_independence_check,
    num_str,
    plane_upper,
    random_word,
    rho_lower,
    rho_upper,
    verify_lemma_chain,
)
from .space import CylinderRxS1, MetricComplex, PuncturedPlane, as_fraction, wedge_of_circles

SCHEMA = "pimet-report/1"
PASS, FAIL, UNKNOWN = "pass", "fail", "unknown"


@dataclass
class Check:
    name: str
    status: str
    numbers: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)

    def to_json(self):
        return {"name": self.name, "status": self.status, "numbers": self.numbers, "witnesses": self.witnesses}


@dataclass
class ScenarioReport:
    scenario: str
    checks: list[Check]
    provenance: dict
    timestamp: str | None = None

    @property
    def status(self) -> str:
        states = {c.status for c in self.checks}
        if FAIL in states:
            return FAIL
        return UNKNOWN if UNKNOWN in states else PASS

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self, timestamp: bool = True) -> dict:
        out = {
            "schema": SCHEMA,
            "scenario": self.scenario,
            "status": self.status,
            "checks": [c.to_json() for c in sorted(self.checks, key=lambda c: c.name)],
            "provenance": self.provenance,
        }
        if timestamp:
            out["timestamp"] = self.timestamp
        return out

    def dumps(self, timestamp: bool = True) -> str:
        return json.dumps(self.to_json(timestamp), indent=2, sort_keys=True) + "\n"

    def comparable(self) -> str:
        """Serialization used for reproducibility comparisons."""
        return self.dumps(timestamp=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scenario", "check", "status", "numbers", "witnesses"])
        for c in sorted(self.checks, key=lambda c: c.name):
            writer.writerow([self.scenario, c.name, c.status,
                             json.dumps(c.numbers, sort_keys=True, separators=(",", ":")),
                             json.dumps(c.witnesses, sort_keys=True, separators=(",", ":"))])
        return buf.getvalue()


def _report(scenario: str, checks: list[Check], provenance: dict) -> ScenarioReport:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return ScenarioReport(scenario, sorted(checks, key=lambda c: c.name), provenance, stamp)


def _status(failed: int, unknown: int = 0) -> str:
    return FAIL if failed else UNKNOWN if unknown else PASS


def _radii(radii) -> list[Q]:
    return [as_fraction(r) for r in radii]


# -- sandwich -----------------------------------------------------------------

def kernel_level_for(system: InverseSystem, delta) -> int:
    """Smallest k >= 1 with tail_bound(k) <= delta/2, capped at the depth."""
    delta = as_fraction(delta)
    for k in range(1, system.depth + 1):
        if tail_bound(system, k) <= delta / 2:
            return k
    return system.depth


def _deepest_kernel(system: InverseSystem, w) -> int:
    """Largest k with r_k#(w) trivial (0 if none)."""
    best = 0
    for k in range(1, system.depth + 1):
        if system.r_sharp(k)(w):
            break
        best = k
    return best


def sandwich_check(system: InverseSystem, radii: Sequence, sample_size: int = 100, seed: int = 0,
                   budget: Budget = DEFAULT_BUDGET, cover_level: int | None = None,
                   out_samples: int | None = None, max_len: int = 6) -> ScenarioReport:
    """Shape kernels inside rho balls inside Spanier groups, per radius."""
    J = system.depth
    L = J if cover_level is None else cover_level
    model = level_model(system, L)
    lift = system.s_sharp(L) if L < J else None
    rank = system.presentation().rank
    out_samples = sample_size if out_samples is None else out_samples
    checks = []
    for delta in _radii(radii):
        tag = f"delta={num_str(delta)}"
        k = kernel_level_for(system, delta)
        rng = random.Random(f"{seed}:kernel:{num_str(delta)}")
        worst, bad, inside = Q(0), [], []
        for _ in range(sample_size):
            w = sample_kernel_element(system, k, rng)
            up, _ = rho_upper(system, w, (), budget)
            worst = max(worst, up)
            if up < delta:
                inside.append(w)
            else:
                bad.append({"a": list(w), "b": [], "k": k, "upper": num_str(up)})
        checks.append(Check(f"{tag} kernel in ball", _status(len(bad)), {
            "k": k, "tail_bound": num_str(tail_bound(system, k)), "samples": sample_size,
            "in": sample_size - len(bad), "max_upper": num_str(worst)}, bad[:5]))

        cover = ball_cover(model, delta / 2)
        gens = spanier_generators(model, cover, seed=hash_seed(seed, "spanier", delta), count=sample_size)
        worst, bad = Q(0), []
        for g in gens:
            w = lift(g) if lift else g
            up, _ = rho_upper(system, w, (), budget)
            worst = max(worst, up)
            if up < delta:
                inside.append(w)
            else:
                bad.append({"a": list(w), "b": [], "cover_radius": num_str(delta / 2), "upper": num_str(up)})
        checks.append(Check(f"{tag} spanier in ball", _status(len(bad)), {
            "cover_level": L, "cover_radius": num_str(delta / 2), "cover_elements": len(cover.balls),
            "samples": len(gens), "nontrivial": sum(1 for g in gens if g), "in": len(gens) - len(bad),
            "max_upper": num_str(worst)}, bad[:5]))

        rng = random.Random(f"{seed}:out:{num_str(delta)}")
        outs = unknown = 0
        gaps = []
        for _ in range(out_samples):
            w = reduce(random_word(rng, rank, max_len))
            verdict = ball_membership(system, w, delta, budget)
            if verdict == IN:
                inside.append(w)
            if verdict != OUT:
                continue
            outs += 1
            if psi(system, Thread.from_top(system, w)).first_nontrivial_level is None:
                unknown += 1
                gaps.append({"a": list(w), "b": [], "radius": num_str(delta)})
        # the open tightness question: how deep a kernel holds every sampled ball member
        gap_level = min((_deepest_kernel(system, w) for w in inside), default=J)
        checks.append(Check(f"{tag} out has shape image", _status(0, unknown), {
            "samples": out_samples, "out": outs, "shape_nontrivial": outs - unknown,
            "ball_members_seen": len(inside), "ball_inside_kernel_level": gap_level, "k": k}, gaps[:5]))
    prov = {"seed": seed, "depth": J, "cover_level": L, "sample_size": sample_size, "out_samples": out_samples,
            "max_len": max_len, "radii": [num_str(r) for r in _radii(radii)], "budget": budget.to_json(),
            "system": getattr(system, "description", None)}
    return _report("sandwich", checks, prov)


def hash_seed(seed: int, *parts) -> int:
    """Stable integer seed derived from a base seed and labels."""
    rng = random.Random(":".join([str(seed)] + [num_str(p) if isinstance(p, Q) else str(p) for p in parts]))
    return rng.getrandbits(32)


# -- cylinder example ---------------------------------------------------------

DEFAULT_CYLINDER_RADII = ("2", "1", "1/2", "1/4", "1/8", "1/16")


def generator_killed(model, radius) -> bool | None:
    """Whether the coarse cover at ``radius`` sends the generator to 1."""
    cover = proximity_cover(model.complex, model.ambient, float(radius))
    h = p_sharp(canonical_map(model.complex, cover))
    return is_trivial(h(model.generator), presentation(nerve(cover).complex))


def cylinder_demo(truncations: Sequence[int] = (1, 2, 4, 8), radii: Sequence = DEFAULT_CYLINDER_RADII,
                  circumference=1, slack=0) -> ScenarioReport:
    """Uniform lower bound for the generator across truncations, next to the
    coarse covers that kill it."""
    radii = _radii(radii)
    slack = as_fraction(slack)
    checks = []
    eps_values = set()
    for m in truncations:
        model = cylinder_model(m, circumference)
        cx = model.complex
        margin = model.circumference / 2
        eps0 = min(model.arc_length / 3, margin) - slack
        eps_values.add(eps0)
        lo, wit = rho_lower(cx, model.generator, ())
        checks.append(Check(f"m={m} lower bound", PASS if lo >= eps0 > 0 else FAIL, {
            "lower": num_str(lo), "epsilon0": num_str(eps0), "arc_third": num_str(model.arc_length / 3),
            "cylinder_margin": num_str(margin), "systole": num_str(cx.systole()), "vertices": cx.num_vertices},
            [] if lo >= eps0 > 0 else [{"truncation": m, "a": list(model.generator), "b": []}]))
        verdicts = {num_str(r): generator_killed(model, r) for r in radii}
        kill = [r for r in radii if verdicts[num_str(r)] is True]
        undecided = [r for r in radii if verdicts[num_str(r)] is None]
        names = {True: "trivial", False: "nontrivial", None: "unknown"}
        checks.append(Check(f"m={m} coarse cover kills generator", PASS if kill else UNKNOWN if undecided else FAIL, {
            "images": {k: names[v] for k, v in verdicts.items()},
            "smallest_killing_radius": num_str(min(kill)) if kill else None},
            [] if kill else [{"truncation": m, "radii": [num_str(r) for r in radii]}]))
        sub = model.cylinder_subcomplex()
        lo_c, _ = rho_lower(sub, model.generator, ())
        target = model.circumference / 2 - slack
        checks.append(Check(f"m={m} cylinder-only lower bound", PASS if lo_c >= target else FAIL, {
            "lower": num_str(lo_c), "half_circumference": num_str(model.circumference / 2)}))
    uniform = len(eps_values) == 1
    checks.append(Check("epsilon0 independent of truncation", PASS if uniform else FAIL, {
        "epsilon0": sorted(num_str(e) for e in eps_values)}))
    prov = {"truncations": list(truncations), "radii": [num_str(r) for r in radii],
            "circumference": num_str(as_fraction(circumference)), "slack": num_str(slack)}
    return _report("cylinder", checks, prov)


# -- punctured plane and cylinder ---------------------------------------------

def punctured_plane_demo(n_max: int = 64, tol: float = 0.01, circumference: float = 2 * math.pi,
                         budget: Budget = DEFAULT_BUDGET) -> ScenarioReport:
    plane = PuncturedPlane()
    spl = budget.samples_per_unit_length
    table = []
    bad = []
    prev = None
    for n in range(1, n_max + 1):
        up = float(plane_upper(plane, 1, n, spl).mu.upper)
        table.append([n, num_str(up)])
        if up > 2 / n + tol or (prev is not None and not up < prev):
            bad.append({"n": n, "upper": num_str(up), "bound": num_str(2 / n + tol)})
        prev = up
    checks = [Check("plane upper table", _status(len(bad)), {
        "table": table, "final": table[-1][1], "final_bound": num_str(2 / n_max + tol)}, bad[:5])]
    best, _ = rho_upper(plane, (1,), (), Budget(budget.extra_length, budget.translations, spl, n_max))
    lo, _ = rho_lower(plane, (1,), ())
    checks.append(Check("plane generator interval", PASS if float(best) <= 2 / n_max + tol else FAIL, {
        "lower": num_str(lo), "upper": num_str(best)}))
    cyl = CylinderRxS1(circumference)
    lo_c, wit = rho_lower(cyl, (1,), ())
    up_c, _ = rho_upper(cyl, (1,), (), budget)
    ok = lo_c >= circumference / 2 - tol
    checks.append(Check("cylinder lower bound", PASS if ok else FAIL, {
        "lower": num_str(lo_c), "upper": num_str(up_c), "target": num_str(circumference / 2 - tol)},
        [] if ok else [{"a": [1], "b": [], "circumference": num_str(circumference)}]))
    prov = {"n_max": n_max, "tol": num_str(tol), "circumference": num_str(circumference), "budget": budget.to_json()}
    return _report("punctured-plane", checks, prov)


# -- shape injectivity --------------------------------------------------------

def shape_injectivity_probe(system: InverseSystem, samples: int = 100, seed: int = 0,
                            max_len: int = 10) -> ScenarioReport:
    rng = random.Random(seed)
    rank = system.presentation().rank
    seen = nontrivial = positive = 0
    gaps, bad = [], []
    for _ in range(samples):
        w = reduce(random_word(rng, rank, max_len))
        if not w:
            continue
        seen += 1
        level = psi(system, Thread.from_top(system, w)).first_nontrivial_level
        lo, _ = rho_lower(system, w, ())
        nontrivial += level is not None
        positive += lo > 0
        if level is None and lo == 0:
            gaps.append({"a": list(w), "b": []})
        elif (level is None) != (lo == 0):
            bad.append({"a": list(w), "b": [], "level": level, "lower": num_str(lo)})
    checks = [Check("sampled classes", _status(len(bad), len(gaps)), {
        "sampled": seen, "shape_nontrivial": nontrivial, "lower_positive": positive,
        "gap_candidates": len(gaps)}, (bad + gaps)[:5])]
    if rank >= 2:
        w = multiply((1,), (2,), (-1,), (-2,))
        level = psi(system, Thread.from_top(system, w)).first_nontrivial_level
        lo, _ = rho_lower(system, w, ())
        ok = level is not None and lo > 0
        checks.append(Check("commutator of first two generators", PASS if ok else UNKNOWN, {
            "first_nontrivial_level": level, "lower": num_str(lo)}, [] if ok else [{"a": list(w), "b": []}]))
    prov = {"seed": seed, "samples": samples, "max_len": max_len, "depth": system.depth,
            "system": getattr(system, "description", None)}
    return _report("shape-injectivity", checks, prov)


# -- lemma chain and metric independence ----------------------------------------

def lemma_scenario(space, samples: int = 50, seed: int = 0, max_len: int = 6,
                   budget: Budget = DEFAULT_BUDGET, label: str | None = None) -> ScenarioReport:
    results = verify_lemma_chain(space, samples, seed, max_len, budget)
    checks = [Check(r.name, _status(r.failed), {"passed": r.passed, "failed": r.failed}, r.counterexamples)
              for r in results]
    prov = {"seed": seed, "samples": samples, "max_len": max_len, "budget": budget.to_json(),
            "space": label or type(space).__name__}
    return _report("lemmas", checks, prov)


def metric_independence_scenario(cx: MetricComplex, lengths1: Sequence, lengths2: Sequence,
                                 samples: int = 100, seed: int = 0, radii: Sequence | None = None,
                                 max_len: int = 4, budget: Budget = DEFAULT_BUDGET) -> ScenarioReport:
    rep = metric_independence_check(cx, lengths1, lengths2, samples, seed, radii, max_len, budget)
    checks = [
        Check("transported witness", _status(rep.transported.failed), {
            "passed": rep.transported.passed, "failed": rep.transported.failed,
            "L": num_str(rep.L)}, rep.transported.counterexamples),
        Check("verdict agreement", _status(rep.disagreements), {
            "decided": rep.decided, "disagreements": rep.disagreements,
            "L": num_str(rep.L), "L_prime": num_str(rep.L_prime)}, rep.verdicts.counterexamples),
    ]
    prov = {"seed": seed, "samples": samples, "max_len": max_len, "budget": budget.to_json(),
            "lengths1": [num_str(as_fraction(x)) for x in lengths1],
            "lengths2": [num_str(as_fraction(x)) for x in lengths2],
            "radii": [num_str(as_fraction(r)) for r in radii] if radii else None}
    return _report("metric-independence", checks, prov)


def circle_lengths(circumferences: Sequence, segments: int = 3) -> list[Q]:
    """Edge lengths of ``wedge_of_circles`` for the given circumferences."""
    return [as_fraction(c) / segments for c in circumferences for _ in range(segments)]


def metric_independence_demo(circumferences1: Sequence = (1, 1), circumferences2: Sequence = (2, 1),
                             segments: int = 3, **kwargs) -> ScenarioReport:
    """Wedge of circles under two circumference assignments."""
    if len(circumferences1) != len(circumferences2):
        raise ValueError("both metrics need one circumference per circle")
    cx = wedge_of_circles(circumferences1, segments)
    report = metric_independence_scenario(cx, circle_lengths(circumferences1, segments),
                                          circle_lengths(circumferences2, segments), **kwargs)
    report.provenance["circumferences1"] = [num_str(as_fraction(c)) for c in circumferences1]
    report.provenance["circumferences2"] = [num_str(as_fraction(c)) for c in circumferences2]
    return report
