"""Endpoint-sequence representation of state intervals.

Every non-normal interval [s, e] contributes a Start endpoint at wave s and
a Finish endpoint at wave e; normal-severity levels emit nothing.  Endpoints
sharing a wave form one group.  Within a group the stored order is a pure
canonical form (Start block before Finish block, each block sorted):
pattern semantics depend only on group membership.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, NamedTuple, Sequence

from .abstraction import StateInterval
from .errors import MatrixFormatError, PairingError


class Endpoint(NamedTuple):
    feature: str
    level: str
    is_finish: bool

    @property
    def kind(self) -> str:
        return "finish" if self.is_finish else "start"

    def label(self) -> str:
        return f"{self.feature}={self.level}{'-' if self.is_finish else '+'}"


def start(feature: str, level: str) -> Endpoint:
    return Endpoint(feature, level, False)


def finish(feature: str, level: str) -> Endpoint:
    return Endpoint(feature, level, True)


def group_order(ep: Endpoint):
    """Intra-group canonical order: Start block first, blocks sorted."""
    return (ep.is_finish, ep.feature, ep.level)


@dataclass(frozen=True)
class EndpointGroup:
    time: int
    endpoints: tuple[Endpoint, ...]


@dataclass(frozen=True)
class EndpointSequence:
    patient_id: str
    groups: tuple[EndpointGroup, ...]
    event: bool


def encode(
    patient_id: str,
    intervals: Iterable[StateInterval],
    severity_of: Mapping[tuple[str, str], str],
    event: bool,
) -> EndpointSequence:
    """Convert state intervals into the canonical endpoint sequence.

    Normal-severity levels are dropped (normal-pruning).  A single-wave
    interval places its Start and Finish in the same group.
    """
    by_time: dict[int, set[Endpoint]] = {}
    for iv in intervals:
        if severity_of.get((iv.feature, iv.level), "other") == "normal":
            continue
        by_time.setdefault(iv.start, set()).add(start(iv.feature, iv.level))
        by_time.setdefault(iv.end, set()).add(finish(iv.feature, iv.level))
    groups = tuple(
        EndpointGroup(time=t, endpoints=tuple(sorted(by_time[t], key=group_order)))
        for t in sorted(by_time)
    )
    seq = EndpointSequence(patient_id=patient_id, groups=groups, event=event)
    verify_pairing(seq)
    return seq


def verify_pairing(seq: EndpointSequence) -> None:
    """Check the pairing invariant: every Finish closes a previously opened Start.

    Within a group, Starts open before Finishes close (single-wave intervals
    are well-formed); two simultaneously open intervals of one (feature,
    level) are an error.
    """
    open_count: dict[tuple[str, str], int] = {}
    for group in seq.groups:
        for ep in sorted(group.endpoints, key=lambda e: e.is_finish):
            key = (ep.feature, ep.level)
            if not ep.is_finish:
                if open_count.get(key, 0) > 0:
                    raise PairingError(f"{seq.patient_id}: {key} opened twice at t{group.time}")
                open_count[key] = 1
            else:
                if open_count.get(key, 0) != 1:
                    raise PairingError(
                        f"{seq.patient_id}: finish without open start for {key} at t{group.time}"
                    )
                open_count[key] = 0
    left_open = [k for k, v in open_count.items() if v]
    if left_open:
        raise PairingError(f"{seq.patient_id}: intervals never finished: {sorted(left_open)}")


def decode_intervals(seq: EndpointSequence) -> list[StateInterval]:
    """Invert ``encode``: rebuild the non-normal intervals from the endpoints."""
    verify_pairing(seq)
    pending: dict[tuple[str, str], int] = {}
    out: list[StateInterval] = []
    for group in seq.groups:
        for ep in sorted(group.endpoints, key=lambda e: e.is_finish):
            key = (ep.feature, ep.level)
            if not ep.is_finish:
                pending[key] = group.time
            else:
                out.append(StateInterval(ep.feature, ep.level, pending.pop(key), group.time))
    out.sort(key=lambda iv: (iv.feature, iv.level, iv.start))
    return out


def canonical_form(groups: Iterable[Iterable[Endpoint]]) -> tuple[tuple[Endpoint, ...], ...]:
    """Order-insensitive-within-group canonical key for a pattern's groups."""
    return tuple(tuple(sorted(g, key=group_order)) for g in groups)


def pattern_key(groups: Iterable[Iterable[Endpoint]]) -> str:
    """Canonical textual key, e.g. ``(bmi=Obese+)->(bmi=Obese-)``."""
    return "->".join(
        "(" + ",".join(ep.label() for ep in g) + ")" for g in canonical_form(groups)
    )


def groups_to_payload(groups: Iterable[Iterable[Endpoint]]) -> list[list[dict]]:
    """JSON shape for pattern groups."""
    return [
        [{"feature": ep.feature, "level": ep.level, "kind": ep.kind} for ep in g]
        for g in canonical_form(groups)
    ]


def groups_from_payload(payload) -> tuple[tuple[Endpoint, ...], ...]:
    return canonical_form(
        tuple(
            tuple(Endpoint(ep["feature"], ep["level"], ep["kind"] == "finish") for ep in g)
            for g in payload
        )
    )


@dataclass(frozen=True)
class PatientIntervals:
    patient_id: str
    time: float
    event: bool
    intervals: tuple[StateInterval, ...]


@dataclass(frozen=True)
class CohortIntervals:
    """The intermediate intervals artifact handed from abstraction to mining."""

    wave_count: int
    levels: Mapping[str, Mapping[str, str]]  # feature -> level -> severity
    patients: tuple[PatientIntervals, ...]
    edges: Mapping[str, Sequence[float]] | None = None

    def severity_of(self) -> dict[tuple[str, str], str]:
        return {
            (feature, level): sev
            for feature, by_level in self.levels.items()
            for level, sev in by_level.items()
        }

    def sequences(self) -> list[EndpointSequence]:
        sev = self.severity_of()
        return [
            encode(p.patient_id, p.intervals, sev, p.event) for p in self.patients
        ]

    def outcomes(self) -> dict[str, tuple[float, bool]]:
        return {p.patient_id: (p.time, p.event) for p in self.patients}


def write_intervals_json(doc: CohortIntervals, stream: IO[str]) -> None:
    payload = {
        "wave_count": doc.wave_count,
        "levels": {f: dict(by) for f, by in sorted(doc.levels.items())},
        "edges": {f: list(e) for f, e in sorted((doc.edges or {}).items())},
        "patients": [
            {
                "patient_id": p.patient_id,
                "time": p.time,
                "event": int(p.event),
                "intervals": [
                    {"feature": iv.feature, "level": iv.level, "start": iv.start, "end": iv.end}
                    for iv in p.intervals
                ],
            }
            for p in doc.patients
        ],
    }
    json.dump(payload, stream, indent=2)
    stream.write("\n")


def read_intervals_json(stream: IO[str]) -> CohortIntervals:
    try:
        payload = json.load(stream)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"bad intervals JSON: {exc}") from None
    try:
        patients = tuple(
            PatientIntervals(
                patient_id=p["patient_id"],
                time=float(p["time"]),
                event=bool(p["event"]),
                intervals=tuple(
                    StateInterval(iv["feature"], iv["level"], int(iv["start"]), int(iv["end"]))
                    for iv in p["intervals"]
                ),
            )
            for p in payload["patients"]
        )
        return CohortIntervals(
            wave_count=int(payload["wave_count"]),
            levels=payload["levels"],
            patients=patients,
            edges=payload.get("edges") or None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFormatError(f"bad intervals JSON structure: {exc}") from None
