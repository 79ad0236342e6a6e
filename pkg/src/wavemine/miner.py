"""Projection-based mining of high-relative-risk interval patterns.

Patterns are grown endpoint by endpoint over a shared, immutable sequence
store.  A growth step survives only if the extended pattern clears the
support threshold, clears the risk threshold, and strictly increases the
risk over its parent.  Pruning strategies:

* normal-pruning   -- normal levels never enter the sequences (encoding),
* scan-pruning     -- suffixes are scanned only up to the earliest finish
                      of an interval the prefix holds open,
* point-pruning    -- a Finish extends a pattern only if its Start is open,
* postfix-pruning  -- Finish endpoints without an open Start are invisible
                      in suffix scans,
* risk-pruning     -- threshold plus strict-increase gate,
* duplicate-pruning-- canonical-form seen set cuts permuted regrowth.

Projected databases are pseudo-projections: per patient, a set of markers
(last matched group, open-interval finish positions) into the shared store.
A patient keeps every distinct marker its embeddings produce, which makes
projections independent of growth order and keeps support counts equal to
true containment counts.
"""
from __future__ import annotations

import multiprocessing
from concurrent import futures
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .encoding import Endpoint, EndpointSequence, canonical_form, group_order, pattern_key
from .errors import (
    CohortValidationError,
    ConfigError,
    GuardError,
    UndefinedRiskError,
)

SIMULTANEOUS = "simultaneous"
LATER = "later"
_SITES = (SIMULTANEOUS, LATER)

# Brute-force oracle guard.
_GUARD_MAX_PATIENTS = 25
_GUARD_MAX_WAVE = 5
_GUARD_MAX_ENDPOINTS = 12


@dataclass(frozen=True)
class TemporalPattern:
    """Ordered endpoint groups holding relative positions only."""

    groups: tuple[tuple[Endpoint, ...], ...]
    closed: bool

    @property
    def length(self) -> int:
        return sum(len(g) for g in self.groups)

    def key(self) -> str:
        return pattern_key(self.groups)


def make_pattern(groups: Iterable[Iterable[Endpoint]]) -> TemporalPattern:
    """Canonicalize and validate endpoint groups into a TemporalPattern."""
    canon = canonical_form(groups)
    open_fls = _sweep_open(canon)
    if open_fls is None:
        raise ConfigError(f"ill-formed pattern groups: {canon}")
    return TemporalPattern(groups=canon, closed=not open_fls)


@dataclass(frozen=True)
class MinerConfig:
    minsup: float = 0.05
    minsup_scope: str = "event_group"  # or "population"
    risk_sup: float = 1.5
    measure: str = "relative_risk"  # or "odds_ratio"
    max_length: int | None = None
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.minsup <= 1.0:
            raise ConfigError(f"minsup must lie in (0, 1], got {self.minsup}")
        if self.minsup_scope not in ("event_group", "population"):
            raise ConfigError(f"unknown minsup_scope {self.minsup_scope!r}")
        if self.risk_sup <= 0:
            raise ConfigError(f"risk_sup must be positive, got {self.risk_sup}")
        if self.measure not in ("relative_risk", "odds_ratio"):
            raise ConfigError(f"unknown measure {self.measure!r}")
        if self.max_length is not None and self.max_length < 1:
            raise ConfigError("max_length must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class RiskStats:
    """2x2 contingency counts over patients plus derived measures.

    a: with pattern & event, b: with pattern & no event,
    c: without pattern & event, d: without pattern & no event.
    """

    a: int
    b: int
    c: int
    d: int
    support_pop: float
    support_event: float
    risk: float


def counts_stats(a: int, b: int, c: int, d: int, risk: float = 0.0) -> RiskStats:
    """Build a RiskStats from raw counts (supports derived)."""
    n = a + b + c + d
    events = a + c
    return RiskStats(
        a=a,
        b=b,
        c=c,
        d=d,
        support_pop=(a + b) / n if n else 0.0,
        support_event=a / events if events else 0.0,
        risk=risk,
    )


@dataclass(frozen=True)
class PatternResult:
    pattern: TemporalPattern
    stats: RiskStats
    matched: tuple[str, ...]


@dataclass
class MiningStats:
    nodes: int = 0
    candidates: int = 0
    emitted: int = 0
    duplicates: int = 0
    undefined_risk: int = 0

    def merge(self, other: "MiningStats") -> None:
        self.nodes += other.nodes
        self.candidates += other.candidates
        self.emitted += other.emitted
        self.duplicates += other.duplicates
        self.undefined_risk += other.undefined_risk


# ---------------------------------------------------------------------------
# Risk measures


def _corrected(a, b, c, d):
    if a + b == 0:
        raise UndefinedRiskError("pattern matches no patients: risk undefined")
    if c + d == 0:
        raise UndefinedRiskError("pattern matches every patient: risk undefined")
    if min(a, b, c, d) == 0:
        # Haldane-Anscombe continuity correction on all four cells.
        return a + 0.5, b + 0.5, c + 0.5, d + 0.5
    return float(a), float(b), float(c), float(d)


def relative_risk(stats) -> float:
    """RR = (a/(a+b)) / (c/(c+d)) with +0.5 correction on any zero cell."""
    a, b, c, d = _corrected(stats.a, stats.b, stats.c, stats.d)
    return (a / (a + b)) / (c / (c + d))


def odds_ratio(stats) -> float:
    """OR = (a*d) / (b*c) with +0.5 correction on any zero cell."""
    a, b, c, d = _corrected(stats.a, stats.b, stats.c, stats.d)
    return (a * d) / (b * c)


class _Counts:
    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = a, b, c, d


def _risk_value(a: int, b: int, c: int, d: int, measure: str) -> float:
    if measure == "relative_risk":
        return relative_risk(_Counts(a, b, c, d))
    return odds_ratio(_Counts(a, b, c, d))


# ---------------------------------------------------------------------------
# Containment (embedding with pairing consistency)


class _SeqIndex:
    """Per-sequence lookup tables for embedding searches."""

    __slots__ = ("groups", "partner", "event", "patient_id")

    def __init__(self, seq: EndpointSequence):
        self.groups = [frozenset(g.endpoints) for g in seq.groups]
        self.partner: dict[tuple[int, Endpoint], int] = {}
        self.event = seq.event
        self.patient_id = seq.patient_id
        pending: dict[tuple[str, str], int] = {}
        for gi, g in enumerate(seq.groups):
            for ep in sorted(g.endpoints, key=lambda e: e.is_finish):
                key = (ep.feature, ep.level)
                if ep.is_finish:
                    self.partner[(pending.pop(key), Endpoint(ep.feature, ep.level, False))] = gi
                else:
                    pending[key] = gi


def _embeds(idx: _SeqIndex, pgroups, closable: bool = False) -> bool:
    """Backtracking embedding search.

    Pattern groups map to strictly later data groups; all endpoints of a
    pattern group must share one data group; a Start and its Finish must map
    to the same data interval instance.  With ``closable`` every interval the
    pattern leaves open must finish at or after the last matched group.
    """
    split = [
        ([ep for ep in g if not ep.is_finish], [ep for ep in g if ep.is_finish])
        for g in pgroups
    ]
    n = len(idx.groups)

    def rec(pi, min_g, open_map):
        if pi == len(split):
            if closable and open_map:
                last = min_g - 1
                return all(fin >= last for fin in open_map.values())
            return True
        starts, fins = split[pi]
        for h in range(min_g, n):
            tokens = idx.groups[h]
            new_open = dict(open_map)
            ok = True
            for ep in starts:
                key = (ep.feature, ep.level)
                if ep not in tokens or key in new_open:
                    ok = False
                    break
                new_open[key] = idx.partner[(h, ep)]
            if ok:
                for ep in fins:
                    key = (ep.feature, ep.level)
                    if new_open.get(key) != h:
                        ok = False
                        break
                    del new_open[key]
            if ok and rec(pi + 1, h + 1, new_open):
                return True
        return False

    return rec(0, 0, {})


def contains(sequence: EndpointSequence, pattern) -> bool:
    """True iff the pattern embeds into the patient's endpoint sequence."""
    groups = pattern.groups if isinstance(pattern, TemporalPattern) else canonical_form(pattern)
    return _embeds(_SeqIndex(sequence), groups)


# ---------------------------------------------------------------------------
# Token-space sequence store (shared, immutable)


class _PatientSeq:
    __slots__ = ("patient_id", "event", "groups", "group_list", "partner", "n_groups", "times")

    def __init__(self, patient_id, event, groups, group_list, partner, times):
        self.patient_id = patient_id
        self.event = event
        self.groups = groups          # list[frozenset[int]]
        self.group_list = group_list  # list[tuple[int, ...]] sorted
        self.partner = partner        # (group_idx, start_token) -> finish group_idx
        self.n_groups = len(groups)
        self.times = times


class _Store:
    """Token-indexed view of the database: token = fl_id * 2 + is_finish."""

    def __init__(self, db: Sequence[EndpointSequence]):
        pairs = sorted({(ep.feature, ep.level) for s in db for g in s.groups for ep in g.endpoints})
        self.fl_pairs = pairs
        self.fl_index = {p: i for i, p in enumerate(pairs)}
        self.patients: list[_PatientSeq] = []
        for seq in db:
            groups = []
            group_list = []
            times = []
            partner: dict[tuple[int, int], int] = {}
            pending: dict[int, int] = {}
            for gi, g in enumerate(seq.groups):
                toks = []
                for ep in sorted(g.endpoints, key=lambda e: e.is_finish):
                    fl = self.fl_index[(ep.feature, ep.level)]
                    tok = fl * 2 + int(ep.is_finish)
                    toks.append(tok)
                    if ep.is_finish:
                        partner[(pending.pop(fl), fl * 2)] = gi
                    else:
                        pending[fl] = gi
                groups.append(frozenset(toks))
                group_list.append(tuple(sorted(toks)))
                times.append(g.time)
            self.patients.append(
                _PatientSeq(seq.patient_id, seq.event, groups, group_list, partner, times)
            )
        self.n = len(self.patients)
        self.n_events = sum(1 for p in self.patients if p.event)

    def endpoint(self, tok: int) -> Endpoint:
        feature, level = self.fl_pairs[tok >> 1]
        return Endpoint(feature, level, bool(tok & 1))

    def token(self, ep: Endpoint) -> int | None:
        fl = self.fl_index.get((ep.feature, ep.level))
        if fl is None:
            return None
        return fl * 2 + int(ep.is_finish)


def _token_sort_key(tok: int):
    # Endpoint total order: (feature, level) lexicographic, Start < Finish.
    return (tok >> 1, tok & 1)


def _group_key(tokens: Iterable[int]) -> tuple[int, ...]:
    # Canonical intra-group order: Start block then Finish block.
    return tuple(sorted(tokens, key=lambda t: (t & 1, t >> 1)))


# A projection state is (last_matched_group, open) where open is a tuple of
# (fl_id, finish_group) pairs sorted by fl_id.


def _initial_pdb(store: _Store, tok: int) -> dict[int, list]:
    fl = tok >> 1
    pdb: dict[int, list] = {}
    for pidx, pat in enumerate(store.patients):
        states = [
            (g, ((fl, pat.partner[(g, tok)]),))
            for g in range(pat.n_groups)
            if tok in pat.groups[g]
        ]
        if states:
            pdb[pidx] = states
    return pdb


def _scan_states(store, pdb, last_set):
    """Per-patient candidate endpoints with their extension sites.

    Scan-pruning bounds every scan at the earliest open finish; Finish
    tokens only qualify at exactly their open instance's finish position
    (point- and postfix-pruning fall out of the pairing structure).
    """
    out: dict[tuple[int, int], list[int]] = {}
    for pidx in sorted(pdb):
        pat = store.patients[pidx]
        found = set()
        for g, open_ in pdb[pidx]:
            open_map = dict(open_)
            e_min = min((fin for _, fin in open_), default=pat.n_groups - 1)
            for tok in pat.group_list[g]:
                if tok in last_set:
                    continue
                if tok & 1:
                    if open_map.get(tok >> 1) == g:
                        found.add((tok, 0))
                elif (tok >> 1) not in open_map:
                    found.add((tok, 0))
            for h in range(g + 1, e_min + 1):
                for tok in pat.group_list[h]:
                    if tok & 1:
                        if open_map.get(tok >> 1) == h:
                            found.add((tok, 1))
                    elif (tok >> 1) not in open_map:
                        found.add((tok, 1))
        for key in found:
            out.setdefault(key, []).append(pidx)
    return out


def _project(store, pdb, last_set, tok, site_later: int, pids):
    """Advance the per-patient markers for one accepted extension."""
    fl = tok >> 1
    new_pdb: dict[int, list] = {}
    for pidx in pids:
        pat = store.patients[pidx]
        states = set()
        for g, open_ in pdb[pidx]:
            open_map = dict(open_)
            if not site_later:
                if tok not in pat.groups[g] or tok in last_set:
                    continue
                if tok & 1:
                    if open_map.get(fl) != g:
                        continue
                    del open_map[fl]
                else:
                    if fl in open_map:
                        continue
                    open_map[fl] = pat.partner[(g, tok)]
                states.add((g, tuple(sorted(open_map.items()))))
            else:
                e_min = min((fin for _, fin in open_), default=pat.n_groups - 1)
                if tok & 1:
                    h = open_map.get(fl)
                    if h is None or not g < h <= e_min:
                        continue
                    del open_map[fl]
                    states.add((h, tuple(sorted(open_map.items()))))
                else:
                    for h in range(g + 1, e_min + 1):
                        if tok in pat.groups[h] and fl not in open_map:
                            opened = dict(open_map)
                            opened[fl] = pat.partner[(h, tok)]
                            states.add((h, tuple(sorted(opened.items()))))
        if states:
            new_pdb[pidx] = sorted(states)
    return new_pdb


def _sweep_open(groups) -> frozenset | None:
    """Open (feature, level) set after the groups, or None if ill-formed."""
    open_set = set()
    for g in groups:
        eps = sorted(g, key=lambda e: e.is_finish)
        for ep in eps:
            key = (ep.feature, ep.level)
            if not ep.is_finish:
                if key in open_set:
                    return None
                open_set.add(key)
            else:
                if key not in open_set:
                    return None
                open_set.remove(key)
    return frozenset(open_set)


def point_prune(
    candidates: Iterable[Endpoint], open_starts: Iterable[tuple[str, str]]
) -> list[Endpoint]:
    """Keep Starts; keep a Finish only if its (feature, level) is open."""
    open_set = set(open_starts)
    return [ep for ep in candidates if not ep.is_finish or (ep.feature, ep.level) in open_set]


# ---------------------------------------------------------------------------
# Growth


def _support_fraction(a: int, ab: int, store_n: int, store_events: int, scope: str) -> float:
    if scope == "event_group":
        return a / store_events
    return ab / store_n


def _grow_branch(store: _Store, config: MinerConfig, tok: int, risk: float):
    """Mine every pattern whose growth starts at the given Start endpoint."""
    pdb = _initial_pdb(store, tok)
    key = (_group_key((tok,)),)
    seen = {key}
    acc: list = []
    stats = MiningStats()
    _tpspan(
        store,
        config,
        key,
        frozenset((tok,)),
        frozenset((tok >> 1,)),
        pdb,
        risk,
        1,
        seen,
        acc,
        stats,
    )
    return acc, stats


def _tpspan(store, config, key, last_set, open_fls, pdb, risk, n_tokens, seen, acc, stats):
    stats.nodes += 1
    if config.max_length is not None and n_tokens >= config.max_length:
        return
    cands = _scan_states(store, pdb, last_set)
    for tok, site in sorted(cands, key=lambda ts: (_token_sort_key(ts[0]), ts[1])):
        # point-pruning (the scan only produces qualifying finishes; keep the
        # explicit gate so the growth rule does not depend on that detail)
        if tok & 1 and (tok >> 1) not in open_fls:
            continue
        stats.candidates += 1
        pids = cands[(tok, site)]
        ab = len(pids)
        a = sum(1 for p in pids if store.patients[p].event)
        if not _support_fraction(a, ab, store.n, store.n_events, config.minsup_scope) > config.minsup:
            continue
        b = ab - a
        c = store.n_events - a
        d = store.n - ab - c
        try:
            new_risk = _risk_value(a, b, c, d, config.measure)
        except UndefinedRiskError:
            stats.undefined_risk += 1
            continue
        if not (new_risk > config.risk_sup and new_risk > risk):
            continue
        if site == 0:
            new_key = key[:-1] + (_group_key(last_set | {tok}),)
            new_last = last_set | {tok}
        else:
            new_key = key + ((tok,),)
            new_last = frozenset((tok,))
        if new_key in seen:
            stats.duplicates += 1
            continue
        seen.add(new_key)
        fl = tok >> 1
        new_open = open_fls - {fl} if tok & 1 else open_fls | {fl}
        new_pdb = _project(store, pdb, last_set, tok, site, pids)
        if not new_open:
            acc.append((new_key, (a, b, c, d), tuple(pids), new_risk))
            stats.emitted += 1
        _tpspan(
            store,
            config,
            new_key,
            new_last,
            new_open,
            new_pdb,
            new_risk,
            n_tokens + 1,
            seen,
            acc,
            stats,
        )


def _top_level(store: _Store, config: MinerConfig, stats: MiningStats):
    """Frequent high-risk Start endpoints: the branch roots."""
    carriers: dict[int, list[int]] = {}
    for pidx, pat in enumerate(store.patients):
        toks = set().union(*pat.groups) if pat.groups else set()
        for tok in toks:
            carriers.setdefault(tok, []).append(pidx)
    roots = []
    for tok in sorted(carriers, key=_token_sort_key):
        if tok & 1:
            continue  # only starting endpoints seed growth
        pids = carriers[tok]
        ab = len(pids)
        a = sum(1 for p in pids if store.patients[p].event)
        if not _support_fraction(a, ab, store.n, store.n_events, config.minsup_scope) > config.minsup:
            continue
        b = ab - a
        c = store.n_events - a
        d = store.n - ab - c
        try:
            risk = _risk_value(a, b, c, d, config.measure)
        except UndefinedRiskError:
            stats.undefined_risk += 1
            continue
        if risk > config.risk_sup:
            roots.append((tok, risk))
    return roots


def _check_db(db: Sequence[EndpointSequence]) -> None:
    if not db:
        raise CohortValidationError("mining needs a non-empty database")
    events = sum(1 for s in db if s.event)
    if events == 0 or events == len(db):
        raise CohortValidationError(
            "mining needs at least one event and one non-event patient"
        )
    ids = [s.patient_id for s in db]
    if len(set(ids)) != len(ids):
        raise CohortValidationError("duplicate patient ids in the database")


def _assemble(store: _Store, config: MinerConfig, raw) -> list[PatternResult]:
    """Convert token-space emissions to sorted, deduplicated PatternResults."""
    by_key = {}
    for key, counts, pids, risk in raw:
        prev = by_key.get(key)
        if prev is not None:
            if prev[0] != counts:
                raise AssertionError(f"duplicate pattern with conflicting stats: {key}")
            continue
        by_key[key] = (counts, pids, risk)
    results = []
    for key, (counts, pids, risk) in by_key.items():
        a, b, c, d = counts
        groups = tuple(tuple(store.endpoint(t) for t in g) for g in key)
        stats = RiskStats(
            a=a,
            b=b,
            c=c,
            d=d,
            support_pop=(a + b) / store.n,
            support_event=a / store.n_events,
            risk=risk,
        )
        matched = tuple(sorted(store.patients[p].patient_id for p in pids))
        results.append(
            PatternResult(
                pattern=TemporalPattern(groups=groups, closed=True), stats=stats, matched=matched
            )
        )
    results.sort(key=lambda r: (-r.stats.risk, r.pattern.groups))
    return results


_WORKER_STATE: tuple[_Store, MinerConfig] | None = None


def _worker_init(store, config):
    global _WORKER_STATE
    _WORKER_STATE = (store, config)


def _worker_branch(root):
    tok, risk = root
    store, config = _WORKER_STATE
    return _grow_branch(store, config, tok, risk)


def mine_with_stats(
    db: Sequence[EndpointSequence], config: MinerConfig, workers: int | None = None
) -> tuple[list[PatternResult], MiningStats]:
    """Mine and also report search statistics (nodes visited, emissions)."""
    _check_db(db)
    workers = config.workers if workers is None else workers
    store = _Store(db)
    stats = MiningStats()
    roots = _top_level(store, config, stats)
    raw: list = []
    if not roots:
        return [], stats
    if workers == 1 or len(roots) == 1:
        for root in roots:
            branch_raw, branch_stats = _grow_branch(store, config, *root)
            raw.extend(branch_raw)
            stats.merge(branch_stats)
    else:
        # a failing worker fails the whole run; pool.map re-raises the
        # worker's own exception as the diagnostic
        ctx = multiprocessing.get_context("fork")
        with futures.ProcessPoolExecutor(
            max_workers=min(workers, len(roots)),
            mp_context=ctx,
            initializer=_worker_init,
            initargs=(store, config),
        ) as pool:
            for branch_raw, branch_stats in pool.map(_worker_branch, roots):
                raw.extend(branch_raw)
                stats.merge(branch_stats)
    return _assemble(store, config, raw), stats


def mine(db: Sequence[EndpointSequence], config: MinerConfig) -> list[PatternResult]:
    """Sequential mining: all closed patterns reachable under the growth rules."""
    return mine_with_stats(db, config, workers=1)[0]


def mine_parallel(db: Sequence[EndpointSequence], config: MinerConfig) -> list[PatternResult]:
    """Parallel mining, partitioned by top-level endpoint; same output as mine."""
    return mine_with_stats(db, config, workers=config.workers)[0]


# ---------------------------------------------------------------------------
# Public projection/count operations (exposed for inspection and testing)


@dataclass(frozen=True)
class ProjectionState:
    """Marker into a patient sequence: the suffix starts mid-group here."""

    group_index: int
    open_finish: tuple[tuple[tuple[str, str], int], ...]


@dataclass(frozen=True)
class ProjectedDatabase:
    prefix: tuple[tuple[Endpoint, ...], ...]
    open_starts: frozenset
    suffixes: Mapping[str, tuple[ProjectionState, ...]]


def _pattern_tokens(store: _Store, groups) -> list[tuple[int, int]] | None:
    """Growth order (token, site) steps reproducing the pattern, or None."""
    steps: list[tuple[int, int]] = []
    for g in groups:
        for ei, ep in enumerate(sorted(g, key=group_order)):
            tok = store.token(ep)
            if tok is None:
                return None
            steps.append((tok, 0 if ei > 0 else 1))
    return steps


def _pdb_for_pattern(store: _Store, groups):
    """Build the full projected database for an arbitrary well-formed prefix."""
    canon = canonical_form(groups)
    if _sweep_open(canon) is None:
        raise ConfigError(f"ill-formed pattern groups: {canon}")
    steps = _pattern_tokens(store, canon)
    if steps is None:
        return {}, canon
    pdb = None
    last_set: frozenset = frozenset()
    for tok, site in steps:
        if pdb is None:
            pdb = _initial_pdb(store, tok) if not tok & 1 else {}
            if tok & 1:
                return {}, canon  # a leading finish can never match
            last_set = frozenset((tok,))
            continue
        pids = sorted(pdb)
        pdb = _project(store, pdb, last_set, tok, site, pids)
        last_set = last_set | {tok} if site == 0 else frozenset((tok,))
        if not pdb:
            return {}, canon
    return pdb if pdb is not None else {}, canon


def count_support(
    db: Sequence[EndpointSequence], prefix: Iterable[Iterable[Endpoint]]
) -> dict[Endpoint, tuple[int, int]]:
    """Candidate extension counts for a prefix: endpoint -> (population, events).

    Each patient suffix is scanned from its marker up to (and including) the
    first Finish whose interval the prefix holds open; each distinct endpoint
    counts once per patient across both extension sites.
    """
    store = _Store(db)
    pdb, canon = _pdb_for_pattern(store, prefix)
    if not pdb:
        return {}
    last_set = frozenset(store.token(ep) for ep in canon[-1])
    cands = _scan_states(store, pdb, last_set)
    merged: dict[int, set[int]] = {}
    for (tok, _site), pids in cands.items():
        merged.setdefault(tok, set()).update(pids)
    out = {}
    for tok in sorted(merged, key=_token_sort_key):
        pids = merged[tok]
        a = sum(1 for p in pids if store.patients[p].event)
        out[store.endpoint(tok)] = (len(pids), a)
    return out


def construct_projection(
    db: Sequence[EndpointSequence],
    prefix: Iterable[Iterable[Endpoint]],
    endpoint: Endpoint,
    site: str = LATER,
) -> ProjectedDatabase:
    """Project the database for the prefix extended by one endpoint."""
    if site not in _SITES:
        raise ConfigError(f"unknown extension site {site!r}")
    store = _Store(db)
    pdb, canon = _pdb_for_pattern(store, prefix)
    tok = store.token(endpoint)
    new_groups = (
        canon[:-1] + (tuple(sorted((*canon[-1], endpoint), key=group_order)),)
        if site == SIMULTANEOUS
        else canon + ((endpoint,),)
    )
    new_canon = canonical_form(new_groups)
    open_after = _sweep_open(new_canon)
    if open_after is None:
        raise ConfigError(f"extension produces an ill-formed pattern: {new_canon}")
    suffixes: dict[str, tuple[ProjectionState, ...]] = {}
    if pdb and tok is not None:
        last_set = frozenset(store.token(ep) for ep in canon[-1])
        new_pdb = _project(store, pdb, last_set, tok, 0 if site == SIMULTANEOUS else 1, sorted(pdb))
        for pidx in sorted(new_pdb):
            pat = store.patients[pidx]
            states = tuple(
                ProjectionState(
                    group_index=g,
                    open_finish=tuple(
                        (store.fl_pairs[fl], fin) for fl, fin in open_
                    ),
                )
                for g, open_ in new_pdb[pidx]
            )
            suffixes[pat.patient_id] = states
    return ProjectedDatabase(prefix=new_canon, open_starts=open_after, suffixes=suffixes)


# ---------------------------------------------------------------------------
# Brute-force oracle


def brute_force_mine(
    db: Sequence[EndpointSequence], config: MinerConfig
) -> list[PatternResult]:
    """Reference miner: generate-and-test growth with embedding-based support.

    Applies the same support/risk/strict-increase rules along every growth
    path but knows nothing about projections or scan pruning; support comes
    from direct embedding searches.  Guarded to small inputs.
    """
    _check_db(db)
    alphabet = sorted({ep for s in db for g in s.groups for ep in g.endpoints})
    max_wave = max((g.time for s in db for g in s.groups), default=0)
    if len(db) > _GUARD_MAX_PATIENTS:
        raise GuardError(f"brute force refuses more than {_GUARD_MAX_PATIENTS} patients")
    if max_wave > _GUARD_MAX_WAVE:
        raise GuardError(f"brute force refuses waves beyond {_GUARD_MAX_WAVE}")
    if len(alphabet) > _GUARD_MAX_ENDPOINTS:
        raise GuardError(f"brute force refuses more than {_GUARD_MAX_ENDPOINTS} endpoints")

    idxs = [_SeqIndex(s) for s in db]
    n = len(db)
    n_events = sum(1 for s in db if s.event)
    carrier_cache: dict = {}

    def carriers(groups):
        hit = carrier_cache.get(groups)
        if hit is None:
            hit = tuple(i for i, idx in enumerate(idxs) if _embeds(idx, groups, closable=True))
            carrier_cache[groups] = hit
        return hit

    def gate(groups, parent_risk):
        pids = carriers(groups)
        ab = len(pids)
        a = sum(1 for i in pids if idxs[i].event)
        if not _support_fraction(a, ab, n, n_events, config.minsup_scope) > config.minsup:
            return None
        b, c = ab - a, n_events - a
        d = n - ab - c
        try:
            risk = _risk_value(a, b, c, d, config.measure)
        except UndefinedRiskError:
            return None
        if not (risk > config.risk_sup and risk > parent_risk):
            return None
        return pids, (a, b, c, d), risk

    seen: set = set()
    emitted: list = []

    def grow(groups, parent_risk, n_tokens):
        if config.max_length is not None and n_tokens >= config.max_length:
            return
        for ep in alphabet:
            for site in (0, 1):
                if site == 0:
                    if ep in groups[-1]:
                        continue
                    cand = groups[:-1] + (tuple(sorted((*groups[-1], ep), key=group_order)),)
                else:
                    cand = groups + ((ep,),)
                open_after = _sweep_open(cand)
                if open_after is None:
                    continue
                res = gate(cand, parent_risk)
                if res is None:
                    continue
                if cand in seen:
                    continue
                seen.add(cand)
                pids, counts, risk = res
                if not open_after:
                    emitted.append((cand, counts, pids, risk))
                grow(cand, risk, n_tokens + 1)

    for ep in alphabet:
        if ep.is_finish:
            continue
        base = ((ep,),)
        res = gate(base, 0.0)
        if res is None:
            continue
        if base in seen:
            continue
        seen.add(base)
        grow(base, res[2], 1)

    by_key: dict = {}
    for cand, counts, pids, risk in emitted:
        if cand in by_key:
            if by_key[cand][0] != counts:
                raise AssertionError(f"oracle duplicate with conflicting stats: {cand}")
            continue
        by_key[cand] = (counts, pids, risk)
    results = []
    for cand, (counts, pids, risk) in by_key.items():
        a, b, c, d = counts
        stats = RiskStats(
            a=a,
            b=b,
            c=c,
            d=d,
            support_pop=(a + b) / n,
            support_event=a / n_events,
            risk=risk,
        )
        matched = tuple(sorted(idxs[i].patient_id for i in pids))
        results.append(
            PatternResult(
                pattern=TemporalPattern(groups=cand, closed=True), stats=stats, matched=matched
            )
        )
    results.sort(key=lambda r: (-r.stats.risk, r.pattern.groups))
    return results
