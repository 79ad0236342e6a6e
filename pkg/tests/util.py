"""Shared helpers for the test suite."""
import random

from wavemine.abstraction import StateInterval
from wavemine.encoding import Endpoint, encode

FLS = [("A", "hi"), ("A", "lo"), ("B", "hi"), ("B", "lo"), ("C", "hi"), ("C", "lo")]
SEV = {fl: "high" for fl in FLS}


def ep(feature: str, level: str, kind: str) -> Endpoint:
    return Endpoint(feature, level, kind == "-")


def seq_from_intervals(pid, intervals, event, sev=None):
    return encode(pid, [StateInterval(*iv) for iv in intervals], sev or SEV, event)


def random_db(rng: random.Random, n_pat=8, waves=5, fls=None):
    """Random guarded db built through the real encode path.

    Same-feature intervals never overlap; adjacent intervals carry different
    levels, matching what abstraction produces from real series.
    """
    fls = fls or FLS
    sev = {fl: "high" for fl in fls}
    events = [True, False]
    while len(events) < n_pat:
        events.append(rng.random() < 0.5)
    rng.shuffle(events)
    seqs = []
    for i in range(n_pat):
        intervals = []
        for feat in sorted({f for f, _ in fls}):
            levels = [l for f, l in fls if f == feat]
            w = 1
            prev_level = None
            while w <= waves:
                if rng.random() < 0.5:
                    span = rng.randint(0, min(2, waves - w))
                    choices = [l for l in levels if l != prev_level] or levels
                    level = rng.choice(choices)
                    intervals.append(StateInterval(feat, level, w, w + span))
                    w += span + 1
                    if rng.random() < 0.5:
                        w += 1
                        prev_level = None
                    else:
                        prev_level = level
                else:
                    w += 1
                    prev_level = None
        seqs.append(encode(f"p{i:02d}", intervals, sev, events[i]))
    return seqs


def result_fingerprint(results):
    """Canonical comparison form: key plus exact 2x2 counts, in result order."""
    return [
        (r.pattern.key(), r.stats.a, r.stats.b, r.stats.c, r.stats.d) for r in results
    ]
