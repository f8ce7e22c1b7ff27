"""Pure-numpy fallback for the feasibility scan kernel.

Same contract as the compiled ``_scan.scan``: vectorizes the trailing (up
to three) tuple slots and walks the leading slots with an odometer; blocks
are merged in odometer order, so results are deterministic regardless of
the thread count (numpy releases the GIL inside the vector ops).
"""

import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def _residual_masks(ops, eps):
    """Feasibility mask for broadcast operands ops[0..m-1]."""
    m = len(ops)
    if m == 1:
        return ops[0] - 1.0 <= eps
    mask = (2.0 * (ops[0] - 1.0) - (1.0 - 1.0 / ops[1])) <= eps
    for j in range(1, m - 1):
        r = -ops[j] * (ops[j - 1] - 1.0) + 2.0 * (ops[j] - 1.0) \
            - (1.0 - 1.0 / ops[j + 1])
        mask = mask & (r <= eps)
    r = -ops[m - 1] * (ops[m - 2] - 1.0) + 2.0 * (ops[m - 1] - 1.0)
    return mask & (r <= eps)


def _block_stats(head, values, m, eps, max_record):
    v = values
    k = m - len(head)  # vectorized slots, 1..3
    ops = list(head)
    shapes = {1: [(-1,)], 2: [(-1, 1), (1, -1)], 3: [(-1, 1, 1), (1, -1, 1), (1, 1, -1)]}
    for s in shapes[k]:
        ops.append(v.reshape(s))
    mask = _residual_masks(ops, eps)
    stats = {
        "feasible": int(np.count_nonzero(mask)),
        "max_feasible_coord": -1.0,
        "max_feasible_coord_below_near1": -1.0,
        "near1_count": 0,
        "near1_delta": 0.0,
        "near1_tuples": [],
        "counterexamples": [],
    }
    if not stats["feasible"]:
        return stats
    bops = np.broadcast_arrays(*ops)
    tup_max = np.maximum.reduce(bops)
    dev = np.maximum.reduce([np.abs(o - 1.0) for o in bops])
    feas_max = np.where(mask, tup_max, -np.inf)
    stats["max_feasible_coord"] = float(np.max(feas_max))
    near1 = mask & (tup_max >= 1.0 - eps)
    below = mask & ~near1
    if np.any(below):
        stats["max_feasible_coord_below_near1"] = float(np.max(tup_max[below]))
    nn = int(np.count_nonzero(near1))
    stats["near1_count"] = nn
    if nn:
        stats["near1_delta"] = float(np.max(dev[near1]))
        where = np.argwhere(near1)[:max_record]
        for w in where:
            tail = tuple(float(v[i]) for i in w)
            stats["near1_tuples"].append(tuple(head) + tail)
    cx = mask & (tup_max > 1.0 + eps)
    if np.any(cx):
        where = np.argwhere(cx)[:max_record]
        for w in where:
            tail = tuple(float(v[i]) for i in w)
            stats["counterexamples"].append(tuple(head) + tail)
    return stats


def scan(values, m, eps, max_record=200, threads=1):
    values = np.ascontiguousarray(values, dtype=float)
    K = len(values)
    total = K ** m
    k = 1
    for j in (2, 3):
        if j <= m and K ** j <= 4_000_000:
            k = j
    heads = itertools.product(*([values.tolist()] * (m - k)))
    agg = {
        "tuples": int(total),
        "feasible": 0,
        "max_feasible_coord": -1.0,
        "max_feasible_coord_below_near1": -1.0,
        "near1_count": 0,
        "near1_delta": 0.0,
        "near1_tuples": [],
        "counterexamples": [],
    }

    def work(head):
        return _block_stats(list(head), values, m, eps, max_record)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = ex.map(work, heads, chunksize=16)
            blocks = results
    else:
        blocks = map(work, heads)
    for st in blocks:
        agg["feasible"] += st["feasible"]
        agg["max_feasible_coord"] = max(agg["max_feasible_coord"],
                                        st["max_feasible_coord"])
        agg["max_feasible_coord_below_near1"] = max(
            agg["max_feasible_coord_below_near1"],
            st["max_feasible_coord_below_near1"])
        agg["near1_count"] += st["near1_count"]
        agg["near1_delta"] = max(agg["near1_delta"], st["near1_delta"])
        room = max_record - len(agg["near1_tuples"])
        if room > 0:
            agg["near1_tuples"].extend(st["near1_tuples"][:room])
        room = max_record - len(agg["counterexamples"])
        if room > 0:
            agg["counterexamples"].extend(st["counterexamples"][:room])
    return agg
