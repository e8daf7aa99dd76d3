"""Independent reference implementations used by unit and acceptance tests."""
import numpy as np

from motiongroup.grouping import check_conditions, passes_noise_floor
from motiongroup.saliency import SaliencyParams, distance_weight


def naive_saliency(seg, phi, params=SaliencyParams()):
    """Plain double loop over region pairs."""
    dims = (seg.label_map.width, seg.label_map.height)
    n = len(seg.regions)
    out = []
    for i in range(n):
        total = 0.0
        for j in range(n):
            if i != j:
                w = distance_weight(seg.regions[i], seg.regions[j], dims, params.weight_mode)
                total += abs(phi[i] - phi[j]) / 180.0 * w
        out.append(total / (n - 1) if params.normalize_by_region_count and n > 1 else total)
    return np.array(out)


def fixpoint(seed, adjacency, sigs, params, exclude=()):
    """Grow by repeated full passes until nothing changes (size guard off)."""
    members = {seed}
    if not passes_noise_floor(sigs[seed], params):
        return members
    changed = True
    while changed:
        changed = False
        for r in range(len(sigs)):
            if r in members or r in exclude:
                continue
            if not any(nb in members for nb in adjacency[r]):
                continue
            if check_conditions(sigs[seed], sigs[r], 0, None, params)[0]:
                members.add(r)
                changed = True
    return members


def random_graph(rng, n):
    adj = [set() for _ in range(n)]
    p = rng.uniform(0.15, 0.6)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                adj[i].add(j)
                adj[j].add(i)
    # snap some angles near 90 so the noise floor matters
    sigs = rng.uniform(0, 180, size=(n, 2))
    quiet = rng.random((n, 2)) < 0.3
    sigs[quiet] = 90 + rng.uniform(-12, 12, size=quiet.sum())
    return adj, sigs, rng.integers(1, 60, size=n)


def pixel_count_rates(m, gt, theta):
    """Per-pixel loop over the image."""
    tp = fp = n_pos = n_neg = 0
    for v, g in zip(m.ravel().tolist(), gt.ravel().tolist()):
        pred = v > theta
        if g:
            n_pos += 1
            tp += pred
        else:
            n_neg += 1
            fp += pred
    return (tp / n_pos if n_pos else 1.0), (fp / n_neg if n_neg else 0.0)
