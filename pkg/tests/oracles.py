"""Independent reference implementations used only by tests.

Everything here is a literal transcription of the scoring definitions in
plain Python loops over the math module. Nothing imports engine code, so
an engine bug cannot hide in a shared helper; only dataclass fields are
read.
"""
from __future__ import annotations

import math


# ---------------------------------------------------------------------------
# CAS


def naive_cas(p, g=(0.0, 0.25, 0.5, 0.75, 1.0)):
    total = 0.0
    for i in range(5):
        total += float(p[i]) * float(g[i])
    return total


# ---------------------------------------------------------------------------
# Motion amplitude (visible active points), shared by MSS/PAS transcriptions


def naive_amplitudes(trajectories, frame_count):
    """[(mean displacement, visible point count)] per transition t=1..T-1."""
    out = []
    for t in range(1, frame_count):
        total = 0.0
        n = 0
        for traj in trajectories:
            if not traj.active:
                continue
            n_points = traj.points.shape[1]
            for k in range(n_points):
                if bool(traj.visible[t - 1][k]) and bool(traj.visible[t][k]):
                    dx = float(traj.points[t][k][0]) - float(traj.points[t - 1][k][0])
                    dy = float(traj.points[t][k][1]) - float(traj.points[t - 1][k][1])
                    total += math.hypot(dx, dy)
                    n += 1
        out.append((total / n if n else 0.0, n))
    return out


# ---------------------------------------------------------------------------
# MSS


def naive_mss(quality, tau_base, amplitude_coeff=0.0, trajectories=()):
    q = [float(v) for v in quality]
    t_count = len(q)
    amps = naive_amplitudes(trajectories, t_count)
    violations = 0
    for t in range(1, t_count):
        drop = q[t - 1] - q[t]
        if amplitude_coeff > 0.0:
            tau = tau_base * (1.0 + amplitude_coeff * amps[t - 1][0])
        else:
            tau = tau_base
        if drop > tau:
            violations += 1
    return 1.0 - violations / t_count


# ---------------------------------------------------------------------------
# OIS


def _naive_length(positions, t, i, j):
    dx = float(positions[t][i][0]) - float(positions[t][j][0])
    dy = float(positions[t][i][1]) - float(positions[t][j][1])
    return math.hypot(dx, dy)


def _naive_angle(positions, t, i, j, k):
    """Angle at j in [0, pi]; None when a bounding vector is degenerate."""
    ux = float(positions[t][i][0]) - float(positions[t][j][0])
    uy = float(positions[t][i][1]) - float(positions[t][j][1])
    vx = float(positions[t][k][0]) - float(positions[t][j][0])
    vy = float(positions[t][k][1]) - float(positions[t][j][1])
    nu = math.hypot(ux, uy)
    nv = math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        return None
    cos = (ux * vx + uy * vy) / (nu * nv)
    cos = max(-1.0, min(1.0, cos))
    return math.acos(cos)


def naive_ois_counts(track, schema, tau_length, tau_angle):
    """(compliant, observed) cells for one keypoint track."""
    t_count = track.positions.shape[0]
    compliant = 0
    observed = 0

    for c, (i, j) in enumerate(schema.length_components):
        if schema.reference_lengths is not None:
            ref = float(schema.reference_lengths[c])
        else:
            ref = None
            for t in range(t_count):
                if bool(track.visibility[t][i]) and bool(track.visibility[t][j]):
                    candidate = _naive_length(track.positions, t, i, j)
                    if candidate > 0.0:
                        ref = candidate
                        break
        if ref is None or ref <= 0.0:
            continue
        for t in range(1, t_count):
            vis_prev = bool(track.visibility[t - 1][i]) and bool(track.visibility[t - 1][j])
            vis_now = bool(track.visibility[t][i]) and bool(track.visibility[t][j])
            if not (vis_prev and vis_now):
                continue
            dev = abs(
                _naive_length(track.positions, t, i, j)
                - _naive_length(track.positions, t - 1, i, j)
            ) / ref
            observed += 1
            if dev <= tau_length:
                compliant += 1

    for (i, j, k) in schema.angle_components:
        for t in range(1, t_count):
            vis_prev = all(bool(track.visibility[t - 1][m]) for m in (i, j, k))
            vis_now = all(bool(track.visibility[t][m]) for m in (i, j, k))
            if not (vis_prev and vis_now):
                continue
            prev = _naive_angle(track.positions, t - 1, i, j, k)
            now = _naive_angle(track.positions, t, i, j, k)
            if prev is None or now is None:
                continue
            observed += 1
            if abs(now - prev) <= tau_angle:
                compliant += 1

    return compliant, observed


def naive_ois(tracks, schemas_by_id, tau_length, tau_angle):
    """Pooled over tracks; None when nothing is observed."""
    compliant = 0
    observed = 0
    for track in tracks:
        c, o = naive_ois_counts(track, schemas_by_id[track.schema_id], tau_length, tau_angle)
        compliant += c
        observed += o
    if observed == 0:
        return None
    return compliant / observed


# ---------------------------------------------------------------------------
# PAS


def naive_pas(trajectories, tau, frame_count):
    if not any(traj.active for traj in trajectories):
        return None
    total = 0.0
    for mean, count in naive_amplitudes(trajectories, frame_count):
        if count > 0:
            total += min(mean / tau, 1.0)
    return total / frame_count


# ---------------------------------------------------------------------------
# TCS


def naive_presence_events(present):
    flags = [bool(v) for v in present]
    if True not in flags:
        return []
    first = flags.index(True)
    events = []
    for t in range(1, len(flags)):
        if flags[t] == flags[t - 1]:
            continue
        if flags[t]:
            if t == first:
                continue  # initial appearance
            events.append((t, "appear"))
        else:
            events.append((t, "disappear"))
    return events


def _naive_occlusion(inst, t, kind, instances, cover_fraction):
    if kind == "disappear":
        box = inst.bbox[t - 1]
        frame = t
    else:
        box = inst.bbox[t]
        frame = t - 1
    area = (box[2] - box[0]) * (box[3] - box[1])
    if area <= 0.0:
        return False
    for other in instances:
        if other.object_id == inst.object_id:
            continue
        if not bool(other.present[frame]):
            continue
        ob = other.bbox[frame]
        iw = min(box[2], ob[2]) - max(box[0], ob[0])
        ih = min(box[3], ob[3]) - max(box[1], ob[1])
        inter = max(0.0, iw) * max(0.0, ih)
        if inter / area >= cover_fraction:
            return True
    return False


def _naive_boundary(inst, t, kind, width, height, margin_fraction):
    margin = margin_fraction * min(width, height)
    size = len(inst.present)
    if kind == "disappear":
        if t - 2 < 0 or not bool(inst.present[t - 2]):
            return False
        cx, cy = inst.centroid[t - 1]
        px, py = inst.centroid[t - 2]
        vx = cx - px
        vy = cy - py
        if cx <= margin and vx < 0.0:
            return True
        if cx >= width - margin and vx > 0.0:
            return True
        if cy <= margin and vy < 0.0:
            return True
        if cy >= height - margin and vy > 0.0:
            return True
        return False
    if t + 1 >= size or not bool(inst.present[t + 1]):
        return False
    cx, cy = inst.centroid[t]
    nx, ny = inst.centroid[t + 1]
    vx = nx - cx
    vy = ny - cy
    if cx <= margin and vx > 0.0:
        return True
    if cx >= width - margin and vx < 0.0:
        return True
    if cy <= margin and vy > 0.0:
        return True
    if cy >= height - margin and vy < 0.0:
        return True
    return False


def _naive_depth(inst, t, kind, width, height, depth_window, min_area_fraction):
    small = min_area_fraction * width * height
    size = len(inst.present)
    if kind == "disappear":
        end = t - 1
        start = end
        while start - 1 >= 0 and bool(inst.present[start - 1]):
            start -= 1
        window = min(depth_window, end - start + 1)
        if window < 2:
            return False
        areas = [float(inst.area[s]) for s in range(end - window + 1, end + 1)]
        for a, b in zip(areas, areas[1:]):
            if not a > b:
                return False
        return areas[-1] < small
    start = t
    end = start
    while end + 1 < size and bool(inst.present[end + 1]):
        end += 1
    window = min(depth_window, end - start + 1)
    if window < 2:
        return False
    areas = [float(inst.area[s]) for s in range(start, start + window)]
    for a, b in zip(areas, areas[1:]):
        if not a < b:
            return False
    return areas[0] < small


def naive_excused(
    inst,
    event,
    instances,
    width,
    height,
    cover_fraction=0.5,
    boundary_margin_fraction=0.05,
    depth_window=5,
    min_area_fraction=0.002,
):
    t, kind = event
    if _naive_occlusion(inst, t, kind, instances, cover_fraction):
        return True
    if _naive_boundary(inst, t, kind, width, height, boundary_margin_fraction):
        return True
    return _naive_depth(inst, t, kind, width, height, depth_window, min_area_fraction)


def naive_tcs(
    instances,
    width,
    height,
    cover_fraction=0.5,
    boundary_margin_fraction=0.05,
    depth_window=5,
    min_area_fraction=0.002,
):
    if not instances:
        return None
    anomalous = 0
    for inst in instances:
        events = naive_presence_events(inst.present)
        bad = False
        for event in events:
            if not naive_excused(
                inst,
                event,
                instances,
                width,
                height,
                cover_fraction,
                boundary_margin_fraction,
                depth_window,
                min_area_fraction,
            ):
                bad = True
                break
        if bad:
            anomalous += 1
    return 1.0 - anomalous / len(instances)


# ---------------------------------------------------------------------------
# Rank statistics


def naive_ranks(values):
    """Average ranks, O(n^2) by direct counting."""
    n = len(values)
    ranks = []
    for i in range(n):
        less = 0
        equal = 0
        for j in range(n):
            if values[j] < values[i]:
                less += 1
            elif values[j] == values[i]:
                equal += 1
        ranks.append(less + (equal + 1) / 2.0)
    return ranks


def naive_spearman(x, y):
    rx = naive_ranks([float(v) for v in x])
    ry = naive_ranks([float(v) for v in y])
    n = len(rx)
    sx = sum(rx)
    sy = sum(ry)
    sxx = sum(v * v for v in rx)
    syy = sum(v * v for v in ry)
    sxy = sum(a * b for a, b in zip(rx, ry))
    num = n * sxy - sx * sy
    den = math.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))
    return num / den


def spearman_closed_form(x, y):
    """Tie-free shortcut 1 - 6*sum(d^2)/(n(n^2-1))."""
    rx = naive_ranks([float(v) for v in x])
    ry = naive_ranks([float(v) for v in y])
    n = len(rx)
    d2 = sum((a - b) ** 2 for a, b in zip(rx, ry))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


def naive_quantile(samples, q):
    """Linear interpolation between order statistics."""
    data = sorted(float(v) for v in samples)
    n = len(data)
    if n == 1:
        return data[0]
    pos = q * (n - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return data[int(pos)]
    frac = pos - lo
    return data[lo] * (1.0 - frac) + data[hi] * frac
