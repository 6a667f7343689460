"""Regenerates the frozen reference values used by the C++ unit tests.

Every number here comes from an implementation that shares no code with
the library: shapely for polygon geometry, numpy/OpenCV for homography
estimation, scipy for distance transforms, scikit-learn for mixtures.
Run with `python3 tests/oracle/make_oracles.py` and paste the output into
the matching test files if a definition ever changes.
"""

import math

import cv2
import numpy as np
from scipy import ndimage
from shapely.geometry import Point, Polygon, box
from sklearn.mixture import GaussianMixture

HL, HW = 52.5, 34.0
R_CC = 9.15
PA_D, PA_W = 16.5, 40.32
GA_D, GA_W = 5.5, 18.32
SPOT = 11.0

# Camera homographies shared with test_geometry.cpp / test_eval.cpp.
H_CAM = [
    [0.015377501451566369, 0.013956104989754033, 0.93539436339705839,
     -8.4261082961968785e-06, 2.6963546547829366e-05, 0.35299391591479978,
     -5.4274233606996102e-06, 1.7367754754238754e-05, 0.0011994605627146139],
    [0.064661118417183083, 0.0013591215529495332, -0.16850370739498216,
     0.00036547149579859594, 0.00099408246857218027, 0.98357228024602494,
     1.6957081368972517e-05, 4.6123261323605251e-05, 0.002835224004892205],
    [0.022899522494141185, 0.0089540413720328241, 0.88134385744893717,
     3.0984795500121735e-05, 0.00025175146343848836, 0.47183143577337722,
     2.9735325605629249e-06, 2.4159952054573765e-05, 0.001863661532332813],
]
FRAME = (960, 540)


def circle(cx, cy, r):
    return Point(cx, cy).buffer(r, quad_segs=8192)


def zones():
    """Zone geometry built directly from the marking dimensions."""
    field = box(-HL, -HW, HL, HW)
    cc = circle(0, 0, R_CC)
    z = {}
    for side, (gid, pid, aid) in ((-1, (0, 2, 4)), (1, (1, 3, 5))):
        x0, x1 = sorted((side * HL, side * (HL - GA_D)))
        ga = box(x0, -GA_W / 2, x1, GA_W / 2)
        x0, x1 = sorted((side * HL, side * (HL - PA_D)))
        pa = box(x0, -PA_W / 2, x1, PA_W / 2)
        arc = circle(side * (HL - SPOT), 0, R_CC).difference(pa)
        z[gid], z[pid], z[aid] = ga, pa.difference(ga), arc
    z[6] = cc.intersection(box(-HL, -HW, 0, HW))
    z[7] = cc.intersection(box(0, -HW, HL, HW))
    taken = z[0]
    for k in range(1, 8):
        taken = taken.union(z[k])
    for side, base in ((-1, 8), (1, 12)):
        half = box(-HL, -HW, 0, HW) if side < 0 else box(0, -HW, HL, HW)
        rest = half.difference(taken)
        z[base] = rest.intersection(box(-HL, PA_W / 2, HL, HW))
        z[base + 1] = rest.intersection(box(-HL, -HW, HL, -PA_W / 2))
        band = rest.intersection(box(-HL, -PA_W / 2, HL, PA_W / 2))
        z[base + 2] = band.intersection(box(-HL, 0, HL, HW))
        z[base + 3] = band.intersection(box(-HL, -HW, HL, 0))
    return field, z


def zone_oracle():
    field, z = zones()
    print("// zone areas (m^2), ids 0..15")
    print(", ".join("%.6f" % z[i].area for i in range(16)))
    print("// total", sum(z[i].area for i in range(16)), "field", field.area)
    pts = [(-50.0, 0.0), (-40.0, 5.0), (-34.0, 3.0), (-5.0, 1.0), (5.0, -1.0),
           (-20.0, 30.0), (-20.0, -30.0), (-20.0, 10.0), (-20.0, -10.0),
           (20.0, 30.0), (20.0, -30.0), (20.0, 10.0), (20.0, -10.0),
           (48.0, -2.0), (40.0, 19.0), (35.0, 4.0)]
    print("// zone_at oracle (interior points)")
    for p in pts:
        ids = [i for i in range(16) if z[i].contains(Point(p))]
        assert len(ids) == 1, (p, ids)
        print("{{%.1f, %.1f}, %d}," % (p[0], p[1], ids[0]))


def half_plane(a, b, c, big=1e4):
    """Polygon for a*x + b*y + c >= 0, clipped to a large box."""
    # Sutherland-Hodgman on a big square against one half-plane.
    sq = [(-big, -big), (big, -big), (big, big), (-big, big)]
    out = []
    for i in range(4):
        p, q = sq[i], sq[(i + 1) % 4]
        fp = a * p[0] + b * p[1] + c
        fq = a * q[0] + b * q[1] + c
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return Polygon(out) if len(out) >= 3 else Polygon()


def visible_polygon(h, frame):
    """{p in field : H p lands in the image with w > 0}, as half-planes."""
    h = np.asarray(h, float).reshape(3, 3)
    w_, h_ = frame
    r0, r1, r2 = h
    v = box(-HL, -HW, HL, HW)
    eps_scale = 1e-9
    for a in (r2 - 0 * r0,):
        v = v.intersection(half_plane(a[0], a[1], a[2] - eps_scale))
    v = v.intersection(half_plane(*r0))                    # u >= 0
    v = v.intersection(half_plane(*(w_ * r2 - r0)))        # u <= W
    v = v.intersection(half_plane(*r1))                    # v >= 0
    v = v.intersection(half_plane(*(h_ * r2 - r1)))        # v <= H
    return v


def visible_oracle():
    print("// visible polygon areas (m^2)")
    for h in H_CAM:
        print("%.9f" % visible_polygon(h, FRAME).area)


def map_poly(m, pts):
    out = []
    for x, y in pts:
        q = m @ np.array([x, y, 1.0])
        out.append((q[0] / q[2], q[1] / q[2]))
    return out


def iou_oracle():
    rect = box(-HL, -HW, HL, HW)
    corners = [(-HL, -HW), (HL, -HW), (HL, HW), (-HL, HW)]
    perturbations = [
        np.array([[1.01, 0.002, 3.0], [-0.001, 0.99, -2.0], [1e-6, 0.0, 1.0]]),
        np.array([[0.98, 0.0, -6.0], [0.0, 1.02, 4.0], [0.0, -2e-6, 1.0]]),
    ]
    print("// iou_pair oracle: gt = H_CAM[i], pred = P_j * gt")
    for i, hv in enumerate(H_CAM):
        gt = np.asarray(hv).reshape(3, 3)
        vis = visible_polygon(hv, FRAME)
        for j, p in enumerate(perturbations):
            pred = p @ gt
            m = np.linalg.inv(gt) @ pred
            ws = [(m @ np.array([x, y, 1.0]))[2] for x, y in corners]
            assert all(w > 0 for w in ws) or all(w < 0 for w in ws)
            mr = Polygon(map_poly(m, corners))
            entire = rect.intersection(mr).area / rect.union(mr).area
            inside = mr.intersection(vis)
            part = vis.intersection(inside).area / vis.union(inside).area
            print("{%d, %d, %.12f, %.12f}," % (i, j, entire, part))


def hartley_dlt(field, image):
    def normalizer(p):
        c = p.mean(axis=0)
        d = np.sqrt(((p - c) ** 2).sum(axis=1)).mean()
        s = math.sqrt(2) / d
        return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1]])

    tf, ti = normalizer(field), normalizer(image)
    rows = []
    for (x, y), (u, v) in zip(field, image):
        a = tf @ [x, y, 1]
        b = ti @ [u, v, 1]
        x, y, u, v = a[0], a[1], b[0], b[1]
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    _, _, vt = np.linalg.svd(np.array(rows))
    h = vt[-1].reshape(3, 3)
    h = np.linalg.inv(ti) @ h @ tf
    h /= np.linalg.norm(h)
    if h[2, 2] < 0:
        h = -h
    return h


def dlt_oracle():
    field = np.array([[-52.5, -34], [52.5, -34], [52.5, 34], [-52.5, 34],
                      [0.0, 0.0], [-36.0, 20.16]])
    gt = np.asarray(H_CAM[0]).reshape(3, 3)
    image = np.array(map_poly(gt, field))
    image += np.array([[0.4, -0.3], [-0.5, 0.2], [0.1, 0.6], [-0.2, -0.4],
                       [0.3, 0.3], [-0.6, 0.1]])
    print("// DLT on 6 perturbed pairs (numpy, Hartley-normalized)")
    print("image points:")
    print(",\n".join("{%.17g, %.17g}" % tuple(p) for p in image))
    print("H:", ", ".join("%.17g" % v for v in hartley_dlt(field, image).ravel()))
    # OpenCV on the first four pairs (exact solve).
    h4, _ = cv2.findHomography(field[:4], image[:4], 0)
    h4 /= np.linalg.norm(h4)
    print("H4 (cv2):", ", ".join("%.17g" % v for v in h4.ravel()))


def edt_oracle():
    mask = np.zeros((9, 12), bool)
    mask[2, 3] = mask[6, 9] = mask[4, 0] = True
    mask[8, 5:8] = True
    d2 = ndimage.distance_transform_edt(~mask) ** 2
    print("// squared EDT, 12x9 mask")
    print(", ".join(str(int(round(v))) for v in d2.ravel()))


def splitmix(state):
    mask = (1 << 64) - 1
    while True:
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        yield z ^ (z >> 31)


def gaussian_stream(seed):
    g = splitmix(seed)
    while True:
        u1 = (next(g) >> 11) * 2.0 ** -53
        u2 = (next(g) >> 11) * 2.0 ** -53
        yield math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


def gmm_samples(seed=42, d=8, per=100, spacing=12.0):
    centers = np.zeros((3, d))
    centers[1, 0] = spacing
    centers[2, 1] = spacing
    g = gaussian_stream(seed)
    x = [centers[k] + np.array([next(g) for _ in range(d)]) for k in range(3) for _ in range(per)]
    return np.array(x), centers


def gmm_oracle():
    x, centers = gmm_samples()
    bics = {}
    models = {}
    for k in range(1, 6):
        gm = GaussianMixture(k, covariance_type="diag", reg_covar=1e-12, tol=1e-10,
                             max_iter=2000, n_init=20, random_state=0).fit(x)
        bics[k] = gm.bic(x)
        models[k] = gm
    best = min(bics, key=bics.get)
    print("// GMM: BIC per K", {k: round(v, 6) for k, v in bics.items()}, "best", best)
    means = models[best].means_
    order = np.lexsort((means[:, 1], means[:, 0]))
    print("// means sorted by (x0, x1)")
    for m in means[order]:
        print("{" + ", ".join("%.10f" % v for v in m) + "},")
    print("// BIC(K=3) %.6f" % bics[3])
    emp = np.array([x[k * 100:(k + 1) * 100].mean(axis=0) for k in range(3)])
    print("// max |mean - truth| / sigma over clusters and coordinates: %.4f"
          % np.abs(emp - centers).max())


def ap_reference(preds, gts, label, margin):
    """Greedy nearest-unmatched matching, all-point precision envelope."""
    gt = [g for g in gts if g[0] == label]
    if not gt:
        return None
    ps = [(i, p) for i, p in enumerate(preds) if p[0] == label]
    ps.sort(key=lambda ip: (-ip[1][4], ip[1][1], ip[0]))
    used = [False] * len(gt)
    tp = []
    for _, (lab, t, half, game, conf) in ps:
        best, bd = None, None
        for gi, (glab, gt_t, ghalf, ggame) in enumerate(gt):
            if used[gi] or ghalf != half or ggame != game:
                continue
            d = abs(gt_t - t)
            if d <= margin and (bd is None or d < bd):
                best, bd = gi, d
        if best is not None:
            used[best] = True
        tp.append(best is not None)
    prec, rec, hits = [], [], 0
    for n, hit in enumerate(tp, 1):
        hits += hit
        prec.append(hits / n)
        rec.append(hits / len(gt))
    ap, prev_r = 0.0, 0.0
    for i in range(len(prec)):
        env = max(prec[i:])
        ap += (rec[i] - prev_r) * env
        prev_r = rec[i]
    return ap


def ap_oracle():
    # (label, time_s, half, game, confidence); labels as class indices.
    gts = [(0, 10.0, 1, "g", None), (0, 50.0, 1, "g", None), (0, 90.0, 1, "g", None),
           (0, 300.0, 2, "g", None), (1, 20.0, 1, "g", None), (1, 25.0, 1, "g", None)]
    gts = [g[:4] for g in gts]
    preds = [(0, 12.0, 1, "g", 0.9), (0, 48.0, 1, "g", 0.8), (0, 200.0, 1, "g", 0.7),
             (0, 95.0, 1, "g", 0.6), (0, 301.0, 1, "g", 0.5), (0, 300.0, 2, "g", 0.4),
             (1, 22.0, 1, "g", 0.95), (1, 23.0, 1, "g", 0.3), (1, 40.0, 1, "g", 0.2)]
    print("// AP oracle: class, margin, AP")
    for label in (0, 1):
        for margin in (1.0, 3.0, 5.0, 10.0, 20.0):
            print("{%d, %.1f, %.15f}," % (label, margin, ap_reference(preds, gts, label, margin)))


def topview_oracle():
    size, margin = 224, 2.0
    sx, sy = size / (2 * HL + 2 * margin), size / (2 * HW + 2 * margin)

    def to_px(x, y):
        return (x + HL + margin) * sx, (y + HW + margin) * sy

    segs = [((-HL, -HW), (HL, -HW)), ((-HL, HW), (HL, HW)), ((-HL, -HW), (-HL, HW)),
            ((HL, -HW), (HL, HW)), ((0, -HW), (0, HW))]
    for s in (-1, 1):
        pax, gax = s * (HL - PA_D), s * (HL - GA_D)
        segs += [((s * HL, -PA_W / 2), (pax, -PA_W / 2)), ((pax, -PA_W / 2), (pax, PA_W / 2)),
                 ((pax, PA_W / 2), (s * HL, PA_W / 2)),
                 ((s * HL, -GA_W / 2), (gax, -GA_W / 2)), ((gax, -GA_W / 2), (gax, GA_W / 2)),
                 ((gax, GA_W / 2), (s * HL, GA_W / 2))]
    arcs = [((0, 0), R_CC, 0, 2 * math.pi)]
    th = math.acos((PA_D - SPOT) / R_CC)
    arcs += [((-(HL - SPOT), 0), R_CC, -th, th), ((HL - SPOT, 0), R_CC, math.pi - th, math.pi + th)]
    arcs += [((-HL, -HW), 1.0, 0, math.pi / 2), ((HL, -HW), 1.0, math.pi / 2, math.pi),
             ((HL, HW), 1.0, math.pi, 1.5 * math.pi), ((-HL, HW), 1.0, 1.5 * math.pi, 2 * math.pi)]

    cy, cx = np.mgrid[0:size, 0:size] + 0.5
    best = np.full((size, size), np.inf)
    for (ax, ay), (bx, by) in segs:
        (ax, ay), (bx, by) = to_px(ax, ay), to_px(bx, by)
        dx, dy = bx - ax, by - ay
        t = np.clip(((cx - ax) * dx + (cy - ay) * dy) / (dx * dx + dy * dy), 0, 1)
        best = np.minimum(best, np.hypot(cx - ax - t * dx, cy - ay - t * dy))
    for (ox, oy), r, a0, a1 in arcs:
        ts = np.linspace(a0, a1, 20001)
        px = np.array([to_px(ox + r * math.cos(t), oy + r * math.sin(t)) for t in ts])
        for chunk in np.array_split(px, 40):
            d = np.hypot(cx[..., None] - chunk[:, 0], cy[..., None] - chunk[:, 1]).min(axis=2)
            best = np.minimum(best, d)
    count = int((best <= 2.0).sum())
    print("// top-view line pixels (4 px strokes):", count)


if __name__ == "__main__":
    zone_oracle()
    visible_oracle()
    iou_oracle()
    dlt_oracle()
    edt_oracle()
    gmm_oracle()
    ap_oracle()
    topview_oracle()
