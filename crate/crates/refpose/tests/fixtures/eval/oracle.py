#!/usr/bin/env python3
"""Builds the 10-image evaluation fixture and its expected metrics.

Run from this directory:  python3 oracle.py
Writes cameras.txt, poses_ref.txt, poses_est.txt, inliers.txt,
uncertainty.txt and expected.json.  Only numpy is required; nothing here
shares code with the Rust implementation.
"""

import json

import numpy as np

W, H = 640, 480
FX, FY, CX, CY = 500.0, 510.0, 320.0, 240.0
K1, K2, P1, P2 = -0.05, 0.01, 0.001, -0.0005

POSE_THRESHOLDS = [(0.25, 2.0), (0.5, 5.0), (5.0, 10.0)]
REPROJ_THRESHOLDS = [10.0, 20.0, 50.0, 100.0]

# (position error m, rotation error deg) applied to each reference pose
PERTURBATIONS = [
    (0.05, 0.5),
    (0.2, 1.5),
    (0.3, 1.0),
    (0.1, 3.0),
    (0.45, 4.5),
    (1.0, 2.0),
    (4.0, 9.0),
    (6.0, 3.0),
    (0.01, 0.05),
    (20.0, 170.0),
]
SOURCES = [("sampling", 0.5), ("sampling", 0.3), ("sampling", 0.1),
           ("first-order", None), ("monte-carlo", None)]

rng = np.random.default_rng(20240611)


def rodrigues(v):
    theta = np.linalg.norm(v)
    if theta == 0.0:
        return np.eye(3)
    k = v / theta
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(theta) * kx + (1 - np.cos(theta)) * kx @ kx


def random_unit():
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def quat_from_matrix(r):
    # Shepperd's method, then w >= 0
    t = np.trace(r)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(1.0 + r[i, i] - r[j, j] - r[k, k]) * 2
        q = [0.0] * 4
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    q = np.array(q)
    q /= np.linalg.norm(q)
    return q if q[0] >= 0 else -q


def matrix_from_quat(q):
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def w2c_line(name, r_c2w, center):
    # x_c = R^T (x_w - c)  ->  q of R^T, t = -R^T c
    r = r_c2w.T
    q = quat_from_matrix(r)
    t = -r @ center
    return name + " " + " ".join(repr(float(v)) for v in [*q, *t])


def read_w2c(line):
    f = line.split()
    r = matrix_from_quat(np.array([float(v) for v in f[1:5]]))
    t = np.array([float(v) for v in f[5:8]])
    return f[0], r.T, -r.T @ t


def distort(x, y):
    r2 = x * x + y * y
    radial = 1 + K1 * r2 + K2 * r2 * r2
    return (x * radial + 2 * P1 * x * y + P2 * (r2 + 2 * x * x),
            y * radial + P1 * (r2 + 2 * y * y) + 2 * P2 * x * y)


def project(p, r_c2w, center):
    pc = r_c2w.T @ (p - center)
    if pc[2] <= 1e-6:
        return None
    xd, yd = distort(pc[0] / pc[2], pc[1] / pc[2])
    return np.array([FX * xd + CX, FY * yd + CY])


def main():
    names = [f"img{i:02d}" for i in range(10)]
    refs, ests, inliers = {}, {}, {}
    for name, (dpos, drot) in zip(names, PERTURBATIONS):
        r = rodrigues(random_unit() * rng.uniform(0, np.pi))
        c = rng.uniform(-10, 10, size=3)
        refs[name] = (r, c)
        # large turns go about the camera x axis so the estimate faces away
        axis = np.array([1.0, 0.0, 0.0]) if drot > 90 else random_unit()
        r_est = r @ rodrigues(axis * np.radians(drot))
        c_est = c + random_unit() * dpos
        ests[name] = (r_est, c_est)
        pts = []
        for _ in range(20):
            z = rng.uniform(3, 30)
            x, y = rng.uniform(-0.6, 0.6), rng.uniform(-0.45, 0.45)
            pts.append(r @ np.array([x * z, y * z, z]) + c)
        inliers[name] = pts

    with open("cameras.txt", "w") as f:
        f.write(f"camera-v1 default PINHOLE_RT {W} {H} {FX!r} {FY!r} {CX!r} {CY!r} "
                f"{K1!r} {K2!r} {P1!r} {P2!r}\n")
    for fname, table in [("poses_ref.txt", refs), ("poses_est.txt", ests)]:
        with open(fname, "w") as f:
            f.write("poses-v1 convention=w2c\n")
            for name in names:
                f.write(w2c_line(name, *table[name]) + "\n")
    with open("inliers.txt", "w") as f:
        f.write("corr-v1\n")
        for name in names:
            for p in inliers[name]:
                u = project(p, *refs[name])
                f.write(name + " " + " ".join(repr(float(v)) for v in [*u, *p]) + "\n")
    unc = {}
    with open("uncertainty.txt", "w") as f:
        f.write("uncertainty-v1\n")
        for name in names:
            for method, k in SOURCES:
                pos, rot = rng.uniform(0.02, 2.0), rng.uniform(0.1, 10.0)
                unc[(name, method, k)] = (pos, rot)
                f.write(f"{name} {method} {'-' if k is None else k} {pos!r} {rot!r}\n")

    # Evaluate from the files as written, so the expected values see the
    # same rounded inputs as the implementation.
    def load(fname):
        with open(fname) as f:
            return dict((n, (r, c)) for n, r, c in
                        (read_w2c(l) for l in f.read().splitlines()[1:]))

    refs, ests = load("poses_ref.txt"), load("poses_est.txt")
    images = []
    for name in names:
        (r0, c0), (r1, c1) = refs[name], ests[name]
        pos = float(np.linalg.norm(c0 - c1))
        cosang = np.clip((np.trace(r0.T @ r1) - 1) / 2, -1.0, 1.0)
        rot = float(np.degrees(np.arccos(cosang)))
        worst = 0.0
        for p in inliers[name]:
            a, b = project(p, r0, c0), project(p, r1, c1)
            if a is None or b is None:
                worst = float("inf")
                break
            worst = max(worst, float(np.linalg.norm(a - b)))
        images.append({"name": name, "position_err": pos, "rotation_err": rot,
                       "max_reprojection_px": None if worst == float("inf") else worst})

    def pct(n):
        return 100.0 * n / len(images)

    pose_acc = [pct(sum(1 for im in images if im["position_err"] < c and im["rotation_err"] < r))
                for c, r in POSE_THRESHOLDS]
    per_image = {}
    for method, k in SOURCES:
        key = method if k is None else f"sampling-{k}"
        per_image[key] = pct(sum(
            1 for im in images
            if im["position_err"] < unc[(im["name"], method, k)][0]
            and im["rotation_err"] < unc[(im["name"], method, k)][1]))
    reproj = [pct(sum(1 for im in images
                      if im["max_reprojection_px"] is not None and im["max_reprojection_px"] < t))
              for t in REPROJ_THRESHOLDS]
    with open("expected.json", "w") as f:
        json.dump({"images": images, "pose_accuracy": pose_acc,
                   "per_image_accuracy": per_image, "reprojection_accuracy": reproj},
                  f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
