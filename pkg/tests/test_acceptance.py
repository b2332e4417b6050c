"""Acceptance criteria, one function per criterion.

Each ``criterion_N`` returns ``(passed, detail)``. Under pytest every
criterion prints a single ``[PASS]`` or ``[FAIL]`` line and then asserts;
``python3 tests/test_acceptance.py`` runs all of them and prints the same
lines.
"""

import math
import os
import subprocess
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import fourier_curve  # noqa: E402
from tpcurve.curve_model import ShapeSpec, arc_curve, generate, resample_arclength  # noqa: E402
from tpcurve.flow import discrete_gradient, minimize, pull_tight_experiment  # noqa: E402
from tpcurve.geometry_analysis import beta_number, beta_profile, bilipschitz_report, kappa  # noqa: E402
from tpcurve.menger import thickness, thickness_limit_check  # noqa: E402
from tpcurve.regularity import hoelder_fit, verify_main_estimate  # noqa: E402
from tpcurve.tp_energy import energy, nodes_energy, refine_energy  # noqa: E402

TWO_PI = 2 * math.pi


def _circle(m, radius=1.0):
    return arc_curve(ShapeSpec("circle", {"radius": radius}), m)


def criterion_1():
    c = _circle(512)
    t0 = time.perf_counter()
    E = energy(c, 2, exclusion_width=2).value
    dt = time.perf_counter() - t0
    rel = abs(E / TWO_PI**2 - 1)
    return rel < 0.01 and dt < 2.0, f"E={E:.6f} vs 4pi^2={TWO_PI**2:.6f}, rel err {rel:.2e}, {dt:.2f}s"


def criterion_2():
    parts, ok = [], True
    for q in (2, 3):
        base = energy(_circle(512), q).value
        for k in (2, 3):
            cover = arc_curve(ShapeSpec("k_circle", {"k": k}), 512 * k)
            ratio = energy(cover, q).value / base
            rel = abs(ratio / k**2 - 1)
            ok &= rel < 0.01
            parts.append(f"q={q} k={k} ratio {ratio:.4f} ({rel:.1e})")
    return ok, "; ".join(parts)


def criterion_3():
    square = generate(ShapeSpec("regular_polygon", {"vertices": 4}))
    levels = [64, 128, 256, 512, 1024]
    parts, ok = [], True
    for q, want in ((2, "diverging"), (3, "diverging"), (1.5, "converged")):
        r = refine_energy(square, q, levels)
        vals = np.array(r.values)
        if want == "diverging":
            good = r.verdict == want and bool(np.all(np.diff(vals) > 0)) and r.last_ratio > 1.1
        else:
            good = r.verdict == want
        ok &= good
        parts.append(f"q={q} {r.verdict} last ratio {r.last_ratio:.4f}")
    return ok, "; ".join(parts)


def criterion_4():
    parts, ok = [], True
    for a in (1.3, 1.5, 1.7):
        c = arc_curve(ShapeSpec("power_graph", {"a": a}), 100_000)
        fit = hoelder_fit(c, gap_range=(1e-3, 1e-1), pair_count=400)
        good = abs(fit.exponent - (a - 1)) <= 0.1
        ok &= good
        parts.append(f"a={a} exponent {fit.exponent:.4f}")
    return ok, "; ".join(parts)


def criterion_5():
    r256 = verify_main_estimate(_circle(256), 3, seed=0).max_ratio
    r512 = verify_main_estimate(_circle(512), 3, seed=0).max_ratio
    big = verify_main_estimate(_circle(512).scaled(7.5), 3, seed=0).max_ratio
    stable = abs(r512 / r256 - 1)
    dil = abs(big / r512 - 1)
    return stable < 0.10 and dil < 1e-6, (f"ratio m=256 {r256:.6f}, m=512 {r512:.6f} (diff {stable:.1e}); "
                                          f"dilation change {dil:.1e}")


def _brute_beta(c, i, d, n_dirs=10_000):
    x = c.nodes[i]
    diff = c.nodes - x
    pts = diff[np.linalg.norm(diff, axis=1) <= d][:, :2]
    th = np.pi * np.arange(n_dirs) / n_dirs
    u = np.column_stack([np.cos(th), np.sin(th)])
    dist = np.abs(pts[:, 0][None, :] * u[:, 1:2] - pts[:, 1][None, :] * u[:, 0:1])
    return float(dist.max(axis=1).min() / d)


def criterion_6():
    c = _circle(1024)
    scales = np.geomspace(0.5, 0.05, 8)
    prof = beta_profile(c, 4, scales)
    k = kappa(4)
    slope_ok = abs(prof.fitted_exponent - 1.0) <= 0.1 and prof.fitted_exponent > k
    worst = 0.0
    for i in (0, 137, 600):
        for d in (0.5, 0.2, 0.05):
            worst = max(worst, abs(beta_number(c, i, d) - _brute_beta(c, i, d)))
    return slope_ok and worst < 1e-3, (f"slope {prof.fitted_exponent:.4f} (kappa {k:.4f}, verdict {prof.verdict}); "
                                       f"max |beta - brute force| {worst:.1e}")


def criterion_7():
    curves = {
        "circle": _circle(512),
        "ellipse": arc_curve(ShapeSpec("ellipse", {}), 512),
        "torus_knot": arc_curve(ShapeSpec("torus_knot", {}), 512),
        "stadium": arc_curve(ShapeSpec("stadium", {}), 512),
        "perturbed_circle": arc_curve(ShapeSpec("perturbed_circle", {"amplitude": 0.2}), 512),
        "power_graph": arc_curve(ShapeSpec("power_graph", {"a": 1.5}), 512),
        "square": resample_arclength(generate(ShapeSpec("regular_polygon", {"vertices": 4})), 512),
    }
    worst_max = 0.0
    for c in curves.values():
        worst_max = max(worst_max, bilipschitz_report(c, c.length / 2).max_ratio)
    lo = bilipschitz_report(curves["circle"], 1.0).min_ratio
    want = math.sin(0.5) / 0.5
    return worst_max <= 1 + 1e-9 and abs(lo - want) < 1e-3, (
        f"max ratio over {len(curves)} curves {worst_max:.15f}; circle min {lo:.6f} vs {want:.6f}")


def criterion_8():
    q = 3.0
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    for seed in range(5):
        c = fourier_curve(seed, m=256)
        X = np.array(c.nodes)
        G = discrete_gradient(c, q).gradient
        eps = 1e-6 * c.length
        rng = np.random.default_rng(100 + seed)
        picks = rng.choice(X.size, size=20, replace=False)
        for flat in picks:
            i, k = divmod(int(flat), X.shape[1])
            Xp, Xm = X.copy(), X.copy()
            Xp[i, k] += eps
            Xm[i, k] -= eps
            fd = (nodes_energy(Xp, True, q) - nodes_energy(Xm, True, q)) / (2 * eps)
            worst = max(worst, abs(G[i, k] - fd) / abs(fd))
            checked += 1
    dt = time.perf_counter() - t0
    return worst < 1e-4 and dt < 30, f"{checked} coordinates, worst relative error {worst:.2e}, {dt:.1f}s"


def criterion_9():
    gaps = [0.2, 0.1, 0.05, 0.025, 0.0125]
    parts, ok = [], True
    for q in (2.5, 3.0):
        r = pull_tight_experiment(gaps, q)
        inc = bool(np.all(np.diff(r.energies) > 0))
        ok &= inc and r.verdict == "blow_up"
        parts.append(f"q={q} {'increasing' if inc else 'not increasing'} ({r.verdict}, slope {r.slope:.3f})")
    r = pull_tight_experiment(gaps, 1.5)
    ok &= r.verdict == "bounded"
    parts.append(f"q=1.5 {r.verdict} (limit about {r.extrapolated_limit:.4f})")
    return ok, "; ".join(parts)


def criterion_10():
    c = arc_curve(ShapeSpec("perturbed_circle", {"amplitude": 0.05, "mode": 3}), 128)
    q = 3.0
    trace = minimize(c, q, max_iters=2000, tol=1e-8)
    L = c.length
    target = L**2 / (L / TWO_PI) ** q
    rel = abs(trace.energies[-1] / target - 1)
    mono = bool(np.all(np.diff(trace.energies) <= 0))
    steps = len(trace.step_sizes)
    return rel < 0.02 and mono and steps <= 2000, (
        f"E {trace.energies[0]:.4f} -> {trace.energies[-1]:.4f} vs round {target:.4f} (rel {rel:.1e}), "
        f"{steps} steps, nonincreasing={mono}, {trace.terminated}")


def _ellipse_dense_oracle(n=400):
    """Smallest circumradius over all triples of distinct points on a dense ellipse sample."""
    th = TWO_PI * np.arange(n) / n
    P = np.column_stack([2 * np.cos(th), np.sin(th), np.zeros(n)])
    best = math.inf
    for i in range(n - 2):
        a = P[i + 1:] - P[i]
        la = np.linalg.norm(a, axis=1)
        cross = np.linalg.norm(np.cross(a[:, None, :], a[None, :, :]), axis=2)
        side = np.linalg.norm(a[:, None, :] - a[None, :, :], axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            R = la[:, None] * la[None, :] * side / (2 * cross)
        R[~(cross > 0)] = np.inf
        best = min(best, float(R.min()))
    return best


def criterion_11():
    circle = _circle(512)
    tc = thickness(circle)
    te = thickness(arc_curve(ShapeSpec("ellipse", {"a": 2.0, "b": 1.0}), 512))
    oracle = _ellipse_dense_oracle()
    rows = thickness_limit_check(circle, [4, 8, 16, 32])
    roots = [r["energy_root"] for r in rows]
    dec = bool(np.all(np.diff(roots) < 0))
    near = abs(roots[-1] * tc - 1) <= 0.15
    ok = abs(tc - 1) <= 1e-3 and abs(te - 0.5) <= 1e-2 and abs(te - oracle) <= 1e-2 and dec and near
    return ok, (f"circle {tc:.6f}; ellipse {te:.5f} (dense scan {oracle:.5f}); "
                f"E^(1/q) {', '.join(f'{v:.4f}' for v in roots)} vs 1/thickness {1 / tc:.4f}")


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "tpcurve.cli", *args], cwd=cwd, capture_output=True)


def criterion_12():
    runs = [
        ("generate", ["generate", "--shape", "torus_knot", "--samples", "256", "-o", "{out}.json"]),
        ("energy", ["energy", "--q", "3", "--m", "128", "circle.json", "-o", "{out}.json"]),
        ("refine", ["refine", "--q", "2", "--levels", "32,64,128", "square.json", "--plot", "{out}.svg",
                    "-o", "{out}.json"]),
        ("beta", ["beta", "--q", "4", "--m", "256", "--scales", "0.5:0.05:geometric:5", "--format", "csv",
                  "circle.json", "--plot", "{out}.svg", "-o", "{out}.csv"]),
        ("hoelder", ["hoelder", "--q", "3", "--m", "128", "--seed", "7", "circle.json", "-o", "{out}.json"]),
        ("inscribe", ["inscribe", "--spacing", "0.5", "circle.json", "-o", "{out}.json"]),
        ("certify", ["certify", "--q", "4", "--m", "128", "circle.json", "circle.json", "-o", "{out}.json"]),
        ("minimize", ["minimize", "--q", "3", "--m", "64", "--iters", "30", "wobbly.json", "--plot", "{out}.svg",
                      "-o", "{out}"]),
        ("pulltight", ["pulltight", "--q", "3", "--gaps", "0.4,0.3,0.2", "--m", "256", "-o", "{out}.json"]),
        ("thickness", ["thickness", "--m", "128", "circle.json", "-o", "{out}.json"]),
    ]
    with tempfile.TemporaryDirectory() as tmp:
        for name, args in (("circle", ["--shape", "circle", "--samples", "256"]),
                           ("square", ["--shape", "regular_polygon"]),
                           ("wobbly", ["--shape", "perturbed_circle", "--samples", "64"])):
            res = _cli(["generate", *args, "-o", f"{name}.json"], tmp)
            if res.returncode != 0:
                return False, f"generate {name} failed: {res.stderr.decode().strip()}"
        differing = []
        for name, args in runs:
            outputs = []
            for rep in (0, 1):
                out = f"{name}_{rep}"
                res = _cli([a.format(out=out) for a in args], tmp)
                if res.returncode != 0:
                    return False, f"{name} exited {res.returncode}: {res.stderr.decode().strip()}"
                files = {}
                for fn in sorted(os.listdir(tmp)):
                    if fn.startswith(out + ".") or fn == out:
                        path = os.path.join(tmp, fn)
                        if os.path.isdir(path):
                            for sub in sorted(os.listdir(path)):
                                with open(os.path.join(path, sub), "rb") as fh:
                                    files[f"{fn[len(out):]}/{sub}"] = fh.read()
                        else:
                            with open(path, "rb") as fh:
                                files[fn[len(out):]] = fh.read()
                files["stdout"] = res.stdout
                outputs.append(files)
            if not outputs[0] or outputs[0] != outputs[1]:
                differing.append(name)
        ok = not differing
        detail = f"{len(runs)} subcommands run twice" + ("" if ok else f"; differing: {', '.join(differing)}")
        return ok, detail


CRITERIA = {
    1: ("circle energy closed form", criterion_1),
    2: ("k-cover scaling", criterion_2),
    3: ("polygon divergence", criterion_3),
    4: ("Hoelder optimality", criterion_4),
    5: ("main estimate stability", criterion_5),
    6: ("beta decay", criterion_6),
    7: ("bi-Lipschitz", criterion_7),
    8: ("gradient oracle", criterion_8),
    9: ("self-repulsion", criterion_9),
    10: ("minimizer", criterion_10),
    11: ("thickness", criterion_11),
    12: ("determinism", criterion_12),
}


def _line(n, passed, detail):
    return f"[{'PASS' if passed else 'FAIL'}] criterion {n} ({CRITERIA[n][0]}): {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    passed, detail = CRITERIA[n][1]()
    with capsys.disabled():
        print("\n" + _line(n, passed, detail))
    assert passed, detail


if __name__ == "__main__":
    failures = 0
    for n in sorted(CRITERIA):
        passed, detail = CRITERIA[n][1]()
        failures += not passed
        print(_line(n, passed, detail), flush=True)
    sys.exit(1 if failures else 0)
