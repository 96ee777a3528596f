"""Acceptance criteria, one test each; the summary prints a PASS/FAIL line per test."""
import math
import time

import numpy as np
import pytest

from semsub import io
from semsub.boundary import controllability_check, normalize_boundaries
from semsub.cli import main
from semsub.matrix import orthonormality_residual
from semsub.metrics import pearson_abs
from semsub.solver import (
    SolverConfig,
    SolveState,
    aidc_solve,
    aidc_step,
    evaluate_objective,
    init_state,
    project_nonneg,
    solve_procrustes,
    solve_variant,
    update_p,
    update_w,
)
from semsub.synth import PlantedModel, brute_force_procrustes, edit_correlation, generate, haar_frames

ALPHAS = (0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0)
LAMBDAS = (1.0, 2.0, 4.0, 5.0)
# frozen from the first run on the rho = 0 planted instance below
PINNED_FINAL_J_SPREAD = 83.99776125550389


def unit_columns(a):
    return a / np.linalg.norm(a, axis=0)


def random_instance(seed, m, k, n):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((m, n)) / np.sqrt(n)
    s = unit_columns(rng.standard_normal((m, k)))
    return z, s


def planted(rho):
    return generate(PlantedModel(rho=rho, noise_sigma=1e-3, seed=0), 64, 5, 5000)


@pytest.mark.criterion("monotone descent")
def test_monotone_descent(verdict):
    start = time.perf_counter()
    worst = -np.inf
    for seed in range(50):
        z, s = random_instance(seed, 64, 5, 500)
        start_state = init_state(z, s, SolverConfig())
        for alpha in ALPHAS:
            for lam in LAMBDAS:
                cfg = SolverConfig(alpha=alpha, lam=lam)
                j = aidc_solve(z, s, cfg, initial=start_state).trace.objectives
                worst = max(worst, float(np.max(np.diff(j))))
    elapsed = time.perf_counter() - start
    verdict(worst <= 1e-9 and elapsed < 60.0,
            f"max step increase {worst:.3e} (<= 1e-9) over 1400 traces in {elapsed:.1f}s (< 60s)")


@pytest.mark.criterion("block optimality oracles")
def test_block_oracles(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    margins, probe_gain, proj_gap = [], np.inf, np.inf
    for t in range(20):
        a = rng.standard_normal((8, 3))
        _, best = brute_force_procrustes(a, 10_000, seed=t)
        margins.append(np.trace(a.T @ solve_procrustes(a)) - best)

        w = solve_procrustes(rng.standard_normal((8, 3)))
        z = rng.standard_normal((8, 6))
        p = update_p(w, z)
        base = np.sum((z - w @ p) ** 2)
        for idx in np.ndindex(p.shape):
            for step in (1e-3, -1e-3):
                probe = p.copy()
                probe[idx] += step
                probe_gain = min(probe_gain, np.sum((z - w @ probe) ** 2) - base)

        w = rng.standard_normal((8, 3))
        f = project_nonneg(w)
        cands = np.abs(rng.standard_normal((10_000, 8, 3))) * rng.uniform(0, 2, (10_000, 1, 1))
        cand_dist = np.sqrt(np.sum((w - cands) ** 2, axis=(1, 2)))
        proj_gap = min(proj_gap, cand_dist.min() - np.linalg.norm(w - f))
    elapsed = time.perf_counter() - start
    ok = min(margins) >= -1e-9 and probe_gain >= 0 and proj_gap >= 0 and elapsed < 30.0
    verdict(ok, f"procrustes margin {min(margins):.3e}, probe gain {probe_gain:.3e}, "
                f"projection gap {proj_gap:.3e}, {elapsed:.1f}s (< 30s)")


def frame_objectives(frames, z, p, f, s, alpha, lam):
    fit = z[None] - np.einsum("tij,jn->tin", frames, p)
    return (np.sum(fit ** 2, axis=(1, 2)) + alpha * np.sum((frames - f) ** 2, axis=(1, 2))
            - lam * np.sum((frames - s) ** 2, axis=(1, 2)))


@pytest.mark.criterion("procrustes equivalence of the W-step")
def test_w_step_equivalence(verdict):
    rng = np.random.default_rng(2)
    worst = np.inf
    for t in range(20):
        m, k, n = 6, 2, 8
        z = rng.standard_normal((m, n))
        p = rng.standard_normal((k, n))
        f = np.abs(rng.standard_normal((m, k)))
        s = unit_columns(rng.standard_normal((m, k)))
        alpha, lam = rng.uniform(0.1, 5.0), rng.uniform(1.0, 5.0)
        w = update_w(z, SolveState(w=np.zeros((m, k)), p=p, f=f), s, alpha, lam)
        j_star = evaluate_objective(z, SolveState(w, p, f), s, alpha, lam)
        frames = haar_frames(rng, m, k, 5000)
        values = frame_objectives(frames, z, p, f, s, alpha, lam)
        check = evaluate_objective(z, SolveState(frames[0], p, f), s, alpha, lam)
        assert values[0] == pytest.approx(check, rel=1e-12)
        worst = min(worst, float(values.min() - j_star))
    verdict(worst >= -1e-9, f"min over 20 x 5000 frames of J(frame) - J(W*) = {worst:.3e} (>= -1e-9)")


@pytest.mark.criterion("constraint satisfaction")
def test_constraints(verdict, tmp_path):
    ortho, min_f, s_dev = 0.0, np.inf, 0.0
    for seed in range(10):
        data = generate(PlantedModel(rho=0.2 * (seed % 4), noise_sigma=1e-2, seed=seed), 32, 4, 300)
        s_dev = max(s_dev, float(np.max(np.abs(np.linalg.norm(data.boundaries.s, axis=0) - 1.0))))
        for variant in ("full", "no_boundary", "no_nonneg"):
            for init in ("svd", "random"):
                cfg = SolverConfig(variant=variant, init_mode=init, seed=seed)
                st = solve_variant(data.z, data.boundaries.s, cfg).state
                ortho = max(ortho, orthonormality_residual(st.w))
                min_f = min(min_f, float(st.f.min()))
        raw = np.random.default_rng(seed).standard_normal((32, 4)) * 10.0 ** np.arange(4)
        s_dev = max(s_dev, float(np.max(np.abs(np.linalg.norm(normalize_boundaries(raw).s, axis=0) - 1.0))))
    assert main(["synth", "--out-dir", str(tmp_path), "--m", "32", "--n", "200", "--k", "4"]) == 0
    assert main(["solve", "--config", str(tmp_path / "manifest.txt"), "--out", str(tmp_path / "w.ufmx"),
                 "--f-out", str(tmp_path / "f.ufmx")]) == 0
    ortho = max(ortho, orthonormality_residual(io.read_matrix(tmp_path / "w.ufmx")))
    min_f = min(min_f, float(io.read_matrix(tmp_path / "f.ufmx").min()))
    verdict(ortho < 1e-8 and min_f >= 0.0 and s_dev <= 1e-10,
            f"max ||W^T W - I|| {ortho:.2e} (< 1e-8), min F {min_f:.1e} (>= 0), "
            f"max | ||s|| - 1 | {s_dev:.1e} (<= 1e-10)")


@pytest.mark.criterion("correlation metric pinning")
def test_pearson_pinning(verdict):
    pinned = abs(pearson_abs([1, 2, 3], [1, 1, 2]) - math.sqrt(3) / 2)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        x, y = rng.standard_normal(40), rng.standard_normal(40)
        a, b = rng.choice([-1, 1], 2) * rng.uniform(0.01, 100, 2)
        c, d = rng.uniform(-100, 100, 2)
        worst = max(worst, abs(pearson_abs(a * x + c, b * y + d) - pearson_abs(x, y)))
    verdict(pinned <= 1e-12 and worst <= 1e-12,
            f"|r - sqrt(3)/2| = {pinned:.1e}, max invariance error {worst:.1e} (both <= 1e-12)")


@pytest.mark.criterion("ablation ordering")
def test_ablation_ordering(verdict):
    start = time.perf_counter()
    data = planted(0.4)
    corr = {}
    for variant in ("full", "no_boundary", "no_nonneg"):
        w = solve_variant(data.z, data.boundaries.s, SolverConfig(variant=variant)).state.w
        corr[variant] = edit_correlation(data.z, w, data.scorers).overall_avg
    elapsed = time.perf_counter() - start
    ok = corr["full"] < corr["no_boundary"] and corr["full"] < corr["no_nonneg"] and elapsed < 120.0
    detail = ", ".join(f"{k} {v:.4f}" for k, v in corr.items())
    verdict(ok, f"avg corr {detail}; {elapsed:.1f}s (< 120s)")


@pytest.mark.criterion("sensitivity stability")
def test_sensitivity(verdict):
    data = planted(0.0)
    corrs, finals = [], []
    for alpha in ALPHAS:
        for lam in LAMBDAS:
            res = aidc_solve(data.z, data.boundaries.s, SolverConfig(alpha=alpha, lam=lam))
            corrs.append(edit_correlation(data.z, res.state.w, data.scorers).overall_avg)
            finals.append(res.trace.objectives[-1])
    spread = max(corrs) - min(corrs)
    j_spread = max(finals) - min(finals)
    pinned = j_spread == pytest.approx(PINNED_FINAL_J_SPREAD, rel=1e-6)
    verdict(spread < 0.1 and pinned,
            f"avg corr spread {spread:.4f} (< 0.1), final-J spread {j_spread:.6f} "
            f"(pinned {PINNED_FINAL_J_SPREAD:.6f})")


def per_iteration_seconds(m, repeats=5, sweeps=10):
    z, s = random_instance(7, m, 5, 1000)
    state = init_state(z, s, SolverConfig())
    best = np.inf
    for _ in range(repeats):
        st = state
        start = time.perf_counter()
        for _ in range(sweeps):
            st = aidc_step(z, st, s, 0.5, 1.0)
        best = min(best, (time.perf_counter() - start) / sweeps)
    return best


@pytest.mark.criterion("complexity scaling")
def test_complexity_scaling(verdict):
    times = [per_iteration_seconds(m) for m in (64, 128, 256, 512)]
    ratios = [b / a for a, b in zip(times, times[1:])]
    ok = all(3.0 <= r <= 6.0 for r in ratios)
    verdict(ok, "per-iteration time ratios per doubling of m: "
                + ", ".join(f"{r:.2f}" for r in ratios) + " (each in [3, 6])")


@pytest.mark.criterion("controllability inequality")
def test_controllability(verdict):
    rng = np.random.default_rng(4)
    betas = [1.0, 1.1, 1.5, 2.0, 3.0]
    worst = np.inf
    for _ in range(1000):
        w, s = rng.standard_normal(16), rng.standard_normal(16)
        dists = [d for _, d in controllability_check(w / np.linalg.norm(w), s / np.linalg.norm(s), betas)]
        worst = min(worst, float(np.min(np.diff(dists))))
    verdict(worst > 0.0, f"smallest consecutive distance gain over 1000 pairs {worst:.3e} (> 0)")


@pytest.mark.criterion("determinism")
def test_determinism(verdict, tmp_path):
    assert main(["synth", "--out-dir", str(tmp_path), "--m", "48", "--n", "300", "--rho", "0.3",
                 "--noise", "0.01"]) == 0
    outputs = []
    for tag in ("a", "b"):
        w, tr = tmp_path / f"w_{tag}.ufmx", tmp_path / f"trace_{tag}.csv"
        assert main(["solve", "--config", str(tmp_path / "manifest.txt"), "--init", "random",
                     "--seed", "123", "--out", str(w), "--trace", str(tr)]) == 0
        outputs.append((w.read_bytes(), tr.read_bytes()))
    same = outputs[0] == outputs[1]
    verdict(same, "two cmd_solve runs produce byte-identical W and trace" if same else "outputs differ")


@pytest.mark.criterion("format round-trip")
def test_format_roundtrip(verdict, tmp_path):
    rng = np.random.default_rng(5)
    binary_bad = csv_bad = 0
    for t in range(100):
        a = rng.standard_normal(tuple(rng.integers(1, 20, 2))) * 10.0 ** rng.integers(-300, 300)
        a.flat[0] = [-0.0, 5e-324, 1.7976931348623157e308, 1.0 / 3.0][t % 4]
        io.write_matrix(tmp_path / "m.ufmx", a)
        io.write_matrix(tmp_path / "m.csv", a)
        binary_bad += io.read_matrix(tmp_path / "m.ufmx").tobytes() != a.tobytes()
        csv_bad += not np.array_equal(io.read_matrix(tmp_path / "m.csv"), a)
    verdict(binary_bad == 0 and csv_bad == 0,
            f"100 matrices: {binary_bad} UFMX bit mismatches, {csv_bad} CSV value mismatches")
