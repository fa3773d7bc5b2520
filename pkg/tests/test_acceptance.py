"""Acceptance gate: every primary criterion at its stated tolerance.

Each criterion prints one PASS/FAIL line (run with `pytest -s` to see them
live).  The two desk-scale training runs dominate the wall time; their
checkpoints and traces are cached under $CUDI_CKPT_CACHE when set, keyed by
config and corpus fingerprint, so repeat runs skip straight to evaluation.
"""

import csv
import hashlib
import importlib
import json
import os
import pkgutil
import sys
from pathlib import Path

import numpy as np
import pytest

import cudi
from cudi import autodiff as ad
from cudi.autodiff import Tensor
from cudi.bench import count_flops, mse, pcc, region_mean_error, time_op
from cudi.curves import (analytic_tangent, apply_high_order, apply_tangent,
                         curve_adjust_graph, tangent_adjust_graph)
from cudi.exposure import sample_training_map, uniform_map
from cudi.losses import (color_constancy_loss, distill_loss,
                         illumination_smoothness_loss, spatial_consistency_loss,
                         spatial_exposure_control_loss, teacher_total_loss)
from cudi.networks import (Student, Teacher, TeacherConfig, load_student,
                           load_teacher, save_checkpoint)
from cudi.training import desk_scale_config, distill_student, train_teacher

TEACHER_STEPS = 2000
STUDENT_STEPS = 3000
RUN_SEED = 11


def report(name: str, ok: bool, detail: str = ""):
    line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f"  [{detail}]"
    print(line, flush=True)
    assert ok, line


# -- desk-scale fixtures ------------------------------------------------------

def _fingerprint(corpus_dir: Path, tag: str) -> str:
    h = hashlib.sha256()
    h.update(cudi.__version__.encode())
    h.update(tag.encode())
    for p in sorted(Path(corpus_dir).glob("*.png")):
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


def _cache_dir() -> Path | None:
    root = os.environ.get("CUDI_CKPT_CACHE")
    return Path(root) if root else None


def _load_rows(path: Path) -> list[list[float]]:
    with open(path) as f:
        reader = csv.reader(f)
        next(reader)
        return [[float(v) for v in row] for row in reader]


@pytest.fixture(scope="module")
def desk_teacher(corpus_dir, tmp_path_factory):
    cfg = desk_scale_config(str(corpus_dir), steps=TEACHER_STEPS, seed=RUN_SEED)
    tag = f"teacher-{cfg.steps}-{cfg.seed}-{cfg.teacher_width}-{cfg.patch_size}"
    key = _fingerprint(corpus_dir, tag)
    cache = _cache_dir()
    if cache is not None:
        ckpt, trace = cache / f"{key}.ckpt", cache / f"{key}.csv"
        if ckpt.exists() and trace.exists():
            return load_teacher(str(ckpt)), _load_rows(trace), cfg
        cache.mkdir(parents=True, exist_ok=True)
        teacher, rows = train_teacher(cfg, out_path=ckpt, trace_path=trace, log_every=200)
        return teacher, rows, cfg
    work = tmp_path_factory.mktemp("teacher")
    teacher, rows = train_teacher(cfg, out_path=work / "t.ckpt", log_every=200)
    return teacher, rows, cfg


@pytest.fixture(scope="module")
def desk_student(desk_teacher, corpus_dir, tmp_path_factory):
    teacher, _, _ = desk_teacher
    cfg = desk_scale_config(str(corpus_dir), steps=STUDENT_STEPS, seed=RUN_SEED)
    # "id1" marks the identity-line init protocol; stale caches never match
    tag = f"student-id1-{cfg.steps}-{cfg.seed}-{TEACHER_STEPS}"
    key = _fingerprint(corpus_dir, tag)
    cache = _cache_dir()
    frozen_before = [p.data.copy() for p in teacher.params]
    if cache is not None:
        ckpt, trace = cache / f"{key}.ckpt", cache / f"{key}.csv"
        if ckpt.exists() and trace.exists():
            return load_student(str(ckpt)), _load_rows(trace), teacher, frozen_before
        cache.mkdir(parents=True, exist_ok=True)
        student, rows = distill_student(teacher, cfg, out_path=ckpt, trace_path=trace,
                                        log_every=200)
        return student, rows, teacher, frozen_before
    work = tmp_path_factory.mktemp("student")
    student, rows = distill_student(teacher, cfg, out_path=work / "s.ckpt", log_every=200)
    return student, rows, teacher, frozen_before


def _teacher_output(teacher, image, emap):
    return apply_high_order(image, teacher.estimate_curve_params(image, emap))


def _student_output(student, image, emap, clamp=False):
    slope, intercept = student.estimate_tangent(image, emap)
    out = slope * image + intercept
    return np.clip(out, 0, 1) if clamp else out


# -- criteria -----------------------------------------------------------------

def test_curve_closure_and_monotonicity():
    rng = np.random.default_rng(0)
    n = 10_000
    img = rng.uniform(0, 1, n).astype(np.float32)
    params = rng.uniform(-1, 1, (8, n)).astype(np.float32)
    out = apply_high_order(img, params)
    closed = bool(out.min() >= 0.0 and out.max() <= 1.0)

    lo = rng.uniform(0, 1, n).astype(np.float32)
    hi = np.minimum(1.0, lo + rng.uniform(0, 1, n)).astype(np.float32)
    mono_params = rng.uniform(-1, 1, (8, n)).astype(np.float32)
    mono = bool((apply_high_order(lo, mono_params)
                 <= apply_high_order(hi, mono_params)).all())
    report("curve closure & monotonicity (10^4 samples)", closed and mono,
           f"closed={closed} monotone={mono}")


def test_tangent_oracle():
    rng = np.random.default_rng(1)
    worst_gap = 0.0
    for _ in range(100):
        img = rng.uniform(0, 1, (3, 16, 16)).astype(np.float32)
        params = rng.uniform(-1, 1, (8, 3, 16, 16)).astype(np.float32)
        maps = analytic_tangent(img, params)
        gap = np.abs(apply_tangent(img, maps) - apply_high_order(img, params)).max()
        worst_gap = max(worst_gap, float(gap))
    tangency_ok = worst_gap <= 1e-5

    # second-order remainder: fit the curvature bound once, hold across seeds
    from test_curves import second_order_constant
    bound = second_order_constant()
    remainder_ok = True
    for seed in (2, 3):
        rng = np.random.default_rng(seed)
        img = rng.uniform(0.1, 0.9, 3000).astype(np.float32)
        params = rng.uniform(-1, 1, (8, 3000)).astype(np.float32)
        maps = analytic_tangent(img, params)
        for delta in (-0.05, -0.02, 0.02, 0.05):
            shifted = np.clip(img + delta, 0, 1).astype(np.float32)
            d = shifted - img
            gap = np.abs((maps.slope * shifted + maps.intercept)
                         - apply_high_order(shifted, params))
            remainder_ok &= bool((gap <= bound * d * d + 1e-5).all())
    report("tangent oracle (tangency <= 1e-5, remainder O(d^2))",
           tangency_ok and remainder_ok,
           f"max tangency gap {worst_gap:.2e}, C={bound:.1f}")


def test_gradient_suite():
    from test_autodiff import kink_free
    rng = np.random.default_rng(4)
    errs = {}

    p = Tensor.param(kink_free(rng, (4, 5)))
    q = Tensor.param(kink_free(rng, (4, 5)))
    op_losses = {
        "add": lambda: ad.tsum(ad.square(p + q)),
        "sub": lambda: ad.tsum(ad.square(p - q)),
        "mul": lambda: ad.tsum(p * q),
        "abs": lambda: ad.tsum(ad.absval(p - 0.7)),
        "relu": lambda: ad.tsum(ad.square(ad.relu(p - 0.7))),
        "tanh": lambda: ad.tsum(ad.square(ad.tanh(p))),
        "mean": lambda: ad.square(ad.mean(p)),
        "sum": lambda: ad.square(ad.tsum(p) * 0.1),
        "slice": lambda: ad.tsum(ad.square(ad.slice_axis(p, 0, 1, 3))),
        "concat": lambda: ad.tsum(ad.square(ad.concat([p, q], 0))),
    }
    for name, fn in op_losses.items():
        errs[name] = ad.gradient_check(fn, [p, q], probe_count=20, rng=rng)

    x = Tensor.param(rng.uniform(0.3, 1.3, (2, 4, 8, 8)).astype(np.float32))
    w3 = Tensor.param(rng.uniform(0.1, 0.5, (4, 4, 3, 3)).astype(np.float32))
    wd = Tensor.param(rng.uniform(0.1, 0.5, (4, 1, 3, 3)).astype(np.float32))
    w1 = Tensor.param(rng.uniform(0.1, 0.5, (6, 4, 1, 1)).astype(np.float32))
    errs["conv3x3"] = ad.gradient_check(
        lambda: ad.tsum(ad.square(ad.conv2d(x, w3))), [x, w3], probe_count=30, rng=rng)
    errs["conv_depthwise"] = ad.gradient_check(
        lambda: ad.tsum(ad.square(ad.conv2d(x, wd, groups=4))), [x, wd],
        probe_count=30, rng=rng)
    errs["conv_pointwise"] = ad.gradient_check(
        lambda: ad.tsum(ad.square(ad.conv2d(x, w1))), [x, w1], probe_count=30, rng=rng)
    errs["resize_down"] = ad.gradient_check(
        lambda: ad.tsum(ad.square(ad.bilinear_resize(x, 0.25))), x, probe_count=20, rng=rng)
    errs["resize_up"] = ad.gradient_check(
        lambda: ad.tsum(ad.square(ad.bilinear_resize(x, 4.0))), x, probe_count=20, rng=rng)
    errs["avg_pool"] = ad.gradient_check(
        lambda: ad.tsum(ad.square(ad.avg_pool(x, 4))), x, probe_count=20, rng=rng)

    from test_losses import checkerboard_maps
    result = Tensor.param(rng.uniform(0.2, 0.8, (3, 32, 32)).astype(np.float32))
    source = Tensor.const(rng.uniform(0.2, 0.8, (3, 32, 32)).astype(np.float32))
    emap = Tensor.const(rng.uniform(0.3, 0.7, (1, 32, 32)).astype(np.float32))
    maps = Tensor.param(checkerboard_maps(rng, (24, 32, 32)))
    loss_cases = {
        "loss_sec": (lambda: spatial_exposure_control_loss(result, emap), [result]),
        "loss_sc": (lambda: spatial_consistency_loss(result, source), [result]),
        "loss_cc": (lambda: color_constancy_loss(result), [result]),
        "loss_is": (lambda: illumination_smoothness_loss(maps), [maps]),
        "loss_distill": (lambda: distill_loss(result, source), [result]),
    }
    for name, (fn, ps) in loss_cases.items():
        errs[name] = ad.gradient_check(fn, ps, probe_count=20, rng=rng)

    unit_ok = max(errs.values()) <= 1e-3

    # Composed teacher objective through the full graph on a 4x16x16 input,
    # in two parts.  Part 1 runs the pinned gradient_check protocol (random
    # coordinates, 1e-3 step) at a smooth operating point: balanced positive
    # weights keep every relu strictly active, so the step-limited oracle is
    # not corrupted by kink crossings (at a random-init state the crossings
    # alone exceed 1e-2 relative for any correct implementation; see the
    # fine-step evidence below).  Part 2 keeps the standard random init and
    # checks unrestricted random coordinates against a fine-step float64
    # oracle at a tighter bound, covering both relu branches.
    from cudi.training import training_loss_config
    loss_cfg = training_loss_config(16)
    img_t = Tensor.const(rng.uniform(0.1, 0.9, (1, 3, 16, 16)).astype(np.float32))
    emap_t = Tensor.const(rng.uniform(0.3, 0.7, (1, 1, 16, 16)).astype(np.float32))

    smooth = Teacher(TeacherConfig(width=0.1), seed=2)
    for p in smooth.params:
        if p.data.ndim == 4:
            fan_in = p.data.shape[1] * p.data.shape[2] * p.data.shape[3]
            p.data = (np.abs(p.data) / np.abs(p.data).mean() / fan_in * 1.1
                      ).astype(np.float32)
        else:
            p.data = np.full_like(p.data, 0.01)

    def smooth_loss():
        pm = smooth.forward(img_t, emap_t)
        return teacher_total_loss(curve_adjust_graph(img_t, pm),
                                  img_t, emap_t, pm, loss_cfg)[0]

    composed = ad.gradient_check(smooth_loss, smooth.params, probe_count=25, rng=rng)
    grads = np.concatenate([np.abs(p.grad.ravel()) for p in smooth.params])
    live = float(np.median(grads)) > 1e-3   # guards against a saturated state

    teacher = Teacher(TeacherConfig(width=0.1), seed=2)

    def teacher_loss():
        pm = teacher.forward(img_t, emap_t)
        return teacher_total_loss(curve_adjust_graph(img_t, pm),
                                  img_t, emap_t, pm, loss_cfg)[0]

    loss = teacher_loss()
    teacher.zero_grad()
    ad.backward(loss)
    analytic = [p.grad.copy() for p in teacher.params]
    originals = [p.data for p in teacher.params]
    for p in teacher.params:
        p.data = p.data.astype(np.float64)
    try:
        fine = 0.0
        sizes = [p.data.size for p in teacher.params]
        for _ in range(20):
            flat = int(rng.integers(sum(sizes)))
            pi = 0
            while flat >= sizes[pi]:
                flat -= sizes[pi]
                pi += 1
            p = teacher.params[pi]
            orig = p.data.flat[flat]
            p.data.flat[flat] = orig + 1e-6
            lp = float(teacher_loss().data)
            p.data.flat[flat] = orig - 1e-6
            lm = float(teacher_loss().data)
            p.data.flat[flat] = orig
            fd = (lp - lm) / 2e-6
            an = float(analytic[pi].flat[flat])
            fine = max(fine, abs(an - fd) / max(abs(an), abs(fd), 1e-6))
    finally:
        for p, d in zip(teacher.params, originals):
            p.data = d
    composed_ok = composed <= 1e-2 and fine <= 1e-3 and live
    report("gradient suite (ops+losses <= 1e-3, composed teacher <= 1e-2)",
           unit_ok and composed_ok,
           f"worst unit {max(errs.values()):.2e} composed {composed:.2e} "
           f"fine-step {fine:.2e}")


def test_hand_computed_loss_values():
    checks = []

    result = Tensor.const(np.full((3, 16, 16), 0.7, dtype=np.float32))
    emap = Tensor.const(np.full((1, 16, 16), 0.5, dtype=np.float32))
    checks.append(abs(float(spatial_exposure_control_loss(result, emap).data) - 0.2))

    img = np.empty((3, 8, 8), dtype=np.float32)
    img[0], img[1], img[2] = 0.5, 0.3, 0.1
    checks.append(abs(float(color_constancy_loss(Tensor.const(img)).data) - 0.24))

    maps = np.zeros((3, 2, 2), dtype=np.float32)
    maps[0] = [[0, 1], [0, 1]]
    checks.append(abs(float(illumination_smoothness_loss(Tensor.const(maps)).data) - 4.0))

    source = np.full((3, 8, 4), 0.2, dtype=np.float32)
    shifted = source.copy()
    shifted[:, 4:, :] = 0.6
    checks.append(abs(float(spatial_consistency_loss(
        Tensor.const(shifted), Tensor.const(source)).data) - 0.16))

    a = Tensor.const(np.array([0.2, 0.8], dtype=np.float32))
    b = Tensor.const(np.array([0.3, 0.6], dtype=np.float32))
    checks.append(abs(float(distill_loss(a, b).data) - 0.15))

    worst = max(checks)
    report("hand-computed loss values (0.2, 0.24, 4, 0.16, 0.15)", worst <= 1e-6,
           f"worst abs deviation {worst:.2e}")


def test_flop_ratio():
    ratio = count_flops("iterative", 1024, 1024) / count_flops("linear", 1024, 1024)
    table_ratios = (1.699e9 / 0.106e9, 6.796e9 / 0.425e9)
    ok = ratio == 16.0 and all(abs(t - 16.0) <= 0.1 for t in table_ratios)
    report("flop ratio iterative/linear at n=8 == 16.0 (table-consistent)", ok,
           f"ratio={ratio} table={table_ratios[0]:.3f},{table_ratios[1]:.3f}")


def test_runtime_gap():
    it = time_op("iterative", 2048, 2048, repetitions=5, threads=1)
    lin = time_op("linear", 2048, 2048, repetitions=5, threads=1)
    gap = it["median_ns"] / lin["median_ns"]
    report("runtime gap at 2048^2 single thread (>= 4x)", gap >= 4.0,
           f"iterative {it['median_ns'] / 1e6:.1f} ms vs linear "
           f"{lin['median_ns'] / 1e6:.1f} ms -> {gap:.1f}x")


def test_desk_scale_teacher(desk_teacher, held_out_images):
    teacher, rows, cfg = desk_teacher
    totals = [r[1] for r in rows]
    decile = max(1, len(totals) // 10)
    first, last = float(np.mean(totals[:decile])), float(np.mean(totals[-decile:]))
    loss_ok = last < first

    _, under, _ = held_out_images
    errors = []
    for img in under:
        emap = uniform_map(0.65, img.shape[1], img.shape[2])
        errors.append(region_mean_error(_teacher_output(teacher, img, emap), emap))
    region_ok = float(np.mean(errors)) <= 0.1

    mono_ok = True
    for img in under:
        means = []
        for e in (0.3, 0.5, 0.7):
            emap = uniform_map(e, img.shape[1], img.shape[2])
            means.append(float(_teacher_output(teacher, img, emap).mean()))
        mono_ok &= means[0] <= means[1] + 0.02 and means[1] <= means[2] + 0.02
    report("desk-scale step 1 (loss decline, region error <= 0.1, exposure "
           "monotonicity)", loss_ok and region_ok and mono_ok,
           f"loss {first:.3f}->{last:.3f}, mean region err {np.mean(errors):.3f}, "
           f"monotone={mono_ok}")


def test_desk_scale_student(desk_student, held_out_images):
    student, rows, teacher, _ = desk_student
    l1s = [r[1] for r in rows]
    decile = max(1, len(l1s) // 10)
    trained_ok = float(np.mean(l1s[-decile:])) < float(np.mean(l1s[:decile]))

    # similarity protocol mirrors the published one: underexposed images get
    # the brightening preset, overexposed ones the darkening preset, plus a
    # random two-valued map per image
    _, under, over = held_out_images
    cases = [(img, 0.65) for img in under] + [(img, 0.2) for img in over]
    gaps, pccs = [], []
    for i, (img, preset) in enumerate(cases):
        h, w = img.shape[1], img.shape[2]
        for emap in (uniform_map(preset, h, w), sample_training_map(h, w, seed=100 + i)):
            t_out = _teacher_output(teacher, img, emap)
            s_out = _student_output(student, img, emap)
            gaps.append(float(np.abs(s_out - t_out).mean()))
            pccs.append(pcc(s_out, t_out))
    l1_ok = float(np.mean(gaps)) <= 0.05
    pcc_ok = float(np.mean(pccs)) >= 0.95
    report("desk-scale step 2 (held-out L1 <= 0.05, PCC >= 0.95)",
           trained_ok and l1_ok and pcc_ok,
           f"held-out L1 {np.mean(gaps):.4f}, PCC mean {np.mean(pccs):.4f} "
           f"min {min(pccs):.4f}, trace {np.mean(l1s[:decile]):.4f}->"
           f"{np.mean(l1s[-decile:]):.4f}")


def test_frozen_teacher_and_determinism(desk_student, corpus_dir, tmp_path):
    student, _, teacher, frozen_before = desk_student
    frozen_ok = all(b.tobytes() == p.data.tobytes()
                    for b, p in zip(frozen_before, teacher.params))

    cfg = desk_scale_config(str(corpus_dir), steps=25, seed=99)
    t1, r1 = train_teacher(cfg)
    t2, r2 = train_teacher(cfg)
    det_ok = r1 == r2 and all(a.data.tobytes() == b.data.tobytes()
                              for a, b in zip(t1.params, t2.params))

    path = tmp_path / "round.ckpt"
    save_checkpoint(teacher, path)
    loaded = load_teacher(str(path))
    round_ok = all(a.data.tobytes() == b.data.tobytes()
                   for a, b in zip(teacher.params, loaded.params))
    save_checkpoint(student, tmp_path / "s.ckpt")
    s_loaded = load_student(str(tmp_path / "s.ckpt"))
    round_ok &= all(a.data.tobytes() == b.data.tobytes()
                    for a, b in zip(student.params, s_loaded.params))
    report("frozen teacher, training determinism, checkpoint round trip "
           "(all bit-exact)", frozen_ok and det_ok and round_ok,
           f"frozen={frozen_ok} deterministic={det_ok} roundtrip={round_ok}")


def test_runs_without_studio_ui():
    # the python suite must not touch the browser frontend in any way
    ui_modules = [name for name in sys.modules if "frontend" in name or "studio" in name]
    for modinfo in pkgutil.iter_modules(cudi.__path__):
        importlib.import_module(f"cudi.{modinfo.name}")
    report("primary suite independent of the studio UI", not ui_modules,
           f"loaded ui modules: {ui_modules or 'none'}")


def test_secondary_painted_region_roundtrip(desk_student, held_out_images):
    """[SECONDARY] painting a region to 0.7 and requesting adjustment over the
    service surface yields a painted-region brightness within 0.15 of 0.7.
    (The UI-side debounce and stale-discard contracts live in frontend vitest.)
    """
    from fastapi.testclient import TestClient
    from cudi.imageio import decode_rgb, encode_gray_png, encode_rgb_png
    from cudi.service import STATS_HEADER, create_app

    student = desk_student[0]
    _, under, _ = held_out_images
    img = under[0]
    h, w = img.shape[1], img.shape[2]

    # paint a rectangular region to 0.7 over a 0.5 background, quantized to
    # 8 bits exactly as the studio canvas does
    painted = np.full((h, w), 0.5, dtype=np.float32)
    y0, y1, x0, x1 = h // 8, h // 8 + h // 2, w // 8, w // 8 + w // 2
    painted[y0:y1, x0:x1] = 0.7
    map_u8 = np.floor(np.clip(painted, 0, 1) * 255 + 0.5).astype(np.uint8)

    client = TestClient(create_app(student))
    r = client.post("/v1/adjust",
                    files={"image": ("in.png", encode_rgb_png(img), "image/png"),
                           "map": ("map.png", encode_gray_png(map_u8), "image/png")},
                    data={"engine": "student", "exposure_mode": "map"})
    assert r.status_code == 200
    stats = json.loads(r.headers[STATS_HEADER])
    out = decode_rgb(r.content)
    region_mean = float(out[:, y0:y1, x0:x1].mean())
    ok = abs(region_mean - 0.7) <= 0.15
    report("[SECONDARY] painted-region round trip via service "
           "(|region mean - 0.7| <= 0.15)", ok,
           f"painted-region mean {region_mean:.3f}, server stats {stats}")
