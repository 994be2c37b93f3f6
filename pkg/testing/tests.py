"""
Full-resolution acceptance runs. Each experiment is executed through the
runner and every property check it records is appended to testing/logs.txt.

    python testing/tests.py [--threads N]
"""
import argparse
import os
import sys
import time
from datetime import datetime

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from magbill.domain.gauge.gauge_function import apply_gauge, gauge_function
from magbill.domain.gauge.links import link_phases, transform_links
from magbill.domain.gauge.potential import AharonovBohm, Landau, Superposition, Symmetric
from magbill.domain.geometry.grid import build_annulus, build_disk, build_rectangle
from magbill.domain.operator.forms import boundary_form
from magbill.domain.selfadjoint1d.unitary import cayley, inverse_cayley, random_unitary
from magbill.pipeline.config import parse_config
from magbill.pipeline.runner import run

LOG_FILE = os.path.join("testing", "logs.txt")
OUT_ROOT = os.path.join("results", "acceptance")

EXPERIMENTS = {
    "interval_dirichlet": """
        [experiment]
        kind = sae1d
        [sae1d]
        n = 2000
        u = 1, 0, 0, 1
        [solver]
        k = 3
    """,
    "square_dirichlet": """
        [experiment]
        kind = solve
        [domain]
        nx = 128
        ny = 128
        [solver]
        k = 1
    """,
    "disk_dirichlet": """
        [experiment]
        kind = solve
        [domain]
        kind = disk
        nr = 128
        ntheta = 256
        [solver]
        k = 1
    """,
    "landau_b64": """
        [experiment]
        kind = landau
        [domain]
        kind = disk
        nr = 128
        ntheta = 256
        [gauge]
        B = 64
        [solver]
        k = 3
    """,
    "gauge_rectangle": """
        [experiment]
        kind = gauge_check
        [domain]
        nx = 48
        ny = 32
        a = 1.5
        [gauge]
        gauge = landau
        B = 5.0
        compare = symmetric
        [bc]
        bc = robin
        alpha = cos_perimeter
        [solver]
        k = 6
    """,
    "gauge_perturbed": """
        [experiment]
        kind = gauge_check
        [domain]
        kind = disk
        nr = 32
        ntheta = 64
        [gauge]
        gauge = symmetric
        B = 3.0
        compare = perturbed
        perturbation = 0.2
        [bc]
        bc = chiral
        alpha = 0.5
        beta = 0.3
        [solver]
        k = 6
    """,
    "flux_periodicity": """
        [experiment]
        kind = flux_sweep
        [domain]
        kind = annulus
        nr = 24
        ntheta = 96
        [gauge]
        gauge = ab
        [bc]
        bc = dirichlet
        [solver]
        k = 4
        [sweep]
        values = 0.0, 0.7853981633974483, 1.5707963267948966, 3.141592653589793, 4.71238898038469, 6.283185307179586, 7.0685834705770345
    """,
    "robin_interpolation": """
        [experiment]
        kind = robin_sweep
        [domain]
        nx = 64
        ny = 64
        [solver]
        k = 2
        [sweep]
        values = -1000, -300, -100, -30, -10, -5, -3, -2, -1, -0.5, -0.2, 0, 0.2, 0.5, 1, 2, 3, 5, 8, 10
    """,
    "chiral_instability": """
        [experiment]
        kind = chiral_sweep
        [domain]
        kind = disk
        nr = 32
        ntheta = 64
        [bc]
        alpha = 0.0
        [solver]
        k = 3
        [sweep]
        values = 0, 0.5, 1, 2, 4
    """,
    "convergence_square": """
        [experiment]
        kind = convergence
        [domain]
        nx = 16
        ny = 16
        [sweep]
        resolutions = 16, 32, 64
    """,
    "convergence_disk": """
        [experiment]
        kind = convergence
        [domain]
        kind = disk
        [sweep]
        resolutions = 16, 32, 64
    """,
    "convergence_robin": """
        [experiment]
        kind = convergence
        [domain]
        kind = disk
        [gauge]
        gauge = symmetric
        B = 2.0
        [bc]
        bc = robin
        alpha = 1.5
        [sweep]
        resolutions = 16, 32, 64, 128
    """,
    "scalar_cayley": """
        [experiment]
        kind = sae1d
        [sae1d]
        n = 2000
        theta = 0.3, 0.9, 1.5, 2.1, 2.7, 3.3, 3.9, 4.5, 5.1, 5.7
        [solver]
        k = 3
    """,
    "gauge_away": """
        [experiment]
        kind = sae1d
        [sae1d]
        n = 2000
        u = 0.6+0.8j, 0, 0, -1
        potential = sine
        amplitude = 2.0
        [solver]
        k = 4
    """,
}


def log_results(log_message):
    with open(LOG_FILE, "a") as log_file:
        log_file.write(log_message + "\n")


def _stamp():
    return datetime.now().strftime("%Y-%m-%d %H:%M:%S")


def _config_text(block):
    return "\n".join(line.strip() for line in block.strip().splitlines()) + "\n"


def run_experiment(name, block, threads):
    started = time.perf_counter()
    manifest = run(parse_config(_config_text(block)), os.path.join(OUT_ROOT, name), threads=threads)
    elapsed = time.perf_counter() - started
    for check_name, check in manifest.checks.items():
        verdict = "PASS" if check.passed else "FAIL"
        log_results(f"{_stamp()} | Criterion: {name}.{check_name} | Value: {check.value} | {verdict}")
    if manifest.error and not manifest.checks:
        log_results(f"{_stamp()} | Criterion: {name} | Error: {manifest.error} | FAIL")
    log_results(f"{_stamp()} | Experiment: {name} | Status: {manifest.status} | Time: {elapsed:.1f}s")
    return manifest.passed


def boundary_form_invariance(pairs=100):
    """Boundary form of random state pairs before and after a gauge change, per geometry."""
    rng = np.random.default_rng(7)
    cases = [
        ("rectangle", build_rectangle(1.0, 1.0, 24, 24), Landau(2.0), Symmetric(2.0)),
        ("disk", build_disk(1.0, 16, 48), Symmetric(3.0), Landau(3.0)),
        ("annulus", build_annulus(0.5, 1.0, 12, 48), Superposition((Symmetric(1.0), AharonovBohm(0.4))),
         Superposition((Landau(1.0), AharonovBohm(0.4)))),
    ]
    passed = True
    for name, grid, source, target in cases:
        chi = gauge_function(source, target, grid)
        links = link_phases(grid, source)
        moved = transform_links(links, chi)
        worst = 0.0
        for _ in range(pairs):
            psi = rng.normal(size=grid.n_nodes) + 1j * rng.normal(size=grid.n_nodes)
            phi = rng.normal(size=grid.n_nodes) + 1j * rng.normal(size=grid.n_nodes)
            before = boundary_form(grid, links, psi, phi)
            after = boundary_form(grid, moved, apply_gauge(psi, chi), apply_gauge(phi, chi))
            worst = max(worst, abs(after - before) / max(1.0, abs(before)))
        ok = worst <= 1e-12
        passed &= ok
        log_results(f"{_stamp()} | Criterion: boundary_form_invariance.{name} | Value: {worst:.3e} | "
                    f"{'PASS' if ok else 'FAIL'}")
    return passed


def cayley_round_trip(samples=200):
    worst = 0.0
    for seed in range(samples):
        U = random_unitary(2, seed=seed)
        if np.linalg.svd(np.eye(2) - U.U, compute_uv=False).min() < 1e-3:
            continue
        worst = max(worst, float(np.abs(inverse_cayley(cayley(U)).U - U.U).max()))
    ok = worst <= 1e-10
    log_results(f"{_stamp()} | Criterion: cayley_round_trip | Value: {worst:.3e} | {'PASS' if ok else 'FAIL'}")
    return ok


def evaluate_acceptance(threads=1):
    started = time.perf_counter()
    results = [run_experiment(name, block, threads) for name, block in EXPERIMENTS.items()]
    results.append(boundary_form_invariance())
    results.append(cayley_round_trip())
    total = time.perf_counter() - started
    log_results(f"{_stamp()} | Suite: acceptance | Passed: {sum(results)}/{len(results)} | Time: {total:.1f}s")
    return all(results)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Run the full-resolution acceptance suite.")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()
    raise SystemExit(0 if evaluate_acceptance(args.threads) else 1)
