"""Build the `sic_py` extension with cargo, import it, and check a few values.

Usage: python3 python/smoke_test.py [--no-build]
"""

import argparse
import importlib.util
import json
import math
import pathlib
import shutil
import subprocess
import sys
import sysconfig
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build() -> pathlib.Path:
    subprocess.run(
        ["cargo", "build", "--offline", "--release", "-p", "sic-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    return library_path()


def library_path() -> pathlib.Path:
    names = {"linux": "libsic_py.so", "darwin": "libsic_py.dylib", "win32": "sic_py.dll"}
    name = names.get(sys.platform, "libsic_py.so")
    path = ROOT / "target" / "release" / name
    if not path.exists():
        sys.exit(f"extension not found at {path}; run without --no-build")
    return path


def load(lib: pathlib.Path, workdir: pathlib.Path):
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    target = workdir / f"sic_py{suffix}"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("sic_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def close(a: float, b: float, tol: float, what: str) -> None:
    if abs(a - b) > tol:
        raise AssertionError(f"{what}: {a} vs {b} (tol {tol})")
    print(f"ok  {what}: {a:.6g}")


def run(sic) -> None:
    print(f"sic_py {sic.version()}")

    close(sic.critical_visibility(2), math.sqrt(3) / 4, 1e-6, "critical visibility n=2")
    close(sic.critical_visibility(3), 0.7931, 1e-3, "critical visibility n=3")
    close(sic.discrimination_bound(3), 0.2874, 1e-3, "discrimination n=3")

    _, bits = sic.randomness(1.0)
    close(bits, 3.0, 1e-3, "randomness at v=1")
    curve = sic.randomness_curve([0.0, 0.5, 1.0])
    close(curve[0][1], 0.0, 1e-6, "randomness at v=0")

    povm = sic.sic_povm_json(0.9)
    close(sic.critical_visibility(2, povm), math.sqrt(3) / 4 / 0.9, 1e-6, "depolarised input")

    probs = sic.probe_table()
    counts = sic.sample_table(probs, 900_000, 7)
    if counts != sic.sample_table(probs, 900_000, 7):
        raise AssertionError("sampling is not deterministic")
    _, fidelity = sic.mle_detector(counts)
    if fidelity < 0.99:
        raise AssertionError(f"reconstruction fidelity {fidelity}")
    print(f"ok  reconstruction fidelity: {fidelity:.6f}")

    report = json.loads(sic.game_from_counts("discrimination", counts))
    close(report["score"], 1 / 3, 5e-3, "discrimination score from counts")
    mub = json.loads(sic.play_game("mub"))
    close(mub["score"], 0.0, 1e-10, "MUB exclusion score")
    q = sic.quantum_matching_value(4)
    close(json.loads(sic.play_game("matching", n=4))["score"], q, 1e-12, "matching at n=4")
    close(sic.classical_matching_bound(4), 1 - 2 / 16, 0.0, "classical matching bound")

    try:
        sic.critical_visibility(12)
    except ValueError as e:
        print(f"ok  bad argument raises ValueError: {e}")
    else:
        raise AssertionError("n=12 accepted")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--no-build", action="store_true", help="use an existing release build")
    args = parser.parse_args()
    lib = library_path() if args.no_build else build()
    with tempfile.TemporaryDirectory() as tmp:
        run(load(lib, pathlib.Path(tmp)))
    print("smoke test passed")


if __name__ == "__main__":
    main()
