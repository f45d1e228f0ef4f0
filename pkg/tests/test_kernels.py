import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from wuwave import _pykernels, kernels

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "benchmarks"))
import bench_kernels  # noqa: E402

try:
    from wuwave import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_compiled = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


@needs_compiled
@pytest.mark.parametrize("n", [64, 128])
def test_backends_agree(n):
    _, hargs, sargs = bench_kernels.curve_inputs(n)
    for a, b in zip(_pykernels.hilbert_matrices(*hargs), _ckernels.hilbert_matrices(*hargs)):
        assert np.max(np.abs(np.asarray(a) - np.asarray(b))) < 1e-12
    ref = _pykernels.square_kernel_apply(*sargs)
    assert np.max(np.abs(ref - _ckernels.square_kernel_apply(*sargs))) < 1e-12 * max(1.0, np.abs(ref).max())


@needs_compiled
def test_compiled_backend_is_default():
    if os.environ.get("WUWAVE_PURE", "") in ("", "0"):
        assert kernels.BACKEND == "compiled"


def test_pure_switch():
    code = "from wuwave import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, WUWAVE_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_benchmark_smoke(capsys):
    bench_kernels.main(["32", "--repeat", "1"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1].split()[0] == "square_kernel_apply"
    assert sum(line.split()[1] == "32" for line in lines[1:] if len(line.split()) > 1) >= 2
