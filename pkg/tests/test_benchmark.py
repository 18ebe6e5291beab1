import runpy
from pathlib import Path

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs(capsys):
    mod = runpy.run_path(str(BENCH))
    rows = mod["run"](rows=4, n=16, repeat=1)
    assert {name for name, _ in rows} == {"mean", "semideviation", "avar", "oce_avar", "oce_entropic"}
    assert all("python" in t and all(v > 0 for v in t.values()) for _, t in rows)
    mod["main"](["--rows", "3", "--n", "8", "--repeat", "1"])
    assert "speedup" in capsys.readouterr().out
