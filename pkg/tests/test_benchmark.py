import importlib.util
import json
from pathlib import Path

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs_both_backends(tmp_path, capsys):
    spec = importlib.util.spec_from_file_location("bench_kernels", BENCH)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    out = tmp_path / "bench.json"
    assert bench.main(["--m", "300", "--repeat", "1", "--json", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert {r["kernel"] for r in rows} >= {"ksum", "implicit_eval", "quantumboost T=200"}
    assert all(r["python"] > 0 for r in rows)
    assert "kernel" in capsys.readouterr().out
