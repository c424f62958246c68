import runpy
import sys
from pathlib import Path

SCRIPT = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


class TestBenchmark:
    def test_smoke(self, capsys, monkeypatch):
        monkeypatch.setattr(sys, "argv", [str(SCRIPT), "--rows", "40", "--trees", "3", "--repeat", "1"])
        runpy.run_path(str(SCRIPT), run_name="__main__")
        out = capsys.readouterr().out
        assert "python" in out
        assert "identical trees: True" in out or "not built" in out
