import pytest

from snodri.cli import main

FAST = ["--set", "features.n_trees=20", "--set", "encoder.epochs=300", "--set", "spi.timescales=[3, 12]"]
CHAIN = ["ingest", "spi", "snowfrac", "select-features", "train", "weights", "index", "evaluate", "plot"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(out), "--years", "20", "--seed", "3",
                 "--drought", "1988", "--drought", "1998:0.8", "--train-end", "1994-12"]) == 0
    return out


def run(workdir, cmd, *extra):
    return main([cmd, "-c", str(workdir / "config.toml"), *FAST, *extra])


class TestSynth:
    def test_files(self, workdir, capsys):
        for name in ("synthetic.csv", "synthetic-mask.csv", "config.toml"):
            assert (workdir / name).exists()
        text = (workdir / "config.toml").read_text()
        assert 'train_end = "1994-12"' in text and '"1997-12"' in text

    def test_bad_drought(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path), "--drought", "soon"]) == 1
        assert main(["synth", "--out", str(tmp_path), "--drought", "1700"]) == 1


class TestStages:
    def test_chain_matches_run(self, workdir, capsys):
        for cmd in CHAIN:
            assert run(workdir, cmd) == 0, cmd
        staged = sorted(p for p in (workdir / "snodri-out").iterdir())
        saved = {p.name: p.read_bytes() for p in staged}
        assert run(workdir, "run") == 0
        for p in staged:
            if p.name.split("-")[0] in ("model", "weights", "index", "evaluation", "features", "plot"):
                assert p.read_bytes() == saved[p.name], p.name
        out = capsys.readouterr().out
        assert "corr(SnoDRI, SWE anomaly)" in out

    def test_set_changes_artifact_names(self, workdir, capsys):
        assert run(workdir, "ingest") == 0
        a = capsys.readouterr().out
        assert run(workdir, "ingest", "--set", "seed=9") == 0
        b = capsys.readouterr().out
        assert a != b

    def test_single_spi_timescale(self, workdir, capsys):
        assert run(workdir, "spi", "--k", "6") == 0
        assert "spi-" in capsys.readouterr().out


class TestExitCodes:
    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", "-c", str(tmp_path / "none.toml")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_missing_prerequisite(self, workdir, capsys):
        assert run(workdir, "train", "--set", 'output_dir="empty"') == 1
        assert "select-features" in capsys.readouterr().err

    def test_unknown_key(self, workdir):
        assert run(workdir, "ingest", "--set", "nope=1") == 1

    def test_bad_usage(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 1

    def test_data_error(self, tmp_path, capsys):
        (tmp_path / "b.csv").write_text("date,APCP\n2000-01,1\n2000-03,2\n")
        (tmp_path / "c.toml").write_text('[inputs]\nbasins = ["b.csv"]\n[split]\ntrain_end = "2000-12"\n')
        assert main(["ingest", "-c", str(tmp_path / "c.toml")]) == 2
        assert "stage 'ingest'" in capsys.readouterr().err
