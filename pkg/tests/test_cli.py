import csv
import io
import json
import re

import numpy as np
import pytest

from tslab.activations import ActivationSpec, deriv_map, eval_map
from tslab.cli import main
from tslab.config import ConfigError, default_text, load_config

TINY_CONFIG = """\
[data]
train_per_class = 10
test_per_class = 5

[model]
conv_channels = 4,8
dense_units = 16

[training]
epochs = 1
batch_size = 32
"""


def _read_csv(path):
    text = path.read_bytes().decode()
    assert text.endswith("\n") and "\r" not in text
    header, *rows = csv.reader(io.StringIO(text))
    return header, rows


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_CONFIG)
    return path


class TestTable:
    def test_tanhsoft2_zero_row(self, tmp_path):
        assert main(["table", "tanhsoft2(0.6,1)", "--out-dir", str(tmp_path)]) == 0
        header, rows = _read_csv(tmp_path / "table.csv")
        assert header == ["x", "value", "derivative"]
        assert len(rows) == 121
        assert rows[60][0] == "0.0" and float(rows[60][1]) == 0.0

    def test_relu_exact(self, tmp_path):
        main(["table", "relu", "--xmin", "-3", "--xmax", "2", "--steps", "11", "--out-dir", str(tmp_path)])
        _, rows = _read_csv(tmp_path / "table.csv")
        xs = np.array([float(r[0]) for r in rows])
        assert [float(r[1]) for r in rows] == np.maximum(0.0, xs).tolist()

    def test_derivative_bit_identical(self, tmp_path):
        main(["table", "tanhsoft1(0.87)", "--steps", "57", "--out-dir", str(tmp_path)])
        _, rows = _read_csv(tmp_path / "table.csv")
        xs = np.array([float(r[0]) for r in rows])
        spec = ActivationSpec.tanhsoft1(0.87)
        np.testing.assert_array_equal([float(r[2]) for r in rows], deriv_map(spec, xs))
        np.testing.assert_array_equal([float(r[1]) for r in rows], eval_map(spec, xs))

    def test_bad_spec_prints_grammar(self, tmp_path, capsys):
        assert main(["table", "tanhsoft2(0.6)", "--out-dir", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "position" in err and "grammar" in err

    @pytest.mark.parametrize("extra", [["--steps", "1"], ["--xmin", "2", "--xmax", "1"]])
    def test_bad_range(self, tmp_path, extra):
        assert main(["table", "relu", "--out-dir", str(tmp_path), *extra]) == 2

    def test_manifest_written(self, tmp_path):
        main(["table", "swish", "--out-dir", str(tmp_path)])
        manifest = json.loads((tmp_path / "table_manifest.json").read_text())
        assert manifest["outputs"].keys() == {"table.csv"}
        assert manifest["table"]["spec"] == "swish"


class TestConfig:
    def test_effective_config_lists_everything(self, capsys):
        assert main(["train", "--print-effective-config", "--seed", "9"]) == 0
        text = capsys.readouterr().out
        for key in ("seed = 9", "weight_decay_mode = decoupled", "normalization = divide_by_255", "batch_size = 128"):
            assert key in text
        # the printed text is itself a complete config
        assert load_config(text=text).text() == text

    def test_default_round_trip(self):
        assert load_config(text=default_text()).digest() == load_config().digest()

    def test_unknown_key(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[training]\nepoch = 3\n")
        with pytest.raises(ConfigError, match="epoch"):
            load_config(bad)
        assert main(["train", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2

    def test_invalid_values(self):
        for text in ("[training]\nepochs = 0\n", "[data]\ndataset = imagenet\n", "[activation]\nspec = foo\n"):
            with pytest.raises(ConfigError):
                load_config(text=text)

    def test_set_override(self, capsys):
        main(["train", "--print-effective-config", "--set", "optimizer.weight_decay=5e-4"])
        assert "weight_decay = 5e-4" in capsys.readouterr().out


class TestDataErrors:
    def test_missing_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("TSLAB_DATA_DIR", raising=False)
        assert main(["train", "--out-dir", str(tmp_path)]) == 3
        assert "train-images-idx3-ubyte" in capsys.readouterr().err

    def test_missing_files(self, tmp_path, capsys):
        assert main(["train", "--data-dir", str(tmp_path), "--out-dir", str(tmp_path)]) == 3
        assert "t10k-labels-idx1-ubyte" in capsys.readouterr().err

    def test_env_fallback(self, tmp_path, monkeypatch, mnist5k_dir, tiny_cfg):
        monkeypatch.setenv("TSLAB_DATA_DIR", str(mnist5k_dir))
        assert main(["train", "--config", str(tiny_cfg), "--out-dir", str(tmp_path)]) == 0

    def test_bad_manifest(self, tmp_path, mnist5k_dir, tiny_cfg):
        sums = tmp_path / "sums.txt"
        sums.write_text("train-images-idx3-ubyte " + "0" * 64 + "\n")
        code = main(["train", "--config", str(tiny_cfg), "--data-dir", str(mnist5k_dir),
                     "--set", f"data.manifest={sums}", "--out-dir", str(tmp_path)])  # fmt: skip
        assert code == 3


class TestRunCommands:
    def test_train_and_determinism(self, tmp_path, mnist5k_dir, tiny_cfg):
        runs = []
        for name in ("a", "b"):
            out = tmp_path / name
            args = ["train", "--config", str(tiny_cfg), "--data-dir", str(mnist5k_dir), "--out-dir", str(out)]
            assert main(args) == 0
            runs.append(out)
        for name in ("train_curves.csv", "train_summary.csv"):
            assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()
        manifest = json.loads((runs[0] / "train_manifest.json").read_text())
        assert manifest["config_digest"] == load_config(text=manifest["config"]).digest()
        assert manifest["seeds"] == [0]
        assert manifest["data"]["train_size"] == 100
        assert all(re.fullmatch(r"[0-9a-f]{64}", v) for v in manifest["inputs"].values())
        assert set(manifest["outputs"]) == {"train_curves.csv", "train_summary.csv", "train_trials.jsonl"}

    def test_cv_prints_table_format(self, tmp_path, mnist5k_dir, tiny_cfg, capsys):
        code = main(["cv", "--config", str(tiny_cfg), "--data-dir", str(mnist5k_dir),
                     "--set", "cv.folds=2", "--out-dir", str(tmp_path)])  # fmt: skip
        assert code == 0
        assert re.fullmatch(r"tanhsoft2\(0\.6,1\): \d+\.\d \(± \d+\.\d\d\)\n", capsys.readouterr().out)
        header, rows = _read_csv(tmp_path / "cv_folds.csv")
        assert header[0] == "fold" and len(rows) == 2

    def test_search(self, tmp_path, mnist5k_dir, tiny_cfg):
        code = main(["search", "--config", str(tiny_cfg), "--data-dir", str(mnist5k_dir), "--seed", "1",
                     "--set", "search.alphas=0", "--set", "search.betas=0.6,1", "--set", "search.gammas=1",
                     "--set", "search.deltas=0", "--out-dir", str(tmp_path)])  # fmt: skip
        assert code == 0
        header, rows = _read_csv(tmp_path / "leaderboard.csv")
        assert header == ["alpha", "beta", "gamma", "delta", "seeds", "mean_top1", "std_top1", "mean_top3"]
        assert len(rows) == 2 and all(r[4] == "1" for r in rows)
        assert len((tmp_path / "search_trials.jsonl").read_text().splitlines()) == 2

    def test_search_rejects_out_of_range(self, tmp_path, tiny_cfg):
        assert main(["search", "--config", str(tiny_cfg), "--set", "search.gammas=50", "--out-dir", str(tmp_path)]) == 2

    def test_compare_from_logs(self, tmp_path):
        log = tmp_path / "trials.jsonl"
        lines = []
        for exp, scores in (("m1", (99.0, 98.0)), ("m2", (97.0, 97.0))):
            for spec, top1 in zip(("tanhsoft2(0.6,1)", "relu"), scores):
                lines.append(json.dumps({
                    "config_digest": "x", "config": {"activation": spec}, "status": "ok", "top1": top1,
                    "topk": {"3": 100.0}, "initial_train_loss": 2.3, "final_train_loss": 0.1,
                    "final_test_loss": 0.1, "experiment": exp,
                }))  # fmt: skip
        log.write_text("\n".join(lines) + "\n")
        cfg = tmp_path / "cmp.ini"
        cfg.write_text(f"[compare]\ncandidates = tanhsoft2(0.6,1)\nbaselines = relu\nresults = {log}\n")
        assert main(["compare", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "win_tie_loss.csv").read_text().splitlines()[1:] == [
            '"tanhsoft2(0.6,1)",>,1',
            '"tanhsoft2(0.6,1)",=,1',
            '"tanhsoft2(0.6,1)",<,0',
        ]
        cfg.write_text(f"[compare]\ncandidates = swish\nbaselines = relu\nresults = {log}\n")
        assert main(["compare", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 3

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_exit_code(self, tmp_path, mnist5k_dir, tiny_cfg):
        code = main(["train", "--config", str(tiny_cfg), "--data-dir", str(mnist5k_dir),
                     "--set", "optimizer.name=sgd", "--set", "optimizer.lr=1e30", "--out-dir", str(tmp_path)])  # fmt: skip
        assert code == 4
        _, rows = _read_csv(tmp_path / "train_summary.csv")
        assert rows[0][2] == "failed"

