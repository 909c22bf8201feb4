"""Command-line entry point: outputs, determinism and exit codes."""

import io
import json
from types import SimpleNamespace

import pandas as pd
import pytest

from spikelab import cli
from spikelab.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, build_parser, main
from spikelab.errors import NoBracket


def _frame(text: str) -> pd.DataFrame:
    return pd.read_csv(io.StringIO(text), dtype={"seed": str})


class TestPotentialCommand:

    ARGS = ["potential", "--prior", "bernoulli:0.3", "--delta", "0.1", "--points", "11"]

    def test_csv_on_stdout(self, capsys):
        assert main(self.ARGS) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "E,i_rs,d_i_rs"
        assert len(lines) == 12
        assert lines[1].startswith("0,")

    def test_identical_runs_give_identical_bytes(self, capsys):
        main(self.ARGS)
        first = capsys.readouterr().out
        main(self.ARGS)
        assert capsys.readouterr().out == first

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "nested" / "potential.json"
        assert main(self.ARGS + ["--format", "json", "--out", str(path)]) == EXIT_OK
        assert capsys.readouterr().out == ""
        rows = json.loads(path.read_text())
        assert len(rows) == 11
        assert set(rows[0]) == {"E", "i_rs", "d_i_rs"}


class TestSeCommand:

    def test_trace_reaches_fixed_point(self, capsys):
        code = main(["se", "--prior", "bernoulli:0.3", "--delta", "0.1"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,E"
        t, error = lines[1].split(",")
        assert t == "0"
        assert float(error) == pytest.approx(0.21)

    def test_coupled_se_columns(self, capsys):
        code = main(["coupled-se", "--prior", "bernoulli:0.3", "--delta", "0.05", "--L", "8", "--w", "2"])
        assert code == EXIT_OK
        assert capsys.readouterr().out.splitlines()[0] == "t,mu,E"


class TestConfigErrors:

    def test_malformed_grid(self, capsys):
        assert main(["se", "--delta", "0.1:x"]) == EXIT_CONFIG
        assert "delta" in capsys.readouterr().err

    def test_window_too_wide(self):
        assert main(["coupled-se", "--L", "8", "--w", "5"]) == EXIT_CONFIG

    def test_unknown_key_in_file(self, tmp_path, capsys):
        path = tmp_path / "run.env"
        path.write_text("delt = 0.1\n")
        assert main(["se", "--config", str(path)]) == EXIT_CONFIG
        assert "did you mean 'delta'" in capsys.readouterr().err

    def test_bad_prior(self):
        assert main(["se", "--prior", "bernoulli:1.5"]) == EXIT_CONFIG

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestOracleCommand:

    def test_payload(self, capsys):
        code = main([
            "oracle", "--prior", "bernoulli:0.3", "--delta", "0.5",
            "--sizes", "4,5", "--samples", "30", "--workers", "1",
        ])
        assert code != EXIT_CONFIG
        payload = json.loads(capsys.readouterr().out)
        assert payload["n"] == 5
        assert {"nishimori", "mutual_information", "immse", "mmse_inequality", "guerra_gap"} <= set(payload)
        assert [row["n"] for row in payload["mmse_inequality"]["table"]] == [4, 5]


class TestAmpCommands:

    def test_amp_rows_per_seed_and_mean(self, capsys):
        code = main([
            "amp", "--prior", "bernoulli:0.3", "--delta", "0.05", "--n", "200",
            "--seeds", "2", "--tmax", "3", "--workers", "1",
        ])
        assert code == EXIT_OK
        frame = _frame(capsys.readouterr().out)
        assert list(frame.columns) == ["seed", "t", "Vmse", "Mmse", "E_se", "Mmse_se"]
        assert len(frame) == 3 * 4
        mean = frame[frame.seed == "mean"].set_index("t")
        per_seed = frame[frame.seed != "mean"]
        assert per_seed.seed.nunique() == 2
        expected = per_seed.groupby("t")["Vmse"].mean()
        pd.testing.assert_series_equal(mean["Vmse"], expected, check_names=False, rtol=1e-12)
        assert mean["E_se"].iloc[0] == pytest.approx(0.21)

    def test_coupled_amp_rows_per_block(self, capsys):
        code = main([
            "coupled-amp", "--prior", "bernoulli:0.3", "--delta", "0.05", "--n", "30",
            "--L", "4", "--w", "1", "--seeds", "2", "--tmax", "2", "--workers", "1",
        ])
        assert code == EXIT_OK
        frame = _frame(capsys.readouterr().out)
        assert list(frame.columns) == ["seed", "t", "mu", "Vmse", "E_se"]
        assert len(frame) == 3 * 3 * 5
        mean = frame[frame.seed == "mean"]
        assert len(mean) == 3 * 5
        assert (mean[mean.mu == 4]["Vmse"] == 0.0).all()


class TestPhaseDiagramCommand:

    def test_unbracketed_rho_gives_nan_and_numeric_exit(self, monkeypatch, capsys):
        def fake_report(prior, rtol):
            if prior.mean > 0.25:
                raise NoBracket("indicator is True at both ends")
            return SimpleNamespace(delta_amp=0.01, delta_rs=0.02, delta_spectral=prior.second_moment**2)

        monkeypatch.setattr(cli, "threshold_report", fake_report)
        code = main(["phase-diagram", "--family", "bernoulli", "--rho", "0.2,0.3", "--workers", "1"])
        assert code == EXIT_NUMERIC
        frame = _frame(capsys.readouterr().out)
        assert list(frame.columns) == ["rho", "delta_amp", "delta_rs", "delta_spectral"]
        assert frame.loc[0, "delta_rs"] == pytest.approx(0.02)
        assert pd.isna(frame.loc[1, "delta_amp"]) and pd.isna(frame.loc[1, "delta_rs"])
        assert frame.loc[1, "delta_spectral"] == pytest.approx(0.09)

    @pytest.mark.slow
    def test_balanced_community_sits_at_spectral_line(self, capsys):
        code = main(["phase-diagram", "--family", "community", "--rho", "0.3", "--workers", "1"])
        assert code == EXIT_OK
        frame = _frame(capsys.readouterr().out)
        assert frame.loc[0, "delta_rs"] == pytest.approx(1.0, abs=1e-2)
        assert frame.loc[0, "delta_spectral"] == pytest.approx(1.0, abs=1e-3)


@pytest.mark.slow
class TestThresholdsCommand:

    def test_sparse_bernoulli(self, capsys):
        code = main([
            "thresholds", "--prior", "bernoulli:0.02", "--delta", "0.0011",
            "--amp-interval", "0.0008,0.0012", "--rs-interval", "0.0012,0.00125",
        ])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert 0.0008 < payload["delta_amp"] < payload["delta_rs"] < 0.00125
        assert payload["delta_spectral"] == pytest.approx(4e-4)
