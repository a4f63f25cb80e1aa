import os

import pytest

from cecbench.cli import main
from cecbench.config import ConfigError, FIGURE_TAGS, default_config, validate_config
from cecbench.protocols import Protocol


def _write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


MINIMAL = """
[experiment]
figures = fig13_pfail
"""


def test_minimal_config_applies_and_echoes_defaults(tmp_path):
    cfg = validate_config(_write(tmp_path, MINIMAL))
    assert cfg.figures == ("fig13_pfail",)
    assert cfg.bandwidth_hz == 20e6
    assert cfg.rate_bps == 200e3
    assert cfg.packet_bytes == 22
    assert cfg.p_timeout == 1e-4
    assert cfg.c0 == 1.5
    assert cfg.n_tasks == 100
    echoed = "\n".join(cfg.applied_defaults)
    assert "channel.bandwidth_hz = 20000000.0" in echoed
    assert "experiment.seed = 0" in echoed
    assert "experiment.figures" not in echoed  # provided, not defaulted


def test_default_config_lists_every_key():
    cfg = default_config()
    assert any(line.startswith("cec.c0") for line in cfg.applied_defaults)
    assert cfg.figures == FIGURE_TAGS


def test_unknown_key_rejected(tmp_path):
    path = _write(tmp_path, MINIMAL + "\n[channel]\nsnr_dbb = 12\n")
    with pytest.raises(ConfigError, match="unknown key channel.snr_dbb"):
        validate_config(path)


def test_unknown_section_rejected(tmp_path):
    path = _write(tmp_path, MINIMAL + "\n[chanel]\nsnr_db = 12\n")
    with pytest.raises(ConfigError, match=r"unknown section \[chanel\]"):
        validate_config(path)


def test_type_error_located_by_key_path(tmp_path):
    path = _write(tmp_path, MINIMAL + "\n[channel]\nbandwidth_hz = 0\n")
    with pytest.raises(ConfigError, match=r"\[channel\] bandwidth_hz"):
        validate_config(path)


def test_unknown_figure_tag_rejected(tmp_path):
    path = _write(tmp_path, "[experiment]\nfigures = fig99\n")
    with pytest.raises(ConfigError, match="unknown figure tag"):
        validate_config(path)


def test_empty_protocol_list_rejected(tmp_path):
    path = _write(tmp_path, MINIMAL + "\n[experiment]\nprotocols =\n", name="p.ini")
    with pytest.raises(ConfigError):
        validate_config(path)


def test_unknown_protocol_rejected(tmp_path):
    path = _write(tmp_path, "[experiment]\nfigures = fig13_pfail\nprotocols = carrier_pigeon\n")
    with pytest.raises(ConfigError, match="unknown protocol"):
        validate_config(path)


def test_protocols_parse(tmp_path):
    path = _write(tmp_path, "[experiment]\nfigures = fig13_pfail\nprotocols = harq, reflexup\n")
    cfg = validate_config(path)
    assert cfg.protocols == (Protocol.HARQ, Protocol.REFLEXUP)


def test_out_of_band_snr_warns_but_parses(tmp_path):
    path = _write(tmp_path, MINIMAL + "\n[channel]\nsnr_db = -5\n")
    with pytest.warns(UserWarning, match="outside the evaluated"):
        cfg = validate_config(path)
    assert cfg.snr_db == -5.0


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        validate_config(str(tmp_path / "nope.ini"))


def test_multiple_errors_all_reported(tmp_path):
    path = _write(
        tmp_path,
        "[experiment]\nfigures = fig13_pfail\ntrials = -3\n[channel]\nrate_bps = zero\n",
    )
    with pytest.raises(ConfigError) as err:
        validate_config(path)
    message = str(err.value)
    assert "trials" in message and "rate_bps" in message


# ------------------------------------------------------------------ CLI runs


def test_cli_run_writes_figures(tmp_path, capsys):
    config = _write(
        tmp_path,
        "[experiment]\nfigures = fig13_pfail fig12_ucc_snr_tasks\nseed = 7\n",
    )
    out_dir = str(tmp_path / "out")
    assert main(["run", config, "--out", out_dir]) == 0
    captured = capsys.readouterr().out
    assert "default applied:" in captured
    assert "fig13_pfail" in captured
    assert os.path.exists(os.path.join(out_dir, "fig13_pfail.csv"))
    assert os.path.exists(os.path.join(out_dir, "fig12_ucc_snr_tasks.csv"))


def test_cli_figure_flag_overrides_config(tmp_path):
    config = _write(tmp_path, "[experiment]\nfigures = fig13_pfail fig7_surface\n")
    out_dir = str(tmp_path / "only")
    assert main(["run", config, "--out", out_dir, "--figure", "fig7_surface"]) == 0
    assert os.listdir(out_dir) == ["fig7_surface.csv"]


def test_cli_validation_error_exit_code(tmp_path, capsys):
    config = _write(tmp_path, "[channel]\nbandwidth_hz = 0\n")
    assert main(["run", config]) == 1
    assert "bandwidth_hz" in capsys.readouterr().err


def test_cli_runtime_error_exit_code(tmp_path, capsys):
    config = _write(tmp_path, MINIMAL)
    blocker = tmp_path / "blocked"
    blocker.write_text("a file where the output directory should go")
    assert main(["run", config, "--out", str(blocker)]) == 2
    assert "fig13_pfail" in capsys.readouterr().err


def test_cli_reruns_are_byte_identical(tmp_path):
    config = _write(
        tmp_path,
        "[experiment]\nfigures = fig13_pfail fig7_surface\nseed = 3\ntrials = 20000\n",
    )
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", config, "--out", str(out_a)]) == 0
    assert main(["run", config, "--out", str(out_b)]) == 0
    for name in os.listdir(out_a):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_cli_seed_and_trials_override(tmp_path):
    config = _write(tmp_path, MINIMAL)
    out_dir = str(tmp_path / "s")
    assert main(["run", config, "--seed", "99", "--trials", "15000", "--out", out_dir]) == 0
    assert main(["run", config, "--trials", "0", "--out", out_dir]) == 1
