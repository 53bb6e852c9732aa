import csv
import io

import pytest

from covertid.cli import main
from covertid.codebook import deserialize

TINY = """\
p0 = 0.9,0.1
p1 = 0.1,0.9
q0 = 0.8,0.2
q1 = 0.2,0.8
n = 6
delta = 1.2
eta = 0.4
eps = 0.1
m_size = 3
n_seq = 3
trials = 512
pair_budget = 4
master_seed = 11
k_values = 4,16
zeta_values = 2.0,5.0
resamples = 64
"""


@pytest.fixture()
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return str(path)


@pytest.fixture()
def tiny_codebook(tiny_cfg, tmp_path):
    out = str(tmp_path / "code.txt")
    assert main(["gen", "--config", tiny_cfg, "--out", out]) == 0
    return out


def _read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def test_capacity_stdout(tiny_cfg, capsys):
    assert main(["capacity", "--config", tiny_cfg]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].startswith("# config=") and "seed=11" in lines[0]
    name, value = lines[1].split()
    assert name == "capacity"
    assert float(value) == pytest.approx(1.81542703, rel=1e-6)


def test_params_listing(tiny_cfg, capsys):
    assert main(["params", "--config", tiny_cfg]) == 0
    out = capsys.readouterr().out
    got = dict(line.split() for line in out.splitlines()[1:])
    assert got["l"] == "2" and got["w"] == "3" and got["s"] == "0"
    assert float(got["threshold"]) == pytest.approx(3.164003391, rel=1e-9)
    assert set(got) >= {"beta_n", "alpha_n", "ppm_term_budget", "code_term_bound", "capacity"}


def test_gen_artifact_parses(tiny_codebook):
    cb = deserialize(_read(tiny_codebook))
    assert cb.m_size == 3 and cb.n_seq == 3 and cb.n == 6
    assert "# config=" in _read(tiny_codebook)


def test_sim_csv(tiny_cfg, tiny_codebook, tmp_path, capsys):
    out = str(tmp_path / "sim.csv")
    code = main(["sim", "--config", tiny_cfg, "--codebook", tiny_codebook, "--out", out])
    assert code == 0
    text = _read(out)
    lines = text.splitlines()
    assert lines[0].startswith("# config=")
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert rows[0] == ["kind", "m", "m_prime", "point", "ci95", "trials", "seed"]
    kinds = [r[0] for r in rows[1:]]
    assert kinds.count("first") == 3 and kinds.count("third") == 3
    assert kinds.count("second") == 4  # pair_budget
    for r in rows[1:]:
        assert 0.0 <= float(r[3]) <= 1.0


def test_covert_report(tiny_cfg, tiny_codebook, capsys):
    assert main(["covert", "--config", tiny_cfg, "--codebook", tiny_codebook]) == 0
    out = capsys.readouterr().out
    got = dict(line.split() for line in out.splitlines()[1:])
    assert got["flag_code_vs_ppm"] == "exact"
    assert got["satisfied"] in {"true", "false"}
    total = (
        float(got["term_ppm_vs_innocent"])
        + float(got["term_code_vs_ppm"])
        + float(got["term_cross"])
    )
    assert total == pytest.approx(float(got["total_or_bound"]), abs=1e-9)


def test_refine_roundtrip(tiny_cfg, tiny_codebook, tmp_path, capsys):
    out = str(tmp_path / "refined.txt")
    assert main(["refine", "--config", tiny_cfg, "--codebook", tiny_codebook, "--out", out]) == 0
    refined = deserialize(_read(out))
    assert refined.m_size >= 1
    assert "# refine eps3=" in _read(out)


def test_expurgate_roundtrip(tiny_cfg, tiny_codebook, tmp_path):
    out = str(tmp_path / "expurgated.txt")
    code = main(
        ["expurgate", "--config", tiny_cfg, "--codebook", tiny_codebook, "--out", out]
    )
    assert code == 0
    kept = deserialize(_read(out))
    assert kept.m_size >= 1
    assert "# expurgate k=" in _read(out)


def test_resolve_csv(tiny_cfg, tiny_codebook, capsys):
    assert main(["resolve", "--config", tiny_cfg, "--codebook", tiny_codebook]) == 0
    out = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO("\n".join(out.splitlines()[1:]))))
    assert rows[0][:3] == ["K", "zeta", "upsilon"]
    assert len(rows) == 1 + 2 * 2  # two K values, two zetas
    for r in rows[1:]:
        assert float(r[3]) <= float(r[5]) + 1e-12  # mean_tv <= bound_rhs
        assert r[6] == "exact"


def test_sweep_csv(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(TINY + "sweep_n = 400,900,1600\n")
    assert main(["sweep", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO("\n".join(out.splitlines()[1:]))))
    assert rows[0][0] == "n"
    assert [r[0] for r in rows[1:]] == ["400", "900", "1600"]
    ls = [int(r[2]) for r in rows[1:]]
    assert ls == sorted(ls)


def test_sweep_needs_exactly_one_axis(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(TINY + "sweep_n = 100\nsweep_delta = 0.5\n")
    assert main(["sweep", "--config", str(cfg)]) == 2


def test_exit_code_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    assert main(["capacity", "--config", str(cfg)]) == 2


def test_exit_code_missing_config(tmp_path):
    assert main(["capacity", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_exit_code_malformed_codebook(tiny_cfg, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("not a codebook\n")
    assert main(["sim", "--config", tiny_cfg, "--codebook", str(bad)]) == 2


def test_exit_code_budget(tmp_path, monkeypatch):
    cfg = tmp_path / "big.cfg"
    cfg.write_text(TINY.replace("n = 6", "n = 60"))
    out = str(tmp_path / "code60.txt")
    assert main(["gen", "--config", str(cfg), "--out", out]) == 0
    # resolving the soft-covering gap exactly needs 2^60 output words
    assert main(["resolve", "--config", str(cfg), "--codebook", out]) == 3


def test_exit_code_domain_error(tmp_path):
    cfg = tmp_path / "dom.cfg"
    cfg.write_text(TINY.replace("eps = 0.1", "eps = 0.3"))
    assert main(["params", "--config", str(cfg)]) == 4


def test_gen_byte_stable(tiny_cfg, tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    assert main(["gen", "--config", tiny_cfg, "--out", str(a)]) == 0
    assert main(["gen", "--config", tiny_cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_override_changes_gen(tiny_cfg, tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    assert main(["gen", "--config", tiny_cfg, "--out", str(a)]) == 0
    assert main(["gen", "--config", tiny_cfg, "--seed", "99", "--out", str(b)]) == 0
    assert a.read_bytes() != b.read_bytes()
    assert "seed=99" in b.read_text()


def test_sim_worker_invariance(tiny_cfg, tiny_codebook, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["sim", "--config", tiny_cfg, "--codebook", tiny_codebook,
                 "--workers", "1", "--out", str(a)]) == 0
    assert main(["sim", "--config", tiny_cfg, "--codebook", tiny_codebook,
                 "--workers", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
