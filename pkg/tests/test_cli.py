import numpy as np
import pytest

from flucta.cli import EXIT_COMPUTE, EXIT_IO, EXIT_OK, EXIT_USAGE, UsageError, main, parse_config
from flucta.fluctuation import DFA1, fluctuation_curve
from flucta.io import read_csv
from flucta.scaling import fit_alpha
from flucta.series import read_series


def test_parse_generate():
    cfg = parse_config(["generate", "--n", "50000", "--alpha", "0.7", "--seed", "1", "--out", "a.txt"])
    assert cfg.subcommand == "generate"
    assert (cfg.n, cfg.alpha, cfg.seed, cfg.out) == (50000, 0.7, 1, "a.txt")


def test_parse_rejects_order_zero():
    with pytest.raises(UsageError) as info:
        parse_config(["analyze", "x.txt", "--method", "dfa", "--order", "0", "--out", "o.csv"])
    assert any("p >= 1" in m for m in info.value.messages)


@pytest.mark.parametrize("argv", [
    ["generate", "--n", "100", "--alpha", "2.0", "--out", "a"],
    ["generate", "--n", "100", "--out", "a"],
    ["generate", "--n", "ten", "--alpha", "0.5", "--out", "a"],
    ["generate", "--bogus"],
    ["study", "nonsense"],
    ["study", "scatter", "--methods", "dfa1"],
    ["study", "trend-crossover", "--amplitudes", "3,10"],
    ["fit", "c.csv", "--range", "explicit"],
    [],
])
def test_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_config(argv)
    assert main(argv) == EXIT_USAGE


def test_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nn = 2000\nalpha = 0.6\nseed = 5\nout = x.txt\n")
    cfg = parse_config(["generate", "--config", str(conf), "--seed", "9"])
    assert (cfg.n, cfg.alpha, cfg.seed) == (2000, 0.6, 9)
    conf.write_text("n = 2000\nunknown_key = 3\n")
    with pytest.raises(UsageError):
        parse_config(["generate", "--config", str(conf)])


def _fit_out(tmp_path, name, *extra):
    out = tmp_path / name
    return out, ["fit", *extra, "--out", str(out)]


def test_generate_analyze_fit_roundtrip(tmp_path):
    ser = tmp_path / "a.txt"
    assert main(["generate", "--n", "50000", "--alpha", "0.7", "--seed", "1", "--out", str(ser)]) == EXIT_OK
    assert (tmp_path / "a.txt.provenance").exists()
    curve = tmp_path / "c.csv"
    assert main(["analyze", str(ser), "--method", "dfa", "--order", "1", "--out", str(curve)]) == EXIT_OK
    header, rows = read_csv(curve)
    assert header == ["s", "F"]
    out, argv = _fit_out(tmp_path, "fit.csv", str(curve), "--range", "explicit", "--s-lo", "10", "--s-hi", "12500")
    assert main(argv) == EXIT_OK
    h, r = read_csv(out)
    alpha = float(r[0][h.index("alpha")])
    assert alpha == pytest.approx(0.7, abs=0.03)
    # CSV is lossless: re-fitting the stored curve reproduces alpha exactly
    s = np.array([float(x[0]) for x in rows])
    F = np.array([float(x[1]) for x in rows])
    assert fit_alpha((s, F), 10, 12500).alpha == alpha
    direct = fluctuation_curve([read_series(ser)], DFA1)
    np.testing.assert_array_equal(direct.F, F)


def test_fit_ranges_agree_at_n_200(tmp_path):
    x = tmp_path / "x.txt"
    main(["generate", "--n", "200", "--alpha", "0.7", "--out", str(x)])
    c = tmp_path / "c.csv"
    main(["analyze", str(x), "--method", "dfa1", "--out", str(c)])
    a_out, a_argv = _fit_out(tmp_path, "a.csv", str(c), "--range", "fixed-lower", "--n", "200")
    b_out, b_argv = _fit_out(tmp_path, "b.csv", str(c), "--range", "fixed-width", "--n", "200")
    assert main(a_argv) == EXIT_OK and main(b_argv) == EXIT_OK
    ha, ra = read_csv(a_out)
    hb, rb = read_csv(b_out)
    assert ra == rb
    assert float(ra[0][ha.index("s_hi")]) <= 100 and float(ra[0][ha.index("s_lo")]) >= 10


def test_analyze_constant_series_warns(tmp_path, caplog):
    f = tmp_path / "const.txt"
    f.write_text("\n".join(["4.0"] * 500))
    out = tmp_path / "c.csv"
    assert main(["analyze", str(f), "--method", "dfa", "--order", "1", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert all(float(r[1]) == 0.0 for r in rows)
    assert "~0" in caplog.text


def test_analyze_explicit_scales_and_ensemble(tmp_path):
    files = []
    for seed in range(3):
        f = tmp_path / f"s{seed}.txt"
        main(["generate", "--n", "1000", "--alpha", "0.5", "--seed", str(seed), "--out", str(f)])
        files.append(str(f))
    out = tmp_path / "c.csv"
    assert main(["analyze", *files, "--method", "cma", "--scales", "5,11,51", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert [int(r[0]) for r in rows] == [5, 11, 51]
    assert main(["analyze", *files, "--method", "cma", "--scales", "4,10", "--out", str(out)]) == EXIT_COMPUTE


def test_missing_input_is_io_error(tmp_path):
    assert main(["analyze", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o.csv")]) == EXIT_IO


def test_fit_crossover_report(tmp_path):
    ser = tmp_path / "x.txt"
    main(["generate", "--n", "20000", "--alpha1", "1.1", "--alpha2", "0.5", "--s-cross", "100", "--out", str(ser)])
    c = tmp_path / "c.csv"
    main(["analyze", str(ser), "--method", "dfa1", "--out", str(c)])
    out, argv = _fit_out(tmp_path, "f.csv", str(c), "--crossover", "--method", "dfa1", "--search-lo", "10", "--search-hi", "5000")
    assert main(argv) == EXIT_OK
    h, r = read_csv(out)
    assert r[0][h.index("crossover_detected")] == "true"
    assert 50 < float(r[0][h.index("s_observed")]) < 400


def test_provenance_reproduces_run(tmp_path):
    ser = tmp_path / "g.txt"
    main(["generate", "--n", "3000", "--alpha1", "0.9", "--alpha2", "0.5", "--s-cross", "50",
          "--trend-a", "2", "--seed", "7", "--out", str(ser)])
    first = ser.read_bytes()
    ser.unlink()
    assert main(["generate", "--config", str(ser) + ".provenance"]) == EXIT_OK
    assert ser.read_bytes() == first

    c = tmp_path / "c.csv"
    main(["analyze", str(ser), "--method", "mdfa2", "--out", str(c)])
    first = c.read_bytes()
    c.unlink()
    assert main(["analyze", "--config", str(c) + ".provenance"]) == EXIT_OK
    assert c.read_bytes() == first


def test_study_alpha_vs_n_is_deterministic(tmp_path):
    argv = ["study", "alpha-vs-n", "--lengths", "50,200", "--n-series", "40", "--quick", "2",
            "--methods", "dfa1,cma,mdfa1", "--seed", "3"]
    assert main([*argv, "--out-dir", str(tmp_path / "a")]) == EXIT_OK
    assert main([*argv, "--out-dir", str(tmp_path / "b"), "--threads", "2"]) == EXIT_OK
    for name in ("alpha_vs_n.csv", "alpha_histograms.csv", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header, rows = read_csv(tmp_path / "a" / "alpha_vs_n.csv")
    assert header[:4] == ["N", "method", "mean_alpha", "sd_alpha"]
    assert len(rows) == 6
    assert all(int(r[header.index("n_series")]) == 20 for r in rows)
    # rerun from provenance
    prov = tmp_path / "a" / "summary.txt.provenance"
    text = prov.read_text().replace(str(tmp_path / "a"), str(tmp_path / "c"))
    prov.write_text(text)
    assert main(["study", "--config", str(prov)]) == EXIT_OK
    assert (tmp_path / "c" / "alpha_vs_n.csv").read_bytes() == (tmp_path / "a" / "alpha_vs_n.csv").read_bytes()


def test_study_scatter_outputs(tmp_path):
    assert main(["study", "scatter", "--lengths", "100", "--n-series", "20", "--out-dir", str(tmp_path)]) == EXIT_OK
    header, rows = read_csv(tmp_path / "scatter_sd.csv")
    assert header == ["N", "reference", "other", "sd1", "sd2"]
    assert [r[2] for r in rows] == ["CMA", "MDFA1"]
