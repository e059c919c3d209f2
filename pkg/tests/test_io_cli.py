import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from availcases.cli import main
from availcases.errors import DataError
from availcases.frame import CategoricalFrame, NumericFrame
from availcases.io import (CsvDialect, read_categorical, read_counts_table, read_csv, to_jsonable,
                           write_csv)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestReadCsv:
    def test_basic(self, tmp_path):
        f = read_csv(write(tmp_path, "a,b\n1,2\n3,NA\n"))
        assert f.col_names == ("a", "b")
        np.testing.assert_array_equal(f.present, [[True, True], [True, False]])
        assert f.values[1, 0] == 3.0 and f.values[1, 1] == 0.0

    def test_blank_line_is_missing(self, tmp_path):
        f = read_csv(write(tmp_path, "a\n\n"))
        assert f.shape == (1, 1) and f.n_missing == 1

    def test_exponent_and_whitespace(self, tmp_path):
        f = read_csv(write(tmp_path, "a,b\n 1.5e3 , NA \n-.5,+2\n"))
        np.testing.assert_array_equal(f.values, [[1500.0, 0.0], [-0.5, 2.0]])
        assert not f.present[0, 1]

    def test_custom_tokens_and_delimiter(self, tmp_path):
        d = CsvDialect(delimiter=";", na_tokens=frozenset({"?"}))
        f = read_csv(write(tmp_path, "a;b\n?;1\n"), d)
        assert not f.present[0, 0]

    def test_no_header(self, tmp_path):
        f = read_csv(write(tmp_path, "1,2\n"), CsvDialect(header=False))
        assert f.col_names == ("V1", "V2")

    @pytest.mark.parametrize("text,msg", [
        ("a,b\n1,x\n", "line 2, column 'b'"),
        ("a,b\n1\n", "line 2 has 1 fields"),
        ("", "empty"),
        ("a,b\n", "no data"),
        ("a\nnan\n", "cannot parse"),
        ("a\ninf\n", "cannot parse"),
    ])
    def test_errors(self, tmp_path, text, msg):
        with pytest.raises(DataError, match=msg):
            read_csv(write(tmp_path, text))

    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)),
                  elements=st.one_of(st.floats(-1e12, 1e12), st.just(np.nan))))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, tmp_path_factory, arr):
        p = tmp_path_factory.mktemp("rt") / "f.csv"
        f = NumericFrame.from_nan_array(arr)
        write_csv(f, p)
        assert read_csv(p).equals(f)


class TestCategorical:
    def test_levels_first_appearance(self, tmp_path):
        rec = read_categorical(write(tmp_path, "x,y,z\nb,u,1\na,NA,2\nb,v,1\n"))
        assert rec.level_labels == (("b", "a"), ("u", "v"), ("1", "2"))
        np.testing.assert_array_equal(rec.codes[:, 0], [0, 1, 0])
        assert not rec.present[1, 1]

    def test_wrong_width(self, tmp_path):
        with pytest.raises(DataError, match="exactly 3"):
            read_categorical(write(tmp_path, "x,y\na,b\n"))

    def test_round_trip(self, tmp_path):
        rec = CategoricalFrame([[0, 1, 0], [1, 0, 1]], [[True, False, True], [True, True, True]],
                               (2, 2, 2), level_labels=(("p", "q"), ("r", "s"), ("t", "u")))
        p = tmp_path / "r.csv"
        write_csv(rec, p)
        back = read_categorical(p)
        np.testing.assert_array_equal(back.present, rec.present)
        assert [back.level_labels[j][c] for j, c in enumerate(back.codes[1])] == ["q", "r", "u"]

    def test_counts_table(self, tmp_path, ucb_table):
        t = read_counts_table(write(tmp_path, "A,B,C,Freq\na,x,1,2\nb,x,1,3\na,y,1,4\nb,y,1,5\n"))
        np.testing.assert_array_equal(t.counts[..., 0], [[2, 4], [3, 5]])
        assert ucb_table.total == 4526
        assert ucb_table.level_labels[0] == ("Admitted", "Rejected")

    def test_counts_missing(self, tmp_path):
        with pytest.raises(DataError, match="missing"):
            read_counts_table(write(tmp_path, "A,B,C,Freq\na,x,1,NA\n"))


class TestJson:
    def test_keys_and_values(self):
        out = to_jsonable({(): 1.0, (0, 2): np.arange(2), "x": np.float64(np.inf)})
        assert out == {"grand_mean": 1.0, "1,3": [0, 1], "x": None}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_cov(self, capsys):
        code, out, _ = run(capsys, "cov", "--data", "pima.csv", "--cols", "glucose,bp")
        assert code == 0 and "pairwise covariance" in out

    def test_cov_json_matches_api(self, capsys, pima):
        from availcases.moments import pairwise_moments
        code, out, _ = run(capsys, "cov", "--data", "pima.csv", "--format", "json", "--cor")
        tree = json.loads(out)
        assert tree["command"] == "cov" and tree["kind"] == "PairwiseMoments"
        np.testing.assert_allclose(tree["means"], pairwise_moments(pima).means)
        np.testing.assert_allclose(np.diag(tree["correlation"]), 1.0)

    def test_lm_out_file(self, capsys, tmp_path, pima):
        from availcases.regression import fit_regression
        out_path = tmp_path / "lm.json"
        code, _, _ = run(capsys, "lm", "--data", "pima.csv", "--response", "bp", "--se", "delta",
                         "--out", str(out_path))
        assert code == 0
        tree = json.loads(out_path.read_text())
        np.testing.assert_allclose(tree["coef"], fit_regression(pima, "bp").coef, rtol=1e-12)
        assert len(tree["se"]) == len(tree["coef"])

    def test_bootstrap_seed_reproducible(self, capsys):
        args = ["lm", "--data", "pima.csv", "--response", "bp", "--se", "bootstrap", "--n-boot", "20",
                "--seed", "4", "--format", "json"]
        a = json.loads(run(capsys, *args)[1])
        b = json.loads(run(capsys, *args)[1])
        assert a["se"] == b["se"]

    def test_bootstrap_without_seed(self, capsys):
        code, _, err = run(capsys, "lm", "--data", "pima.csv", "--response", "bp", "--se", "bootstrap")
        assert code == 1 and "seed" in err

    def test_pca(self, capsys):
        code, out, _ = run(capsys, "pca", "--data", "pima.csv", "--method", "cc", "--scale")
        assert code == 0 and "PC9" in out

    def test_loglin_table_input(self, capsys):
        code, out, _ = run(capsys, "loglin", "--data", "ucb.csv", "--margins", "1,3+2,3",
                           "--method", "cc", "--format", "json")
        tree = json.loads(out)
        assert code == 0
        assert tree["fitted"][0][0][0] == pytest.approx(825 * 601 / 933)
        assert set(tree["lambdas"]) == {"grand_mean", "1", "2", "3", "1,3", "2,3"}

    def test_loglin_records_input(self, capsys, tmp_path):
        p = write(tmp_path, "x,y,z\n" + "a,b,c\na,d,c\ne,b,f\ne,d,f\nNA,b,c\n" * 3)
        code, out, _ = run(capsys, "loglin", "--data", str(p), "--margins", "1+2+3")
        assert code == 0 and "fitted counts" in out

    def test_simulate_and_seed(self, capsys):
        args = ["simulate", "--data", "pima.csv", "--estimand", "beta1", "--response", "bp",
                "--rates", "0.05", "--reps", "4", "--seed", "3", "--format", "json"]
        code, out, _ = run(capsys, *args)
        assert code == 0
        a = json.loads(out)
        assert a == json.loads(run(capsys, *args)[1])
        assert a["config"]["seed"] == 3 and len(a["rows"]) == 2

    def test_simulate_loglin(self, capsys):
        code, out, _ = run(capsys, "simulate", "--data", "ucb.csv", "--estimand", "loglin",
                           "--margins", "1,3+2,3", "--term", "2,3", "--rates", "0.05",
                           "--reps", "3", "--seed", "1")
        assert code == 0 and "lambda23[0][0]" in out

    def test_marstudy(self, capsys):
        code, out, _ = run(capsys, "marstudy", "--n", "100", "--reps", "5", "--seed", "2",
                           "--format", "json")
        assert code == 0 and json.loads(out)["kind"] == "MarBiasReport"

    @pytest.mark.parametrize("argv", [
        [],
        ["frobnicate"],
        ["cov"],
        ["simulate", "--data", "pima.csv", "--estimand", "beta1", "--response", "bp"],
        ["simulate", "--data", "pima.csv", "--estimand", "nope", "--seed", "1"],
        ["simulate", "--data", "pima.csv", "--estimand", "beta1", "--response", "bp", "--seed", "1",
         "--rates", "a,b"],
        ["simulate", "--data", "ucb.csv", "--estimand", "loglin", "--margins", "1,3+2,3",
         "--term", "1,2", "--seed", "1"],
    ])
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 1

    def test_data_errors(self, capsys, tmp_path):
        assert run(capsys, "cov", "--data", str(tmp_path / "missing.csv"))[0] == 2
        bad = write(tmp_path, "a,b\n1,oops\n")
        code, _, err = run(capsys, "cov", "--data", str(bad))
        assert code == 2 and "line 2" in err
        assert run(capsys, "lm", "--data", "pima.csv", "--response", "nope")[0] == 2

    def test_numerical_error(self, capsys, tmp_path, adversarial):
        p = tmp_path / "adv.csv"
        write_csv(adversarial, p)
        code, _, err = run(capsys, "pca", "--data", str(p), "--scale")
        assert code == 3 and "negative eigenvalue" in err

    def test_zero_successes(self, capsys, tmp_path, adversarial):
        p = tmp_path / "adv.csv"
        write_csv(adversarial, p)
        code, out, _ = run(capsys, "simulate", "--data", str(p), "--estimand", "pca-cor",
                           "--rates", "0", "--reps", "2", "--seed", "1")
        assert code == 4 and "zero successful" in out

    def test_version(self, capsys):
        assert run(capsys, "--version")[0] == 0
