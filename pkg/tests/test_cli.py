import json

import pytest

from rogs.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def write(tmp_path):
    def _write(text, name="h.txt"):
        p = tmp_path / name
        p.write_text(text)
        return p

    return _write


class TestGroup:
    def test_toy(self, capsys, fixture_path):
        code, out, _ = run(capsys, "group", "--hamiltonian", fixture_path("toy_n3"))
        data = json.loads(out)
        assert code == 0 and sorted(data["sizes"]) == [1, 7]

    def test_single_term(self, capsys, write):
        code, out, _ = run(capsys, "group", "--hamiltonian", write("0.5 XZ\n"))
        assert code == 0 and json.loads(out)["sizes"] == [1]

    def test_csv(self, capsys, write):
        code, out, _ = run(capsys, "group", "--hamiltonian", write("1 ZI\n1 IZ\n1 XX\n"), "--format", "csv")
        assert code == 0 and out.splitlines()[0] == "group,basis,size,members"

    def test_malformed(self, capsys, write):
        code, _, err = run(capsys, "group", "--hamiltonian", write("1.0 XZ\n1.0 XYZ\n"))
        assert code == 2 and "line 2" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "group", "--hamiltonian", tmp_path / "nope.txt")[0] == 2


class TestAllocate:
    def test_json(self, capsys, fixture_path):
        code, out, _ = run(capsys, "allocate", "--hamiltonian", fixture_path("toy_n4"), "--shots", 1000)
        data = json.loads(out)
        assert code == 0 and sum(data["shots"]) == 1000
        assert abs(sum(data["weights"]) - 1) < 1e-9

    def test_small_budget_skips_groups(self, capsys, fixture_path):
        code, out, _ = run(capsys, "allocate", "--hamiltonian", fixture_path("rand_n6_L200"), "--shots", 5)
        data = json.loads(out)
        assert code == 0 and data["n_circuit"] < data["n_groups"]

    def test_symmetric_split(self, capsys, write):
        code, out, _ = run(capsys, "allocate", "--hamiltonian", write("1 ZZ\n1 ZI\n1 XX\n1 XI\n"), "--shots", 10)
        assert code == 0 and json.loads(out)["shots"] == [5, 5]

    def test_bad_shots(self, capsys, fixture_path):
        assert run(capsys, "allocate", "--hamiltonian", fixture_path("toy_n3"), "--shots", 0)[0] == 2


class TestEstimate:
    def test_eigenstate_is_exact(self, capsys, write):
        code, out, _ = run(capsys, "estimate", "--hamiltonian", write("1 Z\n"), "--shots", 100, "--seed", 1)
        assert code == 0 and json.loads(out)["estimate"] == -1.0

    def test_reproducible(self, capsys, fixture_path):
        argv = ("estimate", "--hamiltonian", fixture_path("rand_n6_L50"), "--shots", 500, "--seed", 77)
        first = run(capsys, *argv)[1]
        assert run(capsys, *argv)[1] == first

    def test_toy_accuracy(self, capsys, fixture_path):
        code, out, _ = run(capsys, "estimate", "--hamiltonian", fixture_path("toy_n3"), "--shots", 1000, "--seed", 3)
        assert code == 0 and json.loads(out)["abs_error"] < 0.05

    def test_seed_required(self, capsys, fixture_path):
        code, _, err = run(capsys, "estimate", "--hamiltonian", fixture_path("toy_n3"), "--shots", 10)
        assert code == 2 and "--seed" in err

    def test_seed_range(self, capsys, fixture_path):
        assert run(capsys, "estimate", "--hamiltonian", fixture_path("toy_n3"), "--shots", 10, "--seed", 2**64)[0] == 2

    def test_unknown_method_is_usage_error(self, capsys, fixture_path):
        with pytest.raises(SystemExit) as info:
            main(["estimate", "--hamiltonian", str(fixture_path("toy_n3")), "--method", "nope"])
        assert info.value.code == 2


class TestBench:
    def test_byte_identical(self, capsys, tmp_path, fixture_path):
        argv = ["bench", "--hamiltonian", fixture_path("toy_n3"), "--hamiltonian", fixture_path("toy_n4"),
                "--shots", 100, "--shots", 300, "--repeats", 3, "--seed", 9]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(capsys, *argv, "--out", a)[0] == 0
        assert run(capsys, *argv, "--out", b, "--workers", 3)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 1 + 2 * 2 * 2

    def test_config_file(self, capsys, tmp_path, fixture_path, write):
        cfg = write(f"hamiltonian = {fixture_path('toy_n3')}\nshots = 50, 100\nseed = 4\nrepeats = 2\n"
                    "method = even_distribution\n", "bench.ini")
        code, out, _ = run(capsys, "bench", "--config", cfg)
        rows = out.splitlines()
        assert code == 0 and len(rows) == 3 and all(r.startswith("even_distribution") for r in rows[1:])
        # flags override the file
        code, out, _ = run(capsys, "bench", "--config", cfg, "--repeats", 1, "--shots", 70)
        assert out.splitlines()[1].split(",")[2:4] == ["70", "1"]

    def test_bad_config_key(self, capsys, write):
        assert run(capsys, "bench", "--config", write("colour = blue\n", "c.ini"))[0] == 2

    def test_missing_seed(self, capsys, fixture_path):
        assert run(capsys, "bench", "--hamiltonian", fixture_path("toy_n3"), "--shots", 10)[0] == 2

    def test_json_side_output(self, capsys, tmp_path, fixture_path):
        js = tmp_path / "r.json"
        code, _, _ = run(capsys, "bench", "--hamiltonian", fixture_path("toy_n3"), "--shots", 50, "--repeats", 2,
                         "--seed", 1, "--json-out", js)
        rows = json.loads(js.read_text())["rows"]
        assert code == 0 and all(len(r["estimates"]) == 2 for r in rows)


class TestToyModel:
    def test_writes_parseable(self, capsys, tmp_path):
        out = tmp_path / "toy.txt"
        assert run(capsys, "toy-model", 3, "--out", out)[0] == 0
        code, text, _ = run(capsys, "group", "--hamiltonian", out)
        assert code == 0 and sorted(json.loads(text)["sizes"]) == [1, 7]

    def test_out_of_range(self, capsys):
        assert run(capsys, "toy-model", 1)[0] == 2
