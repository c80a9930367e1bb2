import json

import pytest

from cgstitch.cli import (
    EXIT_INPUT,
    EXIT_NOT_FOUND,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from cgstitch.depset import artifact_rel_path

from support.jvmasm import ACC_PUBLIC, ACC_STATIC, ClassFile, make_jar
from support.progs import coord


def lib_jar():
    cf = ClassFile("lib/Util")
    code = cf.code()
    code.iconst_0().ireturn()
    cf.add_method("max", "(II)I", ACC_PUBLIC | ACC_STATIC, code)
    return make_jar({"lib/Util.class": cf.to_bytes()})


def app_jar():
    cf = ClassFile("app/Main")
    code = cf.code()
    code.invokestatic("lib/Util", "max", "(II)I").pop().return_()
    cf.add_method("main", "([Ljava/lang/String;)V", ACC_PUBLIC | ACC_STATIC, code)
    return make_jar({"app/Main.class": cf.to_bytes()})


@pytest.fixture
def repo(tmp_path):
    root = tmp_path / "repo"
    for c, data in [(coord("com.x:lib:1.0"), lib_jar()),
                    (coord("com.x:app:1.0"), app_jar())]:
        path = root / artifact_rel_path(c)
        path.parent.mkdir(parents=True)
        path.write_bytes(data)
    return root


@pytest.fixture
def tree_file(tmp_path):
    path = tmp_path / "tree.json"
    path.write_text(json.dumps({
        "coordinate": "com.x:app:1.0",
        "children": [{"coordinate": "com.x:lib:1.0"}],
    }))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_missing_subcommand_is_usage(self, capsys):
        code, out, _ = run(capsys)
        assert code == EXIT_USAGE and out == ""

    def test_malformed_coordinate_is_usage(self, capsys, tmp_path):
        jar = tmp_path / "x.jar"
        jar.write_bytes(lib_jar())
        code, out, err = run(
            capsys, "ingest", "--jar", jar, "--coordinate", "not-a-coordinate",
            "--pool", tmp_path / "pool",
        )
        assert code == EXIT_USAGE and out == ""
        assert "usage error" in err

    def test_unreadable_tree_is_input_error(self, capsys, tmp_path):
        code, out, err = run(
            capsys, "resolve", "--tree", tmp_path / "absent.json",
        )
        assert code == EXIT_INPUT and out == ""
        assert "input error" in err

    def test_non_jar_file_is_input_error(self, capsys, tmp_path):
        bogus = tmp_path / "bogus.jar"
        bogus.write_text("not a zip")
        code, out, _ = run(
            capsys, "ingest", "--jar", bogus, "--coordinate", "g:a:1",
            "--pool", tmp_path / "pool",
        )
        assert code == EXIT_INPUT and out == ""

    def test_missing_artifact_is_not_found(self, capsys, tmp_path, tree_file):
        code, out, err = run(
            capsys, "stitch", "--tree", tree_file,
            "--pool", tmp_path / "pool", "--repo", tmp_path / "empty-repo",
            "--out", tmp_path / "out.json",
        )
        assert code == EXIT_NOT_FOUND and out == ""
        assert "com.x:app:1.0" in err

    def test_no_pool_anywhere_is_usage(self, capsys, tmp_path, monkeypatch):
        monkeypatch.delenv("CGSTITCH_POOL", raising=False)
        jar = tmp_path / "x.jar"
        jar.write_bytes(lib_jar())
        code, out, _ = run(capsys, "ingest", "--jar", jar, "--coordinate", "g:a:1")
        assert code == EXIT_USAGE and out == ""


def test_pool_env_var_fallback(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("CGSTITCH_POOL", str(tmp_path / "pool"))
    jar = tmp_path / "x.jar"
    jar.write_bytes(lib_jar())
    code, out, _ = run(capsys, "ingest", "--jar", jar, "--coordinate",
                       "com.x:lib:1.0")
    assert code == EXIT_OK
    assert json.loads(out)["coordinate"] == "com.x:lib:1.0"


def test_ingest_reports_counts(capsys, tmp_path):
    jar = tmp_path / "lib.jar"
    jar.write_bytes(lib_jar())
    code, out, _ = run(
        capsys, "ingest", "--jar", jar, "--coordinate", "com.x:lib:1.0",
        "--pool", tmp_path / "pool",
    )
    assert code == EXIT_OK
    obj = json.loads(out)
    assert obj == {
        "coordinate": "com.x:lib:1.0",
        "classes": 1,
        "methods": 1,
        "callSites": 0,
        "internalEdges": 0,
        "skippedEntries": 0,
    }


def test_resolve_reports_winners_and_log(capsys, tmp_path):
    tree = tmp_path / "t.json"
    tree.write_text(json.dumps({
        "coordinate": "g:root:1",
        "children": [
            {"coordinate": "g:a:1", "children": [{"coordinate": "g:x:9"}]},
            {"coordinate": "g:x:1"},
        ],
    }))
    code, out, _ = run(capsys, "resolve", "--tree", tree)
    assert code == EXIT_OK
    obj = json.loads(out)
    assert obj["winners"] == ["g:root:1", "g:a:1", "g:x:1"]
    assert obj["mediationLog"] == [
        {"ga": "g:x", "winner": "1", "losers": [{"version": "9", "depth": 2}]},
    ]


def test_stitch_writes_graph_and_summary(capsys, tmp_path, repo, tree_file):
    out_file = tmp_path / "cg.json"
    code, out, err = run(
        capsys, "stitch", "--tree", tree_file, "--pool", tmp_path / "pool",
        "--repo", repo, "--out", out_file,
    )
    assert code == EXIT_OK
    summary = json.loads(out)
    assert summary["edges"] == 1 and summary["generations"] == 2
    timings = json.loads(err.strip().splitlines()[-1])
    assert set(timings) == {"poolMs", "uchMs", "stitchMs", "generations"}

    graph = json.loads(out_file.read_text())
    assert {
        "source": "com.x:app:1.0!app/Main.main([Ljava/lang/String;)V",
        "target": "com.x:lib:1.0!lib/Util.max(II)I",
        "kind": "STATIC",
        "pc": 0,
    } in graph["edges"]
    assert "stats" not in graph


def test_stitch_output_is_byte_identical_across_runs_and_jobs(
        capsys, tmp_path, repo, tree_file):
    outputs = []
    for i, jobs in enumerate((1, 8, 1)):
        out_file = tmp_path / ("cg%d.json" % i)
        code, _, _ = run(
            capsys, "stitch", "--tree", tree_file, "--pool", tmp_path / "pool",
            "--repo", repo, "--out", out_file, "--jobs", jobs,
        )
        assert code == EXIT_OK
        outputs.append(out_file.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_stitch_flat_set_matches_tree(capsys, tmp_path, repo, tree_file):
    set_file = tmp_path / "set.txt"
    set_file.write_text("# pre-mediated\ncom.x:app:1.0\ncom.x:lib:1.0\n")
    out_tree, out_set = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "stitch", "--tree", tree_file, "--pool", tmp_path / "pool",
        "--repo", repo, "--out", out_tree)
    run(capsys, "stitch", "--set", set_file, "--pool", tmp_path / "pool",
        "--repo", repo, "--out", out_set)
    assert out_tree.read_bytes() == out_set.read_bytes()


def test_fast_path_flag_output_identical(capsys, tmp_path, repo, tree_file):
    plain, fast = tmp_path / "p.json", tmp_path / "f.json"
    run(capsys, "stitch", "--tree", tree_file, "--pool", tmp_path / "pool",
        "--repo", repo, "--out", plain)
    run(capsys, "stitch", "--tree", tree_file, "--pool", tmp_path / "pool",
        "--repo", repo, "--out", fast, "--fast-path")
    assert plain.read_bytes() == fast.read_bytes()


def test_pool_stats_accumulate_across_invocations(capsys, tmp_path, repo,
                                                  tree_file):
    pool = tmp_path / "pool"
    out_file = tmp_path / "cg.json"
    run(capsys, "stitch", "--tree", tree_file, "--pool", pool,
        "--repo", repo, "--out", out_file)
    run(capsys, "stitch", "--tree", tree_file, "--pool", pool,
        "--repo", repo, "--out", out_file)
    code, out, _ = run(capsys, "pool-stats", "--pool", pool)
    assert code == EXIT_OK
    stats = json.loads(out)
    assert stats["requests"] == 4
    assert stats["generations"] == 2  # second run was fully warm
    assert stats["hits"] == 2 and stats["misses"] == 2
    assert stats["avoided"] == 2


def test_bench_csv_shape_and_warm_second_round(capsys, tmp_path, repo,
                                               tree_file):
    code, out, err = run(
        capsys, "bench", "--trees", tree_file, "--pool", tmp_path / "pool",
        "--repo", repo, "--rounds", "2",
    )
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    header = lines[0].split(",")
    assert header == ["round", "tree", "deps", "poolMs", "uchMs", "stitchMs",
                      "totalMs", "generationsAvoided"]
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    # per round: one row per tree plus a TOTAL row
    assert [r["tree"] for r in rows] == ["tree.json", "TOTAL"] * 2
    round1, round2 = rows[0], rows[2]
    assert int(round1["generationsAvoided"]) == 0  # cold: everything generated
    assert int(round2["generationsAvoided"]) == 2  # warm: all pool hits
    assert err  # human-readable mirror on stderr
