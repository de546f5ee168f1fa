import csv
import json

from sketchpit.bench import BenchConfig
from sketchpit.cli import build_parser, load_config, main
from sketchpit.trace import ZipfSpec, trace_load, trace_zipf

ZIPF = "2000,200,1.0,1"


def test_flags_follow_config_fields():
    args = build_parser().parse_args(["bench", "--algo", "hash", "--p", "0.1", "--runs", "3", "--prefix", "100"])
    assert (args.command, args.algo, args.p, args.runs, args.prefix) == ("bench", "hash", 0.1, 3, 100)
    assert args.warmup is True
    assert build_parser().parse_args(["bench", "--no-warmup"]).warmup is False
    assert build_parser().parse_args(["bench", "--warmup", "false"]).warmup is False


def test_memory_to_csv(tmp_path):
    out = str(tmp_path / "memory.csv")
    assert main(["memory", "--algo", "spacesaving", "--zipf", ZIPF, "--runs", "2", "--out", out]) == 0
    with open(out, "r", encoding="utf8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["algorithm", "trace", "protocol", "metric", "mean", "ci95", "runs", "units"]
    assert ["spacesaving", "memory_bytes", "800"] in [[r[0], r[3], r[4]] for r in rows[1:]]
    with open(out + ".json", "r", encoding="utf8") as f:
        sidecar = json.load(f)
    assert sidecar["command"] == "memory"
    assert sidecar["config"]["runs"] == 2
    assert sidecar["prng"] == "PCG64"


def test_accuracy_to_stdout(capsys):
    assert main(["accuracy", "--algo", "hash", "--zipf", ZIPF, "--runs", "1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("algorithm,trace,protocol,metric,mean,ci95,runs,units\n")
    assert "hash,zipf-a1-u200-s1[2000],per_flow,avgerr,0,0,1,items" in out
    assert '"' not in out


def test_bench_all_protocols(tmp_path):
    out = str(tmp_path / "tp.csv")
    argv = ["bench", "--algo", "nitrohash", "--zipf", ZIPF, "--runs", "1", "--protocol", "all", "--no-warmup"]
    assert main(argv + ["--out", out]) == 0
    with open(out, "r", encoding="utf8") as f:
        protocols = {r["protocol"] for r in csv.DictReader(f)}
    assert protocols == {"write_only", "write_read", "read_only"}


def test_gen_and_stats(tmp_path, capsys):
    path = str(tmp_path / "zipf.txt")
    assert main(["gen", "--zipf", ZIPF, "--out", path]) == 0
    trace = trace_zipf(ZipfSpec.parse(ZIPF))
    assert trace_load(path).items == trace.items
    capsys.readouterr()
    assert main(["stats", "--trace", path, "--prefix", "500"]) == 0
    assert "n_items=500" in capsys.readouterr().out


def test_config_path(tmp_path):
    path = str(tmp_path / "config.json")
    BenchConfig(algo="cms", runs=5, zipf=ZIPF).save_json(path)
    assert load_config(["memory", "--config_path", path]).algo == "cms"

    out = str(tmp_path / "cms.csv")
    assert main(["memory", "--config_path", path, "--runs", "1", "--out", out]) == 0
    with open(out + ".json", "r", encoding="utf8") as f:
        config = json.load(f)["config"]
    assert (config["algo"], config["runs"], config["zipf"]) == ("cms", 1, ZIPF)
    # a sidecar is a valid config source too
    reloaded = load_config(["bench", "--config_path", out + ".json"])
    assert (reloaded.algo, reloaded.runs) == ("cms", 1)


def test_errors_exit_with_one(tmp_path, capsys):
    assert main(["memory", "--algo", "hash"]) == 1
    assert "[!]" in capsys.readouterr().err
    assert main(["memory", "--algo", "hash", "--trace", str(tmp_path / "missing.txt")]) == 1
    assert main(["memory", "--algo", "bloom", "--zipf", ZIPF]) == 1
    assert main(["bench", "--runs", "0", "--zipf", ZIPF]) == 1
    assert main(["memory", "--config_path", str(tmp_path / "missing.json")]) == 1
