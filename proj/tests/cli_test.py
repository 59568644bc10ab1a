"""End-to-end checks of the raygroup command line."""
import json
import os
import subprocess
import sys
import tempfile

BIN, FIXTURES = sys.argv[1], sys.argv[2]
failures = []


def run(*args):
    return subprocess.run([BIN, *args], capture_output=True, text=True)


def expect(name, cond, detail=""):
    print(("ok   " if cond else "FAIL ") + name + (f" ({detail})" if detail and not cond else ""))
    if not cond:
        failures.append(name)


def fx(name):
    return os.path.join(FIXTURES, name)


with tempfile.TemporaryDirectory() as tmp:
    cfg = fx("default_config.json")

    r = run("run", "--config", cfg, "--scene", fx("pipeline_room"), "--out", os.path.join(tmp, "a"), "--ply")
    expect("run exits 0", r.returncode == 0, r.stderr)
    for name in ("report.json", "scene.ply", "seeds.ply", "anchors.ply"):
        expect(f"run writes {name}", os.path.exists(os.path.join(tmp, "a", name)))
    r2 = run("run", "--config", cfg, "--scene", fx("pipeline_room.pts"), "--out", os.path.join(tmp, "b"))
    with open(os.path.join(tmp, "a", "report.json"), "rb") as f1, open(os.path.join(tmp, "b", "report.json"), "rb") as f2:
        expect("reports byte-identical", r2.returncode == 0 and f1.read() == f2.read())

    bad_cfg = os.path.join(tmp, "bad.json")
    with open(bad_cfg, "w") as f:
        json.dump({"P": 9, "unknown_knob": 1}, f)
    r = run("run", "--config", bad_cfg, "--scene", fx("unit_room"), "--out", os.path.join(tmp, "c"))
    expect("unknown config key exits 2", r.returncode == 2, r.stderr)
    expect("unknown key is named", "unknown_knob" in r.stderr, r.stderr)

    r = run("run", "--config", cfg, "--scene", os.path.join(tmp, "nope"), "--out", os.path.join(tmp, "d"))
    expect("missing scene exits 3", r.returncode == 3, r.stderr)
    r = run("run", "--config", os.path.join(tmp, "nope.json"), "--scene", fx("unit_room"), "--out", tmp)
    expect("missing config exits 3", r.returncode == 3, r.stderr)
    r = run("run", "--scene", fx("unit_room"))
    expect("missing option exits 2", r.returncode == 2)

    r = run("eval", "--dets", fx("eval_dets.json"), "--gt", fx("eval_gt.json"))
    expect("eval exits 0", r.returncode == 0, r.stderr)
    expected = json.load(open(fx("eval_expected.json")))
    out = json.loads(r.stdout) if r.returncode == 0 else {"results": []}
    for res in out["results"]:
        key = "0.25" if res["iou"] == 0.25 else "0.5"
        expect(f"eval mAP@{key}", abs(res["mAP"] - expected[key]["mAP"]) <= 1e-12)
    r = run("eval", "--dets", fx("eval_dets.json"), "--gt", fx("eval_gt.json"), "--iou", "0.5")
    expect("eval single threshold", r.returncode == 0 and len(json.loads(r.stdout)["results"]) == 1)
    r = run("eval", "--dets", fx("eval_dets.json"), "--gt", fx("eval_gt.json"), "--iou", "0.5,x")
    expect("bad threshold exits 2", r.returncode == 2)
    r = run("eval", "--dets", fx("eval_dets.json"), "--gt", fx("eval_gt.json"), "--iou", "1.5")
    expect("threshold out of range exits 2", r.returncode == 2)

    spec = fx("pipeline_room.spec.json")
    target = os.path.join(tmp, "room")
    r = run("synth", "--spec", spec, "--out", target)
    expect("synth exits 0", r.returncode == 0, r.stderr)
    for ext in (".pts", ".ann"):
        with open(target + ext, "rb") as a, open(fx("pipeline_room" + ext), "rb") as b:
            expect(f"synth reproduces committed fixture {ext}", a.read() == b.read())
    bad_spec = os.path.join(tmp, "bad_spec.json")
    with open(bad_spec, "w") as f:
        json.dump({"n_objects": 1, "size_range": {"min": [0, 1, 1], "max": [1, 1, 1]}}, f)
    r = run("synth", "--spec", bad_spec, "--out", target)
    expect("invalid spec exits 2", r.returncode == 2, r.stderr)

print(f"{len(failures)} failures")
sys.exit(1 if failures else 0)
