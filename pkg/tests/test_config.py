import pytest

from ymflow.config import RunSpec, parse_config, parse_loop, read_loops_file
from ymflow.errors import ConfigError

FULL = """
[run]
group = U1
n = 6
T = 0.05
bc = Neumann
dt = auto
seed = 7
[initial]
kind = coclosed
amplitude = 0.5
[output]
snapshot_steps = 3, 9
[compare]
ns = 6 8
tol = 0.1
[wilson]
t_eval = 0 0.02
loops = xy 1-1-1 2 3; zx 0-0-0 6 6
[check]
n = 6
n_trials = 10
"""


def test_full_parse():
    s = parse_config(FULL)
    assert s.run.group == "U1" and s.run.n == 6 and s.run.bc == "Neumann" and s.run.seed == 7
    assert s.initial.kind == "coclosed" and s.initial.amplitude == 0.5
    assert s.output.snapshot_steps == (3, 9)
    assert s.compare.ns == (6, 8) and s.compare.tol == 0.1
    assert s.wilson.t_eval == (0.0, 0.02) and len(s.wilson.loops) == 2
    assert s.wilson.loops[0].anchor == (1, 1, 1)
    assert s.check.n == 6 and s.check.n_trials == 10


def test_defaults_and_seed_override():
    s = parse_config("")
    assert s == RunSpec()
    assert s.with_seed(11).run.seed == 11
    assert s.with_seed(None) is s


def test_echo_replays():
    s = parse_config(FULL)
    d = s.as_dict()
    assert d["wilson"]["loops"] == ["xy 1-1-1 2 3", "zx 0-0-0 6 6"]
    assert d["run"]["seed"] == 7


@pytest.mark.parametrize(
    "text",
    [
        "[nope]\nx = 1\n",
        "[run]\nbogus = 1\n",
        "[run]\nn = eight\n",
        "[run]\nT = 0.01\nepsilon = 0.02\n",
        "[run]\nbc = Robin\n",
        "[initial]\nkind = strange\n",
        "[wilson]\nloops = xy 1-1 2 3\n",
        "no section header\n",
    ],
)
def test_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_loops_file(tmp_path):
    p = tmp_path / "loops.csv"
    p.write_text("plane,anchor,a,b\nxy,0-0-0,2,2\nyz,1-2-3,1,4\n")
    loops = read_loops_file(p)
    assert loops[1].plane == "yz" and loops[1].anchor == (1, 2, 3) and loops[1].b == 4
    p.write_text("plane,where,a,b\nxy,0-0-0,2,2\n")
    with pytest.raises(ConfigError):
        read_loops_file(p)
    with pytest.raises(ConfigError):
        parse_loop("xy 0-0-0 2")
