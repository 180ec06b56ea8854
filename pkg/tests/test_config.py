import pytest

from fracgreen import ConfigurationError
from fracgreen.config import OUTPUT_ENV, parse_config, parse_config_string

BASE = """
[kernel]
s = 0.5
[grid]
n = 2
N_side = 17
"""


def test_defaults():
    cfg = parse_config_string(BASE)
    assert cfg.kernel.family == "pure_fractional" and cfg.potential.kind == "zero"
    assert cfg.solver.cg_tolerance == 1e-10 and cfg.seed == 0
    assert cfg.diagnostics.gamma == 0.25 and cfg.schedule is None


def build(**sections):
    base = {"kernel": {"s": "0.5"}, "grid": {"n": "2", "N_side": "17"}}
    for name, kv in sections.items():
        base.setdefault(name, {}).update(kv)
    return "\n".join(f"[{n}]\n" + "\n".join(f"{k} = {v}" for k, v in kv.items()) for n, kv in base.items())


@pytest.mark.parametrize("sections,needle", [
    ({"kernel": {"s": "1.2"}}, "s in (0,1)"),
    ({"kernel": {"lambda": "3", "Lambda": "2", "family": "modulated"}}, "lambda <= Lambda"),
    ({"grid": {"n": "1"}}, "n >= 2"),
    ({"potential": {"kind": "constant", "value": "1", "q": "1.5"}}, "q > n/(2s)"),
    ({"diagnostics": {"gamma": "0.6"}}, "gamma in (0,s)"),
    ({"diagnostics": {"p": "2.5"}}, "1 <= p < n/(n-2s)"),
    ({"grid": {"N_side": "2"}}, "N_side >= 3"),
    ({"bogus": {"x": "1"}}, "unknown config sections"),
    ({"run": {"negate_ordering": "true"}}, "unknown keys in [run]"),
    ({"grid": {"N_side": "abc"}}, "N_side"),
    ({"rhs": {"kind": "tabulated"}}, "needs a path"),
    ({"schedule": {"radii": "2, 4", "scales": "8", "h": "0.1"}}, "h <= 1/(4l)"),
])
def test_constraint_messages(sections, needle):
    with pytest.raises(ConfigurationError) as ei:
        parse_config_string(build(**sections))
    assert needle in str(ei.value)


def test_schedule_and_fit_sections():
    cfg = parse_config_string(BASE + "[schedule]\nradii = 2, 4, 8\nscales = 8\n[fit]\nr_min = 0.5\nr_max = 2\n")
    assert cfg.schedule.radii == (2.0, 4.0, 8.0) and cfg.fit_window == (0.5, 2.0)


def test_centers_and_potential_tables():
    cfg = parse_config_string(BASE + "[diagnostics]\ncenters = 0,0; 0.5,0\n"
                              "[potential]\nkind = tabulated\nradii = 0, 1\nvalues = 1, 0\nq = 4\n")
    assert cfg.diagnostics.centers == ((0.0, 0.0), (0.5, 0.0))
    assert cfg.potential.values == (1.0, 0.0)


def test_output_override(monkeypatch):
    cfg = parse_config_string(BASE + "[run]\noutput_dir = here\n")
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert cfg.resolved_output_dir() == "here"
    monkeypatch.setenv(OUTPUT_ENV, "env")
    assert cfg.resolved_output_dir() == "env"
    assert cfg.resolved_output_dir("flag") == "flag"


def test_rhs_path_relative_to_config(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(BASE + "[rhs]\nkind = tabulated\npath = f.csv\n")
    cfg = parse_config(p)
    assert cfg.rhs.path == str(tmp_path / "f.csv")
    with pytest.raises(ConfigurationError):
        parse_config(tmp_path / "missing.ini")
