import numpy as np
import pytest

from sdtorus import eigenfunction as ef
from sdtorus import threepole as tp
from sdtorus.eigenfunction import PointClass
from sdtorus.metric import einstein_metric

# one Type II representative per open region class, plus the special points
TYPE_II_REPRESENTATIVES = {
    "A": (1.0, 2.0, -0.12),
    "B": (1.0, 1.14, 1.57),
    "C": (1.0, -0.97, 1.88),
    "D": (1.0, 0.62, 2.37),
    "FubiniStudy": (1.0, 1.0, 0.0),
}
TYPE_I_REPRESENTATIVES = [(1.0, 1.0, 0.0), (1.0, 1.0, 0.5), (1.0, 0.0, 2.0), (1.0, 0.0, 0.5)]


def type_ii_specs():
    return {f"II-{name}": tp.threepole_spec(tp.ThreePoleParams(*abc))
            for name, abc in TYPE_II_REPRESENTATIVES.items()}


def type_i_specs():
    return {f"I{abc}": tp.threepole_spec(tp.ThreePoleParams(*abc, kind=tp.Kind.TypeI))
            for abc in TYPE_I_REPRESENTATIVES}


def dipole_specs():
    return {"F+": ef.dipole_plus(), "F-": ef.dipole_minus(), "Fc": ef.dipole_conj()}


def random_specs(count, seed=11, max_poles=8, mixed=True, margin=1e-2):
    """Seeded random specs, skipping near-cancelling draws with no usable point in the box."""
    rng = np.random.default_rng(seed)
    probes = sample_box(40, seed + 1)
    out = []
    while len(out) < count:
        spec = ef.random_spec(rng, int(rng.integers(3, max_poles + 1)), mixed, f"rand{len(out)}")
        if any(_usable(spec, p, margin) for p in probes):
            out.append(spec)
    return out


def _usable(spec, p, margin):
    try:
        return ef.classify_point(spec, p, tol=margin) in (PointClass.PositiveScal, PointClass.NegativeScal)
    except ValueError:
        return False


def sample_box(n, seed, rho=(0.3, 2.5), eta=(-1.5, 1.5)):
    rng = np.random.default_rng(seed)
    return [(float(rng.uniform(*rho)), float(rng.uniform(*eta))) for _ in range(n)]


def good_points(spec, n, seed=0, margin=1e-2, rho=(0.3, 2.5), eta=(-1.5, 1.5), classes=None,
                max_cond=1e5, need_metric=True):
    """Seeded points away from the zero sets of F and D, where the metric is well conditioned."""
    rng = np.random.default_rng(seed)
    classes = classes or (PointClass.PositiveScal, PointClass.NegativeScal)
    out = []
    for _ in range(400 * n):
        if len(out) == n:
            break
        p = (float(rng.uniform(*rho)), float(rng.uniform(*eta)))
        try:
            if ef.classify_point(spec, p, tol=margin) not in classes:
                continue
            if need_metric and np.linalg.cond(einstein_metric(spec, p).components) > max_cond:
                continue
        except ValueError:
            continue
        out.append(p)
    assert len(out) == n, f"only {len(out)} usable points for {spec.label}"
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# acceptance summary lines

CRITERIA_RESULTS = {}


def record_criterion(number, title, ok, detail=""):
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    CRITERIA_RESULTS[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA_RESULTS):
        terminalreporter.write_line(CRITERIA_RESULTS[number])
