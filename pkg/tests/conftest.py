import numpy as np

FD_STEP = 1e-5
# components smaller than this are compared on an absolute scale
FD_FLOOR = 1e-6


def finite_difference(loss_fn, tree, paths, step=FD_STEP):
    """Central differences of loss_fn() over every entry of tree[path]."""
    grads = {}
    for path in paths:
        arr = tree[path]
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            up = loss_fn()
            arr[idx] = orig - step
            down = loss_fn()
            arr[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads[path] = g
    return grads


def max_relative_error(analytic, numeric):
    worst = 0.0
    for path, n in numeric.items():
        a = analytic[path]
        rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), FD_FLOOR)
        worst = max(worst, float(rel.max()))
    return worst


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
