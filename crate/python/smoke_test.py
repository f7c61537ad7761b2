"""Smoke test for the critkit extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import pathlib
import tempfile

import critkit

ROOT = pathlib.Path(__file__).resolve().parent.parent


def laplacian(n):
    t = []
    for i in range(n):
        t.append((i, i, 2.0))
        if i > 0:
            t.append((i, i - 1, -1.0))
        if i + 1 < n:
            t.append((i, i + 1, -1.0))
    return critkit.SparseMatrix(n, n, t)


def main():
    a = laplacian(257)
    assert a.shape == (257, 257) and a.nnz == 3 * 257 - 2
    x, its, ok = critkit.gmres(a, [1.0] * 257, rtol=1e-10, preconditioner="sgmasm", min_coarse=20)
    r = [bi - ai for bi, ai in zip([1.0] * 257, a.matvec(x))]
    assert ok and max(abs(v) for v in r) < 1e-7, its
    print(f"gmres + sgmasm: {its} iterations")

    inf = critkit.SlabProblem([1.0] * 4, [0] * 4, [([1.0], [0.6], [0.5], [1.0])], 4, "reflective", "reflective")
    k, _, n = inf.nda()
    assert abs(k - 1.25) < 1e-10 and abs(inf.transport_eigen() - 1.25) < 1e-10
    print(f"infinite medium: k = {k:.12f} after {n} Picard iterations")

    two = critkit.SlabProblem(
        [1.0] * 16,
        [0] * 16,
        [([0.65, 1.3], [0.5, 0.1, 0.0, 1.1], [0.01, 0.2], [1.0, 0.0])],
    )
    kt = two.transport_eigen(newton_tol=1e-12)
    kn, phi, n = two.nda(tol=1e-9)
    assert abs(kt - kn) < 1e-6 and len(phi) == 32
    print(f"two-group slab: transport {kt:.10f}, nda {kn:.10f} ({n} Picard)")

    with tempfile.TemporaryDirectory() as out:
        ks = critkit.solve(str(ROOT / "configs" / "infinite_medium.cfg"), "diffusion-eigen", out)
        assert abs(ks[0] - 1.25) < 1e-9
        assert (pathlib.Path(out) / "metrics.csv").exists()

    try:
        critkit.SparseMatrix(2, 2, [(5, 0, 1.0)])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range triplet accepted")
    print("ok")


if __name__ == "__main__":
    main()
