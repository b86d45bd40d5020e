"""Smoke test for the ruelle extension module.

Build and install it first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python python/smoke_test.py`.
"""

import math

import ruelle


def main():
    flat = ruelle.Model()
    assert abs(flat.area - 4 * math.pi) < 1e-12
    assert abs(flat.gaussian_curvature(0.1, -0.2) + 1.0) < 1e-9

    bumpy = ruelle.Model(epsilon=0.05)
    report = bumpy.verify_anosov(n_samples=16)
    assert report["lambda_estimate"] > 0.5, report

    edges = ruelle.band_edges(flat, k=1, n_orbits=8, windows=[25.0, 50.0])
    assert abs(edges["gamma_minus"] + 1.5) < 1e-9 and abs(edges["gamma_plus"] + 1.5) < 1e-9, edges

    eigs = ruelle.synthetic_spectrum(flat.area, 99.0)
    assert len(eigs) == 100 and eigs[0] == 0.0
    catalogue = ruelle.resonances(flat.area, eigs, k_max=1)
    assert all(r["re"] in (-0.5, -1.5) for r in catalogue if r["band"] in (0, 1))
    direct = sum(1 for mu in eigs if mu > 0.25 and 5.0 <= math.sqrt(mu - 0.25) < 6.0)
    assert ruelle.weyl_count(catalogue, 0, 5.0) == direct > 0
    bands = [{"k": 0, "gamma_minus": -0.5, "gamma_plus": -0.5}, {"k": 1, "gamma_minus": -1.5, "gamma_plus": -1.5}]
    membership = ruelle.band_membership(catalogue, bands, eps=1e-9)
    assert membership["violations"] == 0, membership["violations"]
    conc = ruelle.concentration(catalogue, -0.5, [5.0, 20.0])
    assert all(p["statistic"] in (None, 0.0) for p in conc["points"])

    dt = 0.05
    z = complex(-0.3, 2.0)
    signal = [2 * (0.7 * math.e ** (z.real * m * dt) * math.cos(z.imag * m * dt)) for m in range(400)]
    modes = ruelle.harmonic_inversion(signal, dt, max_modes=4)
    assert min(abs(w - z) for w, _ in modes) < 1e-8, modes

    values, stderr = ruelle.correlation(flat, 0.1, 20, 2000, u="bump0:0,0,0.8", v="bump0:0,0,0.8", seed=1)
    assert len(values) == 20 and values[0] > 0 and all(s >= 0 for s in stderr)

    try:
        ruelle.Model(config="epsilon = -1")
    except ruelle.RuelleError as e:
        assert str(e).startswith("config"), e
    else:
        raise AssertionError("negative epsilon accepted")

    print("ruelle smoke test passed")


if __name__ == "__main__":
    main()
