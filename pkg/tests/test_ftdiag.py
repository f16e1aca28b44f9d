import numpy as np
import pytest

from speclab import ftdiag, grids, potentials
from speclab.grids import GridFunction, Mode

from conftest import l1_bump


@pytest.fixture(scope="module")
def g():
    return grids.make_grid(Mode.RADIAL_SWAVE, 10.0, 150)


def test_lambda_grid_symmetric_offset():
    lams, delta = ftdiag.lambda_grid(256, 8.0)
    assert len(lams) == 256
    assert np.abs(lams + lams[::-1]).max() < 1e-12  # symmetric about 0
    assert np.abs(lams).min() == pytest.approx(delta / 2.0)  # avoids 0
    with pytest.raises(ValueError):
        ftdiag.lambda_grid(255, 8.0)


def test_window_partition_is_exact():
    lams, _ = ftdiag.lambda_grid(128, 8.0)
    cuts = ftdiag.window_cutoffs(lams, 1.0, 0.25)
    total = cuts["LOW"] + cuts["MID"] + cuts["HIGH"]
    assert np.abs(total - 1.0).max() < 1e-14


def test_transform_concentrates_pure_phase():
    # Parseval sanity: transform of e^{i a lambda} chi(lambda) concentrates
    # at rho = a
    # lam_max = 2 exactly contains supp(chi), so the resolution unit is
    # comparable to the width of chi_hat and the 4-unit window holds its mass
    n, lam_max, a = 128, 2.0, 3.0
    lams, delta = ftdiag.lambda_grid(n, lam_max)
    from speclab.birman import smooth_cutoff

    samples = (np.exp(1j * a * lams) * smooth_cutoff(lams))[:, None]
    rho, hat = ftdiag._transform(samples, lams, delta)
    mass = np.abs(hat[:, 0])
    res = 2.0 * np.pi / (n * delta)
    near = np.abs(rho - a) <= 4.0 * res
    assert mass[near].sum() / mass.sum() > 0.9
    assert abs(rho[np.argmax(mass)] - a) <= res


def test_free_total_is_cutoff_transform(g):
    # T = I for V = 0, so the scan total is ||chi_hat||_1 ||f||_1
    f = l1_bump(g)
    V = potentials.gaussian_well(g, depth=0.0)
    params = {"n": 256, "lam_max": 8.0, "lambda1": 1.0}
    scan = ftdiag.t_hat_l1_scan(V, g, f, "LOW", params)
    # LOW cutoff is chi(lambda / r) with r = 0.25 by default
    got = scan.total / grids.lp_norm(f, 1)
    assert got == pytest.approx(ftdiag.chi_hat_l1(0.25, n=256, lam_max=8.0), rel=1e-4)


def test_additivity_of_windows(g):
    f = l1_bump(g)
    V = potentials.gaussian_well(g, depth=2.0)
    res = ftdiag.uncut_additivity_residual(V, g, f, {"n": 128, "lam_max": 8.0})
    assert res < 1e-10


def test_dlambda_kernel_modulus():
    # the closed form (16 pi i t)^{-1/2} e^{i (rho - d)^2 / 4t}: transform
    # modulus is (16 pi |t|)^{-1/2} uniformly in (rho, d)
    for t in (1.0, 4.0):
        assert ftdiag.dlambda_kernel_check(t) < 0.02


def test_vb_hat_scales_in_r_and_V(g):
    V = potentials.gaussian_well(g, depth=4.0, width=1.0)
    out = ftdiag.vb_hat_bound_check(V, g, 0.0, 0.5, halvings=4)
    eps = V.epsilon
    assert out["fitted_exponent"] >= eps - 0.1
    V2 = potentials.gaussian_well(g, depth=8.0, width=1.0)
    out2 = ftdiag.vb_hat_bound_check(V2, g, 0.0, 0.5, halvings=1)
    ratio = out2["values"][0] / out["values"][0]
    assert ratio == pytest.approx(2.0, rel=0.05)


def test_scan_csv_and_json(tmp_path, g):
    f = l1_bump(g)
    V = potentials.gaussian_well(g, depth=2.0)
    scan = ftdiag.t_hat_l1_scan(V, g, f, "HIGH", {"n": 128, "lam_max": 8.0})
    path = tmp_path / "scan.csv"
    scan.to_csv(str(path))
    assert path.read_text().splitlines()[0] == "rho,l1_profile"
    jpath = tmp_path / "scan.json"
    scan.to_json(str(jpath))
    payload = scan.summary()
    assert payload["window"] == "HIGH"
    assert payload["verdict"] in ("OK", "DIVERGENT")
