"""End-to-end acceptance checks, one printed PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as they
happen.  Two checks (3 and 4) pin targets that the implemented physics
does not meet; they are kept at their stated tolerances on purpose and
fail with the measured numbers rather than being loosened to pass.
"""

import math
import time

import numpy as np
import pytest

import tcm_tangles as tt
from tcm_tangles.scenarios import preset_config, revival_peak_time
from tcm_tangles.tangles import _wootters_batch

TANGLE_COLUMNS = ("tau_F_AA", "tau_A_rest", "tau_AA", "tau_AF", "tau_res")


@pytest.fixture
def announce(capsys):
    """Print one PASS/FAIL line straight to the terminal, capture or not."""

    def _line(num, desc, ok, detail=""):
        msg = f"ACCEPTANCE {num}: {desc}: {'PASS' if ok else 'FAIL'}"
        if detail:
            msg += f" ({detail})"
        with capsys.disabled():
            print("\n" + msg, flush=True)
        return msg

    return _line


def _timed_scenario(config):
    start = time.perf_counter()
    result = tt.run_scenario(config)
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def fig1():
    return _timed_scenario(preset_config("fig1"))


@pytest.fixture(scope="module")
def fig2_ee():
    return _timed_scenario(preset_config("fig2"))


@pytest.fixture(scope="module")
def fig2_gg():
    return _timed_scenario(preset_config("fig2", atomic="gg"))


@pytest.fixture(scope="module")
def fig3_sym():
    return _timed_scenario(preset_config("fig3"))


@pytest.fixture(scope="module")
def fig3_cat():
    return _timed_scenario(preset_config("fig3", atomic="cat_plus"))


@pytest.fixture(scope="module")
def compare500():
    return tt.compare_exact_vs_approx(preset_config("fig4"))


@pytest.fixture(scope="module")
def singlet_run():
    return tt.run_scenario(
        tt.ScenarioConfig(atomic="singlet", field="fock", n=1, t_max=4.0, steps=200)
    )


def _peak_lag(a, b):
    a = a - a.mean()
    b = b - b.mean()
    corr = np.correlate(a, b, mode="full")
    return int(np.argmax(corr)) - (a.size - 1)


def test_criterion_01_no_pair_tangle_and_common_phase(fig1, announce):
    result, elapsed = fig1
    max_tau_aa = float(np.max(np.abs(result.column("tau_AA"))))
    active = [
        (name, result.column(name))
        for name in TANGLE_COLUMNS
        if np.max(np.abs(result.column(name))) > 1e-6
    ]
    lags = {
        f"{a}/{b}": _peak_lag(col_a, col_b)
        for i, (a, col_a) in enumerate(active)
        for b, col_b in [active[j] for j in range(i + 1, len(active))]
    }
    ok = max_tau_aa < 1e-10 and all(abs(l) <= 1 for l in lags.values()) and elapsed < 60
    msg = announce(
        1,
        "excited pair + 10-photon number state: no pair tangle, curves in phase",
        ok,
        f"max tau_AA = {max_tau_aa:.3e}, peak lags {lags}, {elapsed:.1f}s",
    )
    assert ok, msg


def test_criterion_02_collapse_and_revival(fig2_ee, announce):
    result, elapsed = fig2_ee
    expected = 2.0 * math.pi * 10.0
    peak = revival_peak_time(result.gt, result.column("inversion"))
    ok = abs(peak - expected) <= 0.1 * expected and elapsed < 300
    msg = announce(
        2,
        "inversion revival near gt = 2*pi*sqrt(100)",
        ok,
        f"peak at gt = {peak:.2f}, expected {expected:.2f} +-10%, {elapsed:.1f}s",
    )
    assert ok, msg


def _sup_by_column(run_a, run_b):
    return {
        name: float(np.max(np.abs(run_a.column(name) - run_b.column(name))))
        for name in TANGLE_COLUMNS
    }


def test_criterion_03_stretched_symmetric_degeneracy(fig2_ee, fig2_gg, fig3_sym, fig3_cat, announce):
    sup_ee_gg = _sup_by_column(fig2_ee[0], fig2_gg[0])
    sup_sym_cat = _sup_by_column(fig3_sym[0], fig3_cat[0])
    worst_a = max(sup_ee_gg.values())
    worst_b = max(sup_sym_cat.values())
    ok = worst_a <= 0.05 and worst_b <= 0.05
    msg = announce(
        3,
        "tangle series agree: both-excited vs both-ground, sym vs cat (mean 100)",
        ok,
        f"sup ee/gg = {worst_a:.4f}, sup sym/cat = {worst_b:.4f}, tolerance 0.05; "
        f"per column ee/gg {sup_ee_gg}",
    )
    assert ok, msg


def test_criterion_04_large_field_approximation(compare500, announce):
    sup = compare500.window_sup_norm
    coeffs = tt.jx_coefficients(tt.atomic_state("ee"))
    c_value = tt.constant_c(coeffs)
    t_prime = tt.scaled_time(1.0, compare500.gt, 500.0)
    recomputed = 2.0 * (1.0 - (c_value - tt.h_of_t(coeffs, t_prime)) / 4.0)
    curve_matches = bool(np.max(np.abs(recomputed - compare500.approx)) < 1e-12)
    c_pinned = abs(c_value - 31.0 / 16.0) < 1e-12
    ok = sup <= 0.05 and curve_matches and c_pinned
    msg = announce(
        4,
        "approximate field-ensemble tangle within 0.05 over the validity window",
        ok,
        f"window sup = {sup:.4f} (tolerance 0.05); curve identity holds: "
        f"{curve_matches}; c = {c_value:.6g} vs pinned 31/16 = {31/16:.6g}",
    )
    assert ok, msg


def test_criterion_05_inverse_square_scaling(announce):
    result = tt.scaling_study((5, 10, 20, 40))
    ok = abs(result.slope - (-2.0)) <= 0.2
    msg = announce(
        5,
        "peak pair tangle of |gg,n> falls off as n^-2",
        ok,
        f"log-log slope = {result.slope:.4f}, expected -2 +- 0.2",
    )
    assert ok, msg


def test_criterion_06_three_qubit_anchors(announce):
    shape = tt.SystemShape((2, 2, 2))
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1.0 / math.sqrt(2.0)
    w = np.zeros(8)
    w[1] = w[2] = w[4] = 1.0 / math.sqrt(3.0)
    res_ghz = tt.i_residual_tangle(tt.PureState(shape, ghz))
    res_w = tt.i_residual_tangle(tt.PureState(shape, w))
    pair_tangles = [
        tt.wootters_tangle(tt.partial_trace(tt.PureState(shape, w), keep))
        for keep in [(0, 1), (0, 2), (1, 2)]
    ]
    ok = (
        abs(res_ghz - 1.0) < 1e-9
        and abs(res_w) < 1e-9
        and all(abs(p - 4.0 / 9.0) < 1e-9 for p in pair_tangles)
    )
    msg = announce(
        6,
        "residual tangle: GHZ = 1, W = 0 with pairwise 4/9",
        ok,
        f"GHZ - 1 = {res_ghz - 1.0:.2e}, W = {res_w:.2e}, pairs = "
        + ", ".join(f"{p:.12f}" for p in pair_tangles),
    )
    assert ok, msg


def test_criterion_07_positivity_sweep(announce):
    start = time.perf_counter()
    sweep_a = tt.positivity_sweep((2, 2, 3), samples=1_000_000, seed=0)
    sweep_b = tt.positivity_sweep((2, 2, 4), samples=1_000_000, seed=1)
    elapsed = time.perf_counter() - start
    ok = sweep_a.negative_count == 0 and sweep_b.negative_count == 0 and elapsed < 1800
    msg = announce(
        7,
        "10^6 random states per shape, residual tangle never below -1e-9",
        ok,
        f"min 2x2x3 = {sweep_a.min_value:.3e}, min 2x2x4 = {sweep_b.min_value:.3e}, "
        f"negatives = {sweep_a.negative_count}+{sweep_b.negative_count}, {elapsed:.0f}s",
    )
    assert ok, msg


# --- criterion 8 helpers -----------------------------------------------------


def _haar_batch(rng, count, dim):
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _ckw_min_residual(rng, count):
    """Smallest one-vs-rest minus pairwise-tangle margin over qubit triples."""
    tens = _haar_batch(rng, count, 8).reshape(count, 2, 2, 2)
    rho_ab = np.einsum("nabc,nxyc->nabxy", tens, tens.conj()).reshape(count, 4, 4)
    rho_ac = np.einsum("nabc,nxby->nacxy", tens, tens.conj()).reshape(count, 4, 4)
    rho_bc = np.einsum("nabc,naxy->nbcxy", tens, tens.conj()).reshape(count, 4, 4)
    tau_ab = _wootters_batch(rho_ab)
    tau_ac = _wootters_batch(rho_ac)
    tau_bc = _wootters_batch(rho_bc)

    def one_vs_rest(subscript):
        rho = np.einsum(subscript, tens, tens.conj())
        return 2.0 * (1.0 - np.einsum("nij,nji->n", rho, rho).real)

    tau_a = one_vs_rest("nabc,nxbc->nax")
    tau_b = one_vs_rest("nabc,naxc->nbx")
    tau_c = one_vs_rest("nabc,nabx->ncx")
    margins = np.stack(
        [tau_a - tau_ab - tau_ac, tau_b - tau_ab - tau_bc, tau_c - tau_ac - tau_bc]
    )
    return float(margins.min())


def _tangle_bound_margin(rng, count):
    """min of tr(rho rho~) - tau_2 over induced-measure two-qubit states."""
    v = _haar_batch(rng, count, 16).reshape(count, 4, 4)
    rho = np.einsum("nik,njk->nij", v, v.conj())
    tau2 = _wootters_batch(rho)
    four = rho.reshape(count, 2, 2, 2, 2)
    rho_a = np.einsum("nabcb->nac", four)
    rho_b = np.einsum("nabad->nbd", four)
    overlap = (
        1.0
        - np.einsum("nij,nji->n", rho_a, rho_a).real
        - np.einsum("nij,nji->n", rho_b, rho_b).real
        + np.einsum("nij,nji->n", rho, rho).real
    )
    return float((overlap - tau2).min())


def _inversion_identity_error(rng, count):
    """Worst closed-form vs explicit-matrix disagreement for tr(rho rho~)."""
    tens = _haar_batch(rng, count, 12).reshape(count, 2, 2, 3)
    rho = np.einsum("nabk,nxyk->nabxy", tens, tens.conj()).reshape(count, 4, 4)
    four = rho.reshape(count, 2, 2, 2, 2)
    rho_a = np.einsum("nabcb->nac", four)
    rho_b = np.einsum("nabad->nbd", four)
    closed = (
        1.0
        - np.einsum("nij,nji->n", rho_a, rho_a).real
        - np.einsum("nij,nji->n", rho_b, rho_b).real
        + np.einsum("nij,nji->n", rho, rho).real
    )
    eye2 = np.eye(2)
    a_big = np.einsum("nij,ab->niajb", rho_a, eye2).reshape(count, 4, 4)
    b_big = np.einsum("ij,nab->niajb", eye2, rho_b).reshape(count, 4, 4)
    tilde = np.eye(4) - a_big - b_big + rho
    explicit = np.einsum("nij,nji->n", rho, tilde).real
    worst = float(np.max(np.abs(closed - explicit)))
    # tie the batched arithmetic back to the public API on a few samples
    for i in range(10):
        dm = tt.DensityMatrix((2, 2), rho[i])
        worst = max(worst, abs(tt.inversion_overlap(dm) - closed[i]))
    return worst


def _random_local_unitary(rng, dims):
    factors = []
    for d in dims:
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        factors.append(np.linalg.qr(z)[0])
    u = factors[0]
    for f in factors[1:]:
        u = np.kron(u, f)
    return u


def _local_unitary_errors(rng, batch_count, component_count):
    dims = (2, 2, 3)
    states = _haar_batch(rng, batch_count, 12)
    rotated = np.stack([_random_local_unitary(rng, dims) @ s for s in states])
    residual_err = float(
        np.max(
            np.abs(
                tt.residual_tangle_batch(states, dims)
                - tt.residual_tangle_batch(rotated, dims)
            )
        )
    )
    component_err = 0.0
    shape = tt.SystemShape(dims)
    for s, r in zip(states[:component_count], rotated[:component_count]):
        a, b = tt.PureState(shape, s), tt.PureState(shape, r)
        for keep, kind in [((0, 1), "pair"), ((0, 2), "rank2"), ((1, 2), "rank2")]:
            if kind == "pair":
                va = tt.wootters_tangle(tt.partial_trace(a, keep))
                vb = tt.wootters_tangle(tt.partial_trace(b, keep))
            else:
                va = tt.rank2_itangle(tt.partial_trace(a, keep))
                vb = tt.rank2_itangle(tt.partial_trace(b, keep))
            component_err = max(component_err, abs(va - vb))
        for lone in (0, 1, 2):
            cut = tt.Cut((lone,), tuple(i for i in range(3) if i != lone))
            component_err = max(
                component_err, abs(tt.pure_itangle(a, cut) - tt.pure_itangle(b, cut))
            )
    return residual_err, component_err


def _roof_vs_wootters_error(rng, count):
    options = tt.RoofOptions(restarts=4, seed=7)
    worst = 0.0
    for _ in range(count):
        v1, v2 = _haar_batch(rng, 2, 4)
        w = rng.uniform(0.1, 0.9)
        rho = w * np.outer(v1, v1.conj()) + (1.0 - w) * np.outer(v2, v2.conj())
        dm = tt.DensityMatrix((2, 2), rho)
        worst = max(
            worst, abs(tt.convex_roof_itangle(dm, options) - tt.wootters_tangle(dm))
        )
    return worst


def _rank2_vs_roof_error_along_trajectory():
    config = preset_config("fig1")
    params = tt.ModelParams(g=1.0, n_max=15)
    state = tt.initial_state("ee", tt.fock_state(10, 15), params)
    times = np.linspace(0.0, config.t_max, config.steps)[::5]
    prop = tt.TcmPropagator(params)
    options = tt.RoofOptions(restarts=4, seed=11)
    worst = 0.0
    for _, amps in prop.evolve_series(state, times):
        rho_af = tt.partial_trace(tt.PureState(params.shape, amps), (0, 2))
        worst = max(
            worst,
            abs(tt.rank2_itangle(rho_af) - tt.convex_roof_itangle(rho_af, options)),
        )
    return worst


def _permutation_error(rng, count):
    worst = 0.0
    for _ in range(count):
        vec = _haar_batch(rng, 1, 12)[0]
        base = tt.i_residual_tangle(tt.PureState(tt.SystemShape((2, 2, 3)), vec))
        tens = vec.reshape(2, 2, 3)
        for perm in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
            dims = tuple(np.array((2, 2, 3))[list(perm)])
            other = tt.PureState(
                tt.SystemShape(dims), np.transpose(tens, perm).ravel()
            )
            worst = max(worst, abs(tt.i_residual_tangle(other) - base))
    return worst


def test_criterion_08_property_suite(announce):
    rng = np.random.default_rng(2024)
    ckw_margin = _ckw_min_residual(rng, 100_000)
    bound_margin = _tangle_bound_margin(rng, 100_000)
    identity_err = _inversion_identity_error(rng, 10_000)
    lu_residual_err, lu_component_err = _local_unitary_errors(rng, 1_000, 100)
    roof_err = _roof_vs_wootters_error(rng, 1_000)
    trajectory_err = _rank2_vs_roof_error_along_trajectory()
    perm_err = _permutation_error(rng, 50)

    # the residual combines eigenvalue-route pair tangles, each with
    # ~sqrt(eps) noise, so its invariance checks get a 1e-7 floor
    checks = {
        "ckw_margin": ckw_margin >= -1e-9,
        "tangle_bound_margin": bound_margin >= -1e-9,
        "inversion_identity": identity_err < 1e-12,
        "local_unitary_residual": lu_residual_err < 1e-7,
        "local_unitary_components": lu_component_err < 1e-7,
        "roof_vs_wootters": roof_err < 1e-6,
        "rank2_vs_roof": trajectory_err < 1e-6,
        "permutation": perm_err < 1e-7,
    }
    ok = all(checks.values())
    msg = announce(
        8,
        "property suite over random states",
        ok,
        f"ckw min margin = {ckw_margin:.2e}, bound min margin = {bound_margin:.2e}, "
        f"identity err = {identity_err:.2e}, LU err = {lu_residual_err:.2e}/"
        f"{lu_component_err:.2e}, roof err = {roof_err:.2e}, "
        f"rank2-vs-roof err = {trajectory_err:.2e}, perm err = {perm_err:.2e}; "
        f"failing: {[k for k, v in checks.items() if not v] or 'none'}",
    )
    assert ok, msg


def test_criterion_09_dynamics_oracles(fig1, fig2_ee, fig2_gg, fig3_sym, fig3_cat, singlet_run, announce):
    params = tt.ModelParams(g=1.0, n_max=6)
    initial = tt.initial_state("gg", tt.fock_state(1, 6), params)
    times = np.linspace(0.0, 6.0, 200)
    prop = tt.TcmPropagator(params)
    return_err = max(
        abs(
            abs(np.vdot(initial.amplitudes, amps)) ** 2
            - math.cos(math.sqrt(2.0) * t) ** 2
        )
        for t, amps in prop.evolve_series(initial, times)
    )

    singlet_err = max(
        float(np.max(np.abs(singlet_run.column(name) - singlet_run.column(name)[0])))
        for name in TANGLE_COLUMNS
    )

    runs = {
        "fig1": fig1[0],
        "fig2_ee": fig2_ee[0],
        "fig2_gg": fig2_gg[0],
        "fig3_sym": fig3_sym[0],
        "fig3_cat": fig3_cat[0],
        "singlet": singlet_run,
    }
    drift = max(
        max(r.max_norm_drift, r.max_excitation_drift) for r in runs.values()
    )

    ok = return_err < 1e-9 and singlet_err < 1e-10 and drift < 1e-10
    msg = announce(
        9,
        "return probability, frozen dark pair, conservation on every scenario",
        ok,
        f"|gg,1> return-prob err = {return_err:.2e}, dark-pair drift = "
        f"{singlet_err:.2e}, worst norm/excitation drift = {drift:.2e}",
    )
    assert ok, msg
