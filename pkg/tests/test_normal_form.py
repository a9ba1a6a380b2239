import numpy as np
import pytest

from diskhopf.normal_form import (DEGENERATE_TOL, GenericCubic, NormalFormResult, assemble, case_label,
                                  center_basis, char_matrix, classify, pairing_matrix, resolvent,
                                  s_operators, standard_hopf_n0, taylor_A)

# values computed by the independent full-grid route (GenericCubic) at K = 20
PP_B11 = 0.029243436753627654 + 0.17499439842892472j
PP_B2001 = -5.225935823783608e-06 - 1.2865343559178287e-06j
PP_B1110 = -3.643967183542958e-05 - 2.0004730574442153e-05j


def test_basis_null_vectors(predprey):
    _, td, hp = predprey
    b = center_basis(td, hp)
    M = char_matrix(td, hp.mode.lam, 1j * hp.omega, hp.tau_hat, b.mean_coupled)
    zeta = b.psi0 * b.q
    assert np.max(np.abs(M @ b.xi)) < 1e-12
    assert np.max(np.abs(zeta @ M)) < 1e-12
    assert b.xi[0] == 1 and zeta[0] == pytest.approx(1.0)


@pytest.mark.parametrize("ex", ["predprey", "brusselator"])
def test_pairing_is_identity(ex, predprey, brusselator):
    _, td, hp = predprey if ex == "predprey" else brusselator
    P = pairing_matrix(td, center_basis(td, hp))
    assert np.max(np.abs(P - np.eye(len(P)))) < 1e-10


def test_predprey_coefficients_frozen(predprey_nf):
    nf = predprey_nf
    assert nf.B11 == pytest.approx(PP_B11, abs=1e-9)
    assert nf.B2001 == pytest.approx(PP_B2001, rel=1e-6)
    assert nf.B1110 == pytest.approx(PP_B1110, rel=1e-6)
    assert nf.case_label == 2
    assert not nf.tail_warning


def test_independent_route_agrees(predprey, predprey_nf):
    _, td, hp = predprey
    g = GenericCubic(td, predprey_nf.basis, 20)
    assert g.coefficient((2, 0, 0, 1)) == pytest.approx(predprey_nf.B2001, rel=1e-9)
    assert g.coefficient((1, 1, 1, 0)) == pytest.approx(predprey_nf.B1110, rel=1e-9)


def test_forbidden_cubic_terms_vanish(predprey_nf):
    scale = abs(predprey_nf.B2001)
    for z in (predprey_nf.B2100, predprey_nf.B0120, predprey_nf.B0021, predprey_nf.B1011):
        assert abs(z) < 1e-10 * max(scale, 1.0)


def test_conjugation_pattern(predprey, predprey_nf):
    _, td, hp = predprey
    nf = predprey_nf
    g = GenericCubic(td, nf.basis, 20)
    tol = 1e-10
    assert abs(g.coefficient((0, 2, 1, 0), 2) - np.conj(nf.B2001)) < tol
    assert abs(g.coefficient((1, 1, 0, 1), 2) - np.conj(nf.B1110)) < tol
    assert abs(g.coefficient((0, 1, 2, 0), 3) - nf.B2001) < tol
    assert abs(g.coefficient((1, 0, 1, 1), 3) - nf.B1110) < tol
    assert abs(g.coefficient((1, 0, 0, 2), 4) - np.conj(nf.B2001)) < tol
    A = taylor_A(td, nf.basis)
    for p, v in A.items():
        q = (p[1], p[0], p[3], p[2])
        assert np.max(np.abs(A[q] - np.conj(v))) < tol


def test_s_operator_identities(predprey):
    _, td, hp = predprey
    S = s_operators(td, center_basis(td, hp))
    for a, b in ((1, 3), (2, 4)):
        assert np.array_equal(S[a][0], S[b][0]) and np.array_equal(S[a][1], S[b][1])
    assert np.allclose(S[2][0], np.conj(S[1][0]), atol=1e-14)


def test_resolvent_singular_at_critical_frequency(predprey):
    _, td, hp = predprey
    b = center_basis(td, hp)
    Rm = resolvent(td, b, hp.mode.lam, b.phase, b.mean_coupled)
    assert abs(np.linalg.det(Rm)) < 1e-10


def test_truncation_converges(predprey, predprey_nf):
    _, td, hp = predprey
    nf10 = assemble(td, predprey_nf.basis, K=10, check_zeros=False)
    assert abs(nf10.B2001 - predprey_nf.B2001) < 1e-3 * abs(predprey_nf.B2001)


def test_case_table():
    assert case_label(-1.0, -1.5) == 2  # a2<0, a2+a3<0, a2-a3>0
    assert case_label(-0.1075, -0.1813) == 2
    assert case_label(-1.0, 0.5) == 1
    assert case_label(-1.0, 2.0) == 3
    assert case_label(1.0, 0.5) == 4
    assert case_label(1.0, 2.0) == 5
    assert case_label(1.0, -2.0) == 6
    assert case_label(1.0, -0.5) == 4


def _nf(a1, a2, a3):
    return NormalFormResult(complex(a1, 0.3), complex(a2, 0.1), complex(a3, -0.2))


def test_classify_case_2():
    preds = {p.kind: p for p in classify(_nf(0.03, -0.1075, -0.1813), 1.2)}
    assert not preds["trivial"].stable
    assert preds["standing"].exists and not preds["standing"].stable
    assert preds["rotating_plus"].exists and preds["rotating_plus"].stable
    assert preds["rotating_minus"].exists and preds["rotating_minus"].stable
    assert preds["rotating_plus"].amplitude == pytest.approx(np.sqrt(0.03 * 1.2 / 0.1075))


def test_classify_subcritical_and_degenerate():
    preds = {p.kind: p for p in classify(_nf(0.03, 0.1, 0.05), 1.0)}
    assert not preds["rotating_plus"].exists and not preds["standing"].exists
    preds = {p.kind: p for p in classify(_nf(0.03, 0.1 * DEGENERATE_TOL, 0.05), 1.0)}
    assert "rotating_plus" not in preds


def test_standard_hopf_brusselator(brusselator, predprey):
    _, td, hp = brusselator
    r = standard_hopf_n0(td, hp)
    assert r.B11 == pytest.approx(0.07915244814907263 + 0.4141657437878643j, abs=1e-9)
    assert r.B2100 == pytest.approx(-0.002783120576942635 - 0.0008691258235435397j, rel=1e-6)
    assert r.direction == "supercritical" and r.stable
    with pytest.raises(ValueError):
        standard_hopf_n0(predprey[1], predprey[2])


def test_standard_hopf_constant_mode_is_k_independent(brusselator):
    # for the constant critical mode only the k = 0 product integral is nonzero
    _, td, hp = brusselator
    r5 = standard_hopf_n0(td, hp, K=5)
    r20 = standard_hopf_n0(td, hp, K=20)
    assert r5.B2100 == pytest.approx(r20.B2100, rel=1e-12)
