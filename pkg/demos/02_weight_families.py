"""Shrinkage weights: how the test downweights high frequencies.

Three classical families over a support of N coefficients: the hard projection
cutoff, the smoothly decaying Tikhonov family, and the Pinsker family that
hits zero at the cutoff.  Their l1/l2 norms set the centering and scale of the
statistic; the degrees-of-freedom reading 2 ||nu||_1^2/||nu||_2^2 connects it
to a chi-squared calibration.
"""

from shifttest import (
    check_conditions,
    chi2_form,
    pinsker_weights,
    projection_weights,
    tikhonov_weights,
    weight_norms,
)

N = 16
families = {
    "projection": projection_weights(N),
    "tikhonov (kappa=1/2, mu=2)": tikhonov_weights(N, 0.5, 2.0),
    "pinsker (mu=2)": pinsker_weights(N, 2.0),
}

for name, w in families.items():
    l1, l2 = weight_norms(w)
    _, dof = chi2_form(1.0, w)
    report = check_conditions(w, c_lower=0.2, c_bar=0.5)
    print(f"{name}")
    print(f"  first weights  : {[round(v, 4) for v in w.nu[:5].tolist()]} ...")
    print(f"  l1 = {l1:.4f}, l2 = {l2:.4f}, chi2 dof = {dof:.2f}")
    print(f"  nu_1 = 1 exactly: {report.a_holds};  sum nu^2 >= 0.2 N: {report.b_holds};"
          f"  first index below 0.5: {report.c_index}")
    print()
