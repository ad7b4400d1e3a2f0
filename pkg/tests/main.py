import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from src.bvp_core import PiecewisePolynomial, build_dirac_bvp
from src.riesz import biorthogonal_normalize, eigenpairs, riesz_diagnostics
from src.spectra import classify_bvp, modified_delta0, pair_spectra, spectrum_from_polynomial, zeros_in_window
from src.timoshenko import SEPARATED, TimoshenkoModel, tim_asymptotic_branches, tim_spectrum_check

# 2×2 问题：β = (−1, 1)，拟周期边界条件 c = (2, 3)
q = PiecewisePolynomial([0.0, 0.5, 1.0], [[0.3], [0.3, -0.2]])
bvp = build_dirac_bvp([-1.0, 1.0], [[0, q], [0.2, 0]], np.diag([2.0, 3.0]), -np.eye(2), 1.0)

print("判定:", classify_bvp(bvp).to_dict())

window = (-1.0, 40.0)
spectrum = zeros_in_window(bvp, window)
print(f"窗口 {window} 内 {spectrum.count} 个特征值（辐角原理 {spectrum.winding_total}）")
print(spectrum.to_frame().head(10))

reference = spectrum_from_polynomial(modified_delta0(bvp), window, spectrum.h)
pairing = pair_spectra(spectrum, reference)
print("与 Δ₀ 零点的偏差:", np.round(pairing.deviations, 6))

pairs = eigenpairs(bvp, spectrum.eigenvalues)
system = biorthogonal_normalize(pairs)
print(riesz_diagnostics(system, excluded=pairs.excluded).windows)

# Timoshenko 梁：ρ = I_ρ = EI = 1，K = 4
beam = TimoshenkoModel(rho=1.0, I_rho=1.0, K=4.0, EI=1.0, ell=1.0, alpha1=3.0, alpha2=1.0,
                       p1=0.1, speeds=SEPARATED, rational=(2, 1))
branches = tim_asymptotic_branches(beam)
print(branches.regime, branches.verdict.status)
for branch in branches.branches:
    print(branch.to_dict())

check = tim_spectrum_check(beam, (-20.0, 20.0))
print(check.pairing.to_frame())
