"""Why transfer works: the substitute's gradient signs line up with the victim's.

For each test image we take the sign of the input cost gradient under the
substitute and under the victim, count how often each pixel is +1 in either
and in both, and test independence with a chi-square statistic. Pairs of
fair-coin sign matrices serve as the baseline. Also writes the per-pixel
agreement map as CSV.

Needs a victim and substitute, e.g. from an ``attack`` bundle:

    blackbox-attack attack --config exp.ini --out run
    python3 demos/05_sign_correlation.py run/substitute.model run/oracle.model
"""

import sys

import numpy as np

from blackbox_attack import SeededRng, chi_square, frequencies, load_mnist, load_model, sign_sequence
from blackbox_attack.analysis import random_sign_sequence

substitute, victim = load_model(sys.argv[1]), load_model(sys.argv[2])
test = load_mnist("test")

s1 = sign_sequence(substitute, test.inputs, test.labels, (28, 28), "substitute")
s2 = sign_sequence(victim, test.inputs, test.labels, (28, 28), "victim")
res = chi_square(frequencies(s1, s2))
print(f"substitute vs victim: chi2*={res.stat:.0f} dof={res.dof} p={res.p_value:.3g}")

r1 = random_sign_sequence(len(test), (28, 28), SeededRng(0))
r2 = random_sign_sequence(len(test), (28, 28), SeededRng(1))
base = chi_square(frequencies(r1, r2))
print(f"random vs random:     chi2*={base.stat:.0f} dof={base.dof} p={base.p_value:.3g}")

agree = np.mean(s1.matrices == s2.matrices, axis=0)
np.savetxt("sign_agreement.csv", agree, delimiter=",", fmt="%.4f")
print(f"sign agreement: {agree.mean():.1%} overall, {agree[10:18, 10:18].mean():.1%} in the central 8x8 patch")
